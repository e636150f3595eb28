#pragma once

// Sobol sequence with Joe-Kuo D(6) direction numbers and nested uniform
// (Owen) scrambling driven by a counter-based hash.

#include "dgsmlab/common.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dgsmlab {

class DirectionTable {
 public:
  static constexpr int kBits = 32;
  using Column = std::array<std::uint32_t, kBits>;

  /// Parses a whitespace-separated table in the published Joe-Kuo layout
  /// (header line, then "d s a m_1 ... m_s" per line). Dimension 1 is
  /// implicit. Reads at most max_dim dimensions (0 = all).
  static DirectionTable load(const std::string& path, std::size_t max_dim = 0);

  /// The shipped new-joe-kuo-6.21201 table, loaded once.
  static const DirectionTable& joe_kuo();

  std::size_t max_dim() const { return columns_.size(); }
  const Column& column(std::size_t dim_index) const { return columns_.at(dim_index); }

 private:
  std::vector<Column> columns_;
};

class SobolStream {
 public:
  SobolStream(std::size_t dim, Seed scramble_seed, bool scrambled = true,
              const DirectionTable& table = DirectionTable::joe_kuo());

  /// Next n points as an n x dim matrix; entries lie in [0, 1).
  Matrix next(std::size_t n);

  std::size_t dim() const { return dim_; }
  std::uint64_t index() const { return index_; }
  bool scrambled() const { return scrambled_; }

 private:
  double scramble(std::uint32_t value, std::size_t dim_index) const;

  std::size_t dim_;
  Seed seed_;
  bool scrambled_;
  std::uint64_t index_ = 0;
  std::vector<std::uint32_t> state_;
  std::vector<DirectionTable::Column> columns_;
};

/// Plain mean of integrand values at unit-cube QMC nodes.
double integrate_mean(std::span<const double> fvals);

}  // namespace dgsmlab
