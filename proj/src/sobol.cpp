#include "dgsmlab/sobol.hpp"

#include <bit>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>

namespace dgsmlab {

namespace {

DirectionTable::Column first_column() {
  DirectionTable::Column v{};
  for (int k = 0; k < DirectionTable::kBits; ++k) v[k] = 1u << (DirectionTable::kBits - 1 - k);
  return v;
}

DirectionTable::Column build_column(unsigned s, std::uint64_t a, const std::vector<std::uint32_t>& m) {
  constexpr int bits = DirectionTable::kBits;
  DirectionTable::Column v{};
  for (unsigned k = 0; k < s && k < static_cast<unsigned>(bits); ++k) v[k] = m[k] << (bits - 1 - k);
  for (int k = static_cast<int>(s); k < bits; ++k) {
    std::uint32_t value = v[k - s] ^ (v[k - s] >> s);
    for (unsigned l = 1; l < s; ++l) {
      if ((a >> (s - 1 - l)) & 1u) value ^= v[k - l];
    }
    v[k] = value;
  }
  return v;
}

}  // namespace

DirectionTable DirectionTable::load(const std::string& path, std::size_t max_dim) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open direction-number file: " + path);
  DirectionTable table;
  table.columns_.push_back(first_column());
  std::string line;
  std::getline(in, line);  // header
  while ((max_dim == 0 || table.columns_.size() < max_dim) && std::getline(in, line)) {
    std::istringstream row(line);
    std::size_t d = 0;
    unsigned s = 0;
    std::uint64_t a = 0;
    if (!(row >> d >> s >> a)) continue;
    std::vector<std::uint32_t> m(s);
    for (auto& mi : m) {
      if (!(row >> mi)) throw InvalidArgument("malformed direction-number row for dimension " + std::to_string(d));
    }
    if (d != table.columns_.size() + 1) {
      throw InvalidArgument("direction-number rows out of order at dimension " + std::to_string(d));
    }
    table.columns_.push_back(build_column(s, a, m));
  }
  return table;
}

const DirectionTable& DirectionTable::joe_kuo() {
  static std::once_flag once;
  static DirectionTable table;
  std::call_once(once, [] { table = load(data_dir() + "/new-joe-kuo-6.21201"); });
  return table;
}

SobolStream::SobolStream(std::size_t dim, Seed scramble_seed, bool scrambled,
                         const DirectionTable& table)
    : dim_(dim), seed_(scramble_seed), scrambled_(scrambled), state_(dim, 0u) {
  if (dim == 0) throw InvalidArgument("sobol: dimension must be positive");
  if (dim > table.max_dim()) {
    throw InvalidArgument("sobol: dimension " + std::to_string(dim) +
                          " exceeds direction-number table (" + std::to_string(table.max_dim()) + ")");
  }
  columns_.reserve(dim);
  for (std::size_t j = 0; j < dim; ++j) columns_.push_back(table.column(j));
}

double SobolStream::scramble(std::uint32_t value, std::size_t dim_index) const {
  // Nested uniform scrambling: bit k is flipped by a hash of the k leading
  // bits of the (unscrambled) value, so every subtree gets its own permutation.
  const std::uint64_t dim_key = mix_seed(seed_ ^ mix_seed(0x5851f42d4c957f2dULL * (dim_index + 1)));
  std::uint32_t out = 0;
  for (int k = 0; k < DirectionTable::kBits; ++k) {
    const std::uint64_t prefix = k == 0 ? 0 : (static_cast<std::uint64_t>(value) >> (32 - k));
    const std::uint64_t node = (prefix << 6) | static_cast<std::uint64_t>(k);
    const std::uint32_t flip = static_cast<std::uint32_t>(mix_seed(dim_key ^ mix_seed(node)) & 1u);
    const std::uint32_t bit = ((value >> (31 - k)) & 1u) ^ flip;
    out |= bit << (31 - k);
  }
  // Trailing bits below 2^-32 are uniform within the final cell.
  const std::uint64_t tail = mix_seed(dim_key ^ mix_seed((static_cast<std::uint64_t>(value) << 6) | 63u)) >> 43;
  return (static_cast<double>(out) + static_cast<double>(tail) * 0x1.0p-21) * 0x1.0p-32;
}

Matrix SobolStream::next(std::size_t n) {
  if (n == 0) throw InvalidArgument("sobol: requested zero points");
  if (index_ + n > (std::uint64_t{1} << 32)) throw InvalidArgument("sobol: sequence exhausted");
  Matrix points(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < n; ++i, ++index_) {
    if (index_ > 0) {
      // Gray-code update: flip the direction number of the lowest zero bit of index-1.
      const int c = std::countr_one(static_cast<std::uint32_t>(index_ - 1));
      for (std::size_t j = 0; j < dim_; ++j) state_[j] ^= columns_[j][c];
    }
    for (std::size_t j = 0; j < dim_; ++j) {
      points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          scrambled_ ? scramble(state_[j], j) : static_cast<double>(state_[j]) * 0x1.0p-32;
    }
  }
  return points;
}

double integrate_mean(std::span<const double> fvals) {
  if (fvals.empty()) throw InvalidArgument("integrate_mean: no integrand values");
  return std::accumulate(fvals.begin(), fvals.end(), 0.0) / static_cast<double>(fvals.size());
}

}  // namespace dgsmlab
