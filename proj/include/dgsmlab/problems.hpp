#pragma once

// Synthetic sensitivity-analysis benchmarks. Constants come from the
// versioned catalog data/problems.json.

#include "dgsmlab/common.hpp"

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace dgsmlab {

struct BenchProblem {
  using Function = std::function<double(const Vector&)>;
  using Gradient = std::function<Vector(const Vector&)>;

  std::string name;
  Eigen::Index dim = 0;
  Vector lower;  // box, original units
  Vector upper;
  Function eval;                  // original units
  std::optional<Gradient> grad;   // original units
  double noise_sd = 0.0;

  Vector width() const { return upper - lower; }
  Vector to_box(const Vector& u) const;

  double value_normalized(const Vector& u) const;
  /// Gradient with respect to unit-cube coordinates: analytic gradient times
  /// box width, or a central difference (h = 1e-6) when no gradient exists.
  Vector gradient_normalized(const Vector& u) const;

  /// Throws InvalidArgument unless box widths are positive and callables are set.
  void validate() const;
};

std::vector<std::string> list_problems(const std::string& catalog_path = {});

/// Throws CatalogError listing the valid names when `name` is unknown.
BenchProblem make_problem(const std::string& name, const std::string& catalog_path = {});

/// f(x) = sum_i c_i x_i on the given box.
BenchProblem make_linear_problem(const Vector& coeffs, const Vector& lower, const Vector& upper);

/// Maps x in [0,1]^d to the box, evaluates f and adds N(0, noise_sd^2).
double observe(const BenchProblem& problem, const Vector& x_normalized, std::mt19937_64& rng);

/// Budget-counting wrapper around observe().
class Observer {
 public:
  Observer(const BenchProblem& problem, Seed noise_seed) : problem_(&problem), rng_(noise_seed) {}
  double operator()(const Vector& x_normalized);
  std::size_t calls() const { return calls_; }

 private:
  const BenchProblem* problem_;
  std::mt19937_64 rng_;
  std::size_t calls_ = 0;
};

}  // namespace dgsmlab
