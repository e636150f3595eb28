#include "dgsmlab/experiment.hpp"
#include "dgsmlab/optim.hpp"
#include "dgsmlab/sobol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dgsmlab {

namespace {

double safe_value(const std::function<double(const Vector&)>& acq, const Vector& x) {
  try {
    const double v = acq(x);
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
  } catch (const NumericalFailure&) {
    return -std::numeric_limits<double>::infinity();
  }
}

}  // namespace

Vector optimize_acquisition(const std::function<double(const Vector&)>& acq, Eigen::Index dim, Seed seed,
                            const OptimizerOptions& options) {
  if (dim <= 0) throw InvalidArgument("optimize_acquisition: dimension must be positive");
  if (options.candidates == 0) throw InvalidArgument("optimize_acquisition: need at least one candidate");
  SobolStream stream(static_cast<std::size_t>(dim), seed);
  const Matrix cand = stream.next(options.candidates);

  std::vector<double> values(options.candidates);
  std::vector<std::size_t> finite;
  for (std::size_t i = 0; i < options.candidates; ++i) {
    values[i] = safe_value(acq, cand.row(static_cast<Eigen::Index>(i)).transpose());
    if (std::isfinite(values[i])) finite.push_back(i);
  }
  if (finite.empty()) throw OptimizerFailure("acquisition is non-finite at every candidate");
  std::stable_sort(finite.begin(), finite.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });

  Vector best = cand.row(static_cast<Eigen::Index>(finite.front())).transpose();
  double best_value = values[finite.front()];

  const Vector lo = Vector::Zero(dim);
  const Vector hi = Vector::Ones(dim);
  auto plain = [&](const Vector& x) { return safe_value(acq, x); };
  const ValueGrad objective = [&](const Vector& x, Vector* grad) {
    const double v = plain(x);
    if (grad) {
      *grad = numeric_gradient(plain, x, lo, hi, options.gradient_step);
      for (Eigen::Index i = 0; i < grad->size(); ++i) {
        if (!std::isfinite((*grad)[i])) (*grad)[i] = 0.0;
      }
    }
    return v;
  };
  BoxOptions box;
  box.max_iters = options.max_iters;
  const std::size_t n_refine = std::min(options.refine, finite.size());
  for (std::size_t k = 0; k < n_refine; ++k) {
    const Vector start = cand.row(static_cast<Eigen::Index>(finite[k])).transpose();
    const BoxResult r = maximize_box(objective, start, lo, hi, box);
    if (std::isfinite(r.value) && r.value > best_value) {
      best_value = r.value;
      best = r.x;
    }
  }
  return best.cwiseMax(0.0).cwiseMin(1.0);
}

Vector optimize_acquisition(const Acquisition& acq, Seed seed, const OptimizerOptions& options) {
  return optimize_acquisition([&acq](const Vector& x) { return acq(x); }, acq.model().dim(), seed, options);
}

}  // namespace dgsmlab
