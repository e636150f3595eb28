#include "dgsmlab/optim.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace dgsmlab {

namespace {

Vector clamp(const Vector& x, const Vector& lo, const Vector& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

// Components that sit on a face with the gradient pointing outward are frozen.
Eigen::Array<bool, Eigen::Dynamic, 1> free_mask(const Vector& x, const Vector& g, const Vector& lo,
                                                const Vector& hi) {
  Eigen::Array<bool, Eigen::Dynamic, 1> mask(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const bool at_lo = x[i] <= lo[i] && g[i] < 0.0;
    const bool at_hi = x[i] >= hi[i] && g[i] > 0.0;
    mask[i] = !(at_lo || at_hi);
  }
  return mask;
}

struct Pair {
  Vector s;
  Vector y;
  double rho;
};

}  // namespace

BoxResult maximize_box(const ValueGrad& f, const Vector& x0, const Vector& lo, const Vector& hi,
                       const BoxOptions& options) {
  const Eigen::Index n = x0.size();
  BoxResult result;
  result.x = clamp(x0, lo, hi);
  Vector g(n);
  result.value = f(result.x, &g);
  if (!std::isfinite(result.value) || !g.allFinite()) return result;

  std::deque<Pair> history;
  for (int iter = 0; iter < options.max_iters; ++iter) {
    result.iterations = iter + 1;
    const auto mask = free_mask(result.x, g, lo, hi);
    Vector pg = mask.select(g, Vector::Zero(n));
    if (pg.lpNorm<Eigen::Infinity>() < options.grad_tol) break;

    // Two-loop recursion on the ascent problem (curvature pairs use -dg).
    Vector d = pg;
    std::vector<double> alphas(history.size());
    for (std::size_t k = history.size(); k-- > 0;) {
      alphas[k] = history[k].rho * history[k].s.dot(d);
      d -= alphas[k] * history[k].y;
    }
    if (!history.empty()) {
      const auto& last = history.back();
      d *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (std::size_t k = 0; k < history.size(); ++k) {
      const double beta = history[k].rho * history[k].y.dot(d);
      d += (alphas[k] - beta) * history[k].s;
    }
    d = mask.select(d, Vector::Zero(n));
    if (!(d.dot(pg) > 0.0)) {
      history.clear();
      d = pg;
    }

    double step = 1.0;
    if (history.empty()) {
      const double scale = d.lpNorm<Eigen::Infinity>();
      const double span = (hi - lo).lpNorm<Eigen::Infinity>();
      step = std::min(1.0, 0.1 * span / scale);
    }

    Vector x_new(n);
    Vector g_new(n);
    double f_new = -std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = clamp(result.x + step * d, lo, hi);
      f_new = f(x_new, &g_new);
      const double predicted = g.dot(x_new - result.x);
      if (std::isfinite(f_new) && g_new.allFinite() && f_new >= result.value + 1e-4 * predicted &&
          f_new >= result.value) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (history.empty()) break;
      history.clear();
      continue;
    }

    Vector s = x_new - result.x;
    Vector y = g - g_new;
    const double sy = s.dot(y);
    const double change = f_new - result.value;
    result.x = x_new;
    result.value = f_new;
    g = g_new;
    if (sy > 1e-12 * s.norm() * y.norm()) {
      history.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (static_cast<int>(history.size()) > options.memory) history.pop_front();
    }
    if (change <= options.value_tol * (1.0 + std::abs(result.value))) break;
  }
  return result;
}

Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                        const Vector& lo, const Vector& hi, double step) {
  Vector grad(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double up = std::min(x[i] + step, hi[i]);
    const double down = std::max(x[i] - step, lo[i]);
    probe[i] = up;
    const double f_up = f(probe);
    probe[i] = down;
    const double f_down = f(probe);
    probe[i] = x[i];
    grad[i] = (up > down) ? (f_up - f_down) / (up - down) : 0.0;
  }
  return grad;
}

}  // namespace dgsmlab
