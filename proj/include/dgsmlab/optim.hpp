#pragma once

// Box-constrained maximization with a projected L-BFGS direction and an
// Armijo backtracking line search. Used for hyperparameter fitting (in
// log space) and for refining acquisition maximizers in the unit cube.

#include "dgsmlab/common.hpp"

#include <functional>

namespace dgsmlab {

/// Returns f(x); writes the gradient into *grad when grad is non-null.
using ValueGrad = std::function<double(const Vector& x, Vector* grad)>;

struct BoxOptions {
  int max_iters = 100;
  int memory = 8;
  double grad_tol = 1e-8;   // on the projected gradient, infinity norm
  double value_tol = 1e-12; // relative change in f
};

struct BoxResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
};

BoxResult maximize_box(const ValueGrad& f, const Vector& x0, const Vector& lo, const Vector& hi,
                       const BoxOptions& options = {});

/// Central-difference gradient that stays inside [lo, hi] (one-sided at the faces).
Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                        const Vector& lo, const Vector& hi, double step = 1e-6);

}  // namespace dgsmlab
