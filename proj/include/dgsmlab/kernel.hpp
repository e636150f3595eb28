#pragma once

// ARD squared-exponential kernel and the spatial derivatives used by the
// derivative GP. Points live in the unit cube; all functions are pure.

#include "dgsmlab/common.hpp"

namespace dgsmlab {

struct Hyperparams {
  Vector lengthscales;     // one per input dimension
  double outputscale = 1.0;
  double noise_var = 0.0;  // observation noise variance
  double mean_const = 0.0;

  static Hyperparams isotropic(Eigen::Index dim, double lengthscale,
                               double outputscale = 1.0, double noise_var = 0.0,
                               double mean_const = 0.0);

  Eigen::Index dim() const { return lengthscales.size(); }

  /// Throws InvalidArgument unless lengthscales > 0, outputscale > 0 and
  /// noise_var >= 0.
  void validate() const;
};

double kernel(const Vector& x, const Vector& z, const Hyperparams& hp);

/// d/dx k(x, z).
Vector kernel_grad_x(const Vector& x, const Vector& z, const Hyperparams& hp);

/// Diagonal of d^2 k(x, z) / dx dz at z = x: the prior derivative variance.
Vector kernel_hess_diag(const Vector& x, const Hyperparams& hp);

/// Cov[f(x), df(z)/dz_i] under the prior, i.e. d/dz k(x, z).
Vector kernel_cross_f_deriv(const Vector& x, const Vector& z, const Hyperparams& hp);

}  // namespace dgsmlab
