#include "dgsmlab/kernel.hpp"

#include <cmath>
#include <string>

namespace dgsmlab {

namespace {

void check_dims(const Vector& x, const Vector& z, const Hyperparams& hp) {
  if (x.size() != hp.dim() || z.size() != hp.dim()) {
    throw InvalidArgument("kernel: point dimension " + std::to_string(x.size()) + "/" +
                          std::to_string(z.size()) + " does not match hyperparameter dimension " +
                          std::to_string(hp.dim()));
  }
}

}  // namespace

Hyperparams Hyperparams::isotropic(Eigen::Index dim, double lengthscale, double outputscale,
                                   double noise_var, double mean_const) {
  Hyperparams hp;
  hp.lengthscales = Vector::Constant(dim, lengthscale);
  hp.outputscale = outputscale;
  hp.noise_var = noise_var;
  hp.mean_const = mean_const;
  return hp;
}

void Hyperparams::validate() const {
  if (lengthscales.size() == 0) throw InvalidArgument("hyperparams: empty lengthscale vector");
  for (Eigen::Index i = 0; i < lengthscales.size(); ++i) {
    if (!(lengthscales[i] > 0.0) || !std::isfinite(lengthscales[i])) {
      throw InvalidArgument("hyperparams: lengthscale " + std::to_string(i) + " must be positive");
    }
  }
  if (!(outputscale > 0.0) || !std::isfinite(outputscale)) {
    throw InvalidArgument("hyperparams: outputscale must be positive");
  }
  if (!(noise_var >= 0.0) || !std::isfinite(noise_var)) {
    throw InvalidArgument("hyperparams: noise variance must be nonnegative");
  }
  if (!std::isfinite(mean_const)) throw InvalidArgument("hyperparams: mean must be finite");
}

double kernel(const Vector& x, const Vector& z, const Hyperparams& hp) {
  check_dims(x, z, hp);
  const double r2 = ((x - z).array() / hp.lengthscales.array()).square().sum();
  return hp.outputscale * std::exp(-0.5 * r2);
}

Vector kernel_grad_x(const Vector& x, const Vector& z, const Hyperparams& hp) {
  const double k = kernel(x, z, hp);
  return -((x - z).array() / hp.lengthscales.array().square()).matrix() * k;
}

Vector kernel_hess_diag(const Vector& x, const Hyperparams& hp) {
  if (x.size() != hp.dim()) throw InvalidArgument("kernel_hess_diag: dimension mismatch");
  return (hp.outputscale / hp.lengthscales.array().square()).matrix();
}

Vector kernel_cross_f_deriv(const Vector& x, const Vector& z, const Hyperparams& hp) {
  const double k = kernel(x, z, hp);
  return ((x - z).array() / hp.lengthscales.array().square()).matrix() * k;
}

}  // namespace dgsmlab
