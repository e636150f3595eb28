#pragma once

// Exact GP regression with a constant mean and ARD-RBF kernel, plus the
// derivative posterior and the one-step look-ahead derivative variances.
//
// The model works on standardized outputs internally; every posterior
// returned by the public API is on the raw Y scale.

#include "dgsmlab/common.hpp"
#include "dgsmlab/kernel.hpp"

#include <optional>

namespace dgsmlab {

struct Standardization {
  double mean = 0.0;
  double stdev = 1.0;
  bool degenerate = false;  // constant outputs; stdev forced to 1

  static Standardization from(const Vector& y);
};

struct Dataset {
  Matrix X;  // t x d, unit-cube coordinates
  Vector Y;  // raw observations

  Dataset() = default;
  Dataset(Matrix x, Vector y);
  static Dataset empty(Eigen::Index dim) { return Dataset(Matrix(0, dim), Vector(0)); }

  Eigen::Index size() const { return X.rows(); }
  Eigen::Index dim() const { return X.cols(); }
  void append(const Vector& x, double y);
};

struct FPosterior {
  double mu = 0.0;
  double var = 0.0;
};

struct DerivPosterior {
  Vector mu_d;   // posterior mean of the gradient
  Vector var_d;  // diagonal of the gradient posterior covariance
  Vector cross;  // Cov[f(x), df(x)/dx_i | D]
};

struct LookAhead {
  Vector var_l;      // derivative variance after a hypothetical observation
  Vector mu_plugin;  // look-ahead mean with y fixed to the posterior mean
};

/// Per-point kernel terms on the standardized scale. Reused by the global
/// acquisitions, which pair a candidate with many reference nodes.
struct PointTerms {
  Vector k;  // k(X, x)
  Vector v;  // L^{-1} k
  Matrix G;  // G(j, i) = d k(x, X_j) / dx_i
  Matrix W;  // L^{-1} G
  double mu = 0.0;
  double var = 0.0;
  Vector mu_d;
  Vector var_d;
  Vector cross;
};

class GpModel {
 public:
  /// Conditions on data with fixed hyperparameters, given on the
  /// standardized scale. Throws NumericalFailure if the Cholesky
  /// factorization fails after jitter escalation.
  GpModel(Hyperparams hp, Dataset data, Standardization standardization);

  /// No-data model: posteriors equal the prior.
  static GpModel prior(Hyperparams hp);

  /// Same hyperparameters and standardization, one more observation.
  GpModel with_observation(const Vector& x, double y) const;

  const Hyperparams& hyperparams() const { return hp_; }
  Hyperparams raw_hyperparams() const;
  const Dataset& data() const { return data_; }
  const Standardization& standardization() const { return stdz_; }
  const Matrix& chol() const { return chol_; }
  const Vector& alpha() const { return alpha_; }
  double jitter() const { return jitter_; }
  Eigen::Index dim() const { return hp_.dim(); }
  Eigen::Index size() const { return data_.size(); }

  /// Observation noise variance on the raw scale.
  double noise_var() const { return hp_.noise_var * scale2(); }

  FPosterior posterior_f(const Vector& x) const;
  DerivPosterior posterior_deriv(const Vector& x) const;
  /// Both posteriors from a single pass over the data.
  std::pair<FPosterior, DerivPosterior> posterior(const Vector& x) const;
  /// Posterior mean gradient only; O(t d).
  Vector mean_gradient(const Vector& x) const;

  LookAhead lookahead_local(const Vector& x) const;
  LookAhead lookahead_global(const Vector& x_star, const Vector& x_plus) const;

  /// Standardized-scale terms; see PointTerms.
  PointTerms terms(const Vector& x, bool with_derivs = true) const;
  /// Posterior Cov[f(x_star), df(x_plus)/dx_i] on the standardized scale.
  Vector cross_cov(const Vector& x_star, const PointTerms& star, const Vector& x_plus,
                   const PointTerms& plus) const;

  double scale() const { return stdz_.stdev; }
  double scale2() const { return stdz_.stdev * stdz_.stdev; }

 private:
  void check_point(const Vector& x) const;

  Hyperparams hp_;
  Dataset data_;
  Standardization stdz_;
  Matrix chol_;
  Vector alpha_;
  double jitter_ = 0.0;
};

struct FitOptions {
  int restarts = 8;
  int max_iters = 200;
  std::optional<Hyperparams> warm_start;  // standardized scale
  // Search boxes (natural units) for the optimizer.
  double lengthscale_min = 0.01, lengthscale_max = 50.0;
  double outputscale_min = 0.01, outputscale_max = 1e4;
  double noise_min = 1e-6, noise_max = 1.0;
  double mean_abs_max = 5.0;
  // Initialization boxes for the multi-start design.
  double init_lengthscale_min = 0.05, init_lengthscale_max = 3.0;
  double init_outputscale_min = 0.2, init_outputscale_max = 5.0;
  double init_noise_min = 1e-6, init_noise_max = 0.1;
};

/// Log marginal likelihood of standardized outputs; grad (if non-null) is
/// with respect to (log lengthscales, log outputscale, log noise, mean).
double log_marginal_likelihood(const Hyperparams& hp, const Matrix& X, const Vector& y,
                               Vector* grad = nullptr);

/// Maximum-likelihood fit by multi-start projected L-BFGS. Deterministic in
/// (data, seed). Constant outputs give a flagged, noise-dominated model.
GpModel fit(const Dataset& data, Seed seed, const FitOptions& options = {});

/// Cholesky of K + jitter * I with jitter escalating 0, 1e-10, ..., 1e-4.
/// Returns the jitter used; throws NumericalFailure naming the last level.
double cholesky_with_jitter(const Matrix& K, Matrix& L);

}  // namespace dgsmlab
