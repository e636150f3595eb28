#include "dgsmlab/gp.hpp"

#include "dgsmlab/optim.hpp"
#include "dgsmlab/sobol.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

namespace dgsmlab {

Standardization Standardization::from(const Vector& y) {
  Standardization s;
  if (y.size() == 0) return s;
  s.mean = y.mean();
  if (y.size() < 2) {
    s.degenerate = true;
    return s;
  }
  const double var = (y.array() - s.mean).square().sum() / static_cast<double>(y.size() - 1);
  const double sd = std::sqrt(var);
  if (!(sd > 1e-12 * std::max(1.0, std::abs(s.mean)))) {
    s.degenerate = true;
    s.stdev = 1.0;
  } else {
    s.stdev = sd;
  }
  return s;
}

Dataset::Dataset(Matrix x, Vector y) : X(std::move(x)), Y(std::move(y)) {
  if (X.rows() != Y.size()) throw InvalidArgument("dataset: X rows and Y length differ");
  if (!X.allFinite()) throw InvalidArgument("dataset: non-finite input");
}

void Dataset::append(const Vector& x, double y) {
  if (x.size() != X.cols()) throw InvalidArgument("dataset: appended point has wrong dimension");
  if (!x.allFinite()) throw InvalidArgument("dataset: non-finite input");
  X.conservativeResize(X.rows() + 1, Eigen::NoChange);
  X.row(X.rows() - 1) = x.transpose();
  Y.conservativeResize(Y.size() + 1);
  Y[Y.size() - 1] = y;
}

double cholesky_with_jitter(const Matrix& K, Matrix& L) {
  static constexpr double kLevels[] = {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4};
  const Eigen::Index n = K.rows();
  for (double jitter : kLevels) {
    Eigen::LLT<Matrix> llt(K + jitter * Matrix::Identity(n, n));
    if (llt.info() == Eigen::Success && llt.matrixL().toDenseMatrix().diagonal().allFinite()) {
      L = llt.matrixL();
      return jitter;
    }
  }
  std::ostringstream msg;
  msg << "Cholesky factorization failed at jitter " << kLevels[std::size(kLevels) - 1];
  throw NumericalFailure(msg.str());
}

namespace {

Vector standardized(const Vector& Y, const Standardization& s) {
  return ((Y.array() - s.mean) / s.stdev).matrix();
}

Matrix gram(const Matrix& X, const Hyperparams& hp) {
  const Eigen::Index t = X.rows();
  Matrix K(t, t);
  const Matrix Xs = X.array().rowwise() / hp.lengthscales.transpose().array();
  for (Eigen::Index a = 0; a < t; ++a) {
    K(a, a) = hp.outputscale;
    for (Eigen::Index b = 0; b < a; ++b) {
      const double r2 = (Xs.row(a) - Xs.row(b)).squaredNorm();
      K(a, b) = K(b, a) = hp.outputscale * std::exp(-0.5 * r2);
    }
  }
  return K;
}

}  // namespace

GpModel::GpModel(Hyperparams hp, Dataset data, Standardization standardization)
    : hp_(std::move(hp)), data_(std::move(data)), stdz_(standardization) {
  hp_.validate();
  if (data_.size() > 0 && data_.dim() != hp_.dim()) {
    throw InvalidArgument("gp: data dimension does not match hyperparameters");
  }
  const Eigen::Index t = data_.size();
  if (t == 0) {
    chol_.resize(0, 0);
    alpha_.resize(0);
    return;
  }
  Matrix K = gram(data_.X, hp_);
  K.diagonal().array() += hp_.noise_var;
  jitter_ = cholesky_with_jitter(K, chol_);
  const Vector resid = standardized(data_.Y, stdz_).array() - hp_.mean_const;
  alpha_ = chol_.triangularView<Eigen::Lower>().solve(resid);
  chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
}

GpModel GpModel::prior(Hyperparams hp) {
  const Eigen::Index d = hp.dim();
  return GpModel(std::move(hp), Dataset::empty(d), Standardization{});
}

GpModel GpModel::with_observation(const Vector& x, double y) const {
  Dataset extended = data_;
  if (extended.X.cols() != hp_.dim()) extended = Dataset::empty(hp_.dim());
  extended.append(x, y);
  return GpModel(hp_, std::move(extended), stdz_);
}

Hyperparams GpModel::raw_hyperparams() const {
  Hyperparams raw = hp_;
  raw.outputscale *= scale2();
  raw.noise_var *= scale2();
  raw.mean_const = hp_.mean_const * stdz_.stdev + stdz_.mean;
  return raw;
}

void GpModel::check_point(const Vector& x) const {
  if (x.size() != hp_.dim()) {
    throw InvalidArgument("gp: query point has dimension " + std::to_string(x.size()) +
                          ", model has " + std::to_string(hp_.dim()));
  }
}

PointTerms GpModel::terms(const Vector& x, bool with_derivs) const {
  check_point(x);
  const Eigen::Index t = data_.size();
  const Eigen::Index d = hp_.dim();
  const Vector inv_l2 = hp_.lengthscales.array().square().inverse();
  PointTerms pt;
  pt.k.resize(t);
  for (Eigen::Index j = 0; j < t; ++j) {
    const double r2 = ((x - data_.X.row(j).transpose()).array().square() * inv_l2.array()).sum();
    pt.k[j] = hp_.outputscale * std::exp(-0.5 * r2);
  }
  pt.v = t > 0 ? Vector(chol_.triangularView<Eigen::Lower>().solve(pt.k)) : Vector(0);
  pt.mu = pt.k.dot(alpha_) + hp_.mean_const;
  pt.var = std::max(0.0, hp_.outputscale - pt.v.squaredNorm());
  if (!with_derivs) return pt;

  pt.G.resize(t, d);
  for (Eigen::Index j = 0; j < t; ++j) {
    pt.G.row(j) = (-(x.transpose() - data_.X.row(j)).array() * inv_l2.transpose().array() * pt.k[j]);
  }
  pt.W = t > 0 ? Matrix(chol_.triangularView<Eigen::Lower>().solve(pt.G)) : Matrix(0, d);
  pt.mu_d = t > 0 ? Vector(pt.G.transpose() * alpha_) : Vector(Vector::Zero(d));
  pt.var_d = (hp_.outputscale * inv_l2.array() - pt.W.colwise().squaredNorm().transpose().array())
                 .max(0.0)
                 .matrix();
  pt.cross = t > 0 ? Vector(-(pt.W.transpose() * pt.v)) : Vector(Vector::Zero(d));
  return pt;
}

std::pair<FPosterior, DerivPosterior> GpModel::posterior(const Vector& x) const {
  const PointTerms pt = terms(x, true);
  const double s = stdz_.stdev;
  FPosterior f{pt.mu * s + stdz_.mean, pt.var * s * s};
  DerivPosterior dp{pt.mu_d * s, pt.var_d * (s * s), pt.cross * (s * s)};
  return {f, std::move(dp)};
}

FPosterior GpModel::posterior_f(const Vector& x) const {
  const PointTerms pt = terms(x, false);
  return {pt.mu * stdz_.stdev + stdz_.mean, pt.var * scale2()};
}

DerivPosterior GpModel::posterior_deriv(const Vector& x) const { return posterior(x).second; }

Vector GpModel::mean_gradient(const Vector& x) const {
  check_point(x);
  const Eigen::Index t = data_.size();
  const Vector inv_l2 = hp_.lengthscales.array().square().inverse();
  Vector grad = Vector::Zero(hp_.dim());
  for (Eigen::Index j = 0; j < t; ++j) {
    const Vector diff = x - data_.X.row(j).transpose();
    const double r2 = (diff.array().square() * inv_l2.array()).sum();
    const double w = hp_.outputscale * std::exp(-0.5 * r2) * alpha_[j];
    grad.array() -= w * diff.array() * inv_l2.array();
  }
  return grad * stdz_.stdev;
}

LookAhead GpModel::lookahead_local(const Vector& x) const {
  const PointTerms pt = terms(x, true);
  const double denom = pt.var + hp_.noise_var;
  if (!(denom > 0.0)) {
    throw NumericalFailure("look-ahead: posterior variance plus noise is zero at the candidate");
  }
  const Vector var_l = (pt.var_d.array() - pt.cross.array().square() / denom).max(0.0).min(pt.var_d.array());
  return {var_l * scale2(), pt.mu_d * stdz_.stdev};
}

Vector GpModel::cross_cov(const Vector& x_star, const PointTerms& star, const Vector& x_plus,
                          const PointTerms& plus) const {
  Vector c = kernel_cross_f_deriv(x_star, x_plus, hp_);
  if (data_.size() > 0) c -= plus.W.transpose() * star.v;
  return c;
}

LookAhead GpModel::lookahead_global(const Vector& x_star, const Vector& x_plus) const {
  const PointTerms star = terms(x_star, false);
  const PointTerms plus = terms(x_plus, true);
  const double denom = star.var + hp_.noise_var;
  if (!(denom > 0.0)) {
    throw NumericalFailure("look-ahead: posterior variance plus noise is zero at the candidate");
  }
  const Vector c = cross_cov(x_star, star, x_plus, plus);
  const Vector var_l = (plus.var_d.array() - c.array().square() / denom).max(0.0).min(plus.var_d.array());
  return {var_l * scale2(), plus.mu_d * stdz_.stdev};
}

// ---------------------------------------------------------------------------
// Fitting

double log_marginal_likelihood(const Hyperparams& hp, const Matrix& X, const Vector& y,
                               Vector* grad) {
  const Eigen::Index t = X.rows();
  const Eigen::Index d = X.cols();
  const Matrix Kf = gram(X, hp);
  Matrix K = Kf;
  K.diagonal().array() += hp.noise_var;
  Matrix L;
  try {
    cholesky_with_jitter(K, L);
  } catch (const NumericalFailure&) {
    return -std::numeric_limits<double>::infinity();
  }
  const Vector resid = y.array() - hp.mean_const;
  Vector alpha = L.triangularView<Eigen::Lower>().solve(resid);
  L.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha);
  const double lml = -0.5 * resid.dot(alpha) - L.diagonal().array().log().sum() -
                     0.5 * static_cast<double>(t) * std::log(2.0 * std::numbers::pi);
  if (grad) {
    grad->resize(d + 3);
    Matrix Kinv = Matrix::Identity(t, t);
    L.triangularView<Eigen::Lower>().solveInPlace(Kinv);
    L.triangularView<Eigen::Lower>().transpose().solveInPlace(Kinv);
    const Matrix Wm = alpha * alpha.transpose() - Kinv;
    const Matrix WK = Wm.cwiseProduct(Kf);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double inv_l2 = 1.0 / (hp.lengthscales[i] * hp.lengthscales[i]);
      double acc = 0.0;
      for (Eigen::Index a = 0; a < t; ++a) {
        for (Eigen::Index b = 0; b < a; ++b) {
          const double diff = X(a, i) - X(b, i);
          acc += WK(a, b) * diff * diff;
        }
      }
      (*grad)[i] = acc * inv_l2;  // symmetric: 2 * 0.5 * sum over a > b
    }
    (*grad)[d] = 0.5 * WK.sum();
    (*grad)[d + 1] = 0.5 * hp.noise_var * Wm.trace();
    (*grad)[d + 2] = alpha.sum();
  }
  return lml;
}

namespace {

Hyperparams unpack(const Vector& theta, Eigen::Index d) {
  Hyperparams hp;
  hp.lengthscales = theta.head(d).array().exp();
  hp.outputscale = std::exp(theta[d]);
  hp.noise_var = std::exp(theta[d + 1]);
  hp.mean_const = theta[d + 2];
  return hp;
}

Vector pack(const Hyperparams& hp) {
  const Eigen::Index d = hp.dim();
  Vector theta(d + 3);
  theta.head(d) = hp.lengthscales.array().log();
  theta[d] = std::log(hp.outputscale);
  theta[d + 1] = std::log(std::max(hp.noise_var, 1e-300));
  theta[d + 2] = hp.mean_const;
  return theta;
}

}  // namespace

GpModel fit(const Dataset& data, Seed seed, const FitOptions& options) {
  const Eigen::Index t = data.size();
  const Eigen::Index d = data.dim();
  if (t < 2) throw InvalidArgument("fit: at least two observations are required");
  const Standardization stdz = Standardization::from(data.Y);
  if (stdz.degenerate) {
    Hyperparams hp = Hyperparams::isotropic(
        d, std::sqrt(options.init_lengthscale_min * options.init_lengthscale_max), 1.0, 1.0, 0.0);
    return GpModel(std::move(hp), data, stdz);
  }
  const Vector y = standardized(data.Y, stdz);

  Vector lo(d + 3), hi(d + 3);
  lo.head(d).setConstant(std::log(options.lengthscale_min));
  hi.head(d).setConstant(std::log(options.lengthscale_max));
  lo[d] = std::log(options.outputscale_min);
  hi[d] = std::log(options.outputscale_max);
  lo[d + 1] = std::log(options.noise_min);
  hi[d + 1] = std::log(options.noise_max);
  lo[d + 2] = -options.mean_abs_max;
  hi[d + 2] = options.mean_abs_max;

  std::vector<Vector> starts;
  if (options.restarts > 0) {
    SobolStream design(static_cast<std::size_t>(d + 2), seed);
    const Matrix u = design.next(static_cast<std::size_t>(options.restarts));
    auto log_lerp = [](double a, double b, double w) {
      return std::log(a) + w * (std::log(b) - std::log(a));
    };
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
      Vector theta(d + 3);
      for (Eigen::Index i = 0; i < d; ++i) {
        theta[i] = log_lerp(options.init_lengthscale_min, options.init_lengthscale_max, u(r, i));
      }
      theta[d] = log_lerp(options.init_outputscale_min, options.init_outputscale_max, u(r, d));
      theta[d + 1] = log_lerp(options.init_noise_min, options.init_noise_max, u(r, d + 1));
      theta[d + 2] = 0.0;
      starts.push_back(theta);
    }
  }
  if (options.warm_start && options.warm_start->dim() == d) starts.push_back(pack(*options.warm_start));
  if (starts.empty()) throw InvalidArgument("fit: no optimizer starts configured");

  const ValueGrad objective = [&](const Vector& theta, Vector* grad) {
    const Hyperparams hp = unpack(theta, d);
    Vector g;
    const double value = log_marginal_likelihood(hp, data.X, y, grad ? &g : nullptr);
    if (grad) {
      if (!std::isfinite(value)) {
        grad->setZero(theta.size());
      } else {
        grad->resize(theta.size());
        // d/dlog(l) already; outputscale and noise gradients are in log space too.
        *grad = g;
      }
    }
    return std::isfinite(value) ? value : -std::numeric_limits<double>::infinity();
  };

  BoxOptions box;
  box.max_iters = options.max_iters;
  box.grad_tol = 1e-6;
  box.value_tol = 1e-10;
  double best_value = -std::numeric_limits<double>::infinity();
  Vector best_theta;
  for (const Vector& start : starts) {
    const BoxResult r = maximize_box(objective, start, lo, hi, box);
    if (std::isfinite(r.value) && r.value > best_value) {
      best_value = r.value;
      best_theta = r.x;
    }
  }
  if (best_theta.size() == 0) {
    throw NumericalFailure("fit: log marginal likelihood is non-finite at every start");
  }
  return GpModel(unpack(best_theta, d), data, stdz);
}

}  // namespace dgsmlab
