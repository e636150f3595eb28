#pragma once

// Moments and entropies of |Z| and Z^2 for a scalar Gaussian Z ~ N(mu, sigma^2).

namespace dgsmlab {

struct GaussParams {
  double mu = 0.0;
  double sigma = 1.0;

  /// Throws InvalidArgument unless sigma > 0 and both fields are finite.
  GaussParams(double mu, double sigma);
  double r() const { return mu / sigma; }
};

struct FoldedMoments {
  double mean = 0.0;
  double var = 0.0;
};

FoldedMoments folded_moments(const GaussParams& p);

/// Var[Z^2] = 4 sigma^2 mu^2 + 2 sigma^4.
double ncx2_var(const GaussParams& p);

/// r^2 * 2F2(1, 1; 3/2, 2; -r^2/2), which equals E[log chi'^2_1(r^2)] - E[log chi^2_1].
///
/// With a = r^2/2 the value is 2 * sum_k P(k+1, a) / (2k+1), P the
/// regularized lower incomplete gamma; every term is positive, so there is
/// no cancellation. Beyond a = kHyp2f2Crossover the asymptotic expansion
/// log a + gamma + 2 log 2 - sum_k (2k-1)!! / (2^k k a^k) takes over.
double hyp2f2_entropy_term(double r);
inline constexpr double kHyp2f2Crossover = 60.0;

/// Differential entropy of Z^2 minus that of sigma_0^2 chi^2_1 with
/// sigma_0 = 1: 2 log sigma + [h(|Z/sigma|) - h(|N(0,1)|)] + hyp2f2_entropy_term(r) / 2.
/// Exact; only the additive constant h(chi^2_1) is dropped.
/// The r-dependent part is read from a spline table on [0, kShiftTableEnd).
double sq_entropy(const GaussParams& p);
/// Same value computed by quadrature on every call.
double sq_entropy_direct(const GaussParams& p);

/// sq_entropy(p) - 2 log sigma, tabulated and direct.
double sq_entropy_shift(double r);
double sq_entropy_shift_direct(double r);
inline constexpr double kShiftTableEnd = 10.0;
inline constexpr double kShiftTableStep = 1.0 / 128.0;

/// The closed form 2 log sigma - hyp2f2_entropy_term(r). Agrees with
/// sq_entropy only at mu = 0; kept for comparison runs.
double sq_entropy_closed_form(const GaussParams& p);

/// h(|Z|) - h(|N(0,1)|) for Z ~ N(r, 1).
double folded_entropy_shift(double r);

/// 0.5 * log(2 pi e var).
double gauss_entropy(double var);

/// Standard normal CDF.
double normal_cdf(double x);

}  // namespace dgsmlab
