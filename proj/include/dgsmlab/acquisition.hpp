#pragma once

// Acquisition functions over a fitted GP: the f-targeted baselines, the
// local derivative acquisitions (max variance, variance reduction,
// information gain of the raw, absolute and squared gradient) and their
// global integrated counterparts.

#include "dgsmlab/gp.hpp"

#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace dgsmlab {

enum class AcqTag {
  QR,
  Var,
  fIG,
  DV,
  DVr,
  DIG,
  DAbV,
  DAbVr,
  DSqV,
  DSqVr,
  DSqIG,
  GDVr,
  GDIG,
  GDAbVr,
  GDSqVr,
  GDSqIG,
};

inline constexpr std::size_t kDefaultGlobalNodes = 128;

struct AcquisitionKind {
  AcqTag tag = AcqTag::QR;
  std::size_t global_nodes = 0;  // M, only for the G-variants

  static AcquisitionKind make(AcqTag tag, std::size_t global_nodes = kDefaultGlobalNodes);
  bool is_global() const;
  /// Throws InvalidArgument if global_nodes is set iff the tag is not global.
  void validate() const;
};

std::span<const AcqTag> all_acquisitions();
std::string_view acronym(AcqTag tag);
/// Command-line spelling, e.g. "dsq-ig".
std::string_view cli_name(AcqTag tag);
/// Accepts acronyms or CLI names, case- and dash-insensitive.
AcquisitionKind parse_acquisition(std::string_view name,
                                  std::size_t global_nodes = kDefaultGlobalNodes);
bool is_global(AcqTag tag);
/// Local acquisition integrated by a global tag (GDSqIG -> DSqIG, ...).
AcqTag local_counterpart(AcqTag tag);

enum class SqEntropyForm { exact, closed_form };

struct AcqOptions {
  SqEntropyForm sq_entropy = SqEntropyForm::exact;
  double variance_floor = 1e-12;  // standardized units, before logs and ratios
  double ig_noise_floor = 1e-6;   // standardized units, for fIG
};

double acq_var_f(const GpModel& model, const Vector& x);
double acq_ig_f(const GpModel& model, const Vector& x, const AcqOptions& options = {});
double acq_dv(const GpModel& model, const Vector& x);
double acq_dvr(const GpModel& model, const Vector& x, const AcqOptions& options = {});
double acq_dig(const GpModel& model, const Vector& x, const AcqOptions& options = {});
double acq_dabv(const GpModel& model, const Vector& x, const AcqOptions& options = {});
double acq_dabvr(const GpModel& model, const Vector& x, const AcqOptions& options = {});
double acq_dsqv(const GpModel& model, const Vector& x);
double acq_dsqvr(const GpModel& model, const Vector& x, const AcqOptions& options = {});
double acq_dsqig(const GpModel& model, const Vector& x, const AcqOptions& options = {});

/// Sum over dimensions of a look-ahead acquisition integrand, given the raw
/// scale derivative mean, current variance and look-ahead variance.
/// `floor` is the absolute variance floor. tag must be a local look-ahead
/// tag (DVr, DIG, DAbVr, DSqVr, DSqIG).
double lookahead_integrand(AcqTag tag, const Vector& mu_d, const Vector& var_d, const Vector& var_l,
                           double floor, const AcqOptions& options = {});

/// Reference nodes for the global acquisitions with their per-node kernel
/// terms precomputed, so each candidate costs O(t d M).
class GlobalReference {
 public:
  GlobalReference(const GpModel& model, Matrix nodes);

  double evaluate(AcqTag tag, const Vector& x_star, const AcqOptions& options = {}) const;
  const Matrix& nodes() const { return nodes_; }

 private:
  const GpModel* model_;
  Matrix nodes_;   // M x d
  Matrix W_all_;   // t x (M d), column block m is L^{-1} G(node_m)
  Matrix mu_d_;    // M x d, standardized
  Matrix var_d_;   // M x d, standardized
};

double acq_global(const AcquisitionKind& kind, const GpModel& model, const Vector& x_star,
                  const Matrix& nodes, const AcqOptions& options = {});

/// A bound acquisition: kind + model (+ reference nodes for the global ones).
class Acquisition {
 public:
  Acquisition(AcquisitionKind kind, const GpModel& model, AcqOptions options = {},
              std::optional<Matrix> global_nodes = std::nullopt);

  double operator()(const Vector& x) const;
  const AcquisitionKind& kind() const { return kind_; }
  const GpModel& model() const { return *model_; }

 private:
  AcquisitionKind kind_;
  const GpModel* model_;
  AcqOptions options_;
  std::shared_ptr<const GlobalReference> reference_;
};

double evaluate_acquisition(const AcquisitionKind& kind, const GpModel& model, const Vector& x,
                            const AcqOptions& options = {});

}  // namespace dgsmlab
