#pragma once

// The active-learning loop, acquisition maximization, replicated
// experiments and their on-disk outputs.

#include "dgsmlab/acquisition.hpp"
#include "dgsmlab/dgsm.hpp"
#include "dgsmlab/problems.hpp"

#include <nlohmann/json_fwd.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dgsmlab {

struct OptimizerOptions {
  std::size_t candidates = 512;
  std::size_t refine = 8;
  int max_iters = 50;
  double gradient_step = 1e-6;
};

/// Scores scrambled-Sobol candidates, refines the best few by bounded ascent
/// and returns the best point found. Deterministic in seed. Throws
/// OptimizerFailure when every candidate value is non-finite.
Vector optimize_acquisition(const std::function<double(const Vector&)>& acq, Eigen::Index dim, Seed seed,
                            const OptimizerOptions& options = {});
Vector optimize_acquisition(const Acquisition& acq, Seed seed, const OptimizerOptions& options = {});

/// Stream identifiers passed to derive_seed(replicate_seed, id); the fit,
/// optimizer and global-node streams are offset by the iteration index.
namespace streams {
inline constexpr std::uint64_t kInitStream = 1;
inline constexpr std::uint64_t kQrStream = 2;
inline constexpr std::uint64_t kNoiseStream = 3;
inline constexpr std::uint64_t kEstimateStream = 4;
inline constexpr std::uint64_t kFitStream = 1ULL << 20;
inline constexpr std::uint64_t kOptimizerStream = 2ULL << 20;
inline constexpr std::uint64_t kGlobalNodeStream = 3ULL << 20;
}  // namespace streams

struct ExperimentConfig {
  std::string problem;
  AcquisitionKind acquisition;
  std::size_t init_points = 5;
  std::size_t budget = 35;
  std::size_t replicates = 50;
  Seed seed = 0;
  std::size_t dgsm_nodes = kDefaultEstimateNodes;
  std::size_t truth_nodes = kMinTruthNodes;
  OptimizerOptions optimizer;
  AcqOptions acq_options;
  FitOptions fit_options;
  double noise_sd = 0.0;
  std::size_t threads = 1;
  bool record_wall_time = true;  // false writes 0, for byte-comparable CSVs
  std::string out_dir;
  std::optional<std::string> truth_cache_dir;

  /// Throws InvalidArgument on inconsistent settings.
  void validate() const;
};

nlohmann::json config_to_json(const ExperimentConfig& config);

struct IterationRecord {
  std::size_t replicate = 0;
  std::size_t iteration = 0;  // 0 for the initial design
  Vector x;                   // unit-cube coordinates
  double y = 0.0;
  double rmse_raw = 0.0, rmse_abs = 0.0, rmse_sq = 0.0;
  double ndcg_abs = 0.0, ndcg_sq = 0.0;
  Hyperparams hyperparams;  // raw scale, after refitting on data including this point
  bool fit_failed = false;
  std::int64_t wall_time_ms = 0;
};

struct ReplicateResult {
  std::vector<IterationRecord> records;
  std::size_t observe_calls = 0;
  std::size_t fit_failures = 0;
};

/// Seeded random initial design in the unit cube.
Matrix initial_design(std::size_t n, Eigen::Index dim, Seed seed);

/// One replicate: initial design, then fit / maximize / observe / append
/// until the budget is spent, with DGSM metrics after every refit.
ReplicateResult run_loop(const ExperimentConfig& config, const BenchProblem& problem, const DgsmEstimate& truth,
                         std::size_t replicate, Seed replicate_seed);

struct MetricSummary {
  double mean = 0.0;
  std::optional<double> two_se;  // null with fewer than two replicates
  double median = 0.0;
};

struct IterationSummary {
  std::size_t iteration = 0;
  std::size_t n = 0;
  MetricSummary rmse_raw, rmse_abs, rmse_sq, ndcg_abs, ndcg_sq, wall_time_ms;
};

struct ReplicateFailure {
  std::size_t replicate = 0;
  std::string error;
};

struct ExperimentSummary {
  std::vector<IterationSummary> iterations;
  std::vector<IterationRecord> records;  // replicate-major, then iteration
  std::vector<ReplicateFailure> failures;
  std::size_t replicates_ok = 0;
  std::size_t fit_failures = 0;
  DgsmEstimate truth;

  /// Final-iteration values of one metric, one per successful replicate.
  std::vector<double> final_values(double IterationRecord::*metric) const;
  bool all_failed() const { return replicates_ok == 0; }
};

/// Per-iteration mean, 2 SE and median over replicates.
std::vector<IterationSummary> summarize(const std::vector<IterationRecord>& records);

/// Runs all replicates (in parallel when threads > 1) and, when out_dir is
/// set, writes config.json, records.csv, summary.json, groundtruth.json and
/// hyperparams.csv.
ExperimentSummary run_experiment(const ExperimentConfig& config);
/// Same with an explicit problem; config.problem is used only as a label and
/// config.noise_sd overrides the problem's noise level.
ExperimentSummary run_experiment(const ExperimentConfig& config, BenchProblem problem);

std::string records_csv(const std::vector<IterationRecord>& records, Eigen::Index dim);
std::string hyperparams_csv(const std::vector<IterationRecord>& records, Eigen::Index dim);
nlohmann::json summary_to_json(const ExperimentConfig& config, const ExperimentSummary& summary);

double median(std::vector<double> values);

}  // namespace dgsmlab
