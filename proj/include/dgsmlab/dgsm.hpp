#pragma once

// Derivative-based global sensitivity measures: plug-in estimates from a GP
// posterior mean and QMC ground truth for benchmark problems. Everything is
// in unit-cube coordinates unless rescaled explicitly.

#include "dgsmlab/gp.hpp"
#include "dgsmlab/problems.hpp"
#include "dgsmlab/sobol.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <string>

namespace dgsmlab {

inline constexpr std::size_t kDefaultEstimateNodes = 4096;
inline constexpr std::size_t kMinTruthNodes = std::size_t{1} << 16;
inline constexpr Seed kTruthSeed = 20240229;

struct DgsmEstimate {
  Vector raw;
  Vector abs;
  Vector sq;
  std::size_t nodes_used = 0;
};

/// Averages raw, absolute and squared gradients given per-node gradients
/// (one row per node).
DgsmEstimate dgsm_from_gradients(const Matrix& gradients);

/// Plug-in estimate from the posterior mean gradient at explicit nodes.
DgsmEstimate estimate_dgsm(const GpModel& model, const Matrix& nodes);
/// Same, drawing M nodes from the stream.
DgsmEstimate estimate_dgsm(const GpModel& model, SobolStream& stream,
                           std::size_t M = kDefaultEstimateNodes);

/// QMC average of the true normalized gradient over M >= 2^16 scrambled
/// Sobol nodes (seed kTruthSeed). When cache_dir is given, a cached
/// document for (problem, M) is reused and new results are stored there.
DgsmEstimate ground_truth_dgsm(const BenchProblem& problem, std::size_t M = kMinTruthNodes,
                               const std::optional<std::string>& cache_dir = std::nullopt);

/// Converts unit-cube DGSMs to original input units: a gradient in original
/// units is the normalized one divided by the box width.
DgsmEstimate rescale_to_original(const DgsmEstimate& estimate, const Vector& width);

nlohmann::json truth_to_json(const std::string& problem, const DgsmEstimate& truth);
/// Throws CatalogError on a malformed document.
DgsmEstimate truth_from_json(const nlohmann::json& doc);

std::string truth_cache_path(const std::string& cache_dir, const std::string& problem, std::size_t M);

/// Writes via a temporary file in the same directory, then renames.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace dgsmlab
