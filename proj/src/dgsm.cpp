#include "dgsmlab/dgsm.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace dgsmlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kTruthSchema = 1;

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_json_array(const json& arr, std::size_t dim) {
  if (!arr.is_array() || arr.size() != dim) throw CatalogError("ground-truth document: bad vector length");
  Vector v(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

}  // namespace

DgsmEstimate dgsm_from_gradients(const Matrix& gradients) {
  if (gradients.rows() == 0) throw InvalidArgument("DGSM estimate needs at least one node");
  const double m = static_cast<double>(gradients.rows());
  DgsmEstimate e;
  e.raw = gradients.colwise().sum().transpose() / m;
  e.abs = gradients.cwiseAbs().colwise().sum().transpose() / m;
  e.sq = gradients.array().square().colwise().sum().transpose().matrix() / m;
  e.nodes_used = static_cast<std::size_t>(gradients.rows());
  return e;
}

DgsmEstimate estimate_dgsm(const GpModel& model, const Matrix& nodes) {
  if (nodes.cols() != model.dim()) throw InvalidArgument("estimate_dgsm: node dimension mismatch");
  Matrix grads(nodes.rows(), nodes.cols());
  for (Eigen::Index i = 0; i < nodes.rows(); ++i) {
    grads.row(i) = model.mean_gradient(nodes.row(i).transpose()).transpose();
  }
  return dgsm_from_gradients(grads);
}

DgsmEstimate estimate_dgsm(const GpModel& model, SobolStream& stream, std::size_t M) {
  if (M == 0) throw InvalidArgument("estimate_dgsm: M must be positive");
  return estimate_dgsm(model, stream.next(M));
}

DgsmEstimate ground_truth_dgsm(const BenchProblem& problem, std::size_t M,
                               const std::optional<std::string>& cache_dir) {
  if (M < kMinTruthNodes) throw InvalidArgument("ground truth needs at least 65536 nodes");
  problem.validate();
  if (cache_dir) {
    const std::string path = truth_cache_path(*cache_dir, problem.name, M);
    std::ifstream in(path);
    if (in) {
      try {
        const json doc = json::parse(in);
        DgsmEstimate cached = truth_from_json(doc);
        if (doc.at("problem") == problem.name && cached.raw.size() == problem.dim && cached.nodes_used == M) {
          return cached;
        }
      } catch (const std::exception&) {
        // unreadable cache entries are recomputed and overwritten
      }
    }
  }

  SobolStream stream(static_cast<std::size_t>(problem.dim), kTruthSeed);
  const Matrix nodes = stream.next(M);
  Matrix grads(nodes.rows(), nodes.cols());
  const unsigned workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  std::atomic<Eigen::Index> next{0};
  constexpr Eigen::Index kChunk = 1024;
  auto work = [&] {
    for (;;) {
      const Eigen::Index begin = next.fetch_add(kChunk);
      if (begin >= nodes.rows()) return;
      const Eigen::Index end = std::min(nodes.rows(), begin + kChunk);
      for (Eigen::Index i = begin; i < end; ++i) {
        grads.row(i) = problem.gradient_normalized(nodes.row(i).transpose()).transpose();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (!grads.allFinite()) throw NumericalFailure("ground truth: non-finite gradient for " + problem.name);
  DgsmEstimate truth = dgsm_from_gradients(grads);

  if (cache_dir) {
    fs::create_directories(*cache_dir);
    write_file_atomic(truth_cache_path(*cache_dir, problem.name, M), truth_to_json(problem.name, truth).dump(2));
  }
  return truth;
}

DgsmEstimate rescale_to_original(const DgsmEstimate& estimate, const Vector& width) {
  if (width.size() != estimate.raw.size()) throw InvalidArgument("rescale: dimension mismatch");
  DgsmEstimate out = estimate;
  out.raw = estimate.raw.cwiseQuotient(width);
  out.abs = estimate.abs.cwiseQuotient(width);
  out.sq = estimate.sq.cwiseQuotient(width.cwiseProduct(width));
  return out;
}

json truth_to_json(const std::string& problem, const DgsmEstimate& truth) {
  return json{
      {"schema_version", kTruthSchema},
      {"problem", problem},
      {"M", truth.nodes_used},
      {"dim", truth.raw.size()},
      {"coordinates", "unit-cube"},
      {"raw", to_std(truth.raw)},
      {"abs", to_std(truth.abs)},
      {"sq", to_std(truth.sq)},
      {"generator",
       {{"sequence", "sobol"},
        {"scrambling", "owen-nested-uniform"},
        {"seed", kTruthSeed},
        {"direction_numbers", "new-joe-kuo-6.21201"}}},
  };
}

DgsmEstimate truth_from_json(const json& doc) {
  try {
    if (doc.at("schema_version").get<int>() != kTruthSchema) throw CatalogError("ground-truth document: unknown schema");
    const auto dim = doc.at("dim").get<std::size_t>();
    DgsmEstimate e;
    e.raw = from_json_array(doc.at("raw"), dim);
    e.abs = from_json_array(doc.at("abs"), dim);
    e.sq = from_json_array(doc.at("sq"), dim);
    e.nodes_used = doc.at("M").get<std::size_t>();
    return e;
  } catch (const json::exception& err) {
    throw CatalogError(std::string("ground-truth document: ") + err.what());
  }
}

std::string truth_cache_path(const std::string& cache_dir, const std::string& problem, std::size_t M) {
  return (fs::path(cache_dir) / (problem + "_M" + std::to_string(M) + ".json")).string();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const fs::path target(path);
  std::ostringstream suffix;
  suffix << ".tmp." << std::this_thread::get_id();
  const fs::path tmp = target.string() + suffix.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace dgsmlab
