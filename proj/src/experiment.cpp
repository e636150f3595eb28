#include "dgsmlab/experiment.hpp"
#include "dgsmlab/metrics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <thread>

namespace dgsmlab {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace streams;

namespace {

constexpr int kSummarySchema = 1;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json metric_json(const MetricSummary& m) {
  return json{{"mean", m.mean}, {"two_se", m.two_se ? json(*m.two_se) : json(nullptr)}, {"median", m.median}};
}

MetricSummary summarize_values(const std::vector<double>& v) {
  MetricSummary s;
  const double n = static_cast<double>(v.size());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / n;
  if (v.size() >= 2) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.two_se = 2.0 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  s.median = median(v);
  return s;
}

}  // namespace

void ExperimentConfig::validate() const {
  acquisition.validate();
  if (init_points < 2) throw InvalidArgument("init_points must be at least 2");
  if (budget < init_points) throw InvalidArgument("budget must be at least init_points");
  if (replicates < 1) throw InvalidArgument("replicates must be at least 1");
  if (dgsm_nodes < 1) throw InvalidArgument("dgsm_nodes must be positive");
  if (truth_nodes < kMinTruthNodes) throw InvalidArgument("truth_nodes must be at least 65536");
  if (!(noise_sd >= 0.0)) throw InvalidArgument("noise_sd must be nonnegative");
  if (threads < 1) throw InvalidArgument("threads must be at least 1");
}

json config_to_json(const ExperimentConfig& c) {
  return json{
      {"problem", c.problem},
      {"acquisition", std::string(acronym(c.acquisition.tag))},
      {"acquisition_cli", std::string(cli_name(c.acquisition.tag))},
      {"global_nodes", c.acquisition.global_nodes},
      {"init_points", c.init_points},
      {"budget", c.budget},
      {"replicates", c.replicates},
      {"seed", c.seed},
      {"dgsm_nodes", c.dgsm_nodes},
      {"truth_nodes", c.truth_nodes},
      {"optimizer",
       {{"candidates", c.optimizer.candidates},
        {"refine", c.optimizer.refine},
        {"max_iters", c.optimizer.max_iters},
        {"gradient_step", c.optimizer.gradient_step}}},
      {"sq_entropy", c.acq_options.sq_entropy == SqEntropyForm::exact ? "exact" : "closed-form"},
      {"noise_sd", c.noise_sd},
      {"record_wall_time", c.record_wall_time},
      {"dgsm_coordinates", "unit-cube"},
  };
}

Matrix initial_design(std::size_t n, Eigen::Index dim, Seed seed) {
  std::mt19937_64 rng(seed);
  Matrix X(static_cast<Eigen::Index>(n), dim);
  // 53 random mantissa bits; independent of the standard library's distributions
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < dim; ++j) X(i, j) = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return X;
}

ReplicateResult run_loop(const ExperimentConfig& config, const BenchProblem& problem, const DgsmEstimate& truth,
                         std::size_t replicate, Seed rseed) {
  using Clock = std::chrono::steady_clock;
  const Eigen::Index d = problem.dim;
  if (truth.raw.size() != d) throw InvalidArgument("run_loop: ground truth dimension mismatch");

  ReplicateResult out;
  Observer observe(problem, derive_seed(rseed, kNoiseStream));
  SobolStream est_stream(static_cast<std::size_t>(d), derive_seed(rseed, kEstimateStream));
  const Matrix est_nodes = est_stream.next(config.dgsm_nodes);

  auto refit = [&](const Dataset& data, std::size_t it, const GpModel* prev, bool& failed) {
    failed = false;
    FitOptions fo = config.fit_options;
    if (prev) fo.warm_start = prev->hyperparams();
    try {
      return fit(data, derive_seed(rseed, kFitStream + it), fo);
    } catch (const NumericalFailure&) {
      if (!prev) throw;
    } catch (const OptimizerFailure&) {
      if (!prev) throw;
    }
    failed = true;
    ++out.fit_failures;
    return GpModel(prev->hyperparams(), data, Standardization::from(data.Y));
  };

  auto make_record = [&](const GpModel& model, std::size_t it, const Vector& x, double y, bool failed,
                         std::int64_t ms) {
    const DgsmEstimate est = estimate_dgsm(model, est_nodes);
    IterationRecord r;
    r.replicate = replicate;
    r.iteration = it;
    r.x = x;
    r.y = y;
    r.rmse_raw = rmse(est.raw, truth.raw);
    r.rmse_abs = rmse(est.abs, truth.abs);
    r.rmse_sq = rmse(est.sq, truth.sq);
    r.ndcg_abs = ndcg(est.abs, truth.abs);
    r.ndcg_sq = ndcg(est.sq, truth.sq);
    r.hyperparams = model.raw_hyperparams();
    r.fit_failed = failed;
    r.wall_time_ms = config.record_wall_time ? ms : 0;
    return r;
  };

  auto elapsed_ms = [](Clock::time_point since) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - since).count();
  };

  auto t0 = Clock::now();
  const Matrix X0 = initial_design(config.init_points, d, derive_seed(rseed, kInitStream));
  Dataset data = Dataset::empty(d);
  for (Eigen::Index i = 0; i < X0.rows(); ++i) data.append(X0.row(i).transpose(), observe(X0.row(i).transpose()));
  bool failed = false;
  std::optional<GpModel> model;
  model.emplace(refit(data, 0, nullptr, failed));
  const auto init_ms = elapsed_ms(t0);
  for (Eigen::Index i = 0; i < X0.rows(); ++i) {
    out.records.push_back(make_record(*model, 0, data.X.row(i).transpose(), data.Y[i], failed, init_ms));
  }

  SobolStream qr(static_cast<std::size_t>(d), derive_seed(rseed, kQrStream));
  const std::size_t steps = config.budget - config.init_points;
  for (std::size_t it = 1; it <= steps; ++it) {
    t0 = Clock::now();
    Vector x;
    if (config.acquisition.tag == AcqTag::QR) {
      x = qr.next(1).row(0).transpose();
    } else {
      std::optional<Matrix> nodes;
      if (config.acquisition.is_global()) {
        nodes = SobolStream(static_cast<std::size_t>(d), derive_seed(rseed, kGlobalNodeStream + it))
                    .next(config.acquisition.global_nodes);
      }
      const Acquisition acq(config.acquisition, *model, config.acq_options, std::move(nodes));
      x = optimize_acquisition(acq, derive_seed(rseed, kOptimizerStream + it), config.optimizer);
    }
    const double y = observe(x);
    const Eigen::Index before = data.size();
    data.append(x, y);
    if (data.size() != before + 1) throw std::logic_error("dataset did not grow by one");
    GpModel next = refit(data, it, &*model, failed);
    model.emplace(std::move(next));
    out.records.push_back(make_record(*model, it, x, y, failed, elapsed_ms(t0)));
  }

  out.observe_calls = observe.calls();
  if (out.observe_calls != config.budget) throw std::logic_error("observation count differs from budget");
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) throw InvalidArgument("median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<IterationSummary> summarize(const std::vector<IterationRecord>& records) {
  // one value per (replicate, iteration); initial-design rows share metrics
  std::map<std::size_t, std::vector<const IterationRecord*>> by_iter;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& r : records) {
    if (seen.insert({r.replicate, r.iteration}).second) by_iter[r.iteration].push_back(&r);
  }
  std::vector<IterationSummary> out;
  for (const auto& [it, rows] : by_iter) {
    auto collect = [&](auto getter) {
      std::vector<double> v;
      v.reserve(rows.size());
      for (const auto* r : rows) v.push_back(getter(*r));
      return summarize_values(v);
    };
    IterationSummary s;
    s.iteration = it;
    s.n = rows.size();
    s.rmse_raw = collect([](const IterationRecord& r) { return r.rmse_raw; });
    s.rmse_abs = collect([](const IterationRecord& r) { return r.rmse_abs; });
    s.rmse_sq = collect([](const IterationRecord& r) { return r.rmse_sq; });
    s.ndcg_abs = collect([](const IterationRecord& r) { return r.ndcg_abs; });
    s.ndcg_sq = collect([](const IterationRecord& r) { return r.ndcg_sq; });
    s.wall_time_ms = collect([](const IterationRecord& r) { return static_cast<double>(r.wall_time_ms); });
    out.push_back(s);
  }
  return out;
}

std::vector<double> ExperimentSummary::final_values(double IterationRecord::*metric) const {
  std::map<std::size_t, const IterationRecord*> last;
  for (const auto& r : records) {
    auto& slot = last[r.replicate];
    if (!slot || r.iteration >= slot->iteration) slot = &r;
  }
  std::vector<double> v;
  for (const auto& [rep, r] : last) v.push_back(r->*metric);
  return v;
}

std::string records_csv(const std::vector<IterationRecord>& records, Eigen::Index dim) {
  std::string s = "replicate,iteration";
  for (Eigen::Index j = 0; j < dim; ++j) s += ",x_" + std::to_string(j);
  s += ",y,rmse_raw,rmse_abs,rmse_sq,ndcg_abs,ndcg_sq,wall_time_ms\n";
  for (const auto& r : records) {
    s += std::to_string(r.replicate) + "," + std::to_string(r.iteration);
    for (Eigen::Index j = 0; j < dim; ++j) s += "," + fmt(r.x[j]);
    for (double v : {r.y, r.rmse_raw, r.rmse_abs, r.rmse_sq, r.ndcg_abs, r.ndcg_sq}) s += "," + fmt(v);
    s += "," + std::to_string(r.wall_time_ms) + "\n";
  }
  return s;
}

std::string hyperparams_csv(const std::vector<IterationRecord>& records, Eigen::Index dim) {
  std::string s = "replicate,iteration,fit_failed";
  for (Eigen::Index j = 0; j < dim; ++j) s += ",lengthscale_" + std::to_string(j);
  s += ",outputscale,noise_var,mean_const\n";
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& r : records) {
    if (!seen.insert({r.replicate, r.iteration}).second) continue;
    s += std::to_string(r.replicate) + "," + std::to_string(r.iteration) + "," + (r.fit_failed ? "1" : "0");
    for (Eigen::Index j = 0; j < dim; ++j) s += "," + fmt(r.hyperparams.lengthscales[j]);
    s += "," + fmt(r.hyperparams.outputscale) + "," + fmt(r.hyperparams.noise_var) + "," +
         fmt(r.hyperparams.mean_const) + "\n";
  }
  return s;
}

json summary_to_json(const ExperimentConfig& config, const ExperimentSummary& summary) {
  json iters = json::array();
  for (const auto& it : summary.iterations) {
    iters.push_back({{"iteration", it.iteration},
                     {"n", it.n},
                     {"rmse_raw", metric_json(it.rmse_raw)},
                     {"rmse_abs", metric_json(it.rmse_abs)},
                     {"rmse_sq", metric_json(it.rmse_sq)},
                     {"ndcg_abs", metric_json(it.ndcg_abs)},
                     {"ndcg_sq", metric_json(it.ndcg_sq)},
                     {"wall_time_ms", metric_json(it.wall_time_ms)}});
  }
  json failures = json::array();
  for (const auto& f : summary.failures) failures.push_back({{"replicate", f.replicate}, {"error", f.error}});
  return json{
      {"schema_version", kSummarySchema},
      {"problem", config.problem},
      {"acquisition", std::string(acronym(config.acquisition.tag))},
      {"replicates_requested", config.replicates},
      {"replicates_succeeded", summary.replicates_ok},
      {"replicates_failed", summary.failures.size()},
      {"failures", failures},
      {"fit_failures", summary.fit_failures},
      {"iterations", iters},
      {"final", iters.empty() ? json(nullptr) : iters.back()},
  };
}

ExperimentSummary run_experiment(const ExperimentConfig& config) {
  config.validate();
  return run_experiment(config, make_problem(config.problem));
}

ExperimentSummary run_experiment(const ExperimentConfig& config, BenchProblem problem) {
  config.validate();
  problem.noise_sd = config.noise_sd;
  problem.validate();

  ExperimentSummary summary;
  summary.truth = ground_truth_dgsm(problem, config.truth_nodes, config.truth_cache_dir);

  const std::size_t R = config.replicates;
  std::vector<std::optional<ReplicateResult>> results(R);
  std::vector<std::string> errors(R);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t r; (r = next.fetch_add(1)) < R;) {
      try {
        results[r] = run_loop(config, problem, summary.truth, r, derive_seed(config.seed, r));
      } catch (const std::exception& e) {
        errors[r] = e.what();
      }
    }
  };
  const std::size_t n_threads = std::min(config.threads, R);
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
  }

  for (std::size_t r = 0; r < R; ++r) {
    if (!results[r]) {
      summary.failures.push_back({r, errors[r]});
      continue;
    }
    ++summary.replicates_ok;
    summary.fit_failures += results[r]->fit_failures;
    for (auto& rec : results[r]->records) summary.records.push_back(std::move(rec));
  }
  if (!summary.records.empty()) summary.iterations = summarize(summary.records);

  if (!config.out_dir.empty()) {
    fs::create_directories(config.out_dir);
    const fs::path dir(config.out_dir);
    write_file_atomic((dir / "config.json").string(), config_to_json(config).dump(2) + "\n");
    write_file_atomic((dir / "records.csv").string(), records_csv(summary.records, problem.dim));
    write_file_atomic((dir / "hyperparams.csv").string(), hyperparams_csv(summary.records, problem.dim));
    write_file_atomic((dir / "summary.json").string(), summary_to_json(config, summary).dump(2) + "\n");
    write_file_atomic((dir / "groundtruth.json").string(),
                      truth_to_json(problem.name, summary.truth).dump(2) + "\n");
  }
  return summary;
}

}  // namespace dgsmlab
