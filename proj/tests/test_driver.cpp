#include "dgsmlab/experiment.hpp"
#include "dgsmlab/metrics.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

using namespace dgsmlab;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config(const std::string& problem, AcqTag tag, std::size_t global_nodes = 0) {
  ExperimentConfig c;
  c.problem = problem;
  c.acquisition = AcquisitionKind::make(tag, global_nodes);
  c.init_points = 3;
  c.budget = 7;
  c.replicates = 2;
  c.seed = 2024;
  c.dgsm_nodes = 256;
  c.optimizer.candidates = 64;
  c.optimizer.refine = 2;
  c.optimizer.max_iters = 20;
  c.fit_options.restarts = 2;
  c.fit_options.max_iters = 60;
  c.record_wall_time = false;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dgsmlab_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("rmse") {
  CHECK(rmse(Vector{{1.0, 2.0}}, Vector{{1.0, 2.0}}) == 0.0);
  CHECK(rmse(Vector{{3.0, 0.0}}, Vector{{0.0, 4.0}}) == Approx(std::sqrt(12.5)));
  CHECK_THROWS_AS(rmse(Vector{{1.0}}, Vector{{1.0, 2.0}}), InvalidArgument);
  CHECK_THROWS_AS(rmse(Vector(0), Vector(0)), InvalidArgument);
}

TEST_CASE("ndcg") {
  CHECK(ndcg(Vector{{3.0, 2.0, 1.0}}, Vector{{30.0, 20.0, 10.0}}) == 1.0);
  CHECK(ndcg(Vector{{1.0, 0.0}}, Vector{{0.0, 1.0}}) == Approx(1.0 / std::log2(3.0)));
  // ties in the estimate go to the lower index
  CHECK(ndcg(Vector{{5.0, 5.0}}, Vector{{0.0, 1.0}}) == Approx(1.0 / std::log2(3.0)));
  CHECK(ndcg(Vector{{5.0, 5.0}}, Vector{{1.0, 0.0}}) == 1.0);
  CHECK(ndcg(Vector{{0.1, 0.9, 0.5}}, Vector{{2.0, 2.0, 2.0}}) == Approx(1.0));
  CHECK(ndcg(Vector{{0.1, 0.9}}, Vector{{0.0, 0.0}}) == 1.0);
  const double worst = ndcg(Vector{{1.0, 2.0, 3.0}}, Vector{{3.0, 2.0, 1.0}});
  const double ideal = 3.0 + 2.0 / std::log2(3.0) + 1.0 / 2.0;
  CHECK(worst == Approx((1.0 + 2.0 / std::log2(3.0) + 3.0 / 2.0) / ideal));
  for (int k = 0; k < 50; ++k) {
    const Vector e = Vector::Random(4), t = Vector::Random(4).cwiseAbs();
    const double v = ndcg(e, t);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("acquisition maximizer") {
  SUBCASE("constant landscape returns a point in the cube") {
    const Vector x = optimize_acquisition([](const Vector&) { return 1.0; }, 3, 5);
    CHECK(x.size() == 3);
    CHECK((x.array() >= 0.0).all());
    CHECK((x.array() <= 1.0).all());
  }
  SUBCASE("never worse than the best candidate") {
    auto f = [](const Vector& x) { return std::sin(9 * x[0]) * std::cos(7 * x[1]) + 0.3 * x[0]; };
    OptimizerOptions o;
    o.candidates = 128;
    const Matrix cand = SobolStream(2, 77).next(o.candidates);
    double best = -1e300;
    for (Eigen::Index i = 0; i < cand.rows(); ++i) best = std::max(best, f(cand.row(i).transpose()));
    CHECK(f(optimize_acquisition(f, 2, 77, o)) >= best);
  }
  SUBCASE("finds the maximum of a smooth 2-D landscape") {
    auto f = [](const Vector& x) {
      return std::exp(-20 * (std::pow(x[0] - 0.3, 2) + std::pow(x[1] - 0.8, 2))) +
             0.5 * std::exp(-30 * (std::pow(x[0] - 0.8, 2) + std::pow(x[1] - 0.2, 2)));
    };
    double grid_best = -1.0;
    for (int i = 0; i < 256; ++i)
      for (int j = 0; j < 256; ++j) grid_best = std::max(grid_best, f(Vector{{i / 255.0, j / 255.0}}));
    const Vector x = optimize_acquisition(f, 2, 3);
    CHECK(f(x) >= grid_best - 1e-4);
    CHECK(x[0] == Approx(0.3).epsilon(1e-2));
    CHECK(x[1] == Approx(0.8).epsilon(1e-2));
  }
  SUBCASE("maximum on a face") {
    const Vector x = optimize_acquisition([](const Vector& x) { return x[0] - (x[1] - 0.4) * (x[1] - 0.4); }, 2, 9);
    CHECK(x[0] == 1.0);
    CHECK(x[1] == Approx(0.4).epsilon(1e-3));
  }
  SUBCASE("non-finite values are skipped") {
    auto f = [](const Vector& x) {
      if (x[0] < 0.5) return std::nan("");
      if (x[0] > 0.9) throw NumericalFailure("boom");
      return x[0];
    };
    const Vector x = optimize_acquisition(f, 1, 1);
    CHECK(x[0] >= 0.5);
    CHECK(x[0] <= 0.9);
  }
  SUBCASE("all non-finite") {
    CHECK_THROWS_AS(optimize_acquisition([](const Vector&) { return std::nan(""); }, 2, 1), OptimizerFailure);
    CHECK_THROWS_AS(
        optimize_acquisition([](const Vector&) -> double { throw NumericalFailure("x"); }, 2, 1), OptimizerFailure);
  }
  SUBCASE("deterministic in the seed") {
    auto f = [](const Vector& x) { return std::sin(13 * x[0] + 5 * x[1]); };
    CHECK(optimize_acquisition(f, 2, 4) == optimize_acquisition(f, 2, 4));
  }
}

TEST_CASE("derivative variance explores away from a cluster") {
  Matrix X(3, 1);
  X << 0.4, 0.45, 0.5;
  const Vector Y{{0.1, 0.3, 0.2}};
  const GpModel m(Hyperparams::isotropic(1, 0.1, 1.0, 1e-4, 0.0), Dataset(X, Y), Standardization::from(Y));
  const Acquisition acq(AcquisitionKind::make(AcqTag::DV), m);
  const Vector x = optimize_acquisition(acq, 8);
  CHECK(std::abs(x[0] - 0.45) > 0.2);
}

TEST_CASE("configuration validation") {
  ExperimentConfig c = small_config("branin", AcqTag::DV);
  CHECK_NOTHROW(c.validate());
  c.init_points = 1;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = small_config("branin", AcqTag::DV);
  c.budget = 2;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = small_config("branin", AcqTag::DV);
  c.truth_nodes = 1000;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = small_config("branin", AcqTag::DV);
  c.replicates = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  CHECK_THROWS_AS(small_config("branin", AcqTag::GDVr, 0), InvalidArgument);
  c = small_config("branin", AcqTag::DV);
  c.acquisition = AcquisitionKind{AcqTag::GDVr, 0};
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = small_config("nope", AcqTag::DV);
  CHECK_THROWS_AS(run_experiment(c), CatalogError);

  const nlohmann::json j = config_to_json(small_config("branin", AcqTag::DSqIG));
  CHECK(j.at("acquisition") == "DSqIG");
  CHECK(j.at("acquisition_cli") == "dsq-ig");
  CHECK(j.at("budget") == 7);
  CHECK(j.at("sq_entropy") == "exact");
}

TEST_CASE("initial design") {
  const Matrix a = initial_design(5, 3, 11);
  CHECK(a.rows() == 5);
  CHECK((a.array() >= 0.0).all());
  CHECK((a.array() < 1.0).all());
  CHECK(a == initial_design(5, 3, 11));
  CHECK(a != initial_design(5, 3, 12));
}

TEST_CASE("one replicate of the loop") {
  const ExperimentConfig c = small_config("branin", AcqTag::DSqIG);
  const BenchProblem p = make_problem("branin");
  const DgsmEstimate truth = ground_truth_dgsm(p);
  const Seed rseed = derive_seed(c.seed, 0);
  const ReplicateResult r = run_loop(c, p, truth, 0, rseed);
  CHECK(r.observe_calls == c.budget);
  REQUIRE(r.records.size() == c.budget);
  const Matrix X0 = initial_design(c.init_points, 2, derive_seed(rseed, streams::kInitStream));
  for (std::size_t i = 0; i < c.budget; ++i) {
    const IterationRecord& rec = r.records[i];
    CHECK(rec.iteration == (i < c.init_points ? 0 : i - c.init_points + 1));
    CHECK((rec.x.array() >= 0.0).all());
    CHECK((rec.x.array() <= 1.0).all());
    CHECK(rec.y == Approx(p.value_normalized(rec.x)));
    CHECK(rec.ndcg_sq >= 0.0);
    CHECK(rec.ndcg_sq <= 1.0);
    CHECK(rec.rmse_sq >= 0.0);
    CHECK(rec.wall_time_ms == 0);
    if (i < c.init_points) CHECK(rec.x == Vector(X0.row(static_cast<Eigen::Index>(i)).transpose()));
  }
  // initial-design rows share one fit
  CHECK(r.records[0].rmse_sq == r.records[2].rmse_sq);
  const ReplicateResult again = run_loop(c, p, truth, 0, rseed);
  for (std::size_t i = 0; i < c.budget; ++i) CHECK(again.records[i].x == r.records[i].x);

  ExperimentConfig no_steps = c;
  no_steps.budget = c.init_points;
  const ReplicateResult z = run_loop(no_steps, p, truth, 0, rseed);
  CHECK(z.records.size() == c.init_points);
  CHECK(z.observe_calls == c.init_points);
  CHECK_THROWS_AS(run_loop(c, p, ground_truth_dgsm(make_problem("hartmann3")), 0, rseed), InvalidArgument);
}

TEST_CASE("quasi-random baseline follows its Sobol stream") {
  const ExperimentConfig c = small_config("hartmann3", AcqTag::QR);
  const BenchProblem p = make_problem("hartmann3");
  const Seed rseed = derive_seed(c.seed, 1);
  const ReplicateResult r = run_loop(c, p, ground_truth_dgsm(p), 1, rseed);
  const Matrix expected = SobolStream(3, derive_seed(rseed, streams::kQrStream)).next(c.budget - c.init_points);
  for (std::size_t k = 0; k < c.budget - c.init_points; ++k) {
    CHECK(r.records[c.init_points + k].x == Vector(expected.row(static_cast<Eigen::Index>(k)).transpose()));
  }
}

TEST_CASE("every acquisition runs through the loop") {
  const BenchProblem p = make_problem("forrester");
  const DgsmEstimate truth = ground_truth_dgsm(p);
  for (AcqTag tag : all_acquisitions()) {
    ExperimentConfig c = small_config("forrester", tag, is_global(tag) ? 16 : 0);
    c.budget = 5;
    const ReplicateResult r = run_loop(c, p, truth, 0, 99);
    INFO(acronym(tag));
    CHECK(r.observe_calls == 5);
    CHECK(r.records.size() == 5);
  }
}

TEST_CASE("experiment outputs") {
  const fs::path dir = fresh_dir("experiment_outputs");
  ExperimentConfig c = small_config("branin", AcqTag::DIG);
  c.replicates = 3;
  c.out_dir = dir.string();
  const ExperimentSummary s = run_experiment(c);
  CHECK(s.replicates_ok == 3);
  CHECK(s.failures.empty());
  for (const char* f : {"config.json", "records.csv", "summary.json", "groundtruth.json", "hyperparams.csv"}) {
    CHECK(fs::exists(dir / f));
  }

  const auto rows = parse_csv(slurp(dir / "records.csv"));
  REQUIRE(rows.size() == 1 + 3 * c.budget);
  CHECK(rows[0] == std::vector<std::string>{"replicate", "iteration", "x_0", "x_1", "y", "rmse_raw", "rmse_abs",
                                            "rmse_sq", "ndcg_abs", "ndcg_sq", "wall_time_ms"});
  // mean and 2 SE recomputed from the CSV agree with summary.json
  const nlohmann::json sj = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(sj.at("schema_version") == 1);
  CHECK(sj.at("replicates_succeeded") == 3);
  std::map<std::size_t, std::map<std::size_t, double>> by_iter;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    by_iter[std::stoul(rows[i][1])][std::stoul(rows[i][0])] = std::stod(rows[i][7]);
  }
  const auto& iters = sj.at("iterations");
  REQUIRE(iters.size() == by_iter.size());
  for (const auto& it : iters) {
    const auto& vals = by_iter.at(it.at("iteration").get<std::size_t>());
    double mean = 0.0;
    for (const auto& [rep, v] : vals) mean += v / static_cast<double>(vals.size());
    double ss = 0.0;
    for (const auto& [rep, v] : vals) ss += (v - mean) * (v - mean);
    const double two_se = 2.0 * std::sqrt(ss / (vals.size() - 1.0) / vals.size());
    CHECK(it.at("n") == 3);
    CHECK(it.at("rmse_sq").at("mean").get<double>() == Approx(mean).epsilon(1e-12));
    CHECK(it.at("rmse_sq").at("two_se").get<double>() == Approx(two_se).epsilon(1e-10));
  }
  CHECK(sj.at("final").at("iteration") == c.budget - c.init_points);

  const nlohmann::json gt = nlohmann::json::parse(slurp(dir / "groundtruth.json"));
  CHECK(truth_from_json(gt).sq == s.truth.sq);
  const nlohmann::json cj = nlohmann::json::parse(slurp(dir / "config.json"));
  CHECK(cj.at("seed") == c.seed);
  fs::remove_all(dir);
}

TEST_CASE("results do not depend on the thread count") {
  const fs::path d1 = fresh_dir("threads_1"), d3 = fresh_dir("threads_3"), d1b = fresh_dir("threads_1b");
  ExperimentConfig c = small_config("hartmann3", AcqTag::DSqVr);
  c.replicates = 3;
  c.out_dir = d1.string();
  run_experiment(c);
  c.out_dir = d1b.string();
  run_experiment(c);
  c.threads = 3;
  c.out_dir = d3.string();
  run_experiment(c);
  const std::string a = slurp(d1 / "records.csv");
  CHECK(a.size() > 100);
  CHECK(a == slurp(d1b / "records.csv"));
  CHECK(a == slurp(d3 / "records.csv"));
  CHECK(slurp(d1 / "summary.json") == slurp(d3 / "summary.json"));
  for (const auto& d : {d1, d3, d1b}) fs::remove_all(d);
}

TEST_CASE("a single replicate has no standard error") {
  ExperimentConfig c = small_config("branin", AcqTag::Var);
  c.replicates = 1;
  const ExperimentSummary s = run_experiment(c);
  REQUIRE_FALSE(s.iterations.empty());
  CHECK_FALSE(s.iterations.back().rmse_sq.two_se.has_value());
  CHECK(summary_to_json(c, s).at("final").at("rmse_sq").at("two_se").is_null());
}

TEST_CASE("failing replicates are reported and the rest are kept") {
  ExperimentConfig c = small_config("branin", AcqTag::DV);
  c.replicates = 3;
  c.threads = 1;
  BenchProblem p = make_problem("branin");
  auto calls = std::make_shared<std::atomic<std::size_t>>(0);
  const auto inner = p.eval;
  const std::size_t fail_at = c.budget + 3;  // inside the second replicate
  p.eval = [inner, calls, fail_at](const Vector& x) {
    if (++*calls == fail_at) throw NumericalFailure("injected evaluation failure");
    return inner(x);
  };
  const ExperimentSummary s = run_experiment(c, p);
  CHECK(s.replicates_ok == 2);
  REQUIRE(s.failures.size() == 1);
  CHECK(s.failures[0].replicate == 1);
  CHECK(s.failures[0].error.find("injected") != std::string::npos);
  CHECK_FALSE(s.all_failed());
  for (const auto& r : s.records) CHECK(r.replicate != 1);
  CHECK(s.final_values(&IterationRecord::rmse_sq).size() == 2);
  const nlohmann::json j = summary_to_json(c, s);
  CHECK(j.at("replicates_failed") == 1);
  CHECK(j.at("failures")[0].at("replicate") == 1);

  BenchProblem broken = make_problem("branin");
  broken.eval = [](const Vector&) -> double { throw NumericalFailure("always"); };
  const ExperimentSummary all = run_experiment(c, broken);
  CHECK(all.all_failed());
  CHECK(all.failures.size() == 3);
  CHECK(summary_to_json(c, all).at("final").is_null());
}

TEST_CASE("median") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK_THROWS_AS(median({}), InvalidArgument);
}
