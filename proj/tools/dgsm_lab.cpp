// dgsm-lab: run active-learning DGSM experiments from the command line.

#include "dgsmlab/experiment.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <iostream>

using namespace dgsmlab;

int main(int argc, char** argv) {
  CLI::App app{"Active learning of derivative-based global sensitivity measures"};
  app.require_subcommand(1);

  std::string data;
  app.add_option("--data-dir", data, "Directory with direction numbers and the problem catalog");

  ExperimentConfig cfg;
  std::string acq_name;
  std::size_t global_nodes = kDefaultGlobalNodes;
  std::string sq_form = "exact";
  bool no_timing = false;
  std::string cache_dir;
  auto* run = app.add_subcommand("run", "Run a replicated active-learning experiment");
  run->add_option("--problem", cfg.problem, "Benchmark problem name")->required();
  run->add_option("--acq", acq_name, "Acquisition (see list-acqs)")->required();
  run->add_option("--budget", cfg.budget, "Total evaluations")->capture_default_str();
  run->add_option("--init", cfg.init_points, "Initial random points")->capture_default_str();
  run->add_option("--replicates", cfg.replicates)->capture_default_str();
  run->add_option("--seed", cfg.seed)->capture_default_str();
  run->add_option("--out", cfg.out_dir, "Output directory")->required();
  run->add_option("--nodes", global_nodes, "Reference nodes for global acquisitions")->capture_default_str();
  run->add_option("--dgsm-nodes", cfg.dgsm_nodes, "QMC nodes for DGSM estimates")->capture_default_str();
  run->add_option("--truth-nodes", cfg.truth_nodes, "QMC nodes for ground truth")->capture_default_str();
  run->add_option("--truth-cache", cache_dir, "Directory for cached ground truth");
  run->add_option("--noise-sd", cfg.noise_sd)->capture_default_str();
  run->add_option("--threads", cfg.threads, "Replicates run in parallel")->capture_default_str();
  run->add_option("--candidates", cfg.optimizer.candidates)->capture_default_str();
  run->add_option("--refine", cfg.optimizer.refine)->capture_default_str();
  run->add_option("--sq-entropy", sq_form, "Squared-derivative entropy: exact or closed-form")
      ->check(CLI::IsMember({"exact", "closed-form"}))
      ->capture_default_str();
  run->add_flag("--no-timing", no_timing, "Write 0 for wall_time_ms so outputs are byte-comparable");

  std::string truth_problem;
  std::size_t truth_nodes = kMinTruthNodes;
  std::string truth_out;
  bool original_units = false;
  auto* truth = app.add_subcommand("truth", "Compute ground-truth DGSMs for a problem");
  truth->add_option("--problem", truth_problem)->required();
  truth->add_option("--nodes", truth_nodes)->capture_default_str();
  truth->add_option("--cache", truth_out, "Cache directory (prints JSON to stdout when omitted)");
  truth->add_flag("--original-units", original_units, "Rescale to original input units");

  auto* list_probs = app.add_subcommand("list-problems", "List catalog problems");
  auto* list_acqs = app.add_subcommand("list-acqs", "List acquisition functions");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!data.empty()) set_data_dir(data);
    if (*run) {
      cfg.acquisition = parse_acquisition(acq_name, global_nodes);
      cfg.acq_options.sq_entropy = sq_form == "exact" ? SqEntropyForm::exact : SqEntropyForm::closed_form;
      cfg.record_wall_time = !no_timing;
      if (!cache_dir.empty()) cfg.truth_cache_dir = cache_dir;
      const ExperimentSummary s = run_experiment(cfg);
      std::cerr << s.replicates_ok << "/" << cfg.replicates << " replicates succeeded";
      if (!s.iterations.empty()) {
        const auto& last = s.iterations.back();
        std::cerr << "; final rmse_sq mean " << last.rmse_sq.mean << ", median " << last.rmse_sq.median;
      }
      std::cerr << "\n";
      for (const auto& f : s.failures) std::cerr << "replicate " << f.replicate << " failed: " << f.error << "\n";
      return s.all_failed() ? 1 : 0;
    }
    if (*truth) {
      const BenchProblem p = make_problem(truth_problem);
      std::optional<std::string> cache;
      if (!truth_out.empty()) cache = truth_out;
      DgsmEstimate est = ground_truth_dgsm(p, truth_nodes, cache);
      if (original_units) est = rescale_to_original(est, p.width());
      nlohmann::json doc = truth_to_json(p.name, est);
      if (original_units) doc["coordinates"] = "original";
      std::cout << doc.dump(2) << "\n";
      return 0;
    }
    if (*list_probs) {
      for (const auto& name : list_problems()) {
        const BenchProblem p = make_problem(name);
        std::cout << name << "\t" << p.dim << "\n";
      }
      return 0;
    }
    if (*list_acqs) {
      for (AcqTag tag : all_acquisitions()) std::cout << cli_name(tag) << "\t" << acronym(tag) << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
