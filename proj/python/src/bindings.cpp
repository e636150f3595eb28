#include "dgsmlab/acquisition.hpp"
#include "dgsmlab/dgsm.hpp"
#include "dgsmlab/experiment.hpp"
#include "dgsmlab/metrics.hpp"
#include "dgsmlab/specialdist.hpp"

#include <nlohmann/json.hpp>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace dgsmlab;

namespace {

py::dict estimate_dict(const DgsmEstimate& e) {
  py::dict d;
  d["raw"] = e.raw;
  d["abs"] = e.abs;
  d["sq"] = e.sq;
  d["nodes"] = e.nodes_used;
  return d;
}

AcquisitionKind kind_from(const std::string& name, std::optional<std::size_t> nodes) {
  AcquisitionKind k = parse_acquisition(name, nodes.value_or(kDefaultGlobalNodes));
  if (!k.is_global() && nodes) throw InvalidArgument("global_nodes given for a local acquisition");
  return k;
}

SqEntropyForm entropy_form(const std::string& s) {
  if (s == "exact") return SqEntropyForm::exact;
  if (s == "closed-form") return SqEntropyForm::closed_form;
  throw InvalidArgument("sq_entropy must be 'exact' or 'closed-form'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Active learning of derivative-based global sensitivity measures";

  py::register_exception<CatalogError>(m, "CatalogError", PyExc_KeyError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<NumericalFailure>(m, "NumericalFailure", PyExc_ArithmeticError);
  py::register_exception<OptimizerFailure>(m, "OptimizerFailure", PyExc_RuntimeError);

  m.def("data_dir", &data_dir);
  m.def("set_data_dir", &set_data_dir, py::arg("path"));
  m.def("derive_seed", &derive_seed, py::arg("base"), py::arg("stream"));

  m.def(
      "sobol",
      [](std::size_t n, std::size_t dim, Seed seed, bool scrambled) {
        SobolStream s(dim, seed, scrambled);
        return s.next(n);
      },
      py::arg("n"), py::arg("dim"), py::arg("seed") = 0, py::arg("scrambled") = true);

  py::class_<Hyperparams>(m, "Hyperparams")
      .def(py::init([](Vector ls, double os, double noise, double mean) {
             Hyperparams hp{std::move(ls), os, noise, mean};
             hp.validate();
             return hp;
           }),
           py::arg("lengthscales"), py::arg("outputscale") = 1.0, py::arg("noise_var") = 0.0,
           py::arg("mean_const") = 0.0)
      .def_readonly("lengthscales", &Hyperparams::lengthscales)
      .def_readonly("outputscale", &Hyperparams::outputscale)
      .def_readonly("noise_var", &Hyperparams::noise_var)
      .def_readonly("mean_const", &Hyperparams::mean_const)
      .def("__repr__", [](const Hyperparams& hp) {
        return "Hyperparams(dim=" + std::to_string(hp.dim()) + ", outputscale=" + std::to_string(hp.outputscale) +
               ", noise_var=" + std::to_string(hp.noise_var) + ")";
      });

  py::class_<GpModel>(m, "GpModel")
      .def(py::init([](const Hyperparams& hp, Matrix X, Vector Y) {
             Dataset data(std::move(X), std::move(Y));
             return GpModel(hp, data, Standardization::from(data.Y));
           }),
           py::arg("hyperparams"), py::arg("X"), py::arg("Y"),
           "Condition on data with fixed hyperparameters (standardized scale).")
      .def_static(
          "fit",
          [](Matrix X, Vector Y, Seed seed, int restarts, int max_iters) {
            FitOptions fo;
            fo.restarts = restarts;
            fo.max_iters = max_iters;
            return fit(Dataset(std::move(X), std::move(Y)), seed, fo);
          },
          py::arg("X"), py::arg("Y"), py::arg("seed") = 0, py::arg("restarts") = 8, py::arg("max_iters") = 200)
      .def_property_readonly("hyperparams", &GpModel::hyperparams)
      .def_property_readonly("raw_hyperparams", &GpModel::raw_hyperparams)
      .def_property_readonly("dim", &GpModel::dim)
      .def_property_readonly("size", &GpModel::size)
      .def_property_readonly("X", [](const GpModel& g) { return g.data().X; })
      .def_property_readonly("Y", [](const GpModel& g) { return g.data().Y; })
      .def("posterior_f",
           [](const GpModel& g, const Vector& x) {
             const FPosterior p = g.posterior_f(x);
             return py::make_tuple(p.mu, p.var);
           })
      .def("posterior_deriv",
           [](const GpModel& g, const Vector& x) {
             const DerivPosterior p = g.posterior_deriv(x);
             return py::make_tuple(p.mu_d, p.var_d);
           })
      .def("mean_gradient", &GpModel::mean_gradient)
      .def("lookahead_local", [](const GpModel& g, const Vector& x) { return g.lookahead_local(x).var_l; })
      .def("lookahead_global",
           [](const GpModel& g, const Vector& x_star, const Vector& x_plus) {
             return g.lookahead_global(x_star, x_plus).var_l;
           })
      .def("with_observation", &GpModel::with_observation, py::arg("x"), py::arg("y"));

  m.def("list_acquisitions", [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (AcqTag t : all_acquisitions()) out.emplace_back(std::string(cli_name(t)), std::string(acronym(t)));
    return out;
  });
  m.def(
      "acquisition",
      [](const std::string& name, const GpModel& model, const Matrix& X, std::optional<Matrix> nodes,
         const std::string& sq_entropy) {
        AcqOptions o;
        o.sq_entropy = entropy_form(sq_entropy);
        const AcquisitionKind kind =
            kind_from(name, nodes ? std::optional<std::size_t>(static_cast<std::size_t>(nodes->rows())) : std::nullopt);
        const Acquisition acq(kind, model, o, std::move(nodes));
        Vector out(X.rows());
        for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = acq(X.row(i).transpose());
        return out;
      },
      py::arg("name"), py::arg("model"), py::arg("X"), py::arg("global_nodes") = py::none(),
      py::arg("sq_entropy") = "exact", "Acquisition values at the rows of X.");
  m.def(
      "maximize_acquisition",
      [](const std::string& name, const GpModel& model, Seed seed, std::optional<Matrix> nodes,
         std::size_t candidates, std::size_t refine) {
        const AcquisitionKind kind =
            kind_from(name, nodes ? std::optional<std::size_t>(static_cast<std::size_t>(nodes->rows())) : std::nullopt);
        const Acquisition acq(kind, model, {}, std::move(nodes));
        OptimizerOptions o;
        o.candidates = candidates;
        o.refine = refine;
        return optimize_acquisition(acq, seed, o);
      },
      py::arg("name"), py::arg("model"), py::arg("seed") = 0, py::arg("global_nodes") = py::none(),
      py::arg("candidates") = 512, py::arg("refine") = 8);

  m.def("folded_moments", [](double mu, double sigma) {
    const FoldedMoments f = folded_moments({mu, sigma});
    return py::make_tuple(f.mean, f.var);
  });
  m.def("ncx2_var", [](double mu, double sigma) { return ncx2_var({mu, sigma}); });
  m.def("hyp2f2_entropy_term", &hyp2f2_entropy_term, py::arg("r"));
  m.def("sq_entropy", [](double mu, double sigma) { return sq_entropy({mu, sigma}); });
  m.def("sq_entropy_closed_form", [](double mu, double sigma) { return sq_entropy_closed_form({mu, sigma}); });
  m.def("gauss_entropy", &gauss_entropy, py::arg("var"));

  m.def("list_problems", [] { return list_problems(); });
  m.def("problem_info", [](const std::string& name) {
    const BenchProblem p = make_problem(name);
    py::dict d;
    d["name"] = p.name;
    d["dim"] = p.dim;
    d["lower"] = p.lower;
    d["upper"] = p.upper;
    d["analytic_gradient"] = p.grad.has_value();
    return d;
  });
  m.def(
      "evaluate",
      [](const std::string& name, const Matrix& U) {
        const BenchProblem p = make_problem(name);
        if (U.cols() != p.dim) throw InvalidArgument("evaluate: expected " + std::to_string(p.dim) + " columns");
        Vector f(U.rows());
        Matrix g(U.rows(), U.cols());
        for (Eigen::Index i = 0; i < U.rows(); ++i) {
          f[i] = p.value_normalized(U.row(i).transpose());
          g.row(i) = p.gradient_normalized(U.row(i).transpose()).transpose();
        }
        return py::make_tuple(f, g);
      },
      py::arg("problem"), py::arg("U"), "Values and unit-cube gradients at the rows of U.");

  m.def(
      "ground_truth",
      [](const std::string& name, std::size_t nodes, std::optional<std::string> cache_dir) {
        DgsmEstimate e;
        {
          py::gil_scoped_release release;
          e = ground_truth_dgsm(make_problem(name), nodes, cache_dir);
        }
        return estimate_dict(e);
      },
      py::arg("problem"), py::arg("nodes") = kMinTruthNodes, py::arg("cache_dir") = py::none());
  m.def(
      "estimate_dgsm", [](const GpModel& g, const Matrix& nodes) { return estimate_dict(estimate_dgsm(g, nodes)); },
      py::arg("model"), py::arg("nodes"));
  m.def("rmse", &rmse, py::arg("estimate"), py::arg("truth"));
  m.def("ndcg", &ndcg, py::arg("estimate"), py::arg("truth"));

  m.def(
      "run_experiment",
      [](const std::string& problem, const std::string& acq, std::size_t budget, std::size_t init,
         std::size_t replicates, Seed seed, std::optional<std::size_t> global_nodes, std::size_t dgsm_nodes,
         std::size_t candidates, std::size_t refine, std::size_t threads, bool record_wall_time,
         const std::string& out_dir, const std::string& sq_entropy) {
        ExperimentConfig c;
        c.problem = problem;
        c.acquisition = kind_from(acq, global_nodes);
        c.budget = budget;
        c.init_points = init;
        c.replicates = replicates;
        c.seed = seed;
        c.dgsm_nodes = dgsm_nodes;
        c.optimizer.candidates = candidates;
        c.optimizer.refine = refine;
        c.threads = threads;
        c.record_wall_time = record_wall_time;
        c.out_dir = out_dir;
        c.acq_options.sq_entropy = entropy_form(sq_entropy);
        std::string summary;
        {
          py::gil_scoped_release release;
          summary = summary_to_json(c, run_experiment(c)).dump();
        }
        return py::module_::import("json").attr("loads")(summary);
      },
      py::arg("problem"), py::arg("acq"), py::arg("budget") = 35, py::arg("init") = 5, py::arg("replicates") = 50,
      py::arg("seed") = 0, py::arg("global_nodes") = py::none(), py::arg("dgsm_nodes") = kDefaultEstimateNodes,
      py::arg("candidates") = 512, py::arg("refine") = 8, py::arg("threads") = 1, py::arg("record_wall_time") = true,
      py::arg("out_dir") = "", py::arg("sq_entropy") = "exact",
      "Runs a replicated experiment and returns the summary document.");
}
