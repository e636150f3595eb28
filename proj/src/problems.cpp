#include "dgsmlab/problems.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace dgsmlab {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

json load_catalog(const std::string& path) {
  const std::string file = path.empty() ? data_dir() + "/problems.json" : path;
  std::ifstream in(file);
  if (!in) throw CatalogError("cannot open problem catalog: " + file);
  return json::parse(in);
}

Vector to_vector(const json& arr) {
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

Matrix to_matrix(const json& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto m = static_cast<Eigen::Index>(rows.at(0).size());
  Matrix out(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) out(i, j) = rows[i][j].get<double>();
  }
  return out;
}

void ishigami(BenchProblem& p, double a, double b) {
  p.eval = [a, b](const Vector& x) {
    const double s2 = std::sin(x[1]);
    return std::sin(x[0]) + a * s2 * s2 + b * std::pow(x[2], 4) * std::sin(x[0]);
  };
  p.grad = [a, b](const Vector& x) {
    Vector g(3);
    g[0] = std::cos(x[0]) * (1.0 + b * std::pow(x[2], 4));
    g[1] = 2.0 * a * std::sin(x[1]) * std::cos(x[1]);
    g[2] = 4.0 * b * std::pow(x[2], 3) * std::sin(x[0]);
    return g;
  };
}

void gsobol(BenchProblem& p, Vector a) {
  p.eval = [a](const Vector& x) {
    double f = 1.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) f *= (std::abs(4.0 * x[i] - 2.0) + a[i]) / (1.0 + a[i]);
    return f;
  };
  p.grad = [a](const Vector& x) {
    const Eigen::Index d = x.size();
    Vector factor(d);
    for (Eigen::Index i = 0; i < d; ++i) factor[i] = (std::abs(4.0 * x[i] - 2.0) + a[i]) / (1.0 + a[i]);
    // prefix/suffix products so that a zero factor does not poison the rest
    Vector prefix(d + 1), suffix(d + 1);
    prefix[0] = 1.0;
    suffix[d] = 1.0;
    for (Eigen::Index i = 0; i < d; ++i) prefix[i + 1] = prefix[i] * factor[i];
    for (Eigen::Index i = d; i-- > 0;) suffix[i] = suffix[i + 1] * factor[i];
    Vector g(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double u = 4.0 * x[i] - 2.0;
      const double sign = u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0);  // subgradient 0 at the kink
      g[i] = sign * 4.0 / (1.0 + a[i]) * prefix[i] * suffix[i + 1];
    }
    return g;
  };
}

void alternating_product(BenchProblem& p) {
  p.eval = [](const Vector& x) {
    double f = 0.0, prod = 1.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      prod *= x[i];
      f += ((i + 1) % 2 == 0 ? 1.0 : -1.0) * prod;
    }
    return f;
  };
  p.grad = [](const Vector& x) {
    const Eigen::Index d = x.size();
    Vector g = Vector::Zero(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      double prod = 1.0;
      for (Eigen::Index i = 0; i < d; ++i) {
        if (i != k) prod *= x[i];
        if (i >= k) g[k] += ((i + 1) % 2 == 0 ? 1.0 : -1.0) * prod;
      }
    }
    return g;
  };
}

struct MorrisCoefficients {
  Vector first;
  Matrix pair;  // upper triangle used
  double triple = 0.0;
  int n_triple = 0;
  double quad = 0.0;
  int n_quad = 0;
  std::vector<bool> warped;
};

MorrisCoefficients morris_coefficients(const json& spec, Eigen::Index d) {
  MorrisCoefficients c;
  const int n_first = spec.at("n_first_important").get<int>();
  const int n_pair = spec.at("n_pair_important").get<int>();
  c.first.resize(d);
  c.pair = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    c.first[i] = i < n_first ? spec.at("beta_first_important").get<double>() : ((i + 1) % 2 == 0 ? 1.0 : -1.0);
    for (Eigen::Index j = i + 1; j < d; ++j) {
      c.pair(i, j) = (i < n_pair && j < n_pair) ? spec.at("beta_pair_important").get<double>()
                                                  : ((i + j + 2) % 2 == 0 ? 1.0 : -1.0);
    }
  }
  c.triple = spec.at("beta_triple").get<double>();
  c.n_triple = spec.at("n_triple").get<int>();
  c.quad = spec.at("beta_quad").get<double>();
  c.n_quad = spec.at("n_quad").get<int>();
  c.warped.assign(static_cast<std::size_t>(d), false);
  for (const auto& idx : spec.at("warped_inputs")) c.warped[idx.get<std::size_t>() - 1] = true;
  return c;
}

void morris(BenchProblem& p, MorrisCoefficients c) {
  auto transform = [c](const Vector& x, Vector& w, Vector& dw) {
    const Eigen::Index d = x.size();
    w.resize(d);
    dw.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      if (c.warped[static_cast<std::size_t>(i)]) {
        w[i] = 2.0 * (1.1 * x[i] / (x[i] + 0.1) - 0.5);
        dw[i] = 0.22 / ((x[i] + 0.1) * (x[i] + 0.1));
      } else {
        w[i] = 2.0 * (x[i] - 0.5);
        dw[i] = 2.0;
      }
    }
  };
  p.eval = [c, transform](const Vector& x) {
    Vector w, dw;
    transform(x, w, dw);
    const Eigen::Index d = x.size();
    double f = c.first.dot(w);
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = i + 1; j < d; ++j) f += c.pair(i, j) * w[i] * w[j];
    }
    for (int i = 0; i < c.n_triple; ++i)
      for (int j = i + 1; j < c.n_triple; ++j)
        for (int l = j + 1; l < c.n_triple; ++l) f += c.triple * w[i] * w[j] * w[l];
    for (int i = 0; i < c.n_quad; ++i)
      for (int j = i + 1; j < c.n_quad; ++j)
        for (int l = j + 1; l < c.n_quad; ++l)
          for (int s = l + 1; s < c.n_quad; ++s) f += c.quad * w[i] * w[j] * w[l] * w[s];
    return f;
  };
  p.grad = [c, transform](const Vector& x) {
    Vector w, dw;
    transform(x, w, dw);
    const Eigen::Index d = x.size();
    Vector gw = c.first;
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = i + 1; j < d; ++j) {
        gw[i] += c.pair(i, j) * w[j];
        gw[j] += c.pair(i, j) * w[i];
      }
    }
    for (int i = 0; i < c.n_triple; ++i)
      for (int j = i + 1; j < c.n_triple; ++j)
        for (int l = j + 1; l < c.n_triple; ++l) {
          gw[i] += c.triple * w[j] * w[l];
          gw[j] += c.triple * w[i] * w[l];
          gw[l] += c.triple * w[i] * w[j];
        }
    for (int i = 0; i < c.n_quad; ++i)
      for (int j = i + 1; j < c.n_quad; ++j)
        for (int l = j + 1; l < c.n_quad; ++l)
          for (int s = l + 1; s < c.n_quad; ++s) {
            gw[i] += c.quad * w[j] * w[l] * w[s];
            gw[j] += c.quad * w[i] * w[l] * w[s];
            gw[l] += c.quad * w[i] * w[j] * w[s];
            gw[s] += c.quad * w[i] * w[j] * w[l];
          }
    return Vector(gw.cwiseProduct(dw));
  };
}

void branin(BenchProblem& p) {
  constexpr double b = 5.1 / (4.0 * kPi * kPi);
  constexpr double c = 5.0 / kPi;
  constexpr double r = 6.0;
  constexpr double s = 10.0;
  constexpr double t = 1.0 / (8.0 * kPi);
  p.eval = [=](const Vector& x) {
    const double q = x[1] - b * x[0] * x[0] + c * x[0] - r;
    return q * q + s * (1.0 - t) * std::cos(x[0]) + s;
  };
  p.grad = [=](const Vector& x) {
    const double q = x[1] - b * x[0] * x[0] + c * x[0] - r;
    Vector g(2);
    g[0] = 2.0 * q * (-2.0 * b * x[0] + c) - s * (1.0 - t) * std::sin(x[0]);
    g[1] = 2.0 * q;
    return g;
  };
}

void hartmann(BenchProblem& p, Vector alpha, Matrix A, Matrix P) {
  p.eval = [=](const Vector& x) {
    double f = 0.0;
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      const double inner = (A.row(i).transpose().array() * (x - P.row(i).transpose()).array().square()).sum();
      f -= alpha[i] * std::exp(-inner);
    }
    return f;
  };
  p.grad = [=](const Vector& x) {
    Vector g = Vector::Zero(x.size());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      const Vector diff = x - P.row(i).transpose();
      const double inner = (A.row(i).transpose().array() * diff.array().square()).sum();
      g += alpha[i] * std::exp(-inner) * 2.0 * (A.row(i).transpose().array() * diff.array()).matrix();
    }
    return g;
  };
}

void forrester(BenchProblem& p) {
  p.eval = [](const Vector& x) {
    const double u = 6.0 * x[0] - 2.0;
    return u * u * std::sin(12.0 * x[0] - 4.0);
  };
  p.grad = [](const Vector& x) {
    const double u = 6.0 * x[0] - 2.0;
    Vector g(1);
    g[0] = 12.0 * u * std::sin(12.0 * x[0] - 4.0) + 12.0 * u * u * std::cos(12.0 * x[0] - 4.0);
    return g;
  };
}

}  // namespace

Vector BenchProblem::to_box(const Vector& u) const {
  return lower + (u.array() * width().array()).matrix();
}

double BenchProblem::value_normalized(const Vector& u) const { return eval(to_box(u)); }

Vector BenchProblem::gradient_normalized(const Vector& u) const {
  if (grad) return ((*grad)(to_box(u)).array() * width().array()).matrix();
  constexpr double h = 1e-6;
  Vector g(dim);
  Vector probe = u;
  for (Eigen::Index i = 0; i < dim; ++i) {
    probe[i] = u[i] + h;
    const double up = value_normalized(probe);
    probe[i] = u[i] - h;
    const double down = value_normalized(probe);
    probe[i] = u[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

void BenchProblem::validate() const {
  if (dim <= 0 || lower.size() != dim || upper.size() != dim) {
    throw InvalidArgument("problem " + name + ": inconsistent dimension");
  }
  if (!((upper - lower).array() > 0.0).all()) throw InvalidArgument("problem " + name + ": empty box");
  if (!eval) throw InvalidArgument("problem " + name + ": no objective");
  if (!(noise_sd >= 0.0)) throw InvalidArgument("problem " + name + ": negative noise");
}

std::vector<std::string> list_problems(const std::string& catalog_path) {
  const json catalog = load_catalog(catalog_path);
  std::vector<std::string> names;
  for (const auto& [key, value] : catalog.at("problems").items()) names.push_back(key);
  return names;
}

BenchProblem make_problem(const std::string& name, const std::string& catalog_path) {
  const json catalog = load_catalog(catalog_path);
  const json& problems = catalog.at("problems");
  if (!problems.contains(name)) {
    std::string valid;
    for (const auto& [key, value] : problems.items()) valid += (valid.empty() ? "" : ", ") + key;
    throw CatalogError("unknown problem '" + name + "'; valid names: " + valid);
  }
  const json& spec = problems.at(name);
  BenchProblem p;
  p.name = name;
  p.dim = spec.at("dim").get<Eigen::Index>();
  p.lower = Vector::Zero(p.dim);
  p.upper = Vector::Ones(p.dim);
  if (spec.contains("box")) {
    const Matrix box = to_matrix(spec.at("box"));
    p.lower = box.col(0);
    p.upper = box.col(1);
  }
  const std::string family = spec.at("family").get<std::string>();
  if (family == "ishigami") {
    ishigami(p, spec.at("a").get<double>(), spec.at("b").get<double>());
  } else if (family == "gsobol") {
    gsobol(p, to_vector(spec.at("a")));
  } else if (family == "alternating_product") {
    alternating_product(p);
  } else if (family == "morris") {
    morris(p, morris_coefficients(spec, p.dim));
  } else if (family == "branin") {
    branin(p);
  } else if (family == "hartmann") {
    hartmann(p, to_vector(spec.at("alpha")), to_matrix(spec.at("A")), to_matrix(spec.at("P")));
  } else if (family == "forrester") {
    forrester(p);
  } else {
    throw CatalogError("problem '" + name + "' has unknown family '" + family + "'");
  }
  if (spec.value("gradient", std::string("analytic")) != "analytic") p.grad.reset();
  p.validate();
  return p;
}

BenchProblem make_linear_problem(const Vector& coeffs, const Vector& lower, const Vector& upper) {
  BenchProblem p;
  p.name = "linear";
  p.dim = coeffs.size();
  p.lower = lower;
  p.upper = upper;
  p.eval = [coeffs](const Vector& x) { return coeffs.dot(x); };
  p.grad = [coeffs](const Vector&) { return coeffs; };
  p.validate();
  return p;
}

double observe(const BenchProblem& problem, const Vector& x_normalized, std::mt19937_64& rng) {
  if (x_normalized.size() != problem.dim) throw InvalidArgument("observe: dimension mismatch");
  if (!((x_normalized.array() >= 0.0).all() && (x_normalized.array() <= 1.0).all())) {
    throw InvalidArgument("observe: point outside the unit cube");
  }
  const Vector x = problem.to_box(x_normalized);
  const double slack = 1e-12 * problem.width().maxCoeff();
  if (((x - problem.lower).array() < -slack).any() || ((problem.upper - x).array() < -slack).any()) {
    throw std::logic_error("observe: mapped point left the problem box");
  }
  double y = problem.eval(x);
  if (problem.noise_sd > 0.0) y += std::normal_distribution<double>(0.0, problem.noise_sd)(rng);
  return y;
}

double Observer::operator()(const Vector& x_normalized) {
  const double y = observe(*problem_, x_normalized, rng_);
  ++calls_;
  return y;
}

}  // namespace dgsmlab
