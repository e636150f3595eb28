#include "dgsmlab/acquisition.hpp"

#include "dgsmlab/specialdist.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

namespace dgsmlab {

namespace {

struct AcqName {
  AcqTag tag;
  std::string_view acronym;
  std::string_view cli;
};

constexpr std::array<AcqName, 16> kNames{{
    {AcqTag::QR, "QR", "qr"},
    {AcqTag::Var, "Var", "var"},
    {AcqTag::fIG, "fIG", "f-ig"},
    {AcqTag::DV, "DV", "dv"},
    {AcqTag::DVr, "DVr", "dv-r"},
    {AcqTag::DIG, "DIG", "d-ig"},
    {AcqTag::DAbV, "DAbV", "dab-v"},
    {AcqTag::DAbVr, "DAbVr", "dab-vr"},
    {AcqTag::DSqV, "DSqV", "dsq-v"},
    {AcqTag::DSqVr, "DSqVr", "dsq-vr"},
    {AcqTag::DSqIG, "DSqIG", "dsq-ig"},
    {AcqTag::GDVr, "GDVr", "gdv-r"},
    {AcqTag::GDIG, "GDIG", "gd-ig"},
    {AcqTag::GDAbVr, "GDAbVr", "gdab-vr"},
    {AcqTag::GDSqVr, "GDSqVr", "gdsq-vr"},
    {AcqTag::GDSqIG, "GDSqIG", "gdsq-ig"},
}};

constexpr std::array<AcqTag, 16> kAllTags{
    AcqTag::QR,    AcqTag::Var,   AcqTag::fIG,   AcqTag::DV,     AcqTag::DVr,    AcqTag::DIG,
    AcqTag::DAbV,  AcqTag::DAbVr, AcqTag::DSqV,  AcqTag::DSqVr,  AcqTag::DSqIG,  AcqTag::GDVr,
    AcqTag::GDIG,  AcqTag::GDAbVr, AcqTag::GDSqVr, AcqTag::GDSqIG};

std::string normalize(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (c == '-' || c == '_' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

const AcqName& lookup(AcqTag tag) {
  for (const auto& n : kNames) {
    if (n.tag == tag) return n;
  }
  throw InvalidArgument("unknown acquisition tag");
}

double folded_var(double mu, double var, double floor) {
  return folded_moments(GaussParams(mu, std::sqrt(std::max(var, floor)))).var;
}

double sq_var(double mu, double var) { return 4.0 * var * mu * mu + 2.0 * var * var; }

double sq_entropy_of(double mu, double var, double floor, SqEntropyForm form) {
  const GaussParams p(mu, std::sqrt(std::max(var, floor)));
  return form == SqEntropyForm::exact ? sq_entropy(p) : sq_entropy_closed_form(p);
}

}  // namespace

AcquisitionKind AcquisitionKind::make(AcqTag tag, std::size_t global_nodes) {
  AcquisitionKind kind{tag, dgsmlab::is_global(tag) ? global_nodes : 0};
  kind.validate();
  return kind;
}

bool AcquisitionKind::is_global() const { return dgsmlab::is_global(tag); }

void AcquisitionKind::validate() const {
  if (is_global() && global_nodes == 0) {
    throw InvalidArgument(std::string(acronym(tag)) + " needs a positive number of global nodes");
  }
  if (!is_global() && global_nodes != 0) {
    throw InvalidArgument(std::string(acronym(tag)) + " does not take global nodes");
  }
}

std::span<const AcqTag> all_acquisitions() { return kAllTags; }

std::string_view acronym(AcqTag tag) { return lookup(tag).acronym; }

std::string_view cli_name(AcqTag tag) { return lookup(tag).cli; }

AcquisitionKind parse_acquisition(std::string_view name, std::size_t global_nodes) {
  const std::string key = normalize(name);
  for (const auto& n : kNames) {
    if (normalize(n.acronym) == key || normalize(n.cli) == key) {
      return AcquisitionKind::make(n.tag, global_nodes);
    }
  }
  std::string valid;
  for (const auto& n : kNames) {
    if (!valid.empty()) valid += ", ";
    valid += n.cli;
  }
  throw CatalogError("unknown acquisition '" + std::string(name) + "'; valid names: " + valid);
}

bool is_global(AcqTag tag) {
  switch (tag) {
    case AcqTag::GDVr:
    case AcqTag::GDIG:
    case AcqTag::GDAbVr:
    case AcqTag::GDSqVr:
    case AcqTag::GDSqIG:
      return true;
    default:
      return false;
  }
}

AcqTag local_counterpart(AcqTag tag) {
  switch (tag) {
    case AcqTag::GDVr: return AcqTag::DVr;
    case AcqTag::GDIG: return AcqTag::DIG;
    case AcqTag::GDAbVr: return AcqTag::DAbVr;
    case AcqTag::GDSqVr: return AcqTag::DSqVr;
    case AcqTag::GDSqIG: return AcqTag::DSqIG;
    default: return tag;
  }
}

// ---------------------------------------------------------------------------
// f-targeted baselines

double acq_var_f(const GpModel& model, const Vector& x) { return model.posterior_f(x).var; }

double acq_ig_f(const GpModel& model, const Vector& x, const AcqOptions& options) {
  const PointTerms pt = model.terms(x, false);
  const double noise = std::max(model.hyperparams().noise_var, options.ig_noise_floor);
  return 0.5 * std::log1p(pt.var / noise);
}

// ---------------------------------------------------------------------------
// Local derivative acquisitions

double acq_dv(const GpModel& model, const Vector& x) { return model.posterior_deriv(x).var_d.sum(); }

double acq_dabv(const GpModel& model, const Vector& x, const AcqOptions& options) {
  const DerivPosterior dp = model.posterior_deriv(x);
  const double floor = options.variance_floor * model.scale2();
  double total = 0.0;
  for (Eigen::Index i = 0; i < dp.mu_d.size(); ++i) total += folded_var(dp.mu_d[i], dp.var_d[i], floor);
  return total;
}

double acq_dsqv(const GpModel& model, const Vector& x) {
  const DerivPosterior dp = model.posterior_deriv(x);
  double total = 0.0;
  for (Eigen::Index i = 0; i < dp.mu_d.size(); ++i) total += sq_var(dp.mu_d[i], dp.var_d[i]);
  return total;
}

double lookahead_integrand(AcqTag tag, const Vector& mu_d, const Vector& var_d, const Vector& var_l,
                           double floor, const AcqOptions& options) {
  double total = 0.0;
  const Eigen::Index d = mu_d.size();
  switch (tag) {
    case AcqTag::DVr:
      total = (var_d - var_l).sum();
      break;
    case AcqTag::DIG:
      for (Eigen::Index i = 0; i < d; ++i) {
        total += 0.5 * std::log(std::max(var_d[i], floor) / std::max(var_l[i], floor));
      }
      break;
    case AcqTag::DAbVr:
      for (Eigen::Index i = 0; i < d; ++i) {
        total += folded_var(mu_d[i], var_d[i], floor) - folded_var(mu_d[i], var_l[i], floor);
      }
      break;
    case AcqTag::DSqVr:
      for (Eigen::Index i = 0; i < d; ++i) total += sq_var(mu_d[i], var_d[i]) - sq_var(mu_d[i], var_l[i]);
      break;
    case AcqTag::DSqIG:
      for (Eigen::Index i = 0; i < d; ++i) {
        total += sq_entropy_of(mu_d[i], var_d[i], floor, options.sq_entropy) -
                 sq_entropy_of(mu_d[i], var_l[i], floor, options.sq_entropy);
      }
      break;
    default:
      throw InvalidArgument(std::string(acronym(tag)) + " is not a look-ahead acquisition");
  }
  return std::max(0.0, total);
}

namespace {

double local_lookahead(AcqTag tag, const GpModel& model, const Vector& x, const AcqOptions& options) {
  const DerivPosterior dp = model.posterior_deriv(x);
  const LookAhead la = model.lookahead_local(x);
  return lookahead_integrand(tag, dp.mu_d, dp.var_d, la.var_l, options.variance_floor * model.scale2(),
                             options);
}

}  // namespace

double acq_dvr(const GpModel& model, const Vector& x, const AcqOptions& options) {
  return local_lookahead(AcqTag::DVr, model, x, options);
}
double acq_dig(const GpModel& model, const Vector& x, const AcqOptions& options) {
  return local_lookahead(AcqTag::DIG, model, x, options);
}
double acq_dabvr(const GpModel& model, const Vector& x, const AcqOptions& options) {
  return local_lookahead(AcqTag::DAbVr, model, x, options);
}
double acq_dsqvr(const GpModel& model, const Vector& x, const AcqOptions& options) {
  return local_lookahead(AcqTag::DSqVr, model, x, options);
}
double acq_dsqig(const GpModel& model, const Vector& x, const AcqOptions& options) {
  return local_lookahead(AcqTag::DSqIG, model, x, options);
}

// ---------------------------------------------------------------------------
// Global acquisitions

GlobalReference::GlobalReference(const GpModel& model, Matrix nodes)
    : model_(&model), nodes_(std::move(nodes)) {
  if (nodes_.rows() == 0) throw InvalidArgument("global acquisition: no reference nodes");
  if (nodes_.cols() != model.dim()) throw InvalidArgument("global acquisition: node dimension mismatch");
  const Eigen::Index M = nodes_.rows();
  const Eigen::Index d = model.dim();
  const Eigen::Index t = model.size();
  W_all_.resize(t, M * d);
  mu_d_.resize(M, d);
  var_d_.resize(M, d);
  for (Eigen::Index m = 0; m < M; ++m) {
    const PointTerms pt = model.terms(nodes_.row(m).transpose(), true);
    if (t > 0) W_all_.middleCols(m * d, d) = pt.W;
    mu_d_.row(m) = pt.mu_d.transpose();
    var_d_.row(m) = pt.var_d.transpose();
  }
}

double GlobalReference::evaluate(AcqTag tag, const Vector& x_star, const AcqOptions& options) const {
  const GpModel& model = *model_;
  const AcqTag local = local_counterpart(tag);
  const PointTerms star = model.terms(x_star, false);
  const double denom = star.var + model.hyperparams().noise_var;
  if (!(denom > 0.0)) {
    throw NumericalFailure("global acquisition: posterior variance plus noise is zero at the candidate");
  }
  const Eigen::Index M = nodes_.rows();
  const Eigen::Index d = model.dim();
  const Hyperparams& hp = model.hyperparams();
  Vector data_term = Vector::Zero(M * d);
  if (model.size() > 0) data_term = W_all_.transpose() * star.v;
  const double s = model.scale();
  const double s2 = model.scale2();
  const double floor = options.variance_floor * s2;
  double total = 0.0;
  for (Eigen::Index m = 0; m < M; ++m) {
    const Vector node = nodes_.row(m).transpose();
    const Vector c = kernel_cross_f_deriv(x_star, node, hp) - data_term.segment(m * d, d);
    const Vector var_d = var_d_.row(m).transpose();
    const Vector var_l = (var_d.array() - c.array().square() / denom).max(0.0).min(var_d.array());
    total += lookahead_integrand(local, mu_d_.row(m).transpose() * s, var_d * s2, var_l * s2, floor, options);
  }
  return total / static_cast<double>(M);
}

double acq_global(const AcquisitionKind& kind, const GpModel& model, const Vector& x_star,
                  const Matrix& nodes, const AcqOptions& options) {
  if (!kind.is_global()) throw InvalidArgument("acq_global: not a global acquisition");
  if (nodes.rows() == 0) throw InvalidArgument("acq_global: M must be positive");
  return GlobalReference(model, nodes).evaluate(kind.tag, x_star, options);
}

// ---------------------------------------------------------------------------

Acquisition::Acquisition(AcquisitionKind kind, const GpModel& model, AcqOptions options,
                         std::optional<Matrix> global_nodes)
    : kind_(kind), model_(&model), options_(options) {
  kind_.validate();
  if (kind_.tag == AcqTag::QR) throw InvalidArgument("QR has no acquisition function");
  if (kind_.is_global()) {
    if (!global_nodes) throw InvalidArgument("global acquisition requires reference nodes");
    reference_ = std::make_shared<GlobalReference>(model, std::move(*global_nodes));
  }
}

double Acquisition::operator()(const Vector& x) const {
  if (reference_) return reference_->evaluate(kind_.tag, x, options_);
  return evaluate_acquisition(kind_, *model_, x, options_);
}

double evaluate_acquisition(const AcquisitionKind& kind, const GpModel& model, const Vector& x,
                            const AcqOptions& options) {
  switch (kind.tag) {
    case AcqTag::Var: return acq_var_f(model, x);
    case AcqTag::fIG: return acq_ig_f(model, x, options);
    case AcqTag::DV: return acq_dv(model, x);
    case AcqTag::DVr: return acq_dvr(model, x, options);
    case AcqTag::DIG: return acq_dig(model, x, options);
    case AcqTag::DAbV: return acq_dabv(model, x, options);
    case AcqTag::DAbVr: return acq_dabvr(model, x, options);
    case AcqTag::DSqV: return acq_dsqv(model, x);
    case AcqTag::DSqVr: return acq_dsqvr(model, x, options);
    case AcqTag::DSqIG: return acq_dsqig(model, x, options);
    case AcqTag::QR: throw InvalidArgument("QR has no acquisition function");
    default: throw InvalidArgument("global acquisitions need reference nodes; use acq_global");
  }
}

}  // namespace dgsmlab
