#include "omit/fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "omit/errors.hpp"

namespace omit::fit {

namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

std::size_t slot(Param p) { return static_cast<std::size_t>(p); }

void dataset_residuals(const FitDataset& ds, const ParamValues& v, std::span<double> out) {
  const CavityParams cav{v[slot(Param::OmegaC)], v[slot(Param::Kappa)], v[slot(Param::KappaExt)]};
  const MechanicalParams mech{v[slot(Param::OmegaM)], v[slot(Param::GammaM)], v[slot(Param::G0)]};
  const double n_cav = v[slot(Param::NCav)];

  std::size_t k = 0;
  for (const sweep::SweepTrace& seg : ds.segments) {
    const double delta = seg.meta.pump_omega - cav.omega_c;
    for (std::size_t i = 0; i < seg.size(); ++i, ++k) {
      const double weight = ds.weights.empty() ? 1.0 : ds.weights[k];
      double r;
      try {
        const double model = std::abs(probe_transmission(seg.probe_offset(i), delta, n_cav, ds.scheme, cav, mech));
        r = weight * (model - seg.magnitude(i));
      } catch (const SingularDenominator&) {
        r = kPenaltyResidual;
      }
      out[k] = std::isfinite(r) ? r : kPenaltyResidual;
    }
  }
}

// Internal optimizer coordinate for one unknown: log for positive-definite
// parameters, otherwise position inside the bounds scaled to [0, 1].
struct Coordinate {
  bool log;
  double lo, hi;

  double to_internal(double p) const { return log ? std::log(p) : (p - lo) / (hi - lo); }
  double to_physical(double u) const { return log ? std::exp(u) : lo + u * (hi - lo); }
  double lower() const { return log ? std::log(lo) : 0.0; }
  double upper() const { return log ? std::log(hi) : 1.0; }
  // d(physical)/d(internal)
  double scale(double u) const { return log ? std::exp(u) : hi - lo; }
};

class Objective {
 public:
  Objective(const FitProblem& problem, const ParameterLayout& layout) : problem_(problem), layout_(layout) {
    offsets_.push_back(0);
    for (const FitDataset& ds : problem.datasets) offsets_.push_back(offsets_.back() + ds.points());
    for (const auto& u : layout.unknowns()) coords_.push_back({is_log_param(u.param), u.lo, u.hi});
  }

  std::size_t points() const { return offsets_.back(); }
  const std::vector<Coordinate>& coords() const { return coords_; }

  std::vector<double> physical(const Eigen::VectorXd& u) const {
    std::vector<double> p(static_cast<std::size_t>(u.size()));
    for (std::size_t j = 0; j < p.size(); ++j) p[j] = coords_[j].to_physical(u[static_cast<Eigen::Index>(j)]);
    return p;
  }

  void evaluate_dataset(std::size_t d, const Eigen::VectorXd& u, Eigen::VectorXd& r) const {
    const std::vector<double> p = physical(u);
    const ParamValues values = layout_.resolve(d, p);
    dataset_residuals(problem_.datasets[d], values,
                      std::span<double>(r.data() + offsets_[d], offsets_[d + 1] - offsets_[d]));
  }

  Eigen::VectorXd evaluate(const Eigen::VectorXd& u) const {
    Eigen::VectorXd r(static_cast<Eigen::Index>(points()));
    for (std::size_t d = 0; d < problem_.datasets.size(); ++d) evaluate_dataset(d, u, r);
    return r;
  }

  // Central differences; one-sided where a bound would be crossed. Only the
  // datasets that use unknown j are re-evaluated.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& u, const FitOptions& options) const {
    const auto n = static_cast<Eigen::Index>(points());
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, u.size());
    Eigen::VectorXd plus(n), minus(n), base(n);
    for (Eigen::Index j = 0; j < u.size(); ++j) {
      const Coordinate& c = coords_[static_cast<std::size_t>(j)];
      const double h =
          std::max(options.relative_step * std::max(std::abs(u[j]), 1.0), options.absolute_step_floor);
      const bool can_up = u[j] + h <= c.upper();
      const bool can_down = u[j] - h >= c.lower();
      for (const std::size_t d : layout_.users(static_cast<std::size_t>(j))) {
        const auto begin = static_cast<Eigen::Index>(offsets_[d]);
        const auto len = static_cast<Eigen::Index>(offsets_[d + 1] - offsets_[d]);
        Eigen::VectorXd up = u, down = u;
        double span = 0.0;
        if (can_up) { up[j] += h; span += h; }
        if (can_down) { down[j] -= h; span += h; }
        if (span == 0.0) continue;
        evaluate_dataset(d, up, plus);
        evaluate_dataset(d, down, minus);
        jac.block(begin, j, len, 1) = (plus.segment(begin, len) - minus.segment(begin, len)) / span;
      }
    }
    return jac;
  }

  void clamp(Eigen::VectorXd& u) const {
    for (Eigen::Index j = 0; j < u.size(); ++j) {
      const Coordinate& c = coords_[static_cast<std::size_t>(j)];
      u[j] = std::clamp(u[j], c.lower(), c.upper());
    }
  }

 private:
  const FitProblem& problem_;
  const ParameterLayout& layout_;
  std::vector<std::size_t> offsets_;
  std::vector<Coordinate> coords_;
};

Eigen::VectorXd solve_damped(const Eigen::MatrixXd& normal, const Eigen::VectorXd& gradient, double damping) {
  Eigen::MatrixXd m = normal;
  const double floor = std::max(normal.diagonal().maxCoeff(), 1.0) * 1e-15;
  for (Eigen::Index j = 0; j < m.rows(); ++j) m(j, j) += damping * std::max(normal(j, j), floor);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  if (ldlt.info() == Eigen::Success) {
    Eigen::VectorXd step = ldlt.solve(-gradient);
    if (step.allFinite()) return step;
  }
  return m.completeOrthogonalDecomposition().solve(-gradient);
}

}  // namespace

std::string_view param_name(Param p) {
  switch (p) {
    case Param::OmegaC: return "omega_c";
    case Param::Kappa: return "kappa";
    case Param::KappaExt: return "kappa_ext";
    case Param::OmegaM: return "omega_m";
    case Param::GammaM: return "gamma_m";
    case Param::G0: return "g0";
    case Param::NCav: return "n_cav";
  }
  return "?";
}

Param parse_param(std::string_view name) {
  for (const Param p : kAllParams)
    if (param_name(p) == name) return p;
  throw ConfigError("unknown fit parameter '" + std::string(name) + "'");
}

bool is_log_param(Param p) {
  return p == Param::Kappa || p == Param::GammaM || p == Param::G0 || p == Param::NCav;
}

bool is_frequency(Param p) { return p != Param::NCav; }

std::string_view mode_name(BindingMode mode) {
  switch (mode) {
    case BindingMode::Fixed: return "fixed";
    case BindingMode::Free: return "free";
    case BindingMode::Shared: return "shared";
  }
  return "?";
}

std::size_t FitDataset::points() const {
  std::size_t n = 0;
  for (const auto& seg : segments) n += seg.size();
  return n;
}

std::size_t FitProblem::points() const {
  std::size_t n = 0;
  for (const auto& ds : datasets) n += ds.points();
  return n;
}

std::array<Binding, kParamCount> fixed_bindings(const CavityParams& cav, const MechanicalParams& mech,
                                                double n_cav) {
  return {Binding::fixed(cav.omega_c), Binding::fixed(cav.kappa),   Binding::fixed(cav.kappa_ext),
          Binding::fixed(mech.omega_m), Binding::fixed(mech.gamma_m), Binding::fixed(mech.g0),
          Binding::fixed(n_cav)};
}

ParameterLayout::ParameterLayout(const FitProblem& problem) : problem_(&problem) {
  auto check_range = [](Param p, double init, double lo, double hi, const std::string& who) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
      throw ConfigError(who + ": bounds must be finite with lo < hi");
    if (!(init >= lo && init <= hi)) throw ConfigError(who + ": initial value outside bounds");
    if (is_log_param(p) && !(lo > 0.0)) throw ConfigError(who + ": lower bound must be positive");
  };

  std::map<std::string, Param> group_param;
  for (std::size_t d = 0; d < problem.datasets.size(); ++d) {
    const FitDataset& ds = problem.datasets[d];
    if (ds.segments.empty()) throw ConfigError("dataset '" + ds.name + "' has no data");
    if (!ds.weights.empty() && ds.weights.size() != ds.points())
      throw ConfigError("dataset '" + ds.name + "': weight count does not match point count");
    for (const auto& seg : ds.segments) seg.validate();
    for (const Param p : kAllParams) {
      const Binding& b = ds.binding(p);
      const std::string who = "dataset '" + ds.name + "' " + std::string(param_name(p));
      if (b.mode == BindingMode::Fixed && !std::isfinite(b.init)) throw ConfigError(who + ": fixed value not finite");
      if (b.mode == BindingMode::Free) check_range(p, b.init, b.lo, b.hi, who);
      if (b.mode == BindingMode::Shared) {
        if (!problem.shared.contains(b.group)) throw ConfigError(who + ": unknown shared group '" + b.group + "'");
        const auto [it, inserted] = group_param.emplace(b.group, p);
        if (!inserted && it->second != p)
          throw ConfigError("shared group '" + b.group + "' is bound to more than one parameter");
      }
    }
  }

  std::map<std::string, std::size_t> group_index;
  for (const auto& [group, param] : group_param) {
    const SharedParameter& s = problem.shared.at(group);
    check_range(param, s.init, s.lo, s.hi, "shared group '" + group + "'");
    group_index[group] = unknowns_.size();
    unknowns_.push_back({param, BindingMode::Shared, group, std::nullopt, s.init, s.lo, s.hi});
  }

  index_.resize(problem.datasets.size());
  for (std::size_t d = 0; d < problem.datasets.size(); ++d) {
    for (const Param p : kAllParams) {
      const Binding& b = problem.datasets[d].binding(p);
      std::size_t& idx = index_[d][slot(p)];
      idx = kNone;
      if (b.mode == BindingMode::Shared) {
        idx = group_index.at(b.group);
      } else if (b.mode == BindingMode::Free) {
        idx = unknowns_.size();
        unknowns_.push_back({p, BindingMode::Free, {}, d, b.init, b.lo, b.hi});
      }
    }
  }

  users_.resize(unknowns_.size());
  for (std::size_t d = 0; d < index_.size(); ++d)
    for (const std::size_t idx : index_[d])
      if (idx != kNone && (users_[idx].empty() || users_[idx].back() != d)) users_[idx].push_back(d);
}

std::vector<double> ParameterLayout::initial() const {
  std::vector<double> out;
  out.reserve(unknowns_.size());
  for (const auto& u : unknowns_) out.push_back(u.init);
  return out;
}

ParamValues ParameterLayout::resolve(std::size_t dataset, std::span<const double> values) const {
  ParamValues out{};
  const FitDataset& ds = problem_->datasets[dataset];
  for (const Param p : kAllParams) {
    const std::size_t idx = index_[dataset][slot(p)];
    out[slot(p)] = idx == kNone ? ds.binding(p).init : values[idx];
  }
  return out;
}

std::vector<double> residuals(const FitProblem& problem, std::span<const double> params) {
  const ParameterLayout layout(problem);
  if (params.size() != layout.size()) throw ConfigError("parameter vector length does not match the problem");
  std::vector<double> out(problem.points());
  std::size_t offset = 0;
  for (std::size_t d = 0; d < problem.datasets.size(); ++d) {
    const std::size_t n = problem.datasets[d].points();
    dataset_residuals(problem.datasets[d], layout.resolve(d, params), std::span<double>(out.data() + offset, n));
    offset += n;
  }
  return out;
}

double FitResult::uncertainty(std::size_t dataset, Param p) const {
  const std::size_t idx = index_[dataset][slot(p)];
  return idx == kNone ? 0.0 : parameters[idx].uncertainty;
}

const FittedParameter* FitResult::shared(const std::string& group) const {
  for (const auto& p : parameters)
    if (p.mode == BindingMode::Shared && p.group == group) return &p;
  return nullptr;
}

FitResult fit(const FitProblem& problem, const FitOptions& options) {
  const ParameterLayout layout(problem);
  const Objective objective(problem, layout);
  const auto n_params = static_cast<Eigen::Index>(layout.size());
  const std::size_t n_points = objective.points();
  if (n_points == 0) throw InsufficientData("fit has no data points");
  if (n_points < layout.size())
    throw InsufficientData("fit needs at least as many points (" + std::to_string(n_points) +
                           ") as free parameters (" + std::to_string(layout.size()) + ")");

  Eigen::VectorXd u(n_params);
  {
    const std::vector<double> init = layout.initial();
    for (Eigen::Index j = 0; j < n_params; ++j)
      u[j] = objective.coords()[static_cast<std::size_t>(j)].to_internal(init[static_cast<std::size_t>(j)]);
  }
  Eigen::VectorXd r = objective.evaluate(u);
  double ssr = r.squaredNorm();

  FitResult result;
  result.accepted_objective.push_back(ssr);
  double damping = options.initial_damping;

  Eigen::MatrixXd jac;
  bool jac_current = false;
  while (n_params > 0 && result.iterations < options.max_iterations && !result.converged) {
    ++result.iterations;
    jac = objective.jacobian(u, options);
    jac_current = true;
    const Eigen::MatrixXd normal = jac.transpose() * jac;
    const Eigen::VectorXd gradient = jac.transpose() * r;
    if (ssr == 0.0) {
      result.converged = true;
      break;
    }

    for (int attempt = 0; attempt < 60; ++attempt) {
      Eigen::VectorXd trial = u + solve_damped(normal, gradient, damping);
      objective.clamp(trial);
      const double step = (trial - u).norm() / std::max(u.norm(), 1.0);
      if (step < options.tolerance) {
        result.converged = true;
        break;
      }
      Eigen::VectorXd r_trial = objective.evaluate(trial);
      const double ssr_trial = r_trial.squaredNorm();
      if (ssr_trial < ssr) {
        const double reduction = (std::sqrt(ssr) - std::sqrt(ssr_trial)) / std::sqrt(ssr);
        u = trial;
        r = std::move(r_trial);
        ssr = ssr_trial;
        result.accepted_objective.push_back(ssr);
        damping = std::max(damping / 10.0, 1e-12);
        jac_current = false;
        if (reduction < options.tolerance) result.converged = true;
        break;
      }
      damping *= 10.0;
    }
  }

  if (!jac_current && n_params > 0) jac = objective.jacobian(u, options);

  // Linearized covariance in internal coordinates, scaled by the reduced
  // residual variance, then mapped back through d(physical)/d(internal).
  std::vector<double> sigma(layout.size(), std::numeric_limits<double>::quiet_NaN());
  if (n_params > 0 && n_points > layout.size()) {
    const double variance = ssr / static_cast<double>(n_points - layout.size());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jac.transpose() * jac);
    const Eigen::VectorXd& ev = eig.eigenvalues();
    if (eig.info() == Eigen::Success && ev.minCoeff() > ev.maxCoeff() * 1e-14 && ev.minCoeff() > 0.0) {
      const Eigen::MatrixXd cov =
          eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose() * variance;
      for (Eigen::Index j = 0; j < n_params; ++j)
        sigma[static_cast<std::size_t>(j)] =
            std::sqrt(cov(j, j)) * objective.coords()[static_cast<std::size_t>(j)].scale(u[j]);
    }
  }

  const std::vector<double> values = objective.physical(u);
  for (std::size_t j = 0; j < layout.size(); ++j) {
    const auto& unk = layout.unknowns()[j];
    result.parameters.push_back({unk.param, unk.mode, unk.group, unk.dataset, values[j], sigma[j]});
  }
  for (std::size_t d = 0; d < problem.datasets.size(); ++d) result.dataset_values.push_back(layout.resolve(d, values));

  result.index_.resize(problem.datasets.size());
  for (std::size_t d = 0; d < problem.datasets.size(); ++d) {
    for (const Param p : kAllParams) result.index_[d][slot(p)] = kNone;
  }
  for (std::size_t j = 0; j < layout.size(); ++j) {
    const auto& unk = layout.unknowns()[j];
    for (const std::size_t d : layout.users(j)) result.index_[d][slot(unk.param)] = j;
  }

  result.final_residuals.assign(r.data(), r.data() + r.size());
  result.rms_residual = n_points > 0 ? std::sqrt(ssr / static_cast<double>(n_points)) : 0.0;
  return result;
}

}  // namespace omit::fit
