#pragma once

// Damped nonlinear least squares on |S21| with per-dataset and shared
// (group) parameters. One Omega_m and Gamma_m per temperature group, cavity
// parameters per dataset, is the intended use.

#include <array>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "omit/model.hpp"
#include "omit/sweep.hpp"

namespace omit::fit {

enum class Param { OmegaC, Kappa, KappaExt, OmegaM, GammaM, G0, NCav };

inline constexpr std::size_t kParamCount = 7;
inline constexpr std::array<Param, kParamCount> kAllParams = {Param::OmegaC, Param::Kappa, Param::KappaExt,
                                                               Param::OmegaM, Param::GammaM, Param::G0,
                                                               Param::NCav};

std::string_view param_name(Param p);
/// Throws ConfigError for unknown names.
Param parse_param(std::string_view name);
/// Optimized in log coordinates: kappa, gamma_m, g0, n_cav.
bool is_log_param(Param p);
/// Angular frequency (everything except n_cav).
bool is_frequency(Param p);

enum class BindingMode { Fixed, Free, Shared };

std::string_view mode_name(BindingMode mode);

struct Binding {
  BindingMode mode = BindingMode::Fixed;
  double init = 0.0;  // the value itself when fixed
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  std::string group;  // shared only

  static Binding fixed(double value) { return {BindingMode::Fixed, value, value, value, {}}; }
  static Binding free(double init, double lo, double hi) { return {BindingMode::Free, init, lo, hi, {}}; }
  static Binding shared(std::string group) { return {BindingMode::Shared, 0.0, 0.0, 0.0, std::move(group)}; }
};

struct SharedParameter {
  double init = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

using ParamValues = std::array<double, kParamCount>;

struct FitDataset {
  std::string name;
  PumpScheme scheme = PumpScheme::Red;
  std::vector<sweep::SweepTrace> segments;
  std::array<Binding, kParamCount> bindings;
  std::vector<double> weights;  // per point, multiplies the residual; empty = all 1

  Binding& binding(Param p) { return bindings[static_cast<std::size_t>(p)]; }
  const Binding& binding(Param p) const { return bindings[static_cast<std::size_t>(p)]; }
  std::size_t points() const;
};

struct FitProblem {
  std::vector<FitDataset> datasets;
  std::map<std::string, SharedParameter> shared;

  std::size_t points() const;
};

/// Every dataset fixed at the given physical values (convenient starting point
/// for building a problem).
std::array<Binding, kParamCount> fixed_bindings(const CavityParams& cav, const MechanicalParams& mech,
                                                double n_cav);

/// Maps the free/shared unknowns of a problem onto a flat vector: shared
/// groups first (sorted by id), then free parameters dataset by dataset.
class ParameterLayout {
 public:
  struct Unknown {
    Param param;
    BindingMode mode;
    std::string group;                    // shared
    std::optional<std::size_t> dataset;   // free
    double init, lo, hi;
  };

  /// Validates bindings; throws ConfigError.
  explicit ParameterLayout(const FitProblem& problem);

  std::size_t size() const { return unknowns_.size(); }
  const std::vector<Unknown>& unknowns() const { return unknowns_; }
  std::vector<double> initial() const;
  /// Full parameter set of one dataset for a given unknown vector.
  ParamValues resolve(std::size_t dataset, std::span<const double> values) const;
  /// Datasets whose residuals depend on unknown j.
  const std::vector<std::size_t>& users(std::size_t j) const { return users_[j]; }

 private:
  const FitProblem* problem_;
  std::vector<Unknown> unknowns_;
  // per dataset, per param: index into unknowns_ or npos for fixed
  std::vector<std::array<std::size_t, kParamCount>> index_;
  std::vector<std::vector<std::size_t>> users_;
};

inline constexpr double kPenaltyResidual = 1e3;

/// weight_i * (|S21_model| - |S21_data|) for every point, datasets in order.
/// Points where the model is singular get kPenaltyResidual instead.
std::vector<double> residuals(const FitProblem& problem, std::span<const double> params);

struct FitOptions {
  std::size_t max_iterations = 200;
  double initial_damping = 1e-3;
  double tolerance = 1e-10;
  double relative_step = 1e-6;
  double absolute_step_floor = 1e-12;
};

struct FittedParameter {
  Param param;
  BindingMode mode;
  std::string group;
  std::optional<std::size_t> dataset;
  double value;
  double uncertainty;  // one sigma, NaN when not identifiable
};

struct FitResult {
  std::vector<FittedParameter> parameters;  // layout order
  std::vector<ParamValues> dataset_values;  // every parameter of every dataset
  std::vector<double> final_residuals;
  std::vector<double> accepted_objective;   // sum of squares after each accepted step, starting with the initial one
  double rms_residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;

  double value(std::size_t dataset, Param p) const { return dataset_values[dataset][static_cast<std::size_t>(p)]; }
  /// Uncertainty of whichever unknown feeds (dataset, p); 0 if fixed.
  double uncertainty(std::size_t dataset, Param p) const;
  const FittedParameter* shared(const std::string& group) const;

 private:
  friend FitResult fit(const FitProblem&, const FitOptions&);
  std::vector<std::array<std::size_t, kParamCount>> index_;
};

/// Levenberg-Marquardt with central-difference Jacobian, projection onto the
/// bounds and log coordinates for positive-definite parameters. Never throws
/// for lack of convergence: check FitResult::converged. Throws
/// InsufficientData when there are fewer points than unknowns.
FitResult fit(const FitProblem& problem, const FitOptions& options = {});

}  // namespace omit::fit
