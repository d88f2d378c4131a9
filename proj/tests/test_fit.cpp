#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "omit/errors.hpp"
#include "omit/fit.hpp"
#include "omit/sweep.hpp"

using namespace omit;
using namespace omit::fit;
using fixtures::rel;

namespace {

constexpr double kRedPhotons = 1.3e6;

// Red protocol data: a few pump steps around the sideband so omega_c and
// kappa are both pinned by the cavity envelope.
std::vector<sweep::SweepTrace> red_steps(const CavityParams& cav, const MechanicalParams& mech, double noise,
                                         std::uint64_t seed) {
  sweep::ProtocolSettings s;
  s.pump_steps = 5;
  s.detuning_half_span_kappa = 1.0;
  s.points_per_sweep = 201;
  const sweep::ProtocolCondition c{PhotonNumber{kRedPhotons}, 250.0, -116.0, ""};
  auto traces = sweep::emulate_protocol(std::span(&c, 1), PumpScheme::Red, cav, mech, s);
  for (std::size_t i = 0; i < traces.size(); ++i) traces[i] = sweep::add_noise(traces[i], {noise, seed + i});
  return traces;
}

FitDataset single_dataset(const CavityParams& truth, const MechanicalParams& mech, const CavityParams& guess) {
  FitDataset ds;
  ds.name = "red";
  ds.segments = red_steps(truth, mech, 0.0, 1);
  ds.bindings = fixed_bindings(truth, mech, kRedPhotons);
  ds.binding(Param::OmegaC) = Binding::free(guess.omega_c, guess.omega_c - 3.0 * truth.kappa,
                                            guess.omega_c + 3.0 * truth.kappa);
  ds.binding(Param::Kappa) = Binding::free(guess.kappa, guess.kappa / 4.0, guess.kappa * 4.0);
  return ds;
}

}  // namespace

TEST_CASE("single dataset round trip") {
  const auto cav = fixtures::cavity(84.0);
  const auto mech = fixtures::mechanics();
  CavityParams guess = cav;
  guess.kappa *= 1.2;
  guess.omega_c += 0.2 * cav.kappa;

  FitProblem problem;
  problem.datasets.push_back(single_dataset(cav, mech, guess));
  const FitResult r = fit::fit(problem);
  CHECK(r.converged);
  CHECK(r.iterations <= 200);
  CHECK(rel(r.value(0, Param::Kappa), cav.kappa) < 1e-6);
  CHECK(std::abs(r.value(0, Param::OmegaC) - cav.omega_c) < 1e-6 * cav.kappa);
  CHECK(r.rms_residual < 1e-9);
  // Fixed parameters come back untouched.
  CHECK(r.value(0, Param::G0) == mech.g0);
  CHECK(r.uncertainty(0, Param::G0) == 0.0);
}

TEST_CASE("accepted objective never increases") {
  const auto cav = fixtures::cavity(84.0);
  const auto mech = fixtures::mechanics();
  CavityParams guess = cav;
  guess.kappa *= 0.7;
  guess.omega_c -= 0.3 * cav.kappa;
  FitProblem problem;
  problem.datasets.push_back(single_dataset(cav, mech, guess));
  problem.datasets[0].segments = red_steps(cav, mech, 0.01, 77);

  const FitResult r = fit::fit(problem);
  REQUIRE(r.accepted_objective.size() >= 2);
  for (std::size_t i = 1; i < r.accepted_objective.size(); ++i)
    CHECK(r.accepted_objective[i] <= r.accepted_objective[i - 1]);

  // With 1% noise the rms residual sits at the noise level and the reported
  // one-sigma uncertainty covers the actual error generously.
  CHECK(r.rms_residual == doctest::Approx(0.01).epsilon(0.1));
  const double sigma = r.uncertainty(0, Param::Kappa);
  CHECK(sigma > 0.0);
  CHECK(std::abs(r.value(0, Param::Kappa) - cav.kappa) < 5.0 * sigma);
}

TEST_CASE("shared parameters across datasets, order independent") {
  const auto mech = fixtures::mechanics();
  MechanicalParams hot = mech;
  hot.gamma_m = to_angular(20.0);
  hot.omega_m += to_angular(7.0);

  auto make = [&](const std::string& name, double kappa_khz, const MechanicalParams& m, const std::string& group,
                  std::uint64_t seed) {
    const auto cav = fixtures::cavity(kappa_khz);
    FitDataset ds;
    ds.name = name;
    ds.segments = red_steps(cav, m, 0.01, seed);
    ds.bindings = fixed_bindings(cav, mech, kRedPhotons);
    ds.binding(Param::OmegaC) = Binding::free(cav.omega_c + 1e4, cav.omega_c - 2 * cav.kappa, cav.omega_c + 2 * cav.kappa);
    ds.binding(Param::Kappa) = Binding::free(cav.kappa * 1.1, cav.kappa / 4, cav.kappa * 4);
    ds.binding(Param::GammaM) = Binding::shared("gamma_m@" + group);
    ds.binding(Param::OmegaM) = Binding::shared("omega_m@" + group);
    return ds;
  };

  FitProblem problem;
  problem.datasets = {make("a", 84.0, mech, "250", 10), make("b", 82.0, hot, "350", 20),
                      make("c", 83.0, mech, "250", 30)};
  for (const std::string g : {"250", "350"}) {
    problem.shared["gamma_m@" + g] = {mech.gamma_m, mech.gamma_m / 10, mech.gamma_m * 10};
    problem.shared["omega_m@" + g] = {mech.omega_m, mech.omega_m - 20 * mech.gamma_m,
                                      mech.omega_m + 20 * mech.gamma_m};
  }

  const FitResult r = fit::fit(problem);
  REQUIRE(r.converged);
  CHECK(rel(r.shared("gamma_m@250")->value, mech.gamma_m) < 0.05);
  CHECK(rel(r.shared("gamma_m@350")->value, hot.gamma_m) < 0.05);
  CHECK(std::abs(r.shared("omega_m@350")->value - hot.omega_m) < 0.1 * hot.gamma_m);
  // datasets a and c read the same shared value
  CHECK(r.value(0, Param::GammaM) == r.value(2, Param::GammaM));
  CHECK(r.shared("nope") == nullptr);

  FitProblem swapped = problem;
  std::swap(swapped.datasets[0], swapped.datasets[2]);
  std::swap(swapped.datasets[1], swapped.datasets[2]);  // c, a, b
  const FitResult s = fit::fit(swapped);
  for (const std::string g : {"gamma_m@250", "gamma_m@350", "omega_m@250", "omega_m@350"})
    CHECK(rel(s.shared(g)->value, r.shared(g)->value) < 1e-9);
  const std::size_t moved[] = {1, 2, 0};  // where a, b, c ended up
  for (std::size_t d = 0; d < 3; ++d) {
    CHECK(rel(s.value(moved[d], Param::Kappa), r.value(d, Param::Kappa)) < 1e-9);
    CHECK(std::abs(s.value(moved[d], Param::OmegaC) - r.value(d, Param::OmegaC)) < 1e-9 * r.value(d, Param::Kappa));
  }
}

TEST_CASE("layout orders shared groups first") {
  const auto cav = fixtures::cavity(84.0);
  const auto mech = fixtures::mechanics();
  FitProblem problem;
  FitDataset ds = single_dataset(cav, mech, cav);
  ds.binding(Param::GammaM) = Binding::shared("z");
  ds.binding(Param::OmegaM) = Binding::shared("a");
  problem.datasets.push_back(ds);
  problem.shared["z"] = {mech.gamma_m, 1.0, 1000.0};
  problem.shared["a"] = {mech.omega_m, mech.omega_m - 1000.0, mech.omega_m + 1000.0};

  const ParameterLayout layout(problem);
  REQUIRE(layout.size() == 4);
  CHECK(layout.unknowns()[0].group == "a");
  CHECK(layout.unknowns()[1].group == "z");
  CHECK(layout.unknowns()[2].param == Param::OmegaC);
  CHECK(layout.users(0) == std::vector<std::size_t>{0});
  const auto init = layout.initial();
  CHECK(layout.resolve(0, init)[static_cast<std::size_t>(Param::GammaM)] == mech.gamma_m);
}

TEST_CASE("invalid problems") {
  const auto cav = fixtures::cavity(84.0);
  const auto mech = fixtures::mechanics();

  FitProblem missing_group;
  missing_group.datasets.push_back(single_dataset(cav, mech, cav));
  missing_group.datasets[0].binding(Param::GammaM) = Binding::shared("gone");
  CHECK_THROWS_AS(fit::fit(missing_group), ConfigError);

  FitProblem outside;
  outside.datasets.push_back(single_dataset(cav, mech, cav));
  outside.datasets[0].binding(Param::Kappa) = Binding::free(cav.kappa, cav.kappa * 2, cav.kappa * 3);
  CHECK_THROWS_AS(fit::fit(outside), ConfigError);

  FitProblem tiny;
  tiny.datasets.push_back(single_dataset(cav, mech, cav));
  auto& seg = tiny.datasets[0].segments;
  seg.resize(1);
  seg[0].omega.resize(1);
  seg[0].s21.resize(1);
  CHECK_THROWS_AS(fit::fit(tiny), InsufficientData);

  FitProblem empty;
  CHECK_THROWS_AS(fit::fit(empty), InsufficientData);
}

TEST_CASE("residuals use penalty where the model is singular") {
  const auto cav = fixtures::cavity(84.0);
  const auto mech = fixtures::mechanics();
  FitProblem problem;
  FitDataset ds = single_dataset(cav, mech, cav);
  ds.scheme = PumpScheme::Blue;
  ds.binding(Param::NCav) = Binding::fixed(fixtures::photons_for(3.0, cav, mech));
  // mirror the pump above the cavity so the blue sideband is on resonance
  for (auto& s : ds.segments) s.meta.pump_omega = cav.omega_c + mech.omega_m;
  problem.datasets.push_back(ds);
  const ParameterLayout layout(problem);
  const auto r = residuals(problem, layout.initial());
  REQUIRE(!r.empty());
  CHECK(std::all_of(r.begin(), r.end(), [](double v) { return v == kPenaltyResidual; }));
}

TEST_CASE("names") {
  for (const Param p : kAllParams) CHECK(parse_param(param_name(p)) == p);
  CHECK_THROWS_AS(parse_param("kappa_int"), ConfigError);
  CHECK(is_log_param(Param::Kappa));
  CHECK(!is_log_param(Param::OmegaC));
  CHECK(!is_frequency(Param::NCav));
  CHECK(mode_name(BindingMode::Shared) == "shared");
}

TEST_CASE("residuals vanish at the generating parameters") {
  const auto cav = fixtures::cavity(84.0);
  const auto mech = fixtures::mechanics();
  FitProblem problem;
  problem.datasets.push_back(single_dataset(cav, mech, cav));
  const ParameterLayout layout(problem);
  // Delta is recovered as omega_d - omega_c from absolute frequencies, which
  // costs a few ulp of 2pi x 6 GHz.
  for (const double r : residuals(problem, layout.initial())) REQUIRE(std::abs(r) < 1e-10);
}

TEST_CASE("wrong kappa misfits most near the cavity resonance") {
  const auto cav = fixtures::cavity(100.0);
  const auto mech = fixtures::mechanics();
  const double pump = cav.omega_c - mech.omega_m;
  sweep::SweepTrace bare = sweep::simulate_line_cut({PumpScheme::Red, -mech.omega_m, PhotonNumber{0.0}}, cav, mech,
                                                    sweep::linspace(mech.omega_m - 5 * cav.kappa,
                                                                    mech.omega_m + 5 * cav.kappa, 501));
  FitProblem problem;
  FitDataset ds;
  ds.segments.push_back(bare);
  ds.bindings = fixed_bindings(cav, mech, 0.0);
  ds.binding(Param::Kappa) = Binding::free(2.0 * cav.kappa, cav.kappa / 4, cav.kappa * 4);
  problem.datasets.push_back(ds);
  const ParameterLayout layout(problem);
  const auto r = residuals(problem, layout.initial());
  const auto worst = std::max_element(r.begin(), r.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  const std::size_t k = static_cast<std::size_t>(worst - r.begin());
  CHECK(std::abs(*worst) > 0.1);
  CHECK(std::abs(pump + bare.omega[k] - cav.omega_c) < 0.1 * cav.kappa);
}

TEST_CASE("red and blue pair at one temperature, Monte Carlo") {
  const auto mech = fixtures::mechanics();
  const auto red_cav = fixtures::cavity(84.0);
  const auto blue_cav = fixtures::cavity(83.0);
  sweep::ProtocolSettings settings;
  settings.pump_steps = 11;
  settings.detuning_half_span_kappa = 1.0;

  int good = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    FitProblem problem;
    for (const PumpScheme scheme : {PumpScheme::Red, PumpScheme::Blue}) {
      const auto& cav = scheme == PumpScheme::Red ? red_cav : blue_cav;
      const double n = scheme == PumpScheme::Red ? 1.3e6 : 3.4e5;
      const sweep::ProtocolCondition c{PhotonNumber{n}, 250.0, -116.0, ""};
      FitDataset ds;
      ds.scheme = scheme;
      ds.segments = sweep::emulate_protocol(std::span(&c, 1), scheme, cav, mech, settings);
      for (std::size_t i = 0; i < ds.segments.size(); ++i)
        ds.segments[i] = sweep::add_noise(ds.segments[i], {0.01, seed * 1000 + i + (scheme == PumpScheme::Blue ? 500 : 0)});
      ds.bindings = fixed_bindings(cav, mech, n);
      // starting values: the design kappa and a cavity guess 10 kHz off
      const double k0 = fixtures::cavity(100.0).kappa, c0 = cav.omega_c + to_angular(10e3);
      ds.binding(Param::OmegaC) = Binding::free(c0, c0 - 2 * k0, c0 + 2 * k0);
      ds.binding(Param::Kappa) = Binding::free(k0, k0 / 4, k0 * 4);
      ds.binding(Param::OmegaM) = Binding::shared("omega_m");
      ds.binding(Param::GammaM) = Binding::shared("gamma_m");
      problem.datasets.push_back(std::move(ds));
    }
    problem.shared["omega_m"] = {mech.omega_m + to_angular(5.0), mech.omega_m - 20 * mech.gamma_m,
                                 mech.omega_m + 20 * mech.gamma_m};
    problem.shared["gamma_m"] = {1.5 * mech.gamma_m, mech.gamma_m / 10, mech.gamma_m * 10};

    const FitResult r = fit::fit(problem);
    const bool ok = r.converged && rel(r.value(0, Param::Kappa), red_cav.kappa) < 0.02 &&
                    rel(r.value(1, Param::Kappa), blue_cav.kappa) < 0.02 &&
                    rel(r.shared("gamma_m")->value, mech.gamma_m) < 0.05 &&
                    std::abs(r.shared("omega_m")->value - mech.omega_m) < 0.1 * mech.gamma_m;
    good += ok;

    // fitted values always honour the bounds (parameters come in layout order)
    const auto& u = ParameterLayout(problem).unknowns();
    REQUIRE(u.size() == r.parameters.size());
    for (std::size_t j = 0; j < u.size(); ++j) {
      CHECK(r.parameters[j].value >= u[j].lo);
      CHECK(r.parameters[j].value <= u[j].hi);
    }
  }
  CHECK(good >= 18);
}
