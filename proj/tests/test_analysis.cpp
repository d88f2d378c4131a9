#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "omit/analysis.hpp"
#include "omit/errors.hpp"
#include "omit/sweep.hpp"

using namespace omit;
using namespace omit::sweep;
using fixtures::rel;

namespace {

SweepTrace sideband_trace(PumpScheme scheme, double c, double kappa_khz, std::size_t points) {
  const auto cav = fixtures::cavity(kappa_khz);
  const auto mech = fixtures::mechanics();
  const PumpConfig pump{scheme, sideband_detuning(scheme, mech.omega_m),
                        PhotonNumber{fixtures::photons_for(c, cav, mech)}};
  return simulate_line_cut(pump, cav, mech, sideband_grid(pump, cav, mech, 25.0, points));
}

}  // namespace

TEST_CASE("init heuristics: bare notch") {
  const auto cav = fixtures::cavity(100.0);
  const auto mech = fixtures::mechanics();
  // Pump far away and off; sweep the notch itself.
  const PumpConfig pump{PumpScheme::Red, -mech.omega_m, PhotonNumber{0.0}};
  const auto grid = linspace(mech.omega_m - 5.0 * cav.kappa, mech.omega_m + 5.0 * cav.kappa, 2001);
  const SweepTrace t = add_noise(simulate_line_cut(pump, cav, mech, grid), {1e-3, 9});
  const fit::InitialGuess g = fit::init_heuristics(t);
  REQUIRE(g.kappa.has_value());
  REQUIRE(g.omega_c.has_value());
  CHECK(rel(*g.kappa, cav.kappa) < 0.05);
  CHECK(std::abs(*g.omega_c - cav.omega_c) < 0.05 * cav.kappa);
}

TEST_CASE("init heuristics: OMIT feature centre") {
  const SweepTrace t = sideband_trace(PumpScheme::Red, 1.269, 84.0, 801);
  const fit::InitialGuess g = fit::init_heuristics(t);
  REQUIRE(g.feature_center.has_value());
  const double step = t.omega[1] - t.omega[0];
  CHECK(std::abs(*g.feature_center - fixtures::mechanics().omega_m) <= 2.0 * step);
}

TEST_CASE("init heuristics: flat trace") {
  SweepTrace t;
  t.omega = linspace(0.0, 1000.0, 200);
  t.s21.assign(200, Complex(0.9, 0.0));
  CHECK_THROWS_AS(fit::init_heuristics(t), FeatureNotFound);
  CHECK_THROWS_AS(fit::init_heuristics(add_noise(t, {1e-3, 3})), FeatureNotFound);
}

TEST_CASE("linewidth follows the backaction law") {
  const double gm = fixtures::mechanics().gamma_m;
  // Red C = 1.269 at kappa = 84 kHz: Gamma_eff / 2pi = 15.3 * 2.269 = 34.7 Hz.
  const double red = fit::extract_linewidth(sideband_trace(PumpScheme::Red, 1.268845315904139, 84.0, 10001));
  CHECK(rel(red, gm * (1.0 + 1.268845315904139)) < 0.02);
  // Frozen numeric width of the same 10001-point trace.
  CHECK(rel(to_hz(red), 34.676) < 3e-4);

  const double blue = fit::extract_linewidth(sideband_trace(PumpScheme::Blue, 0.3358500669344043, 83.0, 10001));
  CHECK(rel(blue, gm * (1.0 - 0.3358500669344043)) < 0.02);
  CHECK(rel(to_hz(blue), 10.158) < 3e-4);
}

TEST_CASE("linewidth failures") {
  // Pump off: no mechanical feature.
  CHECK_THROWS_AS(fit::extract_linewidth(sideband_trace(PumpScheme::Red, 0.0, 84.0, 2001)), FeatureNotFound);
  // 101 points over 50 linewidths leaves ~2 samples inside the FWHM.
  CHECK_THROWS_AS(fit::extract_linewidth(sideband_trace(PumpScheme::Red, 1.0, 84.0, 101)), UnderResolved);
}

TEST_CASE("noise estimate") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 0.02);
  std::vector<double> v(5000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(double(i) * 1e-3) + g(rng);
  CHECK(fit::noise_estimate(v) == doctest::Approx(0.02).epsilon(0.05));
  CHECK(fit::noise_estimate(std::vector<double>(50, 1.0)) == 0.0);
}
