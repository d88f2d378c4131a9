#include <doctest.h>

#include "fixtures.hpp"
#include "omit/errors.hpp"
#include "omit/model.hpp"
#include "omit/units.hpp"

using namespace omit;
using fixtures::rel;

// Reference values below were computed once with 40-digit arithmetic straight
// from the susceptibility expressions and frozen here.

TEST_CASE("bare cavity notch") {
  const auto cav = fixtures::cavity(100.0);
  const auto mech = fixtures::mechanics();
  const Complex s = probe_transmission(0.0, 0.0, 0.0, PumpScheme::Red, cav, mech);
  CHECK(std::abs(s.real() - 0.56) < 1e-12);
  CHECK(std::abs(s.imag()) < 1e-12);

  // Far off resonance the notch disappears.
  const Complex far = probe_transmission(to_angular(50e6), 0.0, 0.0, PumpScheme::Red, cav, mech);
  CHECK(std::abs(far) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("cavity susceptibility") {
  const double kappa = to_angular(84e3);
  const Complex chi = cavity_susceptibility(to_angular(3.8e6 + 1000.0), to_angular(-3.8e6), kappa);
  CHECK(rel(chi.real(), 3.7872564361810788e-6) < 1e-9);
  CHECK(rel(chi.imag(), 9.0172772290025686e-8) < 1e-6);
}

TEST_CASE("mechanical susceptibility peaks on the sideband") {
  const auto mech = fixtures::mechanics();
  const Complex red = mechanical_susceptibility(mech.omega_m, mech, PumpScheme::Red);
  const Complex blue = mechanical_susceptibility(-mech.omega_m, mech, PumpScheme::Blue);
  CHECK(red.real() == doctest::Approx(2.0 / mech.gamma_m));
  CHECK(blue.real() == doctest::Approx(2.0 / mech.gamma_m));
  CHECK(red.imag() == 0.0);
}

TEST_CASE("red pumping, off-peak complex values") {
  const auto cav = fixtures::cavity(84.0);
  const auto mech = fixtures::mechanics();
  const double n = 1.3e6, delta = -mech.omega_m;
  struct Point {
    double offset_hz, re, im;
  };
  for (const Point p : {Point{10.0, 0.69608856955098611, 0.12667922015556034},
                        Point{-25.0, 0.57133207390426683, -0.13704401680308966},
                        Point{1000.0, 0.47633351228149584, -0.0073849427783146402}}) {
    const Complex s = probe_transmission(mech.omega_m + to_angular(p.offset_hz), delta, n, PumpScheme::Red, cav, mech);
    CAPTURE(p.offset_hz);
    CHECK(std::abs(s - Complex(p.re, p.im)) < 1e-9);
  }

  // Pump detuned 20 kHz from the sideband.
  const Complex s = probe_transmission(mech.omega_m, delta + to_angular(20e3), n, PumpScheme::Red, cav, mech);
  CHECK(std::abs(s - Complex(0.77887035766077543, -0.046411198219294576)) < 1e-9);
}

TEST_CASE("blue pumping, off-peak complex value") {
  const auto cav = fixtures::cavity(83.0);
  const auto mech = fixtures::mechanics();
  const Complex s =
      probe_transmission(-mech.omega_m + to_angular(5.0), mech.omega_m, 3.4e5, PumpScheme::Blue, cav, mech);
  CHECK(std::abs(s - Complex(0.33373623327052452, -0.13411636223920941)) < 1e-9);
}

TEST_CASE("photon number from input power") {
  const auto cav = fixtures::cavity(100.0);
  const auto mech = fixtures::mechanics();
  const double delta = -mech.omega_m;

  CHECK(rel(photon_number_from_power(2.130468195686982e-8, delta, cav), 1.3e6) < 1e-9);
  CHECK(photon_number_from_power(0.0, delta, cav) == 0.0);

  // Same power on resonance: ratio of |chi_c|^2 = 1 + (Omega_m / (kappa/2))^2 = 1 + 76^2.
  // The pump frequency also enters through hbar omega_d.
  const double p = 1e-9;
  const double ratio = photon_number_from_power(p, 0.0, cav) / photon_number_from_power(p, delta, cav);
  const double hbar_omega_ratio = (cav.omega_c + delta) / cav.omega_c;
  CHECK(rel(ratio, 5777.0 * hbar_omega_ratio) < 1e-12);

  const auto cav84 = fixtures::cavity(84.0);
  CHECK(rel(photon_number_from_power(1e-8, delta, cav84), 610225.60905922047) < 1e-9);

  const double n = 123456.0;
  CHECK(rel(photon_number_from_power(power_from_photon_number(n, delta, cav), delta, cav), n) < 1e-14);
}

TEST_CASE("cooperativity and effective linewidth") {
  const auto mech = fixtures::mechanics();
  const double c_red = cooperativity(mech.g0, 1.3e6, to_angular(84e3), mech.gamma_m);
  const double c_blue = cooperativity(mech.g0, 3.4e5, to_angular(83e3), mech.gamma_m);
  // 4 g0^2 n / (kappa Gamma_m) in Hz units: 4 * 0.56^2 * 1.3e6 / (84e3 * 15.3)
  CHECK(rel(c_red, 1.268845315904139) < 1e-12);
  CHECK(rel(c_blue, 0.3358500669344043) < 1e-12);

  CHECK(effective_linewidth(mech, 1.0, PumpScheme::Red) == doctest::Approx(2.0 * mech.gamma_m));
  CHECK(effective_linewidth(mech, 0.25, PumpScheme::Blue) == doctest::Approx(0.75 * mech.gamma_m));
  CHECK(instability_check(mech, 0.99, PumpScheme::Blue) == Stability::Stable);
  CHECK(instability_check(mech, 1.0, PumpScheme::Blue) == Stability::Unstable);
  CHECK(instability_check(mech, 5.0, PumpScheme::Red) == Stability::Stable);
}

TEST_CASE("on-sideband peak and dip closed forms") {
  const auto mech = fixtures::mechanics();
  for (const double kappa_khz : {84.0, 100.0}) {
    const auto cav = fixtures::cavity(kappa_khz);
    for (const double c : {0.1, 0.5, 1.269, 3.0}) {
      const double n = fixtures::photons_for(c, cav, mech);
      const double peak = std::abs(probe_transmission(mech.omega_m, -mech.omega_m, n, PumpScheme::Red, cav, mech));
      CHECK(rel(peak, 1.0 - (cav.kappa_ext / cav.kappa) / (1.0 + c)) < 1e-10);
    }
    for (const double c : {0.1, 0.336, 0.9}) {
      const double n = fixtures::photons_for(c, cav, mech);
      const double dip = std::abs(probe_transmission(-mech.omega_m, mech.omega_m, n, PumpScheme::Blue, cav, mech));
      CHECK(rel(dip, std::abs(1.0 - (cav.kappa_ext / cav.kappa) / (1.0 - c))) < 1e-10);
    }
  }
}

TEST_CASE("parametric instability raises SingularDenominator") {
  const auto cav = fixtures::cavity(84.0);
  const auto mech = fixtures::mechanics();
  const double n_over = fixtures::photons_for(1.01, cav, mech);
  const double n_under = fixtures::photons_for(0.99, cav, mech);

  CHECK(pole_growth_rate(mech.omega_m, n_over, PumpScheme::Blue, cav, mech) > 0.0);
  CHECK(pole_growth_rate(mech.omega_m, n_under, PumpScheme::Blue, cav, mech) < 0.0);
  CHECK(pole_growth_rate(-mech.omega_m, 1e9, PumpScheme::Red, cav, mech) < 0.0);

  CHECK_THROWS_AS(probe_transmission(-mech.omega_m, mech.omega_m, n_over, PumpScheme::Blue, cav, mech),
                  SingularDenominator);
  // Any probe point is refused once the mode is unstable, not only the peak.
  CHECK_THROWS_AS(probe_transmission(-mech.omega_m + to_angular(500.0), mech.omega_m, n_over, PumpScheme::Blue, cav,
                                     mech),
                  SingularDenominator);
  CHECK_NOTHROW(probe_transmission(-mech.omega_m, mech.omega_m, n_under, PumpScheme::Blue, cav, mech));

  try {
    probe_transmission(-mech.omega_m, mech.omega_m, n_over, PumpScheme::Blue, cav, mech);
  } catch (const SingularDenominator& e) {
    CHECK(e.probe_offset() == -mech.omega_m);
    CHECK(e.delta() == mech.omega_m);
  }
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS((CavityParams{1.0, 1.0, 2.0}.validate()), ConfigError);
  CHECK_THROWS_AS((CavityParams{1.0, -1.0, 0.5}.validate()), ConfigError);
  CHECK_NOTHROW(fixtures::cavity().validate());
  CHECK_THROWS_AS((MechanicalParams{1.0, 0.0, 1.0}.validate()), ConfigError);
  CHECK_NOTHROW(fixtures::mechanics().validate());
  CHECK(fixtures::mechanics().sideband_resolved(fixtures::cavity()));

  CHECK(parse_scheme("Red") == PumpScheme::Red);
  CHECK(parse_scheme("blue") == PumpScheme::Blue);
  CHECK_THROWS_AS(parse_scheme("green"), ConfigError);
  CHECK(to_string(PumpScheme::Blue) == "blue");
}

TEST_CASE("unit conversion") {
  CHECK(to_angular(1.0) == doctest::Approx(2.0 * 3.14159265358979323846));
  CHECK(to_hz(to_angular(6e9)) == doctest::Approx(6e9).epsilon(1e-15));
}
