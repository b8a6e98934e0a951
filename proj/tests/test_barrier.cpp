#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "jjfab/barrier.hpp"
#include "jjfab/errors.hpp"

using namespace jjfab;
using namespace jjfab::barrier;

namespace {

OxidationSpec ox(double p, double t, OxidationMethod m = OxidationMethod::dynamic_flow) {
  return OxidationSpec{.pressure_mbar = p, .time_s = t, .method = m};
}

}  // namespace

TEST_CASE("oxidation method names round-trip") {
  for (auto m : {OxidationMethod::static_fill, OxidationMethod::dynamic_flow}) {
    CHECK(parse_method(method_name(m)) == m);
  }
  CHECK(parse_method("static") == OxidationMethod::static_fill);
  CHECK(parse_method("dynamic") == OxidationMethod::dynamic_flow);
  CHECK_THROWS_AS(parse_method("pulsed"), ConfigError);
}

TEST_CASE("validation") {
  CHECK_THROWS_AS(ox(1e-5, 10).validate(), ConfigError);
  CHECK_THROWS_AS(ox(200.0, 10).validate(), ConfigError);
  CHECK_THROWS_AS(ox(0.1, 0.0).validate(), ConfigError);
  CHECK_NOTHROW(ox(1e-4, 1).validate());
  CHECK_NOTHROW(ox(100.0, 1).validate());
  BarrierModel m;
  m.lambda_nm = 0.0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = {};
  m.active_area_fraction = 1.5;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = {};
  m.jc_exponent = 0.0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
}

TEST_CASE("thickness and jc depend on exposure only") {
  const BarrierModel m;
  const std::vector<std::pair<double, double>> pairs{{0.1, 100}, {1.0, 10}, {0.01, 1000}, {10.0, 1}, {0.05, 200}};
  const double d_ref = barrier_thickness(ox(0.1, 100), m);
  const double j_ref = critical_current_density(ox(0.1, 100), m);
  for (auto [p, t] : pairs) {
    CHECK(barrier_thickness(ox(p, t), m) == doctest::Approx(d_ref).epsilon(1e-14));
    CHECK(critical_current_density(ox(p, t), m) == doctest::Approx(j_ref).epsilon(1e-14));
  }
  // Closed form at the example points.
  CHECK(d_ref == doctest::Approx(0.5 + 0.25 * std::log(1.0 + 10.0 / 0.1)));
}

TEST_CASE("thickness limits and monotonicity") {
  const BarrierModel m;
  CHECK(barrier_thickness(ox(1.0, 10.0), m) > barrier_thickness(ox(1.0, 1.0), m));
  CHECK(barrier_thickness(ox(1e-4, 1e-9), m) == doctest::Approx(m.d0_nm).epsilon(1e-9));
  double prev_d = 0.0, prev_j = 1e300;
  for (double e = 1e-3; e <= 1e4; e *= 3.0) {
    const double d = barrier_thickness(ox(1.0, e), m);
    const double j = critical_current_density(ox(1.0, e), m);
    CHECK(d > prev_d);
    CHECK(j < prev_j);
    prev_d = d;
    prev_j = j;
  }
}

TEST_CASE("jc power law") {
  BarrierModel m;
  for (double b : {0.3, 0.5, 0.9}) {
    m.jc_exponent = b;
    const double r = critical_current_density(ox(1.0, 100.0), m) / critical_current_density(ox(1.0, 10.0), m);
    CHECK(r == doctest::Approx(std::pow(10.0, -b)).epsilon(1e-13));
  }
  m.jc_exponent = 0.5;
  CHECK(critical_current_density(ox(0.4, 100.0), m) / critical_current_density(ox(0.1, 100.0), m) ==
        doctest::Approx(0.5).epsilon(1e-14));
  double prev = 1e300;
  for (double p : {0.001, 0.01, 0.1, 1.0, 10.0}) {
    const double j = critical_current_density(ox(p, 600.0), m);
    CHECK(j < prev);
    prev = j;
  }
}

TEST_CASE("zero exposure has no current density") {
  OxidationSpec s = ox(0.1, 10.0);
  s.time_s = 0.0;
  CHECK_THROWS_AS(critical_current_density(s, BarrierModel{}), DomainError);
}

TEST_CASE("dispersion") {
  const BarrierModel m;
  const auto none = barrier_dispersion(0.0, ox(0.05, 600), m);
  CHECK(none.sigma_d_nm == 0.0);
  CHECK(none.sigma_leak_rel == 0.0);
  CHECK(barrier_dispersion(2.0, ox(0.05, 600), m).sigma_d_nm == doctest::Approx(0.2));

  const auto lo = barrier_dispersion(1.0, ox(0.05, 600, OxidationMethod::static_fill), m);
  const auto hi = barrier_dispersion(1.0, ox(0.5, 600, OxidationMethod::static_fill), m);
  CHECK(lo.sigma_leak_rel > hi.sigma_leak_rel);
  CHECK(lo.sigma_leak_rel == doctest::Approx(0.001 / 0.05));
  CHECK(barrier_dispersion(1.0, ox(0.05, 600), m).sigma_leak_rel == 0.0);

  double prev = 1e300;
  for (double p : {1e-4, 1e-3, 0.01, 0.1, 1.0, 10.0, 100.0}) {
    CHECK(barrier_dispersion(1.0, ox(p, 60), m).sigma_leak_rel == 0.0);
    const double s = barrier_dispersion(1.0, ox(p, 60, OxidationMethod::static_fill), m).sigma_leak_rel;
    CHECK(s < prev);
    CHECK(s >= 0.0);
    prev = s;
  }
  CHECK_THROWS_AS(barrier_dispersion(-1.0, ox(0.05, 600), m), DomainError);
}

TEST_CASE("WKB attenuation length") {
  // hbar / (2 sqrt(2 m phi)) at 2 eV.
  const double hbar = 1.054571817e-34, me = 9.1093837015e-31, ev = 1.602176634e-19;
  const double expected = hbar / (2.0 * std::sqrt(2.0 * me * 2.0 * ev)) * 1e9;
  CHECK(wkb_attenuation_length_nm(2.0) == doctest::Approx(expected).epsilon(1e-6));
  CHECK(wkb_attenuation_length_nm(2.0) == doctest::Approx(BarrierModel{}.lambda_nm).epsilon(0.01));
  CHECK_THROWS_AS(wkb_attenuation_length_nm(0.0), DomainError);
}

TEST_CASE("calibrate_oxidation recovers exact power laws") {
  const double a = 3.3e-4, b = 0.62;
  std::vector<CalibrationPoint> pts;
  for (double e : {0.05, 0.3, 2.0, 11.0, 90.0}) pts.push_back({e, a * std::pow(e / 0.1, -b)});
  const auto fit = calibrate_oxidation(pts);
  CHECK(fit.jc_prefactor_a_per_um2 == doctest::Approx(a).epsilon(1e-9));
  CHECK(fit.jc_exponent == doctest::Approx(b).epsilon(1e-9));
  CHECK(fit.rms_log_residual < 1e-12);
  CHECK(fit.log_residuals.size() == pts.size());

  const std::vector<CalibrationPoint> two{{1.0, 2e-4}, {5.0, 7e-5}};
  const auto f2 = calibrate_oxidation(two);
  BarrierModel m;
  m.jc_prefactor_a_per_um2 = f2.jc_prefactor_a_per_um2;
  m.jc_exponent = f2.jc_exponent;
  CHECK(f2.rms_log_residual < 1e-12);
  CHECK(critical_current_density(ox(1.0, 1.0), m) == doctest::Approx(2e-4).epsilon(1e-12));
  CHECK(critical_current_density(ox(1.0, 5.0), m) == doctest::Approx(7e-5).epsilon(1e-12));
}

TEST_CASE("calibrate_oxidation with noise") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> noise(0.0, 0.05);
  const double a = 1.2e-4, b = 0.5;
  std::vector<CalibrationPoint> pts;
  for (int i = 0; i < 10; ++i) {
    const double e = 0.01 * std::pow(10.0, 0.4 * i);
    pts.push_back({e, a * std::pow(e / 0.1, -b) * (1.0 + noise(rng))});
  }
  const auto fit = calibrate_oxidation(pts);
  CHECK(std::abs(fit.jc_exponent - b) <= 0.1);
  BarrierModel m;
  m.jc_prefactor_a_per_um2 = fit.jc_prefactor_a_per_um2;
  m.jc_exponent = fit.jc_exponent;
  // Fitted law reproduces the inputs within the residuals it reports.
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double model_jc = critical_current_density(ox(1.0, pts[i].exposure_mbar_s), m);
    CHECK(std::log(pts[i].jc_a_per_um2 / model_jc) == doctest::Approx(fit.log_residuals[i]).epsilon(1e-9));
    CHECK(std::abs(fit.log_residuals[i]) <= 4.0 * fit.rms_log_residual);
  }
}

TEST_CASE("calibrate_oxidation errors") {
  const std::vector<CalibrationPoint> one{{1.0, 1e-4}};
  CHECK_THROWS_AS(calibrate_oxidation(one), FitError);
  const std::vector<CalibrationPoint> same{{1.0, 1e-4}, {1.0, 2e-4}};
  CHECK_THROWS_AS(calibrate_oxidation(same), FitError);
  const std::vector<CalibrationPoint> neg{{1.0, 1e-4}, {2.0, -2e-4}};
  CHECK_THROWS_AS(calibrate_oxidation(neg), FitError);
  const std::vector<CalibrationPoint> zero{{0.0, 1e-4}, {2.0, 2e-4}};
  CHECK_THROWS_AS(calibrate_oxidation(zero), FitError);
}
