#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include "jjfab/errors.hpp"
#include "jjfab/geometry.hpp"

using namespace jjfab;
using namespace jjfab::geometry;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double nonuniformity_at(double throw_mm, double tilt, double step = 1.0) {
  SourceGeometry src;
  src.throw_distance_mm = throw_mm;
  src.tilt_alpha_deg = tilt;
  return nonuniformity(thickness_map(src, {}, step));
}

}  // namespace

TEST_CASE("local_flux is normalized at the wafer center") {
  for (double tilt : {0.0, 15.0, 30.0, 60.0, 80.0}) {
    for (double n : {0.0, 1.0, 3.0}) {
      SourceGeometry src;
      src.tilt_alpha_deg = tilt;
      src.emission_exponent = n;
      const auto f = local_flux(src, {}, {0.0, 0.0});
      CHECK(f.relative_rate == 1.0);
      CHECK(f.incidence_angle_deg == doctest::Approx(tilt).epsilon(1e-12));
    }
  }
}

TEST_CASE("local_flux at the wafer edge matches closed-form trigonometry") {
  SourceGeometry src;  // throw 1200 mm, n = 1, tilt 0
  const auto f = local_flux(src, {}, {50.0, 0.0});
  const double r2 = 1200.0 * 1200.0 + 50.0 * 50.0;
  const double cos_t = 1200.0 / std::sqrt(r2);
  // cos(theta_e) * cos(theta_i) / r^2, normalized by 1 / L^2.
  const double expected = cos_t * cos_t * (1200.0 * 1200.0) / r2;
  CHECK(f.incidence_angle_deg == doctest::Approx(std::atan(50.0 / 1200.0) / kDeg).epsilon(1e-12));
  CHECK(f.incidence_angle_deg == doctest::Approx(2.386).epsilon(1e-3));
  CHECK(f.relative_rate == doctest::Approx(expected).epsilon(1e-12));
  CHECK(f.relative_rate == doctest::Approx(0.9965).epsilon(1e-4));
}

TEST_CASE("local_flux rejects points off the wafer and rays behind it") {
  SourceGeometry src;
  CHECK_THROWS_AS(local_flux(src, {}, {60.0, 0.0}), DomainError);
  SourceGeometry grazing;
  grazing.throw_distance_mm = 40.0;
  grazing.tilt_alpha_deg = 89.0;
  CHECK_THROWS_AS(local_flux(grazing, {}, {-50.0, 0.0}), ShadowedPointError);
}

TEST_CASE("source and wafer validation") {
  SourceGeometry bad;
  bad.throw_distance_mm = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.tilt_alpha_deg = 90.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.emission_exponent = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  WaferLayout w;
  w.chip_positions = {{70.0, 0.0}};
  CHECK_THROWS_AS(w.validate(), ConfigError);
}

TEST_CASE("thickness_map at zero tilt is invariant under a 90 degree rotation") {
  SourceGeometry src;
  const auto field = thickness_map(src, {}, 2.0);
  std::map<std::pair<long, long>, double> at;
  for (const auto& p : field.points) at[{std::lround(p.x_mm * 1000), std::lround(p.y_mm * 1000)}] = p.value;
  for (const auto& p : field.points) {
    const auto it = at.find({std::lround(-p.y_mm * 1000), std::lround(p.x_mm * 1000)});
    REQUIRE(it != at.end());
    CHECK(std::abs(it->second - p.value) <= 1e-6 * p.value);
  }
}

TEST_CASE("tilted thickness map is mirror symmetric about the tilt axis") {
  SourceGeometry src;
  src.tilt_alpha_deg = 45.0;
  const auto field = thickness_map(src, {}, 2.0);
  std::map<std::pair<long, long>, double> at;
  for (const auto& p : field.points) at[{std::lround(p.x_mm * 1000), std::lround(p.y_mm * 1000)}] = p.value;
  for (const auto& p : field.points) {
    CHECK(at.at({std::lround(p.x_mm * 1000), std::lround(-p.y_mm * 1000)}) == doctest::Approx(p.value));
  }
}

TEST_CASE("thickness_map rejects a degenerate grid") {
  CHECK_THROWS_AS(thickness_map({}, {}, 0.0), ConfigError);
  CHECK_THROWS_AS(thickness_map({}, {}, 80.0), ConfigError);
}

TEST_CASE("nonuniformity formula") {
  const std::vector<double> flat{1.0, 1.0, 1.0};
  CHECK(nonuniformity(flat) == 0.0);
  const std::vector<double> two{0.93, 1.07};
  CHECK(nonuniformity(two) == doctest::Approx(0.07));
  CHECK_THROWS_AS(nonuniformity(std::vector<double>{}), DomainError);
  CHECK_THROWS_AS(nonuniformity(ScalarField{}), DomainError);
}

TEST_CASE("nonuniformity is monotone in tilt at fixed throw") {
  double prev = -1.0;
  for (double tilt : {0.0, 15.0, 30.0, 45.0, 60.0}) {
    const double u = nonuniformity_at(1200.0, tilt, 2.0);
    CHECK(u > prev);
    prev = u;
  }
  const double u0 = nonuniformity_at(1200.0, 0.0, 2.0);
  const double u30 = nonuniformity_at(1200.0, 30.0, 2.0);
  const double u60 = nonuniformity_at(1200.0, 60.0, 2.0);
  CHECK(u0 < u30);
  CHECK(u30 < u60);
}

TEST_CASE("calibrate_throw round-trips and orders targets") {
  const double l14 = calibrate_throw(0.14, 60.0);
  CHECK(std::abs(nonuniformity_at(l14, 60.0) - 0.14) <= 1e-3);
  const double l07 = calibrate_throw(0.07, 60.0);
  CHECK(l07 > l14);
  for (double target : {0.02, 0.1, 0.3}) {
    const double l = calibrate_throw(target, 60.0, {}, {}, 2.0);
    CHECK(std::abs(nonuniformity_at(l, 60.0, 2.0) - target) <= 1e-3);
  }
  CHECK_THROWS_AS(calibrate_throw(0.0, 60.0), CalibrationError);
  CHECK_THROWS_AS(calibrate_throw(0.9, 60.0), CalibrationError);
}

TEST_CASE("dolan_linewidth") {
  MaskStack mask;  // 500 + 100 nm
  CHECK(mask.total_height_nm() == 600.0);
  for (double a : {0.0, 12.0, 45.0}) {
    const auto w = dolan_linewidth(100.0, mask, a, a);
    CHECK(w.width_nm == 100.0);
    CHECK_FALSE(w.fully_shadowed);
  }
  const auto shrunk = dolan_linewidth(100.0, mask, 1.72, 0.0);
  CHECK(100.0 - shrunk.width_nm == doctest::Approx(600.0 * std::tan(1.72 * kDeg)));
  CHECK(100.0 - shrunk.width_nm == doctest::Approx(18.0).epsilon(0.01));
  const auto gone = dolan_linewidth(100.0, mask, 10.0, 0.0);
  CHECK(gone.width_nm == 0.0);
  CHECK(gone.fully_shadowed);
  CHECK(dolan_linewidth(100.0, mask, 30.0, 0.0).exceeds_undercut);
  // Continuity near the identity point.
  CHECK(dolan_linewidth(100.0, mask, 1e-9, 0.0).width_nm == doctest::Approx(100.0));
  CHECK_THROWS_AS(dolan_linewidth(0.0, mask, 0.0, 0.0), DomainError);
}

TEST_CASE("junction_area") {
  MaskStack mask;
  FluxSample center;
  CHECK(junction_area({150.0, 200.0}, center, center, mask) == doctest::Approx(30000.0));
  CHECK(junction_area({150.0, 600.0}, center, center, mask) == doctest::Approx(90000.0));
  FluxSample edge;
  edge.projected_x_deg = std::atan(18.0 / 600.0) / kDeg;  // 18 nm shrink
  CHECK(junction_area({100.0, 100.0}, edge, center, mask) == doctest::Approx(8200.0));
  FluxSample far;
  far.projected_x_deg = 20.0;
  CHECK_THROWS_AS(junction_area({100.0, 100.0}, far, center, mask), ZeroAreaError);
}

TEST_CASE("edge calibration gives an 18 percent shrink symmetric about the central line") {
  MaskStack mask;
  const double l = calibrate_edge_throw(0.18, 100.0, mask);
  SourceGeometry src;
  src.throw_distance_mm = l;
  const auto map = linewidth_map(src, {}, mask, 100.0, 0, 2.0);
  std::map<std::pair<long, long>, double> at;
  double min_w = 1e9;
  for (const auto& p : map.points) {
    at[{std::lround(p.x_mm * 1000), std::lround(p.y_mm * 1000)}] = p.value;
    min_w = std::min(min_w, p.value);
  }
  for (const auto& p : map.points) {
    CHECK(at.at({std::lround(-p.x_mm * 1000), std::lround(p.y_mm * 1000)}) == doctest::Approx(p.value));
  }
  CHECK(1.0 - min_w / 100.0 == doctest::Approx(0.18).epsilon(0.02));
  const auto edge = local_flux(src, {}, {50.0, 0.0});
  CHECK(dolan_linewidth(100.0, mask, edge.projected_x_deg, edge.design_x_deg).width_nm ==
        doctest::Approx(82.0).epsilon(1e-4));
}

TEST_CASE("linewidth_map rejects a bad axis") {
  CHECK_THROWS_AS(linewidth_map({}, {}, {}, 100.0, 2, 2.0), ConfigError);
}

TEST_CASE("junction design id") {
  CHECK(JunctionDesign{150.0, 200.0}.id() == "150x200");
  CHECK(JunctionDesign{100.5, 100.0}.id() == "100.5x100");
}
