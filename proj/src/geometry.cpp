#include "jjfab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

#include "jjfab/errors.hpp"

namespace jjfab::geometry {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct Vec3 {
  double x, y, z;
};

double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

// Wafer frame expressed in world coordinates. e_u is the in-plane tilt
// direction, e_v the in-plane axis perpendicular to it, n the normal facing
// the source.
struct WaferFrame {
  Vec3 e_u, e_v, n;

  explicit WaferFrame(double tilt_deg) {
    const double c = std::cos(tilt_deg * kDeg);
    const double s = std::sin(tilt_deg * kDeg);
    e_u = {c, 0.0, s};
    e_v = {0.0, 1.0, 0.0};
    n = {s, 0.0, -c};
  }
};

struct RawFlux {
  double incidence_deg;
  double rate;  // un-normalized
  double proj_x_deg;
  double proj_y_deg;
};

RawFlux raw_flux(const SourceGeometry& src, const WaferFrame& f, Vec2 p) {
  const Vec3 point{p.x * f.e_u.x, p.y, p.x * f.e_u.z};
  const Vec3 source{src.source_offset_mm.x, src.source_offset_mm.y, -src.throw_distance_mm};
  const Vec3 d{point.x - source.x, point.y - source.y, point.z - source.z};
  const double r = std::sqrt(dot(d, d));
  const double cos_e = d.z / r;
  // Component of the travel direction going into the wafer.
  const double into = -dot(d, f.n);
  const double cos_i = into / r;
  if (cos_i <= 0.0 || cos_e <= 0.0) {
    throw ShadowedPointError(
        fmt::format("point ({:.3f}, {:.3f}) mm is not reached by the source", p.x, p.y));
  }
  const double rate = std::pow(cos_e, src.emission_exponent) * cos_i / (r * r);
  return RawFlux{
      .incidence_deg = std::acos(std::min(1.0, cos_i)) / kDeg,
      .rate = rate,
      .proj_x_deg = std::atan2(dot(d, f.e_u), into) / kDeg,
      .proj_y_deg = std::atan2(dot(d, f.e_v), into) / kDeg,
  };
}

// Grid coordinates on a centered lattice clipped to the disc.
template <class Fn>
void for_each_grid_point(const WaferLayout& wafer, double step, Fn&& fn) {
  const auto n = static_cast<long>(std::floor(wafer.radius_mm / step + 1e-9));
  const double r2 = wafer.radius_mm * wafer.radius_mm * (1.0 + 1e-12);
  for (long j = -n; j <= n; ++j) {
    for (long i = -n; i <= n; ++i) {
      const Vec2 p{static_cast<double>(i) * step, static_cast<double>(j) * step};
      if (p.x * p.x + p.y * p.y <= r2) fn(p);
    }
  }
}

template <class Fn>
double bisect_decreasing(Fn&& f, double target, ThrowBracket b, double tol) {
  // f is decreasing in the throw distance.
  double lo = b.lo_mm;
  double hi = b.hi_mm;
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double v = f(mid);
    if (std::abs(v - target) <= tol) break;
    if (v > target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-9) break;
  }
  return mid;
}

}  // namespace

void SourceGeometry::validate() const {
  if (!(throw_distance_mm > 0.0)) throw ConfigError("throw_distance_mm must be > 0");
  if (!(tilt_alpha_deg >= 0.0 && tilt_alpha_deg < 90.0))
    throw ConfigError("tilt_alpha_deg must be in [0, 90)");
  if (!(emission_exponent >= 0.0)) throw ConfigError("emission_exponent must be >= 0");
}

void WaferLayout::validate() const {
  if (!(radius_mm > 0.0)) throw ConfigError("wafer radius_mm must be > 0");
  for (const auto& c : chip_positions) {
    if (!contains(c))
      throw ConfigError(fmt::format("chip position ({}, {}) lies outside the wafer", c.x, c.y));
  }
}

bool WaferLayout::contains(Vec2 p) const {
  return p.x * p.x + p.y * p.y <= radius_mm * radius_mm * (1.0 + 1e-12);
}

void MaskStack::validate() const {
  if (!(copolymer_height_nm > 0.0 && imaging_resist_height_nm > 0.0 && undercut_nm > 0.0))
    throw ConfigError("mask heights and undercut must be > 0");
  if (!(bridge_width_nm > 0.0)) throw ConfigError("bridge_width_nm must be > 0");
}

std::string JunctionDesign::id() const { return fmt::format("{:g}x{:g}", width_nm, length_nm); }

FluxSample local_flux(const SourceGeometry& src, const WaferLayout& wafer, Vec2 point_mm) {
  src.validate();
  if (!wafer.contains(point_mm)) {
    throw DomainError(fmt::format("point ({}, {}) mm is outside the {} mm wafer", point_mm.x,
                                  point_mm.y, wafer.radius_mm));
  }
  const WaferFrame frame(src.tilt_alpha_deg);
  const RawFlux center = raw_flux(src, frame, {});
  const RawFlux here = raw_flux(src, frame, point_mm);
  return FluxSample{
      .incidence_angle_deg = here.incidence_deg,
      .relative_rate = here.rate / center.rate,
      .projected_x_deg = here.proj_x_deg,
      .projected_y_deg = here.proj_y_deg,
      .design_x_deg = center.proj_x_deg,
      .design_y_deg = center.proj_y_deg,
  };
}

ScalarField thickness_map(const SourceGeometry& src, const WaferLayout& wafer, double grid_step_mm) {
  src.validate();
  wafer.validate();
  if (!(grid_step_mm > 0.0)) throw ConfigError("grid_step_mm must be > 0");
  const WaferFrame frame(src.tilt_alpha_deg);
  const double norm = raw_flux(src, frame, {}).rate;
  ScalarField field{.step_mm = grid_step_mm, .points = {}};
  for_each_grid_point(wafer, grid_step_mm, [&](Vec2 p) {
    field.points.push_back({p.x, p.y, raw_flux(src, frame, p).rate / norm});
  });
  if (field.points.size() < 2) throw ConfigError("grid has no interior points; reduce grid_step_mm");
  return field;
}

double nonuniformity(std::span<const double> values) {
  if (values.empty()) throw DomainError("nonuniformity of an empty field");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (!(*lo > 0.0)) throw DomainError("nonuniformity requires strictly positive values");
  return (*hi - *lo) / (*hi + *lo);
}

double nonuniformity(const ScalarField& field) {
  std::vector<double> v;
  v.reserve(field.points.size());
  for (const auto& p : field.points) v.push_back(p.value);
  return nonuniformity(v);
}

Linewidth dolan_linewidth(double nominal_w_nm, const MaskStack& mask, double local_angle_deg,
                          double design_angle_deg) {
  if (!(nominal_w_nm > 0.0)) throw DomainError("nominal width must be > 0");
  if (local_angle_deg == design_angle_deg) return Linewidth{nominal_w_nm, false, false};
  const double shift = mask.total_height_nm() *
                       std::abs(std::tan(local_angle_deg * kDeg) - std::tan(design_angle_deg * kDeg));
  const double w = nominal_w_nm - shift;
  return Linewidth{
      .width_nm = std::max(0.0, w),
      .fully_shadowed = w <= 0.0,
      .exceeds_undercut = shift > mask.undercut_nm,
  };
}

double junction_area(const JunctionDesign& design, const FluxSample& bottom_flux,
                     const FluxSample& top_flux, const MaskStack& mask) {
  const Linewidth wb =
      dolan_linewidth(design.width_nm, mask, bottom_flux.projected_x_deg, bottom_flux.design_x_deg);
  const Linewidth wt =
      dolan_linewidth(design.length_nm, mask, top_flux.projected_y_deg, top_flux.design_y_deg);
  if (wb.fully_shadowed || wt.fully_shadowed) {
    throw ZeroAreaError(fmt::format("junction {} fully shadowed (widths {:.3f} x {:.3f} nm)",
                                    design.id(), wb.width_nm, wt.width_nm));
  }
  return wb.width_nm * wt.width_nm;
}

ScalarField linewidth_map(const SourceGeometry& src, const WaferLayout& wafer, const MaskStack& mask,
                          double nominal_w_nm, int axis, double grid_step_mm) {
  src.validate();
  wafer.validate();
  mask.validate();
  if (!(grid_step_mm > 0.0)) throw ConfigError("grid_step_mm must be > 0");
  if (axis != 0 && axis != 1) throw ConfigError("linewidth axis must be 0 (x) or 1 (y)");
  const WaferFrame frame(src.tilt_alpha_deg);
  const RawFlux center = raw_flux(src, frame, {});
  const double design = axis == 0 ? center.proj_x_deg : center.proj_y_deg;
  ScalarField field{.step_mm = grid_step_mm, .points = {}};
  for_each_grid_point(wafer, grid_step_mm, [&](Vec2 p) {
    const RawFlux f = raw_flux(src, frame, p);
    const double local = axis == 0 ? f.proj_x_deg : f.proj_y_deg;
    field.points.push_back({p.x, p.y, dolan_linewidth(nominal_w_nm, mask, local, design).width_nm});
  });
  return field;
}

double calibrate_throw(double target_nonuniformity, double tilt_deg, const SourceGeometry& base,
                       const WaferLayout& wafer, double grid_step_mm, ThrowBracket bracket) {
  if (!(target_nonuniformity > 0.0 && target_nonuniformity < 1.0))
    throw CalibrationError("target nonuniformity must lie in (0, 1)");
  if (!(tilt_deg >= 0.0 && tilt_deg < 90.0)) throw CalibrationError("tilt must lie in [0, 90)");
  auto at = [&](double throw_mm) {
    SourceGeometry s = base;
    s.throw_distance_mm = throw_mm;
    s.tilt_alpha_deg = tilt_deg;
    return nonuniformity(thickness_map(s, wafer, grid_step_mm));
  };
  const double hi_val = at(bracket.lo_mm);
  const double lo_val = at(bracket.hi_mm);
  if (target_nonuniformity > hi_val || target_nonuniformity < lo_val) {
    throw CalibrationError(fmt::format(
        "nonuniformity {:.4f} unreachable at tilt {} deg; throw bracket [{}, {}] mm spans [{:.4f}, {:.4f}]",
        target_nonuniformity, tilt_deg, bracket.lo_mm, bracket.hi_mm, lo_val, hi_val));
  }
  return bisect_decreasing(at, target_nonuniformity, bracket, 1e-5);
}

double calibrate_edge_throw(double target_reduction, double nominal_w_nm, const MaskStack& mask,
                            const SourceGeometry& base, const WaferLayout& wafer,
                            ThrowBracket bracket) {
  if (!(target_reduction > 0.0 && target_reduction < 1.0))
    throw CalibrationError("target reduction must lie in (0, 1)");
  const Vec2 edge{wafer.radius_mm, 0.0};
  auto at = [&](double throw_mm) {
    SourceGeometry s = base;
    s.throw_distance_mm = throw_mm;
    const FluxSample f = local_flux(s, wafer, edge);
    const Linewidth w = dolan_linewidth(nominal_w_nm, mask, f.projected_x_deg, f.design_x_deg);
    return 1.0 - w.width_nm / nominal_w_nm;
  };
  const double hi_val = at(bracket.lo_mm);
  const double lo_val = at(bracket.hi_mm);
  if (target_reduction > hi_val || target_reduction < lo_val) {
    throw CalibrationError(fmt::format(
        "edge reduction {:.4f} unreachable; throw bracket [{}, {}] mm spans [{:.4f}, {:.4f}]",
        target_reduction, bracket.lo_mm, bracket.hi_mm, lo_val, hi_val));
  }
  return bisect_decreasing(at, target_reduction, bracket, 1e-7);
}

}  // namespace jjfab::geometry
