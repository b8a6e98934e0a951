#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace jjfab::geometry {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Point source below a tilted wafer. The source axis is world +z and points
/// at the wafer center when `source_offset_mm` is zero. The wafer is tilted by
/// `tilt_alpha_deg` about its own y axis, so wafer x is the tilt direction.
struct SourceGeometry {
  double throw_distance_mm = 1200.0;
  double emission_exponent = 1.0;
  double tilt_alpha_deg = 0.0;
  Vec2 source_offset_mm{};

  void validate() const;
};

struct WaferLayout {
  double radius_mm = 50.0;
  double die_pitch_mm = 5.0;
  int grid_cols = 20;
  int grid_rows = 20;
  std::vector<Vec2> chip_positions;

  void validate() const;
  bool contains(Vec2 p) const;
};

/// Bilayer resist forming the suspended Dolan bridge.
struct MaskStack {
  double copolymer_height_nm = 500.0;
  double imaging_resist_height_nm = 100.0;
  double bridge_width_nm = 150.0;
  double undercut_nm = 300.0;

  double total_height_nm() const { return copolymer_height_nm + imaging_resist_height_nm; }
  void validate() const;
};

/// Flux arriving at one wafer point.
///
/// `projected_x_deg`/`projected_y_deg` are the arrival angles projected onto
/// the planes spanned by the wafer normal and the wafer x (tilt) or y axis;
/// these set the lateral shadow of the bridge. `design_*` hold the same
/// projections at the wafer center, which is where the layout's deposition
/// angles are defined.
struct FluxSample {
  double incidence_angle_deg = 0.0;
  double relative_rate = 1.0;
  double projected_x_deg = 0.0;
  double projected_y_deg = 0.0;
  double design_x_deg = 0.0;
  double design_y_deg = 0.0;
};

/// Nominal junction: bottom electrode width (along wafer x) times top
/// electrode width (along wafer y).
struct JunctionDesign {
  double width_nm = 150.0;
  double length_nm = 200.0;

  std::string id() const;
};

struct FieldPoint {
  double x_mm;
  double y_mm;
  double value;
};

/// Values sampled on a square grid clipped to the wafer disc.
struct ScalarField {
  double step_mm = 1.0;
  std::vector<FieldPoint> points;

  bool empty() const { return points.empty(); }
};

struct Linewidth {
  double width_nm = 0.0;
  bool fully_shadowed = false;
  /// Lateral shift exceeded the resist undercut; the straight-wall model is
  /// no longer trustworthy there.
  bool exceeds_undercut = false;
};

FluxSample local_flux(const SourceGeometry& src, const WaferLayout& wafer, Vec2 point_mm);

ScalarField thickness_map(const SourceGeometry& src, const WaferLayout& wafer, double grid_step_mm);

/// (max - min) / (max + min).
double nonuniformity(std::span<const double> values);
double nonuniformity(const ScalarField& field);

Linewidth dolan_linewidth(double nominal_w_nm, const MaskStack& mask, double local_angle_deg,
                          double design_angle_deg);

/// Rectangular overlap of the shrunk bottom (x) and top (y) electrodes, nm^2.
double junction_area(const JunctionDesign& design, const FluxSample& bottom_flux,
                     const FluxSample& top_flux, const MaskStack& mask);

/// Effective width of a line whose width runs along wafer x (axis 0) or y
/// (axis 1), evaluated on the wafer grid.
ScalarField linewidth_map(const SourceGeometry& src, const WaferLayout& wafer, const MaskStack& mask,
                          double nominal_w_nm, int axis, double grid_step_mm);

struct ThrowBracket {
  double lo_mm = 100.0;
  double hi_mm = 10000.0;
};

/// Throw distance giving the requested thickness nonuniformity at `tilt_deg`.
/// Other fields of `base` (emission exponent, offset) are kept.
double calibrate_throw(double target_nonuniformity, double tilt_deg, const SourceGeometry& base = {},
                       const WaferLayout& wafer = {}, double grid_step_mm = 1.0,
                       ThrowBracket bracket = {});

/// Throw distance at which a line of `nominal_w_nm` (width along x) shrinks by
/// `target_reduction` (fraction) at the wafer edge point (radius, 0).
double calibrate_edge_throw(double target_reduction, double nominal_w_nm, const MaskStack& mask,
                            const SourceGeometry& base = {}, const WaferLayout& wafer = {},
                            ThrowBracket bracket = {});

}  // namespace jjfab::geometry
