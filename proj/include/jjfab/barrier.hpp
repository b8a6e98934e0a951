#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace jjfab::barrier {

enum class OxidationMethod { static_fill, dynamic_flow };

OxidationMethod parse_method(std::string_view name);
std::string_view method_name(OxidationMethod m);

struct OxidationSpec {
  double pressure_mbar = 0.05;
  double time_s = 600.0;
  OxidationMethod method = OxidationMethod::dynamic_flow;

  double exposure_mbar_s() const { return pressure_mbar * time_s; }
  void validate() const;
};

/// Barrier growth and tunneling parameters.
///
/// Thickness grows logarithmically with exposure,
///   d = d0 + c * ln(1 + E / E0),
/// and the critical current density per active area follows
///   jc = jc_prefactor * (E / E0)^(-jc_exponent).
/// `specific_resistance_ohm_um2` ties the two together (see
/// electrical::anchor_resistance); it is zero until anchored.
struct BarrierModel {
  double d0_nm = 0.5;
  double c_nm = 0.25;
  double e0_mbar_s = 0.1;
  double lambda_nm = 0.069;
  double jc_prefactor_a_per_um2 = 1.2e-4;
  double jc_exponent = 0.5;
  double leak_coeff_mbar = 0.001;
  double active_area_fraction = 0.10;
  double groove_coupling = 0.10;
  double specific_resistance_ohm_um2 = 0.0;

  void validate() const;
};

struct BarrierSample {
  double mean_d_nm = 0.0;
  double sigma_d_nm = 0.0;
  double sigma_leak_rel = 0.0;
};

double barrier_thickness(const OxidationSpec& spec, const BarrierModel& model);

/// A per um^2 of tunneling (active) area.
double critical_current_density(const OxidationSpec& spec, const BarrierModel& model);

BarrierSample barrier_dispersion(double rms_bottom_nm, const OxidationSpec& spec,
                                 const BarrierModel& model);

/// Tunneling attenuation length for a rectangular barrier of the given height
/// (free-electron mass): lambda = hbar / (2 sqrt(2 m phi)).
double wkb_attenuation_length_nm(double barrier_height_ev);

struct CalibrationPoint {
  double exposure_mbar_s;
  double jc_a_per_um2;
};

struct OxidationFit {
  double jc_prefactor_a_per_um2;
  double jc_exponent;
  /// RMS of log(jc) residuals.
  double rms_log_residual;
  std::vector<double> log_residuals;
};

/// Least squares in log-log space; `e0_mbar_s` fixes the exposure scale.
OxidationFit calibrate_oxidation(std::span<const CalibrationPoint> points, double e0_mbar_s = 0.1);

}  // namespace jjfab::barrier
