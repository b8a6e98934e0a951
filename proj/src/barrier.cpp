#include "jjfab/barrier.hpp"

#include <cmath>
#include <fmt/format.h>
#include <string>

#include "jjfab/errors.hpp"

namespace jjfab::barrier {

OxidationMethod parse_method(std::string_view name) {
  if (name == "static") return OxidationMethod::static_fill;
  if (name == "dynamic") return OxidationMethod::dynamic_flow;
  throw ConfigError(fmt::format("unknown oxidation method '{}' (expected static|dynamic)", name));
}

std::string_view method_name(OxidationMethod m) {
  return m == OxidationMethod::static_fill ? "static" : "dynamic";
}

void OxidationSpec::validate() const {
  if (!(pressure_mbar >= 1e-4 && pressure_mbar <= 100.0))
    throw ConfigError(fmt::format("pressure_mbar {} outside [1e-4, 100]", pressure_mbar));
  if (!(time_s > 0.0) || !std::isfinite(time_s)) throw ConfigError("time_s must be > 0");
}

void BarrierModel::validate() const {
  if (!(lambda_nm > 0.0)) throw ConfigError("lambda_nm must be > 0");
  if (!(active_area_fraction > 0.0 && active_area_fraction <= 1.0))
    throw ConfigError("active_area_fraction must be in (0, 1]");
  if (!(jc_exponent > 0.0)) throw ConfigError("jc_exponent must be > 0");
  if (!(e0_mbar_s > 0.0)) throw ConfigError("e0_mbar_s must be > 0");
  if (!(jc_prefactor_a_per_um2 > 0.0)) throw ConfigError("jc_prefactor must be > 0");
  if (!(d0_nm > 0.0) || !(c_nm >= 0.0)) throw ConfigError("d0_nm must be > 0 and c_nm >= 0");
  if (!(leak_coeff_mbar >= 0.0) || !(groove_coupling >= 0.0))
    throw ConfigError("leak_coeff_mbar and groove_coupling must be >= 0");
}

double barrier_thickness(const OxidationSpec& spec, const BarrierModel& model) {
  spec.validate();
  model.validate();
  return model.d0_nm + model.c_nm * std::log1p(spec.exposure_mbar_s() / model.e0_mbar_s);
}

double critical_current_density(const OxidationSpec& spec, const BarrierModel& model) {
  model.validate();
  const double e = spec.exposure_mbar_s();
  if (!(e > 0.0)) throw DomainError("critical current density needs a positive exposure");
  spec.validate();
  return model.jc_prefactor_a_per_um2 * std::pow(e / model.e0_mbar_s, -model.jc_exponent);
}

BarrierSample barrier_dispersion(double rms_bottom_nm, const OxidationSpec& spec,
                                 const BarrierModel& model) {
  if (!(rms_bottom_nm >= 0.0)) throw DomainError("bottom electrode rms must be >= 0");
  const double leak =
      spec.method == OxidationMethod::static_fill ? model.leak_coeff_mbar / spec.pressure_mbar : 0.0;
  return BarrierSample{
      .mean_d_nm = barrier_thickness(spec, model),
      .sigma_d_nm = model.groove_coupling * rms_bottom_nm,
      .sigma_leak_rel = leak,
  };
}

double wkb_attenuation_length_nm(double barrier_height_ev) {
  if (!(barrier_height_ev > 0.0)) throw DomainError("barrier height must be > 0");
  constexpr double hbar = 1.054571817e-34;
  constexpr double m_e = 9.1093837015e-31;
  constexpr double q = 1.602176634e-19;
  return hbar / (2.0 * std::sqrt(2.0 * m_e * barrier_height_ev * q)) * 1e9;
}

OxidationFit calibrate_oxidation(std::span<const CalibrationPoint> points, double e0_mbar_s) {
  if (points.size() < 2) throw FitError("oxidation fit needs at least 2 points");
  if (!(e0_mbar_s > 0.0)) throw FitError("exposure scale must be > 0");
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!(p.exposure_mbar_s > 0.0) || !(p.jc_a_per_um2 > 0.0))
      throw FitError(fmt::format("point {} has a non-positive exposure or jc", i + 1));
    sx += std::log(p.exposure_mbar_s / e0_mbar_s);
    sy += std::log(p.jc_a_per_um2);
  }
  const double n = static_cast<double>(points.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : points) {
    const double dx = std::log(p.exposure_mbar_s / e0_mbar_s) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(p.jc_a_per_um2) - my);
  }
  if (sxx <= 0.0) throw FitError("oxidation fit needs distinct exposures");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;

  OxidationFit fit{
      .jc_prefactor_a_per_um2 = std::exp(intercept),
      .jc_exponent = -slope,
      .rms_log_residual = 0.0,
      .log_residuals = {},
  };
  double ss = 0.0;
  for (const auto& p : points) {
    const double r = std::log(p.jc_a_per_um2) -
                     (intercept + slope * std::log(p.exposure_mbar_s / e0_mbar_s));
    fit.log_residuals.push_back(r);
    ss += r * r;
  }
  fit.rms_log_residual = std::sqrt(ss / n);
  return fit;
}

}  // namespace jjfab::barrier
