#include "jjfab/electrical.hpp"

#include <cmath>
#include <fmt/format.h>
#include <numbers>

#include "jjfab/errors.hpp"

namespace jjfab::electrical {

void PhysicalConstants::validate() const {
  if (!(gap_delta_ueV > 0.0)) throw ConfigError("gap_delta_ueV must be > 0");
}

double PhysicalConstants::icrn_volts() const {
  // Delta / e is the gap in volts.
  return std::numbers::pi * gap_delta_ueV * 1e-6 / 2.0;
}

double rn_from_barrier(double d_nm, double area_um2, const barrier::BarrierModel& model) {
  if (!(d_nm > 0.0) || !(area_um2 > 0.0))
    throw DomainError("barrier thickness and area must be > 0");
  model.validate();
  if (!(model.specific_resistance_ohm_um2 > 0.0))
    throw ConfigError("barrier model has no specific resistance; anchor it first");
  return model.specific_resistance_ohm_um2 * std::exp(d_nm / model.lambda_nm) /
         (model.active_area_fraction * area_um2);
}

double ic_from_rn(double rn_ohm, const PhysicalConstants& constants, double temperature_k) {
  if (!(rn_ohm > 0.0)) throw DomainError("normal resistance must be > 0");
  if (!(temperature_k >= 0.0)) throw DomainError("temperature must be >= 0");
  constants.validate();
  double thermal = 1.0;
  if (temperature_k > 0.0) {
    const double delta_j = constants.gap_delta_ueV * 1e-6 * kElectronCharge;
    thermal = std::tanh(delta_j / (2.0 * kBoltzmann * temperature_k));
  }
  return constants.icrn_volts() * thermal / rn_ohm * 1e9;
}

double ej_over_h_ghz(double ic_na) {
  // EJ = Phi0 Ic / 2pi.
  return kFluxQuantum * ic_na * 1e-9 / (2.0 * std::numbers::pi) / kPlanck * 1e-9;
}

double ic_from_ej_na(double ej_ghz) {
  return ej_ghz * 1e9 * kPlanck * 2.0 * std::numbers::pi / kFluxQuantum * 1e9;
}

double transmon_f01(const TransmonParams& params) {
  if (!(params.ec_over_h_mhz > 0.0) || !(params.ej_over_h_ghz > 0.0))
    throw DomainError("EJ and EC must be > 0");
  const double ec = params.ec_over_h_mhz * 1e-3;
  return std::sqrt(8.0 * params.ej_over_h_ghz * ec) - ec;
}

bool in_transmon_regime(const TransmonParams& params) {
  return params.ej_over_ec() >= kTransmonRegimeMin;
}

double target_rn_for_frequency(double f01_ghz, double ec_over_h_mhz, const PhysicalConstants& constants) {
  if (!(f01_ghz > 0.0) || !(ec_over_h_mhz > 0.0))
    throw DomainError("target frequency and EC must be > 0");
  const double ec = ec_over_h_mhz * 1e-3;
  const double root = f01_ghz + ec;  // sqrt(8 EJ EC)
  const double ej = root * root / (8.0 * ec);
  if (!(ej > 0.0)) throw DomainError(fmt::format("no EJ reaches f01 = {} GHz", f01_ghz));
  const double ic_na = ic_from_ej_na(ej);
  return constants.icrn_volts() / (ic_na * 1e-9);
}

JunctionElectrics junction_electrics(double d_nm, double area_um2, const barrier::BarrierModel& model,
                                     const PhysicalConstants& constants) {
  const double rn = rn_from_barrier(d_nm, area_um2, model);
  const double ic = ic_from_rn(rn, constants);
  return JunctionElectrics{
      .rn_ohm = rn,
      .ic_na = ic,
      .jc_a_per_um2 = ic * 1e-9 / (model.active_area_fraction * area_um2),
      .area_um2 = area_um2,
  };
}

barrier::BarrierModel anchor_resistance(barrier::BarrierModel model, const barrier::OxidationSpec& spec,
                                        const PhysicalConstants& constants) {
  constants.validate();
  const double jc = barrier::critical_current_density(spec, model);
  const double d = barrier::barrier_thickness(spec, model);
  // Rn * (f A) = IcRn / jc at the anchor exposure.
  model.specific_resistance_ohm_um2 = constants.icrn_volts() / jc * std::exp(-d / model.lambda_nm);
  return model;
}

}  // namespace jjfab::electrical
