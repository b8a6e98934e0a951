#pragma once

#include "jjfab/barrier.hpp"

namespace jjfab::electrical {

inline constexpr double kElectronCharge = 1.602176634e-19;  // C
inline constexpr double kPlanck = 6.62607015e-34;           // J s
inline constexpr double kBoltzmann = 1.380649e-23;          // J / K
inline constexpr double kFluxQuantum = kPlanck / (2.0 * kElectronCharge);

struct PhysicalConstants {
  double gap_delta_ueV = 180.0;

  void validate() const;
  /// Ambegaokar-Baratoff product pi * Delta / (2 e), in volts, at T = 0.
  double icrn_volts() const;
};

struct TransmonParams {
  double ec_over_h_mhz = 250.0;
  double ej_over_h_ghz = 10.35;

  double ej_over_ec() const { return ej_over_h_ghz * 1e3 / ec_over_h_mhz; }
};

inline constexpr double kTransmonRegimeMin = 20.0;

struct JunctionElectrics {
  double rn_ohm;
  double ic_na;
  double jc_a_per_um2;  // per active area
  double area_um2;
};

/// Rn = rho0 * exp(d / lambda) / (active_area_fraction * area).
double rn_from_barrier(double d_nm, double area_um2, const barrier::BarrierModel& model);

/// Ambegaokar-Baratoff: Ic = (pi Delta / 2e) tanh(Delta / 2 kT) / Rn.
double ic_from_rn(double rn_ohm, const PhysicalConstants& constants, double temperature_k = 0.0);

/// EJ / h in GHz for a junction of critical current `ic_na`.
double ej_over_h_ghz(double ic_na);
double ic_from_ej_na(double ej_over_h_ghz);

/// f01 = sqrt(8 EJ EC) - EC, GHz.
double transmon_f01(const TransmonParams& params);
bool in_transmon_regime(const TransmonParams& params);

/// Normal-state resistance that puts a transmon with charging energy
/// `ec_over_h_mhz` at `f01_ghz`.
double target_rn_for_frequency(double f01_ghz, double ec_over_h_mhz, const PhysicalConstants& constants);

/// Full forward chain for one junction at temperature zero.
JunctionElectrics junction_electrics(double d_nm, double area_um2, const barrier::BarrierModel& model,
                                     const PhysicalConstants& constants);

/// Returns `model` with its specific resistance chosen so that a junction
/// oxidized per `spec` reproduces critical_current_density(spec, model).
barrier::BarrierModel anchor_resistance(barrier::BarrierModel model, const barrier::OxidationSpec& spec,
                                        const PhysicalConstants& constants);

}  // namespace jjfab::electrical
