#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace jjfab::filmgrowth {

enum class GrowthMode { random_deposition, ballistic_shadowed };

/// Lattice growth parameters. `lattice_depth_sites == 1` gives a 1+1D strip;
/// larger values give a 2+1D surface (periodic in both directions). Particles
/// travel in the +x direction while descending at `incidence_angle_deg`.
struct GrowthConfig {
  int lattice_width_sites = 512;
  int lattice_depth_sites = 1;
  double target_mean_height_ml = 50.0;
  double incidence_angle_deg = 0.0;
  int diffusion_steps_per_particle = 0;
  double contamination_per_site = 0.0;
  std::uint64_t rng_seed = 1;
  GrowthMode mode = GrowthMode::ballistic_shadowed;

  void validate() const;
};

struct SurfaceRecord {
  int nx = 0;
  int ny = 1;
  std::vector<int> heights;            // row-major, index x + nx * y
  std::vector<std::uint8_t> impurity;  // 1 where diffusion is blocked
  std::int64_t deposited = 0;
  GrowthConfig config_echo;

  double mean_height() const;
};

struct RoughnessReport {
  double rms_nm = 0.0;
  double ler_nm = 0.0;
  double monolayer_nm = 0.286;
};

inline constexpr double kDefaultMonolayerNm = 0.286;
inline constexpr double kAutoWallClearanceMl = 24.0;

SurfaceRecord grow_surface(const GrowthConfig& cfg);

/// Population standard deviation of the heights, in nm.
double rms_roughness(const SurfaceRecord& surface, double monolayer_nm = kDefaultMonolayerNm);

/// Grows a 2+1D film next to a straight resist wall of `edge_mask_height_ml`
/// and returns the standard deviation of the film edge position along the
/// wall, in nm. The wall runs along y; `cfg.lattice_width_sites` sets its
/// length and the across-wall extent is sized to contain the wall shadow.
double line_edge_roughness(const GrowthConfig& cfg, double edge_mask_height_ml,
                           double monolayer_nm = kDefaultMonolayerNm);

struct Mobility {
  int diffusion_steps_per_particle;
  double contamination_per_site;
};

inline constexpr double kDefaultDiffusionConstant = 0.6;        // steps * nm/s
inline constexpr double kDefaultContaminationConstant = 0.004;  // nm/s

/// Slower deposition buys adatoms more hops but lets more residual gas land
/// per monolayer.
Mobility rate_to_mobility(double rate_nm_per_s,
                          double chamber_contamination_const = kDefaultContaminationConstant,
                          double diffusion_const = kDefaultDiffusionConstant);

/// Deposition conditions for one electrode.
struct ElectrodeProcess {
  double thickness_nm = 25.0;
  double angle_deg = 0.0;
  double rate_nm_per_s = 0.5;
};

/// Lattice sizes and ensemble depth used to turn an ElectrodeProcess into
/// roughness numbers.
struct EnsembleSettings {
  int rms_width_sites = 512;
  int ler_length_sites = 64;
  int seeds = 8;
  std::uint64_t base_seed = 1;
  /// Wall height for the LER run; 0 selects film thickness plus
  /// kAutoWallClearanceMl.
  double edge_mask_height_ml = 0.0;
  double monolayer_nm = kDefaultMonolayerNm;
  double contamination_const = kDefaultContaminationConstant;
  double diffusion_const = kDefaultDiffusionConstant;
};

/// Ensemble-mean RMS (1+1D) and LER (2+1D) for a deposition condition.
RoughnessReport ensemble_roughness(const ElectrodeProcess& process, const EnsembleSettings& settings);

GrowthConfig growth_config_for(const ElectrodeProcess& process, const EnsembleSettings& settings,
                               std::uint64_t seed);

double median(std::vector<double> values);

}  // namespace jjfab::filmgrowth
