#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jjfab/barrier.hpp"
#include "jjfab/electrical.hpp"
#include "jjfab/filmgrowth.hpp"
#include "jjfab/geometry.hpp"

namespace jjfab::variability {

/// Groove coupling fitted to the 25 nm/45 deg vs 15 nm/0 deg scheme pair
/// (5.8 % and 4.7 %) with a 35 nm top electrode and default growth settings.
inline constexpr double kSchemeGrooveCoupling = 4.38e-4;

/// Where a chip sits on the wafer and how its dies are laid out.
struct ChipPlacement {
  geometry::Vec2 center_mm{};
  double size_mm = 20.0;
  int dies_per_side = 5;

  std::vector<geometry::Vec2> die_positions() const;
};

/// Everything needed to simulate one fabrication run.
struct ProcessScenario {
  geometry::SourceGeometry source{};
  geometry::WaferLayout wafer{};
  geometry::MaskStack mask{};
  filmgrowth::ElectrodeProcess bottom{15.0, 0.0, 0.5};
  filmgrowth::ElectrodeProcess top{35.0, 45.0, 0.5};
  filmgrowth::EnsembleSettings growth{};
  /// Fixed roughness per electrode instead of lattice growth.
  std::optional<filmgrowth::RoughnessReport> bottom_roughness;
  std::optional<filmgrowth::RoughnessReport> top_roughness;
  barrier::OxidationSpec oxidation{};
  /// Unanchored models are anchored at the default OxidationSpec, so
  /// exposure changes move Ic.
  barrier::BarrierModel barrier{.groove_coupling = kSchemeGrooveCoupling};
  electrical::PhysicalConstants constants{};
  double ec_over_h_mhz = 250.0;
  /// Extra relative area scatter (lithography), applied multiplicatively.
  double area_sigma_rel = 0.0;
  /// Include the deterministic wafer-position linewidth shift.
  bool wafer_geometry = true;
  std::vector<geometry::JunctionDesign> designs{{150.0, 200.0}};
  std::vector<ChipPlacement> chips{ChipPlacement{}};
  std::int64_t sample_count = 10000;
  std::uint64_t rng_seed = 1;

  void validate() const;
};

struct JunctionRealization {
  int design = 0;
  int chip = 0;
  geometry::Vec2 die_mm{};
  double area_um2 = 0.0;
  double d_nm = 0.0;
  double rn_ohm = 0.0;
  double ic_na = 0.0;
  double f01_ghz = 0.0;
  bool dead = false;
};

struct DistributionSummary {
  std::string group;
  std::string design;
  int chip = -1;  // -1 when grouped over all chips
  double mean_ic_na = 0.0;
  double sigma_over_mean_ic = 0.0;
  double mean_f01_ghz = 0.0;
  double sigma_over_mean_f01 = 0.0;
  std::int64_t sample_count = 0;
  std::int64_t dead_count = 0;
};

enum class Grouping { by_design, by_chip };

struct SummaryWarning {
  std::string group;
  std::string message;
};

struct SummaryTable {
  std::vector<DistributionSummary> rows;
  std::vector<SummaryWarning> warnings;
};

/// Cache of growth-derived roughness per deposition condition.
class RoughnessCache {
 public:
  filmgrowth::RoughnessReport get(const filmgrowth::ElectrodeProcess& process,
                                  const filmgrowth::EnsembleSettings& settings);
  std::size_t size() const;

  static RoughnessCache& shared();

 private:
  mutable std::mutex mu_;
  std::map<std::vector<double>, filmgrowth::RoughnessReport> cells_;
};

/// Roughness actually used for each electrode of a scenario.
struct ElectrodeRoughness {
  filmgrowth::RoughnessReport bottom;
  filmgrowth::RoughnessReport top;
};

ElectrodeRoughness resolve_roughness(const ProcessScenario& scenario,
                                     RoughnessCache& cache = RoughnessCache::shared());

/// Realizations in design-major order: all samples of design 0, then design 1.
std::vector<JunctionRealization> sample_ensemble(const ProcessScenario& scenario,
                                                 RoughnessCache& cache = RoughnessCache::shared());

SummaryTable summarize(const std::vector<JunctionRealization>& realizations,
                       const ProcessScenario& scenario, Grouping grouping = Grouping::by_design);

SummaryTable simulate(const ProcessScenario& scenario, Grouping grouping = Grouping::by_design,
                      RoughnessCache& cache = RoughnessCache::shared());

// --- parameter access -------------------------------------------------------

const std::vector<std::string>& parameter_names();
void set_parameter(ProcessScenario& scenario, std::string_view name, std::string_view value);
void set_parameter(ProcessScenario& scenario, std::string_view name, double value);

struct SweepRow {
  std::string value;
  SummaryTable summary;
};

/// One summary per value; every point reuses the template's seed.
std::vector<SweepRow> sweep(const ProcessScenario& scenario, std::string_view axis,
                            const std::vector<std::string>& values,
                            RoughnessCache& cache = RoughnessCache::shared());

struct FreeParameter {
  std::string name;
  double lo;
  double hi;
};

struct OptimizeOptions {
  int points_per_axis = 7;
  int refinement_rounds = 2;
  std::string design;  // design id; empty selects the first design
};

struct TraceRow {
  int round;
  std::vector<double> params;
  double objective;  // NaN when the point could not be evaluated
};

struct OptimizeResult {
  std::vector<double> best;
  double objective;
  std::vector<TraceRow> trace;
};

/// Deterministic tensor grid search with shrinking refinement boxes.
template <class Objective>
OptimizeResult grid_search(const std::vector<FreeParameter>& params, const OptimizeOptions& options,
                           Objective&& objective);

/// Minimizes sigma/<Ic> of one design over the free parameters.
OptimizeResult optimize(const ProcessScenario& scenario, const std::vector<FreeParameter>& params,
                        const OptimizeOptions& options = {},
                        RoughnessCache& cache = RoughnessCache::shared());

/// First-order spread: (sigma_A/A)^2 + (sigma_d/lambda)^2 + sigma_leak^2.
double linear_sigma_over_mean_ic(double area_sigma_rel, double sigma_d_nm, double lambda_nm,
                                 double sigma_leak_rel);

struct GrooveCalibration {
  double groove_coupling;
  double achieved_a;
  double achieved_b;
};

/// Groove coupling minimizing the squared misfit of sigma/<Ic> of `design`
/// in two scenarios against their targets (fractions).
GrooveCalibration calibrate_groove_coupling(const ProcessScenario& a, double target_a,
                                            const ProcessScenario& b, double target_b,
                                            const std::string& design = {},
                                            RoughnessCache& cache = RoughnessCache::shared());

}  // namespace jjfab::variability

#include "jjfab/detail/grid_search.hpp"
