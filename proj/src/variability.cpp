#include "jjfab/variability.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <random>

#include "jjfab/errors.hpp"
#include "jjfab/parallel.hpp"

namespace jjfab::variability {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// SplitMix64: cheap to construct, so every realization gets its own stream
// keyed by (seed, design, index) and parallel runs match serial ones.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t state) : state_(state) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

SplitMix64 stream_for(std::uint64_t seed, std::uint64_t design, std::uint64_t index) {
  SplitMix64 mix(seed);
  const std::uint64_t a = mix() ^ design;
  SplitMix64 mix2(a);
  return SplitMix64(mix2() ^ index);
}

struct DieSite {
  int chip;
  geometry::Vec2 pos;
};

struct NominalWidths {
  double bottom_nm;
  double top_nm;
};

geometry::SourceGeometry source_at(const ProcessScenario& s, double angle_deg) {
  geometry::SourceGeometry src = s.source;
  src.tilt_alpha_deg = angle_deg;
  return src;
}

barrier::BarrierModel anchored(const ProcessScenario& s) {
  if (s.barrier.specific_resistance_ohm_um2 > 0.0) return s.barrier;
  return electrical::anchor_resistance(s.barrier, barrier::OxidationSpec{}, s.constants);
}

double parse_double(std::string_view name, std::string_view text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v))
    throw ConfigError(fmt::format("parameter '{}': '{}' is not a finite number", name, text));
  return v;
}

std::int64_t as_integer(std::string_view name, double v) {
  if (v != std::floor(v) || std::abs(v) > 9.0e15)
    throw ConfigError(fmt::format("parameter '{}' must be an integer, got {}", name, v));
  return static_cast<std::int64_t>(v);
}

// Two-pass population statistics; identical inputs give exactly zero spread.
struct Moments {
  std::vector<double> values;
  std::int64_t n = 0;

  void add(double v) {
    values.push_back(v);
    ++n;
  }
  std::pair<double, double> mean_and_ratio() const {
    // Shifted by the first value so identical inputs give exactly zero.
    const double x0 = values.front();
    double sum = 0.0;
    for (double v : values) sum += v - x0;
    const double shift = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - x0 - shift) * (v - x0 - shift);
    const double mean = x0 + shift;
    return {mean, std::sqrt(ss / static_cast<double>(n)) / mean};
  }
};

}  // namespace

std::vector<geometry::Vec2> ChipPlacement::die_positions() const {
  std::vector<geometry::Vec2> out;
  const double pitch = size_mm / dies_per_side;
  const double start = -size_mm / 2.0 + pitch / 2.0;
  for (int r = 0; r < dies_per_side; ++r) {
    for (int c = 0; c < dies_per_side; ++c) {
      out.push_back({center_mm.x + start + c * pitch, center_mm.y + start + r * pitch});
    }
  }
  return out;
}

void ProcessScenario::validate() const {
  source.validate();
  wafer.validate();
  mask.validate();
  oxidation.validate();
  barrier.validate();
  constants.validate();
  if (sample_count < 1) throw ConfigError("sample_count must be >= 1");
  if (designs.empty()) throw ConfigError("scenario needs at least one junction design");
  if (chips.empty()) throw ConfigError("scenario needs at least one chip");
  if (!(ec_over_h_mhz > 0.0)) throw ConfigError("ec_over_h_mhz must be > 0");
  if (!(area_sigma_rel >= 0.0)) throw ConfigError("area_sigma_rel must be >= 0");
  for (const auto* e : {&bottom, &top}) {
    if (!(e->thickness_nm >= 0.0) || !(e->rate_nm_per_s > 0.0) ||
        !(e->angle_deg >= 0.0 && e->angle_deg < 90.0))
      throw ConfigError("electrode needs thickness >= 0, rate > 0 and angle in [0, 90)");
  }
  for (const auto& d : designs) {
    if (!(d.width_nm > 0.0) || !(d.length_nm > 0.0))
      throw ConfigError(fmt::format("design {} needs positive dimensions", d.id()));
  }
  for (const auto& c : chips) {
    if (!(c.size_mm > 0.0) || c.dies_per_side < 1)
      throw ConfigError("chip needs size_mm > 0 and dies_per_side >= 1");
    for (const auto& p : c.die_positions()) {
      if (!wafer.contains(p))
        throw ConfigError(fmt::format("die at ({}, {}) mm lies outside the wafer", p.x, p.y));
    }
  }
}

filmgrowth::RoughnessReport RoughnessCache::get(const filmgrowth::ElectrodeProcess& process,
                                                const filmgrowth::EnsembleSettings& s) {
  const std::vector<double> key{process.thickness_nm,
                                process.angle_deg,
                                process.rate_nm_per_s,
                                static_cast<double>(s.rms_width_sites),
                                static_cast<double>(s.ler_length_sites),
                                static_cast<double>(s.seeds),
                                static_cast<double>(s.base_seed),
                                s.edge_mask_height_ml,
                                s.monolayer_nm,
                                s.contamination_const,
                                s.diffusion_const};
  {
    std::lock_guard lock(mu_);
    if (auto it = cells_.find(key); it != cells_.end()) return it->second;
  }
  const auto report = filmgrowth::ensemble_roughness(process, s);
  std::lock_guard lock(mu_);
  return cells_.emplace(key, report).first->second;
}

std::size_t RoughnessCache::size() const {
  std::lock_guard lock(mu_);
  return cells_.size();
}

RoughnessCache& RoughnessCache::shared() {
  static RoughnessCache cache;
  return cache;
}

ElectrodeRoughness resolve_roughness(const ProcessScenario& s, RoughnessCache& cache) {
  return ElectrodeRoughness{
      .bottom = s.bottom_roughness ? *s.bottom_roughness : cache.get(s.bottom, s.growth),
      .top = s.top_roughness ? *s.top_roughness : cache.get(s.top, s.growth),
  };
}

std::vector<JunctionRealization> sample_ensemble(const ProcessScenario& s, RoughnessCache& cache) {
  s.validate();
  const auto rough = resolve_roughness(s, cache);
  const auto model = anchored(s);
  const auto disp = barrier::barrier_dispersion(rough.bottom.rms_nm, s.oxidation, model);
  const double sigma_wb = std::sqrt(2.0) * rough.bottom.ler_nm;
  const double sigma_wt = std::sqrt(2.0) * rough.top.ler_nm;
  const double leak_d = model.lambda_nm * disp.sigma_leak_rel;

  std::vector<DieSite> sites;
  for (int c = 0; c < static_cast<int>(s.chips.size()); ++c) {
    for (const auto& p : s.chips[static_cast<std::size_t>(c)].die_positions()) sites.push_back({c, p});
  }

  // Deterministic wafer-position linewidths, per design and die.
  const auto src_b = source_at(s, s.bottom.angle_deg);
  const auto src_t = source_at(s, s.top.angle_deg);
  std::vector<std::vector<NominalWidths>> nominal(s.designs.size());
  for (std::size_t d = 0; d < s.designs.size(); ++d) {
    const auto& des = s.designs[d];
    for (const auto& site : sites) {
      NominalWidths w{des.width_nm, des.length_nm};
      if (s.wafer_geometry) {
        const auto fb = geometry::local_flux(src_b, s.wafer, site.pos);
        const auto ft = geometry::local_flux(src_t, s.wafer, site.pos);
        w.bottom_nm =
            geometry::dolan_linewidth(des.width_nm, s.mask, fb.projected_x_deg, fb.design_x_deg).width_nm;
        w.top_nm =
            geometry::dolan_linewidth(des.length_nm, s.mask, ft.projected_y_deg, ft.design_y_deg).width_nm;
      }
      nominal[d].push_back(w);
    }
  }

  const auto n = static_cast<std::size_t>(s.sample_count);
  std::vector<JunctionRealization> out(n * s.designs.size());
  parallel_for(out.size(), [&](std::size_t flat) {
    const std::size_t d = flat / n;
    const std::size_t j = flat % n;
    const std::size_t site_idx = j % sites.size();
    auto rng = stream_for(s.rng_seed, d, j);
    std::normal_distribution<double> gauss;
    const double zb = gauss(rng), zt = gauss(rng), za = gauss(rng), zd = gauss(rng), zl = gauss(rng);

    JunctionRealization r;
    r.design = static_cast<int>(d);
    r.chip = sites[site_idx].chip;
    r.die_mm = sites[site_idx].pos;
    const auto& w = nominal[d][site_idx];
    const double wb = w.bottom_nm + sigma_wb * zb;
    const double wt = w.top_nm + sigma_wt * zt;
    const double scale = 1.0 + s.area_sigma_rel * za;
    r.d_nm = disp.mean_d_nm + disp.sigma_d_nm * zd + leak_d * zl;
    if (wb <= 0.0 || wt <= 0.0 || scale <= 0.0 || r.d_nm <= 0.0) {
      r.dead = true;
      r.area_um2 = r.rn_ohm = r.ic_na = r.f01_ghz = kNan;
      out[flat] = r;
      return;
    }
    r.area_um2 = wb * wt * scale * 1e-6;
    const auto e = electrical::junction_electrics(r.d_nm, r.area_um2, model, s.constants);
    r.rn_ohm = e.rn_ohm;
    r.ic_na = e.ic_na;
    r.f01_ghz = electrical::transmon_f01({s.ec_over_h_mhz, electrical::ej_over_h_ghz(e.ic_na)});
    out[flat] = r;
  });
  return out;
}

SummaryTable summarize(const std::vector<JunctionRealization>& realizations, const ProcessScenario& s,
                       Grouping grouping) {
  const std::size_t chips = grouping == Grouping::by_chip ? s.chips.size() : 1;
  const std::size_t groups = s.designs.size() * chips;
  std::vector<Moments> ic(groups), f(groups);
  std::vector<std::int64_t> dead(groups, 0);
  for (const auto& r : realizations) {
    if (r.design < 0 || static_cast<std::size_t>(r.design) >= s.designs.size())
      throw DomainError(fmt::format("realization refers to unknown design {}", r.design));
    const std::size_t chip = grouping == Grouping::by_chip ? static_cast<std::size_t>(r.chip) : 0;
    if (chip >= chips) throw DomainError(fmt::format("realization refers to unknown chip {}", r.chip));
    const std::size_t g = chip * s.designs.size() + static_cast<std::size_t>(r.design);
    if (r.dead) {
      ++dead[g];
      continue;
    }
    ic[g].add(r.ic_na);
    f[g].add(r.f01_ghz);
  }

  SummaryTable table;
  for (std::size_t g = 0; g < groups; ++g) {
    const auto& des = s.designs[g % s.designs.size()];
    const int chip = grouping == Grouping::by_chip ? static_cast<int>(g / s.designs.size()) : -1;
    const std::string name = chip < 0 ? des.id() : fmt::format("chip{}/{}", chip, des.id());
    if (ic[g].n < 2) {
      table.warnings.push_back(
          {name, fmt::format("{} live realizations ({} dead); group skipped", ic[g].n, dead[g])});
      continue;
    }
    const auto [mi, ri] = ic[g].mean_and_ratio();
    const auto [mf, rf] = f[g].mean_and_ratio();
    table.rows.push_back(DistributionSummary{
        .group = name,
        .design = des.id(),
        .chip = chip,
        .mean_ic_na = mi,
        .sigma_over_mean_ic = ri,
        .mean_f01_ghz = mf,
        .sigma_over_mean_f01 = rf,
        .sample_count = ic[g].n,
        .dead_count = dead[g],
    });
  }
  return table;
}

SummaryTable simulate(const ProcessScenario& s, Grouping grouping, RoughnessCache& cache) {
  return summarize(sample_ensemble(s, cache), s, grouping);
}

// --- parameter access -------------------------------------------------------

namespace {

using Setter = void (*)(ProcessScenario&, double);

struct NumericParam {
  const char* name;
  Setter set;
};

const NumericParam kNumeric[] = {
    {"bottom.thickness_nm", [](ProcessScenario& s, double v) { s.bottom.thickness_nm = v; }},
    {"bottom.angle_deg", [](ProcessScenario& s, double v) { s.bottom.angle_deg = v; }},
    {"bottom.rate_nm_per_s", [](ProcessScenario& s, double v) { s.bottom.rate_nm_per_s = v; }},
    {"top.thickness_nm", [](ProcessScenario& s, double v) { s.top.thickness_nm = v; }},
    {"top.angle_deg", [](ProcessScenario& s, double v) { s.top.angle_deg = v; }},
    {"top.rate_nm_per_s", [](ProcessScenario& s, double v) { s.top.rate_nm_per_s = v; }},
    {"oxidation.pressure_mbar", [](ProcessScenario& s, double v) { s.oxidation.pressure_mbar = v; }},
    {"oxidation.time_s", [](ProcessScenario& s, double v) { s.oxidation.time_s = v; }},
    {"geometry.throw_distance_mm", [](ProcessScenario& s, double v) { s.source.throw_distance_mm = v; }},
    {"geometry.emission_exponent", [](ProcessScenario& s, double v) { s.source.emission_exponent = v; }},
    {"mask.copolymer_height_nm", [](ProcessScenario& s, double v) { s.mask.copolymer_height_nm = v; }},
    {"mask.imaging_resist_height_nm",
     [](ProcessScenario& s, double v) { s.mask.imaging_resist_height_nm = v; }},
    {"barrier.groove_coupling", [](ProcessScenario& s, double v) { s.barrier.groove_coupling = v; }},
    {"barrier.leak_coeff_mbar", [](ProcessScenario& s, double v) { s.barrier.leak_coeff_mbar = v; }},
    {"barrier.lambda_nm", [](ProcessScenario& s, double v) { s.barrier.lambda_nm = v; }},
    {"barrier.active_area_fraction",
     [](ProcessScenario& s, double v) { s.barrier.active_area_fraction = v; }},
    {"transmon.ec_over_h_mhz", [](ProcessScenario& s, double v) { s.ec_over_h_mhz = v; }},
    {"area_sigma_rel", [](ProcessScenario& s, double v) { s.area_sigma_rel = v; }},
    {"sample_count",
     [](ProcessScenario& s, double v) { s.sample_count = as_integer("sample_count", v); }},
};

constexpr const char* kMethodAxis = "oxidation.method";

}  // namespace

const std::vector<std::string>& parameter_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& p : kNumeric) out.emplace_back(p.name);
    out.emplace_back(kMethodAxis);
    return out;
  }();
  return names;
}

namespace {

[[noreturn]] void unknown_parameter(std::string_view name) {
  std::string list;
  for (const auto& n : parameter_names()) list += (list.empty() ? "" : ", ") + n;
  throw ConfigError(fmt::format("unknown parameter '{}'; valid: {}", name, list));
}

}  // namespace

void set_parameter(ProcessScenario& s, std::string_view name, double value) {
  if (!std::isfinite(value)) throw ConfigError(fmt::format("parameter '{}' must be finite", name));
  for (const auto& p : kNumeric) {
    if (name == p.name) {
      p.set(s, value);
      return;
    }
  }
  if (name == kMethodAxis) throw ConfigError("oxidation.method takes 'static' or 'dynamic'");
  unknown_parameter(name);
}

void set_parameter(ProcessScenario& s, std::string_view name, std::string_view value) {
  if (name == kMethodAxis) {
    s.oxidation.method = barrier::parse_method(value);
    return;
  }
  for (const auto& p : kNumeric) {
    if (name == p.name) {
      p.set(s, parse_double(name, value));
      return;
    }
  }
  unknown_parameter(name);
}

std::vector<SweepRow> sweep(const ProcessScenario& s, std::string_view axis,
                            const std::vector<std::string>& values, RoughnessCache& cache) {
  const auto& names = parameter_names();
  if (std::find(names.begin(), names.end(), axis) == names.end()) unknown_parameter(axis);
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<SweepRow> rows;
  for (const auto& v : values) {
    ProcessScenario point = s;
    set_parameter(point, axis, v);
    rows.push_back({v, simulate(point, Grouping::by_design, cache)});
  }
  return rows;
}

OptimizeResult optimize(const ProcessScenario& s, const std::vector<FreeParameter>& params,
                        const OptimizeOptions& options, RoughnessCache& cache) {
  for (const auto& p : params) {
    const auto& names = parameter_names();
    if (p.name == kMethodAxis || std::find(names.begin(), names.end(), p.name) == names.end())
      unknown_parameter(p.name);
  }
  const std::string design = options.design.empty() ? s.designs.at(0).id() : options.design;
  if (std::none_of(s.designs.begin(), s.designs.end(), [&](const auto& d) { return d.id() == design; }))
    throw ConfigError(fmt::format("design '{}' is not part of the scenario", design));

  return grid_search(params, options, [&](const std::vector<double>& x) {
    ProcessScenario point = s;
    for (std::size_t k = 0; k < params.size(); ++k) set_parameter(point, params[k].name, x[k]);
    for (const auto& row : simulate(point, Grouping::by_design, cache).rows) {
      if (row.design == design) return row.sigma_over_mean_ic;
    }
    return kNan;
  });
}

double linear_sigma_over_mean_ic(double area_sigma_rel, double sigma_d_nm, double lambda_nm,
                                 double sigma_leak_rel) {
  if (!(lambda_nm > 0.0)) throw DomainError("lambda_nm must be > 0");
  const double td = sigma_d_nm / lambda_nm;
  return std::sqrt(area_sigma_rel * area_sigma_rel + td * td + sigma_leak_rel * sigma_leak_rel);
}

GrooveCalibration calibrate_groove_coupling(const ProcessScenario& a, double target_a,
                                            const ProcessScenario& b, double target_b,
                                            const std::string& design, RoughnessCache& cache) {
  if (!(target_a > 0.0) || !(target_b > 0.0)) throw CalibrationError("targets must be > 0");
  auto spread = [&](const ProcessScenario& base, double kappa) {
    ProcessScenario s = base;
    s.barrier.groove_coupling = kappa;
    const std::string id = design.empty() ? s.designs.at(0).id() : design;
    for (const auto& row : simulate(s, Grouping::by_design, cache).rows) {
      if (row.design == id) return row.sigma_over_mean_ic;
    }
    throw CalibrationError(fmt::format("design '{}' has no live realizations", id));
  };
  auto misfit = [&](double kappa) {
    const double ea = spread(a, kappa) - target_a;
    const double eb = spread(b, kappa) - target_b;
    return ea * ea + eb * eb;
  };

  // Grow the bracket until both spreads overshoot their targets.
  double hi = 1e-4;
  for (int i = 0; i < 60 && (spread(a, hi) < target_a || spread(b, hi) < target_b); ++i) hi *= 2.0;
  double lo = 0.0;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = misfit(x1), f2 = misfit(x2);
  for (int i = 0; i < 80 && hi - lo > 1e-4 * hi; ++i) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = misfit(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = misfit(x2);
    }
  }
  const double kappa = 0.5 * (lo + hi);
  return GrooveCalibration{kappa, spread(a, kappa), spread(b, kappa)};
}

}  // namespace jjfab::variability
