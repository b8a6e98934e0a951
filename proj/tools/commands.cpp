#include "commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <sstream>

#include "config.hpp"
#include "jjfab/analysis.hpp"
#include "jjfab/barrier.hpp"
#include "jjfab/electrical.hpp"
#include "jjfab/errors.hpp"
#include "jjfab/geometry.hpp"
#include "jjfab/variability.hpp"

namespace jjfab::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error("io", m) {}
};

/// Argument combinations CLI11 cannot express.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Collects the files of one run; the manifest goes out last so an
/// interrupted run leaves none behind.
class OutputSet {
 public:
  OutputSet(std::string command, const std::string& dir) : command_(std::move(command)), dir_(dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_))
      throw IoError(fmt::format("cannot create output directory '{}'", dir_.string()));
    fs::remove(dir_ / "manifest.json", ec);
  }

  void write(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    std::ofstream f(path, std::ios::binary);
    f << content;
    f.close();
    if (!f) throw IoError(fmt::format("cannot write '{}'", path.string()));
    files_.push_back({{"name", name}, {"bytes", content.size()}, {"fnv1a64", fmt::format("{:016x}", fnv1a64(content))}});
  }

  void finish(const json& inputs) {
    json m;
    m["command"] = command_;
    m["inputs"] = inputs;
    m["files"] = files_;
    write_raw("manifest.json", m.dump(2) + "\n");
  }

 private:
  void write_raw(const std::string& name, const std::string& content) {
    std::ofstream f(dir_ / name, std::ios::binary);
    f << content;
    f.close();
    if (!f) throw IoError(fmt::format("cannot write '{}'", (dir_ / name).string()));
  }

  std::string command_;
  fs::path dir_;
  json files_ = json::array();
};

std::string num(double v) { return fmt::format("{:.10g}", v); }

json scenario_json(const variability::ProcessScenario& s, const variability::ElectrodeRoughness& r) {
  auto electrode = [](const filmgrowth::ElectrodeProcess& e, const filmgrowth::RoughnessReport& rr) {
    return json{{"thickness_nm", e.thickness_nm}, {"angle_deg", e.angle_deg},
                {"rate_nm_per_s", e.rate_nm_per_s}, {"rms_nm", rr.rms_nm},
                {"ler_nm", rr.ler_nm}};
  };
  json designs = json::array();
  for (const auto& d : s.designs) designs.push_back(d.id());
  json chips = json::array();
  for (const auto& c : s.chips) {
    chips.push_back({{"center_x_mm", c.center_mm.x}, {"center_y_mm", c.center_mm.y},
                     {"size_mm", c.size_mm}, {"dies_per_side", c.dies_per_side}});
  }
  return json{
      {"throw_distance_mm", s.source.throw_distance_mm},
      {"bottom", electrode(s.bottom, r.bottom)},
      {"top", electrode(s.top, r.top)},
      {"oxidation",
       {{"pressure_mbar", s.oxidation.pressure_mbar},
        {"time_s", s.oxidation.time_s},
        {"method", std::string(barrier::method_name(s.oxidation.method))}}},
      {"groove_coupling", s.barrier.groove_coupling},
      {"leak_coeff_mbar", s.barrier.leak_coeff_mbar},
      {"lambda_nm", s.barrier.lambda_nm},
      {"area_sigma_rel", s.area_sigma_rel},
      {"ec_over_h_mhz", s.ec_over_h_mhz},
      {"designs", designs},
      {"chips", chips},
      {"sample_count", s.sample_count},
      {"rng_seed", s.rng_seed},
  };
}

const char* kSummaryHeader =
    "group,design,chip,mean_ic_na,sigma_over_mean_ic,mean_f01_ghz,sigma_over_mean_f01,sample_count,dead_count";

std::string summary_csv_row(const variability::DistributionSummary& r) {
  return fmt::format("{},{},{},{},{},{},{},{},{}", r.group, r.design, r.chip, num(r.mean_ic_na),
                     num(r.sigma_over_mean_ic), num(r.mean_f01_ghz), num(r.sigma_over_mean_f01),
                     r.sample_count, r.dead_count);
}

json summary_json(const variability::DistributionSummary& r) {
  return json{{"group", r.group},
              {"design", r.design},
              {"chip", r.chip},
              {"mean_ic_na", r.mean_ic_na},
              {"sigma_over_mean_ic", r.sigma_over_mean_ic},
              {"mean_f01_ghz", r.mean_f01_ghz},
              {"sigma_over_mean_f01", r.sigma_over_mean_f01},
              {"sample_count", r.sample_count},
              {"dead_count", r.dead_count}};
}

json warnings_json(const std::vector<variability::SummaryWarning>& w) {
  json out = json::array();
  for (const auto& x : w) out.push_back({{"group", x.group}, {"message", x.message}});
  return out;
}

struct Common {
  std::string config_path;
  std::int64_t seed = -1;
  std::string output_dir;
  std::string format;
  std::int64_t samples = 0;
};

void add_common(CLI::App* sub, Common& c, bool need_config) {
  auto* opt = sub->add_option("--config,-c", c.config_path, "Scenario config file (INI)");
  if (need_config) opt->required();
  sub->add_option("--seed", c.seed, "Random seed (overrides [run] seed)")->check(CLI::NonNegativeNumber);
  sub->add_option("--output-dir,-o", c.output_dir, "Directory for outputs (overrides [run] output_dir)");
  sub->add_option("--format", c.format, "Summary table format")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--samples", c.samples, "Monte Carlo samples per design")->check(CLI::PositiveNumber);
}

RunConfig resolve(const Common& c, bool seed_required) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_config(c.config_path);
  if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
  if (seed_required && !cfg.seed)
    throw ConfigError("a seed is required: pass --seed or set [run] seed");
  if (cfg.seed) cfg.scenario.rng_seed = *cfg.seed;
  if (!c.output_dir.empty()) cfg.output_dir = c.output_dir;
  if (!c.format.empty()) cfg.format = parse_format(c.format);
  if (c.samples > 0) cfg.scenario.sample_count = c.samples;
  cfg.scenario.validate();
  return cfg;
}

json inputs_json(const Common& c, const RunConfig& cfg) {
  return json{{"config", c.config_path},
              {"seed", cfg.seed ? json(*cfg.seed) : json(nullptr)},
              {"format", cfg.format == OutputFormat::csv ? "csv" : "json"}};
}

void write_summary(OutputSet& outs, const RunConfig& cfg, const std::string& stem,
                   const variability::SummaryTable& table) {
  if (cfg.format == OutputFormat::csv) {
    std::string csv = std::string(kSummaryHeader) + "\n";
    for (const auto& r : table.rows) csv += summary_csv_row(r) + "\n";
    outs.write(stem + ".csv", csv);
  } else {
    json rows = json::array();
    for (const auto& r : table.rows) rows.push_back(summary_json(r));
    outs.write(stem + ".json", json{{"rows", rows}, {"warnings", warnings_json(table.warnings)}}.dump(2) + "\n");
  }
}

// --- simulate ---------------------------------------------------------------

int cmd_simulate(const Common& c, const std::string& group_by, bool realizations, std::ostream& out) {
  auto cfg = resolve(c, true);
  OutputSet outs("simulate", cfg.output_dir);
  const auto& s = cfg.scenario;
  const auto grouping = group_by == "chip" ? variability::Grouping::by_chip : variability::Grouping::by_design;
  const auto rough = variability::resolve_roughness(s);
  const auto samples = variability::sample_ensemble(s);
  const auto table = variability::summarize(samples, s, grouping);

  write_summary(outs, cfg, "summary", table);
  outs.write("scenario.json",
             json{{"scenario", scenario_json(s, rough)}, {"warnings", warnings_json(table.warnings)}}.dump(2) + "\n");

  // Mean Ic per die for the first design.
  std::map<std::pair<double, double>, std::pair<double, int>> per_die;
  for (const auto& r : samples) {
    if (r.design != 0 || r.dead) continue;
    auto& a = per_die[{r.die_mm.x, r.die_mm.y}];
    a.first += r.ic_na;
    ++a.second;
  }
  std::vector<analysis::HeatCell> cells;
  for (const auto& [pos, a] : per_die) cells.push_back({pos.first, pos.second, a.first / a.second});
  if (!cells.empty()) {
    analysis::HeatmapOptions o;
    o.title = fmt::format("Mean Ic per die, design {}", s.designs[0].id());
    o.value_label = "Ic, nA";
    outs.write("ic_map.svg", analysis::wafer_heatmap(cells, o));
  }

  if (realizations) {
    std::string csv = "index,design,chip,x_mm,y_mm,area_um2,d_nm,rn_ohm,ic_na,f01_ghz,dead\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& r = samples[i];
      csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", i, s.designs[static_cast<std::size_t>(r.design)].id(),
                         r.chip, num(r.die_mm.x), num(r.die_mm.y), num(r.area_um2), num(r.d_nm), num(r.rn_ohm),
                         num(r.ic_na), num(r.f01_ghz), r.dead ? 1 : 0);
    }
    outs.write("realizations.csv", csv);
  }
  outs.finish(inputs_json(c, cfg));

  for (const auto& r : table.rows) {
    out << fmt::format("{}: <Ic> = {:.3f} nA, sigma/<Ic> = {:.2f} %, <f01> = {:.4f} GHz, sigma/<f01> = {:.2f} % (n = {}, dead = {})\n",
                       r.group, r.mean_ic_na, 100.0 * r.sigma_over_mean_ic, r.mean_f01_ghz,
                       100.0 * r.sigma_over_mean_f01, r.sample_count, r.dead_count);
  }
  return kExitOk;
}

// --- sweep ------------------------------------------------------------------

int cmd_sweep(const Common& c, std::string axis, std::vector<std::string> values, std::ostream& out) {
  auto cfg = resolve(c, true);
  if (!axis.empty()) cfg.sweep.axis = axis;
  if (!values.empty()) cfg.sweep.values = values;
  if (cfg.sweep.axis.empty()) throw ConfigError("sweep needs an axis: pass --axis or set [sweep] axis");
  OutputSet outs("sweep", cfg.output_dir);
  const auto rows = variability::sweep(cfg.scenario, cfg.sweep.axis, cfg.sweep.values);

  if (cfg.format == OutputFormat::csv) {
    std::string csv = fmt::format("axis,value,{}\n", kSummaryHeader);
    for (const auto& row : rows) {
      for (const auto& r : row.summary.rows) csv += fmt::format("{},{},{}\n", cfg.sweep.axis, row.value, summary_csv_row(r));
    }
    outs.write("sweep.csv", csv);
  } else {
    json arr = json::array();
    for (const auto& row : rows) {
      json rs = json::array();
      for (const auto& r : row.summary.rows) rs.push_back(summary_json(r));
      arr.push_back({{"value", row.value}, {"rows", rs}, {"warnings", warnings_json(row.summary.warnings)}});
    }
    outs.write("sweep.json", json{{"axis", cfg.sweep.axis}, {"points", arr}}.dump(2) + "\n");
  }
  auto inputs = inputs_json(c, cfg);
  inputs["axis"] = cfg.sweep.axis;
  inputs["values"] = cfg.sweep.values;
  outs.finish(inputs);

  for (const auto& row : rows) {
    for (const auto& r : row.summary.rows) {
      out << fmt::format("{} = {}: {} sigma/<Ic> = {:.2f} %\n", cfg.sweep.axis, row.value, r.design,
                         100.0 * r.sigma_over_mean_ic);
    }
  }
  return kExitOk;
}

// --- optimize ---------------------------------------------------------------

int cmd_optimize(const Common& c, const std::vector<std::string>& free, const std::string& design, int points,
                 int rounds, std::ostream& out) {
  auto cfg = resolve(c, true);
  if (!free.empty()) {
    cfg.optimize.free.clear();
    for (const auto& f : free) cfg.optimize.free.push_back(parse_free_parameter(f));
  }
  if (!design.empty()) cfg.optimize.options.design = design;
  if (points > 0) cfg.optimize.options.points_per_axis = points;
  if (rounds >= 0) cfg.optimize.options.refinement_rounds = rounds;
  OutputSet outs("optimize", cfg.output_dir);
  const auto res = variability::optimize(cfg.scenario, cfg.optimize.free, cfg.optimize.options);

  std::string csv = "round";
  for (const auto& p : cfg.optimize.free) csv += "," + p.name;
  csv += ",sigma_over_mean_ic\n";
  for (const auto& t : res.trace) {
    csv += std::to_string(t.round);
    for (double x : t.params) csv += "," + num(x);
    csv += "," + (std::isfinite(t.objective) ? num(t.objective) : std::string("nan")) + "\n";
  }
  outs.write("trace.csv", csv);
  json best = json::object();
  for (std::size_t k = 0; k < res.best.size(); ++k) best[cfg.optimize.free[k].name] = res.best[k];
  json bounds = json::array();
  for (const auto& p : cfg.optimize.free) bounds.push_back({{"name", p.name}, {"lo", p.lo}, {"hi", p.hi}});
  const auto design_id = cfg.optimize.options.design.empty() ? cfg.scenario.designs[0].id() : cfg.optimize.options.design;
  outs.write("optimum.json", json{{"design", design_id},
                                  {"best", best},
                                  {"sigma_over_mean_ic", res.objective},
                                  {"bounds", bounds},
                                  {"points_per_axis", cfg.optimize.options.points_per_axis},
                                  {"refinement_rounds", cfg.optimize.options.refinement_rounds},
                                  {"evaluations", res.trace.size()}}
                                 .dump(2) + "\n");
  outs.finish(inputs_json(c, cfg));

  out << fmt::format("best sigma/<Ic> = {:.3f} % for {} at", 100.0 * res.objective, design_id);
  for (std::size_t k = 0; k < res.best.size(); ++k)
    out << fmt::format(" {} = {:.6g}", cfg.optimize.free[k].name, res.best[k]);
  out << "\n";
  return kExitOk;
}

// --- analyze ----------------------------------------------------------------

json stats_json(const analysis::StatsSummary& s) {
  return json{{"n", s.n},
              {"mean", s.mean},
              {"sigma", s.sigma},
              {"sigma_over_mean_percent", std::round(s.sigma_over_mean_percent * 100.0) / 100.0}};
}

std::string stats_csv_row(const std::string& quantity, const analysis::StatsSummary& s) {
  return fmt::format("{},{},{},{},{},{:.2f}\n", s.group, quantity, s.n, num(s.mean), num(s.sigma),
                     s.sigma_over_mean_percent);
}

struct AnalyzeArgs {
  std::string measurements;
  std::string qubits;
  std::string output_dir;
  std::string sigma = "population";
  analysis::OutlierPolicy policy;
  double gap_ueV = 180.0;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  if (a.measurements.empty() && a.qubits.empty())
    throw ConfigError("analyze needs --measurements and/or --qubits");
  const auto convention =
      a.sigma == "sample" ? analysis::SigmaConvention::sample : analysis::SigmaConvention::population;
  electrical::PhysicalConstants constants{a.gap_ueV};
  constants.validate();
  std::optional<OutputSet> outs;
  if (!a.output_dir.empty()) outs.emplace("analyze", a.output_dir);
  a.policy.validate();

  json report;
  report["sigma_convention"] = a.sigma;
  std::vector<std::pair<std::string, std::string>> files;

  if (!a.qubits.empty()) {
    const auto stats = analysis::qubit_table_stats(analysis::load_qubits(a.qubits), convention);
    json q = json::array();
    std::string csv = "group,quantity,n,mean,sigma,sigma_over_mean_percent\n";
    for (const auto& g : stats) {
      q.push_back({{"group", g.group},
                   {"f01_ghz", stats_json(g.f01_ghz)},
                   {"t1_us", stats_json(g.t1_us)},
                   {"t2star_us", stats_json(g.t2star_us)}});
      csv += stats_csv_row("f01_ghz", g.f01_ghz) + stats_csv_row("t1_us", g.t1_us) +
             stats_csv_row("t2star_us", g.t2star_us);
      out << fmt::format("{}: f01 mean {:.3f} GHz, st. dev. {:.2f} %; T1 mean {:.2f} us, {:.2f} %; T2* mean {:.2f} us, {:.2f} %\n",
                         g.group, g.f01_ghz.mean, g.f01_ghz.sigma_over_mean_percent, g.t1_us.mean,
                         g.t1_us.sigma_over_mean_percent, g.t2star_us.mean, g.t2star_us.sigma_over_mean_percent);
    }
    report["qubits"] = q;
    files.emplace_back("qubit_stats.csv", csv);
  }

  if (!a.measurements.empty()) {
    const auto records = analysis::load_measurements(a.measurements);
    const auto res = analysis::reject_outliers(records, a.policy);
    const auto groups = analysis::group_sigma_over_mean(res.kept, constants);
    json g = json::array();
    std::string csv = "design,n,mean_ic_na,sigma_ic_na,sigma_over_mean_percent\n";
    for (const auto& s : groups.rows) {
      g.push_back({{"design", s.group}, {"ic_na", stats_json(s)}});
      csv += fmt::format("{},{},{},{},{:.2f}\n", s.group, s.n, num(s.mean), num(s.sigma), s.sigma_over_mean_percent);
      out << fmt::format("{}: <Ic> = {:.3f} nA, sigma/<Ic> = {:.2f} % (n = {})\n", s.group, s.mean,
                         s.sigma_over_mean_percent, s.n);
    }
    report["designs"] = g;
    report["design_warnings"] = groups.warnings;
    report["outliers"] = {{"policy", res.report.policy},
                          {"input", res.report.input},
                          {"shorts", res.report.shorts},
                          {"opens", res.report.opens},
                          {"mad_rejected", res.report.mad_rejected},
                          {"prior_rejected", res.report.prior_rejected},
                          {"kept", res.kept.size()}};
    out << "outlier policy: " << res.report.policy << "\n";
    files.emplace_back("design_stats.csv", csv);
    std::ostringstream kept, rejected;
    analysis::export_measurements(kept, res.kept);
    analysis::export_measurements(rejected, res.rejected);
    files.emplace_back("measurements_kept.csv", kept.str());
    files.emplace_back("measurements_rejected.csv", rejected.str());

    std::map<std::string, std::vector<analysis::MeasurementRecord>> by_chip;
    for (const auto& r : res.kept) by_chip[r.chip_id].push_back(r);
    for (const auto& [chip, recs] : by_chip) {
      const auto cells = analysis::heat_cells(recs, analysis::HeatValue::ic_na, constants);
      if (cells.empty()) continue;
      analysis::HeatmapOptions o;
      o.title = fmt::format("Mean Ic per die, chip {}", chip);
      o.value_label = "Ic, nA";
      files.emplace_back(fmt::format("ic_map_{}.svg", chip), analysis::wafer_heatmap(cells, o));
    }
  }

  if (a.output_dir.empty()) {
    out << report.dump(2) << "\n";
    return kExitOk;
  }
  for (const auto& [name, content] : files) outs->write(name, content);
  outs->write("analysis.json", report.dump(2) + "\n");
  outs->finish(json{{"measurements", a.measurements}, {"qubits", a.qubits}, {"sigma", a.sigma}});
  return kExitOk;
}

// --- junction ---------------------------------------------------------------

struct JunctionArgs {
  double f01_ghz = 0.0;
  double rn_ohm = 0.0;
  double ec_mhz = 250.0;
  double gap_ueV = 180.0;
  double area_um2 = 0.0;
};

int cmd_junction(const JunctionArgs& a, std::ostream& out) {
  electrical::PhysicalConstants constants{a.gap_ueV};
  constants.validate();
  if ((a.f01_ghz > 0.0) == (a.rn_ohm > 0.0)) throw UsageError("give exactly one of --f01-ghz or --rn-ohm");
  const double rn = a.rn_ohm > 0.0 ? a.rn_ohm : electrical::target_rn_for_frequency(a.f01_ghz, a.ec_mhz, constants);
  const double ic = electrical::ic_from_rn(rn, constants);
  const electrical::TransmonParams tp{a.ec_mhz, electrical::ej_over_h_ghz(ic)};
  json j{{"rn_ohm", rn},
         {"ic_na", ic},
         {"ej_over_h_ghz", tp.ej_over_h_ghz},
         {"ec_over_h_mhz", a.ec_mhz},
         {"ej_over_ec", tp.ej_over_ec()},
         {"f01_ghz", electrical::transmon_f01(tp)},
         {"transmon_regime", electrical::in_transmon_regime(tp)},
         {"icrn_uV", constants.icrn_volts() * 1e6}};
  if (a.area_um2 > 0.0) j["jc_a_per_um2"] = ic * 1e-9 / a.area_um2;
  out << j.dump(2) << "\n";
  return kExitOk;
}

// --- calibrate --------------------------------------------------------------

int cmd_calibrate_throw(double target, double tilt, double step, std::ostream& out) {
  const double L = geometry::calibrate_throw(target, tilt, {}, {}, step);
  geometry::SourceGeometry src;
  src.throw_distance_mm = L;
  json trend = json::array();
  for (double a : {0.0, 15.0, 30.0, 45.0, 60.0}) {
    src.tilt_alpha_deg = a;
    trend.push_back({{"tilt_deg", a}, {"nonuniformity", geometry::nonuniformity(geometry::thickness_map(src, {}, step))}});
  }
  out << json{{"throw_distance_mm", L}, {"target_nonuniformity", target}, {"tilt_deg", tilt}, {"trend", trend}}.dump(2)
      << "\n";
  return kExitOk;
}

int cmd_calibrate_edge(double reduction, double width, double mask_nm, std::ostream& out) {
  geometry::MaskStack mask;
  if (mask_nm > 0.0) mask.copolymer_height_nm = mask_nm - mask.imaging_resist_height_nm;
  const double L = geometry::calibrate_edge_throw(reduction, width, mask);
  geometry::SourceGeometry src;
  src.throw_distance_mm = L;
  const geometry::WaferLayout wafer;
  auto shrink_at = [&](double x) {
    const auto f = geometry::local_flux(src, wafer, {x, 0.0});
    return 1.0 - geometry::dolan_linewidth(width, mask, f.projected_x_deg, f.design_x_deg).width_nm / width;
  };
  out << json{{"throw_distance_mm", L},
              {"mask_height_nm", mask.total_height_nm()},
              {"reduction_at_plus_edge", shrink_at(wafer.radius_mm)},
              {"reduction_at_minus_edge", shrink_at(-wafer.radius_mm)}}
             .dump(2)
      << "\n";
  return kExitOk;
}

int cmd_calibrate_oxidation(const std::string& path, double e0, std::ostream& out) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open '{}'", path));
  std::string line;
  std::vector<barrier::CalibrationPoint> pts;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line != "exposure_mbar_s,jc_a_per_um2")
        throw ParseError("header must be exposure_mbar_s,jc_a_per_um2", lineno);
      continue;
    }
    const auto parts = split_list(line);
    if (parts.size() != 2) throw ParseError("expected 2 fields", lineno);
    try {
      pts.push_back({std::stod(parts[0]), std::stod(parts[1])});
    } catch (const std::exception&) {
      throw ParseError("non-numeric field", lineno);
    }
  }
  const auto fit = barrier::calibrate_oxidation(pts, e0);
  out << json{{"jc_prefactor_a_per_um2", fit.jc_prefactor_a_per_um2},
              {"jc_exponent", fit.jc_exponent},
              {"rms_log_residual", fit.rms_log_residual},
              {"log_residuals", fit.log_residuals}}
             .dump(2)
      << "\n";
  return kExitOk;
}

int cmd_calibrate_groove(const std::string& cfg_a, double target_a, const std::string& cfg_b, double target_b,
                         const std::string& design, std::ostream& out) {
  const auto a = load_config(cfg_a);
  const auto b = load_config(cfg_b);
  const auto cal = variability::calibrate_groove_coupling(a.scenario, target_a, b.scenario, target_b, design);
  out << json{{"groove_coupling", cal.groove_coupling},
              {"sigma_over_mean_ic_a", cal.achieved_a},
              {"target_a", target_a},
              {"sigma_over_mean_ic_b", cal.achieved_b},
              {"target_b", target_b}}
             .dump(2)
      << "\n";
  return kExitOk;
}

// --- report -----------------------------------------------------------------

int cmd_report(const Common& c, double step, std::ostream& out) {
  auto cfg = resolve(c, false);
  OutputSet outs("report", cfg.output_dir);
  const auto& s = cfg.scenario;
  auto src = s.source;
  src.tilt_alpha_deg = s.bottom.angle_deg;
  const auto thick = geometry::thickness_map(src, s.wafer, step);
  const auto width = geometry::linewidth_map(src, s.wafer, s.mask, s.designs[0].width_nm, 0, step);
  double wmin = width.points[0].value, wmax = wmin;
  for (const auto& p : width.points) {
    wmin = std::min(wmin, p.value);
    wmax = std::max(wmax, p.value);
  }

  analysis::HeatmapOptions o;
  o.title = fmt::format("Relative thickness, tilt {} deg, throw {} mm", src.tilt_alpha_deg, src.throw_distance_mm);
  o.value_label = "rate / rate at center";
  outs.write("thickness_map.svg", analysis::wafer_heatmap(thick, o));
  o.title = fmt::format("Bottom electrode width, nominal {} nm", s.designs[0].width_nm);
  o.value_label = "width, nm";
  outs.write("linewidth_map.svg", analysis::wafer_heatmap(width, o));
  const json rep{{"tilt_deg", src.tilt_alpha_deg},
                 {"throw_distance_mm", src.throw_distance_mm},
                 {"grid_step_mm", step},
                 {"thickness_nonuniformity", geometry::nonuniformity(thick)},
                 {"nominal_width_nm", s.designs[0].width_nm},
                 {"min_width_nm", wmin},
                 {"max_width_nm", wmax}};
  outs.write("report.json", rep.dump(2) + "\n");
  outs.finish(inputs_json(c, cfg));
  out << fmt::format("thickness nonuniformity {:.4f}; bottom width {:.2f}..{:.2f} nm\n",
                     rep["thickness_nonuniformity"].get<double>(), wmin, wmax);
  return kExitOk;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Josephson junction fabrication variability toolkit", "jjfab"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  Common sim_c, sweep_c, opt_c, rep_c;
  std::string group_by = "design";
  bool realizations = false;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo spread of Ic and f01 for a scenario");
  add_common(sim, sim_c, true);
  sim->add_option("--group-by", group_by, "Summary grouping")->check(CLI::IsMember({"design", "chip"}));
  sim->add_flag("--realizations", realizations, "Also write every realization to realizations.csv");

  std::string axis;
  std::vector<std::string> values;
  auto* sw = app.add_subcommand("sweep", "Summaries over values of one scenario parameter");
  add_common(sw, sweep_c, true);
  sw->add_option("--axis", axis, "Parameter name, e.g. bottom.thickness_nm");
  sw->add_option("--values", values, "Comma-separated values")->delimiter(',');

  std::vector<std::string> free;
  std::string opt_design;
  int points = 0, rounds = -1;
  auto* opt = app.add_subcommand("optimize", "Grid search minimizing sigma/<Ic> of one design");
  add_common(opt, opt_c, true);
  opt->add_option("--free", free, "Free parameter as name=lo:hi (repeatable, 1 to 3)");
  opt->add_option("--design", opt_design, "Design id such as 150x200");
  opt->add_option("--points", points, "Grid points per axis")->check(CLI::Range(2, 101));
  opt->add_option("--rounds", rounds, "Refinement rounds")->check(CLI::Range(0, 10));

  AnalyzeArgs an;
  auto* ana = app.add_subcommand("analyze", "Statistics for measured resistances and qubit tables");
  ana->add_option("--measurements", an.measurements, "Probe-station CSV");
  ana->add_option("--qubits", an.qubits, "Qubit table CSV");
  ana->add_option("--output-dir,-o", an.output_dir, "Write reports here instead of printing JSON");
  ana->add_option("--sigma", an.sigma, "Standard deviation convention")->check(CLI::IsMember({"population", "sample"}));
  ana->add_option("--short-ohm", an.policy.short_threshold_ohm, "Short threshold");
  ana->add_option("--open-ohm", an.policy.open_threshold_ohm, "Open threshold");
  ana->add_option("--mad-k", an.policy.mad_k, "MAD multiplier for the robust filter");
  ana->add_option("--gap-ueV", an.gap_ueV, "Superconducting gap");

  JunctionArgs ja;
  auto* jn = app.add_subcommand("junction", "Single-junction electrics: f01 -> Rn or Rn -> f01");
  jn->add_option("--f01-ghz", ja.f01_ghz, "Target qubit frequency");
  jn->add_option("--rn-ohm", ja.rn_ohm, "Normal-state resistance");
  jn->add_option("--ec-mhz", ja.ec_mhz, "Charging energy EC/h");
  jn->add_option("--gap-ueV", ja.gap_ueV, "Superconducting gap");
  jn->add_option("--area-um2", ja.area_um2, "Junction area, to report jc");

  auto* cal = app.add_subcommand("calibrate", "Fit model constants to reference numbers");
  cal->require_subcommand(1);
  double th_target = 0.14, th_tilt = 60.0, th_step = 1.0;
  auto* cal_throw = cal->add_subcommand("throw", "Throw distance for a thickness nonuniformity");
  cal_throw->add_option("--target", th_target, "Nonuniformity (max-min)/(max+min)");
  cal_throw->add_option("--tilt-deg", th_tilt, "Wafer tilt");
  cal_throw->add_option("--grid-step-mm", th_step, "Map grid step")->check(CLI::PositiveNumber);
  double ed_reduction = 0.18, ed_width = 100.0, ed_mask = 0.0;
  auto* cal_edge = cal->add_subcommand("edge", "Throw distance for a linewidth shrink at the wafer edge");
  cal_edge->add_option("--reduction", ed_reduction, "Fractional shrink at the edge");
  cal_edge->add_option("--width-nm", ed_width, "Nominal line width");
  cal_edge->add_option("--mask-nm", ed_mask, "Total resist height; the imaging layer stays 100 nm (default 600)");
  std::string ox_points;
  double ox_e0 = 0.1;
  auto* cal_ox = cal->add_subcommand("oxidation", "Power-law jc(exposure) fit");
  cal_ox->add_option("--points", ox_points, "CSV with exposure_mbar_s,jc_a_per_um2")->required();
  cal_ox->add_option("--e0-mbar-s", ox_e0, "Exposure scale");
  std::string gr_a, gr_b, gr_design;
  double gr_ta = 0.058, gr_tb = 0.047;
  auto* cal_gr = cal->add_subcommand("groove", "Groove coupling fitted to two scenarios");
  cal_gr->add_option("--config-a", gr_a, "First scenario")->required();
  cal_gr->add_option("--config-b", gr_b, "Second scenario")->required();
  cal_gr->add_option("--target-a", gr_ta, "sigma/<Ic> of the first scenario (fraction)");
  cal_gr->add_option("--target-b", gr_tb, "sigma/<Ic> of the second scenario (fraction)");
  cal_gr->add_option("--design", gr_design, "Design id");

  double rep_step = 2.0;
  auto* rep = app.add_subcommand("report", "Wafer thickness and linewidth maps for a scenario");
  add_common(rep, rep_c, false);
  rep->add_option("--grid-step-mm", rep_step, "Map grid step")->check(CLI::PositiveNumber);

  auto* keys = app.add_subcommand("keys", "List every config key");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "jjfab: usage error: " << one_line(e.what()) << "\n";
    err << app.help();
    return kExitUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_c, group_by, realizations, out);
    if (sw->parsed()) return cmd_sweep(sweep_c, axis, values, out);
    if (opt->parsed()) return cmd_optimize(opt_c, free, opt_design, points, rounds, out);
    if (ana->parsed()) return cmd_analyze(an, out);
    if (jn->parsed()) return cmd_junction(ja, out);
    if (cal_throw->parsed()) return cmd_calibrate_throw(th_target, th_tilt, th_step, out);
    if (cal_edge->parsed()) return cmd_calibrate_edge(ed_reduction, ed_width, ed_mask, out);
    if (cal_ox->parsed()) return cmd_calibrate_oxidation(ox_points, ox_e0, out);
    if (cal_gr->parsed()) return cmd_calibrate_groove(gr_a, gr_ta, gr_b, gr_tb, gr_design, out);
    if (rep->parsed()) return cmd_report(rep_c, rep_step, out);
    if (keys->parsed()) {
      for (const auto& k : config_keys()) out << k << "\n";
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "jjfab: usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "jjfab: error[" << e.kind() << "]: " << one_line(e.what()) << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    err << "jjfab: error[internal]: " << one_line(e.what()) << "\n";
    return kExitError;
  }
  err << "jjfab: usage error: no subcommand\n";
  return kExitUsage;
}

}  // namespace jjfab::cli
