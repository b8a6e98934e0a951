#include "jjfab/analysis.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <tuple>

#include "jjfab/errors.hpp"

namespace jjfab::analysis {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Reads the header and every non-blank data row as (line number, fields).
template <class RowFn>
void read_csv(std::istream& in, std::string_view header, RowFn&& on_row) {
  const auto columns = split(header);
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto view = trim(line);
    if (!have_header) {
      if (view.empty()) continue;
      const auto got = split(view);
      for (const auto& col : columns) {
        if (std::none_of(got.begin(), got.end(), [&](auto g) { return trim(g) == col; }))
          throw ParseError(fmt::format("missing column '{}' (expected header {})", col, header), lineno,
                           std::string(col));
      }
      if (got.size() != columns.size())
        throw ParseError(fmt::format("unexpected extra columns (expected header {})", header), lineno);
      for (std::size_t i = 0; i < columns.size(); ++i) {
        if (trim(got[i]) != columns[i])
          throw ParseError(fmt::format("column order must be {}", header), lineno,
                           std::string(trim(got[i])));
      }
      have_header = true;
      continue;
    }
    if (view.empty()) continue;
    auto fields = split(view);
    if (fields.size() != columns.size())
      throw ParseError(fmt::format("expected {} fields, found {}", columns.size(), fields.size()), lineno);
    for (auto& f : fields) f = trim(f);
    on_row(lineno, columns, fields);
  }
  if (!have_header) throw ParseError(fmt::format("missing header {}", header), lineno + 1);
}

double number(std::size_t line, std::string_view col, std::string_view text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc{} || ptr != end || !std::isfinite(v))
    throw ParseError(fmt::format("'{}' is not a finite number", text), line, std::string(col));
  return v;
}

int integer(std::size_t line, std::string_view col, std::string_view text) {
  int v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc{} || ptr != end)
    throw ParseError(fmt::format("'{}' is not an integer", text), line, std::string(col));
  return v;
}

std::string text_field(std::size_t line, std::string_view col, std::string_view text) {
  if (text.empty()) throw ParseError("empty field", line, std::string(col));
  if (text.find('"') != std::string_view::npos)
    throw ParseError("quoted fields are not supported", line, std::string(col));
  return std::string(text);
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open '{}'", path));
  return in;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

MeasurementStatus parse_status(std::string_view text) {
  if (text == "ok") return MeasurementStatus::ok;
  if (text == "open") return MeasurementStatus::open;
  if (text == "short") return MeasurementStatus::short_circuit;
  if (text == "rejected") return MeasurementStatus::rejected;
  throw ConfigError(fmt::format("unknown status '{}' (expected ok|open|short|rejected)", text));
}

std::string_view status_name(MeasurementStatus s) {
  switch (s) {
    case MeasurementStatus::ok: return "ok";
    case MeasurementStatus::open: return "open";
    case MeasurementStatus::short_circuit: return "short";
    case MeasurementStatus::rejected: return "rejected";
  }
  return "ok";
}

std::string MeasurementRecord::design_id() const {
  return geometry::JunctionDesign{design_width_nm, design_length_nm}.id();
}

std::vector<MeasurementRecord> ingest_measurements(std::istream& in) {
  std::vector<MeasurementRecord> out;
  std::set<std::tuple<std::string, int, int, double, double>> seen;
  read_csv(in, kMeasurementHeader, [&](std::size_t line, const auto& cols, const auto& f) {
    MeasurementRecord r;
    r.chip_id = text_field(line, cols[0], f[0]);
    r.die_row = integer(line, cols[1], f[1]);
    r.die_col = integer(line, cols[2], f[2]);
    r.x_mm = number(line, cols[3], f[3]);
    r.y_mm = number(line, cols[4], f[4]);
    r.design_width_nm = number(line, cols[5], f[5]);
    r.design_length_nm = number(line, cols[6], f[6]);
    r.resistance_ohm = number(line, cols[7], f[7]);
    try {
      r.status = parse_status(f[8]);
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), line, std::string(cols[8]));
    }
    if (!(r.design_width_nm > 0.0) || !(r.design_length_nm > 0.0))
      throw ParseError("design dimensions must be > 0", line, std::string(cols[5]));
    if (r.status == MeasurementStatus::ok && !(r.resistance_ohm > 0.0))
      throw ParseError("resistance must be > 0 for status ok", line, std::string(cols[7]));
    if (!seen.emplace(r.chip_id, r.die_row, r.die_col, r.design_width_nm, r.design_length_nm).second)
      throw ParseError(fmt::format("duplicate (chip, die, design) key {}/{}/{}/{}", r.chip_id, r.die_row,
                                   r.die_col, r.design_id()),
                       line);
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<QubitRecord> ingest_qubits(std::istream& in) {
  std::vector<QubitRecord> out;
  std::set<std::pair<std::string, std::string>> seen;
  read_csv(in, kQubitHeader, [&](std::size_t line, const auto& cols, const auto& f) {
    QubitRecord q;
    q.chip_id = text_field(line, cols[0], f[0]);
    q.qubit_id = text_field(line, cols[1], f[1]);
    q.f01_ghz = number(line, cols[2], f[2]);
    q.t1_us = number(line, cols[3], f[3]);
    q.t2star_us = number(line, cols[4], f[4]);
    const double vals[] = {q.f01_ghz, q.t1_us, q.t2star_us};
    for (int i = 0; i < 3; ++i) {
      if (!(vals[i] > 0.0)) throw ParseError("value must be > 0", line, std::string(cols[2 + i]));
    }
    if (!seen.emplace(q.chip_id, q.qubit_id).second)
      throw ParseError(fmt::format("duplicate qubit {}/{}", q.chip_id, q.qubit_id), line);
    out.push_back(std::move(q));
  });
  return out;
}

std::vector<MeasurementRecord> load_measurements(const std::string& path) {
  auto in = open_input(path);
  return ingest_measurements(in);
}

std::vector<QubitRecord> load_qubits(const std::string& path) {
  auto in = open_input(path);
  return ingest_qubits(in);
}

void export_measurements(std::ostream& out, const std::vector<MeasurementRecord>& records) {
  out << kMeasurementHeader << '\n';
  for (const auto& r : records) {
    out << fmt::format("{},{},{},{},{},{},{},{},{}\n", r.chip_id, r.die_row, r.die_col, r.x_mm, r.y_mm,
                       r.design_width_nm, r.design_length_nm, r.resistance_ohm, status_name(r.status));
  }
}

void export_qubits(std::ostream& out, const std::vector<QubitRecord>& records) {
  out << kQubitHeader << '\n';
  for (const auto& q : records) {
    out << fmt::format("{},{},{},{},{}\n", q.chip_id, q.qubit_id, q.f01_ghz, q.t1_us, q.t2star_us);
  }
}

void OutlierPolicy::validate() const {
  if (!(short_threshold_ohm > 0.0) || !(open_threshold_ohm > 0.0) || !(mad_k > 0.0))
    throw ConfigError("outlier thresholds must be > 0");
  if (!(short_threshold_ohm < open_threshold_ohm))
    throw ConfigError("short threshold must be below the open threshold");
}

std::string OutlierPolicy::describe() const {
  return fmt::format(
      "short if R < {} ohm; open if R > {} ohm; then reject |R - median| > {} * MAD per design "
      "(MAD unscaled; skipped when MAD = 0)",
      short_threshold_ohm, open_threshold_ohm, mad_k);
}

OutlierResult reject_outliers(const std::vector<MeasurementRecord>& records, const OutlierPolicy& policy) {
  policy.validate();
  OutlierResult res;
  res.report.input = records.size();
  res.report.policy = policy.describe();

  std::vector<MeasurementRecord> work = records;
  std::vector<bool> keep(work.size(), false);
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < work.size(); ++i) {
    auto& r = work[i];
    if (r.status != MeasurementStatus::ok) {
      ++res.report.prior_rejected;
      continue;
    }
    if (r.resistance_ohm < policy.short_threshold_ohm) {
      r.status = MeasurementStatus::short_circuit;
      ++res.report.shorts;
    } else if (r.resistance_ohm > policy.open_threshold_ohm) {
      r.status = MeasurementStatus::open;
      ++res.report.opens;
    } else {
      keep[i] = true;
      groups[r.design_id()].push_back(i);
    }
  }

  for (const auto& [design, idx] : groups) {
    std::vector<double> rs;
    for (auto i : idx) rs.push_back(work[i].resistance_ohm);
    const double med = median_of(rs);
    std::vector<double> dev;
    for (double r : rs) dev.push_back(std::abs(r - med));
    const double mad = median_of(dev);
    if (mad == 0.0) continue;
    for (auto i : idx) {
      if (std::abs(work[i].resistance_ohm - med) > policy.mad_k * mad) {
        work[i].status = MeasurementStatus::rejected;
        keep[i] = false;
        ++res.report.mad_rejected;
      }
    }
  }

  for (std::size_t i = 0; i < work.size(); ++i) (keep[i] ? res.kept : res.rejected).push_back(work[i]);
  return res;
}

StatsSummary describe(std::string group, const std::vector<double>& values, SigmaConvention convention) {
  StatsSummary s;
  s.group = std::move(group);
  s.n = values.size();
  if (values.empty()) throw DomainError(fmt::format("group '{}' has no values", s.group));
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  const double dof =
      convention == SigmaConvention::sample ? static_cast<double>(s.n) - 1.0 : static_cast<double>(s.n);
  s.sigma = dof > 0.0 ? std::sqrt(ss / dof) : 0.0;
  s.sigma_over_mean_percent = s.mean != 0.0 ? 100.0 * s.sigma / s.mean : 0.0;
  return s;
}

GroupStats group_sigma_over_mean(const std::vector<MeasurementRecord>& records,
                                 const electrical::PhysicalConstants& constants) {
  // Keyed by (width, length) so groups come out in size order.
  std::map<std::pair<double, double>, std::vector<double>> ic;
  std::map<std::pair<double, double>, std::size_t> ignored;
  for (const auto& r : records) {
    const std::pair key{r.design_width_nm, r.design_length_nm};
    if (r.status != MeasurementStatus::ok) {
      ++ignored[key];
      ic[key];
      continue;
    }
    ic[key].push_back(electrical::ic_from_rn(r.resistance_ohm, constants));
  }
  GroupStats out;
  for (const auto& [key, values] : ic) {
    const auto id = geometry::JunctionDesign{key.first, key.second}.id();
    if (values.empty()) {
      out.warnings.push_back(fmt::format("design {} has no ok records; skipped", id));
      continue;
    }
    out.rows.push_back(describe(id, values));
  }
  return out;
}

std::vector<QubitGroupStats> qubit_table_stats(const std::vector<QubitRecord>& records,
                                               SigmaConvention convention) {
  if (records.empty()) throw DomainError("qubit table is empty");
  std::vector<std::string> order;
  std::map<std::string, std::array<std::vector<double>, 3>> by_chip;
  std::array<std::vector<double>, 3> total;
  for (const auto& q : records) {
    if (!by_chip.contains(q.chip_id)) order.push_back(q.chip_id);
    auto& cols = by_chip[q.chip_id];
    const double vals[] = {q.f01_ghz, q.t1_us, q.t2star_us};
    for (int i = 0; i < 3; ++i) {
      cols[static_cast<std::size_t>(i)].push_back(vals[i]);
      total[static_cast<std::size_t>(i)].push_back(vals[i]);
    }
  }
  auto stats = [&](const std::string& name, const std::array<std::vector<double>, 3>& cols) {
    return QubitGroupStats{name, describe(name, cols[0], convention), describe(name, cols[1], convention),
                           describe(name, cols[2], convention)};
  };
  std::vector<QubitGroupStats> out;
  for (const auto& chip : order) out.push_back(stats(chip, by_chip[chip]));
  out.push_back(stats("total", total));
  return out;
}

// --- heatmap ----------------------------------------------------------------

namespace {

std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

double infer_pitch(const std::vector<HeatCell>& cells) {
  double pitch = 0.0;
  for (auto coord : {&HeatCell::x_mm, &HeatCell::y_mm}) {
    std::vector<double> v;
    for (const auto& c : cells) v.push_back(c.*coord);
    std::sort(v.begin(), v.end());
    for (std::size_t i = 1; i < v.size(); ++i) {
      const double d = v[i] - v[i - 1];
      if (d > 1e-9 && (pitch == 0.0 || d < pitch)) pitch = d;
    }
  }
  return pitch > 0.0 ? pitch : 1.0;
}

// Linear blend from blue (low) to red (high).
std::string colour(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const auto r = static_cast<int>(std::lround(40 + t * (220 - 40)));
  const auto g = static_cast<int>(std::lround(70 + t * (50 - 70)));
  const auto b = static_cast<int>(std::lround(200 + t * (40 - 200)));
  return fmt::format("#{:02x}{:02x}{:02x}", r, g, b);
}

}  // namespace

std::string wafer_heatmap(std::vector<HeatCell> cells, const HeatmapOptions& options) {
  if (cells.empty()) throw DomainError("heatmap needs at least one positioned value");
  for (const auto& c : cells) {
    if (!std::isfinite(c.x_mm) || !std::isfinite(c.y_mm) || !std::isfinite(c.value))
      throw DomainError("heatmap values and coordinates must be finite");
  }
  if (options.pixels_per_cell < 2) throw ConfigError("pixels_per_cell must be >= 2");
  std::sort(cells.begin(), cells.end(), [](const HeatCell& a, const HeatCell& b) {
    return std::tie(a.y_mm, a.x_mm, a.value) < std::tie(b.y_mm, b.x_mm, b.value);
  });

  const double pitch = options.cell_mm > 0.0 ? options.cell_mm : infer_pitch(cells);
  const int px = options.pixels_per_cell;
  double xmin = cells[0].x_mm, xmax = xmin, ymin = cells[0].y_mm, ymax = ymin;
  double vmin = cells[0].value, vmax = vmin;
  for (const auto& c : cells) {
    xmin = std::min(xmin, c.x_mm);
    xmax = std::max(xmax, c.x_mm);
    ymin = std::min(ymin, c.y_mm);
    ymax = std::max(ymax, c.y_mm);
    vmin = std::min(vmin, c.value);
    vmax = std::max(vmax, c.value);
  }
  const int cols = static_cast<int>(std::lround((xmax - xmin) / pitch)) + 1;
  const int rows = static_cast<int>(std::lround((ymax - ymin) / pitch)) + 1;
  const int margin = 10;
  const int title_h = 24;
  const int legend_h = 56;
  const int map_w = cols * px;
  const int width = std::max(map_w, 220) + 2 * margin;
  const int height = title_h + rows * px + legend_h + 2 * margin;
  const bool flat = vmax == vmin;

  std::string svg;
  svg += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n",
      width, height, width, height);
  svg += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n", width, height);
  svg += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"13\">{}</text>\n", margin, margin + 14,
                     escape_xml(options.title));
  svg += "<g id=\"cells\">\n";
  for (const auto& c : cells) {
    const int col = static_cast<int>(std::lround((c.x_mm - xmin) / pitch));
    // Larger y is drawn higher up.
    const int row = static_cast<int>(std::lround((ymax - c.y_mm) / pitch));
    const double t = flat ? 0.5 : (c.value - vmin) / (vmax - vmin);
    svg += fmt::format(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" data-x-mm=\"{:.3f}\" "
        "data-y-mm=\"{:.3f}\" data-value=\"{:.6g}\"/>\n",
        margin + col * px, margin + title_h + row * px, px, px, colour(t), c.x_mm, c.y_mm, c.value);
  }
  svg += "</g>\n";

  const int ly = margin + title_h + rows * px + 12;
  const int bar_w = 200;
  svg += "<g id=\"legend\">\n";
  svg += "<defs><linearGradient id=\"scale\" x1=\"0\" x2=\"1\" y1=\"0\" y2=\"0\">";
  svg += fmt::format("<stop offset=\"0\" stop-color=\"{}\"/><stop offset=\"1\" stop-color=\"{}\"/>",
                     colour(flat ? 0.5 : 0.0), colour(flat ? 0.5 : 1.0));
  svg += "</linearGradient></defs>\n";
  svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"10\" fill=\"url(#scale)\"/>\n", margin,
                     ly, bar_w);
  svg += fmt::format("<text x=\"{}\" y=\"{}\">min {:.6g}</text>\n", margin, ly + 24, vmin);
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">max {:.6g}</text>\n", margin + bar_w,
                     ly + 24, vmax);
  svg += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", margin, ly + 38,
                     escape_xml(options.value_label));
  if (flat) {
    svg += fmt::format("<text x=\"{}\" y=\"{}\" class=\"note\">degenerate scale: all values equal</text>\n",
                       margin + bar_w / 2, ly + 38);
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

std::string wafer_heatmap(const geometry::ScalarField& field, const HeatmapOptions& options) {
  std::vector<HeatCell> cells;
  cells.reserve(field.points.size());
  for (const auto& p : field.points) cells.push_back({p.x_mm, p.y_mm, p.value});
  HeatmapOptions o = options;
  if (o.cell_mm <= 0.0) o.cell_mm = field.step_mm;
  return wafer_heatmap(std::move(cells), o);
}

std::vector<HeatCell> heat_cells(const std::vector<MeasurementRecord>& records, HeatValue value,
                                 const electrical::PhysicalConstants& constants) {
  std::map<std::pair<double, double>, std::pair<double, int>> acc;
  for (const auto& r : records) {
    if (r.status != MeasurementStatus::ok) continue;
    const double v = value == HeatValue::resistance_ohm ? r.resistance_ohm
                                                        : electrical::ic_from_rn(r.resistance_ohm, constants);
    auto& a = acc[{r.x_mm, r.y_mm}];
    a.first += v;
    ++a.second;
  }
  std::vector<HeatCell> out;
  for (const auto& [pos, a] : acc) out.push_back({pos.first, pos.second, a.first / a.second});
  return out;
}

}  // namespace jjfab::analysis
