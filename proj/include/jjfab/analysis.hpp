#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "jjfab/electrical.hpp"
#include "jjfab/geometry.hpp"

namespace jjfab::analysis {

enum class MeasurementStatus { ok, open, short_circuit, rejected };

MeasurementStatus parse_status(std::string_view text);
std::string_view status_name(MeasurementStatus s);

struct MeasurementRecord {
  std::string chip_id;
  int die_row = 0;
  int die_col = 0;
  double x_mm = 0.0;
  double y_mm = 0.0;
  double design_width_nm = 0.0;
  double design_length_nm = 0.0;
  double resistance_ohm = 0.0;
  MeasurementStatus status = MeasurementStatus::ok;

  std::string design_id() const;
};

struct QubitRecord {
  std::string chip_id;
  std::string qubit_id;
  double f01_ghz = 0.0;
  double t1_us = 0.0;
  double t2star_us = 0.0;
};

inline constexpr std::string_view kMeasurementHeader =
    "chip_id,die_row,die_col,x_mm,y_mm,design_width_nm,design_length_nm,resistance_ohm,status";
inline constexpr std::string_view kQubitHeader = "chip_id,qubit_id,f01_ghz,t1_us,t2star_us";

/// Throws ParseError naming the 1-based line and column.
std::vector<MeasurementRecord> ingest_measurements(std::istream& in);
std::vector<QubitRecord> ingest_qubits(std::istream& in);
std::vector<MeasurementRecord> load_measurements(const std::string& path);
std::vector<QubitRecord> load_qubits(const std::string& path);

/// Numbers are written in shortest round-trip form, so export after ingest is
/// a fixed point.
void export_measurements(std::ostream& out, const std::vector<MeasurementRecord>& records);
void export_qubits(std::ostream& out, const std::vector<QubitRecord>& records);

struct OutlierPolicy {
  double short_threshold_ohm = 100.0;
  double open_threshold_ohm = 1e6;
  /// Rows further than k * MAD (unscaled median absolute deviation) from
  /// their design's median resistance are rejected.
  double mad_k = 5.0;

  void validate() const;
  std::string describe() const;
};

struct OutlierReport {
  std::size_t input = 0;
  std::size_t shorts = 0;
  std::size_t opens = 0;
  std::size_t mad_rejected = 0;
  std::size_t prior_rejected = 0;  // rows that arrived with a non-ok status
  std::string policy;
};

struct OutlierResult {
  std::vector<MeasurementRecord> kept;
  std::vector<MeasurementRecord> rejected;
  OutlierReport report;
};

OutlierResult reject_outliers(const std::vector<MeasurementRecord>& records, const OutlierPolicy& policy = {});

enum class SigmaConvention { population, sample };

struct StatsSummary {
  std::string group;
  std::size_t n = 0;
  double mean = 0.0;
  double sigma = 0.0;
  double sigma_over_mean_percent = 0.0;
};

StatsSummary describe(std::string group, const std::vector<double>& values,
                      SigmaConvention convention = SigmaConvention::population);

struct GroupStats {
  std::vector<StatsSummary> rows;  // mean and sigma of Ic in nA
  std::vector<std::string> warnings;
};

/// sigma/<Ic> per design, with Ic from the Ambegaokar-Baratoff relation.
/// Records whose status is not ok are ignored.
GroupStats group_sigma_over_mean(const std::vector<MeasurementRecord>& records,
                                 const electrical::PhysicalConstants& constants = {});

struct QubitGroupStats {
  std::string group;  // chip id, or "total"
  StatsSummary f01_ghz;
  StatsSummary t1_us;
  StatsSummary t2star_us;
};

/// One entry per chip in order of first appearance, then the total.
std::vector<QubitGroupStats> qubit_table_stats(const std::vector<QubitRecord>& records,
                                               SigmaConvention convention = SigmaConvention::population);

struct HeatCell {
  double x_mm;
  double y_mm;
  double value;
};

struct HeatmapOptions {
  std::string title;
  std::string value_label;
  double cell_mm = 0.0;  // 0 infers the pitch from the coordinates
  int pixels_per_cell = 24;
};

/// Deterministic SVG: cells sorted by (y, x), linear blue-to-red scale and a
/// min/max legend. Equal values give one colour plus a note.
std::string wafer_heatmap(std::vector<HeatCell> cells, const HeatmapOptions& options = {});
std::string wafer_heatmap(const geometry::ScalarField& field, const HeatmapOptions& options = {});

enum class HeatValue { resistance_ohm, ic_na };
std::vector<HeatCell> heat_cells(const std::vector<MeasurementRecord>& records, HeatValue value,
                                 const electrical::PhysicalConstants& constants = {});

}  // namespace jjfab::analysis
