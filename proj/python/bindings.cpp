#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "jjfab/analysis.hpp"
#include "jjfab/barrier.hpp"
#include "jjfab/electrical.hpp"
#include "jjfab/errors.hpp"
#include "jjfab/filmgrowth.hpp"
#include "jjfab/geometry.hpp"
#include "jjfab/variability.hpp"

namespace py = pybind11;
using namespace jjfab;

namespace {

py::dict summary_row(const variability::DistributionSummary& r) {
  py::dict d;
  d["group"] = r.group;
  d["design"] = r.design;
  d["chip"] = r.chip;
  d["mean_ic_na"] = r.mean_ic_na;
  d["sigma_over_mean_ic"] = r.sigma_over_mean_ic;
  d["mean_f01_ghz"] = r.mean_f01_ghz;
  d["sigma_over_mean_f01"] = r.sigma_over_mean_f01;
  d["sample_count"] = r.sample_count;
  d["dead_count"] = r.dead_count;
  return d;
}

py::dict stats_dict(const analysis::StatsSummary& s) {
  py::dict d;
  d["group"] = s.group;
  d["n"] = s.n;
  d["mean"] = s.mean;
  d["sigma"] = s.sigma;
  d["sigma_over_mean_percent"] = s.sigma_over_mean_percent;
  return d;
}

analysis::SigmaConvention convention(const std::string& name) {
  if (name == "population") return analysis::SigmaConvention::population;
  if (name == "sample") return analysis::SigmaConvention::sample;
  throw ConfigError("sigma convention must be 'population' or 'sample', got '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_jjfab, m) {
  m.doc() = "Josephson junction fabrication variability model";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ShadowedPointError>(m, "ShadowedPointError", base.ptr());
  py::register_exception<ZeroAreaError>(m, "ZeroAreaError", base.ptr());
  py::register_exception<CalibrationError>(m, "CalibrationError", base.ptr());
  py::register_exception<FitError>(m, "FitError", base.ptr());
  py::register_exception<OptimizationError>(m, "OptimizationError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());

  // geometry
  m.def(
      "thickness_nonuniformity",
      [](double throw_mm, double tilt_deg, double grid_step_mm) {
        geometry::SourceGeometry src;
        src.throw_distance_mm = throw_mm;
        src.tilt_alpha_deg = tilt_deg;
        return geometry::nonuniformity(geometry::thickness_map(src, {}, grid_step_mm));
      },
      py::arg("throw_mm"), py::arg("tilt_deg"), py::arg("grid_step_mm") = 1.0);
  m.def(
      "calibrate_throw",
      [](double target, double tilt_deg, double grid_step_mm) {
        return geometry::calibrate_throw(target, tilt_deg, {}, {}, grid_step_mm);
      },
      py::arg("target"), py::arg("tilt_deg"), py::arg("grid_step_mm") = 1.0);
  m.def(
      "dolan_linewidth",
      [](double nominal_w_nm, double local_angle_deg, double design_angle_deg) {
        return geometry::dolan_linewidth(nominal_w_nm, geometry::MaskStack{}, local_angle_deg, design_angle_deg)
            .width_nm;
      },
      py::arg("nominal_w_nm"), py::arg("local_angle_deg"), py::arg("design_angle_deg"));

  // film growth
  m.def(
      "surface_rms_nm",
      [](int width, double mean_height_ml, double angle_deg, int diffusion_steps, double contamination,
         std::uint64_t seed) {
        filmgrowth::GrowthConfig cfg;
        cfg.lattice_width_sites = width;
        cfg.target_mean_height_ml = mean_height_ml;
        cfg.incidence_angle_deg = angle_deg;
        cfg.diffusion_steps_per_particle = diffusion_steps;
        cfg.contamination_per_site = contamination;
        cfg.rng_seed = seed;
        return filmgrowth::rms_roughness(filmgrowth::grow_surface(cfg));
      },
      py::arg("width") = 512, py::arg("mean_height_ml") = 50.0, py::arg("angle_deg") = 0.0,
      py::arg("diffusion_steps") = 0, py::arg("contamination") = 0.0, py::arg("seed") = 1);
  m.def(
      "rate_to_mobility",
      [](double rate) {
        const auto mob = filmgrowth::rate_to_mobility(rate);
        return py::make_tuple(mob.diffusion_steps_per_particle, mob.contamination_per_site);
      },
      py::arg("rate_nm_per_s"));

  // barrier
  m.def(
      "barrier_thickness_nm",
      [](double pressure_mbar, double time_s) {
        return barrier::barrier_thickness({pressure_mbar, time_s}, barrier::BarrierModel{});
      },
      py::arg("pressure_mbar"), py::arg("time_s"));
  m.def(
      "critical_current_density",
      [](double pressure_mbar, double time_s) {
        return barrier::critical_current_density({pressure_mbar, time_s}, barrier::BarrierModel{});
      },
      py::arg("pressure_mbar"), py::arg("time_s"));
  m.def("wkb_attenuation_length_nm", &barrier::wkb_attenuation_length_nm, py::arg("barrier_height_ev"));
  m.def(
      "calibrate_oxidation",
      [](const std::vector<std::pair<double, double>>& points, double e0) {
        std::vector<barrier::CalibrationPoint> pts;
        for (const auto& [e, jc] : points) pts.push_back({e, jc});
        const auto fit = barrier::calibrate_oxidation(pts, e0);
        py::dict d;
        d["jc_prefactor_a_per_um2"] = fit.jc_prefactor_a_per_um2;
        d["jc_exponent"] = fit.jc_exponent;
        d["rms_log_residual"] = fit.rms_log_residual;
        return d;
      },
      py::arg("points"), py::arg("e0_mbar_s") = 0.1);

  // electrical
  m.def(
      "ic_from_rn",
      [](double rn, double temperature_k) {
        return electrical::ic_from_rn(rn, electrical::PhysicalConstants{}, temperature_k);
      },
      py::arg("rn_ohm"), py::arg("temperature_k") = 0.0);
  m.def("ej_over_h_ghz", &electrical::ej_over_h_ghz, py::arg("ic_na"));
  m.def(
      "transmon_f01",
      [](double ec_mhz, double ej_ghz) { return electrical::transmon_f01({ec_mhz, ej_ghz}); },
      py::arg("ec_over_h_mhz"), py::arg("ej_over_h_ghz"));
  m.def(
      "target_rn_for_frequency",
      [](double f01, double ec_mhz) {
        return electrical::target_rn_for_frequency(f01, ec_mhz, electrical::PhysicalConstants{});
      },
      py::arg("f01_ghz"), py::arg("ec_over_h_mhz") = 250.0);

  // variability
  py::class_<variability::ProcessScenario>(m, "Scenario")
      .def(py::init<>())
      .def(
          "set",
          [](variability::ProcessScenario& s, const std::string& name, py::object value) {
            if (py::isinstance<py::str>(value)) {
              variability::set_parameter(s, name, value.cast<std::string>());
            } else {
              variability::set_parameter(s, name, value.cast<double>());
            }
          },
          py::arg("name"), py::arg("value"))
      .def("validate", &variability::ProcessScenario::validate)
      .def(
          "fix_roughness",
          [](variability::ProcessScenario& s, double bottom_rms, double bottom_ler, double top_rms,
             double top_ler) {
            s.bottom_roughness = filmgrowth::RoughnessReport{bottom_rms, bottom_ler};
            s.top_roughness = filmgrowth::RoughnessReport{top_rms, top_ler};
          },
          py::arg("bottom_rms_nm"), py::arg("bottom_ler_nm"), py::arg("top_rms_nm"), py::arg("top_ler_nm"))
      .def_property(
          "designs",
          [](const variability::ProcessScenario& s) {
            std::vector<std::pair<double, double>> out;
            for (const auto& d : s.designs) out.emplace_back(d.width_nm, d.length_nm);
            return out;
          },
          [](variability::ProcessScenario& s, const std::vector<std::pair<double, double>>& designs) {
            s.designs.clear();
            for (const auto& [w, l] : designs) s.designs.push_back({w, l});
          })
      .def_readwrite("sample_count", &variability::ProcessScenario::sample_count)
      .def_readwrite("rng_seed", &variability::ProcessScenario::rng_seed)
      .def_readwrite("area_sigma_rel", &variability::ProcessScenario::area_sigma_rel)
      .def_readwrite("wafer_geometry", &variability::ProcessScenario::wafer_geometry);
  m.def("parameter_names", &variability::parameter_names);
  m.def(
      "simulate",
      [](const variability::ProcessScenario& s, const std::string& grouping) {
        variability::Grouping g;
        if (grouping == "design") {
          g = variability::Grouping::by_design;
        } else if (grouping == "chip") {
          g = variability::Grouping::by_chip;
        } else {
          throw ConfigError("grouping must be 'design' or 'chip', got '" + grouping + "'");
        }
        variability::SummaryTable table;
        {
          py::gil_scoped_release release;
          table = variability::simulate(s, g);
        }
        py::list rows;
        for (const auto& r : table.rows) rows.append(summary_row(r));
        return rows;
      },
      py::arg("scenario"), py::arg("grouping") = "design");
  m.def("linear_sigma_over_mean_ic", &variability::linear_sigma_over_mean_ic, py::arg("area_sigma_rel"),
        py::arg("sigma_d_nm"), py::arg("lambda_nm"), py::arg("sigma_leak_rel"));

  // analysis
  m.def(
      "describe",
      [](const std::vector<double>& values, const std::string& sigma) {
        return stats_dict(analysis::describe("", values, convention(sigma)));
      },
      py::arg("values"), py::arg("sigma") = "population");
  m.def(
      "qubit_table_stats",
      [](const std::string& path, const std::string& sigma) {
        py::list out;
        for (const auto& g : analysis::qubit_table_stats(analysis::load_qubits(path), convention(sigma))) {
          py::dict d;
          d["group"] = g.group;
          d["f01_ghz"] = stats_dict(g.f01_ghz);
          d["t1_us"] = stats_dict(g.t1_us);
          d["t2star_us"] = stats_dict(g.t2star_us);
          out.append(d);
        }
        return out;
      },
      py::arg("path"), py::arg("sigma") = "population");
  m.def(
      "design_sigma_over_mean",
      [](const std::string& path, bool reject) {
        auto records = analysis::load_measurements(path);
        if (reject) records = analysis::reject_outliers(records).kept;
        py::list out;
        for (const auto& s : analysis::group_sigma_over_mean(records).rows) out.append(stats_dict(s));
        return out;
      },
      py::arg("path"), py::arg("reject_outliers") = true);
}
