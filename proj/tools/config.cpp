#include "config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "jjfab/errors.hpp"

namespace jjfab::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& text) {
  const auto t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(v))
    throw ConfigError(fmt::format("{}: '{}' is not a finite number", key, text));
  return v;
}

std::int64_t to_int(const std::string& key, const std::string& text) {
  const auto t = trim(text);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size())
    throw ConfigError(fmt::format("{}: '{}' is not an integer", key, text));
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  const auto t = trim(text);
  if (t == "true") return true;
  if (t == "false") return false;
  throw ConfigError(fmt::format("{}: expected true or false, got '{}'", key, text));
}

std::uint64_t to_seed(const std::string& key, const std::string& text) {
  const auto v = to_int(key, text);
  if (v < 0) throw ConfigError(fmt::format("{} must be >= 0", key));
  return static_cast<std::uint64_t>(v);
}

int to_small_int(const std::string& key, const std::string& text) {
  const auto v = to_int(key, text);
  if (v < -1000000000 || v > 1000000000) throw ConfigError(fmt::format("{} out of range", key));
  return static_cast<int>(v);
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

// Keys routed straight to variability::set_parameter.
void scenario_param(RunConfig& c, const std::string& key, const std::string& value) {
  variability::set_parameter(c.scenario, key, value);
}

void set_override(std::optional<filmgrowth::RoughnessReport>& slot, bool rms, double v) {
  if (!slot) slot = filmgrowth::RoughnessReport{};
  (rms ? slot->rms_nm : slot->ler_nm) = v;
}

const std::map<std::string, Setter>& key_table() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto d = [](auto member) {
      return [member](RunConfig& c, const std::string& k, const std::string& v) {
        member(c) = to_double(k, v);
      };
    };
    t["run.seed"] = [](RunConfig& c, const auto& k, const auto& v) { c.seed = to_seed(k, v); };
    t["run.output_dir"] = [](RunConfig& c, const auto&, const auto& v) { c.output_dir = trim(v); };
    t["run.format"] = [](RunConfig& c, const auto&, const auto& v) { c.format = parse_format(trim(v)); };

    for (const auto& n : variability::parameter_names()) {
      if (n.find('.') != std::string::npos) t[n] = scenario_param;
    }
    t["geometry.source_offset_x_mm"] = d([](RunConfig& c) -> double& { return c.scenario.source.source_offset_mm.x; });
    t["geometry.source_offset_y_mm"] = d([](RunConfig& c) -> double& { return c.scenario.source.source_offset_mm.y; });
    t["geometry.wafer_radius_mm"] = d([](RunConfig& c) -> double& { return c.scenario.wafer.radius_mm; });
    t["mask.bridge_width_nm"] = d([](RunConfig& c) -> double& { return c.scenario.mask.bridge_width_nm; });
    t["mask.undercut_nm"] = d([](RunConfig& c) -> double& { return c.scenario.mask.undercut_nm; });

    t["bottom.rms_nm"] = [](RunConfig& c, const auto& k, const auto& v) {
      set_override(c.scenario.bottom_roughness, true, to_double(k, v));
    };
    t["bottom.ler_nm"] = [](RunConfig& c, const auto& k, const auto& v) {
      set_override(c.scenario.bottom_roughness, false, to_double(k, v));
    };
    t["top.rms_nm"] = [](RunConfig& c, const auto& k, const auto& v) {
      set_override(c.scenario.top_roughness, true, to_double(k, v));
    };
    t["top.ler_nm"] = [](RunConfig& c, const auto& k, const auto& v) {
      set_override(c.scenario.top_roughness, false, to_double(k, v));
    };

    t["growth.rms_width_sites"] = [](RunConfig& c, const auto& k, const auto& v) {
      c.scenario.growth.rms_width_sites = to_small_int(k, v);
    };
    t["growth.ler_length_sites"] = [](RunConfig& c, const auto& k, const auto& v) {
      c.scenario.growth.ler_length_sites = to_small_int(k, v);
    };
    t["growth.seeds"] = [](RunConfig& c, const auto& k, const auto& v) {
      c.scenario.growth.seeds = to_small_int(k, v);
    };
    t["growth.base_seed"] = [](RunConfig& c, const auto& k, const auto& v) {
      c.scenario.growth.base_seed = to_seed(k, v);
    };
    t["growth.edge_mask_height_ml"] = d([](RunConfig& c) -> double& { return c.scenario.growth.edge_mask_height_ml; });
    t["growth.monolayer_nm"] = d([](RunConfig& c) -> double& { return c.scenario.growth.monolayer_nm; });
    t["growth.contamination_const_nm_per_s"] =
        d([](RunConfig& c) -> double& { return c.scenario.growth.contamination_const; });
    t["growth.diffusion_const_nm"] = d([](RunConfig& c) -> double& { return c.scenario.growth.diffusion_const; });

    t["barrier.d0_nm"] = d([](RunConfig& c) -> double& { return c.scenario.barrier.d0_nm; });
    t["barrier.c_nm"] = d([](RunConfig& c) -> double& { return c.scenario.barrier.c_nm; });
    t["barrier.e0_mbar_s"] = d([](RunConfig& c) -> double& { return c.scenario.barrier.e0_mbar_s; });
    t["barrier.jc_prefactor_a_per_um2"] =
        d([](RunConfig& c) -> double& { return c.scenario.barrier.jc_prefactor_a_per_um2; });
    t["barrier.jc_exponent"] = d([](RunConfig& c) -> double& { return c.scenario.barrier.jc_exponent; });
    t["barrier.specific_resistance_ohm_um2"] =
        d([](RunConfig& c) -> double& { return c.scenario.barrier.specific_resistance_ohm_um2; });
    t["electrical.gap_delta_ueV"] = d([](RunConfig& c) -> double& { return c.scenario.constants.gap_delta_ueV; });

    t["scenario.designs"] = [](RunConfig& c, const auto& k, const auto& v) {
      c.scenario.designs.clear();
      for (const auto& item : split_list(v)) {
        const auto x = item.find('x');
        if (x == std::string::npos) throw ConfigError(fmt::format("{}: '{}' is not WIDTHxLENGTH", k, item));
        c.scenario.designs.push_back({to_double(k, item.substr(0, x)), to_double(k, item.substr(x + 1))});
      }
    };
    t["scenario.sample_count"] = [](RunConfig& c, const auto& k, const auto& v) {
      c.scenario.sample_count = to_int(k, v);
    };
    t["scenario.area_sigma_rel"] = d([](RunConfig& c) -> double& { return c.scenario.area_sigma_rel; });
    t["scenario.wafer_geometry"] = [](RunConfig& c, const auto& k, const auto& v) {
      c.scenario.wafer_geometry = to_bool(k, v);
    };

    t["sweep.axis"] = [](RunConfig& c, const auto&, const auto& v) { c.sweep.axis = trim(v); };
    t["sweep.values"] = [](RunConfig& c, const auto&, const auto& v) { c.sweep.values = split_list(v); };
    t["optimize.free"] = [](RunConfig& c, const auto&, const auto& v) {
      c.optimize.free.clear();
      for (const auto& item : split_list(v, ';')) c.optimize.free.push_back(parse_free_parameter(item));
    };
    t["optimize.design"] = [](RunConfig& c, const auto&, const auto& v) { c.optimize.options.design = trim(v); };
    t["optimize.points_per_axis"] = [](RunConfig& c, const auto& k, const auto& v) {
      c.optimize.options.points_per_axis = to_small_int(k, v);
    };
    t["optimize.refinement_rounds"] = [](RunConfig& c, const auto& k, const auto& v) {
      c.optimize.options.refinement_rounds = to_small_int(k, v);
    };
    return t;
  }();
  return table;
}

const char* const kChipKeys[] = {"center_x_mm", "center_y_mm", "size_mm", "dies_per_side"};

void apply_chip(variability::ChipPlacement& chip, const std::string& section, const std::string& key,
                const std::string& value) {
  const auto full = section + "." + key;
  if (key == "center_x_mm") chip.center_mm.x = to_double(full, value);
  else if (key == "center_y_mm") chip.center_mm.y = to_double(full, value);
  else if (key == "size_mm") chip.size_mm = to_double(full, value);
  else if (key == "dies_per_side") chip.dies_per_side = to_small_int(full, value);
  else throw ConfigError(fmt::format("unknown key '{}'", full));
}

}  // namespace

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

OutputFormat parse_format(const std::string& text) {
  if (text == "csv") return OutputFormat::csv;
  if (text == "json") return OutputFormat::json;
  throw ConfigError(fmt::format("unknown format '{}' (expected csv|json)", text));
}

variability::FreeParameter parse_free_parameter(const std::string& text) {
  const auto eq = text.find('=');
  const auto colon = text.find(':', eq == std::string::npos ? 0 : eq);
  if (eq == std::string::npos || colon == std::string::npos)
    throw ConfigError(fmt::format("free parameter '{}' must look like name=lo:hi", text));
  const auto name = trim(text.substr(0, eq));
  return {name, to_double(name, text.substr(eq + 1, colon - eq - 1)), to_double(name, text.substr(colon + 1))};
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : key_table()) keys.push_back(k);
  for (const char* k : kChipKeys) keys.push_back(std::string("chip.") + k);
  std::sort(keys.begin(), keys.end());
  return keys;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(fmt::format("{}:{}: {}", origin, e.line(), e.message()));
  }

  RunConfig cfg;
  std::vector<variability::ChipPlacement> chips;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(fmt::format("{}: key '{}' must sit inside a [section]", origin, section));
    const bool chip = section == "chip" || section.rfind("chip.", 0) == 0;
    if (chip) chips.emplace_back();
    for (const auto& [key, node] : body) {
      const auto value = node.get_value<std::string>();
      if (chip) {
        apply_chip(chips.back(), section, key, value);
        continue;
      }
      const auto full = section + "." + key;
      const auto& table = key_table();
      const auto it = table.find(full);
      if (it == table.end())
        throw ConfigError(fmt::format("{}: unknown key '{}' (see 'jjfab keys')", origin, full));
      it->second(cfg, full, value);
    }
  }
  if (!chips.empty()) cfg.scenario.chips = chips;
  for (const auto* slot : {&cfg.scenario.bottom_roughness, &cfg.scenario.top_roughness}) {
    if (*slot && (!(slot->value().rms_nm >= 0.0) || !(slot->value().ler_nm >= 0.0)))
      throw ConfigError(fmt::format("{}: roughness overrides must be >= 0", origin));
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace jjfab::cli
