#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jjfab/variability.hpp"

namespace jjfab::cli {

enum class OutputFormat { csv, json };

struct SweepSpec {
  std::string axis;
  std::vector<std::string> values;
};

struct OptimizeSpec {
  std::vector<variability::FreeParameter> free;
  variability::OptimizeOptions options;
};

/// Everything a config file can set. Keys carry their units in the name.
struct RunConfig {
  variability::ProcessScenario scenario;
  std::optional<std::uint64_t> seed;
  std::string output_dir = "jjfab_out";
  OutputFormat format = OutputFormat::csv;
  SweepSpec sweep;
  OptimizeSpec optimize;
};

/// Parses an INI-style file. Unknown sections or keys are ConfigErrors.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");

/// "name=lo:hi"
variability::FreeParameter parse_free_parameter(const std::string& text);
std::vector<std::string> split_list(const std::string& text, char sep = ',');
OutputFormat parse_format(const std::string& text);

/// Every accepted "section.key", for help text and error messages.
std::vector<std::string> config_keys();

}  // namespace jjfab::cli
