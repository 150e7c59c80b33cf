#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fedhvac/orchestrator/experiment.hpp"

namespace fedhvac::cli {

/// Parse or validation failure. what() carries "line N" or the offending key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cross product of per-key value lists. Keys are "section.key" paths.
struct SweepSpec {
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;

  std::size_t size() const;  // number of configurations
  bool operator==(const SweepSpec&) const = default;
};

/// learning rate {3e-4, 1e-3, 1e-2, 1e-1} x local updates {4, 12, 24}.
SweepSpec default_sweep();

struct ConfigFile {
  orchestrator::ExperimentConfig experiment;
  SweepSpec sweep;
  std::vector<std::string> explicit_keys;  // "section.key" paths present in the file

  bool sets(std::string_view path) const;
};

/// Dialect:
///   # comment
///   [section]
///   key = value        value: number | true/false | "string" | bare-word | [v1, v2, ...]
ConfigFile parse_config(std::string_view text, std::string_view source = "<config>");
ConfigFile load_config(const std::filesystem::path& path);

/// Applies "section.key" = value overrides, later entries winning, then validates.
void apply_overrides(orchestrator::ExperimentConfig& config,
                     const std::vector<std::pair<std::string, std::string>>& overrides);

/// Every key, every section; parse_config(emit_config(c)).experiment == c.
std::string emit_config(const orchestrator::ExperimentConfig& config, const SweepSpec* sweep = nullptr);

/// All "section.key" paths accepted in a config file (sweep section excluded).
std::vector<std::string> config_keys();

struct SweepPoint {
  orchestrator::ExperimentConfig config;
  std::vector<std::pair<std::string, std::string>> assignment;
};

/// Expands the grid in row-major order (last axis fastest). Each point's name gets
/// the assignment appended.
std::vector<SweepPoint> expand_sweep(const orchestrator::ExperimentConfig& base, const SweepSpec& sweep);

}  // namespace fedhvac::cli
