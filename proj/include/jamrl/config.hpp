#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "jamrl/baselines.hpp"
#include "jamrl/simharness.hpp"

namespace jamrl {

enum class SweepFigure : std::uint8_t { Jamming, Arrival };

std::string_view to_string(SweepFigure f);
std::optional<SweepFigure> parse_figure(std::string_view name);

struct SweepSection {
  SweepFigure figure = SweepFigure::Jamming;
  /// Empty means the figure's default grid.
  std::vector<double> values;
  std::vector<StrategyKind> strategies{kAllStrategies.begin(), kAllStrategies.end()};
};

/// Everything a CLI run needs. Serializes to the JSON layout documented in
/// the README; each section and key is optional on input, unknown keys are
/// rejected.
struct RunConfig {
  EnvConfig env;
  TrainerKind trainer = TrainerKind::Vi;
  TrainerSettings settings;
  long horizon = 100'000;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  StrategyKind strategy = StrategyKind::Proposed;
  std::optional<SweepSection> sweep;
  std::string output_dir = "out";
};

/// Throws ConfigError naming the dotted path of the offending key.
EnvConfig env_config_from_json(const nlohmann::json& j, const std::string& where = "env");
nlohmann::json to_json(const EnvConfig& cfg);

RunConfig run_config_from_json(const nlohmann::json& j);

/// Resolved configuration without output_dir, suitable as a manifest: feeding
/// it back through run_config_from_json reproduces the run.
nlohmann::json to_json(const RunConfig& rc);

/// Reads and parses a file; I/O failures are reported as ConfigError with the
/// path as field.
RunConfig load_run_config(const std::filesystem::path& path);

/// Accepts either a bare EnvConfig object or a run config with an "env" section.
EnvConfig load_env_config(const std::filesystem::path& path);

/// Validates all sections: env, trainer hyperparameters, evaluation and sweep.
void validate(const RunConfig& rc);

SweepSpec make_sweep_spec(const RunConfig& rc);

}  // namespace jamrl
