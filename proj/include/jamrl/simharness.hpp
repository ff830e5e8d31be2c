#pragma once

#include <cstdint>
#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "jamrl/baselines.hpp"

namespace jamrl {

enum class SweptParameter : std::uint8_t { PAttack, PArrival };

std::string_view to_string(SweptParameter p);
std::optional<SweptParameter> parse_swept_parameter(std::string_view name);

struct SweepSpec {
  SweptParameter parameter = SweptParameter::PAttack;
  std::vector<double> values;
  EnvConfig base;
  std::vector<StrategyKind> strategies{kAllStrategies.begin(), kAllStrategies.end()};
  TrainerKind trainer = TrainerKind::Vi;
  TrainerSettings settings;
  long horizon = 100'000;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
};

/// p_attack in 0.1 .. 0.9 at the base arrival probability.
SweepSpec jamming_sweep(const EnvConfig& base);
/// p_arrival in 0.1 .. 0.9 at p_attack = 0.6.
SweepSpec arrival_sweep(const EnvConfig& base);

/// Throws ConfigError for an empty value list, a non-positive horizon, no
/// seeds, no strategies or any value that makes the derived config invalid.
void validate(const SweepSpec& spec);

/// Copy of `base` with the swept field set.
EnvConfig config_at(const SweepSpec& spec, double value);

struct SweepRow {
  double value = 0.0;
  StrategyKind strategy = StrategyKind::Proposed;
  double throughput = 0.0;
  double throughput_ci = 0.0;
  double dropped = 0.0;
  double dropped_ci = 0.0;
  std::size_t seeds = 0;
  long horizon = 0;
  std::vector<SeedMetrics> per_seed;
};

struct SweepResult {
  SweptParameter parameter = SweptParameter::PAttack;
  /// Value-major, strategies in spec order.
  std::vector<SweepRow> rows;

  const SweepRow* find(double value, StrategyKind strategy) const;
};

/// Raised when building or evaluating one sweep point fails.
class SweepError : public std::runtime_error {
 public:
  SweepError(SweptParameter p, double value, StrategyKind k, const std::string& what);
};

/// Every (value, strategy) point is trained from scratch and evaluated; the
/// points run in parallel and are assembled in spec order.
SweepResult run_sweep(const SweepSpec& spec);

/// Single-threaded reference of run_sweep.
SweepResult run_sweep_serial(const SweepSpec& spec);

/// `param,value,strategy,throughput,throughput_ci,dropped,dropped_ci,seeds,horizon`.
void write_sweep_csv(std::ostream& out, const SweepResult& result);

struct SummaryRow {
  double value = 0.0;
  double proposed = 0.0;
  double ratio_dh = 0.0;
  double ratio_db = 0.0;
  double ratio_wd = 0.0;
  /// Proposed >= DH >= DB >= WD by mean throughput.
  bool ordered = false;
};

/// Proposed-over-baseline throughput ratios per sweep value. Requires all four
/// strategies at every value.
std::vector<SummaryRow> summarize(const SweepResult& result);

/// `value,proposed,ratio_dh,ratio_db,ratio_wd,ordered`.
void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows);

}  // namespace jamrl
