#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "jamrl/drl.hpp"
#include "jamrl/mdp.hpp"
#include "jamrl/planning.hpp"

namespace jamrl {

/// Proposed: all four modes. DH: deception then harvest only. DB: deception
/// then backscatter only. WD: no deception, transmit whenever possible.
enum class StrategyKind : std::uint8_t { Proposed, DH, DB, WD };

inline constexpr std::array<StrategyKind, 4> kAllStrategies{
    StrategyKind::Proposed, StrategyKind::DH, StrategyKind::DB, StrategyKind::WD};

std::string_view to_string(StrategyKind k);
std::optional<StrategyKind> parse_strategy(std::string_view name);

enum class TrainerKind : std::uint8_t { Vi, Tabular, Dqn };

std::string_view to_string(TrainerKind k);
std::optional<TrainerKind> parse_trainer(std::string_view name);

/// ActiveTransmit when there is data and enough energy, else PassiveHarvest.
ActionKind wd_policy(State s, const EnvConfig& cfg);

ActionSet restricted_action_set(StrategyKind kind);

struct TrainerSettings {
  ValueIterationOptions vi;
  TabularHyperparams tabular;
  DqnHyperparams dqn;
  /// Seed of the learning trainers' random source.
  std::uint64_t seed = 1;
};

/// Greedy policy of `trainer` restricted to the strategy's action set; WD
/// ignores the trainer and tabulates wd_policy. The action set in `settings`
/// is overridden by the strategy's.
Policy build_strategy(StrategyKind kind, const EnvConfig& cfg, TrainerKind trainer,
                      const TrainerSettings& settings);

}  // namespace jamrl
