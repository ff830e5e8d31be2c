#include "jamrl/baselines.hpp"

namespace jamrl {

namespace {

constexpr std::array<std::string_view, 4> kStrategyNames{"proposed", "dh", "db", "wd"};
constexpr std::array<std::string_view, 3> kTrainerNames{"vi", "tabular", "dqn"};

}  // namespace

std::string_view to_string(StrategyKind k) { return kStrategyNames[static_cast<std::size_t>(k)]; }

std::optional<StrategyKind> parse_strategy(std::string_view name) {
  for (StrategyKind k : kAllStrategies) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::string_view to_string(TrainerKind k) { return kTrainerNames[static_cast<std::size_t>(k)]; }

std::optional<TrainerKind> parse_trainer(std::string_view name) {
  for (std::size_t i = 0; i < kTrainerNames.size(); ++i) {
    if (kTrainerNames[i] == name) return static_cast<TrainerKind>(i);
  }
  return std::nullopt;
}

ActionKind wd_policy(State s, const EnvConfig& cfg) {
  if (s.queue >= 1 && s.energy >= cfg.cost_active) return ActionKind::ActiveTransmit;
  return ActionKind::PassiveHarvest;
}

ActionSet restricted_action_set(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::Proposed:
      return ActionSet::all();
    case StrategyKind::DH:
      return {ActionKind::PassiveHarvest, ActionKind::ActiveTransmit, ActionKind::DeceiveHarvest};
    case StrategyKind::DB:
      return {ActionKind::PassiveHarvest, ActionKind::ActiveTransmit,
              ActionKind::DeceiveBackscatter};
    case StrategyKind::WD:
      return {ActionKind::PassiveHarvest, ActionKind::ActiveTransmit};
  }
  return ActionSet::all();
}

Policy build_strategy(StrategyKind kind, const EnvConfig& cfg, TrainerKind trainer,
                      const TrainerSettings& settings) {
  validate_config(cfg);
  const ActionSet allowed = restricted_action_set(kind);

  if (kind == StrategyKind::WD) {
    Policy p(cfg, ActionKind::PassiveHarvest);
    for (std::size_t i = 0; i < cfg.num_states(); ++i) p.set(i, wd_policy(cfg.state_at(i), cfg));
    return p;
  }

  switch (trainer) {
    case TrainerKind::Vi: {
      ValueIterationOptions opt = settings.vi;
      opt.allowed = allowed;
      return value_iteration(cfg, opt).policy;
    }
    case TrainerKind::Tabular: {
      TabularHyperparams hp = settings.tabular;
      hp.allowed = allowed;
      hp.snapshot_every = 0;
      Rng rng(settings.seed);
      return greedy_policy(q_learning(cfg, hp, rng).q);
    }
    case TrainerKind::Dqn: {
      DqnHyperparams hp = settings.dqn;
      hp.allowed = allowed;
      hp.record_trace = false;
      Rng rng(settings.seed);
      return actor_learner_loop(cfg, hp, rng).policy;
    }
  }
  throw std::logic_error("unknown trainer");
}

}  // namespace jamrl
