#include "jamrl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "jamrl/text.hpp"

namespace jamrl {

namespace {

constexpr std::array<std::string_view, kNumActions> kActionNames{
    "passive_harvest", "active_transmit", "deceive_harvest", "deceive_backscatter"};

struct Branch {
  bool attacked;
  bool ambient;
  bool arrived;
};

// The deterministic part of a slot once the three Bernoulli events are known.
StepOutcome resolve(State s, ActionKind a, const EnvConfig& cfg, Branch b) {
  StepOutcome out;
  out.attacked = b.attacked;
  out.ambient = b.ambient;
  out.arrived = b.arrived;

  int energy = s.energy - action_cost(a, cfg);
  int queue = s.queue;

  switch (a) {
    case ActionKind::PassiveHarvest:
      if (b.ambient) energy += cfg.ambient_gain;
      break;
    case ActionKind::ActiveTransmit: {
      const int sent = std::min(cfg.tx_packets, queue);
      queue -= sent;
      if (b.attacked) {
        out.dropped += sent;
      } else {
        out.delivered += sent;
      }
      break;
    }
    case ActionKind::DeceiveHarvest:
      if (b.attacked) {
        energy += cfg.harvest_jam;
      } else if (b.ambient) {
        energy += cfg.ambient_gain;
      }
      break;
    case ActionKind::DeceiveBackscatter:
      if (b.attacked) {
        const int sent = std::min(cfg.bs_packets, queue);
        queue -= sent;
        out.delivered += sent;
      } else if (b.ambient) {
        energy += cfg.ambient_gain;
      }
      break;
  }

  if (b.arrived) {
    queue += cfg.arrival_batch;
    const int overflow = std::max(0, queue - cfg.d_max);
    queue -= overflow;
    out.dropped += overflow;
  }

  out.next = {std::min(energy, cfg.e_max), queue};
  return out;
}

bool draws_attack(ActionKind a) { return a != ActionKind::PassiveHarvest; }

bool draws_ambient(ActionKind a, bool attacked) {
  switch (a) {
    case ActionKind::PassiveHarvest:
      return true;
    case ActionKind::ActiveTransmit:
      return false;
    case ActionKind::DeceiveHarvest:
    case ActionKind::DeceiveBackscatter:
      return !attacked;
  }
  return false;
}

void require_feasible(State s, ActionKind a, const EnvConfig& cfg) {
  if (!cfg.contains(s) || !feasible_actions(s, cfg).contains(a)) throw InfeasibleAction(s, a);
}

void check_probability(const char* field, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(field, "probability must lie in [0, 1]");
}

void check_at_least(const char* field, long long value, long long min) {
  if (value < min) {
    throw ConfigError(field, "must be at least " + std::to_string(min));
  }
}

}  // namespace

std::string_view to_string(ActionKind a) { return kActionNames[index_of(a)]; }

std::optional<ActionKind> parse_action(std::string_view name) {
  for (ActionKind a : kAllActions) {
    if (kActionNames[index_of(a)] == name) return a;
  }
  return std::nullopt;
}

std::vector<ActionKind> ActionSet::members() const {
  std::vector<ActionKind> out;
  for (ActionKind a : kAllActions) {
    if (contains(a)) out.push_back(a);
  }
  return out;
}

InfeasibleAction::InfeasibleAction(State s, ActionKind a)
    : std::logic_error("action " + std::string(to_string(a)) + " is infeasible in state (energy=" +
                       std::to_string(s.energy) + ", queue=" + std::to_string(s.queue) + ")") {}

const EnvConfig& validate_config(const EnvConfig& cfg) {
  check_at_least("e_max", cfg.e_max, 1);
  check_at_least("d_max", cfg.d_max, 1);
  check_at_least("cost_fake", cfg.cost_fake, 0);
  if (cfg.cost_fake > cfg.e_max) throw ConfigError("cost_fake", "exceeds battery capacity e_max");
  check_at_least("cost_active", cfg.cost_active, 0);
  if (cfg.cost_active > cfg.e_max) {
    throw ConfigError("cost_active", "exceeds battery capacity e_max");
  }
  check_at_least("tx_packets", cfg.tx_packets, 0);
  check_at_least("harvest_jam", cfg.harvest_jam, 0);
  check_at_least("bs_packets", cfg.bs_packets, 0);
  check_probability("p_attack", cfg.p_attack);
  check_probability("p_arrival", cfg.p_arrival);
  check_at_least("arrival_batch", cfg.arrival_batch, 0);
  check_probability("p_ambient", cfg.p_ambient);
  check_at_least("ambient_gain", cfg.ambient_gain, 0);
  if (!(cfg.energy_unit_uJ >= 0.0) || !std::isfinite(cfg.energy_unit_uJ)) {
    throw ConfigError("energy_unit_uJ", "must be a finite non-negative number");
  }
  check_at_least("packet_bits", cfg.packet_bits, 0);
  return cfg;
}

int action_cost(ActionKind a, const EnvConfig& cfg) {
  switch (a) {
    case ActionKind::PassiveHarvest:
      return 0;
    case ActionKind::ActiveTransmit:
      return cfg.cost_active;
    case ActionKind::DeceiveHarvest:
    case ActionKind::DeceiveBackscatter:
      return cfg.cost_fake;
  }
  return 0;
}

ActionSet feasible_actions(State s, const EnvConfig& cfg) {
  ActionSet out{ActionKind::PassiveHarvest};
  if (s.energy >= cfg.cost_active && s.queue >= 1) out.insert(ActionKind::ActiveTransmit);
  if (s.energy >= cfg.cost_fake) out.insert(ActionKind::DeceiveHarvest);
  if (s.energy >= cfg.cost_fake && s.queue >= 1) out.insert(ActionKind::DeceiveBackscatter);
  return out;
}

StepOutcome step(State s, ActionKind a, const EnvConfig& cfg, Rng& rng) {
  require_feasible(s, a, cfg);
  Branch b{};
  b.attacked = draws_attack(a) && rng.bernoulli(cfg.p_attack);
  b.ambient = draws_ambient(a, b.attacked) && rng.bernoulli(cfg.p_ambient);
  b.arrived = rng.bernoulli(cfg.p_arrival);
  return resolve(s, a, cfg, b);
}

std::vector<Transition> enumerate_kernel(State s, ActionKind a, const EnvConfig& cfg) {
  require_feasible(s, a, cfg);

  std::vector<Transition> out;
  auto add = [&](double prob, Branch b) {
    if (prob == 0.0) return;
    const StepOutcome o = resolve(s, a, cfg, b);
    for (Transition& t : out) {
      if (t.next == o.next && t.delivered == o.delivered && t.dropped == o.dropped) {
        t.prob += prob;
        return;
      }
    }
    out.push_back({prob, o.next, o.delivered, o.dropped});
  };

  for (bool attacked : {true, false}) {
    double p_atk = 1.0;
    if (draws_attack(a)) {
      p_atk = attacked ? cfg.p_attack : 1.0 - cfg.p_attack;
    } else if (attacked) {
      continue;
    }
    for (bool ambient : {true, false}) {
      double p_amb = 1.0;
      if (draws_ambient(a, attacked)) {
        p_amb = ambient ? cfg.p_ambient : 1.0 - cfg.p_ambient;
      } else if (ambient) {
        continue;
      }
      for (bool arrived : {true, false}) {
        const double p_arr = arrived ? cfg.p_arrival : 1.0 - cfg.p_arrival;
        add(p_atk * p_amb * p_arr, {attacked, ambient, arrived});
      }
    }
  }
  return out;
}

KernelTable::KernelTable(const EnvConfig& cfg, ActionSet allowed) : cfg_(cfg) {
  const std::size_t n = cfg_.num_states();
  allowed_.resize(n);
  offsets_.reserve(n * kNumActions + 1);
  offsets_.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    const State s = cfg_.state_at(i);
    allowed_[i] = feasible_actions(s, cfg_) & allowed;
    for (ActionKind a : kAllActions) {
      if (allowed_[i].contains(a)) {
        const auto branches = enumerate_kernel(s, a, cfg_);
        transitions_.insert(transitions_.end(), branches.begin(), branches.end());
      }
      offsets_.push_back(transitions_.size());
    }
  }
}

std::span<const Transition> KernelTable::transitions(std::size_t state, ActionKind a) const {
  const std::size_t k = state * kNumActions + index_of(a);
  return std::span<const Transition>(transitions_).subspan(offsets_[k],
                                                           offsets_[k + 1] - offsets_[k]);
}

std::size_t KernelTable::num_pairs() const {
  std::size_t n = 0;
  for (ActionSet set : allowed_) n += set.size();
  return n;
}

void write_kernel_csv(std::ostream& out, const EnvConfig& cfg) {
  out << "energy,queue,action,prob,next_energy,next_queue,delivered,dropped\n";
  for (std::size_t i = 0; i < cfg.num_states(); ++i) {
    const State s = cfg.state_at(i);
    for (ActionKind a : feasible_actions(s, cfg).members()) {
      for (const Transition& t : enumerate_kernel(s, a, cfg)) {
        out << s.energy << ',' << s.queue << ',' << to_string(a) << ',' << format_real(t.prob)
            << ',' << t.next.energy << ',' << t.next.queue << ',' << t.delivered << ','
            << t.dropped << '\n';
      }
    }
  }
}

}  // namespace jamrl
