#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "jamrl/random.hpp"

namespace jamrl {

/// Observable device state: battery level and data-queue length.
struct State {
  int energy = 0;
  int queue = 0;

  friend auto operator<=>(const State&, const State&) = default;
};

/// The four operation modes of the device. Declaration order is the greedy
/// tie-break order used everywhere.
enum class ActionKind : std::uint8_t {
  PassiveHarvest = 0,
  ActiveTransmit = 1,
  DeceiveHarvest = 2,
  DeceiveBackscatter = 3,
};

inline constexpr std::size_t kNumActions = 4;

inline constexpr std::array<ActionKind, kNumActions> kAllActions{
    ActionKind::PassiveHarvest, ActionKind::ActiveTransmit,
    ActionKind::DeceiveHarvest, ActionKind::DeceiveBackscatter};

constexpr std::size_t index_of(ActionKind a) { return static_cast<std::size_t>(a); }

std::string_view to_string(ActionKind a);
std::optional<ActionKind> parse_action(std::string_view name);

/// Small bitset over ActionKind.
class ActionSet {
 public:
  constexpr ActionSet() = default;
  constexpr ActionSet(std::initializer_list<ActionKind> actions) {
    for (ActionKind a : actions) insert(a);
  }

  static constexpr ActionSet all() {
    return {ActionKind::PassiveHarvest, ActionKind::ActiveTransmit,
            ActionKind::DeceiveHarvest, ActionKind::DeceiveBackscatter};
  }

  constexpr void insert(ActionKind a) { bits_ |= bit(a); }
  constexpr void erase(ActionKind a) { bits_ &= static_cast<std::uint8_t>(~bit(a)); }
  constexpr bool contains(ActionKind a) const { return (bits_ & bit(a)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::size_t size() const {
    std::size_t n = 0;
    for (ActionKind a : kAllActions) n += contains(a) ? 1 : 0;
    return n;
  }
  constexpr std::uint8_t bits() const { return bits_; }

  /// Members in tie-break order.
  std::vector<ActionKind> members() const;

  friend constexpr ActionSet operator&(ActionSet x, ActionSet y) {
    ActionSet r;
    r.bits_ = x.bits_ & y.bits_;
    return r;
  }
  friend constexpr bool operator==(ActionSet, ActionSet) = default;

 private:
  static constexpr std::uint8_t bit(ActionKind a) {
    return static_cast<std::uint8_t>(1u << index_of(a));
  }
  std::uint8_t bits_ = 0;
};

/// Capacities, costs, gains and event probabilities of the slotted model.
/// Energy is counted in integer units, data in integer packets.
struct EnvConfig {
  int e_max = 10;
  int d_max = 10;
  int cost_fake = 1;
  int cost_active = 3;
  int tx_packets = 3;
  int harvest_jam = 3;
  int bs_packets = 1;
  double p_attack = 0.6;
  double p_arrival = 0.5;
  int arrival_batch = 2;
  double p_ambient = 0.3;
  int ambient_gain = 1;
  // Physical scale of the units; informational only.
  double energy_unit_uJ = 60.0;
  int packet_bits = 300;

  std::size_t num_states() const {
    return static_cast<std::size_t>(e_max + 1) * static_cast<std::size_t>(d_max + 1);
  }
  std::size_t state_index(State s) const {
    return static_cast<std::size_t>(s.energy) * static_cast<std::size_t>(d_max + 1) +
           static_cast<std::size_t>(s.queue);
  }
  State state_at(std::size_t index) const {
    const auto width = static_cast<std::size_t>(d_max + 1);
    return {static_cast<int>(index / width), static_cast<int>(index % width)};
  }
  bool contains(State s) const {
    return s.energy >= 0 && s.energy <= e_max && s.queue >= 0 && s.queue <= d_max;
  }

  friend bool operator==(const EnvConfig&, const EnvConfig&) = default;
};

/// Raised by validate_config; field() names the first offending field.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Raised when an action outside feasible_actions() reaches the environment.
class InfeasibleAction : public std::logic_error {
 public:
  InfeasibleAction(State s, ActionKind a);
};

const EnvConfig& validate_config(const EnvConfig& cfg);

ActionSet feasible_actions(State s, const EnvConfig& cfg);

int action_cost(ActionKind a, const EnvConfig& cfg);

struct StepOutcome {
  State next;
  int delivered = 0;
  int dropped = 0;
  bool attacked = false;
  bool arrived = false;
  bool ambient = false;
};

/// One slot of dynamics: cost, attack draw, action resolution, arrivals and
/// overflow, then battery clipping. Draws are consumed in that order and only
/// when the branch needs them.
StepOutcome step(State s, ActionKind a, const EnvConfig& cfg, Rng& rng);

struct Transition {
  double prob = 0.0;
  State next;
  int delivered = 0;
  int dropped = 0;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Exact outcome distribution of step(); zero-probability branches are
/// omitted and branches with identical (next, delivered, dropped) merged.
std::vector<Transition> enumerate_kernel(State s, ActionKind a, const EnvConfig& cfg);

/// Kernel of every feasible (state, action) pair, flattened for fast
/// repeated backups. Pairs are laid out state-major in tie-break order.
class KernelTable {
 public:
  KernelTable(const EnvConfig& cfg, ActionSet allowed = ActionSet::all());

  const EnvConfig& config() const { return cfg_; }
  ActionSet allowed(std::size_t state) const { return allowed_[state]; }

  /// Transitions of (state, a), empty when the pair is not allowed.
  std::span<const Transition> transitions(std::size_t state, ActionKind a) const;

  std::size_t num_pairs() const;

 private:
  EnvConfig cfg_;
  std::vector<ActionSet> allowed_;
  std::vector<std::size_t> offsets_;  // (state * 4 + action) -> [begin, end)
  std::vector<Transition> transitions_;
};

/// Writes `energy,queue,action,prob,next_energy,next_queue,delivered,dropped`.
void write_kernel_csv(std::ostream& out, const EnvConfig& cfg);

}  // namespace jamrl
