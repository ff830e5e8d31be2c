#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "jamrl/mdp.hpp"
#include "jamrl/neural.hpp"
#include "jamrl/planning.hpp"

namespace jamrl {

struct Experience {
  State state;
  ActionKind action = ActionKind::PassiveHarvest;
  double reward = 0.0;
  State next;

  friend bool operator==(const Experience&, const Experience&) = default;
};

/// Bounded FIFO of experiences; once full, each push overwrites the oldest.
class ReplayPool {
 public:
  explicit ReplayPool(std::size_t capacity);

  void push(const Experience& e);

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t inserted() const { return inserted_; }

  /// i = 0 is the oldest retained experience.
  const Experience& operator[](std::size_t i) const;

  /// `count` distinct positions drawn uniformly (Floyd's algorithm).
  std::vector<std::size_t> sample_indices(std::size_t count, Rng& rng) const;
  std::vector<Experience> sample(std::size_t count, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::vector<Experience> items_;
  std::size_t head_ = 0;  // slot holding the oldest item once full
  std::uint64_t inserted_ = 0;
};

struct DqnHyperparams {
  std::size_t replay_capacity = 10'000;
  std::size_t batch_size = 32;
  double gamma = 0.99;
  double eps_start = 1.0;
  double eps_end = 0.01;
  long eps_decay_steps = 50'000;
  /// Target network refresh period, in learner rounds.
  long target_sync_rounds = 200;
  /// Experiences per actor -> learner exchange.
  long flush_period = 1000;
  double learning_rate = 1e-3;
  long total_steps = 200'000;
  std::vector<int> hidden{200, 200};
  ActionSet allowed = ActionSet::all();
  /// Slots simulated with the fresh snapshot after each exchange for the log.
  long eval_horizon = 20000;
  std::uint64_t eval_seed = 7;
  /// Return the snapshot with the best logged evaluation throughput instead
  /// of the last one.
  bool keep_best_snapshot = true;
  /// Keep every snapshot and every actor decision (memory heavy).
  bool record_trace = false;
  State initial{0, 0};
};

void validate(const DqnHyperparams& hp);

/// (energy / e_max, queue / d_max).
std::array<double, 2> encode_state(State s, const EnvConfig& cfg);

/// Argmax of the network over feasible and allowed actions, ties to the
/// earliest action.
ActionKind greedy_action(const MlpNetwork& net, State s, const EnvConfig& cfg,
                         ActionSet allowed = ActionSet::all());

/// Epsilon-greedy over feasible_actions(s) & allowed. Always consumes one
/// uniform draw, plus one more when exploring.
ActionKind select_action(const MlpNetwork& net, State s, double epsilon, const EnvConfig& cfg,
                         Rng& rng, ActionSet allowed = ActionSet::all());

Policy tabulate_greedy(const MlpNetwork& net, const EnvConfig& cfg,
                       ActionSet allowed = ActionSet::all());

/// Offloaded trainer: online network, target network, optimizer state and the
/// replay pool fed by the actor.
class Learner {
 public:
  Learner(MlpNetwork initial, const EnvConfig& cfg, const DqnHyperparams& hp);

  /// One optimizer step on the TD mean squared error of `batch`; returns the
  /// loss before the step.
  double train_round(std::span<const Experience> batch);

  /// Ingests an actor flush and trains max(1, n / batch_size) rounds on
  /// uniform replay samples. Returns the mean loss, NaN if replay is still
  /// smaller than one batch.
  double receive(std::span<const Experience> experiences, Rng& rng);

  MlpNetwork snapshot() const { return online_; }
  const MlpNetwork& online() const { return online_; }
  const MlpNetwork& target() const { return target_; }
  const ReplayPool& replay() const { return replay_; }
  long rounds() const { return rounds_; }

 private:
  EnvConfig cfg_;
  DqnHyperparams hp_;
  MlpNetwork online_;
  MlpNetwork target_;
  AdamOptimizer optimizer_;
  ReplayPool replay_;
  long rounds_ = 0;
};

double learner_train_round(Learner& learner, std::span<const Experience> batch);

struct TrainingLogRow {
  long step = 0;
  double epsilon = 0.0;
  double loss = 0.0;
  double eval_throughput = 0.0;
  double eval_dropped = 0.0;
};

struct TrainingLog {
  std::vector<TrainingLogRow> rows;
};

/// `step,epsilon,loss,eval_throughput,eval_dropped`.
void write_training_log_csv(std::ostream& out, const TrainingLog& log);

struct ActorDecision {
  State state;
  ActionKind action = ActionKind::PassiveHarvest;
  bool explored = false;
  std::size_t snapshot = 0;
};

struct ActorTrace {
  /// snapshots[k] is the network the actor used after the k-th sync.
  std::vector<MlpNetwork> snapshots;
  std::vector<ActorDecision> decisions;
};

struct DqnResult {
  /// Selected snapshot (best evaluated, or final when keep_best_snapshot is off).
  MlpNetwork network;
  MlpNetwork final_network;
  /// Index into log.rows of the exchange that produced `network`.
  std::size_t selected_row = 0;
  Policy policy;
  TrainingLog log;
  std::optional<ActorTrace> trace;
};

/// Actor acts on a frozen snapshot and buffers experiences; every
/// flush_period steps the buffer goes to the learner, which trains and
/// returns a fresh snapshot.
DqnResult actor_learner_loop(const EnvConfig& cfg, const DqnHyperparams& hp, Rng& rng);

}  // namespace jamrl
