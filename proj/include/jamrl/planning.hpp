#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "jamrl/mdp.hpp"

namespace jamrl {

/// Dense action-value table over (energy, queue, action). Pairs that are
/// infeasible, or excluded by the allowed action set, are masked: they keep
/// value 0 and greedy lookups never return them.
class QTable {
 public:
  explicit QTable(const EnvConfig& cfg, ActionSet allowed = ActionSet::all());

  const EnvConfig& config() const { return cfg_; }
  std::size_t num_states() const { return mask_.size(); }
  ActionSet allowed(std::size_t state) const { return mask_[state]; }
  ActionSet allowed(State s) const { return mask_[cfg_.state_index(s)]; }

  double value(std::size_t state, ActionKind a) const {
    return values_[state * kNumActions + index_of(a)];
  }
  double& value(std::size_t state, ActionKind a) {
    return values_[state * kNumActions + index_of(a)];
  }
  double operator()(State s, ActionKind a) const { return value(cfg_.state_index(s), a); }

  /// Best allowed action; ties resolved by declaration order of ActionKind.
  ActionKind greedy(std::size_t state) const;
  double max_value(std::size_t state) const;

  std::span<const double> raw() const { return values_; }

 private:
  EnvConfig cfg_;
  std::vector<ActionSet> mask_;
  std::vector<double> values_;
};

/// Largest |a - b| over pairs allowed in both tables.
double max_norm_distance(const QTable& a, const QTable& b);

/// Largest |a - b| over the allowed pairs of the given states only.
double max_norm_distance(const QTable& a, const QTable& b, std::span<const std::size_t> states);

/// `energy,queue,action,q_value` for every allowed pair.
void write_qtable_csv(std::ostream& out, const QTable& q);
QTable read_qtable_csv(std::istream& in, const EnvConfig& cfg, ActionSet allowed = ActionSet::all());

/// Deterministic state -> action map.
class Policy {
 public:
  Policy() = default;
  Policy(const EnvConfig& cfg, ActionKind fill);

  ActionKind operator()(State s) const { return actions_[cfg_.state_index(s)]; }
  ActionKind at(std::size_t state) const { return actions_[state]; }
  void set(std::size_t state, ActionKind a) { actions_[state] = a; }

  const EnvConfig& config() const { return cfg_; }
  std::size_t size() const { return actions_.size(); }

  /// True when every entry lies in feasible_actions() intersected with `allowed`.
  bool is_feasible(ActionSet allowed = ActionSet::all()) const;

  friend bool operator==(const Policy& a, const Policy& b) { return a.actions_ == b.actions_; }

 private:
  EnvConfig cfg_;
  std::vector<ActionKind> actions_;
};

Policy greedy_policy(const QTable& q);

/// `energy,queue,action` for every state.
void write_policy_csv(std::ostream& out, const Policy& policy);

/// States visited with positive probability by the chain that follows
/// `policy` from `start`.
std::vector<std::size_t> reachable_states(const Policy& policy, State start = {0, 0});

// ---------------------------------------------------------------------------
// Value iteration

struct ValueIterationOptions {
  double gamma = 0.99;
  double tol = 1e-9;
  ActionSet allowed = ActionSet::all();
  int max_iterations = 1'000'000;
};

struct ValueIterationResult {
  QTable q;
  Policy policy;
  int iterations = 0;
  /// Sup-norm change of Q on each sweep; the last entry is below tol.
  std::vector<double> deltas;
};

/// Synchronous (Jacobi) Bellman optimality backups until the sup-norm change
/// drops below tol. States are backed up in parallel; the result is
/// bit-identical to value_iteration_serial.
ValueIterationResult value_iteration(const EnvConfig& cfg, const ValueIterationOptions& opt = {});

/// Single-threaded reference of value_iteration.
ValueIterationResult value_iteration_serial(const EnvConfig& cfg,
                                            const ValueIterationOptions& opt = {});

/// max over allowed (s, a) of |Q(s,a) - E[r + gamma max_a' Q(s',a')]|,
/// computed straight from enumerate_kernel.
double bellman_residual(const QTable& q, double gamma);

// ---------------------------------------------------------------------------
// Tabular Q-learning

struct TabularHyperparams {
  long steps = 2'000'000;
  double gamma = 0.99;
  /// Step size for the n-th update of a pair is 1 / (1 + n)^lr_exponent, n from 0.
  double lr_exponent = 0.6;
  double eps_start = 1.0;
  double eps_end = 0.05;
  /// Fraction of `steps` over which epsilon decays linearly.
  double eps_decay_fraction = 0.5;
  ActionSet allowed = ActionSet::all();
  long snapshot_every = 100'000;
  State initial{0, 0};
};

void validate(const TabularHyperparams& hp);

struct LearningCurvePoint {
  long step = 0;
  double epsilon = 0.0;
  /// Sup-norm distance to the reference table, NaN without a reference.
  double oracle_distance = 0.0;
};

struct QLearningResult {
  QTable q;
  std::vector<LearningCurvePoint> curve;
  /// Update count per (state * 4 + action).
  std::vector<long> visits;
};

QLearningResult q_learning(const EnvConfig& cfg, const TabularHyperparams& hp, Rng& rng,
                           const QTable* reference = nullptr);

/// `step,epsilon,oracle_distance`.
void write_learning_curve_csv(std::ostream& out, std::span<const LearningCurvePoint> curve);

// ---------------------------------------------------------------------------
// Policy evaluation

struct SeedMetrics {
  std::uint64_t seed = 0;
  double throughput = 0.0;
  double dropped = 0.0;
  double energy = 0.0;
};

struct Metrics {
  double avg_throughput = 0.0;
  double avg_dropped = 0.0;
  double avg_energy = 0.0;
  long slots = 0;
  /// Half-widths of the 95% normal interval across seeds.
  double throughput_ci = 0.0;
  double dropped_ci = 0.0;
  std::vector<SeedMetrics> per_seed;
};

/// Runs `horizon` slots from (0, 0) per seed. Seeds are simulated in parallel.
Metrics evaluate_policy(const EnvConfig& cfg, const Policy& policy, long horizon,
                        std::span<const std::uint64_t> seeds);

Metrics evaluate_policy_serial(const EnvConfig& cfg, const Policy& policy, long horizon,
                               std::span<const std::uint64_t> seeds);

/// One seed's trajectory statistics.
SeedMetrics simulate_policy(const EnvConfig& cfg, const Policy& policy, long horizon,
                            std::uint64_t seed);

/// mean and 1.96 * standard error of the samples.
std::pair<double, double> mean_ci95(std::span<const double> samples);

/// `strategy,seed,throughput,dropped,energy,slots` with a trailing `mean` row.
void write_metrics_csv(std::ostream& out, std::string_view label, const Metrics& m);

}  // namespace jamrl
