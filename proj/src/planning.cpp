#include "jamrl/planning.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>

#include "jamrl/text.hpp"

namespace jamrl {

// ---------------------------------------------------------------------------
// QTable / Policy

QTable::QTable(const EnvConfig& cfg, ActionSet allowed)
    : cfg_(cfg), mask_(cfg.num_states()), values_(cfg.num_states() * kNumActions, 0.0) {
  if (!allowed.contains(ActionKind::PassiveHarvest)) {
    throw std::invalid_argument("allowed action set must contain passive_harvest");
  }
  for (std::size_t i = 0; i < mask_.size(); ++i) {
    mask_[i] = feasible_actions(cfg_.state_at(i), cfg_) & allowed;
  }
}

ActionKind QTable::greedy(std::size_t state) const {
  const ActionSet set = mask_[state];
  ActionKind best = ActionKind::PassiveHarvest;
  double best_value = -std::numeric_limits<double>::infinity();
  for (ActionKind a : kAllActions) {
    if (!set.contains(a)) continue;
    const double v = value(state, a);
    if (v > best_value) {
      best_value = v;
      best = a;
    }
  }
  return best;
}

double QTable::max_value(std::size_t state) const { return value(state, greedy(state)); }

double max_norm_distance(const QTable& a, const QTable& b) {
  if (a.num_states() != b.num_states()) throw std::invalid_argument("QTable shape mismatch");
  double worst = 0.0;
  for (std::size_t s = 0; s < a.num_states(); ++s) {
    const ActionSet both = a.allowed(s) & b.allowed(s);
    for (ActionKind act : kAllActions) {
      if (both.contains(act)) worst = std::max(worst, std::abs(a.value(s, act) - b.value(s, act)));
    }
  }
  return worst;
}

double max_norm_distance(const QTable& a, const QTable& b, std::span<const std::size_t> states) {
  if (a.num_states() != b.num_states()) throw std::invalid_argument("QTable shape mismatch");
  double worst = 0.0;
  for (std::size_t s : states) {
    const ActionSet both = a.allowed(s) & b.allowed(s);
    for (ActionKind act : kAllActions) {
      if (both.contains(act)) worst = std::max(worst, std::abs(a.value(s, act) - b.value(s, act)));
    }
  }
  return worst;
}

void write_qtable_csv(std::ostream& out, const QTable& q) {
  out << "energy,queue,action,q_value\n";
  for (std::size_t i = 0; i < q.num_states(); ++i) {
    const State s = q.config().state_at(i);
    for (ActionKind a : q.allowed(i).members()) {
      out << s.energy << ',' << s.queue << ',' << to_string(a) << ',' << format_real(q.value(i, a))
          << '\n';
    }
  }
}

QTable read_qtable_csv(std::istream& in, const EnvConfig& cfg, ActionSet allowed) {
  QTable q(cfg, allowed);
  std::string line;
  if (!std::getline(in, line) || line != "energy,queue,action,q_value") {
    throw std::runtime_error("qtable csv: missing header");
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string energy, queue, action, value;
    if (!std::getline(row, energy, ',') || !std::getline(row, queue, ',') ||
        !std::getline(row, action, ',') || !std::getline(row, value)) {
      throw std::runtime_error("qtable csv: malformed line " + std::to_string(lineno));
    }
    const State s{std::stoi(energy), std::stoi(queue)};
    const auto a = parse_action(action);
    if (!a || !cfg.contains(s) || !q.allowed(s).contains(*a)) {
      throw std::runtime_error("qtable csv: invalid pair on line " + std::to_string(lineno));
    }
    q.value(cfg.state_index(s), *a) = std::stod(value);
  }
  return q;
}

Policy::Policy(const EnvConfig& cfg, ActionKind fill) : cfg_(cfg), actions_(cfg.num_states(), fill) {}

bool Policy::is_feasible(ActionSet allowed) const {
  for (std::size_t i = 0; i < actions_.size(); ++i) {
    if (!(feasible_actions(cfg_.state_at(i), cfg_) & allowed).contains(actions_[i])) return false;
  }
  return true;
}

Policy greedy_policy(const QTable& q) {
  Policy p(q.config(), ActionKind::PassiveHarvest);
  for (std::size_t i = 0; i < q.num_states(); ++i) p.set(i, q.greedy(i));
  return p;
}

void write_policy_csv(std::ostream& out, const Policy& policy) {
  out << "energy,queue,action\n";
  for (std::size_t i = 0; i < policy.size(); ++i) {
    const State s = policy.config().state_at(i);
    out << s.energy << ',' << s.queue << ',' << to_string(policy.at(i)) << '\n';
  }
}

std::vector<std::size_t> reachable_states(const Policy& policy, State start) {
  const EnvConfig& cfg = policy.config();
  std::vector<bool> seen(cfg.num_states(), false);
  std::vector<std::size_t> frontier{cfg.state_index(start)};
  seen[frontier.front()] = true;
  while (!frontier.empty()) {
    const std::size_t i = frontier.back();
    frontier.pop_back();
    for (const Transition& t : enumerate_kernel(cfg.state_at(i), policy.at(i), cfg)) {
      const std::size_t j = cfg.state_index(t.next);
      if (!seen[j]) {
        seen[j] = true;
        frontier.push_back(j);
      }
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (seen[i]) out.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Value iteration

namespace {

// Backs up every allowed pair of one state; returns the largest change.
double backup_state(const KernelTable& kernel, std::size_t s, const std::vector<double>& v,
                    double gamma, const QTable& current, QTable& next) {
  double delta = 0.0;
  const ActionSet set = kernel.allowed(s);
  for (ActionKind a : kAllActions) {
    if (!set.contains(a)) continue;
    double sum = 0.0;
    for (const Transition& t : kernel.transitions(s, a)) {
      sum += t.prob * (t.delivered + gamma * v[kernel.config().state_index(t.next)]);
    }
    next.value(s, a) = sum;
    delta = std::max(delta, std::abs(sum - current.value(s, a)));
  }
  return delta;
}

template <bool Parallel>
ValueIterationResult run_value_iteration(const EnvConfig& cfg, const ValueIterationOptions& opt) {
  validate_config(cfg);
  if (!(opt.gamma >= 0.0 && opt.gamma < 1.0)) throw std::invalid_argument("gamma must be in [0, 1)");
  if (!(opt.tol > 0.0)) throw std::invalid_argument("tol must be positive");

  const KernelTable kernel(cfg, opt.allowed);
  QTable q(cfg, opt.allowed);
  QTable next = q;
  const auto n = static_cast<long>(cfg.num_states());
  std::vector<double> v(cfg.num_states(), 0.0);

  ValueIterationResult result{q, Policy(cfg, ActionKind::PassiveHarvest), 0, {}};
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    for (long s = 0; s < n; ++s) v[s] = q.max_value(static_cast<std::size_t>(s));

    double delta = 0.0;
    if constexpr (Parallel) {
#pragma omp parallel for reduction(max : delta) schedule(static)
      for (long s = 0; s < n; ++s) {
        delta = std::max(delta, backup_state(kernel, static_cast<std::size_t>(s), v, opt.gamma, q, next));
      }
    } else {
      for (long s = 0; s < n; ++s) {
        delta = std::max(delta, backup_state(kernel, static_cast<std::size_t>(s), v, opt.gamma, q, next));
      }
    }
    std::swap(q, next);
    result.deltas.push_back(delta);
    result.iterations = iter + 1;
    if (delta < opt.tol) break;
  }
  result.policy = greedy_policy(q);
  result.q = std::move(q);
  return result;
}

}  // namespace

ValueIterationResult value_iteration(const EnvConfig& cfg, const ValueIterationOptions& opt) {
  return run_value_iteration<true>(cfg, opt);
}

ValueIterationResult value_iteration_serial(const EnvConfig& cfg, const ValueIterationOptions& opt) {
  return run_value_iteration<false>(cfg, opt);
}

double bellman_residual(const QTable& q, double gamma) {
  const EnvConfig& cfg = q.config();
  double worst = 0.0;
  for (std::size_t i = 0; i < q.num_states(); ++i) {
    const State s = cfg.state_at(i);
    for (ActionKind a : q.allowed(i).members()) {
      double expected = 0.0;
      for (const Transition& t : enumerate_kernel(s, a, cfg)) {
        expected += t.prob * (t.delivered + gamma * q.max_value(cfg.state_index(t.next)));
      }
      worst = std::max(worst, std::abs(q.value(i, a) - expected));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Tabular Q-learning

void validate(const TabularHyperparams& hp) {
  if (hp.steps < 0) throw std::invalid_argument("tabular steps must be non-negative");
  if (!(hp.gamma >= 0.0 && hp.gamma < 1.0)) throw std::invalid_argument("gamma must be in [0, 1)");
  if (!(hp.lr_exponent > 0.0 && hp.lr_exponent <= 1.0)) {
    throw std::invalid_argument("lr_exponent must be in (0, 1]");
  }
  for (double e : {hp.eps_start, hp.eps_end}) {
    if (!(e >= 0.0 && e <= 1.0)) throw std::invalid_argument("epsilon must be in [0, 1]");
  }
  if (!(hp.eps_decay_fraction >= 0.0 && hp.eps_decay_fraction <= 1.0)) {
    throw std::invalid_argument("eps_decay_fraction must be in [0, 1]");
  }
  if (hp.snapshot_every < 0) throw std::invalid_argument("snapshot_every must be non-negative");
}

QLearningResult q_learning(const EnvConfig& cfg, const TabularHyperparams& hp, Rng& rng,
                           const QTable* reference) {
  validate_config(cfg);
  validate(hp);
  if (!cfg.contains(hp.initial)) throw std::invalid_argument("initial state out of range");

  QLearningResult result{QTable(cfg, hp.allowed), {}, std::vector<long>(cfg.num_states() * kNumActions, 0)};
  QTable& q = result.q;
  std::vector<long>& visits = result.visits;

  const double decay_steps = hp.eps_decay_fraction * static_cast<double>(hp.steps);
  auto epsilon_at = [&](long t) {
    if (decay_steps <= 0.0) return hp.eps_end;
    const double frac = std::min(1.0, static_cast<double>(t) / decay_steps);
    return hp.eps_start + (hp.eps_end - hp.eps_start) * frac;
  };
  auto snapshot = [&](long t) {
    const double dist = reference ? max_norm_distance(q, *reference)
                                  : std::numeric_limits<double>::quiet_NaN();
    result.curve.push_back({t, epsilon_at(t), dist});
  };

  if (hp.snapshot_every > 0) snapshot(0);

  State s = hp.initial;
  for (long t = 0; t < hp.steps; ++t) {
    const std::size_t si = cfg.state_index(s);
    const ActionSet set = q.allowed(si);
    ActionKind a;
    if (rng.uniform() < epsilon_at(t)) {
      const auto members = set.members();
      a = members[rng.below(members.size())];
    } else {
      a = q.greedy(si);
    }

    const StepOutcome out = step(s, a, cfg, rng);
    const long n = visits[si * kNumActions + index_of(a)]++;
    const double lr = std::pow(1.0 + static_cast<double>(n), -hp.lr_exponent);
    const double target = out.delivered + hp.gamma * q.max_value(cfg.state_index(out.next));
    double& entry = q.value(si, a);
    entry += lr * (target - entry);
    s = out.next;

    const long done = t + 1;
    if (hp.snapshot_every > 0 && (done % hp.snapshot_every == 0 || done == hp.steps)) snapshot(done);
  }
  return result;
}

void write_learning_curve_csv(std::ostream& out, std::span<const LearningCurvePoint> curve) {
  out << "step,epsilon,oracle_distance\n";
  for (const auto& p : curve) {
    out << p.step << ',' << format_real(p.epsilon) << ',';
    if (!std::isnan(p.oracle_distance)) out << format_real(p.oracle_distance);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Evaluation

SeedMetrics simulate_policy(const EnvConfig& cfg, const Policy& policy, long horizon,
                            std::uint64_t seed) {
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  Rng rng(derive_seed(seed, 0x65766131ULL));
  State s{0, 0};
  long delivered = 0;
  long dropped = 0;
  double energy = 0.0;
  for (long t = 0; t < horizon; ++t) {
    energy += s.energy;
    const StepOutcome out = step(s, policy(s), cfg, rng);
    delivered += out.delivered;
    dropped += out.dropped;
    s = out.next;
  }
  const auto h = static_cast<double>(horizon);
  return {seed, static_cast<double>(delivered) / h, static_cast<double>(dropped) / h, energy / h};
}

std::pair<double, double> mean_ci95(std::span<const double> samples) {
  if (samples.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= static_cast<double>(samples.size());
  if (samples.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double n = static_cast<double>(samples.size());
  const double stderr_ = std::sqrt(ss / (n - 1.0) / n);
  return {mean, 1.96 * stderr_};
}

namespace {

Metrics aggregate(std::vector<SeedMetrics> per_seed, long horizon) {
  Metrics m;
  m.slots = horizon;
  std::vector<double> thr, drop;
  double energy = 0.0;
  for (const auto& r : per_seed) {
    thr.push_back(r.throughput);
    drop.push_back(r.dropped);
    energy += r.energy;
  }
  std::tie(m.avg_throughput, m.throughput_ci) = mean_ci95(thr);
  std::tie(m.avg_dropped, m.dropped_ci) = mean_ci95(drop);
  m.avg_energy = per_seed.empty() ? 0.0 : energy / static_cast<double>(per_seed.size());
  m.per_seed = std::move(per_seed);
  return m;
}

}  // namespace

Metrics evaluate_policy(const EnvConfig& cfg, const Policy& policy, long horizon,
                        std::span<const std::uint64_t> seeds) {
  validate_config(cfg);
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  std::vector<SeedMetrics> per_seed(seeds.size());
  const auto n = static_cast<long>(seeds.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) per_seed[i] = simulate_policy(cfg, policy, horizon, seeds[i]);
  return aggregate(std::move(per_seed), horizon);
}

Metrics evaluate_policy_serial(const EnvConfig& cfg, const Policy& policy, long horizon,
                               std::span<const std::uint64_t> seeds) {
  validate_config(cfg);
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  std::vector<SeedMetrics> per_seed;
  for (std::uint64_t seed : seeds) per_seed.push_back(simulate_policy(cfg, policy, horizon, seed));
  return aggregate(std::move(per_seed), horizon);
}

void write_metrics_csv(std::ostream& out, std::string_view label, const Metrics& m) {
  out << "strategy,seed,throughput,dropped,energy,slots\n";
  for (const auto& r : m.per_seed) {
    out << label << ',' << r.seed << ',' << format_real(r.throughput) << ','
        << format_real(r.dropped) << ',' << format_real(r.energy) << ',' << m.slots << '\n';
  }
  out << label << ",mean," << format_real(m.avg_throughput) << ',' << format_real(m.avg_dropped)
      << ',' << format_real(m.avg_energy) << ',' << m.slots << '\n';
}

}  // namespace jamrl
