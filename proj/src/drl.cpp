#include "jamrl/drl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "jamrl/text.hpp"

namespace jamrl {

// ---------------------------------------------------------------------------
// ReplayPool

ReplayPool::ReplayPool(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 1u << 16));
}

void ReplayPool::push(const Experience& e) {
  ++inserted_;
  if (items_.size() < capacity_) {
    items_.push_back(e);
    return;
  }
  items_[head_] = e;
  head_ = (head_ + 1) % capacity_;
}

const Experience& ReplayPool::operator[](std::size_t i) const {
  if (i >= items_.size()) throw std::out_of_range("replay index out of range");
  return items_[(head_ + i) % items_.size()];
}

std::vector<std::size_t> ReplayPool::sample_indices(std::size_t count, Rng& rng) const {
  const std::size_t n = items_.size();
  if (count > n) throw std::invalid_argument("cannot sample more experiences than stored");
  std::vector<std::size_t> chosen;
  chosen.reserve(count);
  for (std::size_t j = n - count; j < n; ++j) {
    const std::size_t t = rng.below(j + 1);
    if (std::find(chosen.begin(), chosen.end(), t) == chosen.end()) {
      chosen.push_back(t);
    } else {
      chosen.push_back(j);
    }
  }
  return chosen;
}

std::vector<Experience> ReplayPool::sample(std::size_t count, Rng& rng) const {
  std::vector<Experience> out;
  out.reserve(count);
  for (std::size_t i : sample_indices(count, rng)) out.push_back((*this)[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Action selection

void validate(const DqnHyperparams& hp) {
  if (hp.replay_capacity == 0) throw std::invalid_argument("replay_capacity must be positive");
  if (hp.batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (hp.batch_size > hp.replay_capacity) {
    throw std::invalid_argument("batch_size must not exceed replay_capacity");
  }
  if (!(hp.gamma >= 0.0 && hp.gamma < 1.0)) throw std::invalid_argument("gamma must be in [0, 1)");
  for (double e : {hp.eps_start, hp.eps_end}) {
    if (!(e >= 0.0 && e <= 1.0)) throw std::invalid_argument("epsilon must be in [0, 1]");
  }
  if (hp.eps_decay_steps < 0) throw std::invalid_argument("eps_decay_steps must be non-negative");
  if (hp.target_sync_rounds < 1) throw std::invalid_argument("target_sync_rounds must be at least 1");
  if (hp.flush_period < 1) throw std::invalid_argument("flush_period must be at least 1");
  if (!(hp.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (hp.total_steps < 1) throw std::invalid_argument("total_steps must be at least 1");
  for (int w : hp.hidden) {
    if (w < 1) throw std::invalid_argument("hidden widths must be positive");
  }
  if (!hp.allowed.contains(ActionKind::PassiveHarvest)) {
    throw std::invalid_argument("allowed action set must contain passive_harvest");
  }
  if (hp.eval_horizon < 1) throw std::invalid_argument("eval_horizon must be at least 1");
}

std::array<double, 2> encode_state(State s, const EnvConfig& cfg) {
  return {static_cast<double>(s.energy) / cfg.e_max, static_cast<double>(s.queue) / cfg.d_max};
}

namespace {

ActionKind argmax_masked(std::span<const double> q, ActionSet set) {
  ActionKind best = ActionKind::PassiveHarvest;
  double best_value = -std::numeric_limits<double>::infinity();
  for (ActionKind a : kAllActions) {
    if (set.contains(a) && q[index_of(a)] > best_value) {
      best_value = q[index_of(a)];
      best = a;
    }
  }
  return best;
}

double max_masked(std::span<const double> q, ActionSet set) { return q[index_of(argmax_masked(q, set))]; }

}  // namespace

ActionKind greedy_action(const MlpNetwork& net, State s, const EnvConfig& cfg, ActionSet allowed) {
  const auto x = encode_state(s, cfg);
  return argmax_masked(net.forward(x), feasible_actions(s, cfg) & allowed);
}

ActionKind select_action(const MlpNetwork& net, State s, double epsilon, const EnvConfig& cfg,
                         Rng& rng, ActionSet allowed) {
  if (rng.uniform() < epsilon) {
    const auto members = (feasible_actions(s, cfg) & allowed).members();
    return members[rng.below(members.size())];
  }
  return greedy_action(net, s, cfg, allowed);
}

Policy tabulate_greedy(const MlpNetwork& net, const EnvConfig& cfg, ActionSet allowed) {
  Policy p(cfg, ActionKind::PassiveHarvest);
  for (std::size_t i = 0; i < cfg.num_states(); ++i) {
    p.set(i, greedy_action(net, cfg.state_at(i), cfg, allowed));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Learner

Learner::Learner(MlpNetwork initial, const EnvConfig& cfg, const DqnHyperparams& hp)
    : cfg_(cfg),
      hp_(hp),
      online_(std::move(initial)),
      target_(online_),
      optimizer_(online_, AdamConfig{hp.learning_rate}),
      replay_(hp.replay_capacity) {
  if (online_.input_width() != 2 || online_.output_width() != static_cast<int>(kNumActions)) {
    throw DimensionError("Q-network must map 2 inputs to 4 outputs");
  }
}

double Learner::train_round(std::span<const Experience> batch) {
  if (batch.empty()) throw std::invalid_argument("training batch must not be empty");
  ParameterGradients grads = online_.zero_gradients();
  const double n = static_cast<double>(batch.size());
  double loss = 0.0;
  std::array<double, kNumActions> grad_out{};
  for (const Experience& e : batch) {
    double y = e.reward;
    if (hp_.gamma > 0.0) {
      const auto next_q = target_.forward(encode_state(e.next, cfg_));
      y += hp_.gamma * max_masked(next_q, feasible_actions(e.next, cfg_) & hp_.allowed);
    }
    const ForwardTrace trace = online_.forward_trace(encode_state(e.state, cfg_));
    const double err = trace.output()[index_of(e.action)] - y;
    loss += err * err;
    grad_out.fill(0.0);
    grad_out[index_of(e.action)] = 2.0 * err / n;
    online_.accumulate_gradients(trace, grad_out, grads);
  }
  optimizer_.step(online_, grads);
  ++rounds_;
  if (rounds_ % hp_.target_sync_rounds == 0) target_ = online_;
  return loss / n;
}

double Learner::receive(std::span<const Experience> experiences, Rng& rng) {
  for (const Experience& e : experiences) replay_.push(e);
  if (replay_.size() < hp_.batch_size) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t rounds = std::max<std::size_t>(1, experiences.size() / hp_.batch_size);
  double total = 0.0;
  for (std::size_t r = 0; r < rounds; ++r) {
    const auto batch = replay_.sample(hp_.batch_size, rng);
    total += train_round(batch);
  }
  return total / static_cast<double>(rounds);
}

double learner_train_round(Learner& learner, std::span<const Experience> batch) {
  return learner.train_round(batch);
}

void write_training_log_csv(std::ostream& out, const TrainingLog& log) {
  out << "step,epsilon,loss,eval_throughput,eval_dropped\n";
  for (const auto& r : log.rows) {
    out << r.step << ',' << format_real(r.epsilon) << ',';
    if (!std::isnan(r.loss)) out << format_real(r.loss);
    out << ',' << format_real(r.eval_throughput) << ',' << format_real(r.eval_dropped) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Actor / learner loop

namespace {

// The actor's frozen snapshot with a lazily filled greedy-action cache; the
// cache is exact because the snapshot never changes between syncs.
class Actor {
 public:
  Actor(const EnvConfig& cfg, ActionSet allowed) : cfg_(cfg), allowed_(allowed) {}

  void load(MlpNetwork snapshot) {
    net_ = std::move(snapshot);
    cache_.assign(cfg_.num_states(), std::nullopt);
  }

  const MlpNetwork& network() const { return net_; }

  ActionKind greedy(State s) {
    auto& slot = cache_[cfg_.state_index(s)];
    if (!slot) slot = greedy_action(net_, s, cfg_, allowed_);
    return *slot;
  }

 private:
  EnvConfig cfg_;
  ActionSet allowed_;
  MlpNetwork net_;
  std::vector<std::optional<ActionKind>> cache_;
};

}  // namespace

DqnResult actor_learner_loop(const EnvConfig& cfg, const DqnHyperparams& hp, Rng& rng) {
  validate_config(cfg);
  validate(hp);
  if (!cfg.contains(hp.initial)) throw std::invalid_argument("initial state out of range");

  std::vector<int> widths{2};
  widths.insert(widths.end(), hp.hidden.begin(), hp.hidden.end());
  widths.push_back(static_cast<int>(kNumActions));
  Rng init_rng(rng.next_u64());
  Rng learner_rng(rng.next_u64());
  Learner learner(MlpNetwork::create(widths, InitRule::GlorotUniform, init_rng), cfg, hp);

  Actor actor(cfg, hp.allowed);
  actor.load(learner.snapshot());

  DqnResult result;
  if (hp.record_trace) {
    result.trace.emplace();
    result.trace->snapshots.push_back(actor.network());
  }

  auto epsilon_at = [&](long t) {
    if (hp.eps_decay_steps <= 0) return hp.eps_end;
    const double frac = std::min(1.0, static_cast<double>(t) / static_cast<double>(hp.eps_decay_steps));
    return hp.eps_start + (hp.eps_end - hp.eps_start) * frac;
  };

  MlpNetwork best;
  double best_throughput = -1.0;

  std::vector<Experience> outbox;
  outbox.reserve(static_cast<std::size_t>(hp.flush_period));
  State s = hp.initial;
  for (long t = 0; t < hp.total_steps; ++t) {
    const double eps = epsilon_at(t);
    const ActionSet options = feasible_actions(s, cfg) & hp.allowed;
    ActionKind a;
    const bool explored = rng.uniform() < eps;
    if (explored) {
      const auto members = options.members();
      a = members[rng.below(members.size())];
    } else {
      a = actor.greedy(s);
    }
    if (!options.contains(a)) throw InfeasibleAction(s, a);
    if (result.trace) {
      result.trace->decisions.push_back({s, a, explored, result.trace->snapshots.size() - 1});
    }

    const StepOutcome out = step(s, a, cfg, rng);
    outbox.push_back({s, a, static_cast<double>(out.delivered), out.next});
    s = out.next;

    if (static_cast<long>(outbox.size()) == hp.flush_period || t + 1 == hp.total_steps) {
      const double loss = learner.receive(outbox, learner_rng);
      outbox.clear();
      actor.load(learner.snapshot());
      if (result.trace) result.trace->snapshots.push_back(actor.network());

      const Policy greedy = tabulate_greedy(actor.network(), cfg, hp.allowed);
      const SeedMetrics eval = simulate_policy(cfg, greedy, hp.eval_horizon, hp.eval_seed);
      result.log.rows.push_back({t + 1, eps, loss, eval.throughput, eval.dropped});
      if (eval.throughput > best_throughput) {
        best_throughput = eval.throughput;
        best = actor.network();
        result.selected_row = result.log.rows.size() - 1;
      }
    }
  }

  result.final_network = learner.snapshot();
  if (hp.keep_best_snapshot) {
    result.network = std::move(best);
  } else {
    result.network = result.final_network;
    result.selected_row = result.log.rows.size() - 1;
  }
  result.policy = tabulate_greedy(result.network, cfg, hp.allowed);
  return result;
}

}  // namespace jamrl
