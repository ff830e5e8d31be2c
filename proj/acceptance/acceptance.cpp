// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "../tests/cli_util.hpp"
#include "../tests/gradcheck.hpp"
#include "jamrl/simharness.hpp"
#include "jamrl/text.hpp"

using namespace jamrl;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& name, const std::string& detail) {
  std::printf("criterion %d: %s  %s  %s\n", id, pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
constexpr long kHorizon = 100'000;

using Outcome = std::tuple<int, int, int, int>;  // next energy, next queue, delivered, dropped

// Slot rules written out branch by branch, independent of the library kernel.
std::map<Outcome, double> reference_kernel(State s, ActionKind a, const EnvConfig& c) {
  std::map<Outcome, double> out;
  const bool transmits = a != ActionKind::PassiveHarvest;
  for (int attack = 0; attack <= (transmits ? 1 : 0); ++attack) {
    const double p_att = transmits ? (attack ? c.p_attack : 1.0 - c.p_attack) : 1.0;
    int e = s.energy, q = s.queue, delivered = 0, dropped = 0;
    bool passive = false;
    if (a == ActionKind::ActiveTransmit) {
      e -= c.cost_active;
      const int k = std::min(c.tx_packets, q);
      q -= k;
      (attack ? dropped : delivered) += k;
    } else if (a == ActionKind::DeceiveHarvest) {
      e -= c.cost_fake;
      if (attack) e += c.harvest_jam;
      passive = !attack;
    } else if (a == ActionKind::DeceiveBackscatter) {
      e -= c.cost_fake;
      if (attack) {
        const int k = std::min(c.bs_packets, q);
        q -= k;
        delivered += k;
      }
      passive = !attack;
    } else {
      passive = true;
    }
    for (int amb = 0; amb <= (passive ? 1 : 0); ++amb) {
      const double p_amb = passive ? (amb ? c.p_ambient : 1.0 - c.p_ambient) : 1.0;
      for (int arr = 0; arr <= 1; ++arr) {
        const double p_arr = arr ? c.p_arrival : 1.0 - c.p_arrival;
        int ee = e + (amb ? c.ambient_gain : 0);
        int qq = q, dd = dropped;
        if (arr) {
          qq += c.arrival_batch;
          if (qq > c.d_max) {
            dd += qq - c.d_max;
            qq = c.d_max;
          }
        }
        ee = std::clamp(ee, 0, c.e_max);
        out[{ee, qq, delivered, dd}] += p_att * p_amb * p_arr;
      }
    }
  }
  for (auto it = out.begin(); it != out.end();) it = it->second == 0.0 ? out.erase(it) : std::next(it);
  return out;
}

std::vector<std::pair<State, ActionKind>> feasible_pairs(const EnvConfig& cfg) {
  std::vector<std::pair<State, ActionKind>> pairs;
  for (std::size_t i = 0; i < cfg.num_states(); ++i) {
    for (ActionKind a : feasible_actions(cfg.state_at(i), cfg).members()) pairs.emplace_back(cfg.state_at(i), a);
  }
  return pairs;
}

void criterion_1() {
  const auto t0 = Clock::now();
  const EnvConfig cfg;
  const auto pairs = feasible_pairs(cfg);
  const long n = 100'000;
  std::vector<double> tv(pairs.size(), 0.0);
  std::vector<int> kernel_mismatch(pairs.size(), 0);
#pragma omp parallel for schedule(dynamic)
  for (long k = 0; k < static_cast<long>(pairs.size()); ++k) {
    const auto [s, a] = pairs[k];
    std::map<Outcome, double> exact;
    for (const auto& t : enumerate_kernel(s, a, cfg)) {
      exact[{t.next.energy, t.next.queue, t.delivered, t.dropped}] += t.prob;
    }
    const auto ref = reference_kernel(s, a, cfg);
    if (ref.size() != exact.size()) kernel_mismatch[k] = 1;
    for (const auto& [o, p] : ref) {
      auto it = exact.find(o);
      if (it == exact.end() || std::abs(it->second - p) > 1e-12) kernel_mismatch[k] = 1;
    }
    std::map<Outcome, long> counts;
    Rng rng(derive_seed(0xC1, static_cast<std::uint64_t>(k)));
    for (long i = 0; i < n; ++i) {
      const auto o = step(s, a, cfg, rng);
      ++counts[{o.next.energy, o.next.queue, o.delivered, o.dropped}];
    }
    double d = 0.0;
    for (const auto& [o, p] : exact) {
      auto it = counts.find(o);
      d += std::abs(p - (it == counts.end() ? 0.0 : static_cast<double>(it->second) / n));
    }
    for (const auto& [o, c] : counts) {
      if (!exact.count(o)) d += static_cast<double>(c) / n;
    }
    tv[k] = d / 2.0;
  }
  const double worst = *std::max_element(tv.begin(), tv.end());
  const int mismatches = std::accumulate(kernel_mismatch.begin(), kernel_mismatch.end(), 0);
  const double secs = seconds_since(t0);
  report(1, worst < 0.01 && mismatches == 0 && secs < 60.0, "kernel fidelity",
         "pairs=" + std::to_string(pairs.size()) + " max_tv=" + fmt(worst) + " (<0.01)" +
             " reference_mismatches=" + std::to_string(mismatches) + " time=" + fmt(secs) + "s (<60)");
}

// max |Q - backup(Q)| over feasible pairs, from the reference kernel.
double independent_residual(const QTable& q, double gamma, const EnvConfig& cfg, std::size_t& pairs) {
  double worst = 0.0;
  pairs = 0;
  for (const auto& [s, a] : feasible_pairs(cfg)) {
    double backup = 0.0;
    for (const auto& [o, p] : reference_kernel(s, a, cfg)) {
      const auto [e, qq, delivered, dropped] = o;
      double best = -1e300;
      for (ActionKind b : feasible_actions({e, qq}, cfg).members()) best = std::max(best, q({e, qq}, b));
      backup += p * (delivered + gamma * best);
    }
    worst = std::max(worst, std::abs(q(s, a) - backup));
    ++pairs;
  }
  return worst;
}

void criterion_2() {
  const EnvConfig cfg;
  const auto t0 = Clock::now();
  const auto vi = value_iteration(cfg);
  const double secs = seconds_since(t0);
  std::size_t pairs = 0;
  const double residual = independent_residual(vi.q, 0.99, cfg, pairs);
  std::size_t masked_nonzero = 0;
  for (std::size_t i = 0; i < cfg.num_states(); ++i) {
    for (ActionKind a : kAllActions) {
      if (!feasible_actions(cfg.state_at(i), cfg).contains(a) && vi.q.value(i, a) != 0.0) ++masked_nonzero;
    }
  }
  report(2, residual < 1e-9 && secs < 1.0 && masked_nonzero == 0, "oracle convergence",
         "iterations=" + std::to_string(vi.iterations) + " residual=" + fmt(residual) +
             " (<1e-9) feasible_pairs=" + std::to_string(pairs) + " of " +
             std::to_string(cfg.num_states() * kNumActions) + " masked_nonzero=" +
             std::to_string(masked_nonzero) + " time=" + fmt(secs) + "s (<1)");
}

void criterion_3() {
  const EnvConfig cfg;
  const auto vi = value_iteration(cfg);
  const auto t0 = Clock::now();
  Rng rng(1);
  const auto res = q_learning(cfg, TabularHyperparams{}, rng, &vi.q);
  const double secs = seconds_since(t0);
  const Policy learned = greedy_policy(res.q);
  const auto reach = reachable_states(vi.policy);
  std::size_t agree = 0;
  for (std::size_t i : reach) agree += learned.at(i) == vi.policy.at(i) ? 1 : 0;
  const double agreement = static_cast<double>(agree) / static_cast<double>(reach.size());
  const double dist = max_norm_distance(res.q, vi.q);
  report(3, agreement >= 0.95 && dist < 0.05 && secs < 120.0, "tabular vs oracle",
         "agreement=" + std::to_string(agree) + "/" + std::to_string(reach.size()) + "=" + fmt(agreement) +
             " (>=0.95) max_norm=" + fmt(dist) + " (<0.05) time=" + fmt(secs) + "s (<120)");
}

void criterion_4() {
  double worst = 0.0;
  const int cases = 25;
  std::size_t params = 0;
  for (int i = 0; i < cases; ++i) {
    const auto r = gradcheck::random_case(static_cast<std::uint64_t>(i));
    worst = std::max(worst, r.max_rel_error);
    params += r.parameters;
  }
  report(4, worst < 1e-4, "gradient correctness",
         "networks=" + std::to_string(cases) + " parameters=" + std::to_string(params) +
             " max_rel_error=" + fmt(worst) + " (<1e-4)");
}

void criterion_5() {
  EnvConfig cfg;
  cfg.p_attack = 0.6;
  const auto t0 = Clock::now();
  Rng rng(1);
  const auto res = actor_learner_loop(cfg, DqnHyperparams{}, rng);
  const double secs = seconds_since(t0);
  const double learned = evaluate_policy(cfg, res.policy, kHorizon, kSeeds).avg_throughput;
  const double oracle = evaluate_policy(cfg, value_iteration(cfg).policy, kHorizon, kSeeds).avg_throughput;
  const double ratio = learned / oracle;
  report(5, ratio >= 0.95 && secs < 600.0 && res.network.all_finite(), "dqn quality",
         "dqn=" + fmt(learned) + " vi=" + fmt(oracle) + " ratio=" + fmt(ratio) + " (>=0.95) time=" +
             fmt(secs) + "s (<600)");
}

SweepResult vi_sweep(SweepSpec spec) {
  spec.horizon = kHorizon;
  spec.seeds = kSeeds;
  spec.trainer = TrainerKind::Vi;
  return run_sweep(spec);
}

void criterion_6() {
  const auto result = vi_sweep(jamming_sweep(EnvConfig{}));
  const auto& values = jamming_sweep(EnvConfig{}).values;
  std::vector<double> p, wd;
  for (double v : values) {
    p.push_back(result.find(v, StrategyKind::Proposed)->throughput);
    wd.push_back(result.find(v, StrategyKind::WD)->throughput);
  }
  const auto argmin = static_cast<std::size_t>(std::min_element(p.begin(), p.end()) - p.begin());
  bool falls = argmin > 0, rises = argmin + 1 < p.size();
  for (std::size_t i = 1; i <= argmin; ++i) falls = falls && p[i] < p[i - 1];
  for (std::size_t i = argmin + 1; i < p.size(); ++i) rises = rises && p[i] >= p[i - 1];
  const bool near = std::abs(values[argmin] - 0.3) <= 0.1 + 1e-12;
  const double ratio = p.back() / p[2];
  bool wd_monotone = true;
  for (std::size_t i = 1; i < wd.size(); ++i) wd_monotone = wd_monotone && wd[i] <= wd[i - 1];
  std::string curve;
  for (double x : p) curve += (curve.empty() ? "" : ",") + fmt(x);
  report(6, falls && rises && near && ratio >= 2.0 && wd_monotone, "jamming sweep shape",
         "proposed=[" + curve + "] min_at=" + format_real(values[argmin]) + " (0.3+-0.1) t(0.9)/t(0.3)=" +
             fmt(ratio) + " (>=2) wd_non_increasing=" + (wd_monotone ? "yes" : "no"));
}

void criterion_7() {
  const auto spec = arrival_sweep(EnvConfig{});
  const auto result = vi_sweep(spec);
  const double sat = spec.values.back();
  auto t = [&](double v, StrategyKind k) { return result.find(v, k)->throughput; };
  const double p = t(sat, StrategyKind::Proposed), dh = t(sat, StrategyKind::DH),
               db = t(sat, StrategyKind::DB), wd = t(sat, StrategyKind::WD);
  const bool ordered = p >= dh && dh >= db && db >= wd;
  const double rise = t(0.2, StrategyKind::Proposed) / t(0.1, StrategyKind::Proposed);
  report(7, ordered && p / wd >= 2.0 && rise >= 1.5, "arrival sweep ordering",
         "p_attack=" + format_real(spec.base.p_attack) + " at p_arrival=" + format_real(sat) + ": P=" + fmt(p) +
             " DH=" + fmt(dh) + " DB=" + fmt(db) + " WD=" + fmt(wd) + " ordered=" + (ordered ? "yes" : "no") +
             " P/WD=" + fmt(p / wd) + " (>=2) rise(0.1->0.2)=" + fmt(rise) + " (>=1.5)");
}

void criterion_8() {
  double worst = 0.0;  // largest amount by which a restricted optimum exceeds the full one
  int configs = 0;
  for (double v : jamming_sweep(EnvConfig{}).values) {
    EnvConfig cfg;
    cfg.p_attack = v;
    const auto full = value_iteration(cfg);
    for (StrategyKind k : {StrategyKind::DH, StrategyKind::DB}) {
      ValueIterationOptions opt;
      opt.allowed = restricted_action_set(k);
      const auto sub = value_iteration(cfg, opt);
      for (std::size_t s = 0; s < cfg.num_states(); ++s) {
        worst = std::max(worst, sub.q.max_value(s) - full.q.max_value(s));
      }
    }
    ++configs;
  }
  // both solutions are within tol * gamma / (1 - gamma) of their fixed points
  const ValueIterationOptions opt;
  const double slack = 2.0 * opt.tol * opt.gamma / (1.0 - opt.gamma);
  report(8, worst <= slack, "action-set dominance",
         "configs=" + std::to_string(configs) + " max(V_restricted - V_full)=" + fmt(worst) + " (<=" +
             fmt(slack) + ")");
}

void criterion_9() {
  namespace fs = std::filesystem;
  const fs::path root = cli::scratch_dir("acceptance_determinism");
  struct Cmd {
    std::string name, args, manifest;
  };
  const std::vector<Cmd> cmds{
      {"oracle", "oracle", "oracle.manifest.json"},
      {"kernel", "kernel-dump", "kernel.manifest.json"},
      {"evaluate", "evaluate --strategy db --horizon 20000", "evaluate.manifest.json"},
      {"tabular", "train --trainer tabular --horizon 20000", "train.manifest.json"},
      {"dqn", "train --trainer dqn --steps 20000 --horizon 20000", "train.manifest.json"},
      {"sweep", "sweep --figure arrival --horizon 10000", "sweep_arrival.manifest.json"},
  };
  std::string detail;
  bool all = true;
  for (const auto& c : cmds) {
    const fs::path a = root / (c.name + "_a"), b = root / (c.name + "_b"), j = root / (c.name + "_j");
    const bool ran_a = cli::run(c.args + " --jobs 4 -o " + a.string()).code == 0;
    const bool ran_b =
        ran_a && cli::run(std::string(c.args.substr(0, c.args.find(' '))) + " -c " + (a / c.manifest).string() +
                          " --jobs 1 -o " + b.string())
                         .code == 0;
    const bool ran_j = ran_a && cli::run(c.args + " --jobs 2 -o " + j.string()).code == 0;
    const bool same = ran_b && ran_j && cli::snapshot(a) == cli::snapshot(b) && cli::snapshot(a) == cli::snapshot(j);
    all = all && same;
    detail += c.name + "=" + (same ? "identical" : "DIFFERENT") + " ";
  }
  fs::remove_all(root);
  report(9, all, "cli determinism", detail);
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> criteria{criterion_1, criterion_2, criterion_3,
                                                    criterion_4, criterion_5, criterion_6,
                                                    criterion_7, criterion_8, criterion_9};
  for (const auto& c : criteria) c();
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
