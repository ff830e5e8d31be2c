// Command-line front end: oracle, train, evaluate, sweep, kernel-dump.
//
// Exit status: 0 success, 1 usage or configuration error, 2 runtime failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>

#include "jamrl/config.hpp"
#include "jamrl/drl.hpp"
#include "jamrl/text.hpp"

namespace fs = std::filesystem;
using namespace jamrl;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Overrides {
  std::string config;
  std::optional<std::string> output_dir;
  std::optional<double> p_attack;
  std::optional<double> p_arrival;
  std::optional<long> steps;
  std::optional<std::string> trainer;
  std::optional<std::string> strategy;
  std::optional<std::uint64_t> seed;
  std::optional<long> horizon;
  std::optional<int> jobs;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "JSON run configuration (defaults when omitted)");
  cmd->add_option("-o,--output-dir", o.output_dir, "Output directory (overrides JAMRL_OUTPUT_DIR)");
  cmd->add_option("--p-attack", o.p_attack, "Override env.p_attack");
  cmd->add_option("--p-arrival", o.p_arrival, "Override env.p_arrival");
  cmd->add_option("--seed", o.seed, "Override trainer.seed");
  cmd->add_option("--horizon", o.horizon, "Override evaluation.horizon");
  cmd->add_option("-j,--jobs", o.jobs, "Maximum worker threads")->check(CLI::PositiveNumber);
}

// Config file, then environment, then flags.
RunConfig resolve(const Overrides& o) {
  RunConfig rc = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (const char* env = std::getenv("JAMRL_OUTPUT_DIR"); env && *env) rc.output_dir = env;
  if (o.output_dir) rc.output_dir = *o.output_dir;
  if (o.p_attack) rc.env.p_attack = *o.p_attack;
  if (o.p_arrival) rc.env.p_arrival = *o.p_arrival;
  if (o.seed) rc.settings.seed = *o.seed;
  if (o.horizon) rc.horizon = *o.horizon;
  if (o.trainer) {
    const auto t = parse_trainer(*o.trainer);
    if (!t) throw ConfigError("trainer.kind", "must be one of vi|tabular|dqn");
    rc.trainer = *t;
  }
  if (o.strategy) {
    const auto s = parse_strategy(*o.strategy);
    if (!s) throw ConfigError("strategy", "must be one of proposed|dh|db|wd");
    rc.strategy = *s;
  }
  if (o.steps) {
    rc.settings.tabular.steps = *o.steps;
    rc.settings.dqn.total_steps = *o.steps;
  }
  if (o.jobs) omp_set_num_threads(*o.jobs);
  return rc;
}

std::string manifest_text(const RunConfig& rc) { return to_json(rc).dump(2) + "\n"; }

// Outputs are rendered in memory first and only written once everything
// succeeded, so failures never leave partial files behind.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

  void add(const std::string& name, std::string contents) {
    files_.emplace_back(name, std::move(contents));
  }

  void commit() const {
    fs::create_directories(dir_);
    for (const auto& [name, contents] : files_) write_file_atomic(dir_ / name, contents);
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

 private:
  fs::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

template <typename F>
std::string render(F&& f) {
  std::ostringstream out;
  f(out);
  return out.str();
}

int cmd_oracle(RunConfig rc) {
  validate(rc);
  ValueIterationOptions opt = rc.settings.vi;
  opt.allowed = restricted_action_set(rc.strategy);
  const ValueIterationResult vi = value_iteration(rc.env, opt);
  const double residual = bellman_residual(vi.q, opt.gamma);

  OutputSet out(rc.output_dir);
  out.add("qtable.csv", render([&](std::ostream& os) { write_qtable_csv(os, vi.q); }));
  out.add("policy.csv", render([&](std::ostream& os) { write_policy_csv(os, vi.policy); }));
  out.add("residual.txt", render([&](std::ostream& os) {
            os << "strategy " << to_string(rc.strategy) << '\n'
               << "gamma " << format_real(opt.gamma) << '\n'
               << "tol " << format_real(opt.tol) << '\n'
               << "iterations " << vi.iterations << '\n'
               << "final_delta " << format_real(vi.deltas.empty() ? 0.0 : vi.deltas.back()) << '\n'
               << "bellman_residual " << format_real(residual) << '\n'
               << "pairs " << KernelTable(rc.env, opt.allowed).num_pairs() << '\n';
          }));
  out.add("oracle.manifest.json", manifest_text(rc));
  out.commit();
  std::cout << "value iteration: " << vi.iterations << " sweeps, Bellman residual "
            << format_real(residual) << ", wrote " << out.path("qtable.csv").string() << '\n';
  return 0;
}

int cmd_train(RunConfig rc) {
  if (rc.trainer == TrainerKind::Vi) throw UsageError("train needs --trainer tabular or dqn");
  const long steps =
      rc.trainer == TrainerKind::Tabular ? rc.settings.tabular.steps : rc.settings.dqn.total_steps;
  if (steps <= 0) throw ConfigError("steps", "no training requested (steps must be positive)");
  validate(rc);

  const ActionSet allowed = restricted_action_set(rc.strategy);
  if (rc.strategy == StrategyKind::WD) throw UsageError("wd is rule based and has nothing to train");
  OutputSet out(rc.output_dir);
  Policy policy;

  if (rc.trainer == TrainerKind::Tabular) {
    TabularHyperparams hp = rc.settings.tabular;
    hp.allowed = allowed;
    ValueIterationOptions vopt = rc.settings.vi;
    vopt.gamma = hp.gamma;
    vopt.allowed = allowed;
    const QTable reference = value_iteration(rc.env, vopt).q;
    Rng rng(rc.settings.seed);
    const QLearningResult res = q_learning(rc.env, hp, rng, &reference);
    policy = greedy_policy(res.q);
    out.add("qtable.csv", render([&](std::ostream& os) { write_qtable_csv(os, res.q); }));
    out.add("training_log.csv",
            render([&](std::ostream& os) { write_learning_curve_csv(os, res.curve); }));
    if (!res.curve.empty()) {
      std::cout << "final oracle distance " << format_real(res.curve.back().oracle_distance) << '\n';
    }
  } else {
    DqnHyperparams hp = rc.settings.dqn;
    hp.allowed = allowed;
    Rng rng(rc.settings.seed);
    const DqnResult res = actor_learner_loop(rc.env, hp, rng);
    policy = res.policy;
    out.add("weights.bin", render([&](std::ostream& os) { res.network.save(os); }));
    out.add("training_log.csv", render([&](std::ostream& os) { write_training_log_csv(os, res.log); }));
  }

  const Metrics m = evaluate_policy(rc.env, policy, rc.horizon, rc.seeds);
  out.add("policy.csv", render([&](std::ostream& os) { write_policy_csv(os, policy); }));
  out.add("metrics.csv", render([&](std::ostream& os) { write_metrics_csv(os, to_string(rc.strategy), m); }));
  out.add("train.manifest.json", manifest_text(rc));
  out.commit();
  std::cout << "final evaluated throughput " << format_real(m.avg_throughput) << " +- "
            << format_real(m.throughput_ci) << " packets/slot, dropped "
            << format_real(m.avg_dropped) << '\n';
  return 0;
}

int cmd_evaluate(RunConfig rc, const std::string& weights) {
  validate(rc);
  Policy policy;
  if (!weights.empty()) {
    std::ifstream in(weights, std::ios::binary);
    if (!in) throw ConfigError(weights, "cannot open weight snapshot");
    policy = tabulate_greedy(MlpNetwork::load(in), rc.env, restricted_action_set(rc.strategy));
  } else {
    policy = build_strategy(rc.strategy, rc.env, rc.trainer, rc.settings);
  }
  const Metrics m = evaluate_policy(rc.env, policy, rc.horizon, rc.seeds);

  OutputSet out(rc.output_dir);
  out.add("metrics.csv", render([&](std::ostream& os) { write_metrics_csv(os, to_string(rc.strategy), m); }));
  out.add("evaluate.manifest.json", manifest_text(rc));
  out.commit();
  std::cout << to_string(rc.strategy) << ": throughput " << format_real(m.avg_throughput) << " +- "
            << format_real(m.throughput_ci) << ", dropped " << format_real(m.avg_dropped) << " +- "
            << format_real(m.dropped_ci) << '\n';
  return 0;
}

int cmd_sweep(RunConfig rc, const std::optional<std::string>& figure_flag, bool p_attack_overridden) {
  SweepSection sec = rc.sweep.value_or(SweepSection{});
  if (figure_flag) {
    const auto f = parse_figure(*figure_flag);
    if (!f) throw ConfigError("sweep.figure", "must be jamming|arrival");
    if (rc.sweep && rc.sweep->figure != *f) sec.values.clear();
    sec.figure = *f;
  }
  if (sec.figure == SweepFigure::Arrival && !rc.sweep && !p_attack_overridden) rc.env.p_attack = 0.6;
  if (sec.values.empty()) {
    for (int i = 1; i <= 9; ++i) sec.values.push_back(i / 10.0);
  }
  rc.sweep = sec;
  validate(rc);

  const SweepResult result = run_sweep(make_sweep_spec(rc));
  const std::string stem = "sweep_" + std::string(to_string(sec.figure));

  OutputSet out(rc.output_dir);
  out.add(stem + ".csv", render([&](std::ostream& os) { write_sweep_csv(os, result); }));
  bool complete = true;
  for (StrategyKind k : kAllStrategies) {
    complete = complete && std::find(sec.strategies.begin(), sec.strategies.end(), k) != sec.strategies.end();
  }
  if (complete) {
    const auto summary = summarize(result);
    out.add("summary_" + std::string(to_string(sec.figure)) + ".csv", render([&](std::ostream& os) { write_summary_csv(os, summary); }));
  }
  out.add(stem + ".manifest.json", manifest_text(rc));
  out.commit();
  std::cout << "wrote " << result.rows.size() << " rows to " << out.path(stem + ".csv").string() << '\n';
  return 0;
}

int cmd_kernel_dump(RunConfig rc) {
  validate_config(rc.env);
  OutputSet out(rc.output_dir);
  out.add("kernel.csv", render([&](std::ostream& os) { write_kernel_csv(os, rc.env); }));
  out.add("kernel.manifest.json", manifest_text(rc));
  out.commit();
  std::cout << "wrote " << out.path("kernel.csv").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reactive-jammer deception simulator and reinforcement-learning toolkit"};
  app.require_subcommand(1);

  Overrides o;
  std::optional<std::string> figure;
  std::string weights;

  auto* oracle = app.add_subcommand("oracle", "Solve the MDP exactly by value iteration");
  add_common(oracle, o);
  oracle->add_option("--strategy", o.strategy, "proposed|dh|db|wd action set");

  auto* train = app.add_subcommand("train", "Train a tabular or deep Q-learning agent");
  add_common(train, o);
  train->add_option("--trainer", o.trainer, "tabular|dqn");
  train->add_option("--steps", o.steps, "Environment steps");
  train->add_option("--strategy", o.strategy, "proposed|dh|db action set");

  auto* evaluate = app.add_subcommand("evaluate", "Simulate a strategy and report metrics");
  add_common(evaluate, o);
  evaluate->add_option("--trainer", o.trainer, "vi|tabular|dqn");
  evaluate->add_option("--steps", o.steps, "Training steps for learning trainers");
  evaluate->add_option("--strategy", o.strategy, "proposed|dh|db|wd");
  evaluate->add_option("--weights", weights, "Evaluate the greedy policy of a weight snapshot");

  auto* sweep = app.add_subcommand("sweep", "Throughput/drop sweep over p_attack or p_arrival");
  add_common(sweep, o);
  sweep->add_option("--figure", figure, "jamming|arrival");
  sweep->add_option("--trainer", o.trainer, "vi|tabular|dqn");
  sweep->add_option("--steps", o.steps, "Training steps for learning trainers");

  auto* kernel = app.add_subcommand("kernel-dump", "Write the exact transition kernel");
  add_common(kernel, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    RunConfig rc = resolve(o);
    if (oracle->parsed()) return cmd_oracle(rc);
    if (train->parsed()) return cmd_train(rc);
    if (evaluate->parsed()) return cmd_evaluate(rc, weights);
    if (sweep->parsed()) return cmd_sweep(rc, figure, o.p_attack.has_value());
    if (kernel->parsed()) return cmd_kernel_dump(rc);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
