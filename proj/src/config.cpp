#include "jamrl/config.hpp"

#include <fstream>
#include <set>

namespace jamrl {

using nlohmann::json;

std::string_view to_string(SweepFigure f) { return f == SweepFigure::Jamming ? "jamming" : "arrival"; }

std::optional<SweepFigure> parse_figure(std::string_view name) {
  if (name == "jamming") return SweepFigure::Jamming;
  if (name == "arrival") return SweepFigure::Arrival;
  return std::nullopt;
}

namespace {

// Reads keys of one JSON object and rejects whatever was not read.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "must be an object");
  }

  std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* get(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void read(const std::string& key, int& out) {
    if (const json* v = get(key)) {
      if (!v->is_number_integer()) throw ConfigError(path(key), "must be an integer");
      const auto x = v->get<long long>();
      if (x < INT32_MIN || x > INT32_MAX) throw ConfigError(path(key), "out of range");
      out = static_cast<int>(x);
    }
  }

  void read(const std::string& key, long& out) {
    if (const json* v = get(key)) {
      if (!v->is_number_integer()) throw ConfigError(path(key), "must be an integer");
      out = v->get<long>();
    }
  }

  void read(const std::string& key, unsigned long& out) {
    if (const json* v = get(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(path(key), "must be a non-negative integer");
      out = v->get<unsigned long>();
    }
  }

  void read(const std::string& key, double& out) {
    if (const json* v = get(key)) {
      if (!v->is_number()) throw ConfigError(path(key), "must be a number");
      out = v->get<double>();
    }
  }

  void read(const std::string& key, bool& out) {
    if (const json* v = get(key)) {
      if (!v->is_boolean()) throw ConfigError(path(key), "must be a boolean");
      out = v->get<bool>();
    }
  }

  std::optional<std::string> read_string(const std::string& key) {
    if (const json* v = get(key)) {
      if (!v->is_string()) throw ConfigError(path(key), "must be a string");
      return v->get<std::string>();
    }
    return std::nullopt;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError(path(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <typename T>
std::vector<T> read_array(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where, "must be an array");
  std::vector<T> out;
  for (const json& x : v) {
    if constexpr (std::is_same_v<T, double>) {
      if (!x.is_number()) throw ConfigError(where, "entries must be numbers");
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!x.is_number_unsigned()) throw ConfigError(where, "entries must be non-negative integers");
    } else {
      if (!x.is_number_integer()) throw ConfigError(where, "entries must be integers");
    }
    out.push_back(x.get<T>());
  }
  return out;
}

std::vector<StrategyKind> read_strategies(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where, "must be an array");
  std::vector<StrategyKind> out;
  for (const json& x : v) {
    const auto k = x.is_string() ? parse_strategy(x.get<std::string>()) : std::nullopt;
    if (!k) throw ConfigError(where, "entries must be one of proposed|dh|db|wd");
    out.push_back(*k);
  }
  return out;
}

void read_vi(const json& j, ValueIterationOptions& vi) {
  ObjectReader r(j, "trainer.vi");
  r.read("gamma", vi.gamma);
  r.read("tol", vi.tol);
  r.read("max_iterations", vi.max_iterations);
  r.finish();
}

void read_tabular(const json& j, TabularHyperparams& hp) {
  ObjectReader r(j, "trainer.tabular");
  r.read("steps", hp.steps);
  r.read("gamma", hp.gamma);
  r.read("lr_exponent", hp.lr_exponent);
  r.read("eps_start", hp.eps_start);
  r.read("eps_end", hp.eps_end);
  r.read("eps_decay_fraction", hp.eps_decay_fraction);
  r.read("snapshot_every", hp.snapshot_every);
  r.finish();
}

void read_dqn(const json& j, DqnHyperparams& hp) {
  ObjectReader r(j, "trainer.dqn");
  r.read("replay_capacity", hp.replay_capacity);
  r.read("batch_size", hp.batch_size);
  r.read("gamma", hp.gamma);
  r.read("eps_start", hp.eps_start);
  r.read("eps_end", hp.eps_end);
  r.read("eps_decay_steps", hp.eps_decay_steps);
  r.read("target_sync_rounds", hp.target_sync_rounds);
  r.read("flush_period", hp.flush_period);
  r.read("learning_rate", hp.learning_rate);
  r.read("total_steps", hp.total_steps);
  if (const json* h = r.get("hidden")) hp.hidden = read_array<int>(*h, r.path("hidden"));
  r.read("eval_horizon", hp.eval_horizon);
  r.read("eval_seed", hp.eval_seed);
  r.read("keep_best_snapshot", hp.keep_best_snapshot);
  r.finish();
}

// Converts library validation failures into ConfigError with a section path.
template <typename F>
void as_config_error(const std::string& where, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where, e.what());
  }
}

}  // namespace

EnvConfig env_config_from_json(const json& j, const std::string& where) {
  EnvConfig cfg;
  ObjectReader r(j, where);
  r.read("e_max", cfg.e_max);
  r.read("d_max", cfg.d_max);
  r.read("cost_fake", cfg.cost_fake);
  r.read("cost_active", cfg.cost_active);
  r.read("tx_packets", cfg.tx_packets);
  r.read("harvest_jam", cfg.harvest_jam);
  r.read("bs_packets", cfg.bs_packets);
  r.read("p_attack", cfg.p_attack);
  r.read("p_arrival", cfg.p_arrival);
  r.read("arrival_batch", cfg.arrival_batch);
  r.read("p_ambient", cfg.p_ambient);
  r.read("ambient_gain", cfg.ambient_gain);
  r.read("energy_unit_uJ", cfg.energy_unit_uJ);
  r.read("packet_bits", cfg.packet_bits);
  r.finish();
  return cfg;
}

json to_json(const EnvConfig& cfg) {
  return json{{"e_max", cfg.e_max},
              {"d_max", cfg.d_max},
              {"cost_fake", cfg.cost_fake},
              {"cost_active", cfg.cost_active},
              {"tx_packets", cfg.tx_packets},
              {"harvest_jam", cfg.harvest_jam},
              {"bs_packets", cfg.bs_packets},
              {"p_attack", cfg.p_attack},
              {"p_arrival", cfg.p_arrival},
              {"arrival_batch", cfg.arrival_batch},
              {"p_ambient", cfg.p_ambient},
              {"ambient_gain", cfg.ambient_gain},
              {"energy_unit_uJ", cfg.energy_unit_uJ},
              {"packet_bits", cfg.packet_bits}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig rc;
  ObjectReader root(j, "");
  if (const json* env = root.get("env")) rc.env = env_config_from_json(*env, "env");

  if (const json* t = root.get("trainer")) {
    ObjectReader r(*t, "trainer");
    if (auto kind = r.read_string("kind")) {
      const auto k = parse_trainer(*kind);
      if (!k) throw ConfigError("trainer.kind", "must be one of vi|tabular|dqn");
      rc.trainer = *k;
    }
    r.read("seed", rc.settings.seed);
    if (const json* v = r.get("vi")) read_vi(*v, rc.settings.vi);
    if (const json* v = r.get("tabular")) read_tabular(*v, rc.settings.tabular);
    if (const json* v = r.get("dqn")) read_dqn(*v, rc.settings.dqn);
    r.finish();
  }

  if (const json* e = root.get("evaluation")) {
    ObjectReader r(*e, "evaluation");
    r.read("horizon", rc.horizon);
    if (const json* s = r.get("seeds")) rc.seeds = read_array<std::uint64_t>(*s, "evaluation.seeds");
    r.finish();
  }

  if (auto s = root.read_string("strategy")) {
    const auto k = parse_strategy(*s);
    if (!k) throw ConfigError("strategy", "must be one of proposed|dh|db|wd");
    rc.strategy = *k;
  }

  if (const json* s = root.get("sweep")) {
    SweepSection sec;
    ObjectReader r(*s, "sweep");
    if (auto fig = r.read_string("figure")) {
      const auto f = parse_figure(*fig);
      if (!f) throw ConfigError("sweep.figure", "must be jamming|arrival");
      sec.figure = *f;
    }
    if (const json* v = r.get("values")) sec.values = read_array<double>(*v, "sweep.values");
    if (const json* v = r.get("strategies")) sec.strategies = read_strategies(*v, "sweep.strategies");
    r.finish();
    rc.sweep = sec;
  }

  if (auto dir = root.read_string("output_dir")) rc.output_dir = *dir;
  root.finish();
  return rc;
}

json to_json(const RunConfig& rc) {
  const auto& vi = rc.settings.vi;
  const auto& tab = rc.settings.tabular;
  const auto& dqn = rc.settings.dqn;
  json j;
  j["env"] = to_json(rc.env);
  j["trainer"] = json{
      {"kind", to_string(rc.trainer)},
      {"seed", rc.settings.seed},
      {"vi", {{"gamma", vi.gamma}, {"tol", vi.tol}, {"max_iterations", vi.max_iterations}}},
      {"tabular",
       {{"steps", tab.steps},
        {"gamma", tab.gamma},
        {"lr_exponent", tab.lr_exponent},
        {"eps_start", tab.eps_start},
        {"eps_end", tab.eps_end},
        {"eps_decay_fraction", tab.eps_decay_fraction},
        {"snapshot_every", tab.snapshot_every}}},
      {"dqn",
       {{"replay_capacity", dqn.replay_capacity},
        {"batch_size", dqn.batch_size},
        {"gamma", dqn.gamma},
        {"eps_start", dqn.eps_start},
        {"eps_end", dqn.eps_end},
        {"eps_decay_steps", dqn.eps_decay_steps},
        {"target_sync_rounds", dqn.target_sync_rounds},
        {"flush_period", dqn.flush_period},
        {"learning_rate", dqn.learning_rate},
        {"total_steps", dqn.total_steps},
        {"hidden", dqn.hidden},
        {"eval_horizon", dqn.eval_horizon},
        {"eval_seed", dqn.eval_seed},
        {"keep_best_snapshot", dqn.keep_best_snapshot}}}};
  j["evaluation"] = json{{"horizon", rc.horizon}, {"seeds", rc.seeds}};
  j["strategy"] = to_string(rc.strategy);
  if (rc.sweep) {
    json strategies = json::array();
    for (StrategyKind k : rc.sweep->strategies) strategies.push_back(to_string(k));
    j["sweep"] = json{{"figure", to_string(rc.sweep->figure)},
                      {"values", rc.sweep->values},
                      {"strategies", strategies}};
  }
  return j;
}

namespace {

json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json(parse_file(path));
}

EnvConfig load_env_config(const std::filesystem::path& path) {
  const json j = parse_file(path);
  if (j.is_object() && j.contains("env")) return run_config_from_json(j).env;
  return env_config_from_json(j, "");
}

void validate(const RunConfig& rc) {
  validate_config(rc.env);
  as_config_error("trainer.vi", [&] {
    if (!(rc.settings.vi.gamma >= 0.0 && rc.settings.vi.gamma < 1.0)) {
      throw std::invalid_argument("gamma must be in [0, 1)");
    }
    if (!(rc.settings.vi.tol > 0.0)) throw std::invalid_argument("tol must be positive");
    if (rc.settings.vi.max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  });
  as_config_error("trainer.tabular", [&] { validate(rc.settings.tabular); });
  as_config_error("trainer.dqn", [&] { validate(rc.settings.dqn); });
  if (rc.horizon < 1) throw ConfigError("evaluation.horizon", "must be at least 1");
  if (rc.seeds.empty()) throw ConfigError("evaluation.seeds", "must not be empty");
  if (rc.sweep) validate(make_sweep_spec(rc));
}

SweepSpec make_sweep_spec(const RunConfig& rc) {
  const SweepSection sec = rc.sweep.value_or(SweepSection{});
  SweepSpec spec = sec.figure == SweepFigure::Jamming ? jamming_sweep(rc.env) : arrival_sweep(rc.env);
  spec.base = rc.env;
  if (!sec.values.empty()) spec.values = sec.values;
  spec.strategies = sec.strategies;
  spec.trainer = rc.trainer;
  spec.settings = rc.settings;
  spec.horizon = rc.horizon;
  spec.seeds = rc.seeds;
  return spec;
}

}  // namespace jamrl
