#include "jamrl/simharness.hpp"

#include <algorithm>
#include <exception>
#include <ostream>

#include "jamrl/text.hpp"

namespace jamrl {

std::string_view to_string(SweptParameter p) {
  return p == SweptParameter::PAttack ? "p_attack" : "p_arrival";
}

std::optional<SweptParameter> parse_swept_parameter(std::string_view name) {
  if (name == "p_attack") return SweptParameter::PAttack;
  if (name == "p_arrival") return SweptParameter::PArrival;
  return std::nullopt;
}

namespace {

std::vector<double> tenths() {
  std::vector<double> v;
  for (int i = 1; i <= 9; ++i) v.push_back(i / 10.0);
  return v;
}

}  // namespace

SweepSpec jamming_sweep(const EnvConfig& base) {
  SweepSpec spec;
  spec.parameter = SweptParameter::PAttack;
  spec.values = tenths();
  spec.base = base;
  return spec;
}

SweepSpec arrival_sweep(const EnvConfig& base) {
  SweepSpec spec;
  spec.parameter = SweptParameter::PArrival;
  spec.values = tenths();
  spec.base = base;
  spec.base.p_attack = 0.6;
  return spec;
}

EnvConfig config_at(const SweepSpec& spec, double value) {
  EnvConfig cfg = spec.base;
  if (spec.parameter == SweptParameter::PAttack) {
    cfg.p_attack = value;
  } else {
    cfg.p_arrival = value;
  }
  return cfg;
}

void validate(const SweepSpec& spec) {
  if (spec.values.empty()) throw ConfigError("sweep.values", "must not be empty");
  if (spec.strategies.empty()) throw ConfigError("sweep.strategies", "must not be empty");
  if (spec.seeds.empty()) throw ConfigError("evaluation.seeds", "must not be empty");
  if (spec.horizon < 1) throw ConfigError("evaluation.horizon", "must be at least 1");
  validate_config(spec.base);
  for (double v : spec.values) {
    try {
      validate_config(config_at(spec, v));
    } catch (const ConfigError& e) {
      throw ConfigError("sweep.values", "value " + format_real(v) + " is invalid (" + e.what() + ")");
    }
  }
}

SweepError::SweepError(SweptParameter p, double value, StrategyKind k, const std::string& what)
    : std::runtime_error("sweep point " + std::string(to_string(p)) + "=" + format_real(value) +
                         ", strategy " + std::string(to_string(k)) + ": " + what) {}

const SweepRow* SweepResult::find(double value, StrategyKind strategy) const {
  for (const SweepRow& r : rows) {
    if (r.value == value && r.strategy == strategy) return &r;
  }
  return nullptr;
}

namespace {

SweepRow run_point(const SweepSpec& spec, std::size_t value_index, std::size_t strategy_index) {
  const double value = spec.values[value_index];
  const StrategyKind kind = spec.strategies[strategy_index];
  const EnvConfig cfg = config_at(spec, value);

  TrainerSettings settings = spec.settings;
  settings.seed = derive_seed(spec.settings.seed, value_index * kAllStrategies.size() +
                                                      static_cast<std::size_t>(kind));
  const Policy policy = build_strategy(kind, cfg, spec.trainer, settings);
  const Metrics m = evaluate_policy_serial(cfg, policy, spec.horizon, spec.seeds);

  return {value,         kind,           m.avg_throughput,    m.throughput_ci, m.avg_dropped,
          m.dropped_ci,  spec.seeds.size(), spec.horizon, m.per_seed};
}

template <bool Parallel>
SweepResult sweep_impl(const SweepSpec& spec) {
  validate(spec);
  const std::size_t n_strat = spec.strategies.size();
  const auto n_tasks = static_cast<long>(spec.values.size() * n_strat);

  std::vector<SweepRow> rows(static_cast<std::size_t>(n_tasks));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_tasks));

  auto task = [&](long i) {
    const auto vi = static_cast<std::size_t>(i) / n_strat;
    const auto si = static_cast<std::size_t>(i) % n_strat;
    try {
      rows[i] = run_point(spec, vi, si);
    } catch (const std::exception& e) {
      errors[i] = std::make_exception_ptr(
          SweepError(spec.parameter, spec.values[vi], spec.strategies[si], e.what()));
    }
  };

  if constexpr (Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n_tasks; ++i) task(i);
  } else {
    for (long i = 0; i < n_tasks; ++i) task(i);
  }

  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  return {spec.parameter, std::move(rows)};
}

double ratio(double proposed, double other) { return proposed == other ? 1.0 : proposed / other; }

}  // namespace

SweepResult run_sweep(const SweepSpec& spec) { return sweep_impl<true>(spec); }

SweepResult run_sweep_serial(const SweepSpec& spec) { return sweep_impl<false>(spec); }

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << "param,value,strategy,throughput,throughput_ci,dropped,dropped_ci,seeds,horizon\n";
  for (const SweepRow& r : result.rows) {
    out << to_string(result.parameter) << ',' << format_real(r.value) << ',' << to_string(r.strategy)
        << ',' << format_real(r.throughput) << ',' << format_real(r.throughput_ci) << ','
        << format_real(r.dropped) << ',' << format_real(r.dropped_ci) << ',' << r.seeds << ','
        << r.horizon << '\n';
  }
}

std::vector<SummaryRow> summarize(const SweepResult& result) {
  std::vector<double> values;
  for (const SweepRow& r : result.rows) {
    if (std::find(values.begin(), values.end(), r.value) == values.end()) values.push_back(r.value);
  }
  std::vector<SummaryRow> out;
  for (double v : values) {
    std::array<const SweepRow*, 4> rows{};
    for (StrategyKind k : kAllStrategies) {
      rows[static_cast<std::size_t>(k)] = result.find(v, k);
      if (!rows[static_cast<std::size_t>(k)]) {
        throw std::invalid_argument("summarize: strategy " + std::string(to_string(k)) +
                                    " missing at value " + format_real(v));
      }
    }
    const double p = rows[0]->throughput;
    const double dh = rows[1]->throughput;
    const double db = rows[2]->throughput;
    const double wd = rows[3]->throughput;
    out.push_back({v, p, ratio(p, dh), ratio(p, db), ratio(p, wd), p >= dh && dh >= db && db >= wd});
  }
  return out;
}

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows) {
  out << "value,proposed,ratio_dh,ratio_db,ratio_wd,ordered\n";
  for (const SummaryRow& r : rows) {
    out << format_real(r.value) << ',' << format_real(r.proposed) << ',' << format_real(r.ratio_dh)
        << ',' << format_real(r.ratio_db) << ',' << format_real(r.ratio_wd) << ','
        << (r.ordered ? "true" : "false") << '\n';
  }
}

}  // namespace jamrl
