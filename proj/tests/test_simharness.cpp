#include <doctest.h>

#include <sstream>

#include "jamrl/simharness.hpp"

using namespace jamrl;

namespace {

SweepSpec small_spec() {
  SweepSpec spec = jamming_sweep({});
  spec.values = {0.3, 0.6};
  spec.horizon = 5000;
  spec.seeds = {1, 2, 3};
  return spec;
}

std::string csv(const SweepResult& r) {
  std::ostringstream out;
  write_sweep_csv(out, r);
  return out.str();
}

SweepRow row(double v, StrategyKind k, double t) {
  SweepRow r;
  r.value = v;
  r.strategy = k;
  r.throughput = t;
  return r;
}

}  // namespace

TEST_CASE("sweep layouts") {
  const auto jam = jamming_sweep({});
  CHECK(jam.parameter == SweptParameter::PAttack);
  CHECK(jam.values.size() == 9);
  CHECK(jam.values.front() == 0.1);
  CHECK(jam.values.back() == 0.9);
  CHECK(jam.strategies.size() == 4);
  EnvConfig base;
  base.p_attack = 0.2;
  const auto arr = arrival_sweep(base);
  CHECK(arr.parameter == SweptParameter::PArrival);
  CHECK(arr.base.p_attack == 0.6);
  CHECK(config_at(arr, 0.3).p_arrival == 0.3);
  CHECK(config_at(arr, 0.3).p_attack == 0.6);
}

TEST_CASE("invalid sweeps are rejected") {
  SweepSpec spec = small_spec();
  spec.values.clear();
  CHECK_THROWS_AS(run_sweep(spec), ConfigError);
  spec = small_spec();
  spec.values = {0.5, 1.5};
  CHECK_THROWS_AS(run_sweep(spec), ConfigError);
  spec = small_spec();
  spec.horizon = 0;
  CHECK_THROWS_AS(run_sweep(spec), ConfigError);
  spec = small_spec();
  spec.seeds.clear();
  CHECK_THROWS_AS(run_sweep(spec), ConfigError);
}

TEST_CASE("single-point wd sweep is plain evaluation") {
  SweepSpec spec = small_spec();
  spec.values = {0.0};
  spec.strategies = {StrategyKind::WD};
  const auto result = run_sweep(spec);
  REQUIRE(result.rows.size() == 1);
  EnvConfig cfg;
  cfg.p_attack = 0.0;
  Policy wd(cfg, ActionKind::PassiveHarvest);
  for (std::size_t i = 0; i < cfg.num_states(); ++i) wd.set(i, wd_policy(cfg.state_at(i), cfg));
  const auto direct = evaluate_policy(cfg, wd, spec.horizon, spec.seeds);
  CHECK(result.rows[0].throughput == direct.avg_throughput);
  CHECK(result.rows[0].dropped == direct.avg_dropped);
  CHECK(result.rows[0].throughput_ci == direct.throughput_ci);
}

TEST_CASE("sweeps are reproducible and match the serial reference") {
  const SweepSpec spec = small_spec();
  const auto a = run_sweep(spec);
  const auto b = run_sweep(spec);
  const auto s = run_sweep_serial(spec);
  CHECK(csv(a) == csv(b));
  CHECK(csv(a) == csv(s));
  CHECK(a.rows.size() == 8);
  CHECK(a.rows[0].value == 0.3);
  CHECK(a.rows[0].strategy == StrategyKind::Proposed);
  CHECK(a.rows[7].strategy == StrategyKind::WD);
  for (const auto& r : a.rows) {
    for (const auto& ps : r.per_seed) {
      CHECK(ps.throughput >= 0.0);
      CHECK(ps.throughput <= 3.0);
      CHECK(ps.dropped >= 0.0);
      CHECK(ps.dropped <= 5.0);
    }
  }
}

TEST_CASE("sweep csv layout") {
  SweepSpec spec = small_spec();
  spec.values = {0.5};
  spec.strategies = {StrategyKind::WD};
  const std::string text = csv(run_sweep(spec));
  CHECK(text.rfind("param,value,strategy,throughput,throughput_ci,dropped,dropped_ci,seeds,horizon\n"
                   "p_attack,0.5,wd,",
                   0) == 0);
  CHECK(text.find(",3,5000\n") != std::string::npos);
}

TEST_CASE("confidence intervals narrow with more seeds") {
  SweepSpec spec = small_spec();
  spec.values = {0.6};
  spec.strategies = {StrategyKind::Proposed};
  spec.horizon = 2000;
  spec.seeds.clear();
  for (std::uint64_t s = 1; s <= 10; ++s) spec.seeds.push_back(s);
  const double ci10 = run_sweep(spec).rows[0].throughput_ci;
  for (std::uint64_t s = 11; s <= 40; ++s) spec.seeds.push_back(s);
  const double ci40 = run_sweep(spec).rows[0].throughput_ci;
  // expected ratio is 2; demand a clear margin
  CHECK(ci40 < ci10 / 1.4);
}

TEST_CASE("summary of all-equal rows") {
  SweepResult r;
  for (double v : {0.1, 0.2}) {
    for (StrategyKind k : kAllStrategies) r.rows.push_back(row(v, k, 0.25));
  }
  const auto summary = summarize(r);
  REQUIRE(summary.size() == 2);
  for (const auto& s : summary) {
    CHECK(s.ratio_dh == 1.0);
    CHECK(s.ratio_db == 1.0);
    CHECK(s.ratio_wd == 1.0);
    CHECK(s.ordered);
  }
}

TEST_CASE("summary ratios and ordering") {
  SweepResult r;
  r.rows = {row(0.9, StrategyKind::Proposed, 0.75), row(0.9, StrategyKind::DH, 0.375),
            row(0.9, StrategyKind::DB, 0.5), row(0.9, StrategyKind::WD, 0.25)};
  const auto s = summarize(r).at(0);
  CHECK(s.ratio_dh == 2.0);
  CHECK(s.ratio_db == 1.5);
  CHECK(s.ratio_wd == 3.0);
  CHECK_FALSE(s.ordered);
  std::ostringstream out;
  write_summary_csv(out, summarize(r));
  CHECK(out.str() == "value,proposed,ratio_dh,ratio_db,ratio_wd,ordered\n0.9,0.75,2,1.5,3,false\n");
}

TEST_CASE("summary requires every strategy") {
  SweepResult r;
  r.rows = {row(0.5, StrategyKind::Proposed, 0.3), row(0.5, StrategyKind::DH, 0.2),
            row(0.5, StrategyKind::WD, 0.1)};
  CHECK_THROWS_WITH_AS(summarize(r), doctest::Contains("db"), std::invalid_argument);
}

TEST_CASE("failing sweep points are identified") {
  SweepSpec spec = small_spec();
  spec.values = {0.4};
  spec.strategies = {StrategyKind::Proposed};
  spec.trainer = TrainerKind::Dqn;
  spec.settings.dqn.total_steps = 100;
  spec.settings.dqn.batch_size = 64;
  spec.settings.dqn.replay_capacity = 32;
  CHECK_THROWS_WITH_AS(run_sweep(spec), doctest::Contains("p_attack=0.4, strategy proposed"),
                       SweepError);
}
