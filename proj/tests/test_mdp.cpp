#include <doctest.h>

#include <map>
#include <sstream>

#include "jamrl/mdp.hpp"

using namespace jamrl;

namespace {

// Finds a seed whose first draws produce the requested Bernoulli outcomes
// under probabilities `ps`.
std::uint64_t seed_for(const std::vector<double>& ps, const std::vector<bool>& want) {
  for (std::uint64_t seed = 0;; ++seed) {
    Rng rng(seed);
    bool ok = true;
    for (std::size_t i = 0; i < ps.size() && ok; ++i) ok = rng.bernoulli(ps[i]) == want[i];
    if (ok) return seed;
  }
}

double total_prob(const std::vector<Transition>& ts) {
  double p = 0.0;
  for (const auto& t : ts) p += t.prob;
  return p;
}

}  // namespace

TEST_CASE("default config is valid") {
  EnvConfig cfg;
  CHECK_NOTHROW(validate_config(cfg));
  CHECK(cfg.num_states() == 121);
}

TEST_CASE("validate_config names the offending field") {
  auto field_of = [](EnvConfig cfg) {
    try {
      validate_config(cfg);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("none");
  };
  EnvConfig c;
  c.p_attack = 1.3;
  CHECK(field_of(c) == "p_attack");
  c = {};
  c.e_max = 0;
  CHECK(field_of(c) == "e_max");
  c = {};
  c.cost_active = 11;
  CHECK(field_of(c) == "cost_active");
  c = {};
  c.p_ambient = -0.1;
  CHECK(field_of(c) == "p_ambient");
  c = {};
  c.d_max = 0;
  CHECK(field_of(c) == "d_max");
  c = {};
  c.harvest_jam = -1;
  CHECK(field_of(c) == "harvest_jam");
}

TEST_CASE("feasible action sets") {
  EnvConfig cfg;
  CHECK(feasible_actions({0, 5}, cfg) == ActionSet{ActionKind::PassiveHarvest});
  CHECK(feasible_actions({10, 0}, cfg) ==
        ActionSet{ActionKind::PassiveHarvest, ActionKind::DeceiveHarvest});
  CHECK(feasible_actions({3, 1}, cfg) == ActionSet::all());
  CHECK(feasible_actions({2, 9}, cfg) ==
        ActionSet{ActionKind::PassiveHarvest, ActionKind::DeceiveHarvest,
                  ActionKind::DeceiveBackscatter});
  for (std::size_t i = 0; i < cfg.num_states(); ++i) {
    CHECK(feasible_actions(cfg.state_at(i), cfg).contains(ActionKind::PassiveHarvest));
  }
}

TEST_CASE("action names round-trip") {
  for (ActionKind a : kAllActions) CHECK(parse_action(to_string(a)) == a);
  CHECK_FALSE(parse_action("jump").has_value());
}

TEST_CASE("step resolves forced branches") {
  EnvConfig cfg;
  SUBCASE("active transmit, no attack, arrival") {
    Rng rng(seed_for({cfg.p_attack, cfg.p_arrival}, {false, true}));
    const auto o = step({5, 4}, ActionKind::ActiveTransmit, cfg, rng);
    CHECK(o.next == State{2, 3});
    CHECK(o.delivered == 3);
    CHECK(o.dropped == 0);
    CHECK_FALSE(o.attacked);
    CHECK(o.arrived);
  }
  SUBCASE("active transmit, attack, no arrival") {
    Rng rng(seed_for({cfg.p_attack, cfg.p_arrival}, {true, false}));
    const auto o = step({5, 4}, ActionKind::ActiveTransmit, cfg, rng);
    CHECK(o.next == State{2, 1});
    CHECK(o.delivered == 0);
    CHECK(o.dropped == 3);
    CHECK(o.attacked);
  }
  SUBCASE("passive harvest clips at capacity") {
    Rng rng(seed_for({cfg.p_ambient, cfg.p_arrival}, {true, false}));
    const auto o = step({10, 0}, ActionKind::PassiveHarvest, cfg, rng);
    CHECK(o.next == State{10, 0});
    CHECK(o.delivered == 0);
    CHECK(o.dropped == 0);
    CHECK(o.ambient);
  }
  SUBCASE("attacked deceive harvest gains jamming energy") {
    Rng rng(seed_for({cfg.p_attack, cfg.p_arrival}, {true, false}));
    const auto o = step({4, 2}, ActionKind::DeceiveHarvest, cfg, rng);
    CHECK(o.next == State{6, 2});
  }
  SUBCASE("attacked backscatter delivers one packet") {
    Rng rng(seed_for({cfg.p_attack, cfg.p_arrival}, {true, false}));
    const auto o = step({4, 2}, ActionKind::DeceiveBackscatter, cfg, rng);
    CHECK(o.next == State{3, 1});
    CHECK(o.delivered == 1);
  }
  SUBCASE("arrival overflow is dropped") {
    Rng rng(seed_for({cfg.p_ambient, cfg.p_arrival}, {false, true}));
    const auto o = step({0, 10}, ActionKind::PassiveHarvest, cfg, rng);
    CHECK(o.next == State{0, 10});
    CHECK(o.dropped == 2);
  }
}

TEST_CASE("step rejects infeasible actions") {
  EnvConfig cfg;
  Rng rng(1);
  CHECK_THROWS_AS(step({2, 5}, ActionKind::ActiveTransmit, cfg, rng), InfeasibleAction);
  CHECK_THROWS_AS(step({5, 0}, ActionKind::DeceiveBackscatter, cfg, rng), InfeasibleAction);
  CHECK_THROWS_AS(enumerate_kernel({0, 0}, ActionKind::DeceiveHarvest, cfg), InfeasibleAction);
}

TEST_CASE("kernel of active transmit at (5,4)") {
  EnvConfig cfg;
  auto ts = enumerate_kernel({5, 4}, ActionKind::ActiveTransmit, cfg);
  REQUIRE(ts.size() == 4);
  std::map<std::tuple<int, int, int, int>, double> got;
  for (const auto& t : ts) got[{t.next.energy, t.next.queue, t.delivered, t.dropped}] += t.prob;
  CHECK(got[{2, 3, 0, 3}] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(got[{2, 1, 0, 3}] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(got[{2, 3, 3, 0}] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(got[{2, 1, 3, 0}] == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("backscatter without attacks never delivers") {
  EnvConfig cfg;
  cfg.p_attack = 0.0;
  for (std::size_t i = 0; i < cfg.num_states(); ++i) {
    const State s = cfg.state_at(i);
    if (!feasible_actions(s, cfg).contains(ActionKind::DeceiveBackscatter)) continue;
    for (const auto& t : enumerate_kernel(s, ActionKind::DeceiveBackscatter, cfg)) {
      CHECK(t.delivered == 0);
    }
  }
}

TEST_CASE("kernel properties over the default config") {
  EnvConfig cfg;
  for (std::size_t i = 0; i < cfg.num_states(); ++i) {
    const State s = cfg.state_at(i);
    for (ActionKind a : feasible_actions(s, cfg).members()) {
      const auto ts = enumerate_kernel(s, a, cfg);
      CHECK(ts.size() <= 8);
      CHECK(total_prob(ts) == doctest::Approx(1.0).epsilon(1e-14));
      for (const auto& t : ts) {
        CHECK(t.prob > 0.0);
        CHECK(cfg.contains(t.next));
        CHECK(t.delivered >= 0);
        CHECK(t.dropped >= 0);
        CHECK(t.delivered <= std::max(cfg.tx_packets, cfg.bs_packets));
        CHECK(t.dropped <= cfg.tx_packets + cfg.arrival_batch);
        CHECK(t.delivered + t.dropped <= s.queue + cfg.arrival_batch);
        // energy accounting: the only gains are 0, ambient or jamming harvest
        const int base = s.energy - action_cost(a, cfg);
        const int e = t.next.energy;
        const bool ok = e == base || e == std::min(cfg.e_max, base + cfg.ambient_gain) ||
                        e == std::min(cfg.e_max, base + cfg.harvest_jam);
        CHECK(ok);
      }
    }
  }
}

TEST_CASE("identical seeds give identical trajectories") {
  EnvConfig cfg;
  Rng a(42), b(42);
  State sa{0, 0}, sb{0, 0};
  for (int t = 0; t < 2000; ++t) {
    const auto acts = feasible_actions(sa, cfg).members();
    const ActionKind act = acts[static_cast<std::size_t>(t) % acts.size()];
    const auto oa = step(sa, act, cfg, a);
    const auto ob = step(sb, act, cfg, b);
    REQUIRE(oa.next == ob.next);
    REQUIRE(oa.delivered == ob.delivered);
    sa = oa.next;
    sb = ob.next;
  }
}

TEST_CASE("kernel table and csv dump") {
  EnvConfig cfg;
  KernelTable kt(cfg);
  CHECK(kt.num_pairs() == 411);
  CHECK(kt.transitions(cfg.state_index({0, 3}), ActionKind::ActiveTransmit).empty());
  KernelTable restricted(cfg, {ActionKind::PassiveHarvest, ActionKind::ActiveTransmit});
  CHECK(restricted.num_pairs() == 121 + 80);

  std::ostringstream out;
  write_kernel_csv(out, cfg);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "energy,queue,action,prob,next_energy,next_queue,delivered,dropped");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  std::size_t expected = 0;
  for (std::size_t i = 0; i < cfg.num_states(); ++i) {
    for (ActionKind a : feasible_actions(cfg.state_at(i), cfg).members()) {
      expected += enumerate_kernel(cfg.state_at(i), a, cfg).size();
    }
  }
  CHECK(rows == expected);
}

TEST_CASE("rng draws") {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(rng.below(7) < 7);
  }
  CHECK_FALSE(Rng(5).bernoulli(0.0));
  CHECK(Rng(5).bernoulli(1.0));
  CHECK(derive_seed(1, 2) != derive_seed(2, 1));
}
