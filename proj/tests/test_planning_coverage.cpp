// Properties of tabular Q-learning that hold only once every state is
// sufficiently explored.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "jamrl/planning.hpp"

using namespace jamrl;

TEST_CASE("q_learning without attacks settles on harvest and transmit") {
  EnvConfig cfg;
  cfg.p_attack = 0.0;
  TabularHyperparams hp;
  Rng rng(5);
  const auto res = q_learning(cfg, hp, rng);
  const Policy pol = greedy_policy(res.q);
  const auto vi = value_iteration(cfg);
  for (std::size_t i : reachable_states(vi.policy)) {
    const ActionKind a = pol.at(i);
    CHECK((a == ActionKind::PassiveHarvest || a == ActionKind::ActiveTransmit));
  }
}

TEST_CASE("cli tabular training ends close to the oracle") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "jamrl_cli_tabular";
  fs::remove_all(dir);
  const std::string cmd = "\"" JAMRL_CLI_PATH "\" train --trainer tabular --horizon 5000 -o \"" +
                          dir.string() + "\" > /dev/null";
  REQUIRE(std::system(cmd.c_str()) == 0);
  std::ifstream in(dir / "training_log.csv");
  std::string line, last;
  while (std::getline(in, line)) last = line;
  const double distance = std::stod(last.substr(last.rfind(',') + 1));
  MESSAGE("final oracle distance " << distance);
  CHECK(distance < 0.05);
}
