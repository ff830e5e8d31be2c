// Wall-clock comparison of the OpenMP kernels against their serial references.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>

#include <omp.h>

#include "jamrl/simharness.hpp"

using namespace jamrl;

namespace {

template <typename F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void row(const char* name, double serial, double parallel, bool identical) {
  std::printf("%-22s %10.4f %10.4f %8.2fx  %s\n", name, serial, parallel, serial / parallel,
              identical ? "identical" : "DIFFERENT");
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::stoi(argv[1]) : 3;
  std::printf("threads: %d, best of %d\n", omp_get_max_threads(), reps);
  std::printf("%-22s %10s %10s %9s\n", "kernel", "serial s", "omp s", "speedup");

  const EnvConfig cfg;
  {
    std::optional<ValueIterationResult> s, p;
    const double ts = best_of(reps, [&] { s = value_iteration_serial(cfg); });
    const double tp = best_of(reps, [&] { p = value_iteration(cfg); });
    row("value_iteration", ts, tp, std::ranges::equal(s->q.raw(), p->q.raw()));
  }
  {
    const Policy pol = value_iteration(cfg).policy;
    const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    Metrics s, p;
    const double ts = best_of(reps, [&] { s = evaluate_policy_serial(cfg, pol, 100'000, seeds); });
    const double tp = best_of(reps, [&] { p = evaluate_policy(cfg, pol, 100'000, seeds); });
    row("evaluate_policy", ts, tp, s.avg_throughput == p.avg_throughput && s.throughput_ci == p.throughput_ci);
  }
  {
    SweepSpec spec = jamming_sweep(cfg);
    spec.horizon = 20'000;
    SweepResult s, p;
    const double ts = best_of(reps, [&] { s = run_sweep_serial(spec); });
    const double tp = best_of(reps, [&] { p = run_sweep(spec); });
    std::ostringstream a, b;
    write_sweep_csv(a, s);
    write_sweep_csv(b, p);
    row("run_sweep", ts, tp, a.str() == b.str());
  }
  return 0;
}
