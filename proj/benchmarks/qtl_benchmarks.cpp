#include <benchmark/benchmark.h>

#include "qtl/birth_death.hpp"
#include "qtl/mdp.hpp"
#include "qtl/policy_families.hpp"
#include "qtl/scaling.hpp"
#include "qtl/sim.hpp"

namespace {

using namespace qtl;

const RateFunction& square_cost() {
  static const auto f = RateFunction::power(Role::cost, {0.0, 1.0}, 2.0);
  return f;
}
const RateFunction& linear_utility() {
  static const auto f = RateFunction::power(Role::utility, {0.0, 1.0}, 1.0);
  return f;
}
const RateFunction& sampled_cost() {
  static const auto f = [] {
    std::vector<RatePoint> pts;
    for (double r : {0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0}) pts.push_back({r, r * r});
    return RateFunction::discrete(Role::cost, pts);
  }();
  return f;
}

// Stationary distribution of a near-critical chain; the range sets how many states the tail needs.
void BM_Stationary(benchmark::State& state) {
  const double rho = 1.0 - 1.0 / static_cast<double>(state.range(0));
  const Policy p(RateSchedule({}, rho), RateSchedule({{1, 10, 0.5}}, 1.0));
  for (auto _ : state) benchmark::DoNotOptimize(stationary(p).pi.size());
}
BENCHMARK(BM_Stationary)->RangeMultiplier(10)->Range(10, 10000);

void BM_Metrics(benchmark::State& state) {
  const Policy p = mc23_policy(0.4, 0.1, 1.0 / static_cast<double>(state.range(0)), 0.5);
  for (auto _ : state) {
    const auto sr = stationary(p);
    benchmark::DoNotOptimize(metrics(p, sr, square_cost(), linear_utility()).Qbar);
  }
}
BENCHMARK(BM_Metrics)->RangeMultiplier(8)->Range(16, 16384);

void BM_Solve(benchmark::State& state) {
  LagrangianProblem lp(sampled_cost(), linear_utility());
  lp.service_actions = {0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0};
  lp.arrival_actions = {0.4};
  lp.state_cap = static_cast<QueueLength>(state.range(0));
  lp.beta1 = 100.0;
  for (auto _ : state) benchmark::DoNotOptimize(solve(lp).gain);
}
BENCHMARK(BM_Solve)->Arg(400)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_Sweep(benchmark::State& state) {
  FamilySpec f;
  f.kind = FamilyKind::mc1;
  f.lambda = 0.5;
  f.K = 0.5;
  const auto grid = dyadic_grid(4, 14);
  for (auto _ : state) benchmark::DoNotOptimize(sweep(f, square_cost(), linear_utility(), grid).samples.size());
}
BENCHMARK(BM_Sweep)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
  const Policy p(RateSchedule({}, 0.4), RateSchedule({}, 1.0));
  SimConfig cfg;
  cfg.horizon = static_cast<double>(state.range(0));
  cfg.replications = 1;
  std::uint64_t events = 0;
  for (auto _ : state) events += simulate(p, cfg, square_cost(), linear_utility()).events;
  state.counters["events/s"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Simulate)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
