#include <benchmark/benchmark.h>

#include "rdmdp/bench.hpp"
#include "rdmdp/finite_mdp.hpp"
#include "rdmdp/oracle.hpp"

using namespace rdmdp;

namespace {

struct ViFixture {
  oracle::AugmentedFiniteMDP aug;
  Policy pi;
};

// Random 4-state MDP under uniform delays (K = 5): a few thousand augmented states.
const ViFixture& fixture() {
  static const ViFixture f = [] {
    Rng rng(1);
    oracle::AugmentedFiniteMDP aug(random_finite_mdp(4, 2, rng), DelayProcess::uniform(0, 2, 0),
                                   DelayProcess::uniform(1, 3, 1));
    Policy pi{oracle::random_tabular_policy(aug, rng, false), "pi"};
    return ViFixture{std::move(aug), std::move(pi)};
  }();
  return f;
}

void BM_SoftValueIterationParallel(benchmark::State& state) {
  const ViFixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(oracle::soft_value_iteration(f.aug, f.pi, 0.9, 1.0, 1e-10).v);
  state.counters["states"] = f.aug.num_states();
}

void BM_SoftValueIterationSerial(benchmark::State& state) {
  const ViFixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(oracle::value_iteration_serial(f.aug, f.pi, 0.9, 1.0, 1e-10).v);
  state.counters["states"] = f.aug.num_states();
}

RunConfig tiny_matrix() {
  return parse_config_string(
      "[env]\nid = chain\nhorizon = 20\n[agent]\nhidden = 16\nbatch_size = 16\nwarmup = 100\n"
      "[run]\nsteps = 400\neval_every = 200\neval_episodes = 2\n"
      "[bench]\nagents = dcac sac\ndelays = 0:1 1:2\nseeds = 2\nwindow = 1\n");
}

void BM_BenchSuiteParallel(benchmark::State& state) {
  const RunConfig c = tiny_matrix();
  for (auto _ : state) benchmark::DoNotOptimize(run_benchmark_suite(c, nullptr, "", true));
}

void BM_BenchSuiteSerial(benchmark::State& state) {
  const RunConfig c = tiny_matrix();
  for (auto _ : state) benchmark::DoNotOptimize(run_benchmark_suite(c, nullptr, "", false));
}

}  // namespace

BENCHMARK(BM_SoftValueIterationParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SoftValueIterationSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BenchSuiteParallel)->Unit(benchmark::kMillisecond)->Iterations(1);
BENCHMARK(BM_BenchSuiteSerial)->Unit(benchmark::kMillisecond)->Iterations(1);

BENCHMARK_MAIN();
