#include <benchmark/benchmark.h>

#include <random>

#include "interleave/experiments.hpp"
#include "interleave/fitting.hpp"
#include "interleave/flat_agent.hpp"
#include "interleave/io.hpp"
#include "interleave/kernels.hpp"

using namespace interleave;

namespace {

kernels::BellmanGraph random_graph(std::size_t nodes, std::size_t fanout) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::int64_t> pick(-1, static_cast<std::int64_t>(nodes) - 1);
  kernels::BellmanGraph g;
  for (std::size_t n = 0; n < nodes; ++n) {
    for (std::size_t e = 0; e < fanout; ++e) {
      g.reward.push_back(u(rng));
      g.discount.push_back(0.9 * u(rng));
      g.next.push_back(pick(rng));
    }
    g.offset.push_back(g.reward.size());
  }
  return g;
}

void BM_BellmanSweep(benchmark::State& state) {
  const bool parallel = state.range(0) != 0;
  const auto g = random_graph(static_cast<std::size_t>(state.range(1)), 4);
  std::vector<double> v(g.num_nodes(), 0.0), out(g.num_nodes());
  for (auto _ : state) {
    const double r = parallel ? kernels::bellman_sweep_parallel(g, v, out) : kernels::bellman_sweep_serial(g, v, out);
    benchmark::DoNotOptimize(r);
    v.swap(out);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * static_cast<std::int64_t>(g.num_edges()));
}
BENCHMARK(BM_BellmanSweep)->ArgsProduct({{0, 1}, {1 << 14, 1 << 18}})->ArgNames({"parallel", "nodes"});

void BM_ValueIteration(benchmark::State& state) {
  const Environment env(builtin_scenario("mini_three_task"));
  ValueIterationOptions o;
  o.parallel = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(value_iteration(env, 0.9, 0.99, o).value(env.reset(0)));
}
BENCHMARK(BM_ValueIteration)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_HrlRuns(benchmark::State& state) {
  const Environment env(builtin_scenario("comparison_ten_instance"));
  LearningConfig cfg;
  cfg.episodes = 100;
  for (auto _ : state) benchmark::DoNotOptimize(hrl_runs(env, cfg, 8, state.range(0) != 0));
}
BENCHMARK(BM_HrlRuns)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_FlatRuns(benchmark::State& state) {
  const Environment env(builtin_scenario("comparison_ten_instance"));
  LearningConfig cfg;
  cfg.episodes = 100;
  for (auto _ : state) benchmark::DoNotOptimize(flat_runs(env, cfg, 8, state.range(0) != 0));
}
BENCHMARK(BM_FlatRuns)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_EvaluateParams(benchmark::State& state) {
  const Scenario sc = builtin_scenario("study_six_instance");
  const auto participant = synthetic_participant(sc, [&] {
    std::mt19937_64 rng(3);
    return random_params(sc, rng);
  }(), 4, 0.15, 0.0, LearningConfig{}, 1);
  FitConfig cfg;
  cfg.parallel = state.range(0) != 0;
  std::mt19937_64 rng(5);
  const ParamSet p = random_params(sc, rng);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_params(p, participant.trials, sc, cfg, 100.0));
}
BENCHMARK(BM_EvaluateParams)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
