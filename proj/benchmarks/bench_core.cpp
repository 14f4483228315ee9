#include <benchmark/benchmark.h>

#include "fixtures.hpp"
#include "wxflow/grafting.hpp"
#include "wxflow/hierarchy.hpp"

using namespace wxflow;
using namespace wxflow::fixtures;

namespace {

void BM_ExactMaxFlow(benchmark::State& state) {
  Rng rng(1);
  CapGraph g = random_connected(int(state.range(0)), 3 * int(state.range(0)),
                                8, rng);
  FlowNet net = scale_graph(g, 1.0);
  FlowProblem prob;
  prob.net = &net;
  prob.source.assign(g.n(), 0.0);
  prob.sink.assign(g.n(), 0.0);
  prob.source[0] = double(g.degree(0));
  prob.sink[g.n() - 1] = double(g.degree(g.n() - 1));
  for (auto _ : state) benchmark::DoNotOptimize(exact_max_flow(prob).value);
}
BENCHMARK(BM_ExactMaxFlow)->Arg(32)->Arg(64)->Arg(128);

void BM_ProgressSet(benchmark::State& state) {
  Rng rng(2);
  WeightedMultiset x;
  for (int i = 0; i < state.range(0); ++i)
    x.push_back({rng.next_double() * 2000 - 1000, 1 + Cap(rng.next_below(4))});
  for (auto _ : state) benchmark::DoNotOptimize(brute_progress_set(x).ok);
}
BENCHMARK(BM_ProgressSet)->Arg(16)->Arg(64);

void BM_WeakDecomposition(benchmark::State& state) {
  CapGraph g = barbell(int(state.range(0)));
  Weighting d = g.degrees();
  for (auto _ : state) {
    CutMatchingConfig cfg;
    cfg.phi = 0.4;
    cfg.seed = 7;
    benchmark::DoNotOptimize(
        run_decomposition(g, d, cfg, exact_matching_oracle).cut_capacity);
  }
}
BENCHMARK(BM_WeakDecomposition)->Arg(6)->Arg(12)->Arg(20);

void BM_HierarchyBuild(benchmark::State& state) {
  Rng rng(3);
  CapGraph g = random_connected(int(state.range(0)), 2 * int(state.range(0)),
                                8, rng);
  for (auto _ : state) {
    HierarchyConfig hc;
    hc.seed = 11;
    benchmark::DoNotOptimize(build_hierarchy(g, hc).quality());
  }
}
BENCHMARK(BM_HierarchyBuild)->Arg(24)->Arg(48);

void BM_RouteFull(benchmark::State& state) {
  Rng rng(4);
  CapGraph g = random_connected(int(state.range(0)), 2 * int(state.range(0)),
                                4, rng);
  HierarchyConfig hc;
  hc.seed = 13;
  Hierarchy h = build_hierarchy(g, hc);
  Demand b(g.n(), 0.0);
  for (double& x : b) x = rng.next_gaussian();
  double mean = 0;
  for (double x : b) mean += x;
  for (double& x : b) x -= mean / g.n();
  double est = h.estimate_congestion(b);
  for (double& x : b) x /= est;
  for (auto _ : state)
    benchmark::DoNotOptimize(h.route_full(b).congestion);
}
BENCHMARK(BM_RouteFull)->Arg(24)->Arg(48);

}  // namespace

BENCHMARK_MAIN();
