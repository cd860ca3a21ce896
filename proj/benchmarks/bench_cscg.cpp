#include <benchmark/benchmark.h>

#include "cscg/inference.hpp"
#include "cscg/learning.hpp"
#include "cscg/planner.hpp"
#include "cscg/rooms.hpp"
#include "cscg/world.hpp"

using namespace cscg;

namespace {

GridWorld room(std::size_t grow) {
  return GridWorld(grown_room(RoomType::rectangle, grow));
}

Trajectory walk(const GridWorld& w, std::size_t n) {
  Rng rng(1);
  return w.random_walk(0, n, rng);
}

void BM_ForwardBackwardCloneSparse(benchmark::State& state) {
  const GridWorld w = room(static_cast<std::size_t>(state.range(0)));
  const GroundedSchema m = ground_truth_model(w).model;
  const Trajectory t = walk(w, 5000);
  for (auto _ : state) benchmark::DoNotOptimize(nll(m, t, true));
  state.counters["states"] = static_cast<double>(m.n_states());
}
BENCHMARK(BM_ForwardBackwardCloneSparse)->Arg(0)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ForwardBackwardDense(benchmark::State& state) {
  const GridWorld w = room(static_cast<std::size_t>(state.range(0)));
  const GroundedSchema m = ground_truth_model(w).model;
  const Trajectory t = walk(w, 5000);
  for (auto _ : state) benchmark::DoNotOptimize(nll(m, t, false));
  state.counters["states"] = static_cast<double>(m.n_states());
}
BENCHMARK(BM_ForwardBackwardDense)->Arg(0)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_TransitionEmStep(benchmark::State& state) {
  const GridWorld w = room(0);
  const GroundedSchema truth = ground_truth_model(w).model;
  const Trajectory t = walk(w, 5000);
  EmOptions o;
  o.max_iters = 1;
  for (auto _ : state) benchmark::DoNotOptimize(learn_transitions(t, truth.clones, w.n_actions(), o));
}
BENCHMARK(BM_TransitionEmStep)->Unit(benchmark::kMillisecond);

void BM_EmissionEmStep(benchmark::State& state) {
  const GridWorld w = room(0);
  const UngroundedSchema schema = ungrounded(ground_truth_model(w).model);
  const Trajectory t = walk(w, 1000);
  EmOptions o = EmOptions::matching();
  o.max_iters = 1;
  for (auto _ : state) benchmark::DoNotOptimize(learn_emissions(schema, t, w.n_obs(), true, o));
}
BENCHMARK(BM_EmissionEmStep)->Unit(benchmark::kMillisecond);

void BM_Plan(benchmark::State& state) {
  const GridWorld w = room(static_cast<std::size_t>(state.range(0)));
  const GroundedSchema m = ground_truth_model(w).model;
  const TransitionTensor smoothed = smooth_diagonal(m.transitions, 0.2);
  const Goal goal = Goal::at({m.n_states() - 1});
  PlanOptions opts;
  opts.theta = 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(plan(smoothed, 0, goal, opts));
}
BENCHMARK(BM_Plan)->Arg(0)->Arg(4)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
