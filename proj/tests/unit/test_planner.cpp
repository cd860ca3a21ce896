#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cscg/error.hpp"
#include "cscg/exploration.hpp"
#include "cscg/planner.hpp"
#include "support/oracles.hpp"

using namespace cscg;

namespace {

struct BestPath {
  double prob = 0.0;
  std::vector<std::size_t> actions;
};

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(a, b); }

// Depth-first enumeration of every state path that first enters the goal
// within `horizon` steps; keeps the most probable, then shortest, then
// lexicographically smallest action sequence.
void search(const TransitionTensor& t, const std::vector<bool>& goal, std::size_t s, double p,
            std::vector<std::size_t>& acts, std::size_t horizon, BestPath& best) {
  if (goal[s]) {
    const bool better =
        best.prob == 0.0 || (p > best.prob && !close(p, best.prob)) ||
        (close(p, best.prob) && (acts.size() < best.actions.size() ||
                                 (acts.size() == best.actions.size() && acts < best.actions)));
    if (better) best = {p, acts};
    return;
  }
  if (acts.size() == horizon) return;
  for (std::size_t a = 0; a < t.n_actions(); ++a) {
    for (std::size_t k = 0; k < t.n_states(); ++k) {
      if (t(a, s, k) <= 0.0) continue;
      acts.push_back(a);
      search(t, goal, k, p * t(a, s, k), acts, horizon, best);
      acts.pop_back();
    }
  }
}

}  // namespace

TEST(SmoothDiagonal, AddsScaledMaximumThenRenormalizes) {
  TransitionTensor t(1, 2, {0.0, 1.0, 0.5, 0.5});
  const TransitionTensor s = smooth_diagonal(t, 0.2);
  EXPECT_NEAR(s(0, 0, 0), 0.2 / 1.2, 1e-15);
  EXPECT_NEAR(s(0, 0, 1), 1.0 / 1.2, 1e-15);
  EXPECT_NEAR(s(0, 1, 1), 0.7 / 1.2, 1e-15);
  EXPECT_EQ(smooth_diagonal(t, 0.0), t);
  EXPECT_THROW(smooth_diagonal(t, -0.1), InvalidArgument);
}

TEST(Plan, MatchesExhaustiveSearch) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    const GroundedSchema m = oracle::random_model(4, 2, 2, false, rng, 0.6);
    const std::size_t start = trial % 4;
    const std::size_t g = (trial / 4) % 4;
    std::vector<bool> goal(4, false);
    goal[g] = true;
    PlanOptions o;
    o.theta = 0.0;
    o.horizon = 5;
    BestPath best;
    std::vector<std::size_t> acts;
    search(m.transitions, goal, start, 1.0, acts, o.horizon, best);
    if (best.prob == 0.0) {
      EXPECT_THROW(plan(m.transitions, start, Goal::at({g}), o), NoPathError);
      continue;
    }
    const PlanResult r = plan(m.transitions, start, Goal::at({g}), o);
    EXPECT_NEAR(r.success_probability, best.prob, 1e-12);
    EXPECT_EQ(r.actions, best.actions) << "trial " << trial;
    EXPECT_EQ(r.states.size(), r.actions.size() + 1);
    EXPECT_EQ(r.states.back(), g);
  }
}

TEST(Plan, ThresholdRejectsUnlikelyPaths) {
  TransitionTensor t(1, 2, {0.4, 0.6, 0.0, 1.0});
  PlanOptions o;
  o.theta = 0.7;
  EXPECT_THROW(plan(t, 0, Goal::at({1}), o), NoPathError);
  o.theta = 0.5;
  EXPECT_EQ(plan(t, 0, Goal::at({1}), o).actions.size(), 1u);
  EXPECT_TRUE(plan(t, 1, Goal::at({1}), o).actions.empty());
}

TEST(Plan, ShortestPathOnGroundTruthRoom) {
  const GridWorld w(builtin_room(RoomType::square_with_hole, SizeClass::small));
  const GroundTruth gt = ground_truth_model(w);
  for (std::size_t from = 0; from < w.n_states(); from += 5) {
    const auto d = oracle::bfs(w, from);
    for (std::size_t to = 0; to < w.n_states(); to += 3) {
      const PlanResult r = plan(gt.model.transitions, gt.model_of_world[from],
                                Goal::at({gt.model_of_world[to]}), {.theta = 0.0});
      EXPECT_EQ(r.actions.size(), d[to]);
      std::size_t s = from;
      for (std::size_t a : r.actions) s = w.step(s, a);
      EXPECT_EQ(s, to);
    }
  }
}

TEST(Goal, SymbolCollectsStatesByArgmax) {
  const EmissionMatrix e(3, 2, {0.9, 0.1, 0.2, 0.8, 0.6, 0.4});
  EXPECT_EQ(Goal::symbol(e, 0).states, (std::vector<std::size_t>{0, 2}));
  EXPECT_TRUE(Goal::symbol(e, 1).contains(1));
}

TEST(Localize, FindsStateOnGroundTruthModel) {
  const GridWorld w(builtin_room(RoomType::u_shape, SizeClass::small));
  const GroundTruth gt = ground_truth_model(w);
  std::vector<std::size_t> states;
  Rng rng(5);
  const Trajectory t = w.random_walk(4, 200, rng, &states);
  const Belief b = localize(gt.model, t);
  EXPECT_EQ(gt.world_of_model[b.map_state], states.back());
  EXPECT_NEAR(b.posterior[b.map_state], 1.0, 1e-9);
  EXPECT_NEAR(b.entropy(), 0.0, 1e-6);
  EXPECT_EQ(b.path.size(), t.size());
}

TEST(Navigate, MatchedRoomReachesGoalOptimally) {
  const GridWorld w(builtin_room(RoomType::rectangle, SizeClass::medium));
  const UngroundedSchema schema = ungrounded(ground_truth_model(w).model);
  std::vector<std::size_t> states;
  const Trajectory walk = explore(w, 0, 6 * w.n_states(), PolicyKind::edge_coverage, 3, &states);
  NavigateOptions o;
  o.plan.theta = 0.0;
  const EpisodeLog log = navigate(schema, w, walk, states.back(), 0, 0, o);
  EXPECT_TRUE(log.success);
  EXPECT_TRUE(log.believed_goal);
  EXPECT_EQ(log.replans, 0u);
  EXPECT_EQ(log.steps.size(), oracle::bfs(w, states.back())[0]);
  EXPECT_EQ(log.final_distance, 0u);
}

TEST(Navigate, IsSeeded) {
  const GridWorld w(grown_room(RoomType::rectangle, 2));
  const UngroundedSchema schema = ungrounded(ground_truth_model(GridWorld(builtin_room(RoomType::rectangle, SizeClass::medium))).model);
  std::vector<std::size_t> states;
  const Trajectory walk = explore(w, 0, 200, PolicyKind::repeat3, 4, &states);
  NavigateOptions o;
  o.plan.theta = 0.0;
  o.seed = 11;
  const EpisodeLog a = navigate(schema, w, walk, states.back(), 0, 0, o);
  const EpisodeLog b = navigate(schema, w, walk, states.back(), 0, 0, o);
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) EXPECT_EQ(a.steps[i].action, b.steps[i].action);
  EXPECT_LE(a.steps.size(), o.step_budget);
}
