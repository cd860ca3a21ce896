#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "cscg/error.hpp"
#include "cscg/learning.hpp"
#include "cscg/world.hpp"
#include "support/oracles.hpp"

using namespace cscg;

namespace {

void expect_non_increasing(const std::vector<double>& trace, double tol) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    EXPECT_LE(trace[i], trace[i - 1] + tol) << "iteration " << i;
  }
}

GridWorld small_room() { return GridWorld(builtin_room(RoomType::rectangle, SizeClass::small)); }

}  // namespace

TEST(LearnTransitions, MonotoneWithoutPseudocount) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const GroundedSchema truth = oracle::random_model(6, 2, 3, true, rng);
    const Trajectory t = oracle::sample(truth, 200, rng);
    EmOptions o;
    o.pseudocount = 0.0;
    o.max_iters = 30;
    o.seed = static_cast<std::uint64_t>(trial);
    const auto r = learn_transitions(t, truth.clones, 2, o);
    expect_non_increasing(r.nll_trace, 1e-9);
    EXPECT_TRUE(validate(r.model).empty());
  }
}

TEST(LearnTransitions, ReturnsBestIterate) {
  const GridWorld w = small_room();
  Rng rng(3);
  const Trajectory t = w.random_walk(0, 2000, rng);
  const GroundTruth gt = ground_truth_model(w);
  EmOptions o;
  o.max_iters = 40;
  const auto r = learn_transitions(t, gt.model.clones, w.n_actions(), o);
  const double best = *std::min_element(r.nll_trace.begin(), r.nll_trace.end());
  EXPECT_NEAR(nll(r.model, t, true), best, 1e-9);
  EXPECT_LT(best, r.nll_trace.front());
}

TEST(LearnTransitions, ClonePathMatchesDensePath) {
  const GridWorld w = small_room();
  Rng rng(9);
  const Trajectory t = w.random_walk(0, 300, rng);
  const CloneStructure c = ground_truth_model(w).model.clones;
  EmOptions o;
  o.max_iters = 5;
  const auto a = learn_transitions(t, c, 4, o, true);
  const auto b = learn_transitions(t, c, 4, o, false);
  ASSERT_EQ(a.nll_trace.size(), b.nll_trace.size());
  for (std::size_t i = 0; i < a.nll_trace.size(); ++i) EXPECT_NEAR(a.nll_trace[i], b.nll_trace[i], 1e-9);
}

TEST(LearnTransitions, WorkerCountDoesNotChangeResult) {
  const GridWorld w = small_room();
  std::vector<Trajectory> walks;
  for (std::uint64_t s = 0; s < 4; ++s) {
    Rng rng(s);
    walks.push_back(w.random_walk(s, 200, rng));
  }
  const CloneStructure c = ground_truth_model(w).model.clones;
  EmOptions o;
  o.max_iters = 5;
  const auto one = learn_transitions(walks, c, 4, o);
  o.workers = 3;
  const auto three = learn_transitions(walks, c, 4, o);
  EXPECT_EQ(one.model, three.model);
  EXPECT_EQ(one.nll_trace, three.nll_trace);
}

TEST(LearnTransitions, RejectsBadOptions) {
  EmOptions o;
  o.max_iters = 0;
  EXPECT_THROW(check_options(o), InvalidArgument);
  o.max_iters = 1;
  o.pseudocount = -1.0;
  EXPECT_THROW(check_options(o), InvalidArgument);
}

TEST(LearnEmissions, MonotoneWithoutPseudocount) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    const GroundedSchema truth = oracle::random_model(5, 2, 3, false, rng, 0.4);
    const Trajectory t = oracle::sample(truth, 150, rng);
    EmOptions o;
    o.pseudocount = 0.0;
    o.max_iters = 40;
    const auto r = learn_emissions(ungrounded(truth, false), t, 3, false, o);
    expect_non_increasing(r.nll_trace, 1e-9);
  }
}

TEST(LearnEmissions, RecoversPermutedObservations) {
  const RoomSpec room = builtin_room(RoomType::square_with_hole, SizeClass::small);
  const GridWorld train(room);
  const UngroundedSchema schema = ungrounded(ground_truth_model(train).model);
  const auto perm = random_permutation(room.n_obs(), 5);
  const GridWorld test(permute_observations(room, perm));
  Rng rng(6);
  const Trajectory t = test.random_walk(0, 1500, rng);
  const auto r = learn_emissions(schema, t, test.n_obs(), true, EmOptions::matching());
  const auto obs = r.emissions.argmax_observations();
  const CloneStructure& c = *schema.clones;
  for (std::size_t s = 0; s < schema.n_states(); ++s) EXPECT_EQ(obs[s], perm[c.group_of(s)]);
  EXPECT_LT(r.nll, 0.05);
}

TEST(LearnEmissions, TiedRowsAreIdentical) {
  const GridWorld w = small_room();
  const UngroundedSchema schema = ungrounded(ground_truth_model(w).model);
  Rng rng(2);
  const Trajectory t = w.random_walk(0, 100, rng);
  EmOptions o = EmOptions::matching();
  o.max_iters = 10;
  const auto r = learn_emissions(schema, t, w.n_obs(), true, o);
  EXPECT_TRUE(r.emissions.respects(*schema.clones));
}

TEST(PoolPosteriors, AveragesWithinGroupsAndKeepsMass) {
  const auto c = CloneStructure::from_sizes(std::vector<std::size_t>{2, 1, 2});
  std::vector<double> g{0.1, 0.3, 0.2, 0.4, 0.0};
  pool_posteriors(g, c);
  EXPECT_DOUBLE_EQ(g[0], 0.2);
  EXPECT_DOUBLE_EQ(g[1], 0.2);
  EXPECT_DOUBLE_EQ(g[2], 0.2);
  EXPECT_DOUBLE_EQ(g[3], 0.2);
  EXPECT_NEAR(std::accumulate(g.begin(), g.end(), 0.0), 1.0, 1e-15);
}

TEST(ViterbiRefine, NeverWorseThanInput) {
  const GridWorld w = small_room();
  Rng rng(1);
  const Trajectory t = w.random_walk(0, 1000, rng);
  const CloneStructure c = ground_truth_model(w).model.clones;
  EmOptions o;
  o.max_iters = 10;
  const auto soft = learn_transitions(t, c, 4, o);
  const auto v = viterbi_refine(soft.model, t, 2e-3);
  EXPECT_LE(nll(v.model, t, true), nll(soft.model, t, true) + 1e-6);
  EXPECT_TRUE(validate(v.model).empty());
}

TEST(ViterbiRefine, RecoversGroundTruthGraph) {
  const GridWorld w = small_room();
  Rng rng(1);
  const Trajectory t = w.random_walk(0, 1000, rng);
  const GroundedSchema gt = ground_truth_model(w).model;
  const auto v = viterbi_refine(gt, t, 0.0);
  EXPECT_NEAR(nll(v.model, t, true), nll(gt, t, true), 1e-6);
}

TEST(RefineTransitions, MonotoneWithSoftEmissions) {
  std::mt19937_64 rng(30);
  const GroundedSchema truth = oracle::random_model(4, 2, 2, false, rng);
  std::vector<Trajectory> walks{oracle::sample(truth, 100, rng), oracle::sample(truth, 80, rng)};
  EmOptions o;
  o.pseudocount = 0.0;
  o.max_iters = 25;
  const std::vector<EmissionMatrix> e{truth.emissions};
  const std::vector<std::vector<double>> pi{truth.initial.probs};
  const auto fit = refine_transitions(TransitionTensor::random(2, 4, 1), walks, e, pi, o);
  expect_non_increasing(fit.nll_trace, 1e-9);
  EXPECT_TRUE(validate(fit.transitions).empty());
}
