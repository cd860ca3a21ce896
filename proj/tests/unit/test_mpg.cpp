#include <gtest/gtest.h>

#include <set>

#include "cscg/error.hpp"
#include "cscg/mpg.hpp"
#include "support/oracles.hpp"

using namespace cscg;

TEST(MpgGame, CollectOnGoalPaysAndTeleports) {
  MpgGame g(MpgSpec{}, 3);
  std::set<std::size_t> symbols;
  for (std::size_t s = 0; s < g.grid().n_states(); ++s) symbols.insert(g.grid().observe(s));
  EXPECT_EQ(symbols.size(), 16u);
  EXPECT_NE(g.cell(), g.goal_cell());

  // Walk to the goal along a BFS path, then collect.
  const auto dist = oracle::bfs(g.grid(), g.goal_cell());
  while (g.cell() != g.goal_cell()) {
    for (std::size_t a = 0; a < 4; ++a) {
      if (dist[g.grid().step(g.cell(), a)] + 1 == dist[g.cell()]) {
        EXPECT_EQ(g.step(a).reward, 0.0);
        break;
      }
    }
  }
  const std::size_t old_goal = g.goal_cell();
  const auto out = g.step(kCollect);
  EXPECT_EQ(out.reward, 1.0);
  EXPECT_TRUE(out.teleported);
  EXPECT_NE(g.cell(), old_goal);
  EXPECT_NE(g.cell(), g.goal_cell());
}

TEST(MpgGame, CollectElsewhereDoesNothingAndEpisodeEnds) {
  MpgGame g(MpgSpec{4, 3}, 1);
  const std::size_t cell = g.cell();
  const auto out = g.step(kCollect);
  EXPECT_EQ(out.reward, 0.0);
  EXPECT_EQ(g.cell(), cell);
  g.step(0);
  g.step(0);
  EXPECT_TRUE(g.done());
  EXPECT_THROW(g.step(0), InvalidArgument);
  MpgGame h(MpgSpec{}, 1);
  EXPECT_THROW(h.step(5), InvalidArgument);
}

TEST(MpgGame, GridIsATorus) {
  std::vector<std::size_t> perm(16);
  for (std::size_t i = 0; i < 16; ++i) perm[i] = i;
  const GridWorld w = mpg_grid(MpgSpec{}, perm);
  for (std::size_t s = 0; s < 16; ++s) {
    std::set<std::size_t> next;
    for (std::size_t a = 0; a < 4; ++a) next.insert(w.step(s, a));
    EXPECT_EQ(next.size(), 4u);
  }
}

TEST(MpgData, RandomEpisodeSegmentsSplitAtTeleports) {
  const MpgEpisodeData d = random_mpg_episode(MpgSpec{}, 5);
  std::size_t obs = 0;
  for (const auto& s : d.segments) obs += s.size();
  EXPECT_GE(obs, 100u);
  EXPECT_EQ(d.segments.size(), static_cast<std::size_t>(d.reward) + 1);
  for (const auto& s : d.segments) {
    for (std::size_t a : s.actions) EXPECT_LT(a, 4u);
  }
}

TEST(MatchesGrid, GroundTruthYesSmallerTorusNo) {
  std::vector<std::size_t> perm(16);
  for (std::size_t i = 0; i < 16; ++i) perm[i] = i;
  const TransitionTensor t = ground_truth_model(mpg_grid(MpgSpec{}, perm)).model.transitions;
  EXPECT_TRUE(matches_grid(t, MpgSpec{}));
  TransitionTensor broken = t;
  for (std::size_t k = 0; k < 16; ++k) broken(0, 3, k) = k == 3 ? 1.0 : 0.0;
  EXPECT_FALSE(matches_grid(broken, MpgSpec{}));
}

TEST(Mpg, LearnsGridAndPlaysWell) {
  MpgLearnOptions lo;
  lo.episodes = 10;
  const MpgSchemaResult learned = learn_mpg_schema(MpgSpec{}, 1, lo);
  ASSERT_EQ(learned.snapshots.size(), 10u);
  EXPECT_TRUE(matches_grid(learned.schema.transitions, MpgSpec{}));
  std::vector<MpgEpisodeResult> eps;
  for (std::uint64_t e = 0; e < 5; ++e) eps.push_back(play_mpg_episode(learned.schema, MpgSpec{}, 100 + e));
  const MpgSummary s = summarize(eps);
  EXPECT_EQ(s.episodes, 5u);
  EXPECT_GT(s.mean_reward, 20.0);
  EXPECT_GT(s.optimal_fraction, 0.9);
}

TEST(MpgSummary, Statistics) {
  std::vector<MpgEpisodeResult> eps(2);
  eps[0].reward = 2.0;
  eps[0].tasks = {{18, 3, true}, {2, 2, true}, {5, 3, true}};
  eps[1].reward = 4.0;
  eps[1].tasks = {{16, 1, true}, {1, 1, true}, {4, 4, false}};
  const MpgSummary s = summarize(eps);
  EXPECT_DOUBLE_EQ(s.mean_reward, 3.0);
  EXPECT_DOUBLE_EQ(s.sem_reward, 1.0);
  EXPECT_DOUBLE_EQ(s.mean_first_task_steps, 17.0);
  EXPECT_EQ(s.later_tasks, 3u);
  EXPECT_NEAR(s.optimal_fraction, 2.0 / 3.0, 1e-15);
}
