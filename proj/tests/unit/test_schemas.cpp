#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "cscg/error.hpp"
#include "cscg/schemas.hpp"
#include "cscg/world.hpp"

using namespace cscg;

namespace {

UngroundedSchema truth_schema(const RoomSpec& room, std::string name) {
  UngroundedSchema s = ungrounded(ground_truth_model(GridWorld(room)).model);
  s.name = std::move(name);
  return s;
}

}  // namespace

TEST(SchemaLibrary, RejectsDuplicatesAndActionMismatch) {
  SchemaLibrary lib;
  lib.add(truth_schema(builtin_room(RoomType::rectangle, SizeClass::small), "a"));
  EXPECT_THROW(lib.add(truth_schema(builtin_room(RoomType::torus, SizeClass::small), "a")), InvalidArgument);
  UngroundedSchema ego = ungrounded(ground_truth_model(GridWorld(builtin_room(RoomType::rectangle, SizeClass::small), true)).model);
  ego.name = "ego";
  EXPECT_THROW(lib.add(ego), InvalidArgument);
  EXPECT_EQ(lib.find("a"), std::optional<std::size_t>(0));
  EXPECT_FALSE(lib.find("b").has_value());
}

TEST(Decide, MarginRule) {
  const std::vector<std::size_t> steps{5, 10, 15, 20};
  // Schema 0 leads by 0.1 from step 10 on, but only 0.02 at step 5.
  const std::vector<std::vector<double>> nll{{1.0, 0.5, 0.4, 0.3}, {1.02, 0.6, 0.5, 0.4}};
  const MatchDecision d = decide(nll, steps, 0.05);
  EXPECT_EQ(d.winner, 0u);
  EXPECT_EQ(d.decision_step, std::optional<std::size_t>(10));
}

TEST(Decide, LeadMustHoldAtEveryLaterEvaluation) {
  const std::vector<std::size_t> steps{5, 10, 15, 20};
  // The early lead is lost at step 10 and regained from step 15.
  const std::vector<std::vector<double>> nll{{0.1, 0.48, 0.3, 0.3}, {0.5, 0.5, 0.42, 0.4}};
  EXPECT_EQ(decide(nll, steps, 0.05).decision_step, std::optional<std::size_t>(15));
  // A lead only at the last evaluation is not a decision.
  const std::vector<std::vector<double>> late{{0.5, 0.5, 0.5, 0.3}, {0.5, 0.5, 0.5, 0.4}};
  const std::vector<std::size_t> steps3{5, 10, 15, 20};
  EXPECT_FALSE(decide(late, steps3, 0.05).decision_step.has_value());
}

TEST(Decide, TiesAreReported) {
  const std::vector<std::size_t> steps{5, 10};
  const std::vector<std::vector<double>> nll{{0.3, 0.2}, {0.3, 0.2}, {0.9, 0.9}};
  const MatchDecision d = decide(nll, steps, 0.05);
  EXPECT_EQ(d.winner, 0u);
  EXPECT_EQ(d.tied, (std::vector<std::size_t>{1}));
  EXPECT_FALSE(d.decision_step.has_value());
}

TEST(Match, GroundTruthSchemaWinsOnPermutedRoom) {
  SchemaLibrary lib;
  for (RoomType t : kRoomTypes) lib.add(truth_schema(builtin_room(t, SizeClass::medium), std::string(to_string(t))));
  const RoomSpec room = builtin_room(RoomType::square_with_hole, SizeClass::medium);
  const GridWorld w(permute_observations(room, random_permutation(room.n_obs(), 4)));
  Rng rng(2);
  const Trajectory walk = w.random_walk(0, 150, rng);
  MatchOptions o;
  o.em.max_iters = 30;
  const MatchReport r = match(lib, walk, w.n_obs(), o);
  EXPECT_EQ(r.winner_name, "square_with_hole");
  EXPECT_EQ(r.steps.front(), 5u);
  EXPECT_EQ(r.steps.back(), 150u);
  EXPECT_EQ(r.nll.size(), lib.size());
  EXPECT_THROW(match(SchemaLibrary{}, walk, w.n_obs()), InvalidArgument);
}

TEST(Softmax, StableAndHandlesMinusInfinity) {
  const std::vector<double> x{1000.0, 1000.0, -INFINITY};
  const auto p = softmax(x);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[2], 0.0);
  const std::vector<double> none{-INFINITY, -INFINITY};
  EXPECT_DOUBLE_EQ(softmax(none)[0], 0.5);
  const std::vector<double> y{0.0, std::log(3.0)};
  EXPECT_NEAR(softmax(y)[1], 0.75, 1e-15);
  EXPECT_NEAR(softmax(y, 2.0)[1], std::sqrt(3.0) / (1.0 + std::sqrt(3.0)), 1e-15);
}

TEST(SlidingWindow, PositionsAndProbabilities) {
  SchemaLibrary lib;
  lib.add(truth_schema(digit_room(2), "2"));
  lib.add(truth_schema(digit_room(3), "3"));
  const GridWorld w(side_by_side({digit_room(2), digit_room(3)}));
  Rng rng(3);
  const Trajectory walk = w.random_walk(0, 400, rng);
  WindowOptions o;
  o.window = 100;
  o.stride = 50;
  o.em.max_iters = 20;
  const WindowReport r = sliding_window_match(lib, walk, w.n_obs(), o);
  EXPECT_EQ(r.positions, (std::vector<std::size_t>{99, 149, 199, 249, 299, 349, 399}));
  for (const auto& p : r.prob) EXPECT_NEAR(p[0] + p[1], 1.0, 1e-12);
  o.window = 401;
  EXPECT_THROW(sliding_window_match(lib, walk, w.n_obs(), o), InvalidArgument);
}

TEST(ExtractSchema, KeepsOnlyDecodedStates) {
  const GridWorld w(builtin_room(RoomType::rectangle, SizeClass::small));
  GroundedSchema gt = ground_truth_model(w).model;
  // Pad with two unused clones of symbol 0.
  std::vector<std::size_t> sizes = gt.clones.sizes();
  sizes[0] += 2;
  const CloneStructure padded = CloneStructure::from_sizes(sizes);
  const std::size_t n = padded.n_states();
  TransitionTensor t(gt.n_actions(), n);
  auto map = [&](std::size_t s) { return s < gt.clones.group_end(0) ? s : s + 2; };
  for (std::size_t a = 0; a < gt.n_actions(); ++a) {
    for (std::size_t j = 0; j < gt.n_states(); ++j) {
      for (std::size_t k = 0; k < gt.n_states(); ++k) t(a, map(j), map(k)) = gt.transitions(a, j, k);
    }
    for (std::size_t j = gt.clones.group_end(0); j < gt.clones.group_end(0) + 2; ++j) t(a, j, j) = 1.0;
  }
  GroundedSchema big{t, padded, EmissionMatrix::deterministic(padded), InitialDistribution::uniform(n), "big"};
  Rng rng(5);
  const Trajectory walk = w.random_walk(0, 2000, rng);
  const UngroundedSchema s = extract_schema(big, std::span<const Trajectory>(&walk, 1), 0.0, "x");
  EXPECT_EQ(s.n_states(), gt.n_states());
  EXPECT_EQ(s.name, "x");
  EXPECT_TRUE(validate(s.transitions).empty());
}

TEST(LearnRoomSchema, FitsASmallRoom) {
  const GridWorld w(builtin_room(RoomType::u_shape, SizeClass::small));
  RoomSchemaOptions o;
  o.walk_length = 4000;
  o.em.max_iters = 60;
  std::vector<double> trace;
  const UngroundedSchema s = learn_room_schema(w, "u", 1, o, &trace);
  EXPECT_EQ(s.name, "u");
  ASSERT_TRUE(s.clones.has_value());
  EXPECT_LE(s.n_states(), w.n_states());
  EXPECT_LT(trace.back(), 0.2 * trace.front());
  EXPECT_EQ(learn_room_schema(w, "u", 1, o), s);
}
