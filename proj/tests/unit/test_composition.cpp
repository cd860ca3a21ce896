#include <gtest/gtest.h>

#include <sstream>

#include "cscg/composition.hpp"
#include "cscg/error.hpp"
#include "cscg/inference.hpp"
#include "cscg/world.hpp"

using namespace cscg;

namespace {

UngroundedSchema tiny(std::size_t n, std::string name) {
  return {TransitionTensor::uniform(2, n), CloneStructure::uniform(n, 1), std::move(name)};
}

}  // namespace

TEST(BuildPrior, ExitRowsPointUniformlyAtOtherEntries) {
  const std::vector<UngroundedSchema> s{tiny(2, "a"), tiny(3, "b"), tiny(2, "c")};
  const std::vector<FrontierSpec> f{
      {{{1, 0}}, {0}},
      {{{0, 1}}, {2}},
      {{}, {0, 1}},
  };
  const UngroundedSchema p = build_prior(s, f);
  ASSERT_EQ(p.n_states(), 7u);
  EXPECT_EQ(p.name, "a+b+c");
  // Exit (1, 0) of a: uniform over the entries of b (state 2+2) and c (5, 6).
  for (std::size_t k = 0; k < 7; ++k) {
    const double expected = (k == 4 || k == 5 || k == 6) ? 1.0 / 3.0 : 0.0;
    EXPECT_DOUBLE_EQ(p.transitions(0, 1, k), expected) << k;
  }
  // Exit (0, 1) of b is global state 2; entries elsewhere: 0, 5, 6.
  for (std::size_t k = 0; k < 7; ++k) {
    const double expected = (k == 0 || k == 5 || k == 6) ? 1.0 / 3.0 : 0.0;
    EXPECT_DOUBLE_EQ(p.transitions(1, 2, k), expected) << k;
  }
  // Non-exit rows keep their block.
  EXPECT_DOUBLE_EQ(p.transitions(1, 0, 1), 0.5);
  EXPECT_DOUBLE_EQ(p.transitions(1, 0, 2), 0.0);
  EXPECT_TRUE(validate(p.transitions).empty());
  ASSERT_TRUE(p.clones.has_value());
  EXPECT_EQ(p.clones->n_groups(), 7u);
}

TEST(BuildPrior, ValidatesFrontiers) {
  const std::vector<UngroundedSchema> s{tiny(2, "a"), tiny(2, "b")};
  EXPECT_THROW(build_prior(s, std::vector<FrontierSpec>{{{{2, 0}}, {}}, {{}, {0}}}), InvalidArgument);
  EXPECT_THROW(build_prior(s, std::vector<FrontierSpec>{{{{0, 0}}, {}}, {{}, {}}}), InvalidArgument);
  EXPECT_THROW(build_prior(s, std::vector<FrontierSpec>{{}}), InvalidArgument);
}

TEST(BuildPrior, DropsClonesUnlessAllHaveThem) {
  std::vector<UngroundedSchema> s{tiny(2, "a"), tiny(2, "b")};
  s[1].clones.reset();
  const std::vector<FrontierSpec> f{{{{0, 0}}, {0}}, {{{0, 1}}, {0}}};
  EXPECT_FALSE(build_prior(s, f).clones.has_value());
}

TEST(LearnComposed, RecoversJoinedRoomsFromGroundTruthSchemas) {
  const ComposedSpec spec = side_by_side({builtin_room(RoomType::rectangle, SizeClass::small),
                                          builtin_room(RoomType::square_with_hole, SizeClass::small)});
  const GridWorld w(spec);
  std::vector<UngroundedSchema> schemas;
  for (const auto& r : spec.rooms) schemas.push_back(ungrounded(ground_truth_model(GridWorld(r)).model));
  schemas[0].name = "a";
  schemas[1].name = "b";
  const UngroundedSchema prior = build_prior(schemas, door_frontiers(spec));
  Rng rng(3);
  const Trajectory walk = w.random_walk(0, 3000, rng);
  const ComposedResult r = learn_composed(prior, walk, w.n_obs());
  EXPECT_TRUE(validate(r.model).empty());
  EXPECT_FALSE(r.emission_trace.empty());
  EXPECT_FALSE(r.transition_trace.empty());

  GroundedSchema gt = ground_truth_model(w).model;
  gt.initial = InitialDistribution::uniform(gt.n_states());
  GroundedSchema learned = r.model;
  learned.initial = InitialDistribution::uniform(learned.n_states());
  Rng test_rng(9);
  const Trajectory test = w.random_walk(5, 1000, test_rng);
  EXPECT_LT(nll(learned, test), nll(gt, test) + 0.05);
}

TEST(FrontierFiles, RoundTrip) {
  const std::vector<NamedFrontier> f{{"a", {{{3, 1}, {4, 1}}, {3, 4}}}, {"b", {{}, {0}}}};
  std::stringstream s;
  write_frontiers(s, f);
  EXPECT_EQ(read_frontiers(s), f);
}

TEST(FrontierFiles, RejectsMalformedInput) {
  for (const char* text : {"{", "{\"version\": 2, \"schemas\": []}", "{\"version\": 1}",
                           "{\"version\": 1, \"schemas\": [{\"name\": \"a\", \"exits\": [[1]], \"entries\": []}]}",
                           "{\"version\": 1, \"schemas\": [{\"name\": \"a\", \"exits\": [], \"entries\": [-1]}]}"}) {
    std::stringstream s(text);
    EXPECT_THROW(read_frontiers(s), FormatError) << text;
  }
}
