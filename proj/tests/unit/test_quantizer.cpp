#include <gtest/gtest.h>

#include <map>
#include <set>

#include <numeric>

#include "cscg/error.hpp"
#include "cscg/quantizer.hpp"
#include "cscg/world.hpp"

using namespace cscg;

namespace {

std::vector<Point> blobs(std::size_t per, std::uint64_t seed) {
  const std::vector<Point> centres{{0.0, 0.0}, {10.0, 0.0}, {0.0, 10.0}};
  Rng rng(seed);
  std::vector<Point> out;
  for (std::size_t i = 0; i < per; ++i) {
    for (const auto& c : centres) out.push_back({c[0] + 0.3 * standard_normal(rng), c[1] + 0.3 * standard_normal(rng)});
  }
  return out;
}

}  // namespace

TEST(KMeans, SeparatesWellSpacedClusters) {
  const auto data = blobs(50, 3);
  const KMeansResult r = fit_kmeans(data, 3, 7);
  ASSERT_EQ(r.quantizer.k(), 3u);
  // Points generated from the same centre share a label.
  for (std::size_t i = 3; i < data.size(); ++i) EXPECT_EQ(r.assignments[i], r.assignments[i % 3]);
  EXPECT_NEAR(std::accumulate(r.quantizer.priors.begin(), r.quantizer.priors.end(), 0.0), 1.0, 1e-12);
  for (double p : r.quantizer.priors) EXPECT_NEAR(p, 1.0 / 3.0, 1e-12);
}

TEST(KMeans, DistortionNeverIncreases) {
  const auto data = blobs(40, 5);
  const KMeansResult r = fit_kmeans(data, 5, 1);
  for (std::size_t i = 1; i < r.distortion_trace.size(); ++i) {
    EXPECT_LE(r.distortion_trace[i], r.distortion_trace[i - 1] + 1e-9);
  }
}

TEST(KMeans, IsSeeded) {
  const auto data = blobs(20, 2);
  EXPECT_EQ(fit_kmeans(data, 4, 9).quantizer, fit_kmeans(data, 4, 9).quantizer);
}

TEST(KMeans, RejectsTooFewPoints) {
  const std::vector<Point> data{{0.0}, {1.0}};
  EXPECT_THROW(fit_kmeans(data, 3, 1), InvalidArgument);
}

TEST(Quantize, NearestCentroidLowestIndexOnTies) {
  Quantizer q;
  q.dim = 1;
  q.centroids = {0.0, 2.0, 2.0};
  q.priors = {0.4, 0.3, 0.3};
  const std::vector<double> x1{1.0}, x2{1.9}, x3{2.0};
  EXPECT_EQ(quantize(q, x1), 0u);
  EXPECT_EQ(quantize(q, x2), 1u);
  EXPECT_EQ(quantize(q, x3), 1u);
}

TEST(AllocateClones, LargestRemainderWithAtLeastOne) {
  const std::vector<double> priors{0.7, 0.25, 0.05};
  const CloneStructure c = allocate_clones(priors, 10);
  EXPECT_EQ(c.sizes(), (std::vector<std::size_t>{7, 2, 1}));
  const std::vector<double> tiny{0.98, 0.01, 0.01};
  EXPECT_EQ(allocate_clones(tiny, 4).sizes(), (std::vector<std::size_t>{2, 1, 1}));
  EXPECT_THROW(allocate_clones(tiny, 2), InvalidArgument);
}

TEST(TransferQuantize, BindsSchemaOnEmbeddedWalk) {
  const RoomSpec room = builtin_room(RoomType::rectangle, SizeClass::small);
  const GridWorld world(room);
  const UngroundedSchema schema = ungrounded(ground_truth_model(world).model);
  const ContinuousEmitter emitter(world.n_obs(), 6, 0.05, 4);
  Rng rng(8);
  const Trajectory walk = world.random_walk(0, 1500, rng);
  ContinuousTrajectory cw;
  cw.actions = walk.actions;
  for (std::size_t o : walk.observations) cw.observations.push_back(emitter.emit(o, rng));
  const TransferResult r =
      transfer_quantize(schema, cw, world.n_obs(), 3, true, EmOptions::matching());
  EXPECT_EQ(r.quantizer.k(), world.n_obs());
  ASSERT_EQ(r.discrete.size(), walk.size());
  for (std::size_t n = 0; n < walk.size(); ++n) {
    EXPECT_EQ(r.discrete.observations[n], quantize(r.quantizer, cw.observations[n]));
  }
  const EmissionLearningResult direct =
      learn_emissions(schema, r.discrete, world.n_obs(), true, EmOptions::matching());
  EXPECT_DOUBLE_EQ(r.binding.nll, direct.nll);
  // With a one-to-one code book the binding is as good as on the symbols.
  std::map<std::size_t, std::set<std::size_t>> codes;
  for (std::size_t n = 0; n < walk.size(); ++n) codes[walk.observations[n]].insert(r.discrete.observations[n]);
  bool one_to_one = codes.size() == world.n_obs();
  std::set<std::size_t> used;
  for (const auto& [sym, c] : codes) {
    one_to_one = one_to_one && c.size() == 1;
    used.insert(c.begin(), c.end());
  }
  if (one_to_one && used.size() == world.n_obs()) EXPECT_LT(r.binding.nll, 0.05);
  EXPECT_THROW(transfer_quantize(schema, cw, schema.n_states() + 1, 3, true, EmOptions::matching()),
               InvalidArgument);
}
