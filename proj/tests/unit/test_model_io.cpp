#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "cscg/error.hpp"
#include "cscg/model_io.hpp"
#include "support/oracles.hpp"

using namespace cscg;

namespace {

ModelBundle sample_bundle(bool with_quantizer) {
  std::mt19937_64 rng(4);
  ModelBundle b;
  b.schema = oracle::random_model(5, 3, 2, true, rng);
  b.schema.name = "sample room";
  if (with_quantizer) {
    Quantizer q;
    q.dim = 2;
    q.centroids = {0.0, 1.0, 2.0, 3.0};
    q.priors = {0.25, 0.75};
    q.sigma2 = 0.5;
    b.quantizer = q;
  }
  return b;
}

}  // namespace

TEST(ModelIo, RoundTripIsExact) {
  for (bool q : {false, true}) {
    const ModelBundle b = sample_bundle(q);
    EXPECT_EQ(deserialize(serialize(b)), b);
  }
}

TEST(ModelIo, SerializationIsDeterministic) {
  EXPECT_EQ(serialize(sample_bundle(true)), serialize(sample_bundle(true)));
}

TEST(ModelIo, RejectsCorruptInput) {
  auto bytes = serialize(sample_bundle(false));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(deserialize(bad_magic), FormatError);

  auto bad_version = bytes;
  bad_version[8] = 99;
  EXPECT_THROW(deserialize(bad_version), FormatError);

  for (std::size_t cut : {std::size_t{3}, std::size_t{20}, bytes.size() - 1}) {
    EXPECT_THROW(deserialize(std::span(bytes).first(cut)), FormatError) << cut;
  }
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(deserialize(trailing), FormatError);
}

TEST(ModelIo, RejectsPayloadBreakingInvariants) {
  ModelBundle b = sample_bundle(false);
  auto bytes = serialize(b);
  // The last 8 bytes are pi[n-1]; make it 2.0 so pi no longer sums to one.
  const double two = 2.0;
  std::memcpy(bytes.data() + bytes.size() - 8, &two, 8);
  EXPECT_THROW(deserialize(bytes), FormatError);
}

TEST(ModelIo, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "cscg_model_io_test.cscg";
  const ModelBundle b = sample_bundle(true);
  save_model(path, b);
  EXPECT_EQ(load_model(path), b);
  std::filesystem::remove(path);
  EXPECT_ANY_THROW(load_model(path));
}
