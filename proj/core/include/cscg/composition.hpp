#pragma once

// Learning a composed environment from known schemas: copies of the schemas
// on the diagonal of a joint tensor, exit frontiers wired uniformly to the
// entry states of all other schemas, then emission EM, transition EM and
// Viterbi refinement.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cscg/learning.hpp"
#include "cscg/model.hpp"

namespace cscg {

struct FrontierSpec {
  /// (state, action) pairs through which the agent leaves the schema.
  std::vector<std::pair<std::size_t, std::size_t>> exits;
  /// States through which the agent enters the schema.
  std::vector<std::size_t> entries;

  bool operator==(const FrontierSpec&) const = default;
};

/// Throws InvalidArgument when an index is outside the schema.
void check_frontier(const FrontierSpec& f, const UngroundedSchema& schema);

/// Block-diagonal prior. For every exit (s, a) of schema i, the row T[a, s, .]
/// is cleared and set uniform over the entry states of all other schemas.
/// The prior keeps the schemas' clone structures when all of them have one.
/// Throws InvalidArgument if an exit has no entry state to go to.
UngroundedSchema build_prior(std::span<const UngroundedSchema> schemas,
                             std::span<const FrontierSpec> frontiers);

struct ComposeOptions {
  /// Phase 1: emissions with the prior T frozen.
  EmOptions emission = EmOptions::matching();
  /// Phase 2: transitions with the learned E frozen.
  EmOptions transition = EmOptions::schema_learning();
  /// Phase 3: Viterbi refinement.
  double viterbi_pseudocount = kSchemaLearningPseudocount;
  std::size_t viterbi_iters = 20;
  /// Pool emission posteriors over the prior's clone groups in phase 1.
  bool tie_clones = true;
};

struct ComposedResult {
  GroundedSchema model;
  std::vector<double> emission_trace;
  std::vector<double> transition_trace;
  std::vector<double> viterbi_trace;
};

ComposedResult learn_composed(const UngroundedSchema& prior,
                              std::span<const Trajectory> walks, std::size_t n_obs,
                              const ComposeOptions& opts = {});
ComposedResult learn_composed(const UngroundedSchema& prior, const Trajectory& walk,
                              std::size_t n_obs, const ComposeOptions& opts = {});

/// Frontier files are JSON:
///
///   {"version": 1,
///    "schemas": [{"name": "a", "exits": [[3, 1], [4, 1]], "entries": [3, 4]}, ...]}
inline constexpr int kFrontierFormatVersion = 1;

struct NamedFrontier {
  std::string name;
  FrontierSpec frontier;
  bool operator==(const NamedFrontier&) const = default;
};

/// Throws FormatError on malformed input or a version mismatch.
std::vector<NamedFrontier> read_frontiers(std::istream& in);
void write_frontiers(std::ostream& out, std::span<const NamedFrontier> frontiers);

}  // namespace cscg
