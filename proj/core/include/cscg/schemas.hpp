#pragma once

// Schema libraries and likelihood-based schema matching: whole-walk ranking
// with per-prefix emission learning, and sliding-window soft selection for
// walks through rooms of different schemas.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cscg/learning.hpp"
#include "cscg/model.hpp"
#include "cscg/world.hpp"

namespace cscg {

class SchemaLibrary {
 public:
  /// Throws InvalidArgument on a duplicate name or a different action count.
  void add(UngroundedSchema schema);

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const UngroundedSchema& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<UngroundedSchema>& entries() const noexcept { return entries_; }
  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t n_actions() const;

 private:
  std::vector<UngroundedSchema> entries_;
};

/// Ungrounded schema from a learned model: MAP-decodes the training walks,
/// keeps only states on the decoded paths and re-estimates T from the hard
/// transition counts plus pseudocount. The clone structure follows the
/// surviving states' observations (observations never decoded are dropped).
UngroundedSchema extract_schema(const GroundedSchema& learned,
                                std::span<const Trajectory> walks,
                                double pseudocount, std::string name);

struct RoomSchemaOptions {
  std::size_t walk_length = 20000;
  /// Clones per symbol = ceil(clone_factor * number of cells showing it).
  double clone_factor = 1.0;
  EmOptions em = EmOptions::schema_learning();
  /// EM runs from independent random initializations; the one with the
  /// lowest final training NLL is kept.
  std::size_t restarts = 1;
};

/// Learns a schema of a training world from one seeded uniform random walk
/// (random start) and extracts it with the schema-learning pseudocount.
/// The EM trace of the kept run is written to `nll_trace` when given.
UngroundedSchema learn_room_schema(const GridWorld& world, std::string name,
                                   std::uint64_t seed, const RoomSchemaOptions& opts = {},
                                   std::vector<double>* nll_trace = nullptr);

struct MatchOptions {
  std::size_t eval_interval = 5;
  /// Required lead of the winner over the runner-up, nats per step.
  double margin = 0.05;
  bool tie_clones = true;
  /// Longest prefix evaluated; 0 means the whole walk.
  std::size_t max_steps = 0;
  EmOptions em = EmOptions::matching();
};

struct MatchReport {
  std::vector<std::string> names;
  /// Prefix lengths (observations) at which the schemas were evaluated.
  std::vector<std::size_t> steps;
  /// nll[schema][evaluation]
  std::vector<std::vector<double>> nll;
  std::size_t winner = 0;
  std::string winner_name;
  /// Schemas whose final NLL equals the winner's.
  std::vector<std::size_t> tied;
  /// First prefix length from which the winner leads by the margin at every
  /// later evaluation (at least two evaluations in a row); empty if never.
  std::optional<std::size_t> decision_step;
};

struct MatchDecision {
  std::size_t winner = 0;
  std::vector<std::size_t> tied;
  std::optional<std::size_t> decision_step;
};

/// Winner and decision step for NLL traces nll[schema][evaluation] taken at
/// the given prefix lengths. A single schema is decided at the first
/// evaluation.
MatchDecision decide(const std::vector<std::vector<double>>& nll,
                     std::span<const std::size_t> steps, double margin);

/// Throws InvalidArgument on an empty library or walk.
MatchReport match(const SchemaLibrary& library, const Trajectory& walk,
                  std::size_t n_obs, const MatchOptions& opts = {});

/// Numerically stable softmax of x / temperature. Entries equal to -inf get
/// probability 0; if all are -inf the result is uniform.
std::vector<double> softmax(std::span<const double> x, double temperature = 1.0);

struct WindowOptions {
  /// Number of observations per window.
  std::size_t window = 200;
  /// Distance between consecutive window end positions.
  std::size_t stride = 1;
  double temperature = 1.0;
  bool tie_clones = true;
  EmOptions em = EmOptions::matching();
};

struct WindowReport {
  std::vector<std::string> names;
  /// Index of the last observation of each window.
  std::vector<std::size_t> positions;
  /// Total window log-likelihood, log_lik[position][schema].
  std::vector<std::vector<double>> log_lik;
  std::vector<std::vector<double>> prob;
  /// argmax of prob (first schema on ties).
  std::vector<std::size_t> selected;
};

/// Slides a window over the walk; per window and schema, learns E from
/// scratch on the window and scores the window's log-likelihood. Throws
/// InvalidArgument when the window is longer than the walk.
WindowReport sliding_window_match(const SchemaLibrary& library, const Trajectory& walk,
                                  std::size_t n_obs, const WindowOptions& opts = {});

}  // namespace cscg
