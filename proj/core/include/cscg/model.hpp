#pragma once

// Core model types of a clone-structured cognitive graph: the
// action-conditional transition tensor, the clone structure, the emission
// matrix and the initial distribution, plus the schema tuples built on them.
//
// Indices are 0-based throughout. A transition entry T(a, j, k) is the
// probability of moving from hidden state j to hidden state k under action a.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cscg {

inline constexpr double kStochasticTolerance = 1e-9;

class TransitionTensor {
 public:
  TransitionTensor() = default;
  /// All-zero tensor; rows must be filled before use.
  TransitionTensor(std::size_t n_actions, std::size_t n_states);
  TransitionTensor(std::size_t n_actions, std::size_t n_states,
                   std::vector<double> probs);

  static TransitionTensor uniform(std::size_t n_actions, std::size_t n_states);
  /// Independent uniform(0,1) draws per entry, row-normalized.
  static TransitionTensor random(std::size_t n_actions, std::size_t n_states,
                                 std::uint64_t seed);

  std::size_t n_actions() const noexcept { return n_actions_; }
  std::size_t n_states() const noexcept { return n_states_; }

  double operator()(std::size_t a, std::size_t from, std::size_t to) const {
    return probs_[index(a, from, to)];
  }
  double& operator()(std::size_t a, std::size_t from, std::size_t to) {
    return probs_[index(a, from, to)];
  }

  std::span<const double> row(std::size_t a, std::size_t from) const {
    return {probs_.data() + index(a, from, 0), n_states_};
  }
  std::span<double> row(std::size_t a, std::size_t from) {
    return {probs_.data() + index(a, from, 0), n_states_};
  }

  std::span<const double> data() const noexcept { return probs_; }

  /// Scales every row with positive mass to sum to one; all-zero rows are
  /// left untouched.
  void normalize_rows();

  /// Largest entry of the whole tensor.
  double max_entry() const;

  bool operator==(const TransitionTensor&) const = default;

 private:
  std::size_t index(std::size_t a, std::size_t from, std::size_t to) const {
    return (a * n_states_ + from) * n_states_ + to;
  }

  std::size_t n_actions_ = 0;
  std::size_t n_states_ = 0;
  std::vector<double> probs_;
};

/// Partition of the hidden states into contiguous clone groups.
class CloneStructure {
 public:
  CloneStructure() = default;
  /// Throws InvalidArgument unless the groups are contiguous, start at 0,
  /// increase by at most one between neighbours and are all non-empty.
  explicit CloneStructure(std::vector<std::size_t> group_of_state);

  static CloneStructure from_sizes(std::span<const std::size_t> sizes);
  static CloneStructure uniform(std::size_t n_groups,
                                std::size_t clones_per_group);

  std::size_t n_states() const noexcept { return group_of_state_.size(); }
  std::size_t n_groups() const noexcept { return sizes_.size(); }
  std::size_t group_of(std::size_t state) const {
    return group_of_state_[state];
  }
  std::size_t group_size(std::size_t group) const { return sizes_[group]; }
  std::size_t group_begin(std::size_t group) const { return begin_[group]; }
  std::size_t group_end(std::size_t group) const {
    return begin_[group] + sizes_[group];
  }
  const std::vector<std::size_t>& group_of_state() const noexcept {
    return group_of_state_;
  }
  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }

  bool operator==(const CloneStructure& o) const {
    return group_of_state_ == o.group_of_state_;
  }

 private:
  std::vector<std::size_t> group_of_state_;
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> begin_;
};

class EmissionMatrix {
 public:
  EmissionMatrix() = default;
  EmissionMatrix(std::size_t n_states, std::size_t n_obs,
                 std::vector<double> probs);

  static EmissionMatrix uniform(std::size_t n_states, std::size_t n_obs);
  /// Clones of group k emit observation k with probability one.
  static EmissionMatrix deterministic(const CloneStructure& clones);
  static EmissionMatrix deterministic(std::span<const std::size_t> obs_of_state,
                                      std::size_t n_obs);

  std::size_t n_states() const noexcept { return n_states_; }
  std::size_t n_obs() const noexcept { return n_obs_; }

  double operator()(std::size_t state, std::size_t obs) const {
    return probs_[state * n_obs_ + obs];
  }
  double& operator()(std::size_t state, std::size_t obs) {
    return probs_[state * n_obs_ + obs];
  }
  std::span<const double> row(std::size_t state) const {
    return {probs_.data() + state * n_obs_, n_obs_};
  }
  std::span<const double> data() const noexcept { return probs_; }

  /// Every row has exactly one entry equal to 1 (and zeros elsewhere).
  bool is_deterministic() const;
  /// Rows of states in the same clone group are identical.
  bool respects(const CloneStructure& clones) const;
  /// Most probable observation of each state (lowest index on ties).
  std::vector<std::size_t> argmax_observations() const;

  bool operator==(const EmissionMatrix&) const = default;

 private:
  std::size_t n_states_ = 0;
  std::size_t n_obs_ = 0;
  std::vector<double> probs_;
};

struct InitialDistribution {
  std::vector<double> probs;

  static InitialDistribution uniform(std::size_t n_states);
  static InitialDistribution point(std::size_t n_states, std::size_t state);

  std::size_t size() const noexcept { return probs.size(); }
  bool operator==(const InitialDistribution&) const = default;
};

struct GroundedSchema {
  TransitionTensor transitions;
  CloneStructure clones;
  EmissionMatrix emissions;
  InitialDistribution initial;
  std::string name;
  std::uint32_t version = 1;

  std::size_t n_states() const noexcept { return transitions.n_states(); }
  std::size_t n_actions() const noexcept { return transitions.n_actions(); }
  std::size_t n_obs() const noexcept { return emissions.n_obs(); }

  bool operator==(const GroundedSchema&) const = default;
};

struct UngroundedSchema {
  TransitionTensor transitions;
  std::optional<CloneStructure> clones;
  std::string name;

  std::size_t n_states() const noexcept { return transitions.n_states(); }
  std::size_t n_actions() const noexcept { return transitions.n_actions(); }

  bool operator==(const UngroundedSchema&) const = default;
};

/// Strips the emission matrix (and optionally the clone structure).
UngroundedSchema ungrounded(const GroundedSchema& model, bool keep_clones = true);

/// Grounds a schema with the given emissions and a uniform initial
/// distribution. The clone structure is taken from the schema when present,
/// otherwise every state forms its own group.
GroundedSchema grounded(const UngroundedSchema& schema, EmissionMatrix emissions);

/// actions[n] is taken between observations[n] and observations[n + 1].
struct Trajectory {
  std::vector<std::size_t> actions;
  std::vector<std::size_t> observations;

  std::size_t size() const noexcept { return observations.size(); }
  bool empty() const noexcept { return observations.empty(); }

  /// Sub-trajectory of observations [begin, end).
  Trajectory slice(std::size_t begin, std::size_t end) const;

  bool operator==(const Trajectory&) const = default;
};

/// Throws InvalidArgument if the lengths are inconsistent or any index is out
/// of the given ranges.
void check_trajectory(const Trajectory& traj, std::size_t n_actions,
                      std::size_t n_obs);

struct Violation {
  enum class Kind {
    dimension,
    transition_range,
    transition_row_sum,
    emission_range,
    emission_row_sum,
    clone_structure,
    initial_distribution,
  };
  Kind kind;
  std::string message;
};

/// Lists every broken invariant of the model; empty when the model is valid.
std::vector<Violation> validate(const GroundedSchema& model);
std::vector<Violation> validate(const TransitionTensor& transitions);

/// Places each schema's transition tensor on the diagonal of a joint tensor.
/// Off-block entries are zero. Throws InvalidArgument on mismatched action
/// counts or an empty list.
TransitionTensor block_diagonal(std::span<const UngroundedSchema> schemas);

/// One "action from to prob" line per entry with probability > threshold.
std::string export_graph(const TransitionTensor& transitions,
                         double threshold = 0.0);

}  // namespace cscg
