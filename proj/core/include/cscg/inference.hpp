#pragma once

// Exact message passing on CSCGs: scaled forward-backward, negative
// log-likelihood and max-product (Viterbi) decoding.
//
// Two code paths share one interface:
//  * clone-sparse: requires a deterministic emission matrix whose clones are
//    contiguous per observation. Each step only touches the block of
//    transitions between the clones of consecutive observations.
//  * dense: arbitrary emissions; transitions are applied through a
//    TransitionIndex, which stores each row as a constant floor plus the
//    sparse entries above it.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "cscg/model.hpp"

namespace cscg {

/// Row-compressed view of a transition tensor. Every row (a, j) is stored as
/// floor(a, j) on all targets plus positive excess on a sparse set of
/// targets, so that smoothed tensors (pseudocount floors) and deterministic
/// graphs both propagate in O(n_states + nonzeros).
class TransitionIndex {
 public:
  struct Entry {
    std::uint32_t target;
    double value;   // T(a, j, target)
    double excess;  // value - floor(a, j)
  };

  explicit TransitionIndex(const TransitionTensor& t);

  std::size_t n_actions() const noexcept { return n_actions_; }
  std::size_t n_states() const noexcept { return n_states_; }
  double floor(std::size_t a, std::size_t j) const {
    return floors_[a * n_states_ + j];
  }
  std::span<const Entry> entries(std::size_t a, std::size_t j) const {
    const std::size_t r = a * n_states_ + j;
    return {entries_.data() + row_begin_[r], row_begin_[r + 1] - row_begin_[r]};
  }
  std::size_t n_entries() const noexcept { return entries_.size(); }
  /// T(a, j, k) reconstructed from the floor and the sparse entries.
  double value(std::size_t a, std::size_t j, std::size_t k) const;

  /// out[k] = sum_j in[j] * T(a, j, k)
  void forward(std::size_t a, std::span<const double> in,
               std::span<double> out) const;
  /// out[j] = sum_k T(a, j, k) * in[k]
  void backward(std::size_t a, std::span<const double> in,
                std::span<double> out) const;
  /// out[k] = max_j in[j] * T(a, j, k); argmax[k] is the lowest maximizing j.
  void forward_max(std::size_t a, std::span<const double> in,
                   std::span<double> out, std::span<std::uint32_t> argmax) const;

 private:
  std::size_t n_actions_;
  std::size_t n_states_;
  std::vector<double> floors_;
  std::vector<std::size_t> row_begin_;
  std::vector<Entry> entries_;
};

/// Contiguous range of hidden states emitting each observation, derived from
/// a deterministic emission matrix.
class CloneIndex {
 public:
  /// Throws InvalidArgument if E is not deterministic or an observation's
  /// clones are not contiguous.
  explicit CloneIndex(const EmissionMatrix& e);

  std::size_t begin(std::size_t obs) const { return begin_[obs]; }
  std::size_t size(std::size_t obs) const { return size_[obs]; }

 private:
  std::vector<std::size_t> begin_;
  std::vector<std::size_t> size_;
};

struct StepSupport {
  std::size_t begin = 0;
  std::size_t size = 0;
};

/// Per-step scaled messages. alpha/beta/gamma of step n are stored only on
/// the step's support (the clones of x_n on the clone-sparse path, all states
/// on the dense path).
struct MessageSet {
  std::size_t n_states = 0;
  std::vector<StepSupport> support;
  std::vector<std::size_t> offset;
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> gamma;
  /// log p_alpha(n): log of the forward normalizer of step n.
  std::vector<double> log_norms;

  std::size_t n_steps() const noexcept { return log_norms.size(); }
  std::span<const double> alpha_at(std::size_t n) const {
    return {alpha.data() + offset[n], support[n].size};
  }
  std::span<const double> beta_at(std::size_t n) const {
    return {beta.data() + offset[n], support[n].size};
  }
  std::span<const double> gamma_at(std::size_t n) const {
    return {gamma.data() + offset[n], support[n].size};
  }
  std::vector<double> dense_alpha(std::size_t n) const;
  std::vector<double> dense_gamma(std::size_t n) const;

  double log_likelihood() const;
  /// -(1/N) sum_n log p_alpha(n)
  double nll() const;
};

struct ForwardBackwardOptions {
  bool clone_sparse = false;
  bool backward = true;
  /// Test hook: the unnormalized forward message of step n is multiplied by
  /// scale_injection[n] (when present) and the recorded normalizer is
  /// corrected accordingly.
  std::vector<double> scale_injection;
};

/// Throws InvalidArgument on out-of-range indices and ZeroProbabilityError
/// when the data has probability zero at some step.
MessageSet forward_backward(const GroundedSchema& model, const Trajectory& traj,
                            const ForwardBackwardOptions& opts = {});

/// Dense path on model components with a precomputed transition index.
MessageSet forward_backward(const TransitionIndex& index,
                            const EmissionMatrix& emissions,
                            std::span<const double> initial,
                            const Trajectory& traj,
                            const ForwardBackwardOptions& opts = {});

/// -(1/N) log P(x | a). Throws ZeroProbabilityError on an impossible step.
double nll(const GroundedSchema& model, const Trajectory& traj,
           bool clone_sparse = false);

struct LikelihoodReport {
  double nll = std::numeric_limits<double>::infinity();
  /// First step with zero probability, if any.
  std::optional<std::size_t> zero_step;
};

/// Like nll(), but an impossible step yields +infinity instead of throwing.
LikelihoodReport evaluate_likelihood(const GroundedSchema& model,
                                     const Trajectory& traj,
                                     bool clone_sparse = false);
LikelihoodReport evaluate_likelihood(const TransitionIndex& index,
                                     const EmissionMatrix& emissions,
                                     std::span<const double> initial,
                                     const Trajectory& traj);

struct Decoding {
  std::vector<std::size_t> states;
  /// log of the joint probability of the decoded path and the observations.
  double log_prob = 0.0;
};

/// Most probable hidden-state sequence; ties resolve to the lowest state
/// index. Throws NoPathError when every path has probability zero.
Decoding map_decode(const GroundedSchema& model, const Trajectory& traj,
                    bool clone_sparse = false);
Decoding map_decode(const TransitionIndex& index,
                    const EmissionMatrix& emissions,
                    std::span<const double> initial, const Trajectory& traj);

/// log of the joint probability of a given state path and the observations.
double path_log_prob(const GroundedSchema& model, const Trajectory& traj,
                     std::span<const std::size_t> states);
double path_log_prob(const TransitionIndex& index,
                     const EmissionMatrix& emissions,
                     std::span<const double> initial, const Trajectory& traj,
                     std::span<const std::size_t> states);

}  // namespace cscg
