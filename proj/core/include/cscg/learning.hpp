#pragma once

// Expectation-maximization learners:
//  * learn_transitions: T and pi with deterministic clone emissions fixed.
//  * refine_transitions: T with arbitrary (possibly soft) emissions fixed.
//  * viterbi_refine: hard-count re-estimation of T from MAP paths.
//  * learn_emissions: E with T fixed (schema binding), optional clone tying.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cscg/inference.hpp"
#include "cscg/model.hpp"

namespace cscg {

inline constexpr double kSchemaLearningPseudocount = 2e-3;
inline constexpr double kMatchingPseudocount = 1e-7;

struct EmOptions {
  std::size_t max_iters = 100;
  double pseudocount = kSchemaLearningPseudocount;
  /// Stop when |NLL(t) - NLL(t-1)| < convergence_tol (nats per step).
  double convergence_tol = 1e-6;
  std::uint64_t seed = 0;
  /// Trajectories are processed concurrently by this many threads. Results do
  /// not depend on it.
  std::size_t workers = 1;

  static EmOptions schema_learning() { return {}; }
  static EmOptions matching() {
    EmOptions o;
    o.pseudocount = kMatchingPseudocount;
    return o;
  }
};

/// Throws InvalidArgument on max_iters == 0 or a negative pseudocount.
void check_options(const EmOptions& opts);

struct TransitionLearningResult {
  GroundedSchema model;
  /// NLL of the initial parameters followed by the NLL after each M-step.
  std::vector<double> nll_trace;
  std::size_t iterations = 0;
  bool converged = false;
};

/// EM for T and pi. Clones of group k emit observation k. T starts from
/// seeded uniform(0,1) draws, row-normalized; the returned model is the
/// best-NLL iterate. With several trajectories pi is the mean first-step
/// posterior.
TransitionLearningResult learn_transitions(const Trajectory& traj,
                                           const CloneStructure& clones,
                                           std::size_t n_actions,
                                           const EmOptions& opts,
                                           bool clone_sparse = true);
TransitionLearningResult learn_transitions(std::span<const Trajectory> trajs,
                                           const CloneStructure& clones,
                                           std::size_t n_actions,
                                           const EmOptions& opts,
                                           bool clone_sparse = true);

struct TransitionFit {
  TransitionTensor transitions;
  std::vector<double> initial;
  std::vector<double> nll_trace;
  std::size_t iterations = 0;
  bool converged = false;
};

/// EM for T starting from `init` with the emissions held fixed, on the dense
/// path. `emissions` and `initials` hold either one entry shared by all
/// trajectories or one entry per trajectory. With learn_initial, the initial
/// distribution (shared) is re-estimated as the mean first-step posterior.
TransitionFit refine_transitions(TransitionTensor init,
                                 std::span<const Trajectory> trajs,
                                 std::span<const EmissionMatrix> emissions,
                                 std::span<const std::vector<double>> initials,
                                 const EmOptions& opts,
                                 bool learn_initial = false);

struct ViterbiRefineResult {
  GroundedSchema model;
  std::vector<double> nll_trace;
  std::size_t iterations = 0;
  /// The refined model fit the training data worse than the input; the input
  /// was returned.
  bool reverted = false;
  /// Some trajectory had no positive-probability path; input returned.
  bool no_path = false;
};

/// Alternates MAP decoding and hard-count re-estimation of T (plus
/// pseudocount, row-normalized) until the decoded paths stop changing or
/// max_iters. Never returns a model whose training NLL exceeds the input's by
/// more than 1e-6.
ViterbiRefineResult viterbi_refine(const GroundedSchema& model,
                                   std::span<const Trajectory> trajs,
                                   double pseudocount,
                                   std::size_t max_iters = 20);
ViterbiRefineResult viterbi_refine(const GroundedSchema& model,
                                   const Trajectory& traj, double pseudocount,
                                   std::size_t max_iters = 20);

struct EmissionLearningResult {
  EmissionMatrix emissions;
  /// NLL of the returned emissions.
  double nll = 0.0;
  std::vector<double> nll_trace;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Replaces every posterior entry by the mean over its clone group. Keeps the
/// total mass.
void pool_posteriors(std::span<double> gamma, const CloneStructure& clones);

/// EM for E with T fixed, from a uniform E and a uniform initial
/// distribution. With tie_clones the posteriors are pooled over the schema's
/// clone groups and the rows of a group are bit-identical.
EmissionLearningResult learn_emissions(const UngroundedSchema& schema,
                                       const Trajectory& traj,
                                       std::size_t n_obs, bool tie_clones,
                                       const EmOptions& opts);

/// General form: precomputed transition index, optional tying groups
/// (nullptr disables tying), several trajectories sharing one E, with one
/// initial distribution shared or given per trajectory.
EmissionLearningResult learn_emissions(
    const TransitionIndex& index, const CloneStructure* tie,
    std::span<const Trajectory> trajs,
    std::span<const std::vector<double>> initials, std::size_t n_obs,
    const EmOptions& opts);

}  // namespace cscg
