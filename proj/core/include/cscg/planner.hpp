#pragma once

// Goal-directed navigation with a grounded schema: localization by
// decoding, max-product planning over the action-conditioned graph,
// diagonal smoothing, and the execute / replan loop.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cscg/learning.hpp"
#include "cscg/model.hpp"
#include "cscg/world.hpp"

namespace cscg {

/// Adds lambda * max(T) to every T(a, s, s), then renormalizes the rows.
/// Throws InvalidArgument for negative lambda.
TransitionTensor smooth_diagonal(const TransitionTensor& t, double lambda);

struct Belief {
  /// Filtered posterior over states at the last step of the history.
  std::vector<double> posterior;
  /// Last state of the Viterbi path.
  std::size_t map_state = 0;
  /// Viterbi path over the whole history.
  std::vector<std::size_t> path;
  double entropy() const;
};

/// Throws ZeroProbabilityError when the history is impossible under the
/// model (the mismatch signal that drives replanning).
Belief localize(const GroundedSchema& model, const Trajectory& history);

/// A set of goal states. Goal::symbol collects every state whose most
/// probable observation is the symbol.
struct Goal {
  std::vector<std::size_t> states;
  static Goal at(std::vector<std::size_t> states);
  static Goal symbol(const EmissionMatrix& emissions, std::size_t obs);
  bool contains(std::size_t s) const;
};

/// Plan-probability threshold applied before executing toward a goal.
inline constexpr double kDefaultGoalConfidence = 0.7;

struct PlanOptions {
  double theta = kDefaultGoalConfidence;
  /// 0 means 4 * n_states.
  std::size_t horizon = 0;
};

struct PlanResult {
  std::vector<std::size_t> actions;
  /// Predicted states, starting with the start state (actions.size() + 1).
  std::vector<std::size_t> states;
  /// Product of the transition probabilities along the path.
  double success_probability = 1.0;
  std::size_t replans = 0;
};

/// Most probable path from `start` into the goal set within the horizon;
/// ties go to the shorter path, then to the lexicographically smaller action
/// sequence. Throws InvalidArgument on an empty goal and NoPathError when
/// the best path's probability is below theta.
PlanResult plan(const TransitionTensor& t, std::size_t start, const Goal& goal,
                const PlanOptions& opts = {});
/// Plans from the MAP state of the belief.
PlanResult plan(const GroundedSchema& model, const Belief& belief, const Goal& goal,
                const PlanOptions& opts = {});

struct NavigateOptions {
  /// Diagonal smoothing of the schema before binding.
  double lambda = 0.2;
  PlanOptions plan;
  /// Actions allowed after the initial history.
  std::size_t step_budget = 200;
  /// Binding EM run on all experience before every plan.
  EmOptions binding = EmOptions::matching();
  bool tie_clones = true;
  /// Posterior mass on the goal set needed to believe the goal is reached.
  double goal_mass = 0.5;
  std::uint64_t seed = 0;
};

struct NavStep {
  std::size_t action = 0;
  std::size_t observation = 0;
  double belief_entropy = 0.0;
  bool replanned = false;
};

struct EpisodeLog {
  std::vector<NavStep> steps;
  std::size_t plans = 0;
  std::size_t replans = 0;
  /// The agent stopped because it believed it was at the goal.
  bool believed_goal = false;
  /// The true final state is the goal.
  bool success = false;
  std::size_t final_distance = 0;
  std::size_t final_state = 0;
};

/// Execute / replan loop. The agent has walked `history` in `world`, ending
/// in world state `current`; its goal is the place it occupied at
/// history step `goal_step` (world state `goal_state`, used only for
/// scoring). Before every plan the schema is re-bound on all experience, the
/// history is decoded, and the goal is the decoded state at goal_step.
/// Plans are executed while the observations match the predicted states'
/// most probable observations; a mismatch or an exhausted plan triggers a
/// replan. Ends on a believed goal (MAP state in the goal set with
/// posterior mass >= goal_mass) or when the step budget runs out.
EpisodeLog navigate(const UngroundedSchema& schema, const GridWorld& world,
                    Trajectory history, std::size_t current, std::size_t goal_step,
                    std::size_t goal_state, const NavigateOptions& opts = {});

}  // namespace cscg
