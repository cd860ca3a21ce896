#pragma once

// Memory & Planning Game: a 4 x 4 torus of unique symbols, re-permuted every
// episode. The agent sees (current symbol, goal symbol), moves in the four
// compass directions and has a fifth "collect" action. Collecting on the
// goal pays 1, teleports the agent and draws a new goal.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cscg/exploration.hpp"
#include "cscg/learning.hpp"
#include "cscg/model.hpp"
#include "cscg/planner.hpp"
#include "cscg/world.hpp"

namespace cscg {

inline constexpr std::size_t kCollect = 4;
inline constexpr std::size_t kMpgActions = 5;

struct MpgSpec {
  std::size_t side = 4;
  std::size_t episode_length = 100;
};

/// The move-only grid of an episode: torus, cell (r, c) shows perm[r*side+c].
GridWorld mpg_grid(const MpgSpec& spec, std::span<const std::size_t> perm);

class MpgGame {
 public:
  /// Permutation, start cell and first goal are drawn from the seed.
  MpgGame(const MpgSpec& spec, std::uint64_t seed);

  const GridWorld& grid() const noexcept { return grid_; }
  std::size_t n_symbols() const noexcept { return grid_.n_states(); }
  std::size_t cell() const noexcept { return cell_; }
  std::size_t goal_cell() const noexcept { return goal_; }
  std::size_t symbol() const { return grid_.observe(cell_); }
  std::size_t goal_symbol() const { return grid_.observe(goal_); }
  std::size_t steps() const noexcept { return steps_; }
  bool done() const noexcept { return steps_ >= spec_.episode_length; }

  struct Outcome {
    double reward = 0.0;
    bool teleported = false;
  };
  /// Throws InvalidArgument on a bad action or a finished episode.
  Outcome step(std::size_t action);

 private:
  void new_goal();

  MpgSpec spec_;
  Rng rng_;
  GridWorld grid_;
  std::size_t cell_ = 0;
  std::size_t goal_ = 0;
  std::size_t steps_ = 0;
};

/// Experience of one episode: the move-only stretches between teleports.
struct MpgEpisodeData {
  std::vector<Trajectory> segments;
  double reward = 0.0;
};

/// Plays a random-walk episode (uniform moves, collect on the goal).
MpgEpisodeData random_mpg_episode(const MpgSpec& spec, std::uint64_t seed);

struct MpgLearnOptions {
  std::size_t episodes = 10;
  /// Alternations between per-episode bindings and the shared T.
  std::size_t rounds = 30;
  double round_tol = 1e-6;
  EmOptions transition = EmOptions::schema_learning();
  EmOptions binding = EmOptions::matching();
};

struct MpgSchemaResult {
  UngroundedSchema schema;
  /// Training NLL after each episode's fit.
  std::vector<double> nll;
  /// Schema after each episode (index e: fitted on episodes 0..e).
  std::vector<TransitionTensor> snapshots;
};

/// Learns one T shared by all episodes with one binding per episode. The
/// first episode's states are labelled by its symbols (E fixed to the
/// identity); every later episode's first segment starts in state 0, which
/// is harmless on a vertex-transitive grid and removes the translation
/// ambiguity of binding. Each episode's fit alternates binding EM and
/// transition EM until the total NLL settles.
MpgSchemaResult learn_mpg_schema(const MpgSpec& spec, std::uint64_t seed,
                                 const MpgLearnOptions& opts = {});

struct MpgAgentOptions {
  PolicyKind exploration = PolicyKind::hamiltonian_4x4;
  double theta = kDefaultGoalConfidence;
  /// Keep exploring, without collecting, until every schema state could be
  /// bound, i.e. as many distinct symbols were seen as the schema has states.
  bool cover_first = true;
  /// Filtered posterior of the MAP state needed before planning.
  double localization = 0.5;
  EmOptions binding = [] {
    EmOptions o = EmOptions::matching();
    o.max_iters = 50;
    return o;
  }();
};

struct MpgTask {
  /// Moves from the task start to the collect (collect not counted).
  std::size_t steps = 0;
  /// Shortest number of moves on the grid.
  std::size_t optimal = 0;
  bool completed = false;
};

struct MpgEpisodeResult {
  double reward = 0.0;
  std::vector<MpgTask> tasks;
  std::size_t explore_steps = 0;
  std::size_t plan_steps = 0;
};

/// One scored episode with a fixed schema: explore until the goal symbol
/// has been seen (and, with cover_first, every state could be bound) and the
/// agent is localized, then follow max-product plans,
/// re-binding E and replanning after every step.
MpgEpisodeResult play_mpg_episode(const UngroundedSchema& schema, const MpgSpec& spec,
                                  std::uint64_t seed, const MpgAgentOptions& opts = {});

struct MpgSummary {
  std::size_t episodes = 0;
  double mean_reward = 0.0;
  double sem_reward = 0.0;
  double mean_first_task_steps = 0.0;
  /// Fraction of completed tasks after the first one that took the
  /// shortest number of moves.
  double optimal_fraction = 0.0;
  std::size_t later_tasks = 0;
};
MpgSummary summarize(std::span<const MpgEpisodeResult> episodes);

/// True when the thresholded graph of T over the four moves is isomorphic
/// to the grid's.
bool matches_grid(const TransitionTensor& t, const MpgSpec& spec, double threshold = 0.5);

}  // namespace cscg
