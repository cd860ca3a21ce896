#include "cscg/mpg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cscg/error.hpp"
#include "cscg/graph.hpp"
#include "cscg/inference.hpp"

namespace cscg {

GridWorld mpg_grid(const MpgSpec& spec, std::span<const std::size_t> perm) {
  const std::size_t n = spec.side * spec.side;
  if (perm.size() != n) throw InvalidArgument("mpg: permutation size mismatch");
  RoomSpec room = make_room("mpg", spec.side, spec.side, std::vector<std::uint8_t>(n, 1),
                            Topology::torus);
  for (std::size_t i = 0; i < n; ++i) room.observation[i] = static_cast<int>(perm[i]);
  return GridWorld(room);
}

MpgGame::MpgGame(const MpgSpec& spec, std::uint64_t seed) : spec_(spec), rng_(seed) {
  if (spec.side < 2) throw InvalidArgument("mpg: side must be at least 2");
  if (spec.episode_length == 0) throw InvalidArgument("mpg: episode length must be positive");
  const std::size_t n = spec.side * spec.side;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  shuffle(perm.begin(), perm.end(), rng_);
  grid_ = mpg_grid(spec, perm);
  cell_ = uniform_index(rng_, n);
  new_goal();
}

void MpgGame::new_goal() {
  const std::size_t n = grid_.n_states();
  goal_ = uniform_index(rng_, n - 1);
  if (goal_ >= cell_) ++goal_;
}

MpgGame::Outcome MpgGame::step(std::size_t action) {
  if (action >= kMpgActions) throw InvalidArgument("mpg: invalid action " + std::to_string(action));
  if (done()) throw InvalidArgument("mpg: episode is over");
  ++steps_;
  Outcome out;
  if (action != kCollect) {
    cell_ = grid_.step(cell_, action);
    return out;
  }
  if (cell_ != goal_) return out;
  out.reward = 1.0;
  out.teleported = true;
  const std::size_t n = grid_.n_states();
  const std::size_t old_goal = goal_;
  cell_ = uniform_index(rng_, n - 1);
  if (cell_ >= old_goal) ++cell_;
  new_goal();
  return out;
}

namespace {

Trajectory start_segment(std::size_t obs) {
  Trajectory t;
  t.observations.push_back(obs);
  return t;
}

void append(Trajectory& t, std::size_t action, std::size_t obs) {
  t.actions.push_back(action);
  t.observations.push_back(obs);
}

}  // namespace

MpgEpisodeData random_mpg_episode(const MpgSpec& spec, std::uint64_t seed) {
  MpgGame game(spec, seed);
  Rng rng(derive_seed(seed, 1));
  MpgEpisodeData data;
  data.segments.push_back(start_segment(game.symbol()));
  while (!game.done()) {
    if (game.symbol() == game.goal_symbol()) {
      data.reward += game.step(kCollect).reward;
      data.segments.push_back(start_segment(game.symbol()));
      continue;
    }
    const std::size_t a = uniform_index(rng, kNumMoves);
    game.step(a);
    append(data.segments.back(), a, game.symbol());
  }
  return data;
}

MpgSchemaResult learn_mpg_schema(const MpgSpec& spec, std::uint64_t seed,
                                 const MpgLearnOptions& opts) {
  if (opts.episodes == 0) throw InvalidArgument("mpg: need at least one learning episode");
  const std::size_t Z = spec.side * spec.side;
  const EmissionMatrix identity = EmissionMatrix::deterministic(CloneStructure::uniform(Z, 1));
  const std::vector<double> uniform = InitialDistribution::uniform(Z).probs;
  const std::vector<double> anchored = InitialDistribution::point(Z, 0).probs;

  std::vector<MpgEpisodeData> episodes;
  std::vector<EmissionMatrix> bindings;
  TransitionTensor t = TransitionTensor::uniform(kNumMoves, Z);
  MpgSchemaResult res;

  for (std::size_t e = 0; e < opts.episodes; ++e) {
    episodes.push_back(random_mpg_episode(spec, derive_seed(seed, e)));
    bindings.push_back(e == 0 ? identity : EmissionMatrix::uniform(Z, Z));

    // Flattened segments with their episode's binding and initial state.
    std::vector<Trajectory> segs;
    std::vector<std::size_t> owner;
    std::vector<std::vector<double>> initials;
    for (std::size_t i = 0; i < episodes.size(); ++i) {
      for (std::size_t k = 0; k < episodes[i].segments.size(); ++k) {
        segs.push_back(episodes[i].segments[k]);
        owner.push_back(i);
        initials.push_back(i > 0 && k == 0 ? anchored : uniform);
      }
    }
    double last = std::numeric_limits<double>::infinity();
    for (std::size_t round = 0; round < std::max<std::size_t>(opts.rounds, 1); ++round) {
      const TransitionIndex index(t);
      for (std::size_t i = 1; i < episodes.size(); ++i) {
        std::vector<Trajectory> own;
        std::vector<std::vector<double>> own_init;
        for (std::size_t s = 0; s < segs.size(); ++s) {
          if (owner[s] != i) continue;
          own.push_back(segs[s]);
          own_init.push_back(initials[s]);
        }
        bindings[i] = learn_emissions(index, nullptr, own, own_init, Z, opts.binding).emissions;
      }
      std::vector<EmissionMatrix> per_seg;
      for (std::size_t s = 0; s < segs.size(); ++s) per_seg.push_back(bindings[owner[s]]);
      TransitionFit fit = refine_transitions(t, segs, per_seg, initials, opts.transition);
      t = std::move(fit.transitions);
      const double now = fit.nll_trace.back();
      const bool settled = std::abs(last - now) < opts.round_tol;
      last = now;
      if (settled) break;
    }
    res.nll.push_back(last);
    res.snapshots.push_back(t);
  }
  res.schema.transitions = std::move(t);
  res.schema.name = "mpg";
  return res;
}

MpgEpisodeResult play_mpg_episode(const UngroundedSchema& schema, const MpgSpec& spec,
                                  std::uint64_t seed, const MpgAgentOptions& opts) {
  const std::size_t Z = schema.n_states();
  if (schema.n_actions() != kNumMoves) throw InvalidArgument("mpg: schema needs four moves");
  MpgGame game(spec, seed);
  const std::size_t n_obs = game.n_symbols();
  Explorer explorer(opts.exploration, game.grid(), derive_seed(seed, 1));
  const TransitionIndex index(schema.transitions);
  const std::vector<double> uniform = InitialDistribution::uniform(Z).probs;
  const std::vector<double> anchored = InitialDistribution::point(Z, 0).probs;
  const UngroundedSchema bare{schema.transitions, std::nullopt, schema.name};

  MpgEpisodeResult res;
  std::vector<Trajectory> segs{start_segment(game.symbol())};
  std::vector<std::vector<double>> initials{anchored};
  std::vector<bool> seen(n_obs, false);
  std::size_t n_seen = 0;
  auto see = [&](std::size_t o) {
    if (!seen[o]) ++n_seen;
    seen[o] = true;
  };
  see(game.symbol());
  std::size_t task_start = game.cell();
  std::size_t task_moves = 0;

  auto covered = [&] { return !opts.cover_first || n_seen >= std::min(Z, n_obs); };
  while (!game.done()) {
    if (game.symbol() == game.goal_symbol() && covered()) {
      const std::size_t goal = game.goal_cell();
      res.reward += game.step(kCollect).reward;
      res.tasks.push_back({task_moves, game.grid().bfs_distances(task_start)[goal], true});
      segs.push_back(start_segment(game.symbol()));
      initials.push_back(uniform);
      see(game.symbol());
      task_start = game.cell();
      task_moves = 0;
      continue;
    }
    std::optional<std::size_t> action;
    if (seen[game.goal_symbol()] && covered()) {
      const EmissionMatrix e =
          learn_emissions(index, nullptr, segs, initials, n_obs, opts.binding).emissions;
      GroundedSchema model = grounded(bare, e);
      model.initial.probs = initials.back();
      const Belief belief = localize(model, segs.back());
      Goal goal;
      for (std::size_t s = 0; s < Z; ++s) {
        if (e(s, game.goal_symbol()) >= 0.5) goal.states.push_back(s);
      }
      if (!goal.states.empty() && belief.posterior[belief.map_state] >= opts.localization) {
        try {
          PlanOptions po;
          po.theta = opts.theta;
          const PlanResult p = plan(model, belief, goal, po);
          if (!p.actions.empty()) action = p.actions.front();
        } catch (const NoPathError&) {
        }
      }
    }
    if (action) {
      ++res.plan_steps;
    } else {
      action = explorer.next(game.cell());
      ++res.explore_steps;
    }
    game.step(*action);
    append(segs.back(), *action, game.symbol());
    see(game.symbol());
    ++task_moves;
  }
  if (task_moves > 0) {
    res.tasks.push_back({task_moves, game.grid().bfs_distances(task_start)[game.goal_cell()],
                         false});
  }
  return res;
}

MpgSummary summarize(std::span<const MpgEpisodeResult> episodes) {
  MpgSummary s;
  s.episodes = episodes.size();
  if (episodes.empty()) return s;
  double sum = 0.0, first = 0.0;
  std::size_t n_first = 0, optimal = 0;
  for (const auto& e : episodes) {
    sum += e.reward;
    for (std::size_t i = 0; i < e.tasks.size(); ++i) {
      const MpgTask& t = e.tasks[i];
      if (!t.completed) continue;
      if (i == 0) {
        first += static_cast<double>(t.steps);
        ++n_first;
      } else {
        ++s.later_tasks;
        if (t.steps == t.optimal) ++optimal;
      }
    }
  }
  const double n = static_cast<double>(episodes.size());
  s.mean_reward = sum / n;
  double ss = 0.0;
  for (const auto& e : episodes) ss += (e.reward - s.mean_reward) * (e.reward - s.mean_reward);
  s.sem_reward = episodes.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
  s.mean_first_task_steps = n_first ? first / static_cast<double>(n_first) : 0.0;
  s.optimal_fraction =
      s.later_tasks ? static_cast<double>(optimal) / static_cast<double>(s.later_tasks) : 0.0;
  return s;
}

bool matches_grid(const TransitionTensor& t, const MpgSpec& spec, double threshold) {
  std::vector<std::size_t> id(spec.side * spec.side);
  std::iota(id.begin(), id.end(), std::size_t{0});
  const GroundTruth gt = ground_truth_model(mpg_grid(spec, id));
  return find_isomorphism(thresholded_graph(t, threshold),
                          thresholded_graph(gt.model.transitions, threshold))
      .has_value();
}

}  // namespace cscg
