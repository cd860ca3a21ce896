#include "cscg/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cscg/error.hpp"
#include "cscg/inference.hpp"
#include "cscg/random.hpp"

namespace cscg {

namespace {

constexpr double kRelTol = 1e-12;

bool close_enough(double v, double best) { return v >= best * (1.0 - kRelTol); }

}  // namespace

TransitionTensor smooth_diagonal(const TransitionTensor& t, double lambda) {
  if (!(lambda >= 0.0)) throw InvalidArgument("smooth_diagonal: lambda must be non-negative");
  TransitionTensor out = t;
  if (lambda == 0.0) return out;
  const double add = lambda * t.max_entry();
  for (std::size_t a = 0; a < t.n_actions(); ++a) {
    for (std::size_t s = 0; s < t.n_states(); ++s) out(a, s, s) += add;
  }
  out.normalize_rows();
  return out;
}

double Belief::entropy() const {
  double h = 0.0;
  for (double p : posterior) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

Belief localize(const GroundedSchema& model, const Trajectory& history) {
  if (history.empty()) throw InvalidArgument("localize: empty history");
  ForwardBackwardOptions fo;
  fo.backward = false;
  const MessageSet m = forward_backward(model, history, fo);
  Belief b;
  b.posterior = m.dense_alpha(history.size() - 1);
  const double sum = std::accumulate(b.posterior.begin(), b.posterior.end(), 0.0);
  for (double& p : b.posterior) p /= sum;
  b.path = map_decode(model, history).states;
  b.map_state = b.path.back();
  return b;
}

Goal Goal::at(std::vector<std::size_t> states) {
  std::sort(states.begin(), states.end());
  states.erase(std::unique(states.begin(), states.end()), states.end());
  return Goal{std::move(states)};
}

Goal Goal::symbol(const EmissionMatrix& emissions, std::size_t obs) {
  if (obs >= emissions.n_obs()) throw InvalidArgument("goal symbol out of range");
  const auto am = emissions.argmax_observations();
  Goal g;
  for (std::size_t s = 0; s < am.size(); ++s) {
    if (am[s] == obs) g.states.push_back(s);
  }
  return g;
}

bool Goal::contains(std::size_t s) const {
  return std::binary_search(states.begin(), states.end(), s);
}

PlanResult plan(const TransitionTensor& t, std::size_t start, const Goal& goal,
                const PlanOptions& opts) {
  const std::size_t Z = t.n_states();
  const std::size_t A = t.n_actions();
  if (goal.states.empty()) throw InvalidArgument("plan: empty goal set");
  if (start >= Z) throw InvalidArgument("plan: start state out of range");
  for (std::size_t g : goal.states) {
    if (g >= Z) throw InvalidArgument("plan: goal state out of range");
  }
  std::vector<bool> is_goal(Z, false);
  for (std::size_t g : goal.states) is_goal[g] = true;

  PlanResult res;
  res.states.push_back(start);
  if (is_goal[start]) return res;

  const std::size_t H = opts.horizon == 0 ? 4 * Z : opts.horizon;
  // v[h][s]: probability of the best path from s that enters the goal set
  // within h steps. Goal states absorb.
  std::vector<std::vector<double>> v(1, std::vector<double>(Z, 0.0));
  for (std::size_t s = 0; s < Z; ++s) v[0][s] = is_goal[s] ? 1.0 : 0.0;
  for (std::size_t h = 1; h <= H; ++h) {
    std::vector<double> next(Z, 0.0);
    const auto& prev = v.back();
    for (std::size_t s = 0; s < Z; ++s) {
      if (is_goal[s]) {
        next[s] = 1.0;
        continue;
      }
      double best = 0.0;
      for (std::size_t a = 0; a < A; ++a) {
        auto row = t.row(a, s);
        for (std::size_t k = 0; k < Z; ++k) best = std::max(best, row[k] * prev[k]);
      }
      next[s] = best;
    }
    const bool same = next == prev;
    v.push_back(std::move(next));
    if (same) break;
  }
  const double best = v.back()[start];
  if (best <= 0.0 || best < opts.theta) {
    throw NoPathError("plan: best path probability " + std::to_string(best) +
                      " is below the threshold " + std::to_string(opts.theta));
  }
  std::size_t length = 1;
  while (!close_enough(v[length][start], best)) ++length;

  std::size_t s = start;
  for (std::size_t r = length; r > 0 && !is_goal[s]; --r) {
    const double target = v[r][s];
    bool found = false;
    for (std::size_t a = 0; a < A && !found; ++a) {
      auto row = t.row(a, s);
      for (std::size_t k = 0; k < Z; ++k) {
        if (row[k] > 0.0 && close_enough(row[k] * v[r - 1][k], target)) {
          res.actions.push_back(a);
          res.states.push_back(k);
          res.success_probability *= row[k];
          s = k;
          found = true;
          break;
        }
      }
    }
    if (!found) throw Error("plan: backtracking failed");
  }
  return res;
}

PlanResult plan(const GroundedSchema& model, const Belief& belief, const Goal& goal,
                const PlanOptions& opts) {
  return plan(model.transitions, belief.map_state, goal, opts);
}

EpisodeLog navigate(const UngroundedSchema& schema, const GridWorld& world,
                    Trajectory history, std::size_t current, std::size_t goal_step,
                    std::size_t goal_state, const NavigateOptions& opts) {
  if (schema.n_actions() != world.n_actions()) {
    throw InvalidArgument("navigate: schema and world have different action counts");
  }
  if (history.empty()) throw InvalidArgument("navigate: empty history");
  if (goal_step >= history.size()) throw InvalidArgument("navigate: goal step out of range");
  if (opts.tie_clones && !schema.clones) {
    throw InvalidArgument("navigate: clone tying needs clone structure");
  }
  const std::size_t n_obs = world.n_obs();
  const UngroundedSchema smooth{smooth_diagonal(schema.transitions, opts.lambda),
                                schema.clones, schema.name};
  const TransitionIndex index(smooth.transitions);
  const std::vector<double> pi = InitialDistribution::uniform(smooth.n_states()).probs;
  Rng rng(opts.seed);

  EpisodeLog log;
  std::size_t used = 0;
  auto take = [&](std::size_t a, std::vector<double>& filter, const GroundedSchema& model,
                  bool replanned) {
    current = world.step(current, a);
    const std::size_t o = world.observe(current);
    history.actions.push_back(a);
    history.observations.push_back(o);
    ++used;
    std::vector<double> next(model.n_states(), 0.0);
    index.forward(a, filter, next);
    double sum = 0.0;
    for (std::size_t k = 0; k < next.size(); ++k) {
      next[k] *= model.emissions(k, o);
      sum += next[k];
    }
    if (sum > 0.0) {
      for (double& p : next) p /= sum;
    }
    filter = std::move(next);
    double h = 0.0;
    for (double p : filter) {
      if (p > 0.0) h -= p * std::log(p);
    }
    log.steps.push_back({a, o, h, replanned});
    return o;
  };

  while (true) {
    const EmissionMatrix e =
        learn_emissions(index, opts.tie_clones ? &*smooth.clones : nullptr,
                        std::span<const Trajectory>(&history, 1),
                        std::span<const std::vector<double>>(&pi, 1), n_obs, opts.binding)
            .emissions;
    const GroundedSchema model = grounded(smooth, e);
    const Belief belief = localize(model, history);
    const Goal goal = Goal::at({belief.path[goal_step]});
    double mass = 0.0;
    for (std::size_t g : goal.states) mass += belief.posterior[g];
    if (goal.contains(belief.map_state) && mass >= opts.goal_mass) {
      log.believed_goal = true;
      break;
    }
    if (used >= opts.step_budget) break;

    std::vector<double> filter = belief.posterior;
    const auto expected = model.emissions.argmax_observations();
    PlanResult p;
    try {
      p = plan(model, belief, goal, opts.plan);
    } catch (const NoPathError&) {
      take(uniform_index(rng, world.n_actions()), filter, model, true);
      continue;
    }
    const bool replanned = log.plans > 0;
    ++log.plans;
    if (p.actions.empty()) {
      // MAP already at the goal but the belief is too diffuse: gather evidence.
      take(uniform_index(rng, world.n_actions()), filter, model, replanned);
      continue;
    }
    for (std::size_t i = 0; i < p.actions.size() && used < opts.step_budget; ++i) {
      const std::size_t o = take(p.actions[i], filter, model, replanned && i == 0);
      if (o != expected[p.states[i + 1]]) break;
    }
  }
  log.replans = log.plans > 0 ? log.plans - 1 : 0;
  log.final_state = current;
  log.success = current == goal_state;
  log.final_distance = world.manhattan(current, goal_state);
  return log;
}

}  // namespace cscg
