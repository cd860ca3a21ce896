#include "cscg/exploration.hpp"

#include <algorithm>
#include <queue>

#include "cscg/error.hpp"

namespace cscg {

std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::random: return "random";
    case PolicyKind::up_right_random: return "up-right-random";
    case PolicyKind::hamiltonian_4x4: return "hamiltonian-4x4";
    case PolicyKind::edge_coverage: return "edge-coverage";
    case PolicyKind::repeat3: return "repeat-3";
  }
  return "?";
}

PolicyKind parse_policy(std::string_view name) {
  for (PolicyKind k : {PolicyKind::random, PolicyKind::up_right_random,
                       PolicyKind::hamiltonian_4x4, PolicyKind::edge_coverage,
                       PolicyKind::repeat3}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown exploration policy '" + std::string(name) + "'");
}

Explorer::Explorer(PolicyKind kind, const GridWorld& world, std::uint64_t seed)
    : kind_(kind), world_(&world), rng_(seed) {
  if (kind == PolicyKind::hamiltonian_4x4) {
    bool ok = !world.egocentric() && world.n_states() == 16 && world.n_rooms() == 1;
    for (std::size_t s = 0; ok && s < world.n_states(); ++s) {
      ok = world.position(s).row < 4 && world.position(s).col < 4;
    }
    if (!ok) throw InvalidArgument("hamiltonian-4x4 needs a 4 x 4 grid");
  }
  if ((kind == PolicyKind::up_right_random) && world.egocentric()) {
    throw InvalidArgument("up-right-random needs compass moves");
  }
  if (kind == PolicyKind::edge_coverage) {
    visits_.assign(world.n_states() * world.n_actions(), 0);
  }
}

void Explorer::record(std::size_t state, std::size_t action) {
  if (kind_ == PolicyKind::edge_coverage) ++visits_[state * world_->n_actions() + action];
}

std::size_t Explorer::next(std::size_t true_state) {
  switch (kind_) {
    case PolicyKind::random:
      return uniform_index(rng_, world_->n_actions());
    case PolicyKind::up_right_random:
      return uniform_index(rng_, 2) == 0 ? kUp : kRight;
    case PolicyKind::hamiltonian_4x4: {
      const std::size_t a = (counter_ % 4 == 3) ? kRight : kUp;
      ++counter_;
      return a;
    }
    case PolicyKind::repeat3:
      if (counter_ % 3 == 0) repeat_action_ = uniform_index(rng_, world_->n_actions());
      ++counter_;
      return repeat_action_;
    case PolicyKind::edge_coverage:
      return next_edge_coverage(true_state);
  }
  return 0;
}

std::size_t Explorer::next_edge_coverage(std::size_t state) {
  // Breadth-first search (actions in index order) for the nearest state that
  // has a least-visited action, then take the first step towards it.
  const std::size_t A = world_->n_actions();
  const std::size_t least = *std::min_element(visits_.begin(), visits_.end());
  const std::size_t S = world_->n_states();
  std::vector<std::size_t> first_action(S, SIZE_MAX);
  std::vector<bool> seen(S, false);
  std::queue<std::size_t> q;
  seen[state] = true;
  q.push(state);
  while (!q.empty()) {
    const std::size_t s = q.front();
    q.pop();
    for (std::size_t a = 0; a < A; ++a) {
      if (visits_[s * A + a] == least) {
        return s == state ? a : first_action[s];
      }
    }
    for (std::size_t a = 0; a < A; ++a) {
      const std::size_t t = world_->step(s, a);
      if (seen[t]) continue;
      seen[t] = true;
      first_action[t] = s == state ? a : first_action[s];
      q.push(t);
    }
  }
  return uniform_index(rng_, A);  // least-visited pair unreachable
}

Trajectory explore(const GridWorld& world, std::size_t start, std::size_t n_steps,
                   PolicyKind kind, std::uint64_t seed, std::vector<std::size_t>* states) {
  Explorer ex(kind, world, seed);
  std::vector<std::size_t> actions;
  actions.reserve(n_steps);
  std::size_t s = start;
  for (std::size_t n = 1; n < n_steps; ++n) {
    const std::size_t a = ex.next(s);
    ex.record(s, a);
    actions.push_back(a);
    s = world.step(s, a);
  }
  return world.rollout(start, actions, states);
}

}  // namespace cscg
