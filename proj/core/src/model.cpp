#include "cscg/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "cscg/error.hpp"
#include "cscg/random.hpp"

namespace cscg {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

TransitionTensor::TransitionTensor(std::size_t n_actions, std::size_t n_states)
    : n_actions_(n_actions),
      n_states_(n_states),
      probs_(n_actions * n_states * n_states, 0.0) {}

TransitionTensor::TransitionTensor(std::size_t n_actions, std::size_t n_states,
                                   std::vector<double> probs)
    : n_actions_(n_actions), n_states_(n_states), probs_(std::move(probs)) {
  if (probs_.size() != n_actions * n_states * n_states) {
    throw InvalidArgument("transition tensor: data size does not match "
                          "n_actions * n_states^2");
  }
}

TransitionTensor TransitionTensor::uniform(std::size_t n_actions,
                                           std::size_t n_states) {
  if (n_states == 0) throw InvalidArgument("transition tensor: zero states");
  return TransitionTensor(
      n_actions, n_states,
      std::vector<double>(n_actions * n_states * n_states,
                          1.0 / static_cast<double>(n_states)));
}

TransitionTensor TransitionTensor::random(std::size_t n_actions,
                                          std::size_t n_states,
                                          std::uint64_t seed) {
  Rng rng(seed);
  TransitionTensor t(n_actions, n_states);
  for (double& p : t.probs_) p = uniform01(rng);
  t.normalize_rows();
  return t;
}

void TransitionTensor::normalize_rows() {
  for (std::size_t a = 0; a < n_actions_; ++a) {
    for (std::size_t j = 0; j < n_states_; ++j) {
      auto r = row(a, j);
      double s = std::accumulate(r.begin(), r.end(), 0.0);
      if (s > 0.0) {
        for (double& p : r) p /= s;
      }
    }
  }
}

double TransitionTensor::max_entry() const {
  return probs_.empty() ? 0.0 : *std::max_element(probs_.begin(), probs_.end());
}

CloneStructure::CloneStructure(std::vector<std::size_t> group_of_state)
    : group_of_state_(std::move(group_of_state)) {
  if (group_of_state_.empty()) {
    throw InvalidArgument("clone structure: no states");
  }
  if (group_of_state_.front() != 0) {
    throw InvalidArgument("clone structure: first state must be in group 0");
  }
  for (std::size_t s = 1; s < group_of_state_.size(); ++s) {
    const std::size_t prev = group_of_state_[s - 1];
    const std::size_t cur = group_of_state_[s];
    if (cur != prev && cur != prev + 1) {
      throw InvalidArgument(
          "clone structure: groups must be contiguous and non-empty (state " +
          std::to_string(s) + ")");
    }
  }
  sizes_.assign(group_of_state_.back() + 1, 0);
  for (std::size_t g : group_of_state_) ++sizes_[g];
  begin_.resize(sizes_.size());
  std::exclusive_scan(sizes_.begin(), sizes_.end(), begin_.begin(),
                      std::size_t{0});
}

CloneStructure CloneStructure::from_sizes(std::span<const std::size_t> sizes) {
  std::vector<std::size_t> groups;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    if (sizes[g] == 0) {
      throw InvalidArgument("clone structure: group " + std::to_string(g) +
                            " is empty");
    }
    groups.insert(groups.end(), sizes[g], g);
  }
  return CloneStructure(std::move(groups));
}

CloneStructure CloneStructure::uniform(std::size_t n_groups,
                                       std::size_t clones_per_group) {
  std::vector<std::size_t> sizes(n_groups, clones_per_group);
  return from_sizes(sizes);
}

EmissionMatrix::EmissionMatrix(std::size_t n_states, std::size_t n_obs,
                               std::vector<double> probs)
    : n_states_(n_states), n_obs_(n_obs), probs_(std::move(probs)) {
  if (probs_.size() != n_states * n_obs) {
    throw InvalidArgument("emission matrix: data size does not match "
                          "n_states * n_obs");
  }
}

EmissionMatrix EmissionMatrix::uniform(std::size_t n_states, std::size_t n_obs) {
  if (n_obs == 0) throw InvalidArgument("emission matrix: zero observations");
  return EmissionMatrix(
      n_states, n_obs,
      std::vector<double>(n_states * n_obs, 1.0 / static_cast<double>(n_obs)));
}

EmissionMatrix EmissionMatrix::deterministic(const CloneStructure& clones) {
  return deterministic(clones.group_of_state(), clones.n_groups());
}

EmissionMatrix EmissionMatrix::deterministic(
    std::span<const std::size_t> obs_of_state, std::size_t n_obs) {
  EmissionMatrix e(obs_of_state.size(), n_obs,
                   std::vector<double>(obs_of_state.size() * n_obs, 0.0));
  for (std::size_t s = 0; s < obs_of_state.size(); ++s) {
    if (obs_of_state[s] >= n_obs) {
      throw InvalidArgument("emission matrix: observation index out of range");
    }
    e(s, obs_of_state[s]) = 1.0;
  }
  return e;
}

bool EmissionMatrix::is_deterministic() const {
  for (std::size_t i = 0; i < n_states_; ++i) {
    std::size_t ones = 0;
    for (double p : row(i)) {
      if (p == 1.0) {
        ++ones;
      } else if (p != 0.0) {
        return false;
      }
    }
    if (ones != 1) return false;
  }
  return true;
}

bool EmissionMatrix::respects(const CloneStructure& clones) const {
  if (clones.n_states() != n_states_) return false;
  for (std::size_t g = 0; g < clones.n_groups(); ++g) {
    const auto first = row(clones.group_begin(g));
    for (std::size_t s = clones.group_begin(g) + 1; s < clones.group_end(g);
         ++s) {
      if (!std::equal(first.begin(), first.end(), row(s).begin())) return false;
    }
  }
  return true;
}

std::vector<std::size_t> EmissionMatrix::argmax_observations() const {
  std::vector<std::size_t> out(n_states_);
  for (std::size_t i = 0; i < n_states_; ++i) {
    auto r = row(i);
    out[i] = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) -
                                      r.begin());
  }
  return out;
}

InitialDistribution InitialDistribution::uniform(std::size_t n_states) {
  return {std::vector<double>(n_states, 1.0 / static_cast<double>(n_states))};
}

InitialDistribution InitialDistribution::point(std::size_t n_states,
                                               std::size_t state) {
  InitialDistribution d{std::vector<double>(n_states, 0.0)};
  d.probs.at(state) = 1.0;
  return d;
}

UngroundedSchema ungrounded(const GroundedSchema& model, bool keep_clones) {
  UngroundedSchema s;
  s.transitions = model.transitions;
  if (keep_clones) s.clones = model.clones;
  s.name = model.name;
  return s;
}

GroundedSchema grounded(const UngroundedSchema& schema,
                        EmissionMatrix emissions) {
  if (emissions.n_states() != schema.n_states()) {
    throw InvalidArgument("grounding: emission rows do not match schema states");
  }
  GroundedSchema g;
  g.transitions = schema.transitions;
  if (schema.clones) {
    g.clones = *schema.clones;
  } else {
    std::vector<std::size_t> groups(schema.n_states());
    std::iota(groups.begin(), groups.end(), std::size_t{0});
    g.clones = CloneStructure(std::move(groups));
  }
  g.emissions = std::move(emissions);
  g.initial = InitialDistribution::uniform(schema.n_states());
  g.name = schema.name;
  return g;
}

Trajectory Trajectory::slice(std::size_t begin, std::size_t end) const {
  if (begin >= end || end > observations.size()) {
    throw InvalidArgument("trajectory slice out of range");
  }
  Trajectory t;
  t.observations.assign(observations.begin() + static_cast<std::ptrdiff_t>(begin),
                        observations.begin() + static_cast<std::ptrdiff_t>(end));
  t.actions.assign(actions.begin() + static_cast<std::ptrdiff_t>(begin),
                   actions.begin() + static_cast<std::ptrdiff_t>(end - 1));
  return t;
}

void check_trajectory(const Trajectory& traj, std::size_t n_actions,
                      std::size_t n_obs) {
  if (traj.observations.empty()) {
    throw InvalidArgument("trajectory is empty");
  }
  if (traj.actions.size() + 1 != traj.observations.size()) {
    throw InvalidArgument("trajectory: expected one fewer action than "
                          "observations");
  }
  for (std::size_t n = 0; n < traj.observations.size(); ++n) {
    if (traj.observations[n] >= n_obs) {
      throw InvalidArgument("trajectory: observation index " +
                            std::to_string(traj.observations[n]) +
                            " out of range at step " + std::to_string(n));
    }
  }
  for (std::size_t n = 0; n < traj.actions.size(); ++n) {
    if (traj.actions[n] >= n_actions) {
      throw InvalidArgument("trajectory: action index " +
                            std::to_string(traj.actions[n]) +
                            " out of range at step " + std::to_string(n));
    }
  }
}

std::vector<Violation> validate(const TransitionTensor& t) {
  std::vector<Violation> out;
  if (t.n_actions() == 0 || t.n_states() == 0) {
    out.push_back({Violation::Kind::dimension,
                   "transition tensor needs at least one action and state"});
    return out;
  }
  for (std::size_t a = 0; a < t.n_actions(); ++a) {
    for (std::size_t j = 0; j < t.n_states(); ++j) {
      auto r = t.row(a, j);
      bool in_range = std::all_of(r.begin(), r.end(), [](double p) {
        return p >= 0.0 && p <= 1.0;
      });
      if (!in_range) {
        out.push_back({Violation::Kind::transition_range,
                       "transition row (action " + std::to_string(a) +
                           ", from-state " + std::to_string(j) +
                           ") has an entry outside [0, 1]"});
      }
      double s = std::accumulate(r.begin(), r.end(), 0.0);
      if (std::abs(s - 1.0) > kStochasticTolerance) {
        out.push_back({Violation::Kind::transition_row_sum,
                       "transition row (action " + std::to_string(a) +
                           ", from-state " + std::to_string(j) + ") sums to " +
                           fmt_double(s)});
      }
    }
  }
  return out;
}

std::vector<Violation> validate(const GroundedSchema& m) {
  std::vector<Violation> out = validate(m.transitions);
  const std::size_t n = m.transitions.n_states();
  if (m.emissions.n_states() != n || m.clones.n_states() != n ||
      m.initial.size() != n) {
    out.push_back({Violation::Kind::dimension,
                   "state counts differ between T (" + std::to_string(n) +
                       "), E (" + std::to_string(m.emissions.n_states()) +
                       "), C (" + std::to_string(m.clones.n_states()) +
                       ") and pi (" + std::to_string(m.initial.size()) + ")"});
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto r = m.emissions.row(i);
    if (!std::all_of(r.begin(), r.end(),
                     [](double p) { return p >= 0.0 && p <= 1.0; })) {
      out.push_back({Violation::Kind::emission_range,
                     "emission row " + std::to_string(i) +
                         " has an entry outside [0, 1]"});
    }
    double s = std::accumulate(r.begin(), r.end(), 0.0);
    if (std::abs(s - 1.0) > kStochasticTolerance) {
      out.push_back({Violation::Kind::emission_row_sum,
                     "emission row " + std::to_string(i) + " sums to " +
                         fmt_double(s)});
    }
  }
  for (std::size_t g = 0; g < m.clones.n_groups(); ++g) {
    const std::size_t first = m.clones.group_begin(g);
    for (std::size_t s = first + 1; s < m.clones.group_end(g); ++s) {
      auto a = m.emissions.row(first);
      if (!std::equal(a.begin(), a.end(), m.emissions.row(s).begin())) {
        out.push_back({Violation::Kind::clone_structure,
                       "clone structure: emission rows of states " +
                           std::to_string(first) + " and " + std::to_string(s) +
                           " (group " + std::to_string(g) + ") differ"});
      }
    }
  }
  const auto& pi = m.initial.probs;
  double s = std::accumulate(pi.begin(), pi.end(), 0.0);
  bool in_range =
      std::all_of(pi.begin(), pi.end(), [](double p) { return p >= 0.0 && p <= 1.0; });
  if (!in_range || std::abs(s - 1.0) > kStochasticTolerance) {
    out.push_back({Violation::Kind::initial_distribution,
                   "initial distribution sums to " + fmt_double(s) +
                       (in_range ? "" : " or has entries outside [0, 1]")});
  }
  return out;
}

TransitionTensor block_diagonal(std::span<const UngroundedSchema> schemas) {
  if (schemas.empty()) throw InvalidArgument("block_diagonal: no schemas");
  const std::size_t n_actions = schemas.front().n_actions();
  std::size_t total = 0;
  for (const auto& s : schemas) {
    if (s.n_actions() != n_actions) {
      throw InvalidArgument("block_diagonal: schemas have different action "
                            "counts (" + std::to_string(n_actions) + " vs " +
                            std::to_string(s.n_actions()) + ")");
    }
    total += s.n_states();
  }
  TransitionTensor out(n_actions, total);
  std::size_t offset = 0;
  for (const auto& s : schemas) {
    for (std::size_t a = 0; a < n_actions; ++a) {
      for (std::size_t j = 0; j < s.n_states(); ++j) {
        auto src = s.transitions.row(a, j);
        auto dst = out.row(a, offset + j);
        std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(offset));
      }
    }
    offset += s.n_states();
  }
  return out;
}

std::string export_graph(const TransitionTensor& t, double threshold) {
  std::string out;
  for (std::size_t a = 0; a < t.n_actions(); ++a) {
    for (std::size_t j = 0; j < t.n_states(); ++j) {
      for (std::size_t k = 0; k < t.n_states(); ++k) {
        const double p = t(a, j, k);
        if (p > threshold) {
          out += std::to_string(a) + ' ' + std::to_string(j) + ' ' +
                 std::to_string(k) + ' ' + fmt_double(p) + '\n';
        }
      }
    }
  }
  return out;
}

}  // namespace cscg
