#pragma once

// Exploration policies that drive an agent through a GridWorld. All streams
// are deterministic given the seed.

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "cscg/model.hpp"
#include "cscg/random.hpp"
#include "cscg/world.hpp"

namespace cscg {

enum class PolicyKind {
  random,
  up_right_random,
  hamiltonian_4x4,
  edge_coverage,
  /// Uniform random action, each repeated three times.
  repeat3,
};

std::string_view to_string(PolicyKind k);
PolicyKind parse_policy(std::string_view name);

class Explorer {
 public:
  /// Throws InvalidArgument for hamiltonian_4x4 on anything but a 4 x 4
  /// allocentric world.
  Explorer(PolicyKind kind, const GridWorld& world, std::uint64_t seed);

  /// Next action given the agent's true state (only edge_coverage looks at
  /// it, as it navigates with simulator ground truth).
  std::size_t next(std::size_t true_state);
  /// Tells the policy which (state, action) pair was executed; used by
  /// edge_coverage when actions come from elsewhere.
  void record(std::size_t state, std::size_t action);

  PolicyKind kind() const noexcept { return kind_; }

 private:
  std::size_t next_edge_coverage(std::size_t state);

  PolicyKind kind_;
  const GridWorld* world_;
  Rng rng_;
  std::size_t counter_ = 0;
  std::size_t repeat_action_ = 0;
  std::vector<std::size_t> visits_;  // n_states x n_actions
};

/// Walk of n_steps observations from `start` under a policy. The visited
/// world states are written to `states` when given.
Trajectory explore(const GridWorld& world, std::size_t start, std::size_t n_steps,
                   PolicyKind kind, std::uint64_t seed,
                   std::vector<std::size_t>* states = nullptr);

}  // namespace cscg
