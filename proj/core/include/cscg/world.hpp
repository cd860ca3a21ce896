#pragma once

// Deterministic gridworld simulators built from rooms: allocentric (four
// compass moves) or egocentric (forward / turn left / turn right with a
// heading), single rooms or rooms joined by doors. Every simulator also
// yields its exact CSCG (the ground-truth model).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cscg/composition.hpp"
#include "cscg/model.hpp"
#include "cscg/random.hpp"
#include "cscg/rooms.hpp"

namespace cscg {

enum Move : std::size_t { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
inline constexpr std::size_t kNumMoves = 4;
enum EgoAction : std::size_t { kForward = 0, kTurnLeft = 1, kTurnRight = 2 };
inline constexpr std::size_t kNumEgoActions = 3;

/// Headings in egocentric worlds, clockwise from north.
enum Heading : std::size_t { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3 };

std::size_t opposite(Move m);

/// A doorway: moving `action` from `from` (a cell of room `from_room`) leads
/// to `to` (a cell of room `to_room`). Doors are two-way; the reverse move
/// is implied.
struct Door {
  std::size_t from_room = 0;
  std::size_t from_row = 0, from_col = 0;
  std::size_t action = kRight;
  std::size_t to_room = 0;
  std::size_t to_row = 0, to_col = 0;
};

struct ComposedSpec {
  std::vector<RoomSpec> rooms;
  /// Placement of each room's top-left corner in a shared frame, used for
  /// Manhattan distances.
  std::vector<std::pair<long, long>> offsets;
  std::vector<Door> doors;
  /// Shared: every room keeps its own symbols (alphabets overlap).
  /// Disjoint: room h's symbols are shifted past those of rooms < h.
  bool shared_alphabet = true;
};

/// Rooms placed left to right, one column apart, with a door between each
/// neighbouring pair: from the rightmost open cell of a row of the left room
/// (moving right) to the leftmost open cell of the same row of the right
/// room. The row is the one shared by both rooms closest to their common
/// middle. Throws InvalidArgument when two neighbours share no row with open
/// cells.
ComposedSpec side_by_side(std::vector<RoomSpec> rooms, bool shared_alphabet = true);

struct Position {
  std::size_t room = 0;
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t heading = 0;
  bool operator==(const Position&) const = default;
};

class GridWorld {
 public:
  GridWorld() = default;
  /// Throws InvalidArgument on invalid rooms or doors.
  explicit GridWorld(const RoomSpec& room, bool egocentric = false);
  explicit GridWorld(const ComposedSpec& spec);

  std::size_t n_states() const noexcept { return positions_.size(); }
  std::size_t n_actions() const noexcept { return n_actions_; }
  std::size_t n_obs() const noexcept { return n_obs_; }
  bool egocentric() const noexcept { return egocentric_; }

  /// Pure transition function. Throws InvalidArgument on a bad action.
  std::size_t step(std::size_t state, std::size_t action) const;
  std::size_t observe(std::size_t state) const { return obs_[state]; }
  const Position& position(std::size_t state) const { return positions_[state]; }
  std::optional<std::size_t> state_at(const Position& p) const;
  /// Room index of each state.
  std::size_t room_of(std::size_t state) const { return positions_[state].room; }
  std::size_t n_rooms() const noexcept { return n_rooms_; }

  /// Manhattan distance between the cells of two states in the shared frame.
  std::size_t manhattan(std::size_t a, std::size_t b) const;
  /// Shortest number of actions from `from` to every state (SIZE_MAX when
  /// unreachable).
  std::vector<std::size_t> bfs_distances(std::size_t from) const;

  /// Relabels observations: new symbol = perm[old].
  GridWorld with_permuted_observations(std::span<const std::size_t> perm) const;

  /// Seeded uniform random walk of n_steps observations starting at `start`.
  /// The visited states are written to `states` when given.
  Trajectory random_walk(std::size_t start, std::size_t n_steps, Rng& rng,
                         std::vector<std::size_t>* states = nullptr) const;
  /// Observations along a fixed action sequence.
  Trajectory rollout(std::size_t start, std::span<const std::size_t> actions,
                     std::vector<std::size_t>* states = nullptr) const;

 private:
  void add_room_cells(const RoomSpec& room, std::size_t room_index,
                      int symbol_offset);

  std::size_t n_actions_ = kNumMoves;
  std::size_t n_obs_ = 0;
  std::size_t n_rooms_ = 0;
  bool egocentric_ = false;
  std::vector<Position> positions_;
  std::vector<std::size_t> obs_;
  std::vector<std::size_t> next_;  // n_states x n_actions
  std::vector<std::pair<long, long>> offsets_;
  // (room, row, col, heading) -> state, dense per room.
  std::vector<std::vector<std::size_t>> lookup_;
  std::vector<std::size_t> room_cols_;
};

/// The exact CSCG of a world: one hidden state per world state, ordered by
/// observation so that clones are contiguous.
struct GroundTruth {
  GroundedSchema model;
  std::vector<std::size_t> model_of_world;  // world state -> model state
  std::vector<std::size_t> world_of_model;  // model state -> world state
};
GroundTruth ground_truth_model(const GridWorld& world);

/// Frontier of each room for composition experiments: door cells of a room
/// are its entries; (door cell, door action) pairs are its exits. States are
/// indexed in the room's ground-truth model.
std::vector<FrontierSpec> door_frontiers(const ComposedSpec& spec);

/// Stand-in for image embeddings: a fixed random vector per symbol plus
/// Gaussian noise.
class ContinuousEmitter {
 public:
  ContinuousEmitter(std::size_t n_symbols, std::size_t dim, double noise_std,
                    std::uint64_t seed);

  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> prototype(std::size_t symbol) const {
    return {prototypes_.data() + symbol * dim_, dim_};
  }
  std::vector<double> emit(std::size_t symbol, Rng& rng) const;
  /// Adds `delta` to every prototype coordinate.
  ContinuousEmitter shifted(double delta) const;

 private:
  std::size_t dim_;
  double noise_std_;
  std::vector<double> prototypes_;
};

/// Standard normal draw (Box-Muller on uniform01).
double standard_normal(Rng& rng);

}  // namespace cscg
