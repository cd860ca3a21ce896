#pragma once

// Room layouts: occupancy grids with a topology and a per-cell observation
// symbol. Observation maps alias cells by the set of blocked plane
// neighbours, so interiors share one symbol and walls/corners get
// position-type symbols.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cscg {

enum class Topology { plane, cylinder, torus };

std::string_view to_string(Topology t);
/// Throws InvalidArgument on unknown names.
Topology parse_topology(std::string_view name);

inline constexpr int kBlocked = -1;

struct RoomSpec {
  std::string name;
  std::string size_class;
  std::size_t rows = 0;
  std::size_t cols = 0;
  /// Row-major, 1 = accessible.
  std::vector<std::uint8_t> accessible;
  /// Row-major observation symbol per cell, kBlocked on blocked cells.
  std::vector<int> observation;
  Topology topology = Topology::plane;

  bool open(std::size_t r, std::size_t c) const { return accessible[r * cols + c] != 0; }
  int obs(std::size_t r, std::size_t c) const { return observation[r * cols + c]; }
  std::size_t n_obs() const;
  std::size_t n_cells() const;

  bool operator==(const RoomSpec&) const = default;
};

/// Blocked-neighbour bits in plane geometry (out of bounds counts as blocked).
enum NeighbourBit : unsigned { kWallUp = 1, kWallDown = 2, kWallLeft = 4, kWallRight = 8 };
unsigned wall_mask(const RoomSpec& room, std::size_t r, std::size_t c);

/// Observation map from wall masks: distinct masks present get symbols 0, 1,
/// ... in increasing mask order. With interior_symbols > 1, cells with mask
/// 0 draw one of that many interior symbols (seeded); those symbols follow
/// the boundary symbols.
std::vector<int> aliased_observation_map(const RoomSpec& layout,
                                         std::size_t interior_symbols = 1,
                                         std::uint64_t seed = 0);

/// Builds a room from an occupancy grid and assigns the aliased map.
RoomSpec make_room(std::string name, std::size_t rows, std::size_t cols,
                   std::vector<std::uint8_t> accessible, Topology topology,
                   std::string size_class = {});

/// Throws InvalidArgument unless the room has an accessible cell, its
/// symbols are contiguous from 0 and every accessible cell reaches every
/// other one.
void check_room(const RoomSpec& room);

/// Relabels symbols: new symbol = perm[old symbol].
RoomSpec permute_observations(const RoomSpec& room,
                              std::span<const std::size_t> perm);
/// Uniformly random permutation of n symbols.
std::vector<std::size_t> random_permutation(std::size_t n, std::uint64_t seed);

enum class RoomType { rectangle, cylinder, torus, square_with_hole, u_shape };
enum class SizeClass { small, medium, large };

inline constexpr RoomType kRoomTypes[] = {RoomType::rectangle, RoomType::cylinder,
                                          RoomType::torus, RoomType::square_with_hole,
                                          RoomType::u_shape};
inline constexpr SizeClass kSizeClasses[] = {SizeClass::small, SizeClass::medium,
                                             SizeClass::large};

std::string_view to_string(RoomType t);
std::string_view to_string(SizeClass s);
RoomType parse_room_type(std::string_view name);
SizeClass parse_size_class(std::string_view name);

/// The built-in room of a type and size class. Sizes are chosen so the
/// types have similar numbers of accessible cells per size class.
RoomSpec builtin_room(RoomType type, SizeClass size);

/// Same room type with `extra` more rows and columns than the medium size
/// (hole and barrier stay centred / proportionate).
RoomSpec grown_room(RoomType type, std::size_t extra);

/// Ten digit-shaped bitmap rooms (index = digit), all plane topology.
RoomSpec digit_room(std::size_t digit);
inline constexpr std::size_t kDigitRooms = 10;

/// Plain PBM (P1) bitmap: 1 = accessible. Comments ('#') are skipped.
RoomSpec read_pbm(std::istream& in, std::string name);
RoomSpec load_pbm(const std::filesystem::path& path);
void write_pbm(std::ostream& out, const RoomSpec& room);

/// Room text format:
///
///   room <name>
///   topology plane|cylinder|torus
///   size <class>            (optional)
///   grid
///   ..#..
///   .....
///   end
///
/// '.' is accessible, '#' blocked; '#' lines elsewhere are comments. The
/// observation map is the aliased map of the grid.
RoomSpec read_room(std::istream& in);
RoomSpec load_room(const std::filesystem::path& path);
void write_room(std::ostream& out, const RoomSpec& room);

/// Loads .pbm files as bitmaps and anything else as the room text format.
RoomSpec load_room_file(const std::filesystem::path& path);

}  // namespace cscg
