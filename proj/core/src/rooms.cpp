#include "cscg/rooms.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <queue>
#include <sstream>

#include "cscg/error.hpp"
#include "cscg/random.hpp"

namespace cscg {

std::string_view to_string(Topology t) {
  switch (t) {
    case Topology::plane: return "plane";
    case Topology::cylinder: return "cylinder";
    case Topology::torus: return "torus";
  }
  return "?";
}

Topology parse_topology(std::string_view name) {
  if (name == "plane") return Topology::plane;
  if (name == "cylinder") return Topology::cylinder;
  if (name == "torus") return Topology::torus;
  throw InvalidArgument("unknown topology '" + std::string(name) + "'");
}

std::size_t RoomSpec::n_obs() const {
  int mx = -1;
  for (int o : observation) mx = std::max(mx, o);
  return static_cast<std::size_t>(mx + 1);
}

std::size_t RoomSpec::n_cells() const {
  return static_cast<std::size_t>(std::count(accessible.begin(), accessible.end(), 1));
}

unsigned wall_mask(const RoomSpec& room, std::size_t r, std::size_t c) {
  unsigned m = 0;
  if (r == 0 || !room.open(r - 1, c)) m |= kWallUp;
  if (r + 1 >= room.rows || !room.open(r + 1, c)) m |= kWallDown;
  if (c == 0 || !room.open(r, c - 1)) m |= kWallLeft;
  if (c + 1 >= room.cols || !room.open(r, c + 1)) m |= kWallRight;
  return m;
}

std::vector<int> aliased_observation_map(const RoomSpec& layout,
                                         std::size_t interior_symbols,
                                         std::uint64_t seed) {
  if (interior_symbols == 0) throw InvalidArgument("need at least one interior symbol");
  const std::size_t n = layout.rows * layout.cols;
  std::vector<unsigned> mask(n, 0);
  std::array<bool, 16> present{};
  for (std::size_t r = 0; r < layout.rows; ++r) {
    for (std::size_t c = 0; c < layout.cols; ++c) {
      if (!layout.open(r, c)) continue;
      mask[r * layout.cols + c] = wall_mask(layout, r, c);
      present[mask[r * layout.cols + c]] = true;
    }
  }
  // Mask 0 (interior) is split into interior_symbols symbols placed after the
  // boundary ones when more than one is requested.
  const bool split = interior_symbols > 1;
  std::array<int, 16> symbol{};
  int next = 0;
  for (unsigned m = 0; m < 16; ++m) {
    if (!present[m] || (split && m == 0)) continue;
    symbol[m] = next++;
  }
  Rng rng(seed);
  std::vector<int> out(n, kBlocked);
  for (std::size_t i = 0; i < n; ++i) {
    if (!layout.accessible[i]) continue;
    if (split && mask[i] == 0) {
      out[i] = next + static_cast<int>(uniform_index(rng, interior_symbols));
    } else {
      out[i] = symbol[mask[i]];
    }
  }
  if (split) {
    // Keep the symbols contiguous when some interior symbol was never drawn.
    std::vector<int> used;
    for (int o : out) {
      if (o != kBlocked) used.push_back(o);
    }
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());
    for (int& o : out) {
      if (o != kBlocked) {
        o = static_cast<int>(std::lower_bound(used.begin(), used.end(), o) - used.begin());
      }
    }
  }
  return out;
}

RoomSpec make_room(std::string name, std::size_t rows, std::size_t cols,
                   std::vector<std::uint8_t> accessible, Topology topology,
                   std::string size_class) {
  if (accessible.size() != rows * cols) {
    throw InvalidArgument("room '" + name + "': grid size mismatch");
  }
  RoomSpec room;
  room.name = std::move(name);
  room.size_class = std::move(size_class);
  room.rows = rows;
  room.cols = cols;
  room.accessible = std::move(accessible);
  room.topology = topology;
  room.observation = aliased_observation_map(room);
  check_room(room);
  return room;
}

void check_room(const RoomSpec& room) {
  const std::string who = "room '" + room.name + "': ";
  const std::size_t n = room.rows * room.cols;
  if (room.accessible.size() != n || room.observation.size() != n) {
    throw InvalidArgument(who + "grid size mismatch");
  }
  std::size_t first = n;
  std::size_t open = 0;
  std::vector<bool> seen_symbol;
  for (std::size_t i = 0; i < n; ++i) {
    if (!room.accessible[i]) {
      if (room.observation[i] != kBlocked) {
        throw InvalidArgument(who + "blocked cell with an observation");
      }
      continue;
    }
    if (first == n) first = i;
    ++open;
    const int o = room.observation[i];
    if (o < 0) throw InvalidArgument(who + "accessible cell without observation");
    if (static_cast<std::size_t>(o) >= seen_symbol.size()) seen_symbol.resize(o + 1, false);
    seen_symbol[o] = true;
  }
  if (open == 0) throw InvalidArgument(who + "no accessible cell");
  for (std::size_t s = 0; s < seen_symbol.size(); ++s) {
    if (!seen_symbol[s]) {
      throw InvalidArgument(who + "observation symbols are not contiguous (missing " +
                            std::to_string(s) + ")");
    }
  }
  // Connectivity under the room's moves (wrapping included).
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> q;
  q.push(first);
  seen[first] = true;
  std::size_t reached = 0;
  const bool wrap_rows = room.topology != Topology::plane;
  const bool wrap_cols = room.topology == Topology::torus;
  while (!q.empty()) {
    const std::size_t i = q.front();
    q.pop();
    ++reached;
    const std::size_t r = i / room.cols, c = i % room.cols;
    const std::array<std::pair<long, long>, 4> d = {{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
    for (auto [dr, dc] : d) {
      long nr = static_cast<long>(r) + dr, nc = static_cast<long>(c) + dc;
      const long R = static_cast<long>(room.rows), C = static_cast<long>(room.cols);
      if (wrap_rows) nr = (nr + R) % R;
      if (wrap_cols) nc = (nc + C) % C;
      if (nr < 0 || nr >= R || nc < 0 || nc >= C) continue;
      const std::size_t j = static_cast<std::size_t>(nr * C + nc);
      if (!room.accessible[j] || seen[j]) continue;
      seen[j] = true;
      q.push(j);
    }
  }
  if (reached != open) throw InvalidArgument(who + "accessible cells are not connected");
}

RoomSpec permute_observations(const RoomSpec& room,
                              std::span<const std::size_t> perm) {
  const std::size_t k = room.n_obs();
  if (perm.size() != k) throw InvalidArgument("permutation size does not match symbols");
  std::vector<bool> hit(k, false);
  for (std::size_t p : perm) {
    if (p >= k || hit[p]) throw InvalidArgument("not a permutation");
    hit[p] = true;
  }
  RoomSpec out = room;
  for (int& o : out.observation) {
    if (o != kBlocked) o = static_cast<int>(perm[static_cast<std::size_t>(o)]);
  }
  return out;
}

std::vector<std::size_t> random_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  Rng rng(seed);
  shuffle(p.begin(), p.end(), rng);
  return p;
}

std::string_view to_string(RoomType t) {
  switch (t) {
    case RoomType::rectangle: return "rectangle";
    case RoomType::cylinder: return "cylinder";
    case RoomType::torus: return "torus";
    case RoomType::square_with_hole: return "square_with_hole";
    case RoomType::u_shape: return "u_shape";
  }
  return "?";
}

std::string_view to_string(SizeClass s) {
  switch (s) {
    case SizeClass::small: return "small";
    case SizeClass::medium: return "medium";
    case SizeClass::large: return "large";
  }
  return "?";
}

RoomType parse_room_type(std::string_view name) {
  for (RoomType t : kRoomTypes) {
    if (to_string(t) == name) return t;
  }
  throw InvalidArgument("unknown room type '" + std::string(name) + "'");
}

SizeClass parse_size_class(std::string_view name) {
  for (SizeClass s : kSizeClasses) {
    if (to_string(s) == name) return s;
  }
  throw InvalidArgument("unknown size class '" + std::string(name) + "'");
}

namespace {

struct Shape {
  std::size_t rows, cols;
  std::size_t hole = 0;     // side of the centred square hole
  std::size_t barrier = 0;  // length of the wall hanging from the top edge
};

Shape shape_of(RoomType type, std::size_t extra_or_class, bool grown) {
  // Base dimensions per size class: small, medium, large.
  static constexpr std::array<std::array<std::size_t, 2>, 3> rect = {{{5, 6}, {6, 7}, {7, 8}}};
  static constexpr std::array<std::size_t, 3> square = {6, 7, 8};
  static constexpr std::array<std::size_t, 3> hole = {2, 3, 4};
  static constexpr std::array<std::size_t, 3> barrier = {3, 4, 5};
  const std::size_t i = grown ? 1 : extra_or_class;
  const std::size_t extra = grown ? extra_or_class : 0;
  switch (type) {
    case RoomType::square_with_hole:
      return {square[i] + extra, square[i] + extra, hole[i], 0};
    case RoomType::u_shape:
      return {rect[i][0] + extra, rect[i][1] + extra, 0, barrier[i] + extra};
    default:
      return {rect[i][0] + extra, rect[i][1] + extra, 0, 0};
  }
}

RoomSpec build(RoomType type, const Shape& s, std::string size_class) {
  std::vector<std::uint8_t> grid(s.rows * s.cols, 1);
  if (s.hole > 0) {
    const std::size_t r0 = (s.rows - s.hole) / 2, c0 = (s.cols - s.hole) / 2;
    for (std::size_t r = r0; r < r0 + s.hole; ++r) {
      for (std::size_t c = c0; c < c0 + s.hole; ++c) grid[r * s.cols + c] = 0;
    }
  }
  if (s.barrier > 0) {
    const std::size_t c = s.cols / 2;
    for (std::size_t r = 0; r < s.barrier && r + 1 < s.rows; ++r) grid[r * s.cols + c] = 0;
  }
  Topology topo = Topology::plane;
  if (type == RoomType::cylinder) topo = Topology::cylinder;
  if (type == RoomType::torus) topo = Topology::torus;
  std::string name = std::string(to_string(type));
  if (!size_class.empty()) name += "_" + size_class;
  return make_room(std::move(name), s.rows, s.cols, std::move(grid), topo,
                   std::move(size_class));
}

// 8 x 11 digit glyphs with strokes two cells wide.
constexpr std::array<std::array<std::string_view, 11>, 10> kDigits = {{
    {".######.", "########", "##....##", "##....##", "##....##", "##....##",
     "##....##", "##....##", "##....##", "########", ".######."},
    {"..###...", ".####...", "#####...", "..###...", "..###...", "..###...",
     "..###...", "..###...", "..###...", "########", "########"},
    {".######.", "########", "##....##", "......##", ".....###", "....###.",
     "...###..", "..###...", ".###....", "########", "########"},
    {"#######.", "########", "......##", "......##", "..######", "..######",
     "......##", "......##", "......##", "########", "#######."},
    {"##....##", "##....##", "##....##", "##....##", "########", "########",
     "......##", "......##", "......##", "......##", "......##"},
    {"########", "########", "##......", "##......", "#######.", "########",
     "......##", "......##", "......##", "########", "#######."},
    {".######.", "########", "##......", "##......", "#######.", "########",
     "##....##", "##....##", "##....##", "########", ".######."},
    {"########", "########", "......##", ".....###", "....###.", "...###..",
     "..###...", "..##....", "..##....", "..##....", "..##...."},
    {".######.", "########", "##....##", "##....##", ".######.", ".######.",
     "##....##", "##....##", "##....##", "########", ".######."},
    {".######.", "########", "##....##", "##....##", "##....##", "########",
     ".#######", "......##", "......##", "########", ".######."},
}};

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

RoomSpec builtin_room(RoomType type, SizeClass size) {
  return build(type, shape_of(type, static_cast<std::size_t>(size), false),
               std::string(to_string(size)));
}

RoomSpec grown_room(RoomType type, std::size_t extra) {
  RoomSpec r = build(type, shape_of(type, extra, true), {});
  r.name += "_plus" + std::to_string(extra);
  r.size_class = "medium+" + std::to_string(extra);
  return r;
}

RoomSpec digit_room(std::size_t digit) {
  if (digit >= kDigitRooms) throw InvalidArgument("digit rooms are 0..9");
  const auto& g = kDigits[digit];
  const std::size_t rows = g.size(), cols = g[0].size();
  std::vector<std::uint8_t> grid(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) grid[r * cols + c] = g[r][c] == '#';
  }
  return make_room("digit" + std::to_string(digit), rows, cols, std::move(grid),
                   Topology::plane, "bitmap");
}

RoomSpec read_pbm(std::istream& in, std::string name) {
  auto token = [&]() {
    std::string t;
    while (in >> t) {
      if (t[0] == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      return t;
    }
    throw FormatError("pbm '" + name + "': unexpected end of file");
  };
  if (token() != "P1") throw FormatError("pbm '" + name + "': only plain P1 bitmaps are supported");
  std::size_t cols = 0, rows = 0;
  try {
    cols = std::stoul(token());
    rows = std::stoul(token());
  } catch (const std::logic_error&) {
    throw FormatError("pbm '" + name + "': bad dimensions");
  }
  if (rows == 0 || cols == 0 || rows * cols > 1'000'000) {
    throw FormatError("pbm '" + name + "': bad dimensions");
  }
  std::vector<std::uint8_t> grid;
  grid.reserve(rows * cols);
  while (grid.size() < rows * cols) {
    for (char ch : token()) {
      if (ch != '0' && ch != '1') throw FormatError("pbm '" + name + "': bad pixel");
      grid.push_back(ch == '1');
    }
  }
  if (grid.size() != rows * cols) throw FormatError("pbm '" + name + "': too many pixels");
  try {
    return make_room(std::move(name), rows, cols, std::move(grid), Topology::plane, "bitmap");
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
}

RoomSpec load_pbm(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path.string());
  return read_pbm(f, path.stem().string());
}

void write_pbm(std::ostream& out, const RoomSpec& room) {
  out << "P1\n# " << room.name << "\n" << room.cols << ' ' << room.rows << '\n';
  for (std::size_t r = 0; r < room.rows; ++r) {
    for (std::size_t c = 0; c < room.cols; ++c) {
      out << (room.open(r, c) ? '1' : '0') << (c + 1 < room.cols ? " " : "\n");
    }
  }
}

RoomSpec read_room(std::istream& in) {
  std::string name, size_class;
  Topology topo = Topology::plane;
  std::vector<std::string> grid;
  bool in_grid = false, ended = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (in_grid) {
      if (line == "end") {
        in_grid = false;
        ended = true;
        continue;
      }
      grid.push_back(line);
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key, value;
    ls >> key >> value;
    if (key == "room") {
      name = value;
    } else if (key == "topology") {
      try {
        topo = parse_topology(value);
      } catch (const InvalidArgument& e) {
        throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
      }
    } else if (key == "size") {
      size_class = value;
    } else if (key == "grid") {
      in_grid = true;
    } else {
      throw FormatError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (!ended || grid.empty()) throw FormatError("room file: missing grid ... end block");
  const std::size_t cols = grid[0].size();
  std::vector<std::uint8_t> cells;
  for (const auto& row : grid) {
    if (row.size() != cols) throw FormatError("room file: ragged grid");
    for (char ch : row) {
      if (ch != '.' && ch != '#') throw FormatError(std::string("room file: bad cell '") + ch + "'");
      cells.push_back(ch == '.');
    }
  }
  try {
    return make_room(name, grid.size(), cols, std::move(cells), topo, size_class);
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
}

RoomSpec load_room(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path.string());
  return read_room(f);
}

void write_room(std::ostream& out, const RoomSpec& room) {
  out << "room " << room.name << "\ntopology " << to_string(room.topology) << '\n';
  if (!room.size_class.empty()) out << "size " << room.size_class << '\n';
  out << "grid\n";
  for (std::size_t r = 0; r < room.rows; ++r) {
    for (std::size_t c = 0; c < room.cols; ++c) out << (room.open(r, c) ? '.' : '#');
    out << '\n';
  }
  out << "end\n";
}

RoomSpec load_room_file(const std::filesystem::path& path) {
  if (path.extension() == ".pbm") return load_pbm(path);
  return load_room(path);
}

}  // namespace cscg
