#include "cscg/world.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

#include "cscg/error.hpp"

namespace cscg {

std::size_t opposite(Move m) {
  switch (m) {
    case kUp: return kDown;
    case kDown: return kUp;
    case kLeft: return kRight;
    case kRight: return kLeft;
  }
  throw InvalidArgument("bad move");
}

namespace {

// Row/column offsets of the compass moves and of the headings N, E, S, W.
constexpr std::array<std::pair<long, long>, 4> kMoveDelta = {{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
constexpr std::array<std::pair<long, long>, 4> kHeadingDelta = {{{-1, 0}, {0, 1}, {1, 0}, {0, -1}}};
constexpr std::array<unsigned, 4> kHeadingWall = {kWallUp, kWallRight, kWallDown, kWallLeft};

// Target cell of a displacement inside one room, or nullopt if blocked.
std::optional<std::pair<std::size_t, std::size_t>> move_in(const RoomSpec& room,
                                                           std::size_t r, std::size_t c,
                                                           std::pair<long, long> d) {
  const long R = static_cast<long>(room.rows), C = static_cast<long>(room.cols);
  long nr = static_cast<long>(r) + d.first, nc = static_cast<long>(c) + d.second;
  if (room.topology != Topology::plane) nr = (nr + R) % R;
  if (room.topology == Topology::torus) nc = (nc + C) % C;
  if (nr < 0 || nr >= R || nc < 0 || nc >= C) return std::nullopt;
  if (!room.open(static_cast<std::size_t>(nr), static_cast<std::size_t>(nc))) {
    return std::nullopt;
  }
  return std::make_pair(static_cast<std::size_t>(nr), static_cast<std::size_t>(nc));
}

unsigned relative_mask(unsigned walls, std::size_t heading) {
  unsigned m = 0;
  for (std::size_t i = 0; i < 4; ++i) {  // front, right, back, left
    if (walls & kHeadingWall[(heading + i) % 4]) m |= 1u << i;
  }
  return m;
}

}  // namespace

void GridWorld::add_room_cells(const RoomSpec& room, std::size_t room_index,
                               int symbol_offset) {
  const std::size_t headings = egocentric_ ? 4 : 1;
  auto& lut = lookup_[room_index];
  lut.assign(room.rows * room.cols * headings, SIZE_MAX);
  for (std::size_t r = 0; r < room.rows; ++r) {
    for (std::size_t c = 0; c < room.cols; ++c) {
      if (!room.open(r, c)) continue;
      for (std::size_t h = 0; h < headings; ++h) {
        lut[(r * room.cols + c) * headings + h] = positions_.size();
        positions_.push_back({room_index, r, c, h});
        obs_.push_back(static_cast<std::size_t>(room.obs(r, c) + symbol_offset));
      }
    }
  }
}

GridWorld::GridWorld(const RoomSpec& room, bool egocentric) : egocentric_(egocentric) {
  check_room(room);
  n_rooms_ = 1;
  n_actions_ = egocentric ? kNumEgoActions : kNumMoves;
  lookup_.resize(1);
  room_cols_ = {room.cols};
  offsets_ = {{0, 0}};
  add_room_cells(room, 0, 0);
  n_obs_ = room.n_obs();

  if (egocentric) {
    // Observation = blocked-neighbour mask relative to the heading.
    std::array<int, 16> symbol;
    symbol.fill(-1);
    std::vector<unsigned> masks(positions_.size());
    for (std::size_t s = 0; s < positions_.size(); ++s) {
      const Position& p = positions_[s];
      masks[s] = relative_mask(wall_mask(room, p.row, p.col), p.heading);
      symbol[masks[s]] = 0;
    }
    int next = 0;
    for (auto& v : symbol) {
      if (v == 0) v = next++;
    }
    for (std::size_t s = 0; s < positions_.size(); ++s) {
      obs_[s] = static_cast<std::size_t>(symbol[masks[s]]);
    }
    n_obs_ = static_cast<std::size_t>(next);
  }

  next_.resize(positions_.size() * n_actions_);
  for (std::size_t s = 0; s < positions_.size(); ++s) {
    const Position& p = positions_[s];
    for (std::size_t a = 0; a < n_actions_; ++a) {
      std::size_t to = s;
      if (!egocentric) {
        if (auto cell = move_in(room, p.row, p.col, kMoveDelta[a])) {
          to = *state_at({0, cell->first, cell->second, 0});
        }
      } else if (a == kForward) {
        if (auto cell = move_in(room, p.row, p.col, kHeadingDelta[p.heading])) {
          to = *state_at({0, cell->first, cell->second, p.heading});
        }
      } else {
        const std::size_t h = a == kTurnLeft ? (p.heading + 3) % 4 : (p.heading + 1) % 4;
        to = *state_at({0, p.row, p.col, h});
      }
      next_[s * n_actions_ + a] = to;
    }
  }
}

GridWorld::GridWorld(const ComposedSpec& spec) {
  if (spec.rooms.empty()) throw InvalidArgument("composed world: no rooms");
  if (!spec.offsets.empty() && spec.offsets.size() != spec.rooms.size()) {
    throw InvalidArgument("composed world: one offset per room expected");
  }
  n_rooms_ = spec.rooms.size();
  n_actions_ = kNumMoves;
  lookup_.resize(n_rooms_);
  int offset = 0;
  for (std::size_t h = 0; h < n_rooms_; ++h) {
    const RoomSpec& room = spec.rooms[h];
    check_room(room);
    room_cols_.push_back(room.cols);
    offsets_.push_back(spec.offsets.empty() ? std::pair<long, long>{0, 0} : spec.offsets[h]);
    add_room_cells(room, h, spec.shared_alphabet ? 0 : offset);
    offset += static_cast<int>(room.n_obs());
    n_obs_ = spec.shared_alphabet ? std::max(n_obs_, room.n_obs())
                                  : static_cast<std::size_t>(offset);
  }
  next_.resize(positions_.size() * n_actions_);
  for (std::size_t s = 0; s < positions_.size(); ++s) {
    const Position& p = positions_[s];
    const RoomSpec& room = spec.rooms[p.room];
    for (std::size_t a = 0; a < n_actions_; ++a) {
      std::size_t to = s;
      if (auto cell = move_in(room, p.row, p.col, kMoveDelta[a])) {
        to = *state_at({p.room, cell->first, cell->second, 0});
      }
      next_[s * n_actions_ + a] = to;
    }
  }
  auto door_state = [&](std::size_t room, std::size_t r, std::size_t c) {
    if (room >= n_rooms_) throw InvalidArgument("door: room index out of range");
    const RoomSpec& rs = spec.rooms[room];
    if (r >= rs.rows || c >= rs.cols || !rs.open(r, c)) {
      throw InvalidArgument("door: cell (" + std::to_string(r) + ", " +
                            std::to_string(c) + ") of room " + std::to_string(room) +
                            " is not accessible");
    }
    return *state_at({room, r, c, 0});
  };
  for (const Door& d : spec.doors) {
    if (d.action >= kNumMoves) throw InvalidArgument("door: bad action");
    if (d.from_room == d.to_room) throw InvalidArgument("door: rooms must differ");
    const std::size_t a = door_state(d.from_room, d.from_row, d.from_col);
    const std::size_t b = door_state(d.to_room, d.to_row, d.to_col);
    const std::size_t back = opposite(static_cast<Move>(d.action));
    if (next_[a * n_actions_ + d.action] != a || next_[b * n_actions_ + back] != b) {
      throw InvalidArgument("door: the move must leave the room through a wall");
    }
    next_[a * n_actions_ + d.action] = b;
    next_[b * n_actions_ + back] = a;
  }
}

std::size_t GridWorld::step(std::size_t state, std::size_t action) const {
  if (action >= n_actions_) {
    throw InvalidArgument("invalid action " + std::to_string(action));
  }
  if (state >= positions_.size()) throw InvalidArgument("invalid state");
  return next_[state * n_actions_ + action];
}

std::optional<std::size_t> GridWorld::state_at(const Position& p) const {
  if (p.room >= lookup_.size()) return std::nullopt;
  const std::size_t headings = egocentric_ ? 4 : 1;
  if (p.heading >= headings || p.col >= room_cols_[p.room]) return std::nullopt;
  const std::size_t i = (p.row * room_cols_[p.room] + p.col) * headings + p.heading;
  if (i >= lookup_[p.room].size() || lookup_[p.room][i] == SIZE_MAX) return std::nullopt;
  return lookup_[p.room][i];
}

std::size_t GridWorld::manhattan(std::size_t a, std::size_t b) const {
  const Position& p = positions_[a];
  const Position& q = positions_[b];
  const long pr = offsets_[p.room].first + static_cast<long>(p.row);
  const long pc = offsets_[p.room].second + static_cast<long>(p.col);
  const long qr = offsets_[q.room].first + static_cast<long>(q.row);
  const long qc = offsets_[q.room].second + static_cast<long>(q.col);
  return static_cast<std::size_t>(std::labs(pr - qr) + std::labs(pc - qc));
}

std::vector<std::size_t> GridWorld::bfs_distances(std::size_t from) const {
  std::vector<std::size_t> dist(n_states(), SIZE_MAX);
  std::queue<std::size_t> q;
  dist[from] = 0;
  q.push(from);
  while (!q.empty()) {
    const std::size_t s = q.front();
    q.pop();
    for (std::size_t a = 0; a < n_actions_; ++a) {
      const std::size_t t = next_[s * n_actions_ + a];
      if (dist[t] == SIZE_MAX) {
        dist[t] = dist[s] + 1;
        q.push(t);
      }
    }
  }
  return dist;
}

GridWorld GridWorld::with_permuted_observations(std::span<const std::size_t> perm) const {
  if (perm.size() != n_obs_) throw InvalidArgument("permutation size does not match symbols");
  std::vector<bool> hit(n_obs_, false);
  for (std::size_t p : perm) {
    if (p >= n_obs_ || hit[p]) throw InvalidArgument("not a permutation");
    hit[p] = true;
  }
  GridWorld out = *this;
  for (auto& o : out.obs_) o = perm[o];
  return out;
}

Trajectory GridWorld::random_walk(std::size_t start, std::size_t n_steps, Rng& rng,
                                  std::vector<std::size_t>* states) const {
  std::vector<std::size_t> actions(n_steps > 0 ? n_steps - 1 : 0);
  for (auto& a : actions) a = uniform_index(rng, n_actions_);
  return rollout(start, actions, states);
}

Trajectory GridWorld::rollout(std::size_t start, std::span<const std::size_t> actions,
                              std::vector<std::size_t>* states) const {
  Trajectory t;
  t.actions.assign(actions.begin(), actions.end());
  t.observations.reserve(actions.size() + 1);
  if (states) {
    states->clear();
    states->reserve(actions.size() + 1);
  }
  std::size_t s = start;
  t.observations.push_back(observe(s));
  if (states) states->push_back(s);
  for (std::size_t a : actions) {
    s = step(s, a);
    t.observations.push_back(observe(s));
    if (states) states->push_back(s);
  }
  return t;
}

GroundTruth ground_truth_model(const GridWorld& world) {
  const std::size_t S = world.n_states();
  const std::size_t A = world.n_actions();
  GroundTruth gt;
  gt.world_of_model.resize(S);
  for (std::size_t s = 0; s < S; ++s) gt.world_of_model[s] = s;
  std::stable_sort(gt.world_of_model.begin(), gt.world_of_model.end(),
                   [&](std::size_t a, std::size_t b) {
                     return world.observe(a) < world.observe(b);
                   });
  gt.model_of_world.resize(S);
  std::vector<std::size_t> obs_of_state(S);
  for (std::size_t z = 0; z < S; ++z) {
    gt.model_of_world[gt.world_of_model[z]] = z;
    obs_of_state[z] = world.observe(gt.world_of_model[z]);
  }
  GroundedSchema& m = gt.model;
  m.transitions = TransitionTensor(A, S);
  for (std::size_t z = 0; z < S; ++z) {
    for (std::size_t a = 0; a < A; ++a) {
      m.transitions(a, z, gt.model_of_world[world.step(gt.world_of_model[z], a)]) = 1.0;
    }
  }
  m.clones = CloneStructure(obs_of_state);
  m.emissions = EmissionMatrix::deterministic(obs_of_state, world.n_obs());
  m.initial = InitialDistribution::uniform(S);
  m.name = "ground_truth";
  return gt;
}

ComposedSpec side_by_side(std::vector<RoomSpec> rooms, bool shared_alphabet) {
  if (rooms.empty()) throw InvalidArgument("side_by_side: no rooms");
  ComposedSpec spec;
  spec.shared_alphabet = shared_alphabet;
  long col = 0;
  for (std::size_t h = 0; h < rooms.size(); ++h) {
    spec.offsets.emplace_back(0, col);
    col += static_cast<long>(rooms[h].cols) + 1;
    if (h == 0) continue;
    const RoomSpec& a = rooms[h - 1];
    const RoomSpec& b = rooms[h];
    const std::size_t rows = std::min(a.rows, b.rows);
    std::optional<std::size_t> best;
    double best_gap = 0.0;
    const double mid = (static_cast<double>(rows) - 1.0) / 2.0;
    for (std::size_t r = 0; r < rows; ++r) {
      bool open_a = false, open_b = false;
      for (std::size_t c = 0; c < a.cols; ++c) open_a = open_a || a.open(r, c);
      for (std::size_t c = 0; c < b.cols; ++c) open_b = open_b || b.open(r, c);
      if (!open_a || !open_b) continue;
      const double gap = std::abs(static_cast<double>(r) - mid);
      if (!best || gap < best_gap) {
        best = r;
        best_gap = gap;
      }
    }
    if (!best) {
      throw InvalidArgument("side_by_side: rooms " + std::to_string(h - 1) + " and " +
                            std::to_string(h) + " share no open row");
    }
    Door d;
    d.from_room = h - 1;
    d.to_room = h;
    d.action = kRight;
    d.from_row = d.to_row = *best;
    d.from_col = a.cols;
    while (!a.open(*best, d.from_col - 1)) --d.from_col;
    --d.from_col;
    d.to_col = 0;
    while (!b.open(*best, d.to_col)) ++d.to_col;
    spec.doors.push_back(d);
  }
  spec.rooms = std::move(rooms);
  return spec;
}

std::vector<FrontierSpec> door_frontiers(const ComposedSpec& spec) {
  std::vector<FrontierSpec> out(spec.rooms.size());
  std::vector<GridWorld> worlds;
  std::vector<GroundTruth> truths;
  for (const auto& room : spec.rooms) {
    worlds.emplace_back(room);
    truths.push_back(ground_truth_model(worlds.back()));
  }
  auto model_state = [&](std::size_t room, std::size_t r, std::size_t c) {
    auto s = worlds.at(room).state_at({0, r, c, 0});
    if (!s) throw InvalidArgument("door cell is not accessible");
    return truths[room].model_of_world[*s];
  };
  auto add_unique = [](auto& v, auto x) {
    if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
  };
  for (const Door& d : spec.doors) {
    const std::size_t a = model_state(d.from_room, d.from_row, d.from_col);
    const std::size_t b = model_state(d.to_room, d.to_row, d.to_col);
    add_unique(out[d.from_room].exits, std::make_pair(a, d.action));
    add_unique(out[d.to_room].exits,
               std::make_pair(b, opposite(static_cast<Move>(d.action))));
    add_unique(out[d.from_room].entries, a);
    add_unique(out[d.to_room].entries, b);
  }
  return out;
}

double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

ContinuousEmitter::ContinuousEmitter(std::size_t n_symbols, std::size_t dim,
                                     double noise_std, std::uint64_t seed)
    : dim_(dim), noise_std_(noise_std), prototypes_(n_symbols * dim) {
  if (dim == 0) throw InvalidArgument("emitter: zero dimension");
  if (!(noise_std >= 0.0)) throw InvalidArgument("emitter: negative noise");
  Rng rng(seed);
  for (double& v : prototypes_) v = standard_normal(rng);
}

std::vector<double> ContinuousEmitter::emit(std::size_t symbol, Rng& rng) const {
  auto p = prototype(symbol);
  std::vector<double> x(p.begin(), p.end());
  for (double& v : x) v += noise_std_ * standard_normal(rng);
  return x;
}

ContinuousEmitter ContinuousEmitter::shifted(double delta) const {
  ContinuousEmitter out = *this;
  for (double& v : out.prototypes_) v += delta;
  return out;
}

}  // namespace cscg
