#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "cscg/error.hpp"
#include "cscg/exploration.hpp"
#include "cscg/inference.hpp"
#include "cscg/rooms.hpp"
#include "cscg/world.hpp"
#include "support/oracles.hpp"

using namespace cscg;

TEST(Rooms, BuiltinsAreValidAndComparableInSize) {
  for (SizeClass size : kSizeClasses) {
    std::vector<std::size_t> cells;
    for (RoomType type : kRoomTypes) {
      const RoomSpec r = builtin_room(type, size);
      EXPECT_NO_THROW(check_room(r)) << r.name;
      cells.push_back(r.n_cells());
    }
    const auto [lo, hi] = std::minmax_element(cells.begin(), cells.end());
    EXPECT_LE(static_cast<double>(*hi), 1.6 * static_cast<double>(*lo));
  }
}

TEST(Rooms, SizeClassesGrow) {
  for (RoomType type : kRoomTypes) {
    EXPECT_LT(builtin_room(type, SizeClass::small).n_cells(), builtin_room(type, SizeClass::medium).n_cells());
    EXPECT_LT(builtin_room(type, SizeClass::medium).n_cells(), builtin_room(type, SizeClass::large).n_cells());
    EXPECT_LT(builtin_room(type, SizeClass::medium).n_cells(), grown_room(type, 2).n_cells());
  }
}

TEST(Rooms, AliasedMapGivesCornersAndInteriorDistinctSymbols) {
  const RoomSpec r = builtin_room(RoomType::rectangle, SizeClass::medium);
  const int corner = r.obs(0, 0);
  const int interior = r.obs(r.rows / 2, r.cols / 2);
  EXPECT_NE(corner, interior);
  std::size_t n_corner = 0;
  for (std::size_t i = 0; i < r.rows; ++i) {
    for (std::size_t j = 0; j < r.cols; ++j) n_corner += r.obs(i, j) == corner ? 1 : 0;
  }
  EXPECT_EQ(n_corner, 1u);
  // Rectangle: 4 corners, 4 edges, 1 interior.
  EXPECT_EQ(r.n_obs(), 9u);
}

TEST(Rooms, NamesRoundTrip) {
  for (RoomType t : kRoomTypes) EXPECT_EQ(parse_room_type(to_string(t)), t);
  for (SizeClass s : kSizeClasses) EXPECT_EQ(parse_size_class(to_string(s)), s);
  EXPECT_THROW(parse_room_type("hexagon"), InvalidArgument);
  EXPECT_THROW(parse_topology("klein"), InvalidArgument);
}

TEST(Rooms, TextAndPbmRoundTrip) {
  for (RoomType t : kRoomTypes) {
    const RoomSpec r = builtin_room(t, SizeClass::small);
    std::stringstream text;
    write_room(text, r);
    const RoomSpec back = read_room(text);
    EXPECT_EQ(back.accessible, r.accessible);
    EXPECT_EQ(back.observation, r.observation);
    EXPECT_EQ(back.topology, r.topology);
  }
  const RoomSpec d = digit_room(8);
  std::stringstream pbm;
  write_pbm(pbm, d);
  const RoomSpec back = read_pbm(pbm, d.name);
  EXPECT_EQ(back.accessible, d.accessible);
  EXPECT_EQ(back.observation, d.observation);
}

TEST(Rooms, ReaderRejectsMalformedInput) {
  std::stringstream ragged("room r\ntopology plane\ngrid\n...\n..\nend\n");
  EXPECT_THROW(read_room(ragged), FormatError);
  std::stringstream split("room r\ntopology plane\ngrid\n.#.\nend\n");
  EXPECT_THROW(read_room(split), FormatError);
  std::stringstream pbm("P1\n2 2\n1 1 1\n");
  EXPECT_THROW(read_pbm(pbm, "x"), FormatError);
}

TEST(Rooms, PermutationRelabelsSymbols) {
  const RoomSpec r = builtin_room(RoomType::u_shape, SizeClass::small);
  const auto perm = random_permutation(r.n_obs(), 3);
  const RoomSpec p = permute_observations(r, perm);
  for (std::size_t i = 0; i < r.observation.size(); ++i) {
    if (r.observation[i] == kBlocked) {
      EXPECT_EQ(p.observation[i], kBlocked);
    } else {
      EXPECT_EQ(p.observation[i], static_cast<int>(perm[static_cast<std::size_t>(r.observation[i])]));
    }
  }
  EXPECT_EQ(std::set<std::size_t>(perm.begin(), perm.end()).size(), r.n_obs());
}

TEST(Rooms, DigitsAreConnected) {
  for (std::size_t d = 0; d < kDigitRooms; ++d) EXPECT_NO_THROW(check_room(digit_room(d)));
  EXPECT_THROW(digit_room(10), InvalidArgument);
}

TEST(GridWorld, PlaneWallsBlockAndTorusWraps) {
  const GridWorld plane(builtin_room(RoomType::rectangle, SizeClass::small));
  const std::size_t corner = *plane.state_at({0, 0, 0, 0});
  EXPECT_EQ(plane.step(corner, kUp), corner);
  EXPECT_EQ(plane.step(corner, kLeft), corner);
  EXPECT_EQ(plane.position(plane.step(corner, kRight)).col, 1u);

  const RoomSpec tr = builtin_room(RoomType::torus, SizeClass::small);
  const GridWorld torus(tr);
  const std::size_t origin = *torus.state_at({0, 0, 0, 0});
  EXPECT_EQ(torus.position(torus.step(origin, kUp)).row, tr.rows - 1);
  EXPECT_EQ(torus.position(torus.step(origin, kLeft)).col, tr.cols - 1);
  EXPECT_THROW(plane.step(corner, 4), InvalidArgument);
}

TEST(GridWorld, EgocentricTurnsKeepTheCell) {
  const GridWorld w(builtin_room(RoomType::rectangle, SizeClass::small), true);
  EXPECT_EQ(w.n_actions(), kNumEgoActions);
  const std::size_t s = *w.state_at({0, 1, 1, kNorth});
  const std::size_t r = w.step(s, kTurnRight);
  EXPECT_EQ(w.position(r).heading, static_cast<std::size_t>(kEast));
  EXPECT_EQ(w.position(r).row, 1u);
  EXPECT_EQ(w.step(w.step(r, kTurnLeft), kForward), *w.state_at({0, 0, 1, kNorth}));
}

TEST(GridWorld, BfsMatchesOracle) {
  for (RoomType t : kRoomTypes) {
    const GridWorld w(builtin_room(t, SizeClass::small));
    for (std::size_t s = 0; s < w.n_states(); s += 7) EXPECT_EQ(w.bfs_distances(s), oracle::bfs(w, s));
  }
}

TEST(GridWorld, RandomWalkFollowsStepFunction) {
  const GridWorld w(builtin_room(RoomType::square_with_hole, SizeClass::medium));
  Rng rng(4);
  std::vector<std::size_t> states;
  const Trajectory t = w.random_walk(3, 500, rng, &states);
  ASSERT_EQ(t.size(), 500u);
  ASSERT_EQ(states.size(), 500u);
  EXPECT_EQ(states[0], 3u);
  for (std::size_t n = 0; n + 1 < t.size(); ++n) {
    EXPECT_EQ(states[n + 1], w.step(states[n], t.actions[n]));
    EXPECT_EQ(t.observations[n], w.observe(states[n]));
  }
  Rng again(4);
  EXPECT_EQ(w.random_walk(3, 500, again), t);
}

TEST(GridWorld, GroundTruthModelExplainsWalksExactly) {
  for (RoomType type : kRoomTypes) {
    const GridWorld w(builtin_room(type, SizeClass::small));
    const GroundTruth gt = ground_truth_model(w);
    EXPECT_TRUE(validate(gt.model).empty());
    Rng rng(1);
    std::vector<std::size_t> states;
    const Trajectory t = w.random_walk(0, 300, rng, &states);
    GroundedSchema m = gt.model;
    m.initial = InitialDistribution::point(m.n_states(), gt.model_of_world[0]);
    EXPECT_NEAR(nll(m, t, true), 0.0, 1e-12);
    const Decoding d = map_decode(m, t, true);
    for (std::size_t n = 0; n < t.size(); ++n) EXPECT_EQ(gt.world_of_model[d.states[n]], states[n]);
  }
}

TEST(GridWorld, SideBySideDoorsConnectRooms) {
  const ComposedSpec spec = side_by_side({digit_room(2), digit_room(3)});
  const GridWorld w(spec);
  EXPECT_EQ(w.n_rooms(), 2u);
  ASSERT_EQ(spec.doors.size(), 1u);
  const Door& d = spec.doors[0];
  const std::size_t from = *w.state_at({0, d.from_row, d.from_col, 0});
  const std::size_t to = *w.state_at({1, d.to_row, d.to_col, 0});
  EXPECT_EQ(w.step(from, kRight), to);
  EXPECT_EQ(w.step(to, kLeft), from);
  // Rooms sit one blank column apart in the shared frame.
  EXPECT_EQ(w.manhattan(from, to), spec.rooms[0].cols + 1 + d.to_col - d.from_col);
  const auto dist = oracle::bfs(w, 0);
  for (std::size_t v : dist) EXPECT_NE(v, std::numeric_limits<std::size_t>::max());
  // Shared alphabet: both rooms draw from the same symbols.
  EXPECT_LE(w.n_obs(), digit_room(2).n_obs() + digit_room(3).n_obs());
}

TEST(GridWorld, DoorFrontiersIndexRoomModels) {
  const ComposedSpec spec = side_by_side({builtin_room(RoomType::rectangle, SizeClass::small),
                                          builtin_room(RoomType::u_shape, SizeClass::small)});
  const auto f = door_frontiers(spec);
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[0].exits.size(), 1u);
  EXPECT_EQ(f[0].exits[0].second, static_cast<std::size_t>(kRight));
  EXPECT_EQ(f[1].exits[0].second, static_cast<std::size_t>(kLeft));
  EXPECT_EQ(f[1].entries.size(), 1u);
}

TEST(Exploration, HamiltonianCycleVisitsEveryCell) {
  RoomSpec grid = builtin_room(RoomType::torus, SizeClass::small);
  grid = make_room("t4", 4, 4, std::vector<std::uint8_t>(16, 1), Topology::torus);
  const GridWorld w(grid);
  std::vector<std::size_t> states;
  explore(w, 0, 16, PolicyKind::hamiltonian_4x4, 1, &states);
  EXPECT_EQ(std::set<std::size_t>(states.begin(), states.end()).size(), 16u);
  EXPECT_THROW(Explorer(PolicyKind::hamiltonian_4x4, GridWorld(builtin_room(RoomType::rectangle, SizeClass::small)), 1),
               InvalidArgument);
}

TEST(Exploration, EdgeCoverageTriesEveryEdge) {
  const GridWorld w(builtin_room(RoomType::square_with_hole, SizeClass::small));
  std::vector<std::size_t> states;
  const Trajectory t = explore(w, 0, 40 * w.n_states(), PolicyKind::edge_coverage, 2, &states);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t n = 0; n + 1 < t.size(); ++n) seen.insert({states[n], t.actions[n]});
  EXPECT_EQ(seen.size(), w.n_states() * w.n_actions());
}

TEST(Exploration, RepeatThreeRepeatsActions) {
  const GridWorld w(builtin_room(RoomType::rectangle, SizeClass::medium));
  const Trajectory t = explore(w, 0, 31, PolicyKind::repeat3, 5);
  for (std::size_t n = 0; n < 30; n += 3) {
    EXPECT_EQ(t.actions[n], t.actions[n + 1]);
    EXPECT_EQ(t.actions[n], t.actions[n + 2]);
  }
}

TEST(Exploration, UpRightUsesOnlyUpAndRight) {
  const GridWorld w(builtin_room(RoomType::torus, SizeClass::small));
  const Trajectory t = explore(w, 0, 100, PolicyKind::up_right_random, 5);
  for (std::size_t a : t.actions) EXPECT_TRUE(a == kUp || a == kRight);
}

TEST(ContinuousEmitter, NoiseAroundPrototypes) {
  const ContinuousEmitter e(3, 4, 0.0, 9);
  Rng rng(1);
  const auto x = e.emit(2, rng);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(x[i], e.prototype(2)[i]);
  const auto shifted = e.shifted(1.0);
  EXPECT_DOUBLE_EQ(shifted.prototype(0)[0], e.prototype(0)[0] + 1.0);
}

TEST(Rooms, ShippedDigitBitmapsMatchBuiltins) {
  for (std::size_t d = 0; d < kDigitRooms; ++d) {
    const std::string file = std::string(CSCG_DATA_DIR) + "/rooms/digit_" + std::to_string(d) + ".pbm";
    const RoomSpec loaded = load_room_file(file);
    const RoomSpec builtin = digit_room(d);
    EXPECT_EQ(loaded.accessible, builtin.accessible) << file;
    EXPECT_EQ(loaded.observation, builtin.observation) << file;
  }
}
