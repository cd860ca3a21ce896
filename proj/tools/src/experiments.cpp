#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>

#include "cscg/error.hpp"
#include "cscg/inference.hpp"
#include "cscg/model_io.hpp"
#include "cscg/parallel.hpp"
#include "cscg/quantizer.hpp"

namespace cscg::cli {

namespace {

// Streams of the base seed; one per purpose so adding trials elsewhere
// does not shift them.
enum Stream : std::uint64_t {
  kSchemaStream = 1,
  kWalkStream = 2,
  kTestStream = 3,
  kPermStream = 4,
  kLearnStream = 5,
  kEpisodeStream = 6,
  kEmitStream = 7,
};

std::uint64_t stream_seed(std::uint64_t seed, Stream s, std::uint64_t index = 0) {
  return derive_seed(derive_seed(seed, s), index);
}

RoomSchemaOptions schema_options(Config& c) {
  RoomSchemaOptions o;
  o.walk_length = c.get<std::size_t>("schema_walk_length", o.walk_length);
  o.clone_factor = c.get<double>("clone_factor", o.clone_factor);
  EmOptions base = EmOptions::schema_learning();
  base.max_iters = 300;
  o.em = em_from(c.child("schema_em"), base);
  o.restarts = c.get<std::size_t>("schema_restarts", 3);
  return o;
}

EmOptions matching_em(Config& c, std::size_t max_iters, double tol) {
  EmOptions base = EmOptions::matching();
  base.max_iters = max_iters;
  base.convergence_tol = tol;
  return em_from(c.child("em"), base);
}

std::vector<std::string> all_room_types() {
  std::vector<std::string> out;
  for (RoomType t : kRoomTypes) out.emplace_back(to_string(t));
  return out;
}

// Learns the schemas of `selectors` (medium size) in parallel.
std::vector<UngroundedSchema> learn_library(const std::vector<std::string>& selectors,
                                            const RoomSchemaOptions& opts,
                                            std::uint64_t seed, std::size_t workers) {
  std::vector<UngroundedSchema> out(selectors.size());
  parallel_for(selectors.size(), workers, [&](std::size_t i) {
    const GridWorld world(room_from(selectors[i], "medium", 0));
    out[i] = learn_room_schema(world, selectors[i], stream_seed(seed, kSchemaStream, i), opts);
  });
  return out;
}

std::size_t corner_state(const GridWorld& world) {
  // First open cell in row-major order: the top-left corner of the rooms
  // shipped here, which shows a unique observation.
  std::size_t best = 0;
  for (std::size_t s = 1; s < world.n_states(); ++s) {
    const Position& p = world.position(s);
    const Position& q = world.position(best);
    if (p.row < q.row || (p.row == q.row && p.col < q.col)) best = s;
  }
  return best;
}

}  // namespace

RoomSpec room_from(const std::string& selector, const std::string& size, std::size_t grow) {
  if (selector.rfind("digit:", 0) == 0) {
    const std::string n = selector.substr(6);
    if (n.empty() || n.find_first_not_of("0123456789") != std::string::npos) {
      throw InvalidArgument("bad digit selector '" + selector + "'");
    }
    return digit_room(std::stoul(n));
  }
  if (selector.rfind("file:", 0) == 0) return load_room_file(selector.substr(5));
  const RoomType type = parse_room_type(selector);
  if (grow > 0) return grown_room(type, grow);
  return builtin_room(type, parse_size_class(size));
}

EmOptions em_from(Config& c, EmOptions base) {
  base.max_iters = c.get<std::size_t>("max_iters", base.max_iters);
  base.pseudocount = c.get<double>("pseudocount", base.pseudocount);
  base.convergence_tol = c.get<double>("tol", base.convergence_tol);
  return base;
}

TrainResult run_train(Config& c, std::uint64_t seed, std::size_t workers) {
  const RoomSpec room = room_from(c.get<std::string>("room", "rectangle"),
                                  c.get<std::string>("size", "medium"),
                                  c.get<std::size_t>("grow", 0));
  const GridWorld world(room, c.get<bool>("egocentric", false));
  RoomSchemaOptions o;
  o.walk_length = c.get<std::size_t>("walk_length", o.walk_length);
  o.clone_factor = c.get<double>("clone_factor", o.clone_factor);
  o.em = em_from(c.child("em"), EmOptions::schema_learning());
  o.em.workers = workers;
  c.check_unknown();
  TrainResult r;
  r.schema = learn_room_schema(world, room.name, stream_seed(seed, kSchemaStream), o, &r.nll_trace);
  r.n_obs = world.n_obs();
  return r;
}

BindResult run_bind(Config& c, std::uint64_t seed, std::size_t workers) {
  const std::string schema_path = c.get<std::string>("schema", "");
  if (schema_path.empty()) throw InvalidArgument("bind: config needs 'schema' (a model file)");
  if (!std::filesystem::is_regular_file(schema_path)) {
    throw InvalidArgument("bind: no model file at '" + schema_path + "'");
  }
  const RoomSpec room = room_from(c.get<std::string>("room", "rectangle"),
                                  c.get<std::string>("size", "medium"),
                                  c.get<std::size_t>("grow", 0));
  const bool permute = c.get<bool>("permute", true);
  const std::size_t length = c.get<std::size_t>("walk_length", 1000);
  const bool tie = c.get<bool>("tie_clones", true);
  EmOptions em = em_from(c.child("em"), EmOptions::matching());
  em.workers = workers;
  Config& cont = c.child("continuous");
  const bool continuous = cont.get<bool>("enabled", false);
  const std::size_t dim = cont.get<std::size_t>("dim", 8);
  const double noise = cont.get<double>("noise", 0.1);
  const std::size_t k_req = cont.get<std::size_t>("k", 0);
  c.check_unknown();

  const UngroundedSchema schema = ungrounded(load_model(schema_path).schema);
  RoomSpec test = room;
  if (permute) {
    test = permute_observations(room, random_permutation(room.n_obs(), stream_seed(seed, kPermStream)));
  }
  const GridWorld world(test);
  Rng rng(stream_seed(seed, kWalkStream));
  const Trajectory walk = world.random_walk(uniform_index(rng, world.n_states()), length, rng);

  BindResult r;
  r.ground_truth_nll = nll(ground_truth_model(world).model, walk, true);
  EmissionLearningResult bound;
  if (continuous) {
    const ContinuousEmitter emitter(world.n_obs(), dim, noise, stream_seed(seed, kEmitStream));
    Rng erng(stream_seed(seed, kEmitStream, 1));
    ContinuousTrajectory cw;
    cw.actions = walk.actions;
    for (std::size_t o : walk.observations) cw.observations.push_back(emitter.emit(o, erng));
    const std::size_t k = k_req == 0 ? world.n_obs() : k_req;
    TransferResult t = transfer_quantize(schema, cw, k, stream_seed(seed, kEmitStream, 2), tie, em);
    bound = std::move(t.binding);
    r.quantizer = std::move(t.quantizer);
  } else {
    bound = learn_emissions(schema, walk, world.n_obs(), tie, em);
  }
  UngroundedSchema shape = schema;
  if (!tie) shape.clones.reset();
  r.model = grounded(shape, bound.emissions);
  r.nll_trace = std::move(bound.nll_trace);
  return r;
}

MatchResult run_match(Config& c, std::uint64_t seed, std::size_t workers) {
  const std::string family = c.get<std::string>("family", "rooms");
  if (family != "rooms" && family != "digits") {
    throw InvalidArgument("match: family must be 'rooms' or 'digits'");
  }
  std::vector<std::string> selectors;
  std::vector<std::string> sizes;
  if (family == "rooms") {
    selectors = c.get<std::vector<std::string>>("types", all_room_types());
    sizes = c.get<std::vector<std::string>>("test_sizes", {"small", "medium", "large"});
  } else {
    std::vector<std::size_t> def(kDigitRooms);
    for (std::size_t d = 0; d < kDigitRooms; ++d) def[d] = d;
    for (std::size_t d : c.get<std::vector<std::size_t>>("digits", def)) {
      selectors.push_back("digit:" + std::to_string(d));
    }
    sizes = {"medium"};
  }
  const RoomSchemaOptions so = schema_options(c);
  MatchOptions mo;
  mo.eval_interval = c.get<std::size_t>("eval_interval", mo.eval_interval);
  mo.margin = c.get<double>("margin", mo.margin);
  mo.tie_clones = c.get<bool>("tie_clones", mo.tie_clones);
  mo.max_steps = c.get<std::size_t>("max_steps", 150);
  mo.em = matching_em(c, 30, 1e-5);
  const std::size_t walks = c.get<std::size_t>("walks", 25);
  c.check_unknown();
  if (walks == 0) throw InvalidArgument("match: walks must be positive");

  SchemaLibrary lib;
  for (auto& s : learn_library(selectors, so, seed, workers)) lib.add(std::move(s));
  MatchResult r;
  r.schemas = selectors;
  for (std::size_t i = 0; i < selectors.size(); ++i) {
    for (const std::string& size : sizes) {
      MatchCell cell;
      cell.room = selectors[i];
      cell.size = size;
      cell.truth = i;
      cell.walk_nll.resize(walks);
      r.cells.push_back(std::move(cell));
    }
  }
  parallel_for(r.cells.size() * walks, workers, [&](std::size_t job) {
    MatchCell& cell = r.cells[job / walks];
    const std::size_t k = job % walks;
    const std::size_t cell_index = job / walks;
    const RoomSpec room = room_from(cell.room, cell.size, 0);
    const auto perm =
        random_permutation(room.n_obs(), stream_seed(seed, kPermStream, cell_index * walks + k));
    const GridWorld world(permute_observations(room, perm));
    Rng rng(stream_seed(seed, kWalkStream, cell_index * walks + k));
    const std::size_t start = uniform_index(rng, world.n_states());
    const Trajectory walk = world.random_walk(start, mo.max_steps, rng);
    const MatchReport rep = match(lib, walk, world.n_obs(), mo);
    cell.walk_nll[k] = rep.nll;
    if (k == 0) cell.steps = rep.steps;
  });
  for (MatchCell& cell : r.cells) {
    cell.mean_nll.assign(lib.size(), std::vector<double>(cell.steps.size(), 0.0));
    for (const auto& w : cell.walk_nll) {
      for (std::size_t h = 0; h < lib.size(); ++h) {
        for (std::size_t e = 0; e < cell.steps.size(); ++e) {
          cell.mean_nll[h][e] += w[h][e] / static_cast<double>(walks);
        }
      }
    }
    cell.decision = decide(cell.mean_nll, cell.steps, mo.margin);
  }
  return r;
}

WindowResult run_window(Config& c, std::uint64_t seed, std::size_t workers) {
  const std::vector<std::vector<std::size_t>> default_pairs = {
      {2, 3}, {5, 1}, {5, 3}, {2, 7}, {0, 9}, {9, 3}, {4, 6}, {8, 7}};
  const auto pairs = c.get<std::vector<std::vector<std::size_t>>>("pairs", default_pairs);
  const std::size_t seeds = c.get<std::size_t>("seeds", 5);
  const std::size_t length = c.get<std::size_t>("walk_length", 20000);
  WindowOptions wo;
  wo.window = c.get<std::size_t>("window", 200);
  wo.stride = c.get<std::size_t>("stride", 10);
  wo.temperature = c.get<double>("temperature", wo.temperature);
  wo.tie_clones = c.get<bool>("tie_clones", wo.tie_clones);
  wo.em = matching_em(c, 30, 1e-5);
  const RoomSchemaOptions so = schema_options(c);
  c.check_unknown();
  for (const auto& p : pairs) {
    if (p.size() != 2 || p[0] == p[1]) throw InvalidArgument("match-window: pairs must hold two different digits");
  }

  std::vector<std::size_t> digits;
  for (const auto& p : pairs) {
    for (std::size_t d : p) {
      if (std::find(digits.begin(), digits.end(), d) == digits.end()) digits.push_back(d);
    }
  }
  std::sort(digits.begin(), digits.end());
  std::vector<std::string> selectors;
  for (std::size_t d : digits) selectors.push_back("digit:" + std::to_string(d));
  const auto schemas = learn_library(selectors, so, seed, workers);
  auto schema_of = [&](std::size_t d) {
    return schemas[static_cast<std::size_t>(std::find(digits.begin(), digits.end(), d) - digits.begin())];
  };

  WindowResult r;
  r.runs.resize(pairs.size() * seeds);
  parallel_for(r.runs.size(), workers, [&](std::size_t job) {
    const auto& p = pairs[job / seeds];
    WindowRun& run = r.runs[job];
    run.pair = std::to_string(p[0]) + "+" + std::to_string(p[1]);
    run.seed_index = job % seeds;
    SchemaLibrary lib;
    lib.add(schema_of(p[0]));
    lib.add(schema_of(p[1]));
    const GridWorld world(side_by_side({digit_room(p[0]), digit_room(p[1])}));
    Rng rng(stream_seed(seed, kWalkStream, job));
    std::vector<std::size_t> states;
    const Trajectory walk =
        world.random_walk(uniform_index(rng, world.n_states()), length, rng, &states);
    run.report = sliding_window_match(lib, walk, world.n_obs(), wo);
    std::map<std::size_t, std::pair<double, std::size_t>> per_cell;
    for (std::size_t i = 0; i < run.report.positions.size(); ++i) {
      const std::size_t s = states[run.report.positions[i]];
      run.truth.push_back(world.room_of(s));
      run.cell.push_back(s);
      auto& acc = per_cell[s];
      acc.first += run.report.prob[i][world.room_of(s)];
      ++acc.second;
    }
    std::size_t correct = 0;
    for (const auto& [s, acc] : per_cell) {
      if (acc.first / static_cast<double>(acc.second) > 0.5) ++correct;
    }
    run.locations = per_cell.size();
    run.location_accuracy =
        per_cell.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(per_cell.size());
  });
  for (const auto& run : r.runs) r.mean_accuracy += run.location_accuracy;
  if (!r.runs.empty()) r.mean_accuracy /= static_cast<double>(r.runs.size());
  return r;
}

ComposeResult run_compose(Config& c, std::uint64_t seed, std::size_t workers) {
  const auto selectors =
      c.get<std::vector<std::string>>("rooms", {"rectangle", "square_with_hole"});
  const std::string size = c.get<std::string>("size", "small");
  const auto lengths = c.get<std::vector<std::size_t>>("lengths", {1000, 2000, 5000, 10000});
  const std::size_t seeds = c.get<std::size_t>("seeds", 5);
  const PolicyKind policy = parse_policy(c.get<std::string>("policy", "edge-coverage"));
  const std::size_t test_walks = c.get<std::size_t>("test_walks", 3);
  const std::size_t test_length = c.get<std::size_t>("test_length", 2000);
  ComposeOptions co;
  co.emission = em_from(c.child("emission_em"), co.emission);
  co.transition = em_from(c.child("transition_em"), co.transition);
  co.viterbi_iters = c.get<std::size_t>("viterbi_iters", co.viterbi_iters);
  co.tie_clones = c.get<bool>("tie_clones", co.tie_clones);
  const double scratch_factor = c.get<double>("scratch_clone_factor", 1.0);
  const EmOptions scratch_em = em_from(c.child("scratch_em"), EmOptions::schema_learning());
  c.check_unknown();
  if (selectors.size() < 2) throw InvalidArgument("compose: needs at least two rooms");
  if (lengths.empty() || seeds == 0 || test_walks == 0) {
    throw InvalidArgument("compose: lengths, seeds and test_walks must be non-empty");
  }

  std::vector<RoomSpec> rooms;
  for (const auto& s : selectors) rooms.push_back(room_from(s, size, 0));
  const ComposedSpec spec = side_by_side(rooms);
  const GridWorld world(spec);
  const GroundedSchema truth = ground_truth_model(world).model;
  std::vector<UngroundedSchema> schemas;
  for (std::size_t h = 0; h < rooms.size(); ++h) {
    UngroundedSchema s = ungrounded(ground_truth_model(GridWorld(rooms[h])).model);
    s.name = selectors[h];
    schemas.push_back(std::move(s));
  }
  const UngroundedSchema prior = build_prior(schemas, door_frontiers(spec));
  std::vector<std::size_t> sizes(world.n_obs(), 0);
  for (std::size_t s = 0; s < world.n_states(); ++s) ++sizes[world.observe(s)];
  for (auto& v : sizes) {
    v = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(scratch_factor * static_cast<double>(v))));
  }
  const CloneStructure scratch_clones = CloneStructure::from_sizes(sizes);
  const std::size_t max_len = *std::max_element(lengths.begin(), lengths.end());

  // One efficient walk per seed; shorter training sets are its prefixes.
  std::vector<Trajectory> train(seeds);
  std::vector<std::vector<Trajectory>> tests(seeds);
  for (std::size_t k = 0; k < seeds; ++k) {
    Rng rng(stream_seed(seed, kWalkStream, k));
    train[k] = explore(world, uniform_index(rng, world.n_states()), max_len, policy,
                       stream_seed(seed, kWalkStream, 1000 + k));
    Rng trng(stream_seed(seed, kTestStream, k));
    for (std::size_t t = 0; t < test_walks; ++t) {
      tests[k].push_back(world.random_walk(uniform_index(trng, world.n_states()), test_length, trng));
    }
  }
  auto held_out = [&](GroundedSchema m, std::size_t k) {
    m.initial = InitialDistribution::uniform(m.n_states());
    double sum = 0.0;
    for (const auto& t : tests[k]) sum += evaluate_likelihood(m, t).nll;
    return sum / static_cast<double>(test_walks);
  };
  std::vector<double> truth_nll(seeds);
  for (std::size_t k = 0; k < seeds; ++k) truth_nll[k] = held_out(truth, k);

  ComposeResult r;
  r.rows.resize(lengths.size() * seeds * 2);
  parallel_for(lengths.size() * seeds, workers, [&](std::size_t job) {
    const std::size_t len = lengths[job / seeds];
    const std::size_t k = job % seeds;
    const Trajectory walk = train[k].slice(0, std::min(len, train[k].size()));
    const ComposedResult comp = learn_composed(prior, walk, world.n_obs(), co);
    r.rows[2 * job] = {len, "schemas", k, held_out(comp.model, k), truth_nll[k]};
    EmOptions em = scratch_em;
    em.seed = stream_seed(seed, kLearnStream, job);
    const TransitionLearningResult scratch =
        learn_transitions(walk, scratch_clones, world.n_actions(), em);
    r.rows[2 * job + 1] = {len, "scratch", k, held_out(scratch.model, k), truth_nll[k]};
  });
  return r;
}

PlanExperiment run_plan(Config& c, std::uint64_t seed, std::size_t workers) {
  const auto rooms = c.get<std::vector<std::string>>("rooms", {"rectangle", "square_with_hole"});
  const auto extras = c.get<std::vector<std::size_t>>("extras", {0, 2});
  const auto lambdas = c.get<std::vector<double>>("lambdas", {0.2, 0.0});
  const std::size_t trials = c.get<std::size_t>("trials", 50);
  const std::size_t walk_length = c.get<std::size_t>("walk_length", 200);
  const PolicyKind policy = parse_policy(c.get<std::string>("walk_policy", "repeat-3"));
  NavigateOptions no;
  no.step_budget = c.get<std::size_t>("budget", no.step_budget);
  no.plan.theta = c.get<double>("theta", 0.0);
  no.goal_mass = c.get<double>("goal_mass", no.goal_mass);
  no.tie_clones = c.get<bool>("tie_clones", no.tie_clones);
  no.binding = em_from(c.child("binding_em"), no.binding);
  const RoomSchemaOptions so = schema_options(c);
  c.check_unknown();

  const auto schemas = learn_library(rooms, so, seed, workers);
  PlanExperiment r;
  for (std::size_t i = 0; i < rooms.size(); ++i) {
    for (std::size_t extra : extras) {
      for (double lambda : lambdas) {
        for (std::size_t t = 0; t < trials; ++t) {
          PlanTrial p;
          p.room = rooms[i];
          p.extra = extra;
          p.lambda = lambda;
          p.trial = t;
          r.trials.push_back(std::move(p));
        }
      }
    }
  }
  parallel_for(r.trials.size(), workers, [&](std::size_t job) {
    PlanTrial& p = r.trials[job];
    const std::size_t room_index =
        static_cast<std::size_t>(std::find(rooms.begin(), rooms.end(), p.room) - rooms.begin());
    const RoomSpec room = room_from(p.room, "medium", p.extra);
    const GridWorld world(room);
    const std::size_t start = corner_state(world);
    // The walk depends on (room, extra, trial) only, so both lambdas see it.
    const std::uint64_t walk_seed =
        stream_seed(seed, kWalkStream, (room_index * 1000 + p.extra) * 100000 + p.trial);
    std::vector<std::size_t> states;
    const Trajectory walk = explore(world, start, walk_length, policy, walk_seed, &states);
    const std::size_t current = states.back();
    p.bfs_distance = world.bfs_distances(current)[start];
    NavigateOptions opts = no;
    opts.lambda = p.lambda;
    opts.seed = derive_seed(walk_seed, 1);
    p.log = navigate(schemas[room_index], world, walk, current, 0, start, opts);
  });
  return r;
}

MpgRun run_mpg(Config& c, std::uint64_t seed, std::size_t workers) {
  MpgSpec spec;
  spec.side = c.get<std::size_t>("side", spec.side);
  spec.episode_length = c.get<std::size_t>("episode_length", spec.episode_length);
  MpgLearnOptions lo;
  lo.episodes = c.get<std::size_t>("learn_episodes", lo.episodes);
  lo.rounds = c.get<std::size_t>("rounds", lo.rounds);
  lo.transition = em_from(c.child("transition_em"), lo.transition);
  lo.binding = em_from(c.child("learn_binding_em"), lo.binding);
  MpgAgentOptions ao;
  ao.exploration = parse_policy(c.get<std::string>("exploration", "hamiltonian-4x4"));
  ao.theta = c.get<double>("theta", ao.theta);
  ao.localization = c.get<double>("localization", ao.localization);
  ao.cover_first = c.get<bool>("cover_first", ao.cover_first);
  ao.binding = em_from(c.child("binding_em"), ao.binding);
  const std::size_t episodes = c.get<std::size_t>("episodes", 100);
  c.check_unknown();

  MpgRun r;
  r.learning = learn_mpg_schema(spec, stream_seed(seed, kLearnStream), lo);
  for (const auto& t : r.learning.snapshots) r.grid_after_episode.push_back(matches_grid(t, spec));
  r.episodes.resize(episodes);
  parallel_for(episodes, workers, [&](std::size_t e) {
    r.episodes[e] =
        play_mpg_episode(r.learning.schema, spec, stream_seed(seed, kEpisodeStream, e), ao);
  });
  r.summary = summarize(r.episodes);
  return r;
}

std::vector<ReportRow> aggregate(const std::string& csv_text,
                                 const std::vector<std::string>& group_by,
                                 const std::string& value) {
  std::istringstream in(csv_text);
  std::string line;
  std::vector<std::string> header;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(s);
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    header = split(line);
    break;
  }
  if (header.empty()) throw FormatError("report: input has no header row");
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InvalidArgument("report: no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  std::vector<std::size_t> gcols;
  for (const auto& g : group_by) gcols.push_back(column(g));
  const std::size_t vcol = column(value);

  std::vector<std::vector<std::string>> keys;
  std::vector<std::vector<double>> values;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto f = split(line);
    if (f.size() != header.size()) {
      throw FormatError("report: row " + std::to_string(line_no) + " has " +
                        std::to_string(f.size()) + " fields, header has " +
                        std::to_string(header.size()));
    }
    std::vector<std::string> key;
    for (std::size_t g : gcols) key.push_back(f[g]);
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(f[vcol], &used);
      if (used != f[vcol].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw FormatError("report: '" + f[vcol] + "' in column '" + value + "' is not a number");
    }
    auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end()) {
      keys.push_back(key);
      values.emplace_back();
      it = keys.end() - 1;
    }
    values[static_cast<std::size_t>(it - keys.begin())].push_back(v);
  }
  std::vector<ReportRow> out;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    ReportRow row;
    row.group = keys[i];
    row.n = values[i].size();
    for (double v : values[i]) row.mean += v;
    row.mean /= static_cast<double>(row.n);
    if (row.n > 1) {
      double ss = 0.0;
      for (double v : values[i]) ss += (v - row.mean) * (v - row.mean);
      row.sem = std::sqrt(ss / static_cast<double>(row.n - 1)) / std::sqrt(static_cast<double>(row.n));
    }
    row.ci95 = 1.96 * row.sem;
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace cscg::cli
