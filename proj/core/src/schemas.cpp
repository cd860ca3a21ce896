#include "cscg/schemas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "cscg/error.hpp"
#include "cscg/inference.hpp"
#include "cscg/parallel.hpp"

namespace cscg {

void SchemaLibrary::add(UngroundedSchema schema) {
  if (find(schema.name)) {
    throw InvalidArgument("schema library: duplicate name '" + schema.name + "'");
  }
  if (!entries_.empty() && schema.n_actions() != n_actions()) {
    throw InvalidArgument("schema library: '" + schema.name + "' has " +
                          std::to_string(schema.n_actions()) + " actions, library has " +
                          std::to_string(n_actions()));
  }
  if (schema.clones && schema.clones->n_states() != schema.n_states()) {
    throw InvalidArgument("schema library: clone structure of '" + schema.name +
                          "' does not match its transitions");
  }
  entries_.push_back(std::move(schema));
}

std::optional<std::size_t> SchemaLibrary::find(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t SchemaLibrary::n_actions() const {
  return entries_.empty() ? 0 : entries_.front().n_actions();
}

UngroundedSchema extract_schema(const GroundedSchema& learned,
                                std::span<const Trajectory> walks, double pseudocount,
                                std::string name) {
  if (walks.empty()) throw InvalidArgument("extract_schema: no walks");
  if (!(pseudocount >= 0.0)) throw InvalidArgument("pseudocount must be non-negative");
  const std::size_t Z = learned.n_states();
  const std::size_t A = learned.n_actions();
  bool sparse = true;
  try {
    CloneIndex probe(learned.emissions);
  } catch (const InvalidArgument&) {
    sparse = false;
  }
  std::vector<std::vector<std::size_t>> paths;
  std::vector<bool> used(Z, false);
  for (const auto& w : walks) {
    paths.push_back(map_decode(learned, w, sparse).states);
    for (std::size_t z : paths.back()) used[z] = true;
  }
  std::vector<std::size_t> new_index(Z, SIZE_MAX);
  std::vector<std::size_t> group_of;
  const auto obs_of = learned.emissions.argmax_observations();
  // Kept states stay in model order, so groups remain contiguous; groups are
  // renumbered densely.
  std::size_t last_obs = SIZE_MAX;
  std::size_t group = 0;
  std::size_t kept = 0;
  for (std::size_t z = 0; z < Z; ++z) {
    if (!used[z]) continue;
    if (last_obs != SIZE_MAX && obs_of[z] != last_obs) ++group;
    last_obs = obs_of[z];
    group_of.push_back(group);
    new_index[z] = kept++;
  }
  std::vector<double> counts(A * kept * kept, 0.0);
  for (std::size_t i = 0; i < walks.size(); ++i) {
    const auto& z = paths[i];
    for (std::size_t n = 1; n < z.size(); ++n) {
      counts[(walks[i].actions[n - 1] * kept + new_index[z[n - 1]]) * kept +
             new_index[z[n]]] += 1.0;
    }
  }
  TransitionTensor t(A, kept);
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t j = 0; j < kept; ++j) {
      const double* c = counts.data() + (a * kept + j) * kept;
      double sum = 0.0;
      for (std::size_t k = 0; k < kept; ++k) sum += c[k] + pseudocount;
      auto row = t.row(a, j);
      for (std::size_t k = 0; k < kept; ++k) {
        row[k] = sum > 0.0 ? (c[k] + pseudocount) / sum : 1.0 / static_cast<double>(kept);
      }
    }
  }
  UngroundedSchema out;
  out.transitions = std::move(t);
  out.clones = CloneStructure(std::move(group_of));
  out.name = std::move(name);
  return out;
}

UngroundedSchema learn_room_schema(const GridWorld& world, std::string name,
                                   std::uint64_t seed, const RoomSchemaOptions& opts,
                                   std::vector<double>* nll_trace) {
  if (opts.walk_length < 2) throw InvalidArgument("learn_room_schema: walk too short");
  if (!(opts.clone_factor > 0.0)) throw InvalidArgument("learn_room_schema: clone factor must be positive");
  Rng rng(seed);
  const std::size_t start = uniform_index(rng, world.n_states());
  const Trajectory walk = world.random_walk(start, opts.walk_length, rng);
  std::vector<std::size_t> cells(world.n_obs(), 0);
  for (std::size_t s = 0; s < world.n_states(); ++s) ++cells[world.observe(s)];
  std::vector<std::size_t> sizes;
  for (std::size_t c : cells) {
    sizes.push_back(std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(opts.clone_factor * static_cast<double>(c)))));
  }
  if (opts.restarts == 0) throw InvalidArgument("learn_room_schema: restarts must be positive");
  const CloneStructure clones = CloneStructure::from_sizes(sizes);
  std::optional<TransitionLearningResult> res;
  for (std::size_t r = 0; r < opts.restarts; ++r) {
    EmOptions em = opts.em;
    em.seed = derive_seed(seed, 1 + r);
    TransitionLearningResult run = learn_transitions(walk, clones, world.n_actions(), em);
    const double best = *std::min_element(run.nll_trace.begin(), run.nll_trace.end());
    if (!res || best < *std::min_element(res->nll_trace.begin(), res->nll_trace.end())) {
      res = std::move(run);
    }
  }
  if (nll_trace) *nll_trace = res->nll_trace;
  return extract_schema(res->model, std::span<const Trajectory>(&walk, 1), opts.em.pseudocount,
                        std::move(name));
}

MatchDecision decide(const std::vector<std::vector<double>>& nll,
                     std::span<const std::size_t> steps, double margin) {
  if (nll.empty()) throw InvalidArgument("decide: no schemas");
  const std::size_t n_eval = steps.size();
  for (const auto& row : nll) {
    if (row.size() != n_eval) throw InvalidArgument("decide: ragged NLL table");
  }
  MatchDecision d;
  if (n_eval == 0) return d;
  const std::size_t last = n_eval - 1;
  for (std::size_t s = 1; s < nll.size(); ++s) {
    if (nll[s][last] < nll[d.winner][last]) d.winner = s;
  }
  for (std::size_t s = 0; s < nll.size(); ++s) {
    if (s != d.winner && nll[s][last] == nll[d.winner][last]) d.tied.push_back(s);
  }
  if (nll.size() == 1) {
    d.decision_step = steps[0];
    return d;
  }
  auto leads = [&](std::size_t e) {
    if (!std::isfinite(nll[d.winner][e])) return false;
    for (std::size_t s = 0; s < nll.size(); ++s) {
      if (s == d.winner) continue;
      if (!(nll[s][e] - nll[d.winner][e] >= margin)) return false;
    }
    return true;
  };
  // Walk back from the last evaluation while the lead holds.
  std::size_t first = n_eval;
  for (std::size_t e = n_eval; e-- > 0;) {
    if (!leads(e)) break;
    first = e;
  }
  if (first + 1 < n_eval) d.decision_step = steps[first];
  return d;
}

MatchReport match(const SchemaLibrary& library, const Trajectory& walk,
                  std::size_t n_obs, const MatchOptions& opts) {
  if (library.empty()) throw InvalidArgument("match: empty schema library");
  if (walk.empty()) throw InvalidArgument("match: empty walk");
  if (opts.eval_interval == 0) throw InvalidArgument("match: eval_interval must be positive");
  check_options(opts.em);
  check_trajectory(walk, library.n_actions(), n_obs);

  MatchReport rep;
  const std::size_t limit =
      opts.max_steps == 0 ? walk.size() : std::min(opts.max_steps, walk.size());
  for (std::size_t len = opts.eval_interval; len <= limit; len += opts.eval_interval) {
    rep.steps.push_back(len);
  }
  if (rep.steps.empty()) rep.steps.push_back(limit);

  const std::size_t H = library.size();
  std::vector<TransitionIndex> indices;
  std::vector<std::vector<double>> uniform_pi;
  for (const auto& s : library.entries()) {
    if (opts.tie_clones && !s.clones) {
      throw InvalidArgument("match: clone tying needs clone structure ('" + s.name + "')");
    }
    indices.emplace_back(s.transitions);
    uniform_pi.push_back(InitialDistribution::uniform(s.n_states()).probs);
    rep.names.push_back(s.name);
  }
  rep.nll.assign(H, std::vector<double>(rep.steps.size(), 0.0));
  EmOptions em = opts.em;
  em.workers = 1;
  const std::size_t jobs = H * rep.steps.size();
  parallel_for(jobs, opts.em.workers, [&](std::size_t job) {
    const std::size_t h = job / rep.steps.size();
    const std::size_t e = job % rep.steps.size();
    const Trajectory prefix = walk.slice(0, rep.steps[e]);
    const auto& s = library[h];
    rep.nll[h][e] =
        learn_emissions(indices[h], opts.tie_clones ? &*s.clones : nullptr,
                        std::span<const Trajectory>(&prefix, 1),
                        std::span<const std::vector<double>>(&uniform_pi[h], 1), n_obs, em)
            .nll;
  });
  const MatchDecision d = decide(rep.nll, rep.steps, opts.margin);
  rep.winner = d.winner;
  rep.winner_name = rep.names[d.winner];
  rep.tied = d.tied;
  rep.decision_step = d.decision_step;
  return rep;
}

std::vector<double> softmax(std::span<const double> x, double temperature) {
  if (!(temperature > 0.0)) throw InvalidArgument("softmax: temperature must be positive");
  std::vector<double> p(x.size(), 0.0);
  if (x.empty()) return p;
  const double mx = *std::max_element(x.begin(), x.end());
  if (mx == -std::numeric_limits<double>::infinity()) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(x.size()));
    return p;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    p[i] = std::exp((x[i] - mx) / temperature);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

WindowReport sliding_window_match(const SchemaLibrary& library, const Trajectory& walk,
                                  std::size_t n_obs, const WindowOptions& opts) {
  if (library.empty()) throw InvalidArgument("sliding window: empty schema library");
  if (opts.window == 0 || opts.stride == 0) {
    throw InvalidArgument("sliding window: window and stride must be positive");
  }
  if (opts.window > walk.size()) {
    throw InvalidArgument("sliding window: window (" + std::to_string(opts.window) +
                          ") longer than the walk (" + std::to_string(walk.size()) + ")");
  }
  check_options(opts.em);
  check_trajectory(walk, library.n_actions(), n_obs);

  WindowReport rep;
  const std::size_t H = library.size();
  std::vector<TransitionIndex> indices;
  std::vector<std::vector<double>> uniform_pi;
  for (const auto& s : library.entries()) {
    if (opts.tie_clones && !s.clones) {
      throw InvalidArgument("sliding window: clone tying needs clone structure ('" +
                            s.name + "')");
    }
    indices.emplace_back(s.transitions);
    uniform_pi.push_back(InitialDistribution::uniform(s.n_states()).probs);
    rep.names.push_back(s.name);
  }
  for (std::size_t n = opts.window - 1; n < walk.size(); n += opts.stride) {
    rep.positions.push_back(n);
  }
  const std::size_t P = rep.positions.size();
  rep.log_lik.assign(P, std::vector<double>(H, 0.0));
  EmOptions em = opts.em;
  em.workers = 1;
  parallel_for(P * H, opts.em.workers, [&](std::size_t job) {
    const std::size_t i = job / H;
    const std::size_t h = job % H;
    const std::size_t end = rep.positions[i] + 1;
    const Trajectory win = walk.slice(end - opts.window, end);
    const auto& s = library[h];
    const double nll =
        learn_emissions(indices[h], opts.tie_clones ? &*s.clones : nullptr,
                        std::span<const Trajectory>(&win, 1),
                        std::span<const std::vector<double>>(&uniform_pi[h], 1), n_obs, em)
            .nll;
    rep.log_lik[i][h] = -nll * static_cast<double>(opts.window);
  });
  rep.prob.resize(P);
  rep.selected.resize(P);
  for (std::size_t i = 0; i < P; ++i) {
    rep.prob[i] = softmax(rep.log_lik[i], opts.temperature);
    rep.selected[i] = static_cast<std::size_t>(
        std::max_element(rep.prob[i].begin(), rep.prob[i].end()) - rep.prob[i].begin());
  }
  return rep;
}

}  // namespace cscg
