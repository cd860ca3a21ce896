#include "cscg/learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "cscg/error.hpp"
#include "cscg/parallel.hpp"

namespace cscg {

void check_options(const EmOptions& opts) {
  if (opts.max_iters == 0) throw InvalidArgument("max_iters must be at least 1");
  if (!(opts.pseudocount >= 0.0)) {
    throw InvalidArgument("pseudocount must be non-negative");
  }
}

namespace {

void check_trajectories(std::span<const Trajectory> trajs) {
  if (trajs.empty()) throw InvalidArgument("no trajectories given");
  for (const auto& t : trajs) {
    if (t.empty()) throw InvalidArgument("empty trajectory");
  }
}

template <class T>
const T& pick(std::span<const T> items, std::size_t i) {
  return items.size() == 1 ? items[0] : items[i];
}

template <class T>
void check_per_trajectory(std::span<const T> items, std::size_t n,
                          const char* what) {
  if (items.size() != 1 && items.size() != n) {
    throw InvalidArgument(std::string(what) +
                          ": expected one entry or one per trajectory");
  }
}

bool supports_clone_sparse(const EmissionMatrix& e) {
  try {
    CloneIndex idx(e);
    return true;
  } catch (const InvalidArgument&) {
    return false;
  }
}

// Per-trajectory sufficient statistics for the transition M-step.
struct TransitionStats {
  std::vector<double> counts;  // n_actions x Z x Z
  std::vector<double> first;   // gamma(0)
  double log_lik = 0.0;

  void reset(std::size_t size, std::size_t z) {
    counts.assign(size, 0.0);
    first.assign(z, 0.0);
    log_lik = 0.0;
  }
};

void accumulate_sparse(const GroundedSchema& m, const Trajectory& traj,
                       TransitionStats& st) {
  ForwardBackwardOptions fo;
  fo.clone_sparse = true;
  const MessageSet ms = forward_backward(m, traj, fo);
  const std::size_t Z = m.n_states();
  const TransitionTensor& T = m.transitions;
  std::vector<double> tmp;
  for (std::size_t n = 1; n < traj.size(); ++n) {
    const StepSupport s0 = ms.support[n - 1];
    const StepSupport s1 = ms.support[n];
    const std::size_t a = traj.actions[n - 1];
    auto alpha = ms.alpha_at(n - 1);
    auto beta = ms.beta_at(n);
    tmp.assign(s0.size, 0.0);
    double norm = 0.0;
    for (std::size_t j = 0; j < s0.size; ++j) {
      const double* row = T.row(a, s0.begin + j).data() + s1.begin;
      double acc = 0.0;
      for (std::size_t k = 0; k < s1.size; ++k) acc += row[k] * beta[k];
      tmp[j] = acc;
      norm += alpha[j] * acc;
    }
    if (!(norm > 0.0)) throw ZeroProbabilityError(n, "pairwise posterior has no mass");
    for (std::size_t j = 0; j < s0.size; ++j) {
      const double c = alpha[j] / norm;
      if (c == 0.0) continue;
      const double* row = T.row(a, s0.begin + j).data() + s1.begin;
      double* out = st.counts.data() + (a * Z + s0.begin + j) * Z + s1.begin;
      for (std::size_t k = 0; k < s1.size; ++k) out[k] += c * row[k] * beta[k];
    }
  }
  auto g0 = ms.gamma_at(0);
  for (std::size_t i = 0; i < g0.size(); ++i) st.first[ms.support[0].begin + i] = g0[i];
  st.log_lik = ms.log_likelihood();
}

void accumulate_dense(const TransitionIndex& index, const EmissionMatrix& e,
                      std::span<const double> initial, const Trajectory& traj,
                      TransitionStats& st) {
  const MessageSet ms = forward_backward(index, e, initial, traj);
  const std::size_t Z = index.n_states();
  std::vector<double> w(Z), tb(Z);
  for (std::size_t n = 1; n < traj.size(); ++n) {
    const std::size_t a = traj.actions[n - 1];
    const std::size_t x = traj.observations[n];
    auto alpha = ms.alpha_at(n - 1);
    auto beta = ms.beta_at(n);
    for (std::size_t k = 0; k < Z; ++k) w[k] = e(k, x) * beta[k];
    index.backward(a, w, tb);
    double norm = 0.0;
    for (std::size_t j = 0; j < Z; ++j) norm += alpha[j] * tb[j];
    if (!(norm > 0.0)) throw ZeroProbabilityError(n, "pairwise posterior has no mass");
    for (std::size_t j = 0; j < Z; ++j) {
      const double c = alpha[j] / norm;
      if (c == 0.0) continue;
      double* out = st.counts.data() + (a * Z + j) * Z;
      const double fl = c * index.floor(a, j);
      if (fl != 0.0) {
        for (std::size_t k = 0; k < Z; ++k) out[k] += fl * w[k];
      }
      for (const auto& en : index.entries(a, j)) {
        out[en.target] += c * en.excess * w[en.target];
      }
    }
  }
  auto g0 = ms.gamma_at(0);
  std::copy(g0.begin(), g0.end(), st.first.begin());
  st.log_lik = ms.log_likelihood();
}

// Runs `one(i, stats)` for every trajectory and reduces in trajectory order.
template <class One>
TransitionStats reduce_stats(std::size_t n_traj, std::size_t workers,
                             std::size_t size, std::size_t z, One&& one) {
  TransitionStats total;
  total.reset(size, z);
  const std::size_t batch = std::max<std::size_t>(1, workers);
  std::vector<TransitionStats> local(std::min(batch, n_traj));
  for (std::size_t start = 0; start < n_traj; start += batch) {
    const std::size_t count = std::min(batch, n_traj - start);
    parallel_for(count, workers, [&](std::size_t i) {
      local[i].reset(size, z);
      one(start + i, local[i]);
    });
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t c = 0; c < size; ++c) total.counts[c] += local[i].counts[c];
      for (std::size_t k = 0; k < z; ++k) total.first[k] += local[i].first[k];
      total.log_lik += local[i].log_lik;
    }
  }
  return total;
}

void m_step_transitions(TransitionTensor& t, const std::vector<double>& counts,
                        double pseudocount) {
  const std::size_t Z = t.n_states();
  for (std::size_t a = 0; a < t.n_actions(); ++a) {
    for (std::size_t j = 0; j < Z; ++j) {
      const double* c = counts.data() + (a * Z + j) * Z;
      double sum = 0.0;
      for (std::size_t k = 0; k < Z; ++k) sum += c[k] + pseudocount;
      if (!(sum > 0.0)) continue;  // unvisited row without smoothing
      auto row = t.row(a, j);
      for (std::size_t k = 0; k < Z; ++k) row[k] = (c[k] + pseudocount) / sum;
    }
  }
}

std::size_t total_steps(std::span<const Trajectory> trajs) {
  std::size_t n = 0;
  for (const auto& t : trajs) n += t.size();
  return n;
}

bool stop_now(const std::vector<double>& trace, std::size_t it,
              const EmOptions& opts, bool& converged) {
  if (it > 0 && std::abs(trace[it] - trace[it - 1]) < opts.convergence_tol) {
    converged = true;
    return true;
  }
  return it == opts.max_iters;
}

}  // namespace

TransitionLearningResult learn_transitions(const Trajectory& traj,
                                           const CloneStructure& clones,
                                           std::size_t n_actions,
                                           const EmOptions& opts,
                                           bool clone_sparse) {
  return learn_transitions(std::span<const Trajectory>(&traj, 1), clones,
                           n_actions, opts, clone_sparse);
}

TransitionLearningResult learn_transitions(std::span<const Trajectory> trajs,
                                           const CloneStructure& clones,
                                           std::size_t n_actions,
                                           const EmOptions& opts,
                                           bool clone_sparse) {
  check_options(opts);
  check_trajectories(trajs);
  if (n_actions == 0) throw InvalidArgument("n_actions must be at least 1");
  const std::size_t Z = clones.n_states();
  if (Z == 0) throw InvalidArgument("clone structure has no states");
  for (const auto& t : trajs) check_trajectory(t, n_actions, clones.n_groups());

  GroundedSchema m;
  m.transitions = TransitionTensor::random(n_actions, Z, opts.seed);
  m.clones = clones;
  m.emissions = EmissionMatrix::deterministic(clones);
  m.initial = InitialDistribution::uniform(Z);

  const std::size_t size = n_actions * Z * Z;
  const double n_steps = static_cast<double>(total_steps(trajs));
  TransitionLearningResult out;
  GroundedSchema best = m;
  double best_nll = std::numeric_limits<double>::infinity();

  for (std::size_t it = 0;; ++it) {
    std::optional<TransitionIndex> index;
    if (!clone_sparse) index.emplace(m.transitions);
    TransitionStats st = reduce_stats(
        trajs.size(), opts.workers, size, Z,
        [&](std::size_t i, TransitionStats& s) {
          if (clone_sparse) {
            accumulate_sparse(m, trajs[i], s);
          } else {
            accumulate_dense(*index, m.emissions, m.initial.probs, trajs[i], s);
          }
        });
    const double nll = -st.log_lik / n_steps;
    out.nll_trace.push_back(nll);
    if (nll < best_nll) {
      best_nll = nll;
      best = m;
    }
    out.iterations = it;
    if (stop_now(out.nll_trace, it, opts, out.converged)) break;

    m_step_transitions(m.transitions, st.counts, opts.pseudocount);
    const double inv = 1.0 / static_cast<double>(trajs.size());
    for (std::size_t k = 0; k < Z; ++k) m.initial.probs[k] = st.first[k] * inv;
  }
  out.model = std::move(best);
  return out;
}

TransitionFit refine_transitions(TransitionTensor init,
                                 std::span<const Trajectory> trajs,
                                 std::span<const EmissionMatrix> emissions,
                                 std::span<const std::vector<double>> initials,
                                 const EmOptions& opts, bool learn_initial) {
  check_options(opts);
  check_trajectories(trajs);
  check_per_trajectory(emissions, trajs.size(), "emissions");
  check_per_trajectory(initials, trajs.size(), "initials");
  if (learn_initial && initials.size() != 1) {
    throw InvalidArgument("a learned initial distribution must be shared");
  }
  const std::size_t Z = init.n_states();
  const std::size_t A = init.n_actions();
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    if (pick(emissions, i).n_states() != Z || pick(initials, i).size() != Z) {
      throw InvalidArgument("emission or initial size does not match T");
    }
    check_trajectory(trajs[i], A, pick(emissions, i).n_obs());
  }

  TransitionFit out;
  out.transitions = std::move(init);
  std::vector<double> shared_initial = initials[0];
  TransitionTensor best = out.transitions;
  std::vector<double> best_initial = shared_initial;
  double best_nll = std::numeric_limits<double>::infinity();
  const double n_steps = static_cast<double>(total_steps(trajs));

  for (std::size_t it = 0;; ++it) {
    const TransitionIndex index(out.transitions);
    TransitionStats st = reduce_stats(
        trajs.size(), opts.workers, A * Z * Z, Z,
        [&](std::size_t i, TransitionStats& s) {
          std::span<const double> pi =
              learn_initial ? std::span<const double>(shared_initial)
                            : std::span<const double>(pick(initials, i));
          accumulate_dense(index, pick(emissions, i), pi, trajs[i], s);
        });
    const double nll = -st.log_lik / n_steps;
    out.nll_trace.push_back(nll);
    if (nll < best_nll) {
      best_nll = nll;
      best = out.transitions;
      best_initial = shared_initial;
    }
    out.iterations = it;
    if (stop_now(out.nll_trace, it, opts, out.converged)) break;

    m_step_transitions(out.transitions, st.counts, opts.pseudocount);
    if (learn_initial) {
      const double inv = 1.0 / static_cast<double>(trajs.size());
      for (std::size_t k = 0; k < Z; ++k) shared_initial[k] = st.first[k] * inv;
    }
  }
  out.transitions = std::move(best);
  out.initial = std::move(best_initial);
  return out;
}

namespace {

double training_nll(const GroundedSchema& m, std::span<const Trajectory> trajs,
                    bool sparse) {
  double ll = 0.0;
  std::size_t n = 0;
  std::optional<TransitionIndex> index;
  if (!sparse) index.emplace(m.transitions);
  for (const auto& t : trajs) {
    const LikelihoodReport r =
        sparse ? evaluate_likelihood(m, t, true)
               : evaluate_likelihood(*index, m.emissions, m.initial.probs, t);
    if (!std::isfinite(r.nll)) return std::numeric_limits<double>::infinity();
    ll += r.nll * static_cast<double>(t.size());
    n += t.size();
  }
  return ll / static_cast<double>(n);
}

}  // namespace

ViterbiRefineResult viterbi_refine(const GroundedSchema& model,
                                   const Trajectory& traj, double pseudocount,
                                   std::size_t max_iters) {
  return viterbi_refine(model, std::span<const Trajectory>(&traj, 1),
                        pseudocount, max_iters);
}

ViterbiRefineResult viterbi_refine(const GroundedSchema& model,
                                   std::span<const Trajectory> trajs,
                                   double pseudocount, std::size_t max_iters) {
  check_trajectories(trajs);
  if (!(pseudocount >= 0.0)) throw InvalidArgument("pseudocount must be non-negative");
  const bool sparse = supports_clone_sparse(model.emissions);
  const std::size_t Z = model.n_states();
  const std::size_t A = model.n_actions();

  ViterbiRefineResult out;
  out.model = model;
  const double input_nll = training_nll(model, trajs, sparse);
  out.nll_trace.push_back(input_nll);

  GroundedSchema cur = model;
  double cur_nll = input_nll;
  std::vector<std::vector<std::size_t>> prev_paths;
  for (std::size_t it = 0; it < max_iters; ++it) {
    std::vector<std::vector<std::size_t>> paths;
    try {
      std::optional<TransitionIndex> index;
      if (!sparse) index.emplace(cur.transitions);
      for (const auto& t : trajs) {
        paths.push_back(sparse ? map_decode(cur, t, true).states
                               : map_decode(*index, cur.emissions,
                                            cur.initial.probs, t)
                                     .states);
      }
    } catch (const NoPathError&) {
      out.no_path = true;
      out.model = model;
      return out;
    }
    if (paths == prev_paths) break;
    std::vector<double> counts(A * Z * Z, 0.0);
    for (std::size_t i = 0; i < trajs.size(); ++i) {
      const auto& z = paths[i];
      for (std::size_t n = 1; n < z.size(); ++n) {
        counts[(trajs[i].actions[n - 1] * Z + z[n - 1]) * Z + z[n]] += 1.0;
      }
    }
    m_step_transitions(cur.transitions, counts, pseudocount);
    cur_nll = training_nll(cur, trajs, sparse);
    out.nll_trace.push_back(cur_nll);
    out.iterations = it + 1;
    prev_paths = std::move(paths);
  }
  // Hard counts may trade marginal likelihood for sharper paths. Keep the
  // refined model unless it fits the training data measurably worse.
  if (cur_nll <= input_nll + 1e-6) {
    out.model = std::move(cur);
  } else {
    out.reverted = true;
    out.model = model;
  }
  return out;
}

void pool_posteriors(std::span<double> gamma, const CloneStructure& clones) {
  if (gamma.size() != clones.n_states()) {
    throw InvalidArgument("posterior size does not match clone structure");
  }
  for (std::size_t g = 0; g < clones.n_groups(); ++g) {
    const std::size_t b = clones.group_begin(g);
    const std::size_t e = clones.group_end(g);
    double s = 0.0;
    for (std::size_t i = b; i < e; ++i) s += gamma[i];
    const double mean = s / static_cast<double>(e - b);
    for (std::size_t i = b; i < e; ++i) gamma[i] = mean;
  }
}

EmissionLearningResult learn_emissions(const UngroundedSchema& schema,
                                       const Trajectory& traj,
                                       std::size_t n_obs, bool tie_clones,
                                       const EmOptions& opts) {
  if (tie_clones && !schema.clones) {
    throw InvalidArgument("clone tying needs a schema with clone structure");
  }
  const TransitionIndex index(schema.transitions);
  const std::vector<double> pi =
      InitialDistribution::uniform(schema.n_states()).probs;
  return learn_emissions(index, tie_clones ? &*schema.clones : nullptr,
                         std::span<const Trajectory>(&traj, 1),
                         std::span<const std::vector<double>>(&pi, 1), n_obs,
                         opts);
}

EmissionLearningResult learn_emissions(
    const TransitionIndex& index, const CloneStructure* tie,
    std::span<const Trajectory> trajs,
    std::span<const std::vector<double>> initials, std::size_t n_obs,
    const EmOptions& opts) {
  check_options(opts);
  check_trajectories(trajs);
  check_per_trajectory(initials, trajs.size(), "initials");
  if (n_obs == 0) throw InvalidArgument("n_obs must be at least 1");
  const std::size_t Z = index.n_states();
  if (tie && tie->n_states() != Z) {
    throw InvalidArgument("clone structure does not match the schema");
  }
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    if (pick(initials, i).size() != Z) {
      throw InvalidArgument("initial distribution size does not match T");
    }
    check_trajectory(trajs[i], index.n_actions(), n_obs);
  }

  EmissionLearningResult out;
  out.emissions = EmissionMatrix::uniform(Z, n_obs);
  EmissionMatrix best = out.emissions;
  double best_nll = std::numeric_limits<double>::infinity();
  const double n_steps = static_cast<double>(total_steps(trajs));
  const double p = opts.pseudocount;

  std::vector<double> counts(Z * n_obs), totals(Z), gamma(Z);
  for (std::size_t it = 0;; ++it) {
    std::fill(counts.begin(), counts.end(), 0.0);
    std::fill(totals.begin(), totals.end(), 0.0);
    double ll = 0.0;
    for (std::size_t i = 0; i < trajs.size(); ++i) {
      const Trajectory& t = trajs[i];
      const MessageSet ms =
          forward_backward(index, out.emissions, pick(initials, i), t);
      ll += ms.log_likelihood();
      for (std::size_t n = 0; n < t.size(); ++n) {
        auto g = ms.gamma_at(n);
        std::copy(g.begin(), g.end(), gamma.begin());
        if (tie) pool_posteriors(gamma, *tie);
        const std::size_t x = t.observations[n];
        for (std::size_t k = 0; k < Z; ++k) {
          counts[k * n_obs + x] += gamma[k];
          totals[k] += gamma[k];
        }
      }
    }
    const double nll = -ll / n_steps;
    out.nll_trace.push_back(nll);
    if (nll < best_nll) {
      best_nll = nll;
      best = out.emissions;
    }
    out.iterations = it;
    if (stop_now(out.nll_trace, it, opts, out.converged)) break;

    std::vector<double> next(out.emissions.data().begin(),
                             out.emissions.data().end());
    auto update_row = [&](std::size_t k) {
      const double denom = totals[k] + p * static_cast<double>(n_obs);
      if (!(denom > 0.0)) return;
      for (std::size_t x = 0; x < n_obs; ++x) {
        next[k * n_obs + x] = (counts[k * n_obs + x] + p) / denom;
      }
    };
    if (tie) {
      for (std::size_t g = 0; g < tie->n_groups(); ++g) {
        const std::size_t b = tie->group_begin(g);
        update_row(b);
        for (std::size_t k = b + 1; k < tie->group_end(g); ++k) {
          std::copy_n(next.begin() + static_cast<std::ptrdiff_t>(b * n_obs), n_obs,
                      next.begin() + static_cast<std::ptrdiff_t>(k * n_obs));
        }
      }
    } else {
      for (std::size_t k = 0; k < Z; ++k) update_row(k);
    }
    out.emissions = EmissionMatrix(Z, n_obs, std::move(next));
  }
  out.emissions = std::move(best);
  out.nll = best_nll;
  return out;
}

}  // namespace cscg
