#include "cscg/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cscg/error.hpp"

namespace cscg {

TransitionIndex::TransitionIndex(const TransitionTensor& t)
    : n_actions_(t.n_actions()), n_states_(t.n_states()) {
  const std::size_t rows = n_actions_ * n_states_;
  floors_.resize(rows);
  row_begin_.resize(rows + 1);
  for (std::size_t a = 0; a < n_actions_; ++a) {
    for (std::size_t j = 0; j < n_states_; ++j) {
      const std::size_t r = a * n_states_ + j;
      auto row = t.row(a, j);
      const double fl = row.empty() ? 0.0 : *std::min_element(row.begin(), row.end());
      floors_[r] = fl;
      row_begin_[r] = entries_.size();
      for (std::size_t k = 0; k < n_states_; ++k) {
        if (row[k] != fl) {
          entries_.push_back({static_cast<std::uint32_t>(k), row[k], row[k] - fl});
        }
      }
    }
  }
  row_begin_[rows] = entries_.size();
}

double TransitionIndex::value(std::size_t a, std::size_t j, std::size_t k) const {
  auto row = entries(a, j);
  auto it = std::lower_bound(
      row.begin(), row.end(), k,
      [](const Entry& e, std::size_t t) { return e.target < t; });
  if (it != row.end() && it->target == k) return it->value;
  return floor(a, j);
}

void TransitionIndex::forward(std::size_t a, std::span<const double> in,
                              std::span<double> out) const {
  const double* fl = floors_.data() + a * n_states_;
  double base = 0.0;
  for (std::size_t j = 0; j < n_states_; ++j) base += in[j] * fl[j];
  std::fill(out.begin(), out.end(), base);
  for (std::size_t j = 0; j < n_states_; ++j) {
    const double w = in[j];
    if (w == 0.0) continue;
    for (const Entry& e : entries(a, j)) out[e.target] += w * e.excess;
  }
}

void TransitionIndex::backward(std::size_t a, std::span<const double> in,
                               std::span<double> out) const {
  const double* fl = floors_.data() + a * n_states_;
  const double total = std::accumulate(in.begin(), in.end(), 0.0);
  for (std::size_t j = 0; j < n_states_; ++j) {
    double acc = fl[j] * total;
    for (const Entry& e : entries(a, j)) acc += e.excess * in[e.target];
    out[j] = acc;
  }
}

void TransitionIndex::forward_max(std::size_t a, std::span<const double> in,
                                  std::span<double> out,
                                  std::span<std::uint32_t> argmax) const {
  const double* fl = floors_.data() + a * n_states_;
  double best = 0.0;
  std::uint32_t best_j = 0;
  for (std::size_t j = 0; j < n_states_; ++j) {
    const double v = in[j] * fl[j];
    if (v > best) {
      best = v;
      best_j = static_cast<std::uint32_t>(j);
    }
  }
  std::fill(out.begin(), out.end(), best);
  std::fill(argmax.begin(), argmax.end(), best_j);
  for (std::size_t j = 0; j < n_states_; ++j) {
    const double w = in[j];
    if (w == 0.0) continue;
    for (const Entry& e : entries(a, j)) {
      const double v = w * e.value;
      if (v > out[e.target] || (v == out[e.target] && j < argmax[e.target])) {
        out[e.target] = v;
        argmax[e.target] = static_cast<std::uint32_t>(j);
      }
    }
  }
}

CloneIndex::CloneIndex(const EmissionMatrix& e)
    : begin_(e.n_obs(), 0), size_(e.n_obs(), 0) {
  if (!e.is_deterministic()) {
    throw InvalidArgument("clone-sparse inference needs a deterministic "
                          "emission matrix");
  }
  const auto obs_of = e.argmax_observations();
  for (std::size_t s = 0; s < obs_of.size(); ++s) {
    const std::size_t o = obs_of[s];
    if (size_[o] == 0) {
      begin_[o] = s;
    } else if (begin_[o] + size_[o] != s) {
      throw InvalidArgument("clone-sparse inference needs contiguous clones "
                            "(observation " + std::to_string(o) + ")");
    }
    ++size_[o];
  }
}

std::vector<double> MessageSet::dense_alpha(std::size_t n) const {
  std::vector<double> out(n_states, 0.0);
  auto a = alpha_at(n);
  std::copy(a.begin(), a.end(), out.begin() + static_cast<std::ptrdiff_t>(support[n].begin));
  return out;
}

std::vector<double> MessageSet::dense_gamma(std::size_t n) const {
  std::vector<double> out(n_states, 0.0);
  auto g = gamma_at(n);
  std::copy(g.begin(), g.end(), out.begin() + static_cast<std::ptrdiff_t>(support[n].begin));
  return out;
}

double MessageSet::log_likelihood() const {
  return std::accumulate(log_norms.begin(), log_norms.end(), 0.0);
}

double MessageSet::nll() const {
  return -log_likelihood() / static_cast<double>(log_norms.size());
}

namespace {

void check_model(const GroundedSchema& m, const Trajectory& traj) {
  const std::size_t n = m.n_states();
  if (m.emissions.n_states() != n || m.initial.size() != n) {
    throw InvalidArgument("model dimensions are inconsistent");
  }
  check_trajectory(traj, m.n_actions(), m.n_obs());
}

void check_components(const TransitionIndex& index, const EmissionMatrix& e,
                      std::span<const double> initial, const Trajectory& traj) {
  const std::size_t n = index.n_states();
  if (e.n_states() != n || initial.size() != n) {
    throw InvalidArgument("model dimensions are inconsistent");
  }
  check_trajectory(traj, index.n_actions(), e.n_obs());
}

double scale_of(const ForwardBackwardOptions& opts, std::size_t n) {
  return n < opts.scale_injection.size() ? opts.scale_injection[n] : 1.0;
}

// Normalizes v in place; returns the sum (0 means impossible).
double normalize(std::span<double> v) {
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  if (s > 0.0 && std::isfinite(s)) {
    const double inv = 1.0 / s;
    for (double& x : v) x *= inv;
  }
  return s;
}

void layout(MessageSet& ms, bool with_backward) {
  std::size_t total = 0;
  ms.offset.resize(ms.support.size());
  for (std::size_t n = 0; n < ms.support.size(); ++n) {
    ms.offset[n] = total;
    total += ms.support[n].size;
  }
  ms.alpha.assign(total, 0.0);
  if (with_backward) {
    ms.beta.assign(total, 0.0);
    ms.gamma.assign(total, 0.0);
  }
  ms.log_norms.assign(ms.support.size(), 0.0);
}

std::span<double> span_at(std::vector<double>& v, const MessageSet& ms,
                          std::size_t n) {
  return {v.data() + ms.offset[n], ms.support[n].size};
}

void compute_gamma(MessageSet& ms) {
  for (std::size_t n = 0; n < ms.n_steps(); ++n) {
    auto a = ms.alpha_at(n);
    auto b = ms.beta_at(n);
    auto g = span_at(ms.gamma, ms, n);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = a[i] * b[i];
    if (normalize(g) <= 0.0) {
      throw ZeroProbabilityError(n, "posterior has no mass");
    }
  }
}

MessageSet forward_backward_sparse(const GroundedSchema& m,
                                   const Trajectory& traj,
                                   const ForwardBackwardOptions& opts) {
  const CloneIndex clones(m.emissions);
  const std::size_t N = traj.size();
  MessageSet ms;
  ms.n_states = m.n_states();
  ms.support.resize(N);
  for (std::size_t n = 0; n < N; ++n) {
    const std::size_t x = traj.observations[n];
    if (clones.size(x) == 0) {
      throw ZeroProbabilityError(n, "observation " + std::to_string(x) +
                                        " has no clones");
    }
    ms.support[n] = {clones.begin(x), clones.size(x)};
  }
  layout(ms, opts.backward);

  const TransitionTensor& T = m.transitions;
  for (std::size_t n = 0; n < N; ++n) {
    auto cur = span_at(ms.alpha, ms, n);
    const StepSupport s1 = ms.support[n];
    if (n == 0) {
      for (std::size_t k = 0; k < s1.size; ++k) cur[k] = m.initial.probs[s1.begin + k];
    } else {
      const StepSupport s0 = ms.support[n - 1];
      auto prev = ms.alpha_at(n - 1);
      const std::size_t a = traj.actions[n - 1];
      for (std::size_t j = 0; j < s0.size; ++j) {
        const double w = prev[j];
        if (w == 0.0) continue;
        const double* row = T.row(a, s0.begin + j).data() + s1.begin;
        for (std::size_t k = 0; k < s1.size; ++k) cur[k] += w * row[k];
      }
    }
    const double sc = scale_of(opts, n);
    if (sc != 1.0) {
      for (double& v : cur) v *= sc;
    }
    const double p = normalize(cur);
    if (!(p > 0.0) || !std::isfinite(p)) {
      throw ZeroProbabilityError(n, "forward message vanished");
    }
    ms.log_norms[n] = std::log(p) - std::log(sc);
  }
  if (!opts.backward) return ms;

  {
    auto last = span_at(ms.beta, ms, N - 1);
    std::fill(last.begin(), last.end(), 1.0 / static_cast<double>(last.size()));
  }
  for (std::size_t n = N - 1; n-- > 0;) {
    const StepSupport s0 = ms.support[n];
    const StepSupport s1 = ms.support[n + 1];
    auto next = ms.beta_at(n + 1);
    auto cur = span_at(ms.beta, ms, n);
    const std::size_t a = traj.actions[n];
    for (std::size_t j = 0; j < s0.size; ++j) {
      const double* row = T.row(a, s0.begin + j).data() + s1.begin;
      double acc = 0.0;
      for (std::size_t k = 0; k < s1.size; ++k) acc += row[k] * next[k];
      cur[j] = acc;
    }
    if (normalize(cur) <= 0.0) {
      throw ZeroProbabilityError(n, "backward message vanished");
    }
  }
  compute_gamma(ms);
  return ms;
}

MessageSet forward_backward_dense(const TransitionIndex& index,
                                  const EmissionMatrix& E,
                                  std::span<const double> initial,
                                  const Trajectory& traj,
                                  const ForwardBackwardOptions& opts) {
  const std::size_t N = traj.size();
  const std::size_t Z = index.n_states();
  MessageSet ms;
  ms.n_states = Z;
  ms.support.assign(N, StepSupport{0, Z});
  layout(ms, opts.backward);

  std::vector<double> tmp(Z);
  for (std::size_t n = 0; n < N; ++n) {
    auto cur = span_at(ms.alpha, ms, n);
    const std::size_t x = traj.observations[n];
    if (n == 0) {
      for (std::size_t k = 0; k < Z; ++k) cur[k] = initial[k] * E(k, x);
    } else {
      index.forward(traj.actions[n - 1], ms.alpha_at(n - 1), tmp);
      for (std::size_t k = 0; k < Z; ++k) cur[k] = tmp[k] * E(k, x);
    }
    const double sc = scale_of(opts, n);
    if (sc != 1.0) {
      for (double& v : cur) v *= sc;
    }
    const double p = normalize(cur);
    if (!(p > 0.0) || !std::isfinite(p)) {
      throw ZeroProbabilityError(n, "forward message vanished");
    }
    ms.log_norms[n] = std::log(p) - std::log(sc);
  }
  if (!opts.backward) return ms;

  {
    auto last = span_at(ms.beta, ms, N - 1);
    std::fill(last.begin(), last.end(), 1.0 / static_cast<double>(Z));
  }
  for (std::size_t n = N - 1; n-- > 0;) {
    auto next = ms.beta_at(n + 1);
    const std::size_t x = traj.observations[n + 1];
    for (std::size_t k = 0; k < Z; ++k) tmp[k] = next[k] * E(k, x);
    auto cur = span_at(ms.beta, ms, n);
    index.backward(traj.actions[n], tmp, cur);
    if (normalize(cur) <= 0.0) {
      throw ZeroProbabilityError(n, "backward message vanished");
    }
  }
  compute_gamma(ms);
  return ms;
}

template <class LogProb>
Decoding backtrack(std::vector<std::uint32_t>& back, std::span<const StepSupport> sup,
                   std::span<const double> last, std::size_t N,
                   const std::vector<std::size_t>& offsets, LogProb&& log_prob) {
  Decoding d;
  d.states.resize(N);
  std::size_t best = 0;
  for (std::size_t k = 1; k < last.size(); ++k) {
    if (last[k] > last[best]) best = k;
  }
  if (!(last[best] > 0.0)) throw NoPathError("no path with positive probability");
  std::size_t local = best;
  for (std::size_t n = N; n-- > 0;) {
    d.states[n] = sup[n].begin + local;
    if (n > 0) local = back[offsets[n] + local];
  }
  d.log_prob = log_prob(d.states);
  return d;
}

}  // namespace

MessageSet forward_backward(const GroundedSchema& model, const Trajectory& traj,
                            const ForwardBackwardOptions& opts) {
  check_model(model, traj);
  if (opts.clone_sparse) return forward_backward_sparse(model, traj, opts);
  const TransitionIndex index(model.transitions);
  return forward_backward_dense(index, model.emissions, model.initial.probs,
                                traj, opts);
}

MessageSet forward_backward(const TransitionIndex& index,
                            const EmissionMatrix& emissions,
                            std::span<const double> initial,
                            const Trajectory& traj,
                            const ForwardBackwardOptions& opts) {
  check_components(index, emissions, initial, traj);
  return forward_backward_dense(index, emissions, initial, traj, opts);
}

double nll(const GroundedSchema& model, const Trajectory& traj,
           bool clone_sparse) {
  ForwardBackwardOptions opts;
  opts.clone_sparse = clone_sparse;
  opts.backward = false;
  return forward_backward(model, traj, opts).nll();
}

LikelihoodReport evaluate_likelihood(const GroundedSchema& model,
                                     const Trajectory& traj,
                                     bool clone_sparse) {
  try {
    return {nll(model, traj, clone_sparse), std::nullopt};
  } catch (const ZeroProbabilityError& e) {
    return {std::numeric_limits<double>::infinity(), e.step()};
  }
}

LikelihoodReport evaluate_likelihood(const TransitionIndex& index,
                                     const EmissionMatrix& emissions,
                                     std::span<const double> initial,
                                     const Trajectory& traj) {
  ForwardBackwardOptions opts;
  opts.backward = false;
  try {
    return {forward_backward(index, emissions, initial, traj, opts).nll(),
            std::nullopt};
  } catch (const ZeroProbabilityError& e) {
    return {std::numeric_limits<double>::infinity(), e.step()};
  }
}

Decoding map_decode(const GroundedSchema& model, const Trajectory& traj,
                    bool clone_sparse) {
  check_model(model, traj);
  if (!clone_sparse) {
    const TransitionIndex index(model.transitions);
    return map_decode(index, model.emissions, model.initial.probs, traj);
  }
  const CloneIndex clones(model.emissions);
  const std::size_t N = traj.size();
  std::vector<StepSupport> sup(N);
  std::vector<std::size_t> offsets(N);
  std::size_t total = 0;
  for (std::size_t n = 0; n < N; ++n) {
    const std::size_t x = traj.observations[n];
    sup[n] = {clones.begin(x), clones.size(x)};
    offsets[n] = total;
    total += sup[n].size;
    if (sup[n].size == 0) throw NoPathError("observation without clones");
  }
  std::vector<std::uint32_t> back(total, 0);
  std::vector<double> prev(sup[0].size), cur;
  for (std::size_t k = 0; k < sup[0].size; ++k) {
    prev[k] = model.initial.probs[sup[0].begin + k];
  }
  const TransitionTensor& T = model.transitions;
  auto rescale = [](std::vector<double>& v) {
    const double mx = *std::max_element(v.begin(), v.end());
    if (!(mx > 0.0)) throw NoPathError("no path with positive probability");
    for (double& x : v) x /= mx;
  };
  rescale(prev);
  for (std::size_t n = 1; n < N; ++n) {
    const StepSupport s0 = sup[n - 1];
    const StepSupport s1 = sup[n];
    const std::size_t a = traj.actions[n - 1];
    cur.assign(s1.size, 0.0);
    std::uint32_t* bp = back.data() + offsets[n];
    for (std::size_t j = 0; j < s0.size; ++j) {
      const double w = prev[j];
      if (w == 0.0) continue;
      const double* row = T.row(a, s0.begin + j).data() + s1.begin;
      for (std::size_t k = 0; k < s1.size; ++k) {
        const double v = w * row[k];
        if (v > cur[k]) {
          cur[k] = v;
          bp[k] = static_cast<std::uint32_t>(j);
        }
      }
    }
    rescale(cur);
    prev.swap(cur);
  }
  return backtrack(back, sup, prev, N, offsets,
                   [&](const std::vector<std::size_t>& z) {
                     return path_log_prob(model, traj, z);
                   });
}

Decoding map_decode(const TransitionIndex& index, const EmissionMatrix& E,
                    std::span<const double> initial, const Trajectory& traj) {
  check_components(index, E, initial, traj);
  const std::size_t N = traj.size();
  const std::size_t Z = index.n_states();
  std::vector<StepSupport> sup(N, StepSupport{0, Z});
  std::vector<std::size_t> offsets(N);
  for (std::size_t n = 0; n < N; ++n) offsets[n] = n * Z;
  std::vector<std::uint32_t> back(N * Z, 0);
  std::vector<double> prev(Z), cur(Z);
  auto rescale = [](std::vector<double>& v) {
    const double mx = *std::max_element(v.begin(), v.end());
    if (!(mx > 0.0)) throw NoPathError("no path with positive probability");
    for (double& x : v) x /= mx;
  };
  for (std::size_t k = 0; k < Z; ++k) {
    prev[k] = initial[k] * E(k, traj.observations[0]);
  }
  rescale(prev);
  for (std::size_t n = 1; n < N; ++n) {
    std::span<std::uint32_t> bp(back.data() + offsets[n], Z);
    index.forward_max(traj.actions[n - 1], prev, cur, bp);
    const std::size_t x = traj.observations[n];
    for (std::size_t k = 0; k < Z; ++k) cur[k] *= E(k, x);
    rescale(cur);
    prev.swap(cur);
  }
  return backtrack(back, sup, prev, N, offsets,
                   [&](const std::vector<std::size_t>& z) {
                     return path_log_prob(index, E, initial, traj, z);
                   });
}

double path_log_prob(const GroundedSchema& m, const Trajectory& traj,
                     std::span<const std::size_t> z) {
  if (z.size() != traj.size()) {
    throw InvalidArgument("path length does not match trajectory");
  }
  double lp = std::log(m.initial.probs[z[0]]) +
              std::log(m.emissions(z[0], traj.observations[0]));
  for (std::size_t n = 1; n < z.size(); ++n) {
    lp += std::log(m.transitions(traj.actions[n - 1], z[n - 1], z[n]));
    lp += std::log(m.emissions(z[n], traj.observations[n]));
  }
  return lp;
}

double path_log_prob(const TransitionIndex& index, const EmissionMatrix& e,
                     std::span<const double> initial, const Trajectory& traj,
                     std::span<const std::size_t> z) {
  if (z.size() != traj.size()) {
    throw InvalidArgument("path length does not match trajectory");
  }
  double lp = std::log(initial[z[0]]) + std::log(e(z[0], traj.observations[0]));
  for (std::size_t n = 1; n < z.size(); ++n) {
    lp += std::log(index.value(traj.actions[n - 1], z[n - 1], z[n]));
    lp += std::log(e(z[n], traj.observations[n]));
  }
  return lp;
}

}  // namespace cscg
