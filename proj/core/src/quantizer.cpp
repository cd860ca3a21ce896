#include "cscg/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cscg/error.hpp"
#include "cscg/random.hpp"

namespace cscg {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::size_t nearest(const std::vector<double>& centroids, std::size_t dim,
                    std::size_t k, std::span<const double> x, double* dist) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < k; ++c) {
    const double d = sq_dist({centroids.data() + c * dim, dim}, x);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist) *dist = best_d;
  return best;
}

}  // namespace

KMeansResult fit_kmeans(std::span<const Point> data, std::size_t k,
                        std::uint64_t seed, std::size_t max_iters) {
  if (k == 0) throw InvalidArgument("k-means: k must be at least 1");
  if (data.size() < k) {
    throw InvalidArgument("k-means: fewer points (" + std::to_string(data.size()) +
                          ") than clusters (" + std::to_string(k) + ")");
  }
  const std::size_t dim = data[0].size();
  if (dim == 0) throw InvalidArgument("k-means: zero-dimensional data");
  for (const auto& p : data) {
    if (p.size() != dim) throw InvalidArgument("k-means: inconsistent dimensions");
  }
  const std::size_t n = data.size();

  // k-means++ seeding.
  Rng rng(seed);
  std::vector<double> cent(k * dim);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t first = uniform_index(rng, n);
  std::copy(data[first].begin(), data[first].end(), cent.begin());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(data[i], {cent.data() + (c - 1) * dim, dim}));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double r = uniform01(rng) * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > r && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = uniform_index(rng, n);
    }
    std::copy(data[pick].begin(), data[pick].end(),
              cent.begin() + static_cast<std::ptrdiff_t>(c * dim));
  }

  KMeansResult out;
  std::vector<std::size_t> assign(n, k);
  std::vector<double> dist(n);
  std::vector<std::size_t> count(k);
  for (std::size_t it = 0;; ++it) {
    bool changed = false;
    double distortion = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = nearest(cent, dim, k, data[i], &dist[i]);
      if (c != assign[i]) {
        changed = true;
        assign[i] = c;
      }
      distortion += dist[i];
    }
    out.distortion_trace.push_back(distortion);
    out.iterations = it;
    if (!changed || it == max_iters) break;

    std::fill(cent.begin(), cent.end(), 0.0);
    std::fill(count.begin(), count.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++count[assign[i]];
      double* c = cent.data() + assign[i] * dim;
      for (std::size_t d = 0; d < dim; ++d) c[d] += data[i][d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] == 0) continue;
      for (std::size_t d = 0; d < dim; ++d) cent[c * dim + d] /= static_cast<double>(count[c]);
    }
    // Re-seed empty clusters with the point farthest from its own centroid.
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] != 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (count[assign[i]] <= 1) continue;
        const double d = sq_dist(data[i], {cent.data() + assign[i] * dim, dim});
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far_d < 0.0) continue;
      --count[assign[far]];
      assign[far] = c;
      count[c] = 1;
      std::copy(data[far].begin(), data[far].end(),
                cent.begin() + static_cast<std::ptrdiff_t>(c * dim));
    }
  }

  Quantizer& q = out.quantizer;
  q.dim = dim;
  q.centroids = std::move(cent);
  q.priors.assign(k, 0.0);
  double distortion = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    q.priors[assign[i]] += 1.0;
    distortion += dist[i];
  }
  for (double& p : q.priors) p /= static_cast<double>(n);
  q.sigma2 = distortion / static_cast<double>(n) / static_cast<double>(dim);
  out.assignments = std::move(assign);
  return out;
}

CloneStructure allocate_clones(std::span<const double> priors,
                               std::size_t total_states) {
  const std::size_t k = priors.size();
  if (k == 0) throw InvalidArgument("allocate_clones: no groups");
  if (total_states < k) {
    throw InvalidArgument("allocate_clones: fewer states than groups");
  }
  const double mass = std::accumulate(priors.begin(), priors.end(), 0.0);
  if (!(mass > 0.0)) throw InvalidArgument("allocate_clones: priors have no mass");

  // Every group gets one clone; the rest is apportioned by largest remainder
  // on the priors, with each group's quota reduced by the clone it already has.
  std::vector<std::size_t> sizes(k, 1);
  std::vector<double> quota(k);
  std::size_t assigned = k;
  for (std::size_t i = 0; i < k; ++i) {
    const double q = priors[i] / mass * static_cast<double>(total_states);
    quota[i] = std::max(0.0, q - 1.0);
  }
  const double spare = static_cast<double>(total_states - k);
  const double qsum = std::accumulate(quota.begin(), quota.end(), 0.0);
  if (qsum > 0.0) {
    for (double& q : quota) q *= spare / qsum;
  }
  std::vector<double> rem(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto whole = static_cast<std::size_t>(std::floor(quota[i]));
    sizes[i] += whole;
    assigned += whole;
    rem[i] = quota[i] - static_cast<double>(whole);
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t i = 0; assigned < total_states; i = (i + 1) % k) {
    ++sizes[order[i]];
    ++assigned;
  }
  return CloneStructure::from_sizes(sizes);
}

CloneStructure allocate_clones(const Quantizer& q, std::size_t total_states) {
  return allocate_clones(q.priors, total_states);
}

std::size_t quantize(const Quantizer& q, std::span<const double> x) {
  if (x.size() != q.dim) {
    throw InvalidArgument("quantize: dimension " + std::to_string(x.size()) +
                          " does not match codebook dimension " +
                          std::to_string(q.dim));
  }
  return nearest(q.centroids, q.dim, q.k(), x, nullptr);
}

std::vector<std::size_t> quantize_all(const Quantizer& q,
                                      std::span<const Point> xs) {
  std::vector<std::size_t> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = quantize(q, xs[i]);
  return out;
}

TransferResult transfer_quantize(const UngroundedSchema& schema,
                                 const ContinuousTrajectory& walk,
                                 std::size_t k, std::uint64_t seed,
                                 bool tie_clones, const EmOptions& opts) {
  if (k > schema.n_states()) {
    throw InvalidArgument("transfer: k (" + std::to_string(k) +
                          ") exceeds the schema's state count (" +
                          std::to_string(schema.n_states()) + ")");
  }
  TransferResult out;
  KMeansResult km = fit_kmeans(walk.observations, k, seed);
  out.quantizer = std::move(km.quantizer);
  out.discrete.actions = walk.actions;
  out.discrete.observations = std::move(km.assignments);
  out.binding = learn_emissions(schema, out.discrete, k, tie_clones, opts);
  return out;
}

}  // namespace cscg
