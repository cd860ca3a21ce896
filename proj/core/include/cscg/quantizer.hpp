#pragma once

// Continuous-observation front end: K-means codebook, clone allocation
// proportional to cluster priors, and hard-evidence vector quantization that
// reduces continuous walks to the discrete pipeline.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cscg/learning.hpp"
#include "cscg/model.hpp"

namespace cscg {

using Point = std::vector<double>;

struct Quantizer {
  std::size_t dim = 0;
  std::vector<double> centroids;  // k() x dim, row-major
  std::vector<double> priors;
  /// Isotropic variance from the mean distortion. Stored, unused downstream.
  double sigma2 = 0.0;

  std::size_t k() const noexcept { return priors.size(); }
  std::span<const double> centroid(std::size_t i) const {
    return {centroids.data() + i * dim, dim};
  }

  bool operator==(const Quantizer&) const = default;
};

struct KMeansResult {
  Quantizer quantizer;
  std::vector<std::size_t> assignments;
  /// Total distortion after each assignment step.
  std::vector<double> distortion_trace;
  std::size_t iterations = 0;
};

/// Lloyd's iterations from k-means++ seeding until the assignment is a fixed
/// point or max_iters is reached. An emptied cluster is re-seeded with the
/// point farthest from its centroid (lowest index on ties).
KMeansResult fit_kmeans(std::span<const Point> data, std::size_t k,
                        std::uint64_t seed, std::size_t max_iters = 100);

/// Largest-remainder apportionment of total_states over the priors with at
/// least one clone per group.
CloneStructure allocate_clones(std::span<const double> priors,
                               std::size_t total_states);
CloneStructure allocate_clones(const Quantizer& q, std::size_t total_states);

/// Nearest centroid (Euclidean); ties go to the lowest index.
std::size_t quantize(const Quantizer& q, std::span<const double> x);
std::vector<std::size_t> quantize_all(const Quantizer& q,
                                      std::span<const Point> xs);

struct ContinuousTrajectory {
  std::vector<std::size_t> actions;
  std::vector<Point> observations;
};

struct TransferResult {
  Quantizer quantizer;
  Trajectory discrete;
  EmissionLearningResult binding;
};

/// Re-fits K-means on the new environment's vectors, quantizes them and learns
/// the emission matrix of the fixed schema on the resulting labels.
/// Throws InvalidArgument when k exceeds the schema's state count.
TransferResult transfer_quantize(const UngroundedSchema& schema,
                                 const ContinuousTrajectory& walk,
                                 std::size_t k, std::uint64_t seed,
                                 bool tie_clones, const EmOptions& opts);

}  // namespace cscg
