#pragma once

// Action-labelled graphs read off transition tensors.

#include <cstddef>
#include <optional>
#include <vector>

#include "cscg/model.hpp"

namespace cscg {

/// Edge (a, j, k) is present when T(a, j, k) > threshold.
struct LabeledGraph {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  /// out[a][j]: sorted targets of j under a.
  std::vector<std::vector<std::vector<std::size_t>>> out;

  bool has_edge(std::size_t a, std::size_t j, std::size_t k) const;
  std::size_t n_edges() const;
};

LabeledGraph thresholded_graph(const TransitionTensor& t, double threshold);

/// A bijection m with edge (a, j, k) in `g` iff (a, m[j], m[k]) in `h`, or
/// nullopt. Backtracking over a breadth-first vertex order with degree
/// pruning; fast on the sparse, nearly deterministic graphs learned here.
std::optional<std::vector<std::size_t>> find_isomorphism(const LabeledGraph& g,
                                                         const LabeledGraph& h);

}  // namespace cscg
