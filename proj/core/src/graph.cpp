#include "cscg/graph.hpp"

#include <algorithm>
#include <functional>
#include <queue>

#include "cscg/error.hpp"

namespace cscg {

bool LabeledGraph::has_edge(std::size_t a, std::size_t j, std::size_t k) const {
  const auto& v = out[a][j];
  return std::binary_search(v.begin(), v.end(), k);
}

std::size_t LabeledGraph::n_edges() const {
  std::size_t n = 0;
  for (const auto& per_action : out) {
    for (const auto& v : per_action) n += v.size();
  }
  return n;
}

LabeledGraph thresholded_graph(const TransitionTensor& t, double threshold) {
  LabeledGraph g;
  g.n_states = t.n_states();
  g.n_actions = t.n_actions();
  g.out.assign(g.n_actions, std::vector<std::vector<std::size_t>>(g.n_states));
  for (std::size_t a = 0; a < g.n_actions; ++a) {
    for (std::size_t j = 0; j < g.n_states; ++j) {
      auto row = t.row(a, j);
      for (std::size_t k = 0; k < g.n_states; ++k) {
        if (row[k] > threshold) g.out[a][j].push_back(k);
      }
    }
  }
  return g;
}

namespace {

// Per-vertex (out-degree, in-degree) for every action.
std::vector<std::vector<std::size_t>> signatures(const LabeledGraph& g) {
  std::vector<std::vector<std::size_t>> sig(g.n_states,
                                            std::vector<std::size_t>(2 * g.n_actions, 0));
  for (std::size_t a = 0; a < g.n_actions; ++a) {
    for (std::size_t j = 0; j < g.n_states; ++j) {
      sig[j][2 * a] = g.out[a][j].size();
      for (std::size_t k : g.out[a][j]) ++sig[k][2 * a + 1];
    }
  }
  return sig;
}

}  // namespace

std::optional<std::vector<std::size_t>> find_isomorphism(const LabeledGraph& g,
                                                         const LabeledGraph& h) {
  if (g.n_states != h.n_states || g.n_actions != h.n_actions) return std::nullopt;
  if (g.n_edges() != h.n_edges()) return std::nullopt;
  const std::size_t n = g.n_states;
  const auto sg = signatures(g);
  const auto sh = signatures(h);
  {
    auto a = sg, b = sh;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) return std::nullopt;
  }
  // Undirected neighbourhoods for the visiting order.
  std::vector<std::vector<std::size_t>> nbr(n);
  for (std::size_t a = 0; a < g.n_actions; ++a) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k : g.out[a][j]) {
        nbr[j].push_back(k);
        nbr[k].push_back(j);
      }
    }
  }
  std::vector<std::size_t> order;
  std::vector<bool> seen(n, false);
  for (std::size_t root = 0; root < n; ++root) {
    if (seen[root]) continue;
    std::queue<std::size_t> q;
    q.push(root);
    seen[root] = true;
    while (!q.empty()) {
      const std::size_t v = q.front();
      q.pop();
      order.push_back(v);
      for (std::size_t w : nbr[v]) {
        if (!seen[w]) {
          seen[w] = true;
          q.push(w);
        }
      }
    }
  }
  std::vector<std::size_t> map(n, SIZE_MAX);
  std::vector<bool> used(n, false);
  auto consistent = [&](std::size_t v, std::size_t c) {
    if (sg[v] != sh[c]) return false;
    for (std::size_t a = 0; a < g.n_actions; ++a) {
      if (g.has_edge(a, v, v) != h.has_edge(a, c, c)) return false;
      for (std::size_t u = 0; u < n; ++u) {
        if (map[u] == SIZE_MAX || u == v) continue;
        if (g.has_edge(a, v, u) != h.has_edge(a, c, map[u])) return false;
        if (g.has_edge(a, u, v) != h.has_edge(a, map[u], c)) return false;
      }
    }
    return true;
  };
  std::function<bool(std::size_t)> extend = [&](std::size_t i) {
    if (i == n) return true;
    const std::size_t v = order[i];
    for (std::size_t c = 0; c < n; ++c) {
      if (used[c] || !consistent(v, c)) continue;
      map[v] = c;
      used[c] = true;
      if (extend(i + 1)) return true;
      map[v] = SIZE_MAX;
      used[c] = false;
    }
    return false;
  };
  if (!extend(0)) return std::nullopt;
  return map;
}

}  // namespace cscg
