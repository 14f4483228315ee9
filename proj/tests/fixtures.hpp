#pragma once

#include <vector>

#include "wxflow/exact.hpp"
#include "wxflow/graph.hpp"

namespace wxflow::fixtures {

inline CapGraph path_graph(int n, Cap cap = 1) {
  std::vector<CapEdge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, cap});
  return CapGraph(n, edges);
}

inline CapGraph path_graph(const std::vector<Cap>& caps) {
  std::vector<CapEdge> edges;
  for (int i = 0; i < static_cast<int>(caps.size()); ++i)
    edges.push_back({i, i + 1, caps[i]});
  return CapGraph(static_cast<int>(caps.size()) + 1, edges);
}

inline CapGraph cycle_graph(int n, Cap cap = 1) {
  std::vector<CapEdge> edges;
  for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n, cap});
  return CapGraph(n, edges);
}

inline CapGraph complete_graph(int n, Cap cap = 1) {
  std::vector<CapEdge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.push_back({i, j, cap});
  return CapGraph(n, edges);
}

// Two cliques of size side joined by one bridge edge.
inline CapGraph barbell(int side, Cap bridge_cap = 1, Cap cap = 1) {
  std::vector<CapEdge> edges;
  for (int i = 0; i < side; ++i)
    for (int j = i + 1; j < side; ++j) {
      edges.push_back({i, j, cap});
      edges.push_back({side + i, side + j, cap});
    }
  edges.push_back({side - 1, side, bridge_cap});
  return CapGraph(2 * side, edges);
}

// Two-cluster stochastic block graph, forced connected.
inline CapGraph sbm(int n1, int n2, double p_in, double p_out, Cap max_cap,
                    Rng& rng) {
  int n = n1 + n2;
  std::vector<CapEdge> edges;
  auto add = [&](int i, int j, double p) {
    if (rng.next_double() < p)
      edges.push_back({i, j, 1 + static_cast<Cap>(rng.next_below(max_cap))});
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      bool same = (i < n1) == (j < n1);
      add(i, j, same ? p_in : p_out);
    }
  // Spanning path within each side plus one crossing edge keeps it
  // connected regardless of the draws.
  for (int i = 0; i + 1 < n1; ++i) edges.push_back({i, i + 1, 1});
  for (int i = n1; i + 1 < n; ++i) edges.push_back({i, i + 1, 1});
  edges.push_back({n1 - 1, n1, 1});
  return CapGraph(n, edges);
}

inline CapGraph random_connected(int n, int extra_edges, Cap max_cap,
                                 Rng& rng) {
  std::vector<CapEdge> edges;
  for (int v = 1; v < n; ++v) {
    int u = static_cast<int>(rng.next_below(v));
    edges.push_back({u, v, 1 + static_cast<Cap>(rng.next_below(max_cap))});
  }
  for (int k = 0; k < extra_edges; ++k) {
    int u = static_cast<int>(rng.next_below(n));
    int v = static_cast<int>(rng.next_below(n));
    if (u == v) continue;
    edges.push_back({u, v, 1 + static_cast<Cap>(rng.next_below(max_cap))});
  }
  return CapGraph(n, edges);
}

// Zero-sum demand with |b| <= limit pointwise.
inline Demand random_demand(const std::vector<double>& limit, Rng& rng) {
  int n = static_cast<int>(limit.size());
  Demand b(n, 0.0);
  double pos = 0, neg = 0;
  for (int v = 0; v < n; ++v) {
    b[v] = (2 * rng.next_double() - 1) * limit[v];
    (b[v] > 0 ? pos : neg) += std::abs(b[v]);
  }
  if (pos <= 0 || neg <= 0) return Demand(n, 0.0);
  double scale_pos = std::min(1.0, neg / pos);
  double scale_neg = std::min(1.0, pos / neg);
  for (int v = 0; v < n; ++v) b[v] *= b[v] > 0 ? scale_pos : scale_neg;
  return b;
}

// Random laminar family over a subset of vertices: recursive splits.
inline std::vector<std::vector<Vertex>> random_laminar(
    const std::vector<Vertex>& ground, Rng& rng, int depth = 3) {
  std::vector<std::vector<Vertex>> out;
  if (ground.size() < 2 || depth == 0) return out;
  out.push_back(ground);
  size_t cut = 1 + rng.next_below(ground.size() - 1);
  std::vector<Vertex> left(ground.begin(), ground.begin() + cut);
  std::vector<Vertex> right(ground.begin() + cut, ground.end());
  for (auto& part : {left, right}) {
    auto sub = random_laminar(part, rng, depth - 1);
    out.insert(out.end(), sub.begin(), sub.end());
    if (part.size() >= 1 && sub.empty() && rng.next_below(2) == 0)
      out.push_back(part);
  }
  return out;
}

}  // namespace wxflow::fixtures
