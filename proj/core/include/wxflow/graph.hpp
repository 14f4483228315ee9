#pragma once

#include <algorithm>
#include <vector>

#include "wxflow/common.hpp"

namespace wxflow {

struct CapEdge {
  Vertex u = -1, v = -1;
  Cap cap = 0;
};

/**
   Undirected capacitated graph with integer capacities in [1, W].
   Immutable after construction; parallel edges are merged at build time
   by summing capacities, self-loops are rejected.
 */
class CapGraph {
 public:
  CapGraph() = default;
  CapGraph(int n, std::vector<CapEdge> edges);

  int n() const { return n_; }
  int m() const { return static_cast<int>(edges_.size()); }
  Cap max_cap() const { return max_cap_; }
  Cap total_cap() const { return total_cap_; }
  const std::vector<CapEdge>& edges() const { return edges_; }
  const CapEdge& edge(EdgeId e) const { return edges_[e]; }

  // Incident edge ids of v, in increasing edge-id order.
  const std::vector<EdgeId>& incident(Vertex v) const { return adj_[v]; }

  Vertex other(EdgeId e, Vertex v) const {
    const CapEdge& ed = edges_[e];
    return ed.u == v ? ed.v : ed.u;
  }

  // Weighted degree deg_G(v) = sum of incident capacities.
  Cap degree(Vertex v) const { return deg_[v]; }
  std::vector<Cap> degrees() const { return deg_; }

  // Consistency pass over the adjacency index; throws InputError on damage.
  void validate() const;

 private:
  int n_ = 0;
  std::vector<CapEdge> edges_;
  std::vector<std::vector<EdgeId>> adj_;
  std::vector<Cap> deg_;
  Cap max_cap_ = 0;
  Cap total_cap_ = 0;
};

// Vertex weighting d : V -> Z_{>=0}, dense by vertex id.
using Weighting = std::vector<Cap>;

// Demand vector b : V -> R.  Routable demands sum to zero.
using Demand = std::vector<double>;

inline Cap weight_total(const Weighting& w) {
  Cap s = 0;
  for (Cap x : w) s += x;
  return s;
}

template <typename Set>
Cap weight_of(const Weighting& w, const Set& vs) {
  Cap s = 0;
  for (Vertex v : vs) s += w[v];
  return s;
}

template <typename Set>
double demand_of(const Demand& b, const Set& vs) {
  double s = 0;
  for (Vertex v : vs) s += b[v];
  return s;
}

/**
   Signed flow, one value per undirected edge slot.  f[e] > 0 means flow
   from edge(e).u to edge(e).v.
 */
struct FlowAssignment {
  std::vector<double> f;

  FlowAssignment() = default;
  explicit FlowAssignment(size_t m) : f(m, 0.0) {}

  void add(const FlowAssignment& o, double scale = 1.0) {
    if (f.size() < o.f.size()) f.resize(o.f.size(), 0.0);
    for (size_t i = 0; i < o.f.size(); ++i) f[i] += scale * o.f[i];
  }
};

// Net flow into v (positive = v receives).
double net_flow(const CapGraph& g, const FlowAssignment& fa, Vertex v);
std::vector<double> net_flows(const CapGraph& g, const FlowAssignment& fa);
double congestion(const CapGraph& g, const FlowAssignment& fa);

/**
   Partition of a ground set into disjoint blocks.  Vertices outside the
   ground set have block_of == -1.
 */
class VertexPartition {
 public:
  VertexPartition() = default;
  VertexPartition(int n, std::vector<std::vector<Vertex>> blocks);

  int n() const { return static_cast<int>(block_of_.size()); }
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  const std::vector<std::vector<Vertex>>& blocks() const { return blocks_; }
  const std::vector<Vertex>& block(int i) const { return blocks_[i]; }
  int block_of(Vertex v) const { return block_of_[v]; }
  const std::vector<int>& block_map() const { return block_of_; }
  int ground_size() const { return ground_size_; }

  bool contains(Vertex v) const { return block_of_[v] >= 0; }

 private:
  std::vector<std::vector<Vertex>> blocks_;
  std::vector<int> block_of_;
  int ground_size_ = 0;
};

struct BoundaryResult {
  std::vector<EdgeId> edges;  // intercluster edges, increasing id
  Cap capacity = 0;           // delta
};

// Intercluster edges of P (both endpoints inside the ground set, in
// different blocks).  With include_ground_exit, edges with exactly one
// endpoint outside the ground set are counted too (single-cut semantics).
BoundaryResult boundary(const CapGraph& g, const VertexPartition& p,
                        bool include_ground_exit = false);

// Cut edges of a single set S (exactly one endpoint in S).
BoundaryResult cut_of_set(const CapGraph& g, const std::vector<Vertex>& s);
BoundaryResult cut_of_set(const CapGraph& g, const std::vector<char>& in_s);

struct ConductanceResult {
  double value = 0.0;
  bool infinite = false;  // degenerate denominator
};

// delta_G(S) / min(d(S), d(V \ S)).
ConductanceResult conductance(const CapGraph& g, const Weighting& d,
                              const std::vector<Vertex>& s);

// Capacity of H-edges incident to v, for an edge subset H given as a mask.
Cap induced_degree(const CapGraph& g, const std::vector<char>& edge_mask,
                   Vertex v);
// All vertices at once: deg_H(v) for every v.
Weighting induced_degrees(const CapGraph& g,
                          const std::vector<char>& edge_mask);
Weighting induced_degrees(const CapGraph& g,
                          const std::vector<EdgeId>& edge_set);

inline std::vector<char> edge_mask_of(const CapGraph& g,
                                      const std::vector<EdgeId>& edges) {
  std::vector<char> mask(g.m(), 0);
  for (EdgeId e : edges) mask[e] = 1;
  return mask;
}

/**
   Real-capacitated instance graph used by the flow solvers: a CapGraph
   scaled and/or filtered, possibly with gadget vertices and edges added.
   orig >= 0 ties an edge back to the CapGraph edge it came from.
 */
class FlowNet {
 public:
  struct Edge {
    Vertex u = -1, v = -1;
    double cap = 0.0;
    EdgeId orig = -1;
  };

  FlowNet() = default;
  explicit FlowNet(int n) : n_(n), adj_(n) {}

  int n() const { return n_; }
  int m() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(EdgeId e) const { return edges_[e]; }
  const std::vector<EdgeId>& incident(Vertex v) const { return adj_[v]; }
  double max_cap() const { return max_cap_; }

  Vertex other(EdgeId e, Vertex v) const {
    const Edge& ed = edges_[e];
    return ed.u == v ? ed.v : ed.u;
  }

  Vertex add_vertex() {
    adj_.emplace_back();
    return n_++;
  }

  EdgeId add_edge(Vertex u, Vertex v, double cap, EdgeId orig = -1);

  double net_flow(const FlowAssignment& fa, Vertex v) const;
  std::vector<double> net_flows(const FlowAssignment& fa) const;
  double congestion(const FlowAssignment& fa) const;

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeId>> adj_;
  double max_cap_ = 0.0;
};

// Capacities multiplied exactly by factor > 0; edge order preserved,
// orig set to the CapGraph edge ids.
FlowNet scale_graph(const CapGraph& g, double factor);

// Same, keeping only edges with keep_edge[e] != 0.
FlowNet scale_graph_filtered(const CapGraph& g, double factor,
                             const std::vector<char>& keep_edge);

}  // namespace wxflow
