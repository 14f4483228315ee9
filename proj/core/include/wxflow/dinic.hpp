#pragma once

#include <vector>

#include "wxflow/graph.hpp"

namespace wxflow {

/**
   Blocking-flow max flow on a directed arc list.  Works on real
   capacities; saturation is decided with a relative tolerance, which is
   exact on integral instances.
 */
class Dinic {
 public:
  explicit Dinic(int n);

  int n() const { return n_; }

  // Adds arc u->v with the given capacity; returns the arc id.  The
  // reverse residual arc is created with capacity back_cap (default 0).
  int add_arc(Vertex u, Vertex v, double cap, double back_cap = 0.0);

  // Maximum s-t flow.  Can be called once per instance.
  double solve(Vertex s, Vertex t);

  // Signed flow on arc id a (positive = along the arc direction).
  double arc_flow(int a) const;

  // Vertices reachable from s in the final residual graph: the minimal
  // source side of a minimum cut.
  std::vector<char> min_cut_side(Vertex s) const;

 private:
  struct Arc {
    Vertex to;
    double cap;   // remaining capacity
    int rev;      // index of the reverse arc in arcs_[to]... flat index
  };
  bool bfs(Vertex s, Vertex t);
  double dfs(Vertex v, Vertex t, double pushed);

  int n_;
  std::vector<Arc> arcs_;                // flat; pairs (a, a^1)
  std::vector<std::vector<int>> head_;   // arc ids out of v
  std::vector<double> orig_cap_;         // per arc id exposed to callers
  std::vector<int> level_;
  std::vector<size_t> iter_;
  double eps_ = 1e-12;
};

/** One source/sink-capacitated flow instance over a FlowNet. */
struct FlowProblem {
  const FlowNet* net = nullptr;
  std::vector<double> source;  // Delta, per vertex, >= 0
  std::vector<double> sink;    // Nabla, per vertex, >= 0

  // Net out the common support so every vertex is a pure source or sink.
  void net_terminals();
};

struct MaxFlowResult {
  double value = 0.0;
  FlowAssignment flow;            // aligned with the FlowNet edge list
  std::vector<char> mincut_side;  // minimal source side, real vertices
  std::vector<double> routed_source;  // per vertex, how much of Delta left it
  std::vector<double> absorbed_sink;  // per vertex, how much of Nabla it took
};

// Exact max flow from the source weighting to the sink weighting.
// If source_limit >= 0, total injected source is capped at that value.
MaxFlowResult exact_max_flow(const FlowProblem& prob,
                             double source_limit = -1.0);

}  // namespace wxflow
