#pragma once

#include <map>
#include <vector>

#include "wxflow/graph.hpp"

namespace wxflow {

struct Path {
  std::vector<Vertex> verts;  // verts.size() == edges.size() + 1
  std::vector<EdgeId> edges;
  double weight = 0.0;

  Vertex start() const { return verts.front(); }
  Vertex end() const { return verts.back(); }
};

/**
   Weighted-path representation of a flow.  For every edge the signed sum
   of traversing path weights equals the origin flow on that edge.
 */
struct PathDecomposition {
  std::vector<Path> paths;
  int n = 0;       // vertex count of the origin graph
  size_t m = 0;    // edge count of the origin graph

  double total_weight() const {
    double s = 0;
    for (const Path& p : paths) s += p.weight;
    return s;
  }
};

/**
   Replayable record of decompose / rescale / truncate steps.
 */
struct RoutingTranscript {
  struct Step {
    enum Kind { kDecompose, kRescale, kTruncate } kind;
    std::map<Vertex, double> scales;  // kRescale
    std::vector<int> block_of;        // kTruncate
  };
  std::vector<Step> steps;
};

// Decompose f into source-to-sink paths.  Cycles are cancelled first
// (lowest-index first, deterministic); every path starts at a vertex
// with positive net outflow and ends at one with positive net inflow.
// Throws ContractError if flow is not conserved at a non-terminal.
PathDecomposition path_decompose(const FlowNet& net, const FlowAssignment& f,
                                 const std::vector<double>& sources,
                                 const std::vector<double>& sinks,
                                 RoutingTranscript* transcript = nullptr);

// Sum the (scaled) paths back into per-edge signed flows.
FlowAssignment assemble_paths(const PathDecomposition& d, const FlowNet& net);

// Scale every path by the factor keyed on its start terminal; terminals
// missing from the map keep scale 1.  A map key that is not a start
// terminal of any path is a structural error.
FlowAssignment rescale_paths(const PathDecomposition& d, const FlowNet& net,
                             const std::map<Vertex, double>& per_terminal,
                             RoutingTranscript* transcript = nullptr);

// Replace each path by its maximal prefix inside the start vertex's
// cluster.  block_of must label every path vertex.
PathDecomposition truncate_at_boundary(const PathDecomposition& d,
                                       const std::vector<int>& block_of,
                                       RoutingTranscript* transcript = nullptr);

// Re-run a transcript against the original flow; used to check that
// replay reproduces the final flow bit for bit.
FlowAssignment replay_transcript(const RoutingTranscript& t,
                                 const FlowNet& net, const FlowAssignment& f,
                                 const std::vector<double>& sources,
                                 const std::vector<double>& sinks);

}  // namespace wxflow
