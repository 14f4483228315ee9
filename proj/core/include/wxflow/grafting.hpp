#pragma once

#include "wxflow/cutmatch.hpp"

namespace wxflow {

/**
   The grafting flow instance: boundary edges of A_T removed, remaining
   capacities scaled by 1/psi, sources for boundary and deleted demand,
   sinks d(u)/5 on fully kept vertices.
 */
struct GraftingInstance {
  const CapGraph* g = nullptr;
  double psi = 1.0 / 64;
  double eps2 = 0.0;
  FlowNet net;  // orig = CapGraph edge id
  std::vector<double> delta_gross, nabla_gross;
  std::vector<double> source, sink;  // netted per vertex
  std::vector<std::vector<Vertex>> plus_blocks;  // A_T^+
  std::vector<int> plus_block_of;                // -1 outside A_T^+
  std::vector<char> eligible;  // per plus block: deg boundary <= d_T/8
  Weighting deg_boundary;      // deg_{partial A_T}
  Weighting d, d_t;
};

GraftingInstance build_grafting_instance(const CapGraph& g,
                                         const VertexPartition& a_t,
                                         const Weighting& d,
                                         const Weighting& d_t, double psi,
                                         double eps2);

struct Oracle2Result {
  struct PerBlock {
    int block_id = -1;
    bool eligible = false;
    std::vector<Vertex> cut;  // C_A
    double min_routed_frac = 1.0;
    double min_sat_frac = 1.0;
    Cap cut_cap = 0;  // c_G(E(C_A, A \ C_A))
  };
  std::vector<PerBlock> blocks;
  FlowAssignment flow;      // instance edge ids (same order as G edges kept)
  PathDecomposition paths;  // G edge ids
  std::vector<double> routed_source, absorbed_sink;
};

using GraftingOracleFn = std::function<Oracle2Result(const GraftingInstance&)>;

// Exact backend: one max flow per (disconnected) block, slack 0.
Oracle2Result exact_grafting_oracle(const GraftingInstance& inst);

/**
   Final decomposition A = A-certified ⊔ A-discarded with provenance and
   the stored flows needed for the two routing witnesses.
 */
struct FinalDecomposition {
  const CapGraph* g = nullptr;
  VertexPartition clusters;
  std::vector<char> certified;   // per cluster
  std::vector<int> from_block;   // A_T block id per cluster
  Weighting d, d_t;
  Weighting deg_boundary_t;      // deg_{partial A_T}
  Weighting deg_boundary;        // deg_{partial A}
  std::shared_ptr<Transcript> transcript;
  GraftingInstance instance;
  Oracle2Result oracle;

  // Certificates.
  Cap cut_capacity_t = 0;       // delta(partial A_T)
  Cap cut_capacity = 0;         // delta(partial A)
  Cap discarded_mass = 0;       // d(union of discarded clusters)
  Cap deleted_mass = 0;         // d(V) - d_T(V)

  std::vector<int> cluster_of;  // vertex -> final cluster
};

FinalDecomposition finalize(const CapGraph& g, const DecompositionResult& dec,
                            const Weighting& d, double psi, double eps2,
                            const GraftingOracleFn& oracle);

// Routes demands respecting (d + deg_{partial A})|_A per certified
// cluster: grafting-path discharge plus the cut-matching mixing engine.
MultiRouteResult route_grafted_demands(const FinalDecomposition& fin,
                                       const std::vector<Demand>& demands);

struct BoundaryRoutingResult {
  FlowAssignment flow;            // G edge ids
  PathDecomposition paths;        // witness paths; zero-edge paths mark
                                  // self-absorption at the vertex
  std::vector<double> sent;       // per vertex, = deg_{partial A}(u) on A-certified
  std::vector<double> received;   // per vertex, includes self-absorption
  double congestion = 0;
};

// Witness for the boundary-absorption property: every vertex of a
// certified cluster sends its final boundary degree, nobody receives
// more than d(v)/4.
BoundaryRoutingResult boundary_source_routing(const FinalDecomposition& fin);

}  // namespace wxflow
