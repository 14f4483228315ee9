#pragma once

#include "wxflow/faircut.hpp"
#include "wxflow/grafting.hpp"
#include "wxflow/sherman.hpp"

namespace wxflow {

struct HierarchyConfig {
  double phi = 0;         // 0 -> 1 / (16 ceil(log2 nW))
  double psi = 1.0 / 64;  // strict mode: 1e-10
  double eps1 = 0;        // 0 -> 1 / (4 ceil(log2 nW)^2)
  double eps2 = 1.0 / 16;
  uint64_t seed = 1;
  bool strict_paper = false;
  enum class OracleBackend { kExact, kSherman } oracle = OracleBackend::kExact;
  double cm_x_max = 0;  // forwarded to the cut-matching config
  int cm_rounds = 0;
  int max_levels = 64;
  int threads = 0;

  void resolve(int n, Cap w);
};

struct HierarchyLevel {
  int index = 1;               // 1-based
  std::vector<char> in_vi;     // V_i
  VertexPartition p_bar;       // P-bar_i over all of V
  Cap delta_p_bar = 0;
  Weighting deg_p_bar;         // deg of the P-bar_i boundary
  Weighting deg_v_boundary;    // deg of the V_i cut
  // Artifacts from building this level (absent at level 1).
  std::shared_ptr<FinalDecomposition> decomp;        // mixing engine
  std::shared_ptr<BoundaryRoutingResult> boundary;   // send/receive witness
  double alpha_witness = 1.0;
  double beta_witness = 1.0;
};

struct RefinementFamily {
  std::vector<VertexPartition> r_ge;  // R_{>=i}, i = 1..L at [i-1]
  std::vector<Weighting> deg_r;       // boundary degrees of each R_{>=i}
  LaminarFamily family;               // deduplicated union with deltas
  std::vector<int> first_level;       // level at which each set appears
};

// P-bar_next = P_next on V_next plus the induced partition of the
// previous level on the rest.
VertexPartition extend_partition(const CapGraph& g,
                                 const VertexPartition& p_bar_prev,
                                 const std::vector<char>& in_v_next,
                                 const std::vector<std::vector<Vertex>>& p_next);

RefinementFamily build_family(const CapGraph& g,
                              const std::vector<HierarchyLevel>& levels);

struct LevelRouteResult {
  Demand sink;  // t
  FlowAssignment flow;
  double congestion = 0;
};

class Hierarchy : public PseudoRouter {
 public:
  const CapGraph* g = nullptr;
  HierarchyConfig cfg;
  std::vector<HierarchyLevel> levels;
  RefinementFamily fam;

  int depth() const { return static_cast<int>(levels.size()); }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

  // PseudoRouter surface.
  double quality() const override {
    double l = depth();
    return 48.0 * alpha_ * beta_ * l * l;
  }
  const LaminarFamily& family() const override { return fam.family; }
  Weighting top_boundary_degrees() const override {
    return levels.back().deg_p_bar;
  }
  Outcome route(const Demand& b) const override { return route_full(b); }

  // Between-level absorption: s bounded by the level-(i+1) boundary
  // degrees moves onto V_{i+1} with sinks at most half the level-i
  // boundary degrees; congestion <= 3 beta.
  LevelRouteResult route_between_levels(int i, const Demand& s) const;

  // The four-property routing from refinement-i sources to
  // level-(i+1)-balanced sinks; congestion <= 12 L beta.
  LevelRouteResult route_r_to_p(int i, const Demand& x) const;

  // One level of the main routing; congestion <= 48 L alpha beta.
  LevelRouteResult route_level(int i, const Demand& s) const;

  // L-1 applications of route_level; exact when the top boundary is 0.
  Outcome route_full(const Demand& b) const;

  double estimate_congestion(const Demand& b) const;

  // Witness congestions are running maxima so the quality certificate
  // reflects everything this hierarchy was asked to route.
  void observe_alpha(double c) const { alpha_ = std::max(alpha_, c); }
  void observe_beta(double c) const { beta_ = std::max(beta_, c); }

 private:
  mutable double alpha_ = 1.0;
  mutable double beta_ = 1.0;

  friend Hierarchy build_hierarchy(const CapGraph& g, HierarchyConfig cfg);
  friend void build_next_level(Hierarchy& h);
};

/** The augmented graph of the grafting flow problem (split nodes per
    boundary edge, leaf nodes per deleted vertex, global sink t). */
struct GFlowGadget {
  FlowNet net;
  Vertex t = -1;
  std::vector<char> in_u;          // U = V u {t}
  LaminarFamily family;            // C^flow
  std::vector<int> leaf_of;        // vertex -> leaf node id or -1
  std::vector<int> split_of_edge;  // G edge -> split node id or -1
  std::vector<EdgeId> g_edge_of;   // net edge -> G edge id or -1
  double delta_u = 0;              // boundary capacity of U
  double delta_u_bound = 0;        // 6 Delta(V) / 5
  double source_total = 0;         // Delta(V)
};

GFlowGadget build_gflow(const CapGraph& g, const GraftingInstance& inst,
                        const LaminarFamily& base_family);

// Oracle 2 via a one-sided fair cut on the gadget, routed through the
// pseudo-congestion-approximator.
Oracle2Result gflow_grafting_oracle(const GraftingInstance& inst,
                                    const Hierarchy& h,
                                    AlmostRouteBackend backend);

// Runs the weak decomposition with d = deg of the current top boundary,
// grafts, extends the partition, stores the witnesses, and checks the
// halving property.
void build_next_level(Hierarchy& h);

Hierarchy build_hierarchy(const CapGraph& g, HierarchyConfig cfg);

}  // namespace wxflow
