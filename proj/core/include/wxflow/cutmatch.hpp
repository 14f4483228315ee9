#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "wxflow/exact.hpp"
#include "wxflow/graph.hpp"
#include "wxflow/paths.hpp"

namespace wxflow {

struct CutMatchingConfig {
  double phi = 0.1;
  double eps1 = 0.0;     // matching-oracle slack
  int rounds = 0;        // T; 0 = default
  double x_max = 0;      // counter threshold; 0 = default
  double c_conc = 4.0;   // concentration constant C
  uint64_t seed = 1;
  bool potential_mode = false;  // maintain the explicit flow matrix
  bool strict_paper = false;    // paper-sized constants
  int threads = 0;

  // Fills rounds / x_max from n and W when left at 0.
  void resolve(int n, Cap w);
};

// One round's contribution to the transcript: the matching as sparse
// symmetric entries plus the flow paths realizing it in G.
struct RoundRecord {
  int round = 0;
  struct Entry {
    Vertex u, v;
    double w;
  };
  std::vector<Entry> matching;    // aggregated per (u,v) pair
  PathDecomposition match_paths;  // G edge ids; path start = source side
  struct CompCert {
    int comp_id = -1;
    bool covered = false;
    std::vector<Vertex> cut;  // C_A
    double cut_cap = 0;       // delta_G(C_A, A \ C_A)
    double routed = 0;        // source routed toward Delta(A \ C_A)
    double delta_target = 0;  // Delta(A \ C_A)
    Cap d_cut = 0;            // d_{t-1}(C_A)
    Cap d_comp = 0;           // d_{t-1}(A)
  };
  std::vector<CompCert> certs;
  Cap covered_weight = 0;  // d_{t-1}(union of covered comps)
  Cap active_weight = 0;   // d_{t-1}(union of active comps)
};

struct Transcript {
  CutMatchingConfig cfg;
  Weighting d;
  std::vector<RoundRecord> rounds;
  // Final partition data is appended by the driver.
  std::vector<std::vector<Vertex>> final_blocks;
  Weighting d_final;
};

struct CutMatchingState {
  const CapGraph* g = nullptr;
  CutMatchingConfig cfg;
  Weighting d;      // immutable input weighting
  Weighting d_cur;  // d_t
  struct Comp {
    std::vector<Vertex> verts;
    bool active = true;
    int counter = 0;
  };
  std::vector<Comp> comps;
  std::vector<int> comp_of;
  int t = 0;
  Transcript transcript;
  Rng rng;
  // Explicit flow matrix, test mode only (row-major, n x n).
  std::vector<std::vector<double>> f_explicit;

  CutMatchingState(const CapGraph& graph, Weighting weighting,
                   CutMatchingConfig config);

  Cap d_active() const;
  std::vector<int> active_ids() const;
  std::vector<Vertex> support(int comp_id) const;  // A° of a component
};

// Cut player output for one component.
struct CutStep {
  int comp_id = -1;
  std::vector<Vertex> left, right;  // L_A, R_A (subsets of A°)
  double eta = 0;
  bool left_is_high = false;
};

// The flow problem handed to the matching oracle: intercomponent edges
// removed, capacities scaled by 2/phi, sources on L, sinks on R.
struct MatchingInstance {
  FlowNet net;  // orig = CapGraph edge id
  std::vector<double> source, sink;
  std::vector<int> comp_of;
  std::vector<CutStep> cut_steps;
  std::vector<int> active_comps;
  double phi = 0;
  Cap d_total = 0;  // d(V), for slack certificates
};

struct Oracle1Result {
  struct PerComp {
    int comp_id = -1;
    bool covered = false;
    std::vector<Vertex> cut;        // C_A
    std::vector<Vertex> left;       // L_A, for the deletion rule
    PathDecomposition flow_paths;   // on G edge ids
    double routed = 0;              // source routed from A \ C_A
    double delta_target = 0;        // Delta(A \ C_A)
    double cut_cap = 0;             // delta_G(C_A, A \ C_A)
  };
  std::vector<PerComp> comps;
};

using MatchingOracleFn =
    std::function<Oracle1Result(const MatchingInstance&, const CutMatchingState&)>;

// Random unit projection vector over V.
std::vector<double> random_unit_vector(int n, Rng& rng);

// p_t(u) = <F_{t-1}(u)/d(u), r> by forward recursion over the recorded
// matchings; never materializes F.
std::vector<double> compute_projections(const CutMatchingState& state,
                                        const std::vector<double>& r);

// Threshold partition of one active component's support by p values,
// d_{t-1}(L) = ceil(d_{t-1}(A)/8) with the straddling vertex assigned
// wholly to L; ties broken by vertex id.
CutStep cut_step(const CutMatchingState& state, const std::vector<double>& p,
                 int comp_id);

MatchingInstance build_matching_instance(const CutMatchingState& state,
                                         std::vector<CutStep> steps);

// Exact backend for the matching oracle (slack 0).
Oracle1Result exact_matching_oracle(const MatchingInstance& inst,
                                    const CutMatchingState& state);

// One full round-update: deletions, splits, counters, inactivation, the
// 15/16 rule, flow-matrix update, transcript append.
void apply_round(CutMatchingState& state, const Oracle1Result& result);

struct DecompositionResult {
  VertexPartition partition;  // A_T
  Weighting d_final;          // d_T
  std::shared_ptr<Transcript> transcript;
  int rounds_run = 0;
  Cap cut_capacity = 0;  // capacity of edges cut by A_T
};

DecompositionResult run_decomposition(const CapGraph& g, const Weighting& d,
                                      const CutMatchingConfig& cfg,
                                      const MatchingOracleFn& oracle);

// psi_t(A) from the definition; requires potential_mode and n <= 512.
double potential_psi(const CutMatchingState& state, int comp_id);

struct MultiRouteResult {
  std::vector<FlowAssignment> flows;       // per commodity, G edge ids
  std::vector<double> conservation_error;  // per commodity, L1
  double congestion = 0;                   // sum_i |f_i| against caps
  bool topup_used = false;
};

// Routes demands b_i respecting d_T per final block by rescaling the
// recorded matching paths round by round; the unmixed residue is routed
// exactly and counted into the congestion.  respect_scale relaxes the
// |b| <= d_T check to |b| <= respect_scale * d_T.
MultiRouteResult route_respecting_demands(const CapGraph& g,
                                          const Transcript& transcript,
                                          const std::vector<Demand>& demands,
                                          bool exact_topup = true,
                                          double respect_scale = 1.0);

}  // namespace wxflow
