#pragma once

#include "wxflow/cutmatch.hpp"
#include "wxflow/dinic.hpp"
#include "wxflow/graph.hpp"

namespace wxflow {

/**
   Directed capacity view of a FlowNet: per undirected edge slot, the
   remaining capacity in each direction.  A plain graph has
   cap_fwd == cap_bwd == cap.
 */
struct ResidualView {
  const FlowNet* net = nullptr;
  std::vector<double> cap_fwd, cap_bwd;

  static ResidualView plain(const FlowNet& net);
  static ResidualView of_flow(const FlowNet& net, const FlowAssignment& f);
};

struct LaminarFamily {
  std::vector<std::vector<Vertex>> sets;
  std::vector<double> delta;  // capacity of each set's boundary

  void compute_deltas(const FlowNet& net);
  // Throws ContractError if two sets properly cross.
  void check_laminar(int n) const;
};

struct AlmostRouteRequest {
  const ResidualView* graph = nullptr;
  Vertex s = -1, t = -1;
  double tau = 0;
  double eps = 0.1;
  const LaminarFamily* family = nullptr;
  double iter_budget = 400;  // backend B cap is iter_budget / eps^2
};

struct AlmostRouteOutput {
  enum Kind { kCut, kFlow } kind = kFlow;
  // kCut: an (s,t)-cut of directed value < tau.
  std::vector<char> cut_side;
  double cut_value = 0;
  // kFlow: flow with residual demand small against every family set.
  FlowAssignment flow;       // per edge slot, within the directed caps
  Demand routed;             // net-out per vertex
  Demand residual;           // tau(1_s - 1_t) - routed
  double max_family_ratio = 0;  // max_C |residual(C)| / delta(C)
  int iterations = 0;
};

// Reference backend: exact blocking-flow max flow.  Either the exact
// minimum cut (< tau) or a flow of value exactly tau with residual 0.
AlmostRouteOutput almost_route_exact(const AlmostRouteRequest& req);

// First-order backend: soft-max potential over the congestion vector
// concatenated with the family-scaled residual vector, gradient steps
// with a power-iteration step size, cut extraction by threshold sweeps.
// Throws UnconvergedError if neither clause verifies within the cap.
AlmostRouteOutput almost_route_sherman(const AlmostRouteRequest& req);

enum class AlmostRouteBackend { kExact, kSherman };

AlmostRouteOutput almost_route(const AlmostRouteRequest& req,
                               AlmostRouteBackend backend);

/**
   Routing interface provided by the hierarchy: routes a demand that
   respects the family, leaving a residual bounded by the top level's
   boundary degrees.
 */
class PseudoRouter {
 public:
  virtual ~PseudoRouter() = default;

  struct Outcome {
    FlowAssignment flow;  // CapGraph edge ids
    Demand residual;      // b' with |b'| <= deg of the top boundary
    double congestion = 0;
  };
  // Requires |b(C)| <= delta(C) for every family set.
  virtual Outcome route(const Demand& b) const = 0;
  virtual const LaminarFamily& family() const = 0;
  virtual Weighting top_boundary_degrees() const = 0;
  virtual double quality() const = 0;  // 48 alpha beta L^2, measured
};

struct MatchingOracleConfig {
  double eps_hat = 0;  // 0 -> 1 / (4 log2^2(nW))
  AlmostRouteBackend backend = AlmostRouteBackend::kExact;
  double iter_budget = 400;
};

// The pseudo-congestion-approximator implementation of the matching
// player oracle: almost-route binary search on tau, residual spreading,
// hierarchy routing of the in-graph residual, path surgery, and the
// unsaturated-source / heavy-sink filters.
Oracle1Result pseudo_matching_oracle(const MatchingInstance& inst,
                                     const CutMatchingState& state,
                                     const PseudoRouter& router,
                                     const MatchingOracleConfig& cfg);

struct ApproxMaxFlowResult {
  double value = 0;
  FlowAssignment flow;  // feasible in g (congestion <= 1 + 1e-9)
  double congestion = 0;
  int almost_route_calls = 0;
};

// (1 - eps)-approximate s-t max flow: scale search on tau with
// almost-route, residual routed through the congestion-approximator.
ApproxMaxFlowResult approx_max_flow(const CapGraph& g, Vertex s, Vertex t,
                                    double eps, const PseudoRouter& router,
                                    AlmostRouteBackend backend);

}  // namespace wxflow
