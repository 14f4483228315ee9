#pragma once

#include "wxflow/sherman.hpp"

namespace wxflow {

// Routes any demand b with |b(C)| <= delta(C) for all family sets at
// congestion at most route_q; flows are on the instance's edge slots.
using FamilyRouteFn = std::function<FlowAssignment(const Demand&)>;

struct FairCutInput {
  const FlowNet* net = nullptr;
  std::vector<char> in_u;  // U
  Vertex t = -1;
  LaminarFamily family;    // subsets of V \ {t}
  FamilyRouteFn route_fn;  // may be empty when the backend is exact
  double route_q = 1.0;
  double eps = 0.1;
  double eps_prime = 0;    // 0 -> eps / (4 ceil(log2 nW))
  AlmostRouteBackend backend = AlmostRouteBackend::kExact;
  double iter_budget = 400;
  int max_iterations = 400;
};

struct FairCutResult {
  std::vector<char> in_a;  // A, contains t
  FlowAssignment flow;     // final flow including residual fix-ups
  double delta_u = 0, delta_a = 0;
  double t_net_in = 0;               // total flow absorbed by t
  std::vector<double> potentials;    // Phi^(k) per iteration
  std::vector<char> step_was_cut;    // per iteration
  double worst_prune_ratio = 0;      // max over C of bound/(4 delta C)
  int iterations = 0;
};

struct FairCutIterState {
  const FlowNet* net = nullptr;
  std::vector<char> in_a;       // A^(k)
  std::vector<char> in_b;       // B^(k) after pruning
  FlowAssignment flow;          // f^(k)
  int k = 0;
};

// Iterative removal of family sets whose incoming residual capacity at
// B-vertices exceeds 2 delta(C), in decreasing size order; afterwards
// every set satisfies the 4 delta(C) bound (checked, hard error).
std::vector<char> prune_candidates(const FairCutIterState& state,
                                   const LaminarFamily& family,
                                   double* worst_ratio = nullptr);

struct StarGraph {
  FlowNet net;             // G[B] plus the source s
  Vertex s = -1;
  double tau = 0;          // deg_H(s)
  ResidualView residual;   // directed caps incl. the doubled s-arcs
  LaminarFamily family;    // {C cap B} u {{s}}
  std::vector<EdgeId> slot_of;   // star edge id -> original edge id (-1 for s-arcs)
  std::vector<EdgeId> star_arc_of_vertex;  // vertex -> its s-arc or -1
};

// H^(k): G[B] with a source s attached by half the incoming residual.
StarGraph build_star_graph(const FairCutIterState& state, Vertex t,
                           const LaminarFamily& family);

// Routes the leftover star-flow demand (zeroed outside B, absorbed at t)
// through route_fn at congestion <= 3 eps'.
FlowAssignment route_residual_demands(const FlowNet& net,
                                      const std::vector<char>& in_b, Vertex t,
                                      const Demand& d_prime,
                                      const LaminarFamily& family,
                                      const FamilyRouteFn& route_fn,
                                      double route_q, double eps_prime);

FairCutResult fair_cut(const FairCutInput& input);

}  // namespace wxflow
