#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "wxflow/dinic.hpp"
#include "wxflow/graph.hpp"

namespace wxflow {

struct MinCongestionResult {
  bool feasible = true;
  double congestion = 0.0;
  FlowAssignment flow;  // aligned with the CapGraph edge list
};

// Optimal congestion for routing demand b in g, by binary search on the
// capacity scale with an exact max flow feasibility test per step.
// 60 fixed iterations, relative precision ~1e-6.
MinCongestionResult min_congestion_route(const CapGraph& g, const Demand& b);

// True iff for all S subseteq A, delta_G(S) / min(d(S), d(A\S)) >= phi,
// skipping degenerate denominators.  Refuses |A| > 20.
bool brute_near_expander(const CapGraph& g, const Weighting& d,
                         const std::vector<Vertex>& a, double phi);

// A weighted multiset: (value, multiplicity) pairs.
using WeightedMultiset = std::vector<std::pair<double, Cap>>;

struct ProgressSetResult {
  double eta = 0.0;
  double mean = 0.0;
  bool left_is_high = false;  // L is the high-value side
  WeightedMultiset left;      // L_eta
  WeightedMultiset right;     // R_eta
  WeightedMultiset cert;      // S subseteq L certifying progress
  Cap left_size = 0;          // |L| counting multiplicity
  bool ok = false;            // both certificate conditions verified
};

// Constructive split of a weighted multiset into L/R with a certificate
// subset S such that (s-eta)^2 >= (s-mean)^2/9 for s in S and the S side
// carries at least 1/36 of the total variance.  When the exact-size
// block is pinned by ties, the straddling value may be moved wholly to
// one side (|L| then differs from ceil(|X|/8)).
ProgressSetResult brute_progress_set(const WeightedMultiset& x);

struct QualityResult {
  double max_ratio = 0.0;  // worst opt/estimate seen (completeness)
  double min_ratio = 0.0;  // best opt/estimate seen (soundness >= 1)
  bool infinite = false;   // some estimate was 0 with opt > 0
  int trials_used = 0;
};

// Empirical quality of a cut family as a congestion approximator:
// extremes of min_congestion / max_C |b(C)|/delta(C) over random
// zero-sum demands.  Trials are seeded independently, so the result is
// identical for any worker count.
QualityResult approximator_quality(const CapGraph& g,
                                   const std::vector<std::vector<Vertex>>& family,
                                   int trials, uint64_t seed, int threads = 0);

// Capacity of the cut induced by a source-side in the terminal-extended
// graph of prob; equals the max flow value at optimality.
double cut_value(const FlowProblem& prob, const std::vector<char>& side);

// Connected component ids of g (by lowest-vertex order).
std::vector<int> components_of(const CapGraph& g);

}  // namespace wxflow
