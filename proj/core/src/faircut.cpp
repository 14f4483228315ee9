#include "wxflow/faircut.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wxflow {

namespace {

// Residual capacity entering v across arcs from outside the set.
double inflow_at(const FlowNet& net, const FlowAssignment& f,
                 const std::vector<char>& in_set, Vertex v) {
  double s = 0;
  for (EdgeId e : net.incident(v)) {
    const FlowNet::Edge& ed = net.edge(e);
    Vertex u = net.other(e, v);
    if (in_set[u]) continue;
    // Residual in the u -> v direction.
    s += ed.v == v ? ed.cap - f.f[e] : ed.cap + f.f[e];
  }
  return s;
}

double boundary_residual(const FlowNet& net, const FlowAssignment& f,
                         const std::vector<char>& in_set) {
  double s = 0;
  for (Vertex v = 0; v < net.n(); ++v)
    if (in_set[v]) s += inflow_at(net, f, in_set, v);
  return s;
}

double undirected_boundary(const FlowNet& net, const std::vector<char>& in_set) {
  double s = 0;
  for (const FlowNet::Edge& e : net.edges())
    if (in_set[e.u] != in_set[e.v]) s += e.cap;
  return s;
}

}  // namespace

std::vector<char> prune_candidates(const FairCutIterState& state,
                                   const LaminarFamily& family,
                                   double* worst_ratio) {
  const FlowNet& net = *state.net;
  std::vector<char> in_b = state.in_a;
  std::vector<double> inflow(net.n(), 0.0);
  for (Vertex v = 0; v < net.n(); ++v)
    if (in_b[v]) inflow[v] = inflow_at(net, state.flow, in_b, v);

  std::vector<int> order(family.sets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return family.sets[a].size() > family.sets[b].size();
  });

  for (int ci : order) {
    const auto& c = family.sets[ci];
    double sum = 0;
    for (Vertex v : c)
      if (in_b[v]) sum += inflow[v];
    if (sum > 2 * family.delta[ci]) {
      // Remove C from B and refresh the inflow of remaining neighbors.
      std::vector<Vertex> removed;
      for (Vertex v : c)
        if (in_b[v]) {
          in_b[v] = 0;
          removed.push_back(v);
        }
      for (Vertex u : removed) {
        for (EdgeId e : net.incident(u)) {
          Vertex w = net.other(e, u);
          if (!in_b[w]) continue;
          const FlowNet::Edge& ed = net.edge(e);
          inflow[w] += ed.v == w ? ed.cap - state.flow.f[e]
                                 : ed.cap + state.flow.f[e];
        }
      }
    }
  }

  // The pruning lemma: every set now obeys the 4 delta(C) bound.
  double worst = 0;
  for (size_t ci = 0; ci < family.sets.size(); ++ci) {
    double sum = 0;
    for (Vertex v : family.sets[ci])
      if (in_b[v]) sum += inflow_at(net, state.flow, in_b, v);
    if (family.delta[ci] > 0)
      worst = std::max(worst, sum / (4 * family.delta[ci]));
    if (sum > 4 * family.delta[ci] * (1 + kRelTol) + 1e-9)
      throw ContractError("prune_candidates: 4 delta(C) bound violated");
  }
  if (worst_ratio) *worst_ratio = std::max(*worst_ratio, worst);
  return in_b;
}

StarGraph build_star_graph(const FairCutIterState& state, Vertex t,
                           const LaminarFamily& family) {
  const FlowNet& net = *state.net;
  StarGraph star;
  star.net = FlowNet(net.n() + 1);
  star.s = net.n();
  star.star_arc_of_vertex.assign(net.n(), -1);

  for (EdgeId e = 0; e < net.m(); ++e) {
    const FlowNet::Edge& ed = net.edge(e);
    if (!state.in_b[ed.u] || !state.in_b[ed.v]) continue;
    EdgeId id = star.net.add_edge(ed.u, ed.v, ed.cap, -1);
    star.slot_of.push_back(e);
    star.residual.cap_fwd.push_back(ed.cap - state.flow.f[e]);
    star.residual.cap_bwd.push_back(ed.cap + state.flow.f[e]);
    (void)id;
  }
  for (Vertex v = 0; v < net.n(); ++v) {
    if (!state.in_b[v]) continue;
    double in = inflow_at(net, state.flow, state.in_b, v);
    if (in <= 0) continue;
    EdgeId id = star.net.add_edge(star.s, v, in / 2, -1);
    star.star_arc_of_vertex[v] = id;
    star.slot_of.push_back(-1);
    star.residual.cap_fwd.push_back(in);  // directed (s,v) arc doubled
    star.residual.cap_bwd.push_back(0);
    star.tau += in / 2;
  }
  star.residual.net = &star.net;

  star.family.sets.clear();
  for (const auto& c : family.sets) {
    std::vector<Vertex> cb;
    for (Vertex v : c)
      if (state.in_b[v]) cb.push_back(v);
    if (!cb.empty()) star.family.sets.push_back(std::move(cb));
  }
  star.family.sets.push_back({star.s});
  star.family.compute_deltas(star.net);
  (void)t;
  return star;
}

FlowAssignment route_residual_demands(const FlowNet& net,
                                      const std::vector<char>& in_b, Vertex t,
                                      const Demand& d_prime,
                                      const LaminarFamily& family,
                                      const FamilyRouteFn& route_fn,
                                      double route_q, double eps_prime) {
  // f'' must cancel d' on B \ {t}; whatever is left lands on t.
  Demand d2(net.n(), 0.0);
  double at_t = 0;
  for (Vertex v = 0; v < net.n(); ++v) {
    if (!in_b[v] || v == t) continue;
    d2[v] = -d_prime[v];
    at_t -= d2[v];
  }
  d2[t] = at_t;
  double scale_bound = 3 * eps_prime / route_q;
  for (size_t ci = 0; ci < family.sets.size(); ++ci) {
    double s = std::abs(demand_of(d2, family.sets[ci]));
    if (s > scale_bound * family.delta[ci] * (1 + kRelTol) + 1e-9)
      throw ContractError(
          "route_residual_demands: |d''(C)| exceeds (3 eps'/q) delta(C)");
  }
  if (sum_abs(d2) <= 0) return FlowAssignment(net.m());
  if (!route_fn)
    throw InputError("route_residual_demands: no route_fn configured");
  // The router takes family-respecting demands at congestion q; scale up,
  // route, scale back down.
  Demand scaled = d2;
  double inv = 1.0 / scale_bound;
  for (double& x : scaled) x *= inv;
  FlowAssignment f = route_fn(scaled);
  for (double& x : f.f) x *= scale_bound;
  return f;
}

FairCutResult fair_cut(const FairCutInput& input) {
  const FlowNet& net = *input.net;
  const int n = net.n();
  if (input.t < 0 || input.t >= n || !input.in_u[input.t])
    throw InputError("fair_cut: t must lie in U");
  for (const auto& c : input.family.sets)
    for (Vertex v : c)
      if (v == input.t) throw InputError("fair_cut: family set contains t");
  input.family.check_laminar(n);

  double w = std::max(1.0, net.max_cap());
  double eps_prime = input.eps_prime > 0
                         ? input.eps_prime
                         : input.eps / (4 * std::ceil(log2d(
                                                std::max(2.0, double(n) * w))));
  double threshold = 1.0 / (double(n) * double(n) * double(n) * w);

  FairCutResult res;
  res.delta_u = undirected_boundary(net, input.in_u);

  FairCutIterState st;
  st.net = &net;
  st.in_a = input.in_u;
  st.flow = FlowAssignment(net.m());
  FlowAssignment fixups(net.m());

  for (int k = 0; k < input.max_iterations; ++k) {
    double phi = boundary_residual(net, st.flow, st.in_a);
    if (!res.potentials.empty()) {
      double prev = res.potentials.back();
      if (res.potentials.size() >= 2 &&
          phi > 0.75 * prev * (1 + kRelTol) + 1e-9)
        throw ContractError("fair_cut: potential failed to decrease by 3/4");
      if (phi > prev * (1 + kRelTol) + 1e-9)
        throw ContractError("fair_cut: potential increased");
    }
    if (phi <= threshold) break;
    res.potentials.push_back(phi);
    st.in_b = prune_candidates(st, input.family, &res.worst_prune_ratio);

    StarGraph star = build_star_graph(st, input.t, input.family);
    AlmostRouteRequest req;
    req.graph = &star.residual;
    req.s = star.s;
    req.t = input.t;
    req.tau = star.tau;
    req.eps = eps_prime / input.route_q;
    req.family = &star.family;
    req.iter_budget = input.iter_budget;
    AlmostRouteOutput out = almost_route(req, input.backend);

    if (out.kind == AlmostRouteOutput::kCut) {
      if (out.cut_side[input.t])
        throw ContractError("fair_cut: t landed on the source side");
      std::vector<char> next(n, 0);
      for (Vertex v = 0; v < n; ++v)
        next[v] = st.in_b[v] && !out.cut_side[v];
      st.in_a = std::move(next);
      res.step_was_cut.push_back(1);
    } else {
      // Map the star flow back: split each (s,v) arc across the real
      // boundary arcs into v, in edge-id order.
      FlowAssignment fprime(net.m());
      for (EdgeId se = 0; se < star.net.m(); ++se) {
        EdgeId slot = star.slot_of[se];
        if (slot >= 0) fprime.f[slot] += out.flow.f[se];
      }
      for (Vertex v = 0; v < n; ++v) {
        EdgeId arc = star.star_arc_of_vertex[v];
        if (arc < 0) continue;
        double x = out.flow.f[arc];
        if (x <= 0) continue;
        for (EdgeId e : net.incident(v)) {
          if (x <= 0) break;
          const FlowNet::Edge& ed = net.edge(e);
          Vertex u = net.other(e, v);
          if (st.in_b[u]) continue;
          double avail = ed.v == v ? ed.cap - st.flow.f[e] - fprime.f[e]
                                   : ed.cap + st.flow.f[e] + fprime.f[e];
          double z = std::min(x, avail);
          if (z <= 0) continue;
          fprime.f[e] += ed.v == v ? z : -z;
          x -= z;
        }
        if (x > 1e-6 * std::max(1.0, star.tau))
          throw ContractError("fair_cut: star flow could not be mapped back");
      }
      // Residual fix-up so every B-vertex nets to zero at the end.
      Demand dprime(n, 0.0);
      {
        std::vector<double> outs = net.net_flows(fprime);
        for (Vertex v = 0; v < n; ++v) dprime[v] = -outs[v];  // net-out
      }
      bool need = false;
      for (Vertex v = 0; v < n; ++v)
        if (st.in_b[v] && v != input.t &&
            std::abs(dprime[v]) > 1e-9 * std::max(1.0, star.tau))
          need = true;
      if (need) {
        FlowAssignment fpp =
            route_residual_demands(net, st.in_b, input.t, dprime, input.family,
                                   input.route_fn, input.route_q, eps_prime);
        fixups.add(fpp);
      }
      st.flow.add(fprime);
      st.in_a = st.in_b;
      res.step_was_cut.push_back(0);
    }
    ++res.iterations;
  }

  st.flow.add(fixups);
  res.in_a = st.in_a;
  res.flow = st.flow;
  res.delta_a = undirected_boundary(net, res.in_a);
  res.t_net_in = net.net_flow(res.flow, input.t);

  // The three output properties, measured on every run.
  if (res.delta_a > 4 * res.delta_u * (1 + kRelTol) + 1e-9)
    throw ContractError("fair_cut property 1 violated: delta A > 4 delta U");
  for (EdgeId e = 0; e < net.m(); ++e) {
    const FlowNet::Edge& ed = net.edge(e);
    bool au = res.in_a[ed.u], av = res.in_a[ed.v];
    if (au == av) continue;
    double into_a = av ? res.flow.f[e] : -res.flow.f[e];
    if (into_a < (1 - input.eps) * ed.cap - 1e-7 * std::max(1.0, ed.cap))
      throw ContractError(
          "fair_cut property 2 violated: boundary edge undersaturated");
  }
  for (Vertex v = 0; v < n; ++v) {
    if (!res.in_a[v] || v == input.t) continue;
    double nf = net.net_flow(res.flow, v);
    if (std::abs(nf) > 1e-6 * std::max(1.0, res.delta_u))
      throw ContractError("fair_cut property 3 violated: nonzero net flow");
  }
  return res;
}

}  // namespace wxflow
