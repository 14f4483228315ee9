#include "wxflow/sherman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace wxflow {

ResidualView ResidualView::plain(const FlowNet& net) {
  ResidualView rv;
  rv.net = &net;
  rv.cap_fwd.resize(net.m());
  rv.cap_bwd.resize(net.m());
  for (EdgeId e = 0; e < net.m(); ++e)
    rv.cap_fwd[e] = rv.cap_bwd[e] = net.edge(e).cap;
  return rv;
}

ResidualView ResidualView::of_flow(const FlowNet& net,
                                   const FlowAssignment& f) {
  ResidualView rv;
  rv.net = &net;
  rv.cap_fwd.resize(net.m());
  rv.cap_bwd.resize(net.m());
  for (EdgeId e = 0; e < net.m(); ++e) {
    rv.cap_fwd[e] = net.edge(e).cap - f.f[e];
    rv.cap_bwd[e] = net.edge(e).cap + f.f[e];
  }
  return rv;
}

void LaminarFamily::compute_deltas(const FlowNet& net) {
  delta.assign(sets.size(), 0.0);
  std::vector<char> mark(net.n(), 0);
  for (size_t i = 0; i < sets.size(); ++i) {
    for (Vertex v : sets[i]) mark[v] = 1;
    for (const FlowNet::Edge& e : net.edges())
      if (mark[e.u] != mark[e.v]) delta[i] += e.cap;
    for (Vertex v : sets[i]) mark[v] = 0;
  }
}

void LaminarFamily::check_laminar(int n) const {
  std::vector<int> mark(n, -1);
  for (size_t i = 0; i < sets.size(); ++i) {
    for (Vertex v : sets[i]) {
      if (v < 0 || v >= n) throw InputError("family vertex out of range");
      mark[v] = static_cast<int>(i);
    }
  }
  for (size_t i = 0; i < sets.size(); ++i) {
    std::vector<char> in_i(n, 0);
    for (Vertex v : sets[i]) in_i[v] = 1;
    for (size_t j = i + 1; j < sets.size(); ++j) {
      size_t inter = 0;
      for (Vertex v : sets[j]) inter += in_i[v];
      if (inter > 0 && inter < sets[i].size() && inter < sets[j].size())
        throw ContractError("family is not laminar: sets " +
                            std::to_string(i) + " and " + std::to_string(j) +
                            " cross");
    }
  }
}

namespace {

struct FamilyIndex {
  // Per family set: boundary slots with orientation sign (+1 when the
  // edge tail u lies inside the set).
  std::vector<std::vector<std::pair<EdgeId, double>>> boundary;

  FamilyIndex(const LaminarFamily& fam, const FlowNet& net) {
    boundary.resize(fam.sets.size());
    std::vector<char> mark(net.n(), 0);
    for (size_t i = 0; i < fam.sets.size(); ++i) {
      for (Vertex v : fam.sets[i]) mark[v] = 1;
      for (EdgeId e = 0; e < net.m(); ++e) {
        bool mu = mark[net.edge(e).u], mv = mark[net.edge(e).v];
        if (mu != mv) boundary[i].push_back({e, mu ? 1.0 : -1.0});
      }
      for (Vertex v : fam.sets[i]) mark[v] = 0;
    }
  }
};

double directed_cut_value(const ResidualView& g,
                          const std::vector<char>& side) {
  double v = 0;
  for (EdgeId e = 0; e < g.net->m(); ++e) {
    const FlowNet::Edge& ed = g.net->edge(e);
    if (side[ed.u] && !side[ed.v]) v += g.cap_fwd[e];
    if (side[ed.v] && !side[ed.u]) v += g.cap_bwd[e];
  }
  return v;
}

void verify_output(const AlmostRouteRequest& req, AlmostRouteOutput& out) {
  if (out.kind == AlmostRouteOutput::kCut) {
    out.cut_value = directed_cut_value(*req.graph, out.cut_side);
    if (!(out.cut_value < req.tau))
      throw ContractError("almost_route returned a cut of value >= tau");
    if (!out.cut_side[req.s] || out.cut_side[req.t])
      throw ContractError("almost_route cut does not separate s from t");
    return;
  }
  const FlowNet& net = *req.graph->net;
  out.routed.assign(net.n(), 0.0);
  for (EdgeId e = 0; e < net.m(); ++e) {
    out.routed[net.edge(e).u] += out.flow.f[e];
    out.routed[net.edge(e).v] -= out.flow.f[e];
    if (out.flow.f[e] > req.graph->cap_fwd[e] * (1 + kRelTol) + 1e-9 ||
        -out.flow.f[e] > req.graph->cap_bwd[e] * (1 + kRelTol) + 1e-9)
      throw ContractError("almost_route flow exceeds residual capacity");
  }
  out.residual.assign(net.n(), 0.0);
  for (Vertex v = 0; v < net.n(); ++v) out.residual[v] = -out.routed[v];
  out.residual[req.s] += req.tau;
  out.residual[req.t] -= req.tau;
  out.max_family_ratio = 0;
  const LaminarFamily& fam = *req.family;
  for (size_t i = 0; i < fam.sets.size(); ++i) {
    double r = std::abs(demand_of(out.residual, fam.sets[i]));
    if (fam.delta[i] > 0)
      out.max_family_ratio = std::max(out.max_family_ratio, r / fam.delta[i]);
    else if (r > 1e-9 * std::max(1.0, req.tau))
      throw ContractError("almost_route residual on a zero-capacity set");
    if (r > req.eps * fam.delta[i] * (1 + 1e-6) + 1e-9 * std::max(1.0, req.tau))
      throw ContractError("almost_route residual violates |d~(C)| <= eps delta(C)");
  }
}

}  // namespace

AlmostRouteOutput almost_route_exact(const AlmostRouteRequest& req) {
  const FlowNet& net = *req.graph->net;
  const int n = net.n();
  Dinic din(n + 1);
  int limiter = n;
  din.add_arc(limiter, req.s, req.tau);
  std::vector<int> arc_of(net.m());
  for (EdgeId e = 0; e < net.m(); ++e)
    arc_of[e] = din.add_arc(net.edge(e).u, net.edge(e).v,
                            req.graph->cap_fwd[e], req.graph->cap_bwd[e]);
  double value = din.solve(limiter, req.t);

  AlmostRouteOutput out;
  // Blocking-flow dust can leave the value a hair under tau even when
  // the instance is feasible; only a real shortfall means a cut.
  if (value < req.tau * (1 - 1e-9) - 1e-9) {
    out.kind = AlmostRouteOutput::kCut;
    std::vector<char> side = din.min_cut_side(limiter);
    out.cut_side.assign(n, 0);
    for (Vertex v = 0; v < n; ++v) out.cut_side[v] = side[v];
    out.cut_side[req.s] = 1;  // s is reachable through the limiter
  } else {
    out.kind = AlmostRouteOutput::kFlow;
    out.flow.f.assign(net.m(), 0.0);
    for (EdgeId e = 0; e < net.m(); ++e) out.flow.f[e] = din.arc_flow(arc_of[e]);
  }
  verify_output(req, out);
  return out;
}

AlmostRouteOutput almost_route_sherman(const AlmostRouteRequest& req) {
  const FlowNet& net = *req.graph->net;
  const ResidualView& rv = *req.graph;
  const LaminarFamily& fam = *req.family;
  const int n = net.n();
  const int m = net.m();
  FamilyIndex fidx(fam, net);

  Demand target(n, 0.0);
  target[req.s] += req.tau;
  target[req.t] -= req.tau;

  const double eps = req.eps;
  const int nterms = 2 * m + 2 * static_cast<int>(fam.sets.size());
  const double beta = 4.0 * std::log(std::max(2, nterms)) / std::max(eps, 1e-6);

  // Operator-norm estimate by power iteration on A^T A.
  auto apply_ata = [&](const std::vector<double>& x, std::vector<double>* out_) {
    std::vector<double>& y = *out_;
    y.assign(m, 0.0);
    for (EdgeId e = 0; e < m; ++e) {
      double c2 = 0;
      if (rv.cap_fwd[e] > 0) c2 += 1.0 / (rv.cap_fwd[e] * rv.cap_fwd[e]);
      if (rv.cap_bwd[e] > 0) c2 += 1.0 / (rv.cap_bwd[e] * rv.cap_bwd[e]);
      y[e] += x[e] * c2;
    }
    for (size_t i = 0; i < fam.sets.size(); ++i) {
      if (fam.delta[i] <= 0) continue;
      double coeff = 1.0 / (eps * fam.delta[i]);
      double dot = 0;
      for (auto [e, sg] : fidx.boundary[i]) dot += sg * x[e];
      double z = 2.0 * coeff * coeff * dot;
      for (auto [e, sg] : fidx.boundary[i]) y[e] += sg * z;
    }
  };
  double opnorm2 = 1.0;
  {
    std::vector<double> x(m, 1.0), y;
    double nx = std::sqrt(static_cast<double>(std::max(1, m)));
    for (double& v : x) v /= nx;
    for (int it = 0; it < 30; ++it) {
      apply_ata(x, &y);
      double ny = 0;
      for (double v : y) ny += v * v;
      ny = std::sqrt(ny);
      if (ny <= 1e-30) break;
      opnorm2 = ny;
      for (int e = 0; e < m; ++e) x[e] = y[e] / ny;
    }
  }
  // Base step from the smoothness of the soft-max; the line search
  // below adapts it to the local landscape.
  const double base_step = 1.0 / (2.0 * beta * std::max(opnorm2, 1e-12));
  double step = base_step;

  std::vector<double> f(m, 0.0);
  Demand netout(n, 0.0);
  std::vector<double> dC(fam.sets.size(), 0.0);

  auto recompute = [&]() {
    std::fill(netout.begin(), netout.end(), 0.0);
    for (EdgeId e = 0; e < m; ++e) {
      netout[net.edge(e).u] += f[e];
      netout[net.edge(e).v] -= f[e];
    }
    for (size_t i = 0; i < fam.sets.size(); ++i) {
      double s = 0;
      for (Vertex v : fam.sets[i]) s += target[v] - netout[v];
      dC[i] = s;
    }
  };

  // Soft-max potential of an arbitrary flow vector.
  auto potential_of = [&](const std::vector<double>& fv) {
    std::vector<double> outs(n, 0.0);
    for (EdgeId e = 0; e < m; ++e) {
      outs[net.edge(e).u] += fv[e];
      outs[net.edge(e).v] -= fv[e];
    }
    double mx = -std::numeric_limits<double>::infinity();
    std::vector<double> terms;
    terms.reserve(nterms);
    for (EdgeId e = 0; e < m; ++e) {
      terms.push_back(rv.cap_fwd[e] > 0 ? fv[e] / rv.cap_fwd[e] : 0.0);
      terms.push_back(rv.cap_bwd[e] > 0 ? -fv[e] / rv.cap_bwd[e] : 0.0);
    }
    for (size_t i = 0; i < fam.sets.size(); ++i) {
      double s = 0;
      for (Vertex v : fam.sets[i]) s += target[v] - outs[v];
      double val = fam.delta[i] > 0 ? s / (eps * fam.delta[i]) : 0.0;
      terms.push_back(val);
      terms.push_back(-val);
    }
    for (double v : terms) mx = std::max(mx, v);
    double z = 0;
    for (double v : terms) z += std::exp(beta * (v - mx));
    return mx + std::log(z) / beta;
  };

  auto family_ok = [&]() {
    for (size_t i = 0; i < fam.sets.size(); ++i) {
      double lim = eps * fam.delta[i] * (1 - 1e-9);
      if (std::abs(dC[i]) > lim + 1e-12 * std::max(1.0, req.tau)) return false;
    }
    return true;
  };

  // Threshold sweep over a vertex score; returns true when a verified
  // cut of value < tau exists.
  auto try_cuts = [&](const std::vector<double>& score,
                      AlmostRouteOutput* out) {
    std::vector<double> vals(score);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (double th : vals) {
      std::vector<char> side(n, 0);
      for (Vertex v = 0; v < n; ++v) side[v] = score[v] >= th;
      side[req.s] = 1;
      side[req.t] = 0;
      double val = directed_cut_value(rv, side);
      if (val < req.tau * (1 - 1e-12)) {
        out->kind = AlmostRouteOutput::kCut;
        out->cut_side = side;
        return true;
      }
    }
    return false;
  };

  // Residual reachability from s under the current flow, sweeping a few
  // saturation thresholds so near-saturated arcs also count as cut.
  auto reachability_cut = [&](AlmostRouteOutput* out) {
    double cap_scale = std::max(1.0, net.max_cap());
    for (double frac : {1e-9, 0.02, 0.05, 0.12}) {
      double tol = frac * cap_scale;
      std::vector<char> side(n, 0);
      std::vector<Vertex> stack{req.s};
      side[req.s] = 1;
      while (!stack.empty()) {
        Vertex v = stack.back();
        stack.pop_back();
        for (EdgeId e : net.incident(v)) {
          const FlowNet::Edge& ed = net.edge(e);
          Vertex w = net.other(e, v);
          if (side[w]) continue;
          double rescap =
              ed.u == v ? rv.cap_fwd[e] - f[e] : rv.cap_bwd[e] + f[e];
          if (rescap > tol) {
            side[w] = 1;
            stack.push_back(w);
          }
        }
      }
      if (side[req.t]) continue;
      double val = directed_cut_value(rv, side);
      if (val < req.tau * (1 - 1e-12)) {
        out->kind = AlmostRouteOutput::kCut;
        out->cut_side = side;
        return true;
      }
    }
    return false;
  };

  const int max_iters =
      static_cast<int>(req.iter_budget / std::max(eps * eps, 1e-12));
  std::vector<double> grad(m), wC(fam.sets.size());
  AlmostRouteOutput out;
  double last_potential = std::numeric_limits<double>::infinity();
  int stall = 0;

  for (int iter = 0; iter < max_iters; ++iter) {
    recompute();
    if (family_ok()) {
      out.kind = AlmostRouteOutput::kFlow;
      out.flow.f = f;
      out.iterations = iter;
      verify_output(req, out);
      return out;
    }

    // Soft-max weights over the stacked vector.
    double mx = -std::numeric_limits<double>::infinity();
    std::vector<double> xs;
    xs.reserve(nterms);
    for (EdgeId e = 0; e < m; ++e) {
      xs.push_back(rv.cap_fwd[e] > 0 ? f[e] / rv.cap_fwd[e] : 0.0);
      xs.push_back(rv.cap_bwd[e] > 0 ? -f[e] / rv.cap_bwd[e] : 0.0);
    }
    for (size_t i = 0; i < fam.sets.size(); ++i) {
      double v = fam.delta[i] > 0 ? dC[i] / (eps * fam.delta[i]) : 0.0;
      xs.push_back(v);
      xs.push_back(-v);
    }
    for (double v : xs) mx = std::max(mx, v);
    double z = 0;
    for (double v : xs) z += std::exp(beta * (v - mx));
    double potential = mx + std::log(z) / beta;

    // Gradient of the soft-max.
    std::fill(grad.begin(), grad.end(), 0.0);
    size_t k = 0;
    for (EdgeId e = 0; e < m; ++e) {
      double wplus = std::exp(beta * (xs[k] - mx)) / z;
      double wminus = std::exp(beta * (xs[k + 1] - mx)) / z;
      k += 2;
      if (rv.cap_fwd[e] > 0) grad[e] += wplus / rv.cap_fwd[e];
      if (rv.cap_bwd[e] > 0) grad[e] -= wminus / rv.cap_bwd[e];
    }
    for (size_t i = 0; i < fam.sets.size(); ++i) {
      double wplus = std::exp(beta * (xs[k] - mx)) / z;
      double wminus = std::exp(beta * (xs[k + 1] - mx)) / z;
      k += 2;
      wC[i] = fam.delta[i] > 0 ? (wplus - wminus) / (eps * fam.delta[i]) : 0.0;
    }
    for (size_t i = 0; i < fam.sets.size(); ++i) {
      if (wC[i] == 0) continue;
      for (auto [e, sg] : fidx.boundary[i]) grad[e] -= sg * wC[i];
    }

    // Backtracking line search on the soft-max potential, deterministic
    // and bounded on both sides.
    std::vector<double> fnew(m);
    bool moved = false;
    for (int bt = 0; bt < 24; ++bt) {
      for (EdgeId e = 0; e < m; ++e)
        fnew[e] =
            std::clamp(f[e] - step * grad[e], -rv.cap_bwd[e], rv.cap_fwd[e]);
      double pnew = potential_of(fnew);
      if (pnew <= potential - 1e-14 * std::max(1.0, std::abs(potential))) {
        f.swap(fnew);
        step = std::min(step * 1.3, base_step * 1e8);
        moved = true;
        break;
      }
      step = std::max(step * 0.5, base_step * 1e-4);
      if (step == base_step * 1e-4) break;
    }
    if (!moved) {
      for (EdgeId e = 0; e < m; ++e)
        f[e] = std::clamp(f[e] - base_step * grad[e], -rv.cap_bwd[e],
                          rv.cap_fwd[e]);
      ++stall;
    } else if (potential >
               last_potential - 1e-12 * std::max(1.0, last_potential)) {
      ++stall;
    } else {
      stall = 0;
    }
    last_potential = potential;

    if (stall >= 24 || iter % 16 == 15) {
      if (reachability_cut(&out)) {
        out.iterations = iter;
        verify_output(req, out);
        return out;
      }
      std::vector<double> score(n, 0.0);
      for (size_t i = 0; i < fam.sets.size(); ++i)
        for (Vertex v : fam.sets[i]) score[v] += wC[i];
      score[req.s] += 1e6;
      score[req.t] -= 1e6;
      if (try_cuts(score, &out)) {
        out.iterations = iter;
        verify_output(req, out);
        return out;
      }
      if (stall >= 24) stall = 0;
    }
  }
  recompute();
  if (family_ok()) {
    out.kind = AlmostRouteOutput::kFlow;
    out.flow.f = f;
    out.iterations = max_iters;
    verify_output(req, out);
    return out;
  }
  if (reachability_cut(&out)) {
    verify_output(req, out);
    return out;
  }
  throw UnconvergedError(
      "almost_route (first-order backend) hit the iteration cap without a "
      "verified cut or flow");
}

AlmostRouteOutput almost_route(const AlmostRouteRequest& req,
                               AlmostRouteBackend backend) {
  if (req.tau <= 0) {
    AlmostRouteOutput out;
    out.kind = AlmostRouteOutput::kFlow;
    out.flow.f.assign(req.graph->net->m(), 0.0);
    verify_output(req, out);
    return out;
  }
  return backend == AlmostRouteBackend::kExact ? almost_route_exact(req)
                                               : almost_route_sherman(req);
}

Oracle1Result pseudo_matching_oracle(const MatchingInstance& inst,
                                     const CutMatchingState& state,
                                     const PseudoRouter& router,
                                     const MatchingOracleConfig& cfg) {
  const CapGraph& g = *state.g;
  const int n = g.n();
  const Weighting& d = state.d;
  const Weighting& dcur = state.d_cur;
  const double d_total = static_cast<double>(weight_total(d));
  const double dcur_total = static_cast<double>(weight_total(dcur));

  double l2nw = std::max(
      1.0, log2d(std::max(2.0, double(n) * double(std::max<Cap>(1, g.max_cap())))));
  double eps_hat = cfg.eps_hat > 0 ? cfg.eps_hat : 1.0 / (4.0 * l2nw * l2nw);
  double quality = std::max(1.0, router.quality());
  double eps = eps_hat / (90.0 * quality);  // eps_hat / (4320 a b L^2)

  // Terminal-extended instance graph: s feeds the L sides, the R sides
  // drain into t, edge ids carry the CapGraph origin.
  FlowNet h(n + 2);
  const Vertex s = n, t = n + 1;
  for (EdgeId e = 0; e < inst.net.m(); ++e) {
    const FlowNet::Edge& ed = inst.net.edge(e);
    h.add_edge(ed.u, ed.v, ed.cap, ed.orig);
  }
  std::vector<EdgeId> s_arc(n, -1), t_arc(n, -1);
  for (Vertex v = 0; v < n; ++v) {
    if (inst.source[v] > 0) s_arc[v] = h.add_edge(s, v, inst.source[v], -1);
    if (inst.sink[v] > 0) t_arc[v] = h.add_edge(v, t, inst.sink[v], -1);
  }

  LaminarFamily fam;
  fam.sets = router.family().sets;
  fam.sets.push_back({s});
  fam.sets.push_back({t});
  fam.compute_deltas(h);
  ResidualView rv = ResidualView::plain(h);

  auto run = [&](double tau) {
    AlmostRouteRequest req;
    req.graph = &rv;
    req.s = s;
    req.t = t;
    req.tau = tau;
    req.eps = eps;
    req.family = &fam;
    req.iter_budget = cfg.iter_budget;
    return almost_route(req, cfg.backend);
  };

  // Binary search tau to granularity eps_hat d(V)/2: grow on a flow,
  // shrink on a cut.
  double lo = eps_hat * d_total;
  double hi = std::max(lo, dcur_total);
  AlmostRouteOutput flow_out;
  bool have_flow = false;
  AlmostRouteOutput cut_out;
  bool have_cut = false;

  AlmostRouteOutput first = run(lo);
  if (first.kind == AlmostRouteOutput::kFlow) {
    flow_out = std::move(first);
    have_flow = true;
    ;
  } else {
    cut_out = std::move(first);
    have_cut = true;
    hi = lo;
    lo = 0;  // the empty flow stands in below eps_hat d(V)
  }
  if (!have_cut) {
    AlmostRouteOutput top = run(hi);
    if (top.kind == AlmostRouteOutput::kFlow) {
      flow_out = std::move(top);
      lo = hi;
    } else {
      cut_out = std::move(top);
      have_cut = true;
    }
  }
  double gran = std::max(eps_hat * d_total / 2, 1e-9);
  while (have_cut && hi - lo > gran) {
    double mid = 0.5 * (lo + hi);
    AlmostRouteOutput out = run(mid);
    if (out.kind == AlmostRouteOutput::kFlow) {
      flow_out = std::move(out);
      have_flow = true;
      lo = mid;
    } else {
      cut_out = std::move(out);
      hi = mid;
    }
  }

  // Flow side: spread the terminal residuals, route the rest through the
  // pseudo-congestion-approximator, then clean up with path surgery.
  FlowAssignment f12(h.m());
  Demand resid(n + 2, 0.0);
  if (have_flow) {
    f12.f = flow_out.flow.f;
    f12.f.resize(h.m(), 0.0);
    resid = flow_out.residual;
    resid.resize(n + 2, 0.0);
  }
  // Residual at s moves onto the L vertices proportional to d.
  {
    double ws = 0, wt = 0;
    for (Vertex v = 0; v < n; ++v) {
      if (s_arc[v] >= 0) ws += static_cast<double>(d[v]);
      if (t_arc[v] >= 0) wt += static_cast<double>(d[v]);
    }
    if (ws > 0 && resid[s] != 0) {
      for (Vertex v = 0; v < n; ++v) {
        if (s_arc[v] < 0) continue;
        double x = resid[s] * static_cast<double>(d[v]) / ws;
        f12.f[s_arc[v]] += x;
        resid[v] += x;
      }
      resid[s] = 0;
    }
    if (wt > 0 && resid[t] != 0) {
      for (Vertex v = 0; v < n; ++v) {
        if (t_arc[v] < 0) continue;
        double x = resid[t] * static_cast<double>(d[v]) / wt;
        f12.f[t_arc[v]] -= x;
        resid[v] -= x;
      }
      resid[t] = 0;
    }
  }

  // f3: route the in-graph residual via the hierarchy.
  Demand b(resid.begin(), resid.begin() + n);
  double scale = 0;
  const LaminarFamily& gfam = router.family();
  {
    LaminarFamily tmp = gfam;  // deltas against the unscaled graph
    FlowNet plain = scale_graph(g, 1.0);
    tmp.compute_deltas(plain);
    for (size_t i = 0; i < tmp.sets.size(); ++i) {
      double r = std::abs(demand_of(b, tmp.sets[i]));
      if (tmp.delta[i] > 0) scale = std::max(scale, r / tmp.delta[i]);
    }
  }
  FlowAssignment f3g(g.m());
  if (sum_abs(b) > 1e-12 * std::max(1.0, d_total) && scale > 0) {
    Demand scaled = b;
    for (double& x : scaled) x /= scale;
    PseudoRouter::Outcome oc = router.route(scaled);
    f3g = oc.flow;
    for (double& x : f3g.f) x *= scale;
  }

  // Combined flow on an extension of h that also carries the
  // intercomponent edges f3 may use.
  FlowNet hx = h;
  std::vector<EdgeId> foreign_slot(g.m(), -1);
  std::vector<EdgeId> slot_of_gedge(g.m(), -1);
  for (EdgeId e = 0; e < inst.net.m(); ++e)
    slot_of_gedge[inst.net.edge(e).orig] = e;
  std::vector<char> is_foreign(hx.m(), 0);
  for (EdgeId e = 0; e < g.m(); ++e) {
    if (slot_of_gedge[e] >= 0) continue;
    foreign_slot[e] = hx.add_edge(g.edge(e).u, g.edge(e).v,
                                  2.0 / inst.phi * g.edge(e).cap, e);
    is_foreign.push_back(1);
  }
  FlowAssignment total(hx.m());
  for (EdgeId e = 0; e < h.m(); ++e) total.f[e] = f12.f[e];
  for (EdgeId e = 0; e < g.m(); ++e) {
    if (f3g.f.empty() || f3g.f[e] == 0) continue;
    EdgeId slot = slot_of_gedge[e] >= 0 ? slot_of_gedge[e] : foreign_slot[e];
    total.f[slot] += f3g.f[e];
  }

  std::vector<double> pos(hx.n(), 0.0), neg(hx.n(), 0.0);
  {
    std::vector<double> outs = hx.net_flows(total);
    for (Vertex v = 0; v < hx.n(); ++v) {
      double o = -outs[v];
      if (o > 0)
        pos[v] = o;
      else
        neg[v] = -o;
    }
  }
  PathDecomposition pd = path_decompose(hx, total, pos, neg);

  // Keep only s -> t paths that stay inside one component.
  double down = 1.0 + eps_hat / 25.0;
  std::vector<Path> kept;
  for (Path& p : pd.paths) {
    if (p.start() != s || p.end() != t) continue;
    bool clean = true;
    for (EdgeId e : p.edges)
      if (is_foreign[e]) {
        clean = false;
        break;
      }
    if (!clean) continue;
    p.weight /= down;
    kept.push_back(std::move(p));
  }

  // Assemble the oracle answer per component.
  std::vector<char> cut_side(n, 0);
  if (have_cut)
    for (Vertex v = 0; v < n; ++v) cut_side[v] = cut_out.cut_side[v];

  Oracle1Result res;
  std::vector<double> routed_from(n, 0.0);  // source pushed out of each u
  std::map<int, std::vector<const Path*>> paths_by_comp;
  for (const Path& p : kept) {
    Vertex u = p.verts[1];  // after s
    routed_from[u] += p.weight;
    paths_by_comp[inst.comp_of[u]].push_back(&p);
  }

  double cut_cap_sum = 0, d_cut_sum = 0;
  Cap covered_weight = 0, active_weight = 0;
  for (const CutStep& cs : inst.cut_steps) {
    Oracle1Result::PerComp pc;
    pc.comp_id = cs.comp_id;
    pc.left = cs.left;
    const auto& verts = state.comps[cs.comp_id].verts;
    Cap d_comp = weight_of(dcur, verts);
    active_weight += d_comp;
    std::vector<char> in_cut(n, 0);
    Cap d_cut = 0;
    double nabla_cut = 0;
    for (Vertex v : verts) {
      if (cut_side[v]) {
        in_cut[v] = 1;
        pc.cut.push_back(v);
        d_cut += dcur[v];
        nabla_cut += inst.sink[v];
      }
    }
    for (EdgeId e = 0; e < g.m(); ++e) {
      Vertex u = g.edge(e).u, v = g.edge(e).v;
      if (inst.comp_of[u] == cs.comp_id && inst.comp_of[v] == cs.comp_id &&
          in_cut[u] != in_cut[v])
        pc.cut_cap += static_cast<double>(g.edge(e).cap);
    }
    for (Vertex v : verts)
      if (!in_cut[v]) pc.delta_target += inst.source[v];
    for (const Path* p : paths_by_comp[cs.comp_id]) {
      Vertex u = p->verts[1];
      if (!in_cut[u]) pc.routed += p->weight;
      // Strip the terminal arcs to obtain the matching path inside G.
      Path q;
      q.weight = p->weight;
      q.verts.assign(p->verts.begin() + 1, p->verts.end() - 1);
      q.edges.assign(p->edges.begin() + 1, p->edges.end() - 1);
      for (EdgeId& e : q.edges) e = hx.edge(e).orig;
      pc.flow_paths.paths.push_back(std::move(q));
    }
    pc.flow_paths.n = n;
    pc.flow_paths.m = static_cast<size_t>(g.m());

    Cap d_orig = weight_of(d, verts);
    bool keep = true;
    // Unsaturated-source rule.
    if (pc.routed <
        pc.delta_target - 20000.0 * eps_hat * static_cast<double>(d_orig))
      keep = false;
    // Heavy-sink rule.
    if (3 * nabla_cut >= static_cast<double>(d_comp)) keep = false;
    if (keep && 2 * d_cut > d_comp)
      throw ContractError(
          "pseudo matching oracle: d_{t-1}(C_A) > d_{t-1}(A)/2 for a kept "
          "component");
    pc.covered = keep;
    if (keep) {
      covered_weight += d_comp;
      cut_cap_sum += pc.cut_cap;
      d_cut_sum += static_cast<double>(d_cut);
    }
    res.comps.push_back(std::move(pc));
  }

  // Oracle 1 certificates.
  if (cut_cap_sum * 2.0 / inst.phi >
      d_cut_sum + 2 * eps_hat * d_total * (1 + 1e-6) + 1e-6)
    throw ContractError(
        "pseudo matching oracle: cut capacity certificate failed");
  if (2 * covered_weight + 1 < active_weight &&
      static_cast<double>(covered_weight) <
          0.5 * static_cast<double>(active_weight) * (1 - 1e-9))
    throw ContractError("pseudo matching oracle: coverage below one half");
  return res;
}

ApproxMaxFlowResult approx_max_flow(const CapGraph& g, Vertex s, Vertex t,
                                    double eps, const PseudoRouter& router,
                                    AlmostRouteBackend backend) {
  if (s < 0 || t < 0 || s >= g.n() || t >= g.n() || s == t)
    throw InputError("approx_max_flow: bad terminals");
  if (!(eps > 0) || eps >= 1) throw InputError("approx_max_flow: eps in (0,1)");

  FlowNet net = scale_graph(g, 1.0);
  ResidualView rv = ResidualView::plain(net);
  LaminarFamily fam = router.family();
  fam.sets.push_back({s});
  fam.sets.push_back({t});
  fam.compute_deltas(net);

  double quality = std::max(1.0, router.quality());
  double eps_ar = eps / (4.0 * quality);

  ApproxMaxFlowResult best;
  auto attempt = [&](double tau) -> bool {
    AlmostRouteRequest req;
    req.graph = &rv;
    req.s = s;
    req.t = t;
    req.tau = tau;
    req.eps = eps_ar;
    req.family = &fam;
    AlmostRouteOutput out = almost_route(req, backend);
    ++best.almost_route_calls;
    if (out.kind == AlmostRouteOutput::kCut) return false;
    FlowAssignment f = out.flow;
    // Route the residual demand through the approximator, then repeat on
    // what is left until it vanishes (one pass suffices when the top
    // level has no boundary).
    Demand rem = out.residual;
    for (int pass = 0; pass < 4 && sum_abs(rem) > 1e-11 * std::max(1.0, tau);
         ++pass) {
      double scale = 0;
      for (size_t i = 0; i < fam.sets.size(); ++i) {
        double r = std::abs(demand_of(rem, fam.sets[i]));
        if (fam.delta[i] > 0) scale = std::max(scale, r / fam.delta[i]);
      }
      if (scale <= 0) break;
      Demand scaled = rem;
      for (double& x : scaled) x /= scale;
      PseudoRouter::Outcome oc = router.route(scaled);
      for (EdgeId e = 0; e < g.m(); ++e) f.f[e] += scale * oc.flow.f[e];
      for (Vertex v = 0; v < g.n(); ++v) rem[v] = scale * oc.residual[v];
    }
    if (sum_abs(rem) > 1e-8 * std::max(1.0, tau)) return false;
    double kappa = std::max(1.0, congestion(g, f) * (1 + 1e-12));
    for (double& x : f.f) x /= kappa;
    double value = -net_flow(g, f, s);  // measured, not tau
    if (value > best.value) {
      best.value = value;
      best.flow = std::move(f);
      best.congestion = congestion(g, best.flow);
    }
    return true;
  };

  double hi = static_cast<double>(std::min(g.degree(s), g.degree(t))) + 1.0;
  double lo = 0.0;
  for (int it = 0; it < 60 && hi - lo > 1e-12 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    if (attempt(mid))
      lo = mid;
    else
      hi = mid;
  }
  return best;
}

}  // namespace wxflow
