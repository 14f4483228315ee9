#include "wxflow/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace wxflow {

void HierarchyConfig::resolve(int n, Cap w) {
  double l2nw = std::ceil(
      log2d(std::max(2.0, double(std::max(2, n)) * double(std::max<Cap>(1, w)))));
  if (strict_paper) {
    if (phi <= 0) phi = l2nw / 1e10;
    psi = 1e-10;
    if (eps1 <= 0) eps1 = 1e-10;
    eps2 = 1e-10;
  } else {
    if (phi <= 0) phi = 1.0 / (16.0 * l2nw);
    if (eps1 <= 0) eps1 = 1.0 / (4.0 * l2nw * l2nw);
  }
}

VertexPartition extend_partition(const CapGraph& g,
                                 const VertexPartition& p_bar_prev,
                                 const std::vector<char>& in_v_next,
                                 const std::vector<std::vector<Vertex>>& p_next) {
  std::vector<std::vector<Vertex>> blocks;
  for (const auto& b : p_next) {
    for (Vertex v : b)
      if (!in_v_next[v])
        throw InputError("extend_partition: P block leaves V_next");
    if (!b.empty()) blocks.push_back(b);
  }
  for (const auto& b : p_bar_prev.blocks()) {
    std::vector<Vertex> q;
    for (Vertex v : b)
      if (!in_v_next[v]) q.push_back(v);
    if (!q.empty()) blocks.push_back(std::move(q));
  }
  return VertexPartition(g.n(), blocks);  // overlap check inside
}

RefinementFamily build_family(const CapGraph& g,
                              const std::vector<HierarchyLevel>& levels) {
  const int big = static_cast<int>(levels.size());
  RefinementFamily fam;
  fam.r_ge.resize(big);
  fam.deg_r.resize(big);
  fam.r_ge[big - 1] = levels[big - 1].p_bar;
  for (int i = big - 2; i >= 0; --i) {
    // Refine R_{>=i+1} with P-bar_i: blocks keyed by the pair.
    std::map<std::pair<int, int>, std::vector<Vertex>> pieces;
    for (Vertex v = 0; v < g.n(); ++v) {
      int outer = fam.r_ge[i + 1].block_of(v);
      int inner = levels[i].p_bar.block_of(v);
      pieces[{outer, inner}].push_back(v);
    }
    std::vector<std::vector<Vertex>> blocks;
    blocks.reserve(pieces.size());
    for (auto& [key, verts] : pieces) blocks.push_back(std::move(verts));
    fam.r_ge[i] = VertexPartition(g.n(), blocks);
  }
  for (int i = 0; i < big; ++i) {
    BoundaryResult bd = boundary(g, fam.r_ge[i]);
    fam.deg_r[i] = induced_degrees(g, bd.edges);
    // Refinement observation: every boundary edge lost between levels
    // lies on the P-bar_i boundary.
    if (i + 1 < big) {
      std::vector<char> next_mask(g.m(), 0);
      for (EdgeId e : boundary(g, fam.r_ge[i + 1]).edges) next_mask[e] = 1;
      for (EdgeId e : bd.edges) {
        if (next_mask[e]) continue;
        if (levels[i].p_bar.block_of(g.edge(e).u) ==
            levels[i].p_bar.block_of(g.edge(e).v))
          throw ContractError(
              "refinement observation violated: an R_{>=i} boundary edge "
              "is interior to both R_{>=i+1} and P-bar_i");
      }
    }
  }
  // Union, deduplicated by vertex set.
  std::map<std::vector<Vertex>, int> seen;
  for (int i = 0; i < big; ++i) {
    for (const auto& block : fam.r_ge[i].blocks()) {
      std::vector<Vertex> key = block;
      std::sort(key.begin(), key.end());
      if (seen.count(key)) continue;
      seen[key] = i + 1;
      fam.family.sets.push_back(key);
      fam.first_level.push_back(i + 1);
    }
  }
  fam.family.delta.clear();
  fam.family.delta.reserve(fam.family.sets.size());
  for (const auto& s : fam.family.sets)
    fam.family.delta.push_back(
        static_cast<double>(cut_of_set(g, s).capacity));
  fam.family.check_laminar(g.n());
  return fam;
}

namespace {

double block_delta(const CapGraph& g, const std::vector<Vertex>& block) {
  return static_cast<double>(cut_of_set(g, block).capacity);
}

}  // namespace

LevelRouteResult Hierarchy::route_between_levels(int i, const Demand& s) const {
  const CapGraph& gg = *g;
  if (i < 1 || i + 1 > depth()) throw InputError("route_between_levels: bad i");
  const HierarchyLevel& next = levels[i];  // level i+1
  if (!next.boundary)
    throw InputError("route_between_levels: level has no boundary witness");
  const double tol = 1e-9;
  for (Vertex v = 0; v < gg.n(); ++v) {
    double cap = next.in_vi[v] ? static_cast<double>(next.deg_p_bar[v])
                               : static_cast<double>(next.deg_v_boundary[v]);
    if (s[v] < -tol || s[v] > cap * (1 + kRelTol) + tol)
      throw ContractError("route_between_levels: source bound violated");
  }

  // Doubled witness paths, with V_{i+1}-boundary capacity re-sourcing
  // some of them to the outside endpoint.
  std::vector<Path> pool;
  pool.reserve(next.boundary->paths.paths.size() + gg.m());
  std::vector<std::vector<int>> at(gg.n());
  for (const Path& p : next.boundary->paths.paths) {
    Path q = p;
    q.weight *= 2;
    at[q.start()].push_back(static_cast<int>(pool.size()));
    pool.push_back(std::move(q));
  }
  std::vector<size_t> cursor(gg.n(), 0);
  for (EdgeId e = 0; e < gg.m(); ++e) {
    Vertex a = gg.edge(e).u, b = gg.edge(e).v;
    if (next.in_vi[a] == next.in_vi[b]) continue;
    Vertex outside = next.in_vi[a] ? b : a;
    Vertex inside = next.in_vi[a] ? a : b;
    double need = static_cast<double>(gg.edge(e).cap);
    while (need > tol && cursor[inside] < at[inside].size()) {
      Path& p = pool[at[inside][cursor[inside]]];
      double take = std::min(need, p.weight);
      if (take > tol) {
        Path q;
        q.weight = take;
        q.verts.reserve(p.verts.size() + 1);
        q.verts.push_back(outside);
        q.verts.insert(q.verts.end(), p.verts.begin(), p.verts.end());
        q.edges.reserve(p.edges.size() + 1);
        q.edges.push_back(e);
        q.edges.insert(q.edges.end(), p.edges.begin(), p.edges.end());
        p.weight -= take;
        need -= take;
        at[outside].push_back(static_cast<int>(pool.size()));
        pool.push_back(std::move(q));
      }
      if (pool[at[inside][cursor[inside]]].weight <= tol) ++cursor[inside];
    }
  }

  // Trim path weights so every start emits exactly s(v).
  std::vector<double> start_w(gg.n(), 0.0);
  for (const Path& p : pool) start_w[p.start()] += p.weight;
  LevelRouteResult out;
  out.sink.assign(gg.n(), 0.0);
  out.flow = FlowAssignment(gg.m());
  for (const Path& p : pool) {
    if (p.weight <= 0) continue;
    Vertex st = p.start();
    if (s[st] <= tol) continue;
    if (start_w[st] < s[st] * (1 - 1e-6) - tol)
      throw ContractError(
          "route_between_levels: witness paths cannot cover the source");
    double scale = std::min(1.0, s[st] / start_w[st]);
    double wgt = p.weight * scale;
    Vertex v = st;
    for (EdgeId e : p.edges) {
      out.flow.f[e] += gg.edge(e).u == v ? wgt : -wgt;
      v = gg.other(e, v);
    }
    out.sink[p.end()] += wgt;
  }
  out.congestion = congestion(gg, out.flow);
  const HierarchyLevel& cur = levels[i - 1];
  for (Vertex v = 0; v < gg.n(); ++v) {
    if (out.sink[v] >
        0.5 * static_cast<double>(cur.deg_p_bar[v]) * (1 + 1e-6) + 1e-6)
      throw ContractError("route_between_levels: sink exceeds half the "
                          "level-i boundary degree");
  }
  if (out.congestion > 3 * beta_ * (1 + 1e-6) + 1e-9)
    throw ContractError("route_between_levels: congestion above 3 beta");
  return out;
}

namespace {

struct PropertylessResult {
  Demand leftover;  // y'
  FlowAssignment flow;
};

}  // namespace

LevelRouteResult Hierarchy::route_r_to_p(int i, const Demand& x) const {
  const CapGraph& gg = *g;
  const int big = depth();
  if (i == big) {
    // Base of the downward recursion: nothing moves.
    LevelRouteResult out;
    out.sink = x;
    out.flow = FlowAssignment(gg.m());
    return out;
  }
  if (i < 1 || i >= big) throw InputError("route_r_to_p: bad level");
  const HierarchyLevel& next = levels[i];
  const double tol = 1e-9 * std::max<double>(1.0, gg.total_cap());
  for (Vertex v = 0; v < gg.n(); ++v) {
    if (x[v] != 0 && !next.in_vi[v])
      throw ContractError("route_r_to_p: x not supported on V_{i+1}");
    if (std::abs(x[v]) >
        static_cast<double>(fam.deg_r[i - 1][v]) * (1 + kRelTol) + tol)
      throw ContractError("route_r_to_p: |x| exceeds deg of R_{>=i}");
  }

  // Downward recursion of the propertyless routing.
  std::function<PropertylessResult(int, const Demand&)> propertyless =
      [&](int lvl, const Demand& xv) -> PropertylessResult {
    PropertylessResult out;
    if (lvl == big) {
      out.leftover = xv;
      out.flow = FlowAssignment(gg.m());
      return out;
    }
    Demand xprime(gg.n(), 0.0);
    for (Vertex v = 0; v < gg.n(); ++v) {
      Cap lo = fam.deg_r[lvl - 1][v];
      if (lo > 0)
        xprime[v] = xv[v] * static_cast<double>(fam.deg_r[lvl][v]) /
                    static_cast<double>(lo);
    }
    PropertylessResult rec = propertyless(lvl + 1, xprime);
    const HierarchyLevel& lv_next = levels[lvl];
    Demand svec(gg.n(), 0.0);
    for (Vertex v = 0; v < gg.n(); ++v) {
      double half = rec.leftover[v] / 2;
      svec[v] = lv_next.in_vi[v]
                    ? half
                    : std::min(static_cast<double>(lv_next.deg_v_boundary[v]),
                               half);
    }
    LevelRouteResult bl = route_between_levels(lvl, svec);
    out.flow = rec.flow;
    out.flow.add(bl.flow, 2.0);
    out.leftover.assign(gg.n(), 0.0);
    for (Vertex v = 0; v < gg.n(); ++v)
      out.leftover[v] = xv[v] - xprime[v] + rec.leftover[v] - 2 * svec[v] +
                        2 * bl.sink[v];
    return out;
  };

  // Non-negative version with the cluster truncation.
  auto nonneg = [&](const Demand& xp) -> LevelRouteResult {
    PropertylessResult pl = propertyless(i, xp);
    FlowNet plain = scale_graph(gg, 1.0);
    FlowAssignment fa;
    fa.f = pl.flow.f;
    PathDecomposition pd = path_decompose(plain, fa, xp, pl.leftover);
    // Gross decomposition: pair the untouched part of each terminal.
    for (Vertex v = 0; v < gg.n(); ++v) {
      double common = std::min(xp[v], pl.leftover[v]);
      if (common > tol) {
        Path q;
        q.weight = common;
        q.verts = {v};
        pd.paths.push_back(std::move(q));
      }
    }
    PathDecomposition cut = truncate_at_boundary(pd, next.p_bar.block_map());
    LevelRouteResult out;
    out.flow = FlowAssignment(gg.m());
    out.sink.assign(gg.n(), 0.0);
    for (const Path& p : cut.paths) {
      Vertex v = p.start();
      for (EdgeId e : p.edges) {
        out.flow.f[e] += gg.edge(e).u == v ? p.weight : -p.weight;
        v = gg.other(e, v);
      }
      out.sink[p.end()] += p.weight;
    }
    out.congestion = congestion(gg, out.flow);
    return out;
  };

  Demand xpos(gg.n(), 0.0), xneg(gg.n(), 0.0);
  for (Vertex v = 0; v < gg.n(); ++v) {
    if (x[v] > 0)
      xpos[v] = x[v];
    else
      xneg[v] = -x[v];
  }
  LevelRouteResult rp = nonneg(xpos);
  LevelRouteResult rn = nonneg(xneg);
  LevelRouteResult out;
  out.flow = rp.flow;
  out.flow.add(rn.flow, -1.0);
  out.sink.assign(gg.n(), 0.0);
  for (Vertex v = 0; v < gg.n(); ++v) out.sink[v] = rp.sink[v] - rn.sink[v];
  out.congestion = congestion(gg, out.flow);

  // Per-cluster balance (x - y)(C) = 0 over P-bar_{i+1}.
  for (const auto& block : next.p_bar.blocks()) {
    double diff = 0;
    for (Vertex v : block) diff += x[v] - out.sink[v];
    if (std::abs(diff) > 1e-6 * std::max(1.0, sum_abs(x)))
      throw ContractError("route_r_to_p: cluster balance violated");
  }
  return out;
}

LevelRouteResult Hierarchy::route_level(int i, const Demand& s) const {
  const CapGraph& gg = *g;
  const int big = depth();
  if (i < 1 || i >= big) throw InputError("route_level: bad level");
  const HierarchyLevel& next = levels[i];
  const VertexPartition& refinement = fam.r_ge[i];  // R_{>= i+1}
  const double tol = 1e-9 * std::max<double>(1.0, gg.total_cap());

  for (Vertex v = 0; v < gg.n(); ++v)
    if (std::abs(s[v]) >
        static_cast<double>(fam.deg_r[i - 1][v]) * (1 + kRelTol) + tol)
      throw ContractError("route_level: |s| exceeds deg of R_{>=i}");

  // Proportional sink on V_{i+1}; untouched elsewhere.
  LevelRouteResult out;
  out.sink.assign(gg.n(), 0.0);
  for (const auto& block : refinement.blocks()) {
    if (block.empty()) continue;
    double sc = demand_of(s, block);
    if (next.in_vi[block.front()]) {
      double dc = block_delta(gg, block);
      if (std::abs(sc) > dc * (1 + kRelTol) + tol)
        throw ContractError("route_level: |s(C)| exceeds delta(C)");
      if (dc > 0)
        for (Vertex v : block)
          out.sink[v] = sc * static_cast<double>(fam.deg_r[i][v]) / dc;
    } else {
      for (Vertex v : block) out.sink[v] = s[v];
    }
  }

  Demand x(gg.n(), 0.0);
  for (Vertex v = 0; v < gg.n(); ++v) x[v] = (s[v] - out.sink[v]) / 2;
  LevelRouteResult rtp = route_r_to_p(i, x);
  out.flow = rtp.flow;
  for (double& f : out.flow.f) f *= 2;

  // Mix 2y inside the certified clusters via the stored transcript.
  Demand y = rtp.sink;
  if (!next.decomp)
    throw InputError("route_level: level has no decomposition artifact");
  const FinalDecomposition& fin = *next.decomp;
  double sigma = 1.0;
  for (Vertex v = 0; v < gg.n(); ++v) {
    double allow = static_cast<double>(fin.d[v] + fin.deg_boundary[v]);
    if (allow > 0) sigma = std::max(sigma, 2 * std::abs(y[v]) / allow);
    else if (std::abs(y[v]) > tol)
      throw ContractError("route_level: leftover demand on a zero-weight vertex");
  }
  std::vector<Demand> demands;
  for (int c = 0; c < fin.clusters.num_blocks(); ++c) {
    if (!fin.certified[c]) continue;
    Demand b(gg.n(), 0.0);
    double mass = 0;
    for (Vertex v : fin.clusters.block(c)) {
      b[v] = 2 * y[v] / sigma;
      mass += std::abs(b[v]);
    }
    if (mass > tol) demands.push_back(std::move(b));
  }
  if (!demands.empty()) {
    MultiRouteResult mix = route_grafted_demands(fin, demands);
    observe_alpha(std::max(1.0, mix.congestion));
    for (const FlowAssignment& f : mix.flows) out.flow.add(f, sigma);
  }
  out.congestion = congestion(gg, out.flow);

  // The level flow must route s - t within each refinement block.
  std::vector<double> outs = net_flows(gg, out.flow);
  double scale = std::max(1.0, sum_abs(s));
  for (Vertex v = 0; v < gg.n(); ++v) {
    double err = std::abs(-outs[v] - (s[v] - out.sink[v]));
    if (err > 2e-5 * scale)
      throw ContractError("route_level: flow does not route s - t");
  }
  double cap = 48.0 * big * alpha_ * beta_;
  if (out.congestion > cap * (1 + 1e-6) + 1e-9)
    throw ContractError("route_level: congestion above 48 L alpha beta");
  return out;
}

PseudoRouter::Outcome Hierarchy::route_full(const Demand& b) const {
  const CapGraph& gg = *g;
  if (static_cast<int>(b.size()) != gg.n())
    throw InputError("route_full: demand size mismatch");
  for (size_t ci = 0; ci < fam.family.sets.size(); ++ci) {
    double r = std::abs(demand_of(b, fam.family.sets[ci]));
    if (r > fam.family.delta[ci] * (1 + kRelTol) +
                1e-9 * std::max(1.0, sum_abs(b)))
      throw ContractError("route_full: demand violates family set " +
                          std::to_string(ci));
  }
  Outcome out;
  out.flow = FlowAssignment(gg.m());
  Demand cur = b;
  for (int i = 1; i < depth(); ++i) {
    LevelRouteResult step = route_level(i, cur);
    out.flow.add(step.flow);
    cur = step.sink;
  }
  out.residual = cur;
  const Weighting& top = levels.back().deg_p_bar;
  for (Vertex v = 0; v < gg.n(); ++v)
    if (std::abs(cur[v]) > static_cast<double>(top[v]) * (1 + kRelTol) +
                               1e-6 * std::max(1.0, sum_abs(b)))
      throw ContractError("route_full: residual exceeds the top boundary");
  out.congestion = congestion(gg, out.flow);
  double q = quality();
  if (out.congestion > q * (1 + 1e-6) + 1e-9)
    throw ContractError("route_full: congestion above the quality bound");
  return out;
}

double Hierarchy::estimate_congestion(const Demand& b) const {
  double est = 0;
  for (size_t ci = 0; ci < fam.family.sets.size(); ++ci) {
    double r = std::abs(demand_of(b, fam.family.sets[ci]));
    if (fam.family.delta[ci] > 0)
      est = std::max(est, r / fam.family.delta[ci]);
    else if (r > 1e-9 * std::max(1.0, sum_abs(b)))
      return std::numeric_limits<double>::infinity();
  }
  return est;
}

GFlowGadget build_gflow(const CapGraph& g, const GraftingInstance& inst,
                        const LaminarFamily& base_family) {
  GFlowGadget gx;
  gx.net = FlowNet(g.n() + 1);
  gx.t = g.n();
  gx.leaf_of.assign(g.n(), -1);
  gx.split_of_edge.assign(g.m(), -1);

  // Interior edges, scaled like the grafting instance.
  for (EdgeId e = 0; e < inst.net.m(); ++e) {
    const FlowNet::Edge& ed = inst.net.edge(e);
    gx.net.add_edge(ed.u, ed.v, ed.cap, ed.orig);
    gx.g_edge_of.push_back(ed.orig);
  }
  // Sink edges (u, t) for fully kept vertices of plus blocks.
  for (Vertex v = 0; v < g.n(); ++v) {
    int pb = inst.plus_block_of[v];
    if (pb >= 0 && inst.d_t[v] == inst.d[v] && inst.d[v] > 0) {
      gx.net.add_edge(v, gx.t, static_cast<double>(inst.d[v]) / 5, -1);
      gx.g_edge_of.push_back(-1);
    }
  }
  // Leaf nodes for deleted vertices of plus blocks.
  for (Vertex v = 0; v < g.n(); ++v) {
    int pb = inst.plus_block_of[v];
    if (pb >= 0 && inst.d_t[v] == 0 && inst.d[v] > 0) {
      Vertex leaf = gx.net.add_vertex();
      gx.leaf_of[v] = leaf;
      gx.net.add_edge(leaf, v, static_cast<double>(inst.d[v]), -1);
      gx.g_edge_of.push_back(-1);
      gx.net.add_edge(leaf, gx.t, static_cast<double>(inst.d[v]) / 5, -1);
      gx.g_edge_of.push_back(-1);
    }
  }
  // Split nodes per boundary edge touching a plus block; other boundary
  // edges stay plain.  Boundary edges are exactly those missing from the
  // instance net.
  std::vector<char> kept(g.m(), 0);
  for (EdgeId e = 0; e < inst.net.m(); ++e) kept[inst.net.edge(e).orig] = 1;
  for (EdgeId e = 0; e < g.m(); ++e) {
    if (kept[e]) continue;
    Vertex a = g.edge(e).u, b = g.edge(e).v;
    bool touches_plus =
        inst.plus_block_of[a] >= 0 || inst.plus_block_of[b] >= 0;
    double cap = static_cast<double>(g.edge(e).cap);
    if (touches_plus) {
      Vertex x = gx.net.add_vertex();
      gx.split_of_edge[e] = x;
      gx.net.add_edge(a, x, cap, e);
      gx.g_edge_of.push_back(e);
      gx.net.add_edge(x, b, cap, e);
      gx.g_edge_of.push_back(e);
    } else {
      gx.net.add_edge(a, b, cap / inst.psi, e);
      gx.g_edge_of.push_back(e);
    }
  }
  // Technical sink edges for vertices outside the plus blocks.
  for (Vertex v = 0; v < g.n(); ++v) {
    if (inst.plus_block_of[v] < 0 && inst.d[v] > 0) {
      gx.net.add_edge(v, gx.t, static_cast<double>(inst.d[v]) / 5, -1);
      gx.g_edge_of.push_back(-1);
    }
  }

  gx.in_u.assign(gx.net.n(), 0);
  for (Vertex v = 0; v < g.n(); ++v) gx.in_u[v] = 1;
  gx.in_u[gx.t] = 1;

  for (Vertex v = 0; v < g.n(); ++v) gx.source_total += inst.delta_gross[v];
  for (const FlowNet::Edge& e : gx.net.edges())
    if (gx.in_u[e.u] != gx.in_u[e.v]) gx.delta_u += e.cap;
  gx.delta_u_bound = 1.2 * gx.source_total;

  // C^flow: augmented base sets plus leaf and split singletons.
  std::vector<char> mark(g.n(), 0);
  for (const auto& c : base_family.sets) {
    std::vector<Vertex> aug = c;
    for (Vertex v : c) mark[v] = 1;
    for (Vertex v : c)
      if (gx.leaf_of[v] >= 0) aug.push_back(gx.leaf_of[v]);
    for (EdgeId e = 0; e < g.m(); ++e)
      if (gx.split_of_edge[e] >= 0 && mark[g.edge(e).u] && mark[g.edge(e).v])
        aug.push_back(gx.split_of_edge[e]);
    for (Vertex v : c) mark[v] = 0;
    gx.family.sets.push_back(std::move(aug));
  }
  for (Vertex v = 0; v < g.n(); ++v)
    if (gx.leaf_of[v] >= 0) gx.family.sets.push_back({gx.leaf_of[v]});
  for (EdgeId e = 0; e < g.m(); ++e)
    if (gx.split_of_edge[e] >= 0) gx.family.sets.push_back({gx.split_of_edge[e]});
  gx.family.compute_deltas(gx.net);
  return gx;
}

Oracle2Result gflow_grafting_oracle(const GraftingInstance& inst,
                                    const Hierarchy& h,
                                    AlmostRouteBackend backend) {
  const CapGraph& g = *inst.g;
  GFlowGadget gx = build_gflow(g, inst, h.family());
  if (gx.delta_u > 2.4 * std::max(1.0, gx.source_total))
    throw ContractError("gflow gadget: boundary of U is unexpectedly large");

  // Family deltas of the base sets against the unscaled graph, for the
  // routing scale.
  LaminarFamily base = h.family();
  {
    FlowNet plain = scale_graph(g, 1.0);
    base.compute_deltas(plain);
  }

  double q = 8 * std::max(1.0, h.quality()) + 10;
  FamilyRouteFn route_fn = [&](const Demand& b) -> FlowAssignment {
    FlowAssignment f(gx.net.m());
    Demand rem = b;
    // Split and leaf demand moves to a real endpoint first.
    for (Vertex v = 0; v < g.n(); ++v) {
      if (gx.leaf_of[v] < 0) continue;
      Vertex leaf = gx.leaf_of[v];
      if (rem[leaf] == 0) continue;
      // Edge (leaf, v): flow leaf -> v discharges the leaf's demand.
      for (EdgeId e : gx.net.incident(leaf)) {
        if (gx.net.other(e, leaf) != v) continue;
        f.f[e] += gx.net.edge(e).u == leaf ? rem[leaf] : -rem[leaf];
        break;
      }
      rem[v] += rem[leaf];
      rem[leaf] = 0;
    }
    for (EdgeId e = 0; e < g.m(); ++e) {
      Vertex x = gx.split_of_edge[e];
      if (x < 0 || rem[x] == 0) continue;
      Vertex a = g.edge(e).u;  // lower endpoint takes it
      for (EdgeId ne : gx.net.incident(x)) {
        if (gx.net.other(ne, x) != a) continue;
        f.f[ne] += gx.net.edge(ne).u == x ? rem[x] : -rem[x];
        break;
      }
      rem[a] += rem[x];
      rem[x] = 0;
    }
    // Route the in-graph part through the pseudo-approximator.
    Demand bv(g.n(), 0.0);
    for (Vertex v = 0; v < g.n(); ++v) bv[v] = rem[v];
    double sigma = 1.0;
    for (size_t i = 0; i < base.sets.size(); ++i) {
      double r = std::abs(demand_of(bv, base.sets[i]));
      if (base.delta[i] > 0) sigma = std::max(sigma, r / base.delta[i]);
    }
    Demand scaled = bv;
    for (double& xx : scaled) xx /= sigma;
    PseudoRouter::Outcome oc = h.route(scaled);
    // Map the G flow into the gadget, rerouting through split nodes.
    for (EdgeId e = 0; e < g.m(); ++e) {
      double fe = sigma * oc.flow.f[e];
      if (fe == 0) continue;
      Vertex x = gx.split_of_edge[e];
      if (x < 0) {
        // Find the gadget slot carrying this G edge.
        for (EdgeId ne = 0; ne < gx.net.m(); ++ne)
          if (gx.g_edge_of[ne] == e) {
            const FlowNet::Edge& ed = gx.net.edge(ne);
            f.f[ne] += (ed.u == g.edge(e).u) ? fe : -fe;
            break;
          }
      } else {
        for (EdgeId ne : gx.net.incident(x)) {
          const FlowNet::Edge& ed = gx.net.edge(ne);
          Vertex real = gx.net.other(ne, x);
          double dir = real == g.edge(e).u ? -fe : fe;  // u -> x -> v
          f.f[ne] += ed.u == x ? dir : -dir;
        }
      }
    }
    // Residual rides the t-star.
    Demand resid(gx.net.n(), 0.0);
    for (Vertex v = 0; v < g.n(); ++v) resid[v] = sigma * oc.residual[v];
    resid[gx.t] = rem[gx.t];
    for (Vertex v = 0; v < g.n(); ++v) {
      if (resid[v] == 0) continue;
      // Prefer the direct (v, t) edge, else go through the leaf.
      EdgeId direct = -1;
      for (EdgeId ne : gx.net.incident(v)) {
        Vertex o = gx.net.other(ne, v);
        if (o == gx.t) {
          direct = ne;
          break;
        }
      }
      if (direct >= 0) {
        f.f[direct] += gx.net.edge(direct).u == v ? resid[v] : -resid[v];
      } else if (gx.leaf_of[v] >= 0) {
        Vertex leaf = gx.leaf_of[v];
        EdgeId up = -1, over = -1;
        for (EdgeId ne : gx.net.incident(leaf)) {
          Vertex o = gx.net.other(ne, leaf);
          if (o == v) up = ne;
          if (o == gx.t) over = ne;
        }
        f.f[up] += gx.net.edge(up).u == v ? resid[v] : -resid[v];
        f.f[over] += gx.net.edge(over).u == leaf ? resid[v] : -resid[v];
      } else if (std::abs(resid[v]) > 1e-9) {
        throw ContractError("gflow route_fn: stranded residual demand");
      }
    }
    return f;
  };

  FairCutInput fin;
  fin.net = &gx.net;
  fin.in_u = gx.in_u;
  fin.t = gx.t;
  fin.family = gx.family;
  fin.route_fn = route_fn;
  fin.route_q = q;
  fin.eps = inst.eps2 / 2;
  fin.backend = backend;
  FairCutResult fair = fair_cut(fin);

  // Strip technical flow, keep only boundary-entering paths, truncate
  // at t, and translate to G terms.
  FlowAssignment stripped = fair.flow;
  for (EdgeId e = 0; e < gx.net.m(); ++e) {
    const FlowNet::Edge& ed = gx.net.edge(e);
    bool leaf_t = (ed.u >= g.n() + 1 || ed.v >= g.n() + 1) &&
                  (ed.u == gx.t || ed.v == gx.t);
    bool tech_t = (ed.u == gx.t && inst.plus_block_of[ed.v] < 0 && ed.v < g.n()) ||
                  (ed.v == gx.t && ed.u < g.n() && inst.plus_block_of[ed.u] < 0);
    if (leaf_t || tech_t) stripped.f[e] = 0;
  }
  std::vector<double> pos(gx.net.n(), 0.0), neg(gx.net.n(), 0.0);
  {
    std::vector<double> outs = gx.net.net_flows(stripped);
    for (Vertex v = 0; v < gx.net.n(); ++v) {
      double o = -outs[v];
      if (o > 0)
        pos[v] = o;
      else
        neg[v] = -o;
    }
  }
  PathDecomposition pd = path_decompose(gx.net, stripped, pos, neg);

  Oracle2Result res;
  res.paths.n = g.n();
  res.paths.m = static_cast<size_t>(g.m());
  res.routed_source.assign(g.n(), 0.0);
  res.absorbed_sink.assign(g.n(), 0.0);
  res.flow = FlowAssignment(inst.net.m());
  std::vector<EdgeId> slot_of_gedge(g.m(), -1);
  for (EdgeId e = 0; e < inst.net.m(); ++e)
    slot_of_gedge[inst.net.edge(e).orig] = e;

  for (const Path& p : pd.paths) {
    if (p.verts.size() < 2) continue;
    if (gx.in_u[p.start()]) continue;           // must start outside A
    if (!fair.in_a[p.verts[1]]) continue;       // and step into A
    // Truncate at the first visit to t.
    size_t endpos = p.verts.size() - 1;
    for (size_t k = 0; k < p.verts.size(); ++k)
      if (p.verts[k] == gx.t) {
        endpos = k;
        break;
      }
    if (endpos < 1) continue;
    // Translate: drop the entry hop and the final hop to t; contract
    // split nodes into their G edge.
    Path q;
    q.weight = p.weight;
    for (size_t k = 1; k <= endpos; ++k) {
      Vertex v = p.verts[k];
      if (v == gx.t) break;
      if (v < g.n()) q.verts.push_back(v);
    }
    if (q.verts.empty()) continue;
    res.routed_source[q.start()] += q.weight;
    res.absorbed_sink[q.end()] += q.weight;
    bool ok = true;
    for (size_t k = 0; k + 1 < q.verts.size(); ++k) {
      EdgeId found = -1;
      for (EdgeId e : g.incident(q.verts[k]))
        if (g.other(e, q.verts[k]) == q.verts[k + 1]) {
          found = e;
          break;
        }
      if (found < 0) {
        ok = false;
        break;
      }
      q.edges.push_back(found);
    }
    if (!ok) continue;
    res.paths.paths.push_back(std::move(q));
  }
  for (const Path& p : res.paths.paths) {
    Vertex v = p.start();
    for (EdgeId e : p.edges) {
      EdgeId slot = slot_of_gedge[e];
      if (slot >= 0)
        res.flow.f[slot] += g.edge(e).u == v ? p.weight : -p.weight;
      v = g.other(e, v);
    }
  }

  // Per-block answers and certificates.
  for (int b = 0; b < static_cast<int>(inst.plus_blocks.size()); ++b) {
    Oracle2Result::PerBlock pb;
    pb.block_id = b;
    pb.eligible = inst.eligible[b] != 0;
    if (!pb.eligible) {
      res.blocks.push_back(std::move(pb));
      continue;
    }
    std::vector<char> in_cut(g.n(), 0);
    for (Vertex v : inst.plus_blocks[b])
      if (!fair.in_a[v]) {
        in_cut[v] = 1;
        pb.cut.push_back(v);
      }
    // Clause 1a: inward saturation of each source structure (leaf and
    // split arcs) at kept vertices, measured from the fair flow.
    for (Vertex u : inst.plus_blocks[b]) {
      if (in_cut[u]) continue;
      double want = inst.delta_gross[u];
      if (want <= 0) continue;
      double got = 0;
      for (EdgeId ne : gx.net.incident(u)) {
        Vertex o = gx.net.other(ne, u);
        if (o <= gx.t) continue;  // not a leaf or split node
        const FlowNet::Edge& ed = gx.net.edge(ne);
        got += ed.v == u ? fair.flow.f[ne] : -fair.flow.f[ne];
      }
      pb.min_routed_frac = std::min(pb.min_routed_frac, got / want);
    }
    // Clause 1b: saturation of interior cut edges.
    for (EdgeId e = 0; e < inst.net.m(); ++e) {
      const FlowNet::Edge& ed = inst.net.edge(e);
      if (inst.plus_block_of[ed.u] != b || inst.plus_block_of[ed.v] != b)
        continue;
      if (in_cut[ed.u] == in_cut[ed.v]) continue;
      pb.cut_cap += g.edge(ed.orig).cap;
      // Locate the gadget slot of this interior edge.
      for (EdgeId ne = 0; ne < gx.net.m(); ++ne) {
        if (gx.g_edge_of[ne] != ed.orig) continue;
        const FlowNet::Edge& ged = gx.net.edge(ne);
        double into_rest = in_cut[ged.u] ? fair.flow.f[ne] : -fair.flow.f[ne];
        pb.min_sat_frac = std::min(pb.min_sat_frac, into_rest / ged.cap);
        break;
      }
    }
    res.blocks.push_back(std::move(pb));
  }
  return res;
}

void build_next_level(Hierarchy& h) {
  const CapGraph& g = *h.g;
  HierarchyLevel& top = h.levels.back();
  Weighting d = top.deg_p_bar;
  if (weight_total(d) == 0)
    throw InputError("build_next_level: the hierarchy is already complete");

  CutMatchingConfig cm;
  cm.phi = h.cfg.phi;
  cm.eps1 = h.cfg.eps1;
  cm.seed = h.cfg.seed + 1000 * static_cast<uint64_t>(h.depth());
  cm.x_max = h.cfg.cm_x_max;
  cm.rounds = h.cfg.cm_rounds;
  cm.strict_paper = h.cfg.strict_paper;
  cm.threads = h.cfg.threads;

  MatchingOracleFn oracle1;
  if (h.cfg.oracle == HierarchyConfig::OracleBackend::kExact) {
    cm.eps1 = 0;  // the exact backend has no slack
    oracle1 = exact_matching_oracle;
  } else {
    // The pseudo oracle keeps a component only when its routed source is
    // within 20000 eps_hat d(A) of the target, so that is its slack.
    double l2nw = std::max(
        1.0, log2d(std::max(2.0, double(g.n()) *
                                     double(std::max<Cap>(1, g.max_cap())))));
    cm.eps1 = std::max(cm.eps1, 10000.0 / (4.0 * l2nw * l2nw));
    oracle1 = [&h](const MatchingInstance& inst, const CutMatchingState& st) {
      MatchingOracleConfig mc;
      mc.backend = AlmostRouteBackend::kExact;
      return pseudo_matching_oracle(inst, st, h, mc);
    };
  }
  DecompositionResult dec = run_decomposition(g, d, cm, oracle1);

  GraftingOracleFn oracle2;
  if (h.cfg.oracle == HierarchyConfig::OracleBackend::kExact) {
    oracle2 = exact_grafting_oracle;
  } else {
    oracle2 = [&h](const GraftingInstance& inst) {
      return gflow_grafting_oracle(inst, h, AlmostRouteBackend::kExact);
    };
  }
  auto fin = std::make_shared<FinalDecomposition>(
      finalize(g, dec, d, h.cfg.psi, h.cfg.eps2, oracle2));

  std::vector<std::vector<Vertex>> certified;
  std::vector<char> in_v(g.n(), 0);
  for (int c = 0; c < fin->clusters.num_blocks(); ++c) {
    if (!fin->certified[c]) continue;
    certified.push_back(fin->clusters.block(c));
    for (Vertex v : fin->clusters.block(c)) in_v[v] = 1;
  }

  HierarchyLevel next;
  next.index = h.depth() + 1;
  next.in_vi = in_v;
  next.p_bar = extend_partition(g, top.p_bar, in_v, certified);
  BoundaryResult bd = boundary(g, next.p_bar);
  next.delta_p_bar = bd.capacity;
  next.deg_p_bar = induced_degrees(g, bd.edges);
  std::vector<Vertex> vset;
  for (Vertex v = 0; v < g.n(); ++v)
    if (in_v[v]) vset.push_back(v);
  next.deg_v_boundary = induced_degrees(g, cut_of_set(g, vset).edges);
  next.decomp = fin;

  // Property 4: halving.
  if (2 * next.delta_p_bar > top.delta_p_bar)
    throw ContractError(
        "hierarchy property 4 failed: delta did not halve (phi too large "
        "for this input; retune)");

  // Property 3 witness (T3) and its congestion.
  auto br = std::make_shared<BoundaryRoutingResult>(boundary_source_routing(*fin));
  for (Vertex v = 0; v < g.n(); ++v)
    if (br->received[v] >
        static_cast<double>(d[v]) / 4 * (1 + 1e-9) + 1e-9)
      throw ContractError(
          "hierarchy property 3 witness: a vertex receives more than d/4");
  next.boundary = br;
  next.beta_witness = std::max(1.0, br->congestion);
  h.observe_beta(next.beta_witness);

  // Property 2 witness (T2): a canonical respecting demand per cluster.
  {
    std::vector<Demand> demands;
    for (const auto& block : certified) {
      Demand b(g.n(), 0.0);
      double plus = 0, minus = 0;
      std::vector<double> allow(block.size());
      double total = 0;
      for (size_t i = 0; i < block.size(); ++i) {
        allow[i] = static_cast<double>(fin->d[block[i]] +
                                       fin->deg_boundary[block[i]]);
        total += allow[i];
      }
      if (total <= 0) continue;
      for (size_t i = 0; i < block.size(); ++i) {
        if (plus + allow[i] <= total / 2 || plus == 0) {
          b[block[i]] = allow[i];
          plus += allow[i];
        } else {
          b[block[i]] = -allow[i];
          minus += allow[i];
        }
      }
      if (minus <= 0) continue;
      double ratio = plus / minus;
      for (Vertex v : block)
        if (b[v] < 0) b[v] *= ratio;
      demands.push_back(std::move(b));
    }
    if (!demands.empty()) {
      MultiRouteResult mix = route_grafted_demands(*fin, demands);
      next.alpha_witness = std::max(1.0, mix.congestion);
      h.observe_alpha(next.alpha_witness);
    }
  }

  h.levels.push_back(std::move(next));
  h.fam = build_family(g, h.levels);
}

Hierarchy build_hierarchy(const CapGraph& g, HierarchyConfig cfg) {
  cfg.resolve(g.n(), g.max_cap());
  Hierarchy h;
  h.g = &g;
  h.cfg = cfg;

  HierarchyLevel base;
  base.index = 1;
  base.in_vi.assign(g.n(), 1);
  std::vector<std::vector<Vertex>> singles(g.n());
  for (Vertex v = 0; v < g.n(); ++v) singles[v] = {v};
  base.p_bar = VertexPartition(g.n(), singles);
  BoundaryResult bd = boundary(g, base.p_bar);
  base.delta_p_bar = bd.capacity;
  base.deg_p_bar = induced_degrees(g, bd.edges);
  base.deg_v_boundary.assign(g.n(), 0);
  h.levels.push_back(std::move(base));
  h.fam = build_family(g, h.levels);

  while (h.levels.back().delta_p_bar > 0 &&
         h.depth() < h.cfg.max_levels)
    build_next_level(h);
  if (h.levels.back().delta_p_bar > 0)
    throw ContractError("build_hierarchy: level cap reached before the "
                        "boundary vanished");
  return h;
}

}  // namespace wxflow
