#include "wxflow/grafting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wxflow {

GraftingInstance build_grafting_instance(const CapGraph& g,
                                         const VertexPartition& a_t,
                                         const Weighting& d,
                                         const Weighting& d_t, double psi,
                                         double eps2) {
  if (!(psi > 0)) throw InputError("psi must be positive");
  GraftingInstance inst;
  inst.g = &g;
  inst.psi = psi;
  inst.eps2 = eps2;
  inst.d = d;
  inst.d_t = d_t;

  BoundaryResult bd = boundary(g, a_t);
  inst.deg_boundary = induced_degrees(g, bd.edges);
  std::vector<char> cut_edge = edge_mask_of(g, bd.edges);
  std::vector<char> keep(g.m(), 1);
  for (EdgeId e = 0; e < g.m(); ++e) keep[e] = !cut_edge[e];
  inst.net = scale_graph_filtered(g, 1.0 / psi, keep);

  inst.plus_block_of.assign(g.n(), -1);
  for (const auto& block : a_t.blocks()) {
    Cap dt_block = weight_of(d_t, block);
    if (dt_block <= 0) continue;
    int id = static_cast<int>(inst.plus_blocks.size());
    for (Vertex v : block) inst.plus_block_of[v] = id;
    Cap deg_block = weight_of(inst.deg_boundary, block);
    inst.eligible.push_back(8 * deg_block <= dt_block);
    inst.plus_blocks.push_back(block);
  }

  inst.delta_gross.assign(g.n(), 0.0);
  inst.nabla_gross.assign(g.n(), 0.0);
  inst.source.assign(g.n(), 0.0);
  inst.sink.assign(g.n(), 0.0);
  for (Vertex v = 0; v < g.n(); ++v) {
    if (inst.plus_block_of[v] < 0) continue;
    inst.delta_gross[v] = static_cast<double>(inst.deg_boundary[v]) +
                          static_cast<double>(d[v] - d_t[v]);
    if (d_t[v] == d[v] && d[v] > 0)
      inst.nabla_gross[v] = static_cast<double>(d[v]) / 5.0;
    double net = inst.delta_gross[v] - inst.nabla_gross[v];
    if (net > 0)
      inst.source[v] = net;
    else
      inst.sink[v] = -net;
  }
  return inst;
}

Oracle2Result exact_grafting_oracle(const GraftingInstance& inst) {
  const CapGraph& g = *inst.g;
  // Ineligible blocks are discarded wholesale; give them no terminals.
  std::vector<double> src = inst.source, snk = inst.sink;
  for (Vertex v = 0; v < g.n(); ++v) {
    int b = inst.plus_block_of[v];
    if (b < 0 || !inst.eligible[b]) src[v] = snk[v] = 0.0;
  }
  FlowProblem prob;
  prob.net = &inst.net;
  prob.source = src;
  prob.sink = snk;
  MaxFlowResult mf = exact_max_flow(prob);

  Oracle2Result res;
  res.flow = mf.flow;
  res.routed_source = mf.routed_source;
  res.absorbed_sink = mf.absorbed_sink;
  res.paths = path_decompose(inst.net, mf.flow, src, snk);
  for (Path& p : res.paths.paths)
    for (EdgeId& e : p.edges) e = inst.net.edge(e).orig;
  res.paths.m = static_cast<size_t>(g.m());

  for (int b = 0; b < static_cast<int>(inst.plus_blocks.size()); ++b) {
    Oracle2Result::PerBlock pb;
    pb.block_id = b;
    pb.eligible = inst.eligible[b] != 0;
    if (!pb.eligible) {
      res.blocks.push_back(std::move(pb));
      continue;
    }
    const auto& verts = inst.plus_blocks[b];
    double src_total = 0, routed_total = 0;
    for (Vertex v : verts) {
      src_total += src[v];
      routed_total += mf.routed_source[v];
    }
    bool full = routed_total >= src_total * (1 - 1e-12) - 1e-12;
    std::vector<char> in_cut(g.n(), 0);
    if (!full) {
      for (Vertex v : verts)
        if (mf.mincut_side[v]) {
          in_cut[v] = 1;
          pb.cut.push_back(v);
        }
    }
    // Certificates: per-source routed fraction outside the cut and
    // per-cut-edge saturation, both 1 for the exact backend.
    for (Vertex v : verts) {
      if (in_cut[v] || src[v] <= 0) continue;
      pb.min_routed_frac =
          std::min(pb.min_routed_frac, mf.routed_source[v] / src[v]);
    }
    for (EdgeId e = 0; e < inst.net.m(); ++e) {
      const FlowNet::Edge& ed = inst.net.edge(e);
      if (inst.plus_block_of[ed.u] != b || inst.plus_block_of[ed.v] != b)
        continue;
      if (in_cut[ed.u] == in_cut[ed.v]) continue;
      pb.cut_cap += g.edge(ed.orig).cap;
      double into_rest = in_cut[ed.u] ? mf.flow.f[e] : -mf.flow.f[e];
      pb.min_sat_frac = std::min(pb.min_sat_frac, into_rest / ed.cap);
    }
    res.blocks.push_back(std::move(pb));
  }
  return res;
}

FinalDecomposition finalize(const CapGraph& g, const DecompositionResult& dec,
                            const Weighting& d, double psi, double eps2,
                            const GraftingOracleFn& oracle) {
  if (eps2 > 0.1)
    throw InputError("grafting oracle slack eps2 must be at most 1/10");
  FinalDecomposition fin;
  fin.g = &g;
  fin.d = d;
  fin.d_t = dec.d_final;
  fin.transcript = dec.transcript;
  fin.instance =
      build_grafting_instance(g, dec.partition, d, dec.d_final, psi, eps2);
  fin.deg_boundary_t = fin.instance.deg_boundary;
  fin.cut_capacity_t = boundary(g, dec.partition).capacity;
  fin.oracle = oracle(fin.instance);

  // Validate the oracle contract clause by clause.
  double slack = eps2 + 1e-9;
  for (const auto& pb : fin.oracle.blocks) {
    if (!pb.eligible) continue;
    if (pb.min_routed_frac < 1.0 - slack)
      throw ContractError(
          "Oracle 2 clause 1a violated: some source routed less than "
          "(1 - eps2) Delta(u)");
    if (pb.min_sat_frac < 1.0 - slack)
      throw ContractError(
          "Oracle 2 clause 1b violated: cut edge saturated below 1 - eps2");
  }

  // Assemble the final partition with provenance.
  std::vector<std::vector<Vertex>> blocks;
  const auto& at_blocks = dec.partition.blocks();
  std::vector<const Oracle2Result::PerBlock*> rec(
      fin.instance.plus_blocks.size(), nullptr);
  for (const auto& pb : fin.oracle.blocks) rec[pb.block_id] = &pb;

  for (int bi = 0; bi < static_cast<int>(at_blocks.size()); ++bi) {
    const auto& block = at_blocks[bi];
    if (block.empty()) continue;
    int plus = fin.instance.plus_block_of[block.front()];
    if (plus < 0 || !fin.instance.eligible[plus]) {
      blocks.push_back(block);
      fin.certified.push_back(false);
      fin.from_block.push_back(bi);
      continue;
    }
    const auto* pb = rec[plus];
    std::vector<char> in_cut(g.n(), 0);
    if (pb)
      for (Vertex v : pb->cut) in_cut[v] = 1;
    std::vector<Vertex> cut_part, rest;
    for (Vertex v : block) (in_cut[v] ? cut_part : rest).push_back(v);
    if (!rest.empty()) {
      blocks.push_back(rest);
      fin.certified.push_back(true);
      fin.from_block.push_back(bi);
    }
    if (!cut_part.empty()) {
      blocks.push_back(cut_part);
      fin.certified.push_back(false);
      fin.from_block.push_back(bi);
    }
  }
  fin.clusters = VertexPartition(g.n(), blocks);
  fin.cluster_of = fin.clusters.block_map();

  BoundaryResult bd = boundary(g, fin.clusters);
  fin.cut_capacity = bd.capacity;
  fin.deg_boundary = induced_degrees(g, bd.edges);
  for (int c = 0; c < fin.clusters.num_blocks(); ++c)
    if (!fin.certified[c])
      fin.discarded_mass += weight_of(d, fin.clusters.block(c));
  fin.deleted_mass = weight_total(d) - weight_total(fin.d_t);
  return fin;
}

namespace {

// Paths grouped by start vertex, and cut-crossing suffixes grouped by
// the vertex where they first enter a certified cluster.
struct PathIndex {
  std::vector<std::vector<int>> by_start;
  std::vector<double> start_weight;  // f(u)
  std::vector<std::vector<std::pair<int, int>>> suffix_at;  // (path, pos)
  std::vector<double> suffix_weight;
};

PathIndex index_paths(const FinalDecomposition& fin) {
  const CapGraph& g = *fin.g;
  PathIndex idx;
  idx.by_start.assign(g.n(), {});
  idx.start_weight.assign(g.n(), 0.0);
  idx.suffix_at.assign(g.n(), {});
  idx.suffix_weight.assign(g.n(), 0.0);
  const auto& paths = fin.oracle.paths.paths;
  for (int pi = 0; pi < static_cast<int>(paths.size()); ++pi) {
    const Path& p = paths[pi];
    idx.by_start[p.start()].push_back(pi);
    idx.start_weight[p.start()] += p.weight;
    int home = fin.cluster_of[p.start()];
    if (home >= 0 && fin.certified[home]) continue;  // never leaves home
    for (size_t k = 1; k < p.verts.size(); ++k) {
      int c = fin.cluster_of[p.verts[k]];
      if (c >= 0 && fin.certified[c]) {
        idx.suffix_at[p.verts[k]].push_back({pi, static_cast<int>(k)});
        idx.suffix_weight[p.verts[k]] += p.weight;
        break;
      }
    }
  }
  return idx;
}

void add_path_suffix(const CapGraph& g, const Path& p, size_t from_pos,
                     double scale, FlowAssignment* flow) {
  Vertex v = p.verts[from_pos];
  for (size_t k = from_pos; k < p.edges.size(); ++k) {
    EdgeId e = p.edges[k];
    flow->f[e] += g.edge(e).u == v ? scale * p.weight : -scale * p.weight;
    v = g.other(e, v);
  }
}

}  // namespace

MultiRouteResult route_grafted_demands(const FinalDecomposition& fin,
                                       const std::vector<Demand>& demands) {
  const CapGraph& g = *fin.g;
  const Weighting& d = fin.d;

  std::vector<double> allow(g.n(), 0.0);
  for (Vertex v = 0; v < g.n(); ++v)
    allow[v] = static_cast<double>(d[v] + fin.deg_boundary[v]);

  for (const Demand& b : demands) {
    if (static_cast<int>(b.size()) != g.n())
      throw InputError("demand size mismatch");
    int home = -1;
    double total = 0;
    for (Vertex v = 0; v < g.n(); ++v) {
      if (b[v] == 0) continue;
      if (std::abs(b[v]) > allow[v] * (1 + kRelTol))
        throw ContractError("demand does not respect (d + deg_boundary)|_A");
      int c = fin.cluster_of[v];
      if (c < 0 || !fin.certified[c])
        throw ContractError("demand touches a discarded cluster");
      if (home == -1) home = c;
      if (c != home) throw ContractError("demand spans multiple clusters");
      total += b[v];
    }
    if (std::abs(total) > kRelTol * (sum_abs(b) + 1))
      throw ContractError("demand does not sum to zero");
  }

  PathIndex idx = index_paths(fin);
  const auto& paths = fin.oracle.paths.paths;

  MultiRouteResult out;
  std::vector<double> usage(g.m(), 0.0);
  std::vector<Demand> residuals;
  residuals.reserve(demands.size());
  std::vector<FlowAssignment> partial;
  partial.reserve(demands.size());

  for (const Demand& b : demands) {
    Demand res = b;
    FlowAssignment flow(g.m());
    // Phase 1: discharge along own grafting paths into sinks.
    for (Vertex u = 0; u < g.n(); ++u) {
      if (res[u] == 0 || idx.start_weight[u] <= 0) continue;
      double amount =
          std::clamp(res[u], -idx.start_weight[u], idx.start_weight[u]);
      double scale = amount / idx.start_weight[u];
      for (int pi : idx.by_start[u]) {
        const Path& p = paths[pi];
        add_path_suffix(g, p, 0, scale, &flow);
        res[u] -= scale * p.weight;
        res[p.end()] += scale * p.weight;
      }
    }
    // Phase 2: new boundary demand rides cut-crossing path suffixes.
    for (Vertex u = 0; u < g.n(); ++u) {
      if (res[u] == 0 || idx.suffix_weight[u] <= 0) continue;
      double amount =
          std::clamp(res[u], -idx.suffix_weight[u], idx.suffix_weight[u]);
      double scale = amount / idx.suffix_weight[u];
      for (auto [pi, pos] : idx.suffix_at[u]) {
        const Path& p = paths[pi];
        add_path_suffix(g, p, static_cast<size_t>(pos), scale, &flow);
        res[u] -= scale * p.weight;
        res[p.end()] += scale * p.weight;
      }
    }
    residuals.push_back(std::move(res));
    partial.push_back(std::move(flow));
  }

  // Phase 3: residuals are mixed by the recorded matchings.  After the
  // discharge phases they sit within 6/5 of d_T on kept vertices.
  MultiRouteResult mix =
      route_respecting_demands(g, *fin.transcript, residuals,
                               /*exact_topup=*/true, /*respect_scale=*/2.0);

  for (size_t i = 0; i < demands.size(); ++i) {
    partial[i].add(mix.flows[i]);
    for (EdgeId e = 0; e < g.m(); ++e) usage[e] += std::abs(partial[i].f[e]);
    out.conservation_error.push_back(mix.conservation_error[i]);
    out.flows.push_back(std::move(partial[i]));
  }
  out.topup_used = mix.topup_used;
  double cong = 0;
  for (EdgeId e = 0; e < g.m(); ++e)
    cong = std::max(cong, usage[e] / static_cast<double>(g.edge(e).cap));
  out.congestion = cong;
  return out;
}

BoundaryRoutingResult boundary_source_routing(const FinalDecomposition& fin) {
  const CapGraph& g = *fin.g;
  BoundaryRoutingResult out;
  out.flow = FlowAssignment(g.m());
  out.paths.n = g.n();
  out.paths.m = static_cast<size_t>(g.m());
  out.sent.assign(g.n(), 0.0);
  out.received.assign(g.n(), 0.0);

  PathIndex idx = index_paths(fin);
  const auto& paths = fin.oracle.paths.paths;
  Demand sink_in(g.n(), 0.0);

  auto emit = [&](const Path& p, size_t pos, double scale) {
    add_path_suffix(g, p, pos, scale, &out.flow);
    sink_in[p.end()] += scale * p.weight;
    Path q;
    q.weight = scale * p.weight;
    q.verts.assign(p.verts.begin() + pos, p.verts.end());
    q.edges.assign(p.edges.begin() + pos, p.edges.end());
    out.paths.paths.push_back(std::move(q));
  };

  for (Vertex u = 0; u < g.n(); ++u) {
    int c = fin.cluster_of[u];
    if (c < 0 || !fin.certified[c]) continue;
    double y = static_cast<double>(fin.deg_boundary[u]);
    if (y <= 0) continue;
    out.sent[u] = y;
    // Self-absorption: only the part of the sink the netted flow did not
    // already claim is available here.
    double self_cap =
        std::min(fin.instance.delta_gross[u], fin.instance.nabla_gross[u]);
    double self = std::min(y, self_cap);
    if (self > 0) {
      out.received[u] += self;
      Path q;
      q.weight = self;
      q.verts = {u};
      out.paths.paths.push_back(std::move(q));
      y -= self;
    }
    if (y > 0 && idx.start_weight[u] > 0) {
      double amount = std::min(y, idx.start_weight[u]);
      double scale = amount / idx.start_weight[u];
      for (int pi : idx.by_start[u]) emit(paths[pi], 0, scale);
      y -= amount;
    }
    if (y > 0 && idx.suffix_weight[u] > 0) {
      double amount = std::min(y, idx.suffix_weight[u]);
      double scale = amount / idx.suffix_weight[u];
      for (auto [pi, pos] : idx.suffix_at[u])
        emit(paths[pi], static_cast<size_t>(pos), scale);
      y -= amount;
    }
    if (y > 1e-6 * (1 + static_cast<double>(fin.deg_boundary[u])))
      throw ContractError(
          "boundary_source_routing: not enough grafting capacity at vertex " +
          std::to_string(u));
  }
  for (Vertex v = 0; v < g.n(); ++v) out.received[v] += sink_in[v];
  out.congestion = congestion(g, out.flow);
  return out;
}

}  // namespace wxflow
