#include "wxflow/graph.hpp"

#include <limits>
#include <map>
#include <numeric>

namespace wxflow {

CapGraph::CapGraph(int n, std::vector<CapEdge> edges) : n_(n) {
  if (n < 0) throw InputError("vertex count must be non-negative");
  // Merge parallel edges; all cut values are preserved.
  std::map<std::pair<Vertex, Vertex>, Cap> merged;
  for (const CapEdge& e : edges) {
    if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n)
      throw InputError("edge endpoint out of range");
    if (e.u == e.v) throw InputError("self-loops are not allowed");
    if (e.cap < 1) throw InputError("edge capacity must be at least 1");
    auto key = std::minmax(e.u, e.v);
    merged[{key.first, key.second}] += e.cap;
  }
  edges_.reserve(merged.size());
  adj_.assign(n, {});
  deg_.assign(n, 0);
  for (const auto& [uv, cap] : merged) {
    EdgeId id = static_cast<EdgeId>(edges_.size());
    edges_.push_back({uv.first, uv.second, cap});
    adj_[uv.first].push_back(id);
    adj_[uv.second].push_back(id);
    deg_[uv.first] += cap;
    deg_[uv.second] += cap;
    max_cap_ = std::max(max_cap_, cap);
    total_cap_ += cap;
  }
}

void CapGraph::validate() const {
  std::vector<Cap> deg(n_, 0);
  std::vector<size_t> count(n_, 0);
  for (const CapEdge& e : edges_) {
    if (e.u < 0 || e.u >= n_ || e.v < 0 || e.v >= n_ || e.u == e.v)
      throw InputError("invalid edge in graph");
    if (e.cap < 1 || e.cap > max_cap_)
      throw InputError("edge capacity outside [1, W]");
    deg[e.u] += e.cap;
    deg[e.v] += e.cap;
    ++count[e.u];
    ++count[e.v];
  }
  for (Vertex v = 0; v < n_; ++v) {
    if (deg[v] != deg_[v] || count[v] != adj_[v].size())
      throw InputError("adjacency index inconsistent with edge list");
    for (EdgeId e : adj_[v])
      if (edges_[e].u != v && edges_[e].v != v)
        throw InputError("adjacency index lists a non-incident edge");
  }
}

double net_flow(const CapGraph& g, const FlowAssignment& fa, Vertex v) {
  double s = 0;
  for (EdgeId e : g.incident(v)) {
    if (e >= static_cast<EdgeId>(fa.f.size())) continue;
    s += g.edge(e).v == v ? fa.f[e] : -fa.f[e];
  }
  return s;
}

std::vector<double> net_flows(const CapGraph& g, const FlowAssignment& fa) {
  std::vector<double> out(g.n(), 0.0);
  for (EdgeId e = 0; e < static_cast<EdgeId>(fa.f.size()) && e < g.m(); ++e) {
    out[g.edge(e).v] += fa.f[e];
    out[g.edge(e).u] -= fa.f[e];
  }
  return out;
}

double congestion(const CapGraph& g, const FlowAssignment& fa) {
  double c = 0;
  for (EdgeId e = 0; e < static_cast<EdgeId>(fa.f.size()) && e < g.m(); ++e)
    c = std::max(c, std::abs(fa.f[e]) / static_cast<double>(g.edge(e).cap));
  return c;
}

VertexPartition::VertexPartition(int n,
                                 std::vector<std::vector<Vertex>> blocks)
    : blocks_(std::move(blocks)), block_of_(n, -1) {
  for (int b = 0; b < static_cast<int>(blocks_.size()); ++b) {
    for (Vertex v : blocks_[b]) {
      if (v < 0 || v >= n) throw InputError("partition vertex out of range");
      if (block_of_[v] != -1) throw InputError("partition blocks overlap");
      block_of_[v] = b;
      ++ground_size_;
    }
  }
}

BoundaryResult boundary(const CapGraph& g, const VertexPartition& p,
                        bool include_ground_exit) {
  if (p.n() != g.n()) throw InputError("partition is over a different graph");
  BoundaryResult out;
  for (EdgeId e = 0; e < g.m(); ++e) {
    int bu = p.block_of(g.edge(e).u);
    int bv = p.block_of(g.edge(e).v);
    bool crossing;
    if (bu >= 0 && bv >= 0) {
      crossing = bu != bv;
    } else if (bu >= 0 || bv >= 0) {
      crossing = include_ground_exit;
    } else {
      crossing = false;
    }
    if (crossing) {
      out.edges.push_back(e);
      out.capacity += g.edge(e).cap;
    }
  }
  return out;
}

BoundaryResult cut_of_set(const CapGraph& g, const std::vector<char>& in_s) {
  BoundaryResult out;
  for (EdgeId e = 0; e < g.m(); ++e) {
    if (in_s[g.edge(e).u] != in_s[g.edge(e).v]) {
      out.edges.push_back(e);
      out.capacity += g.edge(e).cap;
    }
  }
  return out;
}

BoundaryResult cut_of_set(const CapGraph& g, const std::vector<Vertex>& s) {
  std::vector<char> in_s(g.n(), 0);
  for (Vertex v : s) {
    if (v < 0 || v >= g.n()) throw InputError("cut vertex out of range");
    in_s[v] = 1;
  }
  return cut_of_set(g, in_s);
}

ConductanceResult conductance(const CapGraph& g, const Weighting& d,
                              const std::vector<Vertex>& s) {
  Cap ds = weight_of(d, s);
  Cap dv = weight_total(d);
  Cap denom = std::min(ds, dv - ds);
  Cap delta = cut_of_set(g, s).capacity;
  if (denom <= 0) return {std::numeric_limits<double>::infinity(), true};
  return {static_cast<double>(delta) / static_cast<double>(denom), false};
}

Cap induced_degree(const CapGraph& g, const std::vector<char>& edge_mask,
                   Vertex v) {
  Cap s = 0;
  for (EdgeId e : g.incident(v))
    if (edge_mask[e]) s += g.edge(e).cap;
  return s;
}

Weighting induced_degrees(const CapGraph& g,
                          const std::vector<char>& edge_mask) {
  Weighting out(g.n(), 0);
  for (EdgeId e = 0; e < g.m(); ++e) {
    if (!edge_mask[e]) continue;
    out[g.edge(e).u] += g.edge(e).cap;
    out[g.edge(e).v] += g.edge(e).cap;
  }
  return out;
}

Weighting induced_degrees(const CapGraph& g,
                          const std::vector<EdgeId>& edge_set) {
  Weighting out(g.n(), 0);
  for (EdgeId e : edge_set) {
    out[g.edge(e).u] += g.edge(e).cap;
    out[g.edge(e).v] += g.edge(e).cap;
  }
  return out;
}

EdgeId FlowNet::add_edge(Vertex u, Vertex v, double cap, EdgeId orig) {
  if (u < 0 || u >= n_ || v < 0 || v >= n_ || u == v)
    throw InputError("bad flow-net edge");
  if (cap < 0) throw InputError("negative capacity");
  EdgeId id = static_cast<EdgeId>(edges_.size());
  edges_.push_back({u, v, cap, orig});
  adj_[u].push_back(id);
  adj_[v].push_back(id);
  max_cap_ = std::max(max_cap_, cap);
  return id;
}

double FlowNet::net_flow(const FlowAssignment& fa, Vertex v) const {
  double s = 0;
  for (EdgeId e : adj_[v]) {
    if (e >= static_cast<EdgeId>(fa.f.size())) continue;
    s += edges_[e].v == v ? fa.f[e] : -fa.f[e];
  }
  return s;
}

std::vector<double> FlowNet::net_flows(const FlowAssignment& fa) const {
  std::vector<double> out(n_, 0.0);
  for (EdgeId e = 0; e < static_cast<EdgeId>(fa.f.size()) && e < m(); ++e) {
    out[edges_[e].v] += fa.f[e];
    out[edges_[e].u] -= fa.f[e];
  }
  return out;
}

double FlowNet::congestion(const FlowAssignment& fa) const {
  double c = 0;
  for (EdgeId e = 0; e < static_cast<EdgeId>(fa.f.size()) && e < m(); ++e) {
    if (edges_[e].cap <= 0) {
      if (std::abs(fa.f[e]) > 0) return std::numeric_limits<double>::infinity();
      continue;
    }
    c = std::max(c, std::abs(fa.f[e]) / edges_[e].cap);
  }
  return c;
}

FlowNet scale_graph(const CapGraph& g, double factor) {
  if (!(factor > 0)) throw InputError("scale factor must be positive");
  FlowNet net(g.n());
  for (EdgeId e = 0; e < g.m(); ++e) {
    double c = static_cast<double>(g.edge(e).cap) * factor;
    if (!std::isfinite(c)) throw InputError("scaled capacity overflow");
    net.add_edge(g.edge(e).u, g.edge(e).v, c, e);
  }
  return net;
}

FlowNet scale_graph_filtered(const CapGraph& g, double factor,
                             const std::vector<char>& keep_edge) {
  if (!(factor > 0)) throw InputError("scale factor must be positive");
  FlowNet net(g.n());
  for (EdgeId e = 0; e < g.m(); ++e) {
    if (!keep_edge[e]) continue;
    double c = static_cast<double>(g.edge(e).cap) * factor;
    if (!std::isfinite(c)) throw InputError("scaled capacity overflow");
    net.add_edge(g.edge(e).u, g.edge(e).v, c, e);
  }
  return net;
}

}  // namespace wxflow
