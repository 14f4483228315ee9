#include "wxflow/dinic.hpp"

#include <algorithm>
#include <limits>
#include <queue>

namespace wxflow {

Dinic::Dinic(int n) : n_(n), head_(n), level_(n), iter_(n) {}

int Dinic::add_arc(Vertex u, Vertex v, double cap, double back_cap) {
  int a = static_cast<int>(arcs_.size());
  arcs_.push_back({v, cap, a + 1});
  arcs_.push_back({u, back_cap, a});
  head_[u].push_back(a);
  head_[v].push_back(a + 1);
  orig_cap_.push_back(cap);
  eps_ = std::max(eps_, 1e-12 * std::max(cap, back_cap));
  return a / 2;
}

bool Dinic::bfs(Vertex s, Vertex t) {
  std::fill(level_.begin(), level_.end(), -1);
  std::queue<Vertex> q;
  level_[s] = 0;
  q.push(s);
  while (!q.empty()) {
    Vertex v = q.front();
    q.pop();
    for (int a : head_[v]) {
      if (arcs_[a].cap > eps_ && level_[arcs_[a].to] < 0) {
        level_[arcs_[a].to] = level_[v] + 1;
        q.push(arcs_[a].to);
      }
    }
  }
  return level_[t] >= 0;
}

double Dinic::dfs(Vertex v, Vertex t, double pushed) {
  if (v == t) return pushed;
  for (size_t& i = iter_[v]; i < head_[v].size(); ++i) {
    int a = head_[v][i];
    Arc& arc = arcs_[a];
    if (arc.cap <= eps_ || level_[arc.to] != level_[v] + 1) continue;
    double got = dfs(arc.to, t, std::min(pushed, arc.cap));
    if (got > 0) {
      arc.cap -= got;
      arcs_[arc.rev].cap += got;
      return got;
    }
  }
  return 0.0;
}

double Dinic::solve(Vertex s, Vertex t) {
  double total = 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  while (bfs(s, t)) {
    std::fill(iter_.begin(), iter_.end(), 0);
    while (true) {
      double got = dfs(s, t, inf);
      if (got <= 0) break;
      total += got;
    }
  }
  return total;
}

double Dinic::arc_flow(int a) const { return orig_cap_[a] - arcs_[2 * a].cap; }

std::vector<char> Dinic::min_cut_side(Vertex s) const {
  std::vector<char> side(n_, 0);
  std::queue<Vertex> q;
  side[s] = 1;
  q.push(s);
  while (!q.empty()) {
    Vertex v = q.front();
    q.pop();
    for (int a : head_[v]) {
      if (arcs_[a].cap > eps_ && !side[arcs_[a].to]) {
        side[arcs_[a].to] = 1;
        q.push(arcs_[a].to);
      }
    }
  }
  return side;
}

void FlowProblem::net_terminals() {
  for (size_t v = 0; v < source.size(); ++v) {
    double both = std::min(source[v], sink[v]);
    if (both > 0) {
      source[v] -= both;
      sink[v] -= both;
    }
  }
}

MaxFlowResult exact_max_flow(const FlowProblem& prob, double source_limit) {
  const FlowNet& net = *prob.net;
  const int n = net.n();
  // Vertices 0..n-1, super source n, super sink n+1, optional limiter n+2.
  bool limited = source_limit >= 0.0;
  int s = n, t = n + 1;
  int inject = limited ? n + 2 : s;
  Dinic din(n + (limited ? 3 : 2));
  if (limited) din.add_arc(s, inject, source_limit);

  std::vector<int> src_arc(n, -1), snk_arc(n, -1);
  for (Vertex v = 0; v < n; ++v) {
    if (v < static_cast<int>(prob.source.size()) && prob.source[v] > 0)
      src_arc[v] = din.add_arc(inject, v, prob.source[v]);
    if (v < static_cast<int>(prob.sink.size()) && prob.sink[v] > 0)
      snk_arc[v] = din.add_arc(v, t, prob.sink[v]);
  }
  std::vector<int> edge_arc(net.m(), -1);
  for (EdgeId e = 0; e < net.m(); ++e) {
    const FlowNet::Edge& ed = net.edge(e);
    if (ed.cap <= 0) continue;
    // Undirected edge: both directions available, one shared flow value.
    edge_arc[e] = din.add_arc(ed.u, ed.v, ed.cap, ed.cap);
  }

  MaxFlowResult res;
  res.value = din.solve(s, t);
  res.flow.f.assign(net.m(), 0.0);
  for (EdgeId e = 0; e < net.m(); ++e)
    if (edge_arc[e] >= 0) res.flow.f[e] = din.arc_flow(edge_arc[e]);
  res.routed_source.assign(n, 0.0);
  res.absorbed_sink.assign(n, 0.0);
  for (Vertex v = 0; v < n; ++v) {
    if (src_arc[v] >= 0) res.routed_source[v] = din.arc_flow(src_arc[v]);
    if (snk_arc[v] >= 0) res.absorbed_sink[v] = din.arc_flow(snk_arc[v]);
  }
  std::vector<char> side = din.min_cut_side(s);
  res.mincut_side.assign(n, 0);
  for (Vertex v = 0; v < n; ++v) res.mincut_side[v] = side[v];
  return res;
}

}  // namespace wxflow
