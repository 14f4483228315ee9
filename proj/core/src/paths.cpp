#include "wxflow/paths.hpp"

#include <algorithm>
#include <cmath>

namespace wxflow {

namespace {

double flow_tol(const FlowAssignment& f) {
  double mx = 1.0;
  for (double x : f.f) mx = std::max(mx, std::abs(x));
  return 1e-11 * mx;
}

// Signed value of w[e] leaving v (positive = flow out of v), 0 if none.
double out_amount(const FlowNet& net, const std::vector<double>& w, EdgeId e,
                  Vertex v) {
  return net.edge(e).u == v ? w[e] : -w[e];
}

void subtract_arc(const FlowNet& net, std::vector<double>& w, EdgeId e,
                  Vertex from, double amt) {
  if (net.edge(e).u == from)
    w[e] -= amt;
  else
    w[e] += amt;
}

// Cancels all flow cycles in place, lowest-index first.
void cancel_cycles(const FlowNet& net, std::vector<double>& w, double tol) {
  const int n = net.n();
  std::vector<int> state(n);       // 0 new, 1 on stack, 2 done
  std::vector<size_t> iter(n);
  std::vector<Vertex> stack;
  std::vector<EdgeId> via;         // edge used to enter stack[i]

  bool again = true;
  while (again) {
    again = false;
    std::fill(state.begin(), state.end(), 0);
    for (Vertex s = 0; s < n && !again; ++s) {
      if (state[s] != 0) continue;
      stack.assign(1, s);
      via.assign(1, -1);
      iter[s] = 0;
      state[s] = 1;
      while (!stack.empty()) {
        Vertex v = stack.back();
        const auto& inc = net.incident(v);
        bool advanced = false;
        for (size_t& i = iter[v]; i < inc.size(); ++i) {
          EdgeId e = inc[i];
          if (out_amount(net, w, e, v) <= tol) continue;
          Vertex u = net.other(e, v);
          if (state[u] == 1) {
            // Cycle found: unwind from u to v along the stack.
            size_t k = stack.size();
            while (k > 0 && stack[k - 1] != u) --k;
            double amt = out_amount(net, w, e, v);
            for (size_t j = k; j < stack.size(); ++j)
              amt = std::min(amt, out_amount(net, w, via[j], stack[j - 1]));
            subtract_arc(net, w, e, v, amt);
            for (size_t j = k; j < stack.size(); ++j)
              subtract_arc(net, w, via[j], stack[j - 1], amt);
            again = true;
            break;
          }
          if (state[u] == 0) {
            state[u] = 1;
            iter[u] = 0;
            stack.push_back(u);
            via.push_back(e);
            advanced = true;
            ++i;
            break;
          }
        }
        if (again) break;
        if (!advanced && iter[v] >= inc.size()) {
          state[v] = 2;
          stack.pop_back();
          via.pop_back();
        }
      }
    }
  }
}

}  // namespace

PathDecomposition path_decompose(const FlowNet& net, const FlowAssignment& f,
                                 const std::vector<double>& sources,
                                 const std::vector<double>& sinks,
                                 RoutingTranscript* transcript) {
  const int n = net.n();
  double tol = flow_tol(f);
  std::vector<double> w(f.f);
  w.resize(net.m(), 0.0);

  // Conservation check at non-terminals before any manipulation.
  std::vector<double> net_out(n, 0.0);
  for (EdgeId e = 0; e < net.m(); ++e) {
    net_out[net.edge(e).u] += w[e];
    net_out[net.edge(e).v] -= w[e];
  }
  double scale = 1.0;
  for (double x : w) scale = std::max(scale, std::abs(x));
  for (Vertex v = 0; v < n; ++v) {
    double src = v < static_cast<int>(sources.size()) ? sources[v] : 0.0;
    double snk = v < static_cast<int>(sinks.size()) ? sinks[v] : 0.0;
    if (net_out[v] > src + 1e-6 * scale || -net_out[v] > snk + 1e-6 * scale)
      throw ContractError("path_decompose: flow not conserved at vertex " +
                          std::to_string(v));
  }

  cancel_cycles(net, w, tol);

  // Recompute excesses after cancellation (they are unchanged in exact
  // arithmetic, but stay bit-honest).
  std::fill(net_out.begin(), net_out.end(), 0.0);
  for (EdgeId e = 0; e < net.m(); ++e) {
    net_out[net.edge(e).u] += w[e];
    net_out[net.edge(e).v] -= w[e];
  }

  PathDecomposition out;
  out.n = n;
  out.m = static_cast<size_t>(net.m());

  for (Vertex s = 0; s < n; ++s) {
    while (net_out[s] > tol) {
      Path p;
      p.verts.push_back(s);
      double amt = net_out[s];
      Vertex v = s;
      while (true) {
        if (net_out[v] < -tol && v != s) break;  // reached a receiver
        EdgeId next = -1;
        for (EdgeId e : net.incident(v)) {
          if (out_amount(net, w, e, v) > tol) {
            next = e;
            break;
          }
        }
        if (next == -1) break;  // no outgoing flow left
        amt = std::min(amt, out_amount(net, w, next, v));
        p.edges.push_back(next);
        v = net.other(next, v);
        p.verts.push_back(v);
      }
      if (p.edges.empty()) break;  // numerical dust at s
      amt = std::min(amt, -net_out[v]);
      if (amt <= tol) {
        // Degenerate sliver; clear the dust and move on.
        net_out[s] = 0;
        break;
      }
      Vertex from = s;
      for (EdgeId e : p.edges) {
        subtract_arc(net, w, e, from, amt);
        from = net.other(e, from);
      }
      net_out[s] -= amt;
      net_out[v] += amt;
      p.weight = amt;
      out.paths.push_back(std::move(p));
    }
  }

  if (transcript)
    transcript->steps.push_back({RoutingTranscript::Step::kDecompose, {}, {}});
  return out;
}

FlowAssignment assemble_paths(const PathDecomposition& d, const FlowNet& net) {
  FlowAssignment fa(net.m());
  for (const Path& p : d.paths) {
    Vertex v = p.start();
    for (EdgeId e : p.edges) {
      if (net.edge(e).u == v)
        fa.f[e] += p.weight;
      else
        fa.f[e] -= p.weight;
      v = net.other(e, v);
    }
  }
  return fa;
}

FlowAssignment rescale_paths(const PathDecomposition& d, const FlowNet& net,
                             const std::map<Vertex, double>& per_terminal,
                             RoutingTranscript* transcript) {
  std::vector<char> seen(d.n, 0);
  for (const Path& p : d.paths) seen[p.start()] = 1;
  for (const auto& [v, s] : per_terminal) {
    if (v < 0 || v >= d.n || !seen[v])
      throw InputError("rescale_paths: vertex " + std::to_string(v) +
                       " is not a start terminal of the decomposition");
    if (s < 0) throw InputError("rescale_paths: negative scale");
  }
  PathDecomposition scaled = d;
  for (Path& p : scaled.paths) {
    auto it = per_terminal.find(p.start());
    if (it != per_terminal.end()) p.weight *= it->second;
  }
  if (transcript)
    transcript->steps.push_back(
        {RoutingTranscript::Step::kRescale, per_terminal, {}});
  return assemble_paths(scaled, net);
}

PathDecomposition truncate_at_boundary(const PathDecomposition& d,
                                       const std::vector<int>& block_of,
                                       RoutingTranscript* transcript) {
  PathDecomposition out;
  out.n = d.n;
  out.m = d.m;
  out.paths.reserve(d.paths.size());
  for (const Path& p : d.paths) {
    int home = block_of.at(p.start());
    size_t keep = 0;  // number of edges kept
    while (keep < p.edges.size() && block_of.at(p.verts[keep + 1]) == home)
      ++keep;
    Path q;
    q.weight = p.weight;
    q.verts.assign(p.verts.begin(), p.verts.begin() + keep + 1);
    q.edges.assign(p.edges.begin(), p.edges.begin() + keep);
    out.paths.push_back(std::move(q));
  }
  if (transcript)
    transcript->steps.push_back(
        {RoutingTranscript::Step::kTruncate, {}, block_of});
  return out;
}

FlowAssignment replay_transcript(const RoutingTranscript& t,
                                 const FlowNet& net, const FlowAssignment& f,
                                 const std::vector<double>& sources,
                                 const std::vector<double>& sinks) {
  PathDecomposition d;
  bool have = false;
  for (const auto& step : t.steps) {
    switch (step.kind) {
      case RoutingTranscript::Step::kDecompose:
        d = path_decompose(net, f, sources, sinks);
        have = true;
        break;
      case RoutingTranscript::Step::kRescale: {
        if (!have) throw InputError("transcript rescale before decompose");
        for (Path& p : d.paths) {
          auto it = step.scales.find(p.start());
          if (it != step.scales.end()) p.weight *= it->second;
        }
        break;
      }
      case RoutingTranscript::Step::kTruncate:
        if (!have) throw InputError("transcript truncate before decompose");
        d = truncate_at_boundary(d, step.block_of);
        break;
    }
  }
  return assemble_paths(d, net);
}

}  // namespace wxflow
