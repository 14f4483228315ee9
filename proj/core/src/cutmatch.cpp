#include "wxflow/cutmatch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace wxflow {

void CutMatchingConfig::resolve(int n, Cap w) {
  double l2n = std::max(1.0, log2d(std::max(2, n)));
  double l2nw = std::max(1.0, log2d(std::max<double>(2.0, double(n) * double(w))));
  if (x_max <= 0)
    x_max = strict_paper ? 1e5 * c_conc * l2n * l2nw : 8.0 * l2n * l2nw;
  if (rounds <= 0)
    rounds = strict_paper ? static_cast<int>(20 * x_max)
                          : static_cast<int>(std::ceil(10.0 * l2n * l2nw));
}

CutMatchingState::CutMatchingState(const CapGraph& graph, Weighting weighting,
                                   CutMatchingConfig config)
    : g(&graph), cfg(config), d(std::move(weighting)), rng(config.seed) {
  if (static_cast<int>(d.size()) != graph.n())
    throw InputError("weighting size mismatch");
  for (Cap x : d)
    if (x < 0) throw InputError("negative vertex weight");
  cfg.resolve(graph.n(), std::max<Cap>(1, graph.max_cap()));
  d_cur = d;
  Comp all;
  all.verts.resize(graph.n());
  std::iota(all.verts.begin(), all.verts.end(), 0);
  int support = 0;
  for (Cap x : d)
    if (x > 0) ++support;
  all.active = support >= 2;
  comps.push_back(std::move(all));
  comp_of.assign(graph.n(), 0);
  transcript.cfg = cfg;
  transcript.d = d;
  if (cfg.potential_mode) {
    if (graph.n() > 512)
      throw SizeError("potential_mode materializes F; n <= 512 required");
    f_explicit.assign(graph.n(), std::vector<double>(graph.n(), 0.0));
    for (Vertex v = 0; v < graph.n(); ++v)
      f_explicit[v][v] = static_cast<double>(d[v]);
  }
}

Cap CutMatchingState::d_active() const {
  Cap s = 0;
  for (const Comp& c : comps)
    if (c.active) s += weight_of(d_cur, c.verts);
  return s;
}

std::vector<int> CutMatchingState::active_ids() const {
  std::vector<int> ids;
  for (int i = 0; i < static_cast<int>(comps.size()); ++i)
    if (comps[i].active) ids.push_back(i);
  return ids;
}

std::vector<Vertex> CutMatchingState::support(int comp_id) const {
  std::vector<Vertex> s;
  for (Vertex v : comps[comp_id].verts)
    if (d_cur[v] > 0) s.push_back(v);
  return s;
}

std::vector<double> random_unit_vector(int n, Rng& rng) {
  std::vector<double> r(n);
  double norm2 = 0;
  for (double& x : r) {
    x = rng.next_gaussian();
    norm2 += x * x;
  }
  if (norm2 <= 0) {
    r.assign(n, 0.0);
    if (n > 0) r[0] = 1.0;
    return r;
  }
  double inv = 1.0 / std::sqrt(norm2);
  for (double& x : r) x *= inv;
  return r;
}

std::vector<double> compute_projections(const CutMatchingState& state,
                                        const std::vector<double>& r) {
  const int n = state.g->n();
  const Weighting& d = state.d;
  // g0(u) = <F_0(u), r> = d(u) r(u); run the matchings forward.
  std::vector<double> gv(n, 0.0);
  for (Vertex v = 0; v < n; ++v) gv[v] = static_cast<double>(d[v]) * r[v];
  std::vector<double> delta(n, 0.0);
  for (const RoundRecord& round : state.transcript.rounds) {
    std::fill(delta.begin(), delta.end(), 0.0);
    for (const RoundRecord::Entry& e : round.matching) {
      double au = gv[e.u] / (2.0 * static_cast<double>(d[e.u]));
      double av = gv[e.v] / (2.0 * static_cast<double>(d[e.v]));
      delta[e.u] += e.w * (av - au);
      delta[e.v] += e.w * (au - av);
    }
    for (Vertex v = 0; v < n; ++v) gv[v] += delta[v];
  }
  std::vector<double> p(n, 0.0);
  for (Vertex v = 0; v < n; ++v)
    if (d[v] > 0) p[v] = gv[v] / static_cast<double>(d[v]);
  return p;
}

namespace {

struct Item {
  double p;
  Cap w;
  Vertex v;
};

// Prefix length reaching cumulative weight k, straddler included; with
// trim, the straddler stays out (unless it is the first item).
int block_len(const std::vector<Item>& order, Cap k, bool trim) {
  Cap cum = 0;
  int j = 0;
  for (; j < static_cast<int>(order.size()); ++j) {
    if (cum >= k) break;
    if (trim && cum + order[j].w > k && cum > 0) break;
    cum += order[j].w;
  }
  return std::min<int>(j, static_cast<int>(order.size()) - 1);
}

}  // namespace

CutStep cut_step(const CutMatchingState& state, const std::vector<double>& p,
                 int comp_id) {
  const Weighting& dc = state.d_cur;
  std::vector<Vertex> supp = state.support(comp_id);
  if (supp.size() < 2)
    throw ContractError("cut_step requires |supp(d_{t-1}|_A)| >= 2");

  std::vector<Item> items;
  items.reserve(supp.size());
  Cap total = 0;
  for (Vertex v : supp) {
    items.push_back({p[v], dc[v], v});
    total += dc[v];
  }
  const Cap k = ceil_div(total, 8);

  double mean = 0;
  for (const Item& it : items) mean += static_cast<double>(it.w) * it.p;
  mean /= static_cast<double>(total);
  double tv = 0, hvar = 0, lvar = 0;
  for (const Item& it : items) {
    double t = static_cast<double>(it.w) * (it.p - mean) * (it.p - mean);
    tv += t;
    (it.p >= mean ? hvar : lvar) += t;
  }

  std::vector<Item> asc(items), desc(items);
  std::sort(asc.begin(), asc.end(), [](const Item& a, const Item& b) {
    return a.p != b.p ? a.p < b.p : a.v < b.v;
  });
  std::sort(desc.begin(), desc.end(), [](const Item& a, const Item& b) {
    return a.p != b.p ? a.p > b.p : a.v < b.v;
  });

  CutStep out;
  out.comp_id = comp_id;

  auto finish = [&](const std::vector<Item>& order, int len, bool high) {
    out.left.clear();
    out.right.clear();
    for (int i = 0; i < static_cast<int>(order.size()); ++i)
      (i < len ? out.left : out.right).push_back(order[i].v);
    // L is a prefix of order, so the nearest R-side value sits right after.
    out.eta = order[len].p;
    out.left_is_high = high;
    std::sort(out.left.begin(), out.left.end());
    std::sort(out.right.begin(), out.right.end());
  };

  // Orientation, as in the two-case threshold analysis.  Exactly equal
  // projections sort by vertex id, so the low side is the lowest-id
  // ceil(d/8) weight and the first candidate below certifies trivially.
  auto reaches_mean = [&](bool high) {
    const std::vector<Item>& order = high ? desc : asc;
    int len = block_len(order, k, false);
    if (len <= 0 || len >= static_cast<int>(order.size())) return false;
    double eta = order[len].p;
    return high ? eta <= mean : eta >= mean;
  };
  bool first_high;
  if (std::abs(hvar - lvar) <= 1e-12 * tv) {
    first_high = false;
  } else if (reaches_mean(true)) {
    first_high = hvar >= tv / 36;
  } else if (reaches_mean(false)) {
    first_high = !(lvar >= tv / 36);
  } else {
    first_high = hvar > lvar;
  }

  // Greedy certificate test against the progress-set conditions.
  auto certified = [&](const std::vector<Item>& order, int len) {
    if (len <= 0 || len >= static_cast<int>(order.size())) return false;
    double eta = order[len].p;
    double cert_var = 0;
    for (int i = 0; i < len; ++i) {
      double dv = (order[i].p - mean) * (order[i].p - mean);
      double de = (order[i].p - eta) * (order[i].p - eta);
      if (de + 1e-12 * std::max(1.0, dv) >= dv / 9)
        cert_var += static_cast<double>(order[i].w) * dv;
    }
    return cert_var + 1e-12 * tv >= tv / 36;
  };

  // Candidate prefixes: the ceil(d/8) block (trimmed and straddled),
  // then longer thresholds up to half the weight.  When projection
  // values collapse into clusters, the threshold must pass the whole
  // near-tied cluster before the certificate can hold, so the smallest
  // certified prefix is taken.
  int fb_len = -1;
  bool fb_high = false;
  for (bool high : {first_high, !first_high}) {
    const std::vector<Item>& order = high ? desc : asc;
    int lo = block_len(order, k, true);
    int at = block_len(order, k, false);
    if (fb_len < 0) {
      fb_len = at;
      fb_high = high;
    }
    if (lo > 0 && lo != at && certified(order, lo)) {
      finish(order, lo, high);
      return out;
    }
    Cap cum = 0;
    for (int i = 0; i < at; ++i) cum += order[i].w;
    for (int len = at; len < static_cast<int>(order.size()); ++len) {
      if (len > at) cum += order[len - 1].w;
      if (2 * cum > total && len > at) break;  // keep R at least half
      if (certified(order, len)) {
        finish(order, len, high);
        return out;
      }
    }
  }
  // No certified candidate (degenerate numerics): deterministic fallback.
  finish(first_high ? desc : asc, fb_len, fb_high);
  return out;
}

MatchingInstance build_matching_instance(const CutMatchingState& state,
                                         std::vector<CutStep> steps) {
  const CapGraph& g = *state.g;
  MatchingInstance inst;
  inst.phi = state.cfg.phi;
  inst.d_total = weight_total(state.d);
  inst.comp_of = state.comp_of;
  std::vector<char> keep(g.m(), 0);
  for (EdgeId e = 0; e < g.m(); ++e)
    keep[e] = state.comp_of[g.edge(e).u] == state.comp_of[g.edge(e).v];
  inst.net = scale_graph_filtered(g, 2.0 / state.cfg.phi, keep);
  inst.source.assign(g.n(), 0.0);
  inst.sink.assign(g.n(), 0.0);
  for (const CutStep& cs : steps) {
    for (Vertex v : cs.left)
      inst.source[v] = static_cast<double>(state.d_cur[v]);
    for (Vertex v : cs.right)
      inst.sink[v] = static_cast<double>(state.d_cur[v]);
    inst.active_comps.push_back(cs.comp_id);
  }
  inst.cut_steps = std::move(steps);
  return inst;
}

Oracle1Result exact_matching_oracle(const MatchingInstance& inst,
                                    const CutMatchingState& state) {
  const CapGraph& g = *state.g;
  FlowProblem prob;
  prob.net = &inst.net;
  prob.source = inst.source;
  prob.sink = inst.sink;
  MaxFlowResult mf = exact_max_flow(prob);

  // Component-local path decomposition, expressed on G edge ids.
  PathDecomposition all_paths =
      path_decompose(inst.net, mf.flow, prob.source, prob.sink);
  for (Path& p : all_paths.paths)
    for (EdgeId& e : p.edges) e = inst.net.edge(e).orig;
  all_paths.m = static_cast<size_t>(g.m());

  Oracle1Result res;
  for (const CutStep& cs : inst.cut_steps) {
    Oracle1Result::PerComp pc;
    pc.comp_id = cs.comp_id;
    pc.left = cs.left;
    const std::vector<Vertex>& verts = state.comps[cs.comp_id].verts;
    double src_total = 0, routed_total = 0;
    for (Vertex v : verts) {
      src_total += inst.source[v];
      routed_total += mf.routed_source[v];
    }
    bool full = routed_total >= src_total * (1 - 1e-12) - 1e-12;
    if (!full) {
      std::vector<char> in_cut(g.n(), 0);
      Cap d_cut = 0, d_comp = 0;
      for (Vertex v : verts) {
        d_comp += state.d_cur[v];
        if (mf.mincut_side[v]) {
          in_cut[v] = 1;
          d_cut += state.d_cur[v];
        }
      }
      if (2 * d_cut > d_comp) {
        // Use the sink side instead so the split stays balanced; the
        // oracle contract no longer holds, so the component is uncovered.
        for (Vertex v : verts) in_cut[v] ^= 1;
        pc.covered = false;
      } else {
        pc.covered = true;
      }
      for (Vertex v : verts)
        if (in_cut[v]) pc.cut.push_back(v);
      for (EdgeId e = 0; e < g.m(); ++e) {
        Vertex u = g.edge(e).u, v = g.edge(e).v;
        if (state.comp_of[u] == cs.comp_id && state.comp_of[v] == cs.comp_id &&
            in_cut[u] != in_cut[v])
          pc.cut_cap += static_cast<double>(g.edge(e).cap);
      }
      for (Vertex v : verts) {
        if (in_cut[v]) continue;
        pc.delta_target += inst.source[v];
        pc.routed += mf.routed_source[v];
      }
    } else {
      pc.covered = true;
      pc.delta_target = src_total;
      pc.routed = routed_total;
    }
    // Keep only this component's paths.
    pc.flow_paths.n = g.n();
    pc.flow_paths.m = static_cast<size_t>(g.m());
    for (const Path& p : all_paths.paths)
      if (state.comp_of[p.start()] == cs.comp_id)
        pc.flow_paths.paths.push_back(p);
    res.comps.push_back(std::move(pc));
  }
  return res;
}

void apply_round(CutMatchingState& state, const Oracle1Result& result) {
  const CapGraph& g = *state.g;
  const Weighting& d = state.d;
  const double x_max = state.cfg.x_max;

  RoundRecord rec;
  rec.round = state.t + 1;
  rec.active_weight = state.d_active();

  // Aggregate the matching and validate the covered components.
  std::map<std::pair<Vertex, Vertex>, double> entries;
  std::vector<double> m_row(g.n(), 0.0);  // M_t(u)
  for (const auto& pc : result.comps) {
    if (!state.comps[pc.comp_id].active)
      throw ContractError("oracle touched an inactive component");
    for (const Path& p : pc.flow_paths.paths) {
      if (p.weight <= 0) continue;
      Vertex a = p.start(), b = p.end();
      entries[{std::min(a, b), std::max(a, b)}] += p.weight;
      m_row[a] += p.weight;
      m_row[b] += p.weight;
      rec.match_paths.paths.push_back(p);
    }
    Cap d_comp = weight_of(state.d_cur, state.comps[pc.comp_id].verts);
    Cap d_cut = weight_of(state.d_cur, pc.cut);
    if (pc.covered) {
      if (2 * d_cut > d_comp)
        throw ContractError(
            "Oracle 1 clause 1 violated: d_{t-1}(C_A) > d_{t-1}(A)/2");
      double slack = 2.0 * state.cfg.eps1 * static_cast<double>(weight_of(d, state.comps[pc.comp_id].verts));
      if (pc.routed + slack + 1e-6 * std::max(1.0, pc.delta_target) <
          pc.delta_target)
        throw ContractError(
            "Oracle 1 clause 2 violated: routed source below "
            "Delta(A \\ C_A) - 2 eps1 d(A)");
      rec.covered_weight += d_comp;
    }
    RoundRecord::CompCert cert;
    cert.comp_id = pc.comp_id;
    cert.covered = pc.covered;
    cert.cut = pc.cut;
    cert.cut_cap = pc.cut_cap;
    cert.routed = pc.routed;
    cert.delta_target = pc.delta_target;
    cert.d_cut = d_cut;
    cert.d_comp = d_comp;
    rec.certs.push_back(std::move(cert));
  }
  rec.match_paths.n = g.n();
  rec.match_paths.m = static_cast<size_t>(g.m());
  for (const auto& [uv, w] : entries)
    rec.matching.push_back({uv.first, uv.second, w});

  // M_t(u) <= d(u) must hold for every u.
  for (Vertex v = 0; v < g.n(); ++v)
    if (m_row[v] > static_cast<double>(d[v]) * (1 + 1e-9) + 1e-9)
      throw ContractError("matching row sum exceeds d(u)");

  // Deletion rule: under-matched sources in L_A cap (A \ C_A), covered A.
  for (const auto& pc : result.comps) {
    if (!pc.covered) continue;
    std::vector<char> in_cut(g.n(), 0);
    for (Vertex v : pc.cut) in_cut[v] = 1;
    for (Vertex u : pc.left) {
      if (in_cut[u]) continue;
      if (m_row[u] < static_cast<double>(d[u]) / 2 * (1 - 1e-12))
        state.d_cur[u] = 0;
    }
  }

  // Split components, update counters, apply the 15/16 rule, set status.
  std::vector<CutMatchingState::Comp> next;
  std::vector<const Oracle1Result::PerComp*> by_comp(state.comps.size(),
                                                     nullptr);
  for (const auto& pc : result.comps) by_comp[pc.comp_id] = &pc;
  for (int ci = 0; ci < static_cast<int>(state.comps.size()); ++ci) {
    CutMatchingState::Comp& old = state.comps[ci];
    if (!old.active) {
      next.push_back(old);
      continue;
    }
    const auto* pc = by_comp[ci];
    std::vector<char> in_cut(g.n(), 0);
    if (pc)
      for (Vertex v : pc->cut) in_cut[v] = 1;
    std::vector<Vertex> cut_part, rest_part;
    for (Vertex v : old.verts) (in_cut[v] ? cut_part : rest_part).push_back(v);
    bool covered = pc && pc->covered;
    for (std::vector<Vertex>* part : {&cut_part, &rest_part}) {
      if (part->empty()) continue;
      CutMatchingState::Comp c;
      c.verts = *part;
      c.counter = old.counter + (covered ? 1 : 0);
      Cap d_orig = weight_of(d, c.verts);
      Cap d_now = weight_of(state.d_cur, c.verts);
      if (16 * d_now <= 15 * d_orig) {
        for (Vertex v : c.verts) state.d_cur[v] = 0;
        d_now = 0;
      }
      int supp = 0;
      for (Vertex v : c.verts)
        if (state.d_cur[v] > 0) ++supp;
      c.active = !(d_now == 0 || c.counter > x_max || supp <= 1);
      next.push_back(std::move(c));
    }
  }
  state.comps = std::move(next);
  for (int ci = 0; ci < static_cast<int>(state.comps.size()); ++ci)
    for (Vertex v : state.comps[ci].verts) state.comp_of[v] = ci;

  // Explicit flow-matrix update (test mode).
  if (state.cfg.potential_mode) {
    const int n = g.n();
    std::vector<std::vector<double>> fnext = state.f_explicit;
    for (const RoundRecord::Entry& e : rec.matching) {
      for (Vertex col = 0; col < n; ++col) {
        double au = state.f_explicit[e.u][col] / (2.0 * double(d[e.u]));
        double av = state.f_explicit[e.v][col] / (2.0 * double(d[e.v]));
        fnext[e.u][col] += e.w * (av - au);
        fnext[e.v][col] += e.w * (au - av);
      }
    }
    state.f_explicit = std::move(fnext);
  }

  state.transcript.rounds.push_back(std::move(rec));
  ++state.t;
}

DecompositionResult run_decomposition(const CapGraph& g, const Weighting& d,
                                      const CutMatchingConfig& cfg,
                                      const MatchingOracleFn& oracle) {
  CutMatchingState state(g, d, cfg);
  for (int t = 1; t <= state.cfg.rounds; ++t) {
    std::vector<int> active = state.active_ids();
    if (active.empty()) break;
    std::vector<double> r = random_unit_vector(g.n(), state.rng);
    std::vector<double> p = compute_projections(state, r);
    std::vector<CutStep> steps;
    steps.reserve(active.size());
    for (int ci : active) steps.push_back(cut_step(state, p, ci));
    MatchingInstance inst = build_matching_instance(state, std::move(steps));
    Oracle1Result res = oracle(inst, state);
    apply_round(state, res);
  }

  DecompositionResult out;
  std::vector<std::vector<Vertex>> blocks;
  blocks.reserve(state.comps.size());
  for (const auto& c : state.comps) blocks.push_back(c.verts);
  out.partition = VertexPartition(g.n(), blocks);
  out.d_final = state.d_cur;
  out.rounds_run = state.t;
  out.cut_capacity = boundary(g, out.partition).capacity;
  state.transcript.final_blocks = std::move(blocks);
  state.transcript.d_final = state.d_cur;
  out.transcript = std::make_shared<Transcript>(std::move(state.transcript));
  return out;
}

double potential_psi(const CutMatchingState& state, int comp_id) {
  if (!state.cfg.potential_mode)
    throw InputError("potential_psi requires potential_mode");
  const int n = state.g->n();
  std::vector<Vertex> supp = state.support(comp_id);
  if (supp.empty()) return 0.0;
  Cap dt = weight_of(state.d_cur, supp);
  std::vector<double> mu(n, 0.0);
  for (Vertex u : supp)
    for (Vertex col = 0; col < n; ++col) mu[col] += state.f_explicit[u][col];
  for (double& x : mu) x /= static_cast<double>(dt);
  double sum = 0;
  for (Vertex u : supp) {
    double du = static_cast<double>(state.d[u]);
    double norm2 = 0;
    for (Vertex col = 0; col < n; ++col) {
      double diff = state.f_explicit[u][col] / du - mu[col];
      norm2 += diff * diff;
    }
    sum += du * norm2;
  }
  return static_cast<double>(dt) * sum;
}

MultiRouteResult route_respecting_demands(const CapGraph& g,
                                          const Transcript& transcript,
                                          const std::vector<Demand>& demands,
                                          bool exact_topup,
                                          double respect_scale) {
  const Weighting& d = transcript.d;
  const Weighting& dt = transcript.d_final;
  const double abs_tol = 1e-9 * std::max<double>(1.0, weight_total(d));

  // Locate each demand's block and check the respecting condition.
  std::vector<int> block_of(g.n(), -1);
  for (int b = 0; b < static_cast<int>(transcript.final_blocks.size()); ++b)
    for (Vertex v : transcript.final_blocks[b]) block_of[v] = b;
  for (const Demand& b : demands) {
    if (static_cast<int>(b.size()) != g.n())
      throw InputError("demand size mismatch");
    int home = -1;
    double total = 0;
    for (Vertex v = 0; v < g.n(); ++v) {
      if (b[v] == 0) continue;
      if (std::abs(b[v]) >
          respect_scale * static_cast<double>(dt[v]) * (1 + kRelTol) + abs_tol)
        throw ContractError("demand does not respect d_T");
      if (std::abs(b[v]) <= abs_tol) continue;
      if (home == -1) home = block_of[v];
      if (block_of[v] != home)
        throw ContractError("demand spans multiple clusters");
      total += b[v];
    }
    if (std::abs(total) > kRelTol * (sum_abs(b) + 1) + abs_tol)
      throw ContractError("demand does not sum to zero");
  }

  MultiRouteResult out;
  std::vector<double> usage(g.m(), 0.0);
  for (const Demand& b : demands) {
    std::vector<double> x = b;
    FlowAssignment flow(g.m());
    std::vector<double> xdelta(g.n(), 0.0);
    for (auto it = transcript.rounds.rbegin(); it != transcript.rounds.rend();
         ++it) {
      std::fill(xdelta.begin(), xdelta.end(), 0.0);
      for (const Path& p : it->match_paths.paths) {
        Vertex a = p.start(), bb = p.end();
        double sa = x[a] / (2.0 * static_cast<double>(d[a]));
        double sb = x[bb] / (2.0 * static_cast<double>(d[bb]));
        double amt = p.weight * (sa - sb);  // forward minus reverse share
        if (amt != 0.0) {
          Vertex from = a;
          for (EdgeId e : p.edges) {
            flow.f[e] += g.edge(e).u == from ? amt : -amt;
            from = g.other(e, from);
          }
        }
        xdelta[a] += p.weight * (sb - sa);
        xdelta[bb] += p.weight * (sa - sb);
      }
      for (Vertex v = 0; v < g.n(); ++v) x[v] += xdelta[v];
    }
    double err = sum_abs(x);
    if (exact_topup && err > 0) {
      // The unmixed residue is routed exactly and charged to congestion.
      MinCongestionResult top = min_congestion_route(g, x);
      if (top.feasible) {
        flow.add(top.flow);
        out.topup_used = true;
        std::vector<double> outnet = net_flows(g, flow);
        err = 0;
        for (Vertex v = 0; v < g.n(); ++v) err += std::abs(-outnet[v] - b[v]);
      }
    }
    out.conservation_error.push_back(err);
    for (EdgeId e = 0; e < g.m(); ++e) usage[e] += std::abs(flow.f[e]);
    out.flows.push_back(std::move(flow));
  }
  double cong = 0;
  for (EdgeId e = 0; e < g.m(); ++e)
    cong = std::max(cong, usage[e] / static_cast<double>(g.edge(e).cap));
  out.congestion = cong;
  return out;
}

}  // namespace wxflow
