#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "wxflow/cutmatch.hpp"

using namespace wxflow;
using namespace wxflow::fixtures;

namespace {

CutMatchingConfig small_config(double phi, uint64_t seed,
                               bool potential = false) {
  CutMatchingConfig cfg;
  cfg.phi = phi;
  cfg.seed = seed;
  cfg.potential_mode = potential;
  return cfg;
}

}  // namespace

TEST_CASE("projections follow the flow-matrix recursion") {
  SUBCASE("round one projects the unit vector directly") {
    CapGraph g = complete_graph(4);
    CutMatchingState st(g, g.degrees(), small_config(0.5, 3));
    std::vector<double> r = random_unit_vector(g.n(), st.rng);
    std::vector<double> p = compute_projections(st, r);
    for (Vertex v = 0; v < g.n(); ++v) CHECK(p[v] == doctest::Approx(r[v]));
  }
  SUBCASE("recursion matches the explicit matrix") {
    CapGraph g = complete_graph(8);
    CutMatchingConfig cfg = small_config(0.25, 5, /*potential=*/true);
    cfg.rounds = 6;
    CutMatchingState st(g, g.degrees(), cfg);
    for (int t = 0; t < 5; ++t) {
      std::vector<double> r = random_unit_vector(g.n(), st.rng);
      std::vector<double> p = compute_projections(st, r);
      for (Vertex v = 0; v < g.n(); ++v) {
        double dot = 0;
        for (Vertex w = 0; w < g.n(); ++w)
          dot += st.f_explicit[v][w] * r[w];
        CHECK(p[v] ==
              doctest::Approx(dot / g.degree(v)).epsilon(1e-9));
      }
      std::vector<CutStep> steps;
      for (int ci : st.active_ids()) steps.push_back(cut_step(st, p, ci));
      MatchingInstance inst = build_matching_instance(st, std::move(steps));
      apply_round(st, exact_matching_oracle(inst, st));
    }
    // Row sums stay d(u) wherever demand survives.
    for (Vertex v = 0; v < g.n(); ++v) {
      if (st.d_cur[v] == 0) continue;
      double sum = 0;
      for (Vertex w = 0; w < g.n(); ++w) sum += st.f_explicit[v][w];
      CHECK(sum == doctest::Approx(double(g.degree(v))).epsilon(1e-9));
    }
  }
}

TEST_CASE("cut step") {
  CapGraph g = complete_graph(8);
  CutMatchingState st(g, Weighting(8, 1), small_config(0.5, 7));
  SUBCASE("two support vertices with equal weight take the lower p side") {
    CapGraph k2 = complete_graph(2);
    CutMatchingState st2(k2, Weighting(2, 3), small_config(0.5, 7));
    std::vector<double> p{0.7, -0.2};
    CutStep cs = cut_step(st2, p, 0);
    REQUIRE(cs.left.size() == 1);
    CHECK(cs.left[0] == 1);  // the lower-p vertex
    CHECK_FALSE(cs.left_is_high);
  }
  SUBCASE("an outlier forms the left side") {
    std::vector<double> p(8, 0.0);
    p[5] = 10.0;
    CutStep cs = cut_step(st, p, 0);
    REQUIRE(cs.left.size() == 1);
    CHECK(cs.left[0] == 5);
    CHECK(cs.left_is_high);
  }
  SUBCASE("equal projections split by vertex id") {
    std::vector<double> p(8, 1.0);
    CutStep cs = cut_step(st, p, 0);
    REQUIRE(cs.left.size() == 1);
    CHECK(cs.left[0] == 0);
  }
  SUBCASE("random sweeps satisfy the certificate conditions") {
    Rng rng(61);
    for (int trial = 0; trial < 500; ++trial) {
      int n = 4 + rng.next_below(12);
      CapGraph kn = complete_graph(n);
      Weighting d(n);
      for (auto& x : d) x = 1 + rng.next_below(4);
      CutMatchingState stn(kn, d, small_config(0.5, trial + 1));
      std::vector<double> p(n);
      for (auto& x : p) x = rng.next_double() * 2 - 1;
      if (trial % 4 == 0)  // near-tied clusters
        for (Vertex v = 0; v < n; ++v)
          p[v] = (v % 2 ? 1.0 : -1.0) + 1e-9 * p[v];
      CutStep cs = cut_step(stn, p, 0);
      // Verify against the certificate conditions directly.
      double mean = 0, total = 0;
      for (Vertex v = 0; v < n; ++v) {
        mean += double(d[v]) * p[v];
        total += double(d[v]);
      }
      mean /= total;
      double tv = 0;
      for (Vertex v = 0; v < n; ++v)
        tv += double(d[v]) * (p[v] - mean) * (p[v] - mean);
      if (tv <= 1e-18) continue;
      double certv = 0;
      for (Vertex u : cs.left) {
        double dv = (p[u] - mean) * (p[u] - mean);
        double de = (p[u] - cs.eta) * (p[u] - cs.eta);
        if (de + 1e-12 * std::max(1.0, dv) >= dv / 9)
          certv += double(d[u]) * dv;
      }
      CHECK(certv + 1e-9 * tv >= tv / 36);
      // Separation between the sides.
      for (Vertex u : cs.left)
        for (Vertex w : cs.right) {
          if (cs.left_is_high)
            CHECK(p[u] >= p[w] - 1e-12);
          else
            CHECK(p[u] <= p[w] + 1e-12);
        }
    }
  }
}

TEST_CASE("an empty matching leaves the projections unchanged") {
  CapGraph g = complete_graph(4);
  CutMatchingState st(g, g.degrees(), small_config(0.5, 3));
  std::vector<double> r = random_unit_vector(g.n(), st.rng);
  std::vector<double> before = compute_projections(st, r);
  // A round whose oracle routed nothing: no matching entries appended.
  Oracle1Result res;
  Oracle1Result::PerComp pc;
  pc.comp_id = 0;
  pc.covered = false;
  pc.flow_paths.n = g.n();
  pc.flow_paths.m = size_t(g.m());
  res.comps.push_back(pc);
  apply_round(st, res);
  std::vector<double> after = compute_projections(st, r);
  for (Vertex v = 0; v < g.n(); ++v)
    CHECK(after[v] == doctest::Approx(before[v]));
}

TEST_CASE("matching instance construction") {
  CapGraph g = complete_graph(4);
  CutMatchingState st(g, g.degrees(), small_config(0.5, 9));
  std::vector<double> p{0.9, -0.1, -0.2, -0.3};
  CutStep cs = cut_step(st, p, 0);
  MatchingInstance inst = build_matching_instance(st, {cs});
  SUBCASE("capacities scaled by 2/phi") {
    for (EdgeId e = 0; e < inst.net.m(); ++e)
      CHECK(inst.net.edge(e).cap == doctest::Approx(4.0));
  }
  SUBCASE("sources on L and sinks on R carry d_{t-1}") {
    for (Vertex v : cs.left)
      CHECK(inst.source[v] == doctest::Approx(double(g.degree(v))));
    for (Vertex v : cs.right)
      CHECK(inst.sink[v] == doctest::Approx(double(g.degree(v))));
  }
  SUBCASE("no active components means an empty instance") {
    MatchingInstance none = build_matching_instance(st, {});
    CHECK(none.active_comps.empty());
    double total = 0;
    for (double x : none.source) total += x;
    CHECK(total == 0);
  }
}

TEST_CASE("weak decomposition end to end") {
  SUBCASE("K8 with phi 0.1 stays whole with full demand") {
    CapGraph g = complete_graph(8);
    DecompositionResult r = run_decomposition(
        g, g.degrees(), small_config(0.1, 17), exact_matching_oracle);
    CHECK(r.partition.num_blocks() == 1);
    CHECK(r.cut_capacity == 0);
    CHECK(r.d_final == g.degrees());
  }
  SUBCASE("single vertex graph is an immediate inactive singleton") {
    CapGraph g(1, {});
    DecompositionResult r = run_decomposition(
        g, Weighting{5}, small_config(0.5, 1), exact_matching_oracle);
    CHECK(r.partition.num_blocks() == 1);
    CHECK(r.rounds_run == 0);
  }
  SUBCASE("barbell splits at the bridge") {
    CapGraph g = barbell(4);
    Weighting d = g.degrees();
    DecompositionResult r = run_decomposition(
        g, d, small_config(0.5, 2), exact_matching_oracle);
    CHECK(r.partition.num_blocks() >= 2);
    double l2nw =
        std::log2(double(g.n()) * double(std::max<Cap>(1, g.max_cap())));
    CHECK(static_cast<double>(r.cut_capacity) <=
          16.0 * 0.5 * l2nw * double(weight_total(d)));
    // Each side is near-expanding in G at a relaxed phi.
    double target = 0.5 / (64 * std::log2(8.0) * std::log2(8.0));
    for (const auto& block : r.partition.blocks())
      CHECK(brute_near_expander(g, d, block, target));
    // Deleted demand stays zero with the exact oracle.
    CHECK(weight_total(r.d_final) == weight_total(d));
  }
}

TEST_CASE("round invariants on a seeded run") {
  CapGraph g = barbell(4);
  Weighting d = g.degrees();
  CutMatchingConfig cfg = small_config(0.5, 23);
  cfg.eps1 = 0;
  CutMatchingState st(g, d, cfg);
  double pot_prev = -1;
  int rounds = std::min(20, st.cfg.rounds);
  for (int t = 0; t < rounds; ++t) {
    std::vector<int> active = st.active_ids();
    if (active.empty()) break;
    double pot = 0;
    for (const auto& c : st.comps)
      if (c.active)
        pot += (st.cfg.x_max - c.counter) *
               double(weight_of(st.d_cur, c.verts));
    if (pot_prev >= 0) CHECK(pot <= pot_prev + 1e-9);
    pot_prev = pot;

    std::vector<Vertex> before = st.comp_of;
    std::vector<double> r = random_unit_vector(g.n(), st.rng);
    std::vector<double> p = compute_projections(st, r);
    std::vector<CutStep> steps;
    for (int ci : active) steps.push_back(cut_step(st, p, ci));
    MatchingInstance inst = build_matching_instance(st, std::move(steps));
    apply_round(st, exact_matching_oracle(inst, st));

    // Refinement: vertices in one new component came from one old one.
    for (const auto& comp : st.comps) {
      int old = before[comp.verts.front()];
      for (Vertex v : comp.verts) CHECK(before[v] == old);
    }
    // When the oracle covers weight, the counter potential drops by at
    // least that weight (one counter tick per covered unit).
    const RoundRecord& rec = st.transcript.rounds.back();
    double pot_now = 0;
    for (const auto& c : st.comps)
      if (c.active)
        pot_now += (st.cfg.x_max - c.counter) *
                   double(weight_of(st.d_cur, c.verts));
    CHECK(pot_now <= pot - double(rec.covered_weight) + 1e-9);
    pot_prev = pot_now;
  }
  // Cut accounting: every final intercluster edge was cut in some round,
  // and the covered cuts obey the oracle capacity certificate.
  {
    double cert_total = 0, covered_cap = 0, covered_dcut = 0;
    for (const RoundRecord& round : st.transcript.rounds)
      for (const auto& cert : round.certs) {
        cert_total += cert.cut_cap;
        if (cert.covered) {
          covered_cap += cert.cut_cap;
          covered_dcut += double(cert.d_cut);
        }
      }
    std::vector<std::vector<Vertex>> blocks;
    for (const auto& c : st.comps) blocks.push_back(c.verts);
    Cap final_cut = boundary(g, VertexPartition(g.n(), blocks)).capacity;
    CHECK(double(final_cut) <= cert_total + 1e-9);
    double dv = double(weight_total(d));
    CHECK(covered_cap * 2 / st.cfg.phi <=
          covered_dcut + 2 * st.cfg.eps1 * dv * st.t + 1e-9);
  }
  // Stacked matchings are routable with congestion 2t/phi.
  std::vector<double> usage(g.m(), 0.0);
  for (const RoundRecord& round : st.transcript.rounds)
    for (const Path& path : round.match_paths.paths)
      for (EdgeId e : path.edges) usage[e] += path.weight;
  double cong = 0;
  for (EdgeId e = 0; e < g.m(); ++e)
    cong = std::max(cong, usage[e] / double(g.edge(e).cap));
  CHECK(cong <= 2.0 * st.t / st.cfg.phi + 1e-9);
  // Deleted demand bound (exact oracle: nothing deleted).
  CHECK(weight_total(d) - weight_total(st.d_cur) <=
        64.0 * st.t * st.cfg.eps1 * double(weight_total(d)) + 1e-9);
}

TEST_CASE("potential psi") {
  SUBCASE("explicit formula on two vertices") {
    CapGraph g = complete_graph(2);
    Weighting d{3, 3};
    CutMatchingConfig cfg = small_config(0.5, 3, /*potential=*/true);
    CutMatchingState st(g, d, cfg);
    // psi_0 = d(V) * sum_u d(u) ||e_u - mu||^2 with mu = (1/2, 1/2).
    double psi = potential_psi(st, 0);
    CHECK(psi == doctest::Approx(6.0 * (3 * 0.5 + 3 * 0.5)));
  }
  SUBCASE("single-support component has zero potential") {
    CapGraph g = complete_graph(2);
    CutMatchingConfig cfg = small_config(0.5, 3, true);
    CutMatchingState st(g, Weighting{4, 0}, cfg);
    CHECK(potential_psi(st, 0) == doctest::Approx(0.0));
  }
  SUBCASE("median potential drops over seeded runs") {
    std::vector<double> ratios;
    for (uint64_t seed = 1; seed <= 20; ++seed) {
      CapGraph g = complete_graph(8);
      CutMatchingConfig cfg = small_config(0.25, seed, true);
      cfg.rounds = 4;
      CutMatchingState st(g, g.degrees(), cfg);
      double before = potential_psi(st, 0);
      for (int t = 0; t < 4; ++t) {
        std::vector<int> active = st.active_ids();
        if (active.empty()) break;
        std::vector<double> r = random_unit_vector(g.n(), st.rng);
        std::vector<double> p = compute_projections(st, r);
        std::vector<CutStep> steps;
        for (int ci : active) steps.push_back(cut_step(st, p, ci));
        apply_round(st, exact_matching_oracle(
                            build_matching_instance(st, std::move(steps)), st));
      }
      double after = 0;
      for (int ci = 0; ci < int(st.comps.size()); ++ci)
        after = std::max(after, potential_psi(st, ci));
      if (before > 0) ratios.push_back(after / before);
    }
    std::sort(ratios.begin(), ratios.end());
    REQUIRE(!ratios.empty());
    CHECK(ratios[ratios.size() / 2] < 1.0);
  }
}

TEST_CASE("routing recorded demands") {
  CapGraph g = barbell(4);
  Weighting d = g.degrees();
  DecompositionResult r = run_decomposition(g, d, small_config(0.5, 29),
                                            exact_matching_oracle);
  const Transcript& tr = *r.transcript;
  double dv = double(weight_total(d));
  double bound = 4.0 * tr.rounds.size() / 0.5;

  SUBCASE("zero demands route to nothing") {
    MultiRouteResult mr = route_respecting_demands(g, tr, {Demand(g.n(), 0.0)});
    CHECK(mr.congestion == doctest::Approx(0));
  }
  SUBCASE("random respecting demands stay within the mixing bound") {
    Rng rng(31);
    std::vector<Demand> demands;
    for (int k = 0; k < 50; ++k) {
      for (const auto& block : tr.final_blocks) {
        std::vector<double> lim(g.n(), 0.0);
        for (Vertex v : block) lim[v] = double(tr.d_final[v]);
        Demand b = random_demand(lim, rng);
        if (sum_abs(b) > 0) {
          demands.push_back(b);
          break;
        }
      }
    }
    MultiRouteResult mr = route_respecting_demands(g, tr, demands);
    CHECK(mr.congestion <= bound + 1e-9);
    for (double err : mr.conservation_error)
      CHECK(err <= 1e-6 * dv);
  }
  SUBCASE("demand that violates the respecting condition is rejected") {
    Demand b(g.n(), 0.0);
    b[0] = double(d[0]) * 3;
    b[1] = -b[0];
    CHECK_THROWS_AS(route_respecting_demands(g, tr, {b}), ContractError);
  }
}
