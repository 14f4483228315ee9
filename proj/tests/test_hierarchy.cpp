#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "wxflow/hierarchy.hpp"

using namespace wxflow;
using namespace wxflow::fixtures;

TEST_CASE("extend partition") {
  CapGraph g = path_graph(4);
  std::vector<std::vector<Vertex>> singles{{0}, {1}, {2}, {3}};
  VertexPartition prev(4, singles);
  SUBCASE("full V_next replaces the partition") {
    std::vector<char> in_v(4, 1);
    VertexPartition p = extend_partition(g, prev, in_v, {{0, 1}, {2, 3}});
    CHECK(p.num_blocks() == 2);
  }
  SUBCASE("empty V_next keeps the previous partition") {
    std::vector<char> in_v(4, 0);
    VertexPartition p = extend_partition(g, prev, in_v, {});
    CHECK(p.num_blocks() == 4);
  }
  SUBCASE("mixed extension induces Q from the previous level") {
    VertexPartition two(4, {{0, 1}, {2, 3}});
    std::vector<char> in_v{1, 1, 0, 0};
    VertexPartition p = extend_partition(g, two, in_v, {{0, 1}});
    CHECK(p.num_blocks() == 2);
    CHECK(p.block_of(2) == p.block_of(3));
    CHECK(p.block_of(0) != p.block_of(2));
  }
  SUBCASE("leaving V_next is an error") {
    std::vector<char> in_v{1, 1, 0, 0};
    CHECK_THROWS_AS(extend_partition(g, prev, in_v, {{0, 2}}), InputError);
  }
}

TEST_CASE("refinement family") {
  CapGraph g = barbell(4);
  HierarchyConfig hc;
  hc.phi = 0.5;  // force a split so three levels appear
  hc.seed = 3;
  Hierarchy h = build_hierarchy(g, hc);
  REQUIRE(h.depth() >= 2);
  const RefinementFamily& fam = h.fam;

  SUBCASE("R_{>=1} is the singleton partition") {
    CHECK(fam.r_ge[0].num_blocks() == g.n());
  }
  SUBCASE("refinement order holds") {
    for (int i = 0; i + 1 < h.depth(); ++i)
      for (const auto& block : fam.r_ge[i].blocks()) {
        int outer = fam.r_ge[i + 1].block_of(block.front());
        for (Vertex v : block) CHECK(fam.r_ge[i + 1].block_of(v) == outer);
      }
  }
  SUBCASE("family is laminar with positive deltas recorded") {
    CHECK_NOTHROW(fam.family.check_laminar(g.n()));
    CHECK(fam.family.sets.size() >= static_cast<size_t>(g.n()));
  }
  SUBCASE("degrees off V_{i+1} are preserved between refinements") {
    for (int i = 0; i + 1 < h.depth(); ++i) {
      const HierarchyLevel& next = h.levels[i + 1];
      for (Vertex v = 0; v < g.n(); ++v) {
        if (next.in_vi[v]) continue;
        CHECK(fam.deg_r[i][v] == fam.deg_r[i + 1][v]);
        CHECK(induced_degree(g, edge_mask_of(g, boundary(g, next.p_bar).edges),
                             v) <=
              induced_degree(
                  g, edge_mask_of(g, boundary(g, h.levels[i].p_bar).edges),
                  v) +
                  induced_degree(
                      g,
                      edge_mask_of(
                          g, cut_of_set(g, [&] {
                               std::vector<Vertex> vs;
                               for (Vertex u = 0; u < g.n(); ++u)
                                 if (next.in_vi[u]) vs.push_back(u);
                               return vs;
                             }()).edges),
                      v));
      }
    }
  }
}

TEST_CASE("level routing") {
  CapGraph g = barbell(4);
  HierarchyConfig hc;
  hc.phi = 0.5;
  hc.seed = 3;
  Hierarchy h = build_hierarchy(g, hc);
  REQUIRE(h.depth() >= 2);
  const int n = g.n();

  SUBCASE("between-level routing of zero is zero") {
    LevelRouteResult r = h.route_between_levels(1, Demand(n, 0.0));
    CHECK(sum_abs(r.sink) == doctest::Approx(0));
  }
  SUBCASE("between-level routing at full sources") {
    const HierarchyLevel& next = h.levels[1];
    Demand s(n, 0.0);
    for (Vertex v = 0; v < n; ++v)
      s[v] = next.in_vi[v] ? double(next.deg_p_bar[v])
                           : double(next.deg_v_boundary[v]);
    LevelRouteResult r = h.route_between_levels(1, s);
    CHECK(r.congestion <= 3 * h.beta() * (1 + 1e-6) + 1e-9);
    const HierarchyLevel& cur = h.levels[0];
    for (Vertex v = 0; v < n; ++v) {
      CHECK(r.sink[v] <= 0.5 * double(cur.deg_p_bar[v]) + 1e-6);
      if (!next.in_vi[v]) CHECK(r.sink[v] == doctest::Approx(0));
    }
  }
  SUBCASE("r-to-p routing of zero is zero") {
    LevelRouteResult r = h.route_r_to_p(1, Demand(n, 0.0));
    CHECK(sum_abs(r.sink) == doctest::Approx(0));
  }
  SUBCASE("r-to-p at the top level is the identity") {
    Demand x(n, 0.0);
    x[0] = 2.5;
    x[1] = -2.5;
    LevelRouteResult r = h.route_r_to_p(h.depth(), x);
    CHECK(r.sink == x);
    CHECK(sum_abs(r.flow.f) == doctest::Approx(0));
  }
  SUBCASE("route_level and route_full on zero demand") {
    LevelRouteResult r = h.route_level(1, Demand(n, 0.0));
    CHECK(sum_abs(r.sink) == doctest::Approx(0));
    PseudoRouter::Outcome out = h.route_full(Demand(n, 0.0));
    CHECK(out.congestion == doctest::Approx(0));
  }
  SUBCASE("random r-to-p demands satisfy the four properties") {
    Rng rng(97);
    const HierarchyLevel& next = h.levels[1];
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> lim(n, 0.0);
      for (Vertex v = 0; v < n; ++v)
        if (next.in_vi[v]) lim[v] = double(h.fam.deg_r[0][v]);
      Demand x = random_demand(lim, rng);
      LevelRouteResult r = h.route_r_to_p(1, x);
      for (const auto& block : next.p_bar.blocks()) {
        double diff = 0;
        for (Vertex v : block) diff += x[v] - r.sink[v];
        CHECK(diff == doctest::Approx(0.0).epsilon(1e-6));
      }
      for (Vertex v = 0; v < n; ++v)
        if (!next.in_vi[v]) CHECK(r.sink[v] == doctest::Approx(0));
      CHECK(r.congestion <=
            12.0 * h.depth() * h.beta() * (1 + 1e-6) + 1e-9);
    }
  }
}

TEST_CASE("full hierarchy routing") {
  SUBCASE("path graph end to end") {
    CapGraph g = path_graph(8);
    HierarchyConfig hc;
    hc.seed = 11;
    Hierarchy h = build_hierarchy(g, hc);
    Demand b(8, 0.0);
    b[0] = 1;
    b[7] = -1;
    PseudoRouter::Outcome out = h.route_full(b);
    CHECK(sum_abs(out.residual) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(out.congestion <= h.quality() + 1e-9);
    std::vector<double> nets = net_flows(g, out.flow);
    for (Vertex v = 0; v < 8; ++v)
      CHECK(-nets[v] == doctest::Approx(b[v]).epsilon(1e-6));
  }
  SUBCASE("random family-respecting demands route exactly") {
    Rng rng(101);
    CapGraph g = random_connected(20, 30, 4, rng);
    HierarchyConfig hc;
    hc.seed = 13;
    Hierarchy h = build_hierarchy(g, hc);
    for (int trial = 0; trial < 20; ++trial) {
      Demand b(g.n(), 0.0);
      for (double& x : b) x = rng.next_gaussian();
      double mean = 0;
      for (double x : b) mean += x;
      for (double& x : b) x -= mean / g.n();
      double est = h.estimate_congestion(b);
      if (est <= 0) continue;
      for (double& x : b) x /= est;  // now family-respecting
      PseudoRouter::Outcome out = h.route_full(b);
      CHECK(sum_abs(out.residual) <= 1e-6 * (1 + sum_abs(b)));
      CHECK(out.congestion <= h.quality() * (1 + 1e-6) + 1e-9);
    }
  }
  SUBCASE("rejects demands that violate the family") {
    CapGraph g = path_graph(4);
    HierarchyConfig hc;
    Hierarchy h = build_hierarchy(g, hc);
    Demand b(4, 0.0);
    b[0] = 100;
    b[3] = -100;
    CHECK_THROWS_AS(h.route_full(b), ContractError);
  }
}

TEST_CASE("estimate congestion") {
  SUBCASE("zero demand") {
    CapGraph g = path_graph(2);
    HierarchyConfig hc;
    Hierarchy h = build_hierarchy(g, hc);
    CHECK(h.estimate_congestion(Demand(2, 0.0)) == doctest::Approx(0));
  }
  SUBCASE("unit demand across the only edge") {
    CapGraph g = path_graph(2);
    HierarchyConfig hc;
    Hierarchy h = build_hierarchy(g, hc);
    Demand b{1.0, -1.0};
    CHECK(h.estimate_congestion(b) == doctest::Approx(1));
  }
  SUBCASE("estimate brackets the optimum") {
    Rng rng(103);
    CapGraph g = random_connected(16, 24, 4, rng);
    HierarchyConfig hc;
    hc.seed = 17;
    Hierarchy h = build_hierarchy(g, hc);
    for (int trial = 0; trial < 10; ++trial) {
      Demand b(g.n(), 0.0);
      for (double& x : b) x = rng.next_gaussian();
      double mean = 0;
      for (double x : b) mean += x;
      for (double& x : b) x -= mean / g.n();
      double est = h.estimate_congestion(b);
      MinCongestionResult opt = min_congestion_route(g, b);
      REQUIRE(opt.feasible);
      CHECK(est <= opt.congestion * (1 + 1e-6) + 1e-9);
      CHECK(opt.congestion <= h.quality() * est * (1 + 1e-6) + 1e-9);
    }
  }
}

TEST_CASE("gflow gadget") {
  SUBCASE("no boundary and no deletions leaves only sink edges") {
    CapGraph g = complete_graph(4);
    Weighting d = g.degrees();
    VertexPartition at(4, {{0, 1, 2, 3}});
    GraftingInstance inst =
        build_grafting_instance(g, at, d, d, 1.0 / 64, 0.0);
    LaminarFamily base;
    base.sets = {{0}, {1}, {2}, {3}};
    GFlowGadget gx = build_gflow(g, inst, base);
    CHECK(gx.net.n() == 5);  // V plus t, no leaves or splits
    int sink_edges = 0;
    for (const FlowNet::Edge& e : gx.net.edges())
      if (e.u == gx.t || e.v == gx.t) ++sink_edges;
    CHECK(sink_edges == 4);
    CHECK(gx.delta_u == doctest::Approx(0));
  }
  SUBCASE("one bridge produces one split node with doubled edges") {
    CapGraph g = barbell(4, 3);
    Weighting d = g.degrees();
    VertexPartition at(8, {{0, 1, 2, 3}, {4, 5, 6, 7}});
    GraftingInstance inst =
        build_grafting_instance(g, at, d, d, 1.0 / 64, 0.0);
    LaminarFamily base;
    for (Vertex v = 0; v < 8; ++v) base.sets.push_back({v});
    GFlowGadget gx = build_gflow(g, inst, base);
    int splits = 0;
    for (EdgeId e = 0; e < g.m(); ++e)
      if (gx.split_of_edge[e] >= 0) ++splits;
    CHECK(splits == 1);
    CHECK(gx.delta_u == doctest::Approx(6));  // both split arcs, cap 3
    CHECK(gx.delta_u <= gx.delta_u_bound + 1e-9);
  }
}

TEST_CASE("gflow grafting oracle") {
  SUBCASE("expander with no deletions keeps every block whole") {
    CapGraph g = complete_graph(8);
    HierarchyConfig hc;
    hc.seed = 19;
    Hierarchy h = build_hierarchy(g, hc);
    CutMatchingConfig cm;
    cm.phi = 0.1;
    cm.seed = 19;
    DecompositionResult dec =
        run_decomposition(g, g.degrees(), cm, exact_matching_oracle);
    GraftingInstance inst = build_grafting_instance(
        g, dec.partition, g.degrees(), dec.d_final, 1.0 / 64, 1.0 / 16);
    Oracle2Result res = gflow_grafting_oracle(inst, h, AlmostRouteBackend::kExact);
    for (const auto& pb : res.blocks) {
      CHECK(pb.eligible);
      CHECK(pb.cut.empty());
    }
  }
  SUBCASE("barbell clauses hold numerically") {
    CapGraph g = barbell(4);
    HierarchyConfig hc;
    hc.seed = 23;
    Hierarchy h = build_hierarchy(g, hc);
    CutMatchingConfig cm;
    cm.phi = 0.5;
    cm.seed = 23;
    DecompositionResult dec =
        run_decomposition(g, g.degrees(), cm, exact_matching_oracle);
    REQUIRE(dec.partition.num_blocks() >= 2);
    GraftingInstance inst = build_grafting_instance(
        g, dec.partition, g.degrees(), dec.d_final, 1.0 / 64, 1.0 / 16);
    Oracle2Result res =
        gflow_grafting_oracle(inst, h, AlmostRouteBackend::kExact);
    Cap cut_total = 0;
    for (const auto& pb : res.blocks) {
      if (!pb.eligible) continue;
      CHECK(pb.min_routed_frac >= 1 - inst.eps2 - 1e-6);
      CHECK(pb.min_sat_frac >= 1 - inst.eps2 - 1e-6);
      cut_total += pb.cut_cap;
    }
    CHECK(double(cut_total) <=
          8 * inst.psi * double(weight_total(inst.d)) + 1e-9);
  }
}

TEST_CASE("hierarchy construction") {
  SUBCASE("K2 finishes in two levels") {
    CapGraph g = complete_graph(2);
    HierarchyConfig hc;
    Hierarchy h = build_hierarchy(g, hc);
    CHECK(h.depth() == 2);
    CHECK(h.levels.back().delta_p_bar == 0);
  }
  SUBCASE("P2 level two merges the pair") {
    CapGraph g = path_graph(2);
    HierarchyConfig hc;
    Hierarchy h = build_hierarchy(g, hc);
    REQUIRE(h.depth() == 2);
    CHECK(h.levels[1].p_bar.num_blocks() == 1);
  }
  SUBCASE("halving holds on every level of a barbell hierarchy") {
    CapGraph g = barbell(5);
    HierarchyConfig hc;
    hc.phi = 0.5;
    hc.seed = 29;
    Hierarchy h = build_hierarchy(g, hc);
    for (int i = 1; i < h.depth(); ++i)
      CHECK(2 * h.levels[i].delta_p_bar <= h.levels[i - 1].delta_p_bar);
    double total = std::log2(double(g.total_cap()));
    CHECK(h.depth() <= int(total) + 2);
  }
  SUBCASE("quality certificate brackets random demands on P8") {
    CapGraph g = path_graph(8);
    HierarchyConfig hc;
    hc.seed = 31;
    Hierarchy h = build_hierarchy(g, hc);
    std::vector<std::vector<Vertex>> family = h.family().sets;
    QualityResult q = approximator_quality(g, family, 20, 7);
    CHECK(q.min_ratio >= 1 - 1e-6);
    CHECK(q.max_ratio <= h.quality() * (1 + 1e-6));
    // Worker parallelism never changes the result.
    QualityResult q4 = approximator_quality(g, family, 20, 7, 4);
    CHECK(q4.max_ratio == q.max_ratio);
    CHECK(q4.min_ratio == q.min_ratio);
  }
}
