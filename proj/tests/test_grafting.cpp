#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "wxflow/grafting.hpp"

using namespace wxflow;
using namespace wxflow::fixtures;

namespace {

DecompositionResult decompose(const CapGraph& g, double phi, uint64_t seed) {
  CutMatchingConfig cfg;
  cfg.phi = phi;
  cfg.seed = seed;
  return run_decomposition(g, g.degrees(), cfg, exact_matching_oracle);
}

// A hand-made decomposition result (for constructed edge cases).
DecompositionResult fake_decomposition(const CapGraph& g,
                                       std::vector<std::vector<Vertex>> blocks,
                                       Weighting d_final) {
  CutMatchingConfig cfg;
  cfg.phi = 0.1;
  cfg.seed = 1;
  CutMatchingState st(g, g.degrees(), cfg);
  DecompositionResult dec;
  dec.partition = VertexPartition(g.n(), blocks);
  dec.d_final = d_final;
  dec.transcript = std::make_shared<Transcript>(st.transcript);
  dec.transcript->final_blocks = blocks;
  dec.transcript->d_final = std::move(d_final);
  dec.cut_capacity = boundary(g, dec.partition).capacity;
  return dec;
}

}  // namespace

TEST_CASE("grafting instance construction") {
  SUBCASE("whole graph with nothing deleted") {
    CapGraph g = complete_graph(4);
    Weighting d = g.degrees();
    VertexPartition at(4, {{0, 1, 2, 3}});
    GraftingInstance inst = build_grafting_instance(g, at, d, d, 0.25, 0.0);
    for (Vertex v = 0; v < 4; ++v) {
      CHECK(inst.delta_gross[v] == doctest::Approx(0));
      CHECK(inst.nabla_gross[v] == doctest::Approx(double(d[v]) / 5));
    }
    for (EdgeId e = 0; e < inst.net.m(); ++e)
      CHECK(inst.net.edge(e).cap == doctest::Approx(4.0));
  }
  SUBCASE("bridge endpoints carry boundary sources") {
    CapGraph g = barbell(4);
    Weighting d = g.degrees();
    VertexPartition at(8, {{0, 1, 2, 3}, {4, 5, 6, 7}});
    GraftingInstance inst =
        build_grafting_instance(g, at, d, d, 1.0 / 64, 0.0);
    CHECK(inst.delta_gross[3] == doctest::Approx(1));
    CHECK(inst.delta_gross[4] == doctest::Approx(1));
    CHECK(inst.delta_gross[0] == doctest::Approx(0));
    CHECK(inst.plus_blocks.size() == 2);
  }
  SUBCASE("fully deleted blocks drop out of the plus set") {
    CapGraph g = barbell(4);
    Weighting d = g.degrees();
    Weighting dt = d;
    for (Vertex v = 4; v < 8; ++v) dt[v] = 0;
    VertexPartition at(8, {{0, 1, 2, 3}, {4, 5, 6, 7}});
    GraftingInstance inst =
        build_grafting_instance(g, at, d, dt, 1.0 / 64, 0.0);
    CHECK(inst.plus_blocks.size() == 1);
    CHECK(inst.plus_block_of[5] == -1);
  }
  SUBCASE("psi must be positive") {
    CapGraph g = complete_graph(2);
    CHECK_THROWS_AS(
        build_grafting_instance(g, VertexPartition(2, {{0, 1}}),
                                Weighting{1, 1}, Weighting{1, 1}, 0.0, 0.0),
        InputError);
  }
}

TEST_CASE("finalize") {
  SUBCASE("an expander keeps everything") {
    CapGraph g = complete_graph(8);
    DecompositionResult dec = decompose(g, 0.1, 3);
    FinalDecomposition fin = finalize(g, dec, g.degrees(), 1.0 / 64, 0.0,
                                      exact_grafting_oracle);
    REQUIRE(fin.clusters.num_blocks() == 1);
    CHECK(fin.certified[0]);
    CHECK(fin.discarded_mass == 0);
  }
  SUBCASE("boundary-heavy blocks are all discarded") {
    CapGraph g = complete_graph(4);
    Weighting d = g.degrees();
    DecompositionResult dec =
        fake_decomposition(g, {{0}, {1}, {2}, {3}}, d);
    FinalDecomposition fin =
        finalize(g, dec, d, 1.0 / 64, 0.0, exact_grafting_oracle);
    for (int c = 0; c < fin.clusters.num_blocks(); ++c)
      CHECK_FALSE(fin.certified[c]);
    CHECK(fin.discarded_mass == weight_total(d));
  }
  SUBCASE("barbell keeps both sides") {
    CapGraph g = barbell(4);
    DecompositionResult dec = decompose(g, 0.5, 5);
    REQUIRE(dec.partition.num_blocks() >= 2);
    FinalDecomposition fin = finalize(g, dec, g.degrees(), 1.0 / 64, 0.0,
                                      exact_grafting_oracle);
    int certified = 0;
    for (int c = 0; c < fin.clusters.num_blocks(); ++c)
      if (fin.certified[c]) ++certified;
    CHECK(certified >= 2);
    CHECK(fin.discarded_mass == 0);
    for (const auto& pb : fin.oracle.blocks) {
      if (!pb.eligible) continue;
      CHECK(pb.min_routed_frac >= 1 - 1e-9);
      CHECK(pb.min_sat_frac >= 1 - 1e-9);
    }
    Cap cut_total = 0;
    for (const auto& pb : fin.oracle.blocks) cut_total += pb.cut_cap;
    CHECK(double(cut_total) <=
          8.0 * fin.instance.psi * double(weight_total(fin.d)) + 1e-9);
    Cap cut_mass = 0;
    for (const auto& pb : fin.oracle.blocks)
      cut_mass += weight_of(fin.d, pb.cut);
    CHECK(double(cut_mass) <=
          30.0 * (double(fin.deleted_mass) +
                  double(weight_total(fin.deg_boundary_t))) +
              1e-9);
  }
  SUBCASE("eps2 beyond one tenth is rejected") {
    CapGraph g = complete_graph(4);
    DecompositionResult dec = decompose(g, 0.1, 3);
    CHECK_THROWS_AS(
        finalize(g, dec, g.degrees(), 1.0 / 64, 0.2, exact_grafting_oracle),
        InputError);
  }
}

TEST_CASE("grafted demand routing") {
  CapGraph g = barbell(4);
  Weighting d = g.degrees();
  DecompositionResult dec = decompose(g, 0.5, 7);
  FinalDecomposition fin =
      finalize(g, dec, d, 1.0 / 64, 0.0, exact_grafting_oracle);
  int rounds = static_cast<int>(fin.transcript->rounds.size());
  double bound = rounds / 0.5 + 2.0 * 64;

  SUBCASE("zero demands") {
    MultiRouteResult mr = route_grafted_demands(fin, {Demand(g.n(), 0.0)});
    CHECK(mr.congestion == doctest::Approx(0));
  }
  SUBCASE("boundary demand on one cluster stays within the bound") {
    int cluster = -1;
    for (int c = 0; c < fin.clusters.num_blocks(); ++c)
      if (fin.certified[c]) cluster = c;
    REQUIRE(cluster >= 0);
    Demand b(g.n(), 0.0);
    const auto& verts = fin.clusters.block(cluster);
    b[verts[0]] = double(d[verts[0]] + fin.deg_boundary[verts[0]]);
    double spread = b[verts[0]] / (verts.size() - 1);
    for (size_t i = 1; i < verts.size(); ++i) b[verts[i]] = -spread;
    MultiRouteResult mr = route_grafted_demands(fin, {b});
    CHECK(mr.congestion <= bound);
    CHECK(mr.conservation_error[0] <= 1e-6 * double(weight_total(d)));
  }
  SUBCASE("random respecting demands sweep") {
    Rng rng(43);
    std::vector<Demand> demands;
    for (int k = 0; k < 50; ++k) {
      for (int c = 0; c < fin.clusters.num_blocks(); ++c) {
        if (!fin.certified[c]) continue;
        std::vector<double> lim(g.n(), 0.0);
        for (Vertex v : fin.clusters.block(c))
          lim[v] = double(d[v] + fin.deg_boundary[v]);
        Demand b = random_demand(lim, rng);
        if (sum_abs(b) > 0) {
          demands.push_back(b);
          break;
        }
      }
    }
    MultiRouteResult mr = route_grafted_demands(fin, demands);
    CHECK(mr.congestion <= bound);
  }
  SUBCASE("demands on discarded clusters are rejected") {
    CapGraph k4 = complete_graph(4);
    Weighting d4 = k4.degrees();
    DecompositionResult sdec =
        fake_decomposition(k4, {{0}, {1}, {2}, {3}}, d4);
    FinalDecomposition all_discarded =
        finalize(k4, sdec, d4, 1.0 / 64, 0.0, exact_grafting_oracle);
    Demand b(4, 0.0);
    b[0] = 1;
    b[1] = -1;
    CHECK_THROWS_AS(route_grafted_demands(all_discarded, {b}), ContractError);
  }
}

TEST_CASE("boundary source routing") {
  SUBCASE("no boundary means no flow") {
    CapGraph g = complete_graph(8);
    DecompositionResult dec = decompose(g, 0.1, 11);
    FinalDecomposition fin = finalize(g, dec, g.degrees(), 1.0 / 64, 0.0,
                                      exact_grafting_oracle);
    BoundaryRoutingResult br = boundary_source_routing(fin);
    CHECK(br.congestion == doctest::Approx(0));
  }
  SUBCASE("barbell absorbs the bridge within the receive caps") {
    CapGraph g = barbell(4);
    Weighting d = g.degrees();
    DecompositionResult dec = decompose(g, 0.5, 13);
    FinalDecomposition fin =
        finalize(g, dec, d, 1.0 / 64, 0.0, exact_grafting_oracle);
    BoundaryRoutingResult br = boundary_source_routing(fin);
    bool nonzero = false;
    for (Vertex v = 0; v < g.n(); ++v) {
      CHECK(br.received[v] <= double(d[v]) / 4 + 1e-9);
      if (br.sent[v] > 0) nonzero = true;
      int c = fin.cluster_of[v];
      if (c >= 0 && fin.certified[c])
        CHECK(br.sent[v] == doctest::Approx(double(fin.deg_boundary[v])));
    }
    CHECK(nonzero);
    CHECK(br.congestion <= 2.0 / fin.instance.psi + 1e-9);
  }
  SUBCASE("grafting paths cross their cut at most once") {
    CapGraph g = barbell(4);
    DecompositionResult dec = decompose(g, 0.5, 17);
    FinalDecomposition fin = finalize(g, dec, g.degrees(), 1.0 / 64, 0.0,
                                      exact_grafting_oracle);
    for (const Path& p : fin.oracle.paths.paths) {
      int crossings = 0;
      for (size_t i = 0; i + 1 < p.verts.size(); ++i) {
        int a = fin.cluster_of[p.verts[i]];
        int b = fin.cluster_of[p.verts[i + 1]];
        bool ca = a >= 0 && fin.certified[a];
        bool cb = b >= 0 && fin.certified[b];
        if (ca != cb) ++crossings;
      }
      CHECK(crossings <= 1);
    }
  }
}
