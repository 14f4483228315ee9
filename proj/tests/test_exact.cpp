#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "wxflow/exact.hpp"

using namespace wxflow;
using namespace wxflow::fixtures;

namespace {

FlowProblem st_problem(const FlowNet& net, Vertex s, Vertex t, double amount) {
  FlowProblem prob;
  prob.net = &net;
  prob.source.assign(net.n(), 0.0);
  prob.sink.assign(net.n(), 0.0);
  prob.source[s] = amount;
  prob.sink[t] = amount;
  return prob;
}

}  // namespace

TEST_CASE("exact max flow") {
  SUBCASE("single edge") {
    CapGraph g(2, {{0, 1, 5}});
    FlowNet net = scale_graph(g, 1.0);
    FlowProblem prob = st_problem(net, 0, 1, 5);
    MaxFlowResult r = exact_max_flow(prob);
    CHECK(r.value == doctest::Approx(5));
  }
  SUBCASE("bottleneck on a path") {
    CapGraph g = path_graph({3, 1, 2});
    FlowNet net = scale_graph(g, 1.0);
    FlowProblem prob = st_problem(net, 0, 3, 100);
    CHECK(exact_max_flow(prob).value == doctest::Approx(1));
  }
  SUBCASE("K4 routes 3 units") {
    CapGraph g = complete_graph(4);
    FlowNet net = scale_graph(g, 1.0);
    FlowProblem prob = st_problem(net, 0, 3, 3);
    CHECK(exact_max_flow(prob).value == doctest::Approx(3));
  }
  SUBCASE("strong duality on random integral instances") {
    Rng rng(41);
    for (int trial = 0; trial < 20; ++trial) {
      CapGraph g = random_connected(12, 16, 6, rng);
      FlowNet net = scale_graph(g, 1.0);
      Vertex s = rng.next_below(g.n()), t = rng.next_below(g.n());
      if (s == t) continue;
      FlowProblem prob =
          st_problem(net, s, t, static_cast<double>(g.degree(s) + 1));
      MaxFlowResult r = exact_max_flow(prob);
      CHECK(r.value == doctest::Approx(cut_value(prob, r.mincut_side)));
      // The flow is feasible and conserving away from terminals.
      CHECK(net.congestion(r.flow) <= 1 + 1e-9);
      for (Vertex v = 0; v < g.n(); ++v) {
        if (v == s || v == t) continue;
        CHECK(net.net_flow(r.flow, v) == doctest::Approx(0.0).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("min congestion routing") {
  SUBCASE("zero demand") {
    CapGraph g = path_graph(3);
    MinCongestionResult r = min_congestion_route(g, Demand(3, 0.0));
    CHECK(r.congestion == doctest::Approx(0));
  }
  SUBCASE("unit demand across a unit edge") {
    CapGraph g(2, {{0, 1, 1}});
    Demand b{1.0, -1.0};
    CHECK(min_congestion_route(g, b).congestion ==
          doctest::Approx(1).epsilon(1e-6));
  }
  SUBCASE("barbell bridge is the bottleneck") {
    CapGraph g = barbell(3);
    Demand b(6, 0.0);
    b[0] = 1;
    b[5] = -1;
    MinCongestionResult one = min_congestion_route(g, b);
    CHECK(one.congestion == doctest::Approx(1).epsilon(1e-6));
    // The witness flow routes b within the claimed congestion.
    std::vector<double> nets = net_flows(g, one.flow);
    for (Vertex v = 0; v < 6; ++v)
      CHECK(-nets[v] == doctest::Approx(b[v]).epsilon(1e-6));
    CHECK(congestion(g, one.flow) <= one.congestion * (1 + 1e-6));
    b[0] = 2;
    b[5] = -2;
    CHECK(min_congestion_route(g, b).congestion ==
          doctest::Approx(2).epsilon(1e-6));
  }
  SUBCASE("demand split across components is infeasible") {
    CapGraph g(4, {{0, 1, 1}, {2, 3, 1}});
    Demand b{1.0, 0.0, 0.0, -1.0};
    CHECK_FALSE(min_congestion_route(g, b).feasible);
  }
}

TEST_CASE("brute near expander") {
  CapGraph bb = barbell(3);
  Weighting deg = bb.degrees();
  SUBCASE("singleton is vacuous") {
    CHECK(brute_near_expander(bb, deg, {0}, 100.0));
  }
  SUBCASE("triangle inside the barbell at phi 0.2") {
    CHECK(brute_near_expander(bb, deg, {0, 1, 2}, 0.2));
  }
  SUBCASE("whole barbell fails at phi 0.2 via the bridge") {
    std::vector<Vertex> all{0, 1, 2, 3, 4, 5};
    CHECK_FALSE(brute_near_expander(bb, deg, all, 0.2));
  }
  SUBCASE("refuses oversized sets") {
    CapGraph big = complete_graph(22);
    std::vector<Vertex> all(22);
    for (int i = 0; i < 22; ++i) all[i] = i;
    CHECK_THROWS_AS(brute_near_expander(big, big.degrees(), all, 0.1),
                    SizeError);
  }
}

TEST_CASE("brute progress set") {
  SUBCASE("two equal values") {
    ProgressSetResult r = brute_progress_set({{2.5, 2}});
    CHECK(r.ok);
    CHECK(r.eta == doctest::Approx(2.5));
  }
  SUBCASE("seven zeros and one ten") {
    ProgressSetResult r = brute_progress_set({{0.0, 7}, {10.0, 1}});
    CHECK(r.ok);
    CHECK(r.left_is_high);
    REQUIRE(r.left.size() == 1);
    CHECK(r.left[0].first == doctest::Approx(10.0));
    CHECK(r.left[0].second == 1);
    CHECK(r.cert == r.left);
    // Heavy element carries 76.56 of the 87.5 total variance.
    double total = 0;
    for (auto [v, m] : WeightedMultiset{{0.0, 7}, {10.0, 1}})
      total += m * (v - 1.25) * (v - 1.25);
    CHECK(total == doctest::Approx(87.5));
  }
  SUBCASE("two balanced near clusters still certify") {
    // The exact-eighth block pins eta inside a cluster; the construction
    // must walk the threshold out to the cluster boundary.
    ProgressSetResult r = brute_progress_set({{0.0, 7}, {1.0, 7}});
    CHECK(r.ok);
  }
  SUBCASE("uniform values certify") {
    WeightedMultiset x;
    for (int i = 0; i < 16; ++i) x.push_back({-1000.0 + 125.0 * i, 1});
    CHECK(brute_progress_set(x).ok);
  }
  SUBCASE("randomized sweep") {
    Rng rng(47);
    for (int trial = 0; trial < 1000; ++trial) {
      WeightedMultiset x;
      Cap total = 0;
      int kind = trial % 3;
      Cap target = 2 + rng.next_below(63);
      while (total < target) {
        double v;
        Cap m = 1;
        if (kind == 0) {
          v = (rng.next_double() * 2 - 1) * 1000;
        } else if (kind == 1) {
          v = static_cast<double>(rng.next_below(7)) - 3;
          m = 1 + static_cast<Cap>(rng.next_below(5));
        } else {
          v = (rng.next_below(2) ? 1.0 : -1.0) +
              rng.next_double() * 1e-6;
          m = 1 + static_cast<Cap>(rng.next_below(8));
        }
        m = std::min(m, target - total);
        x.push_back({v, m});
        total += m;
      }
      ProgressSetResult r = brute_progress_set(x);
      CHECK(r.ok);
      // Re-verify both conditions by direct summation.
      double mean = 0;
      Cap n = 0;
      for (auto [v, m] : x) {
        mean += static_cast<double>(m) * v;
        n += m;
      }
      mean /= static_cast<double>(n);
      double tv = 0;
      for (auto [v, m] : x) tv += m * (v - mean) * (v - mean);
      double certv = 0;
      for (auto [v, m] : r.cert) {
        CHECK((v - r.eta) * (v - r.eta) + 1e-9 * std::max(1.0, tv) >=
              (v - mean) * (v - mean) / 9);
        certv += m * (v - mean) * (v - mean);
      }
      CHECK(certv + 1e-9 * tv >= tv / 36);
    }
  }
}

TEST_CASE("approximator quality") {
  SUBCASE("all cuts are an exact approximator") {
    Rng rng(53);
    CapGraph g = random_connected(7, 8, 3, rng);
    std::vector<std::vector<Vertex>> family;
    for (uint32_t mask = 1; mask + 1 < (1u << g.n()); ++mask) {
      std::vector<Vertex> s;
      for (Vertex v = 0; v < g.n(); ++v)
        if (mask & (1u << v)) s.push_back(v);
      family.push_back(s);
    }
    QualityResult q = approximator_quality(g, family, 10, 1);
    CHECK(q.max_ratio == doctest::Approx(1).epsilon(1e-5));
    CHECK(q.min_ratio == doctest::Approx(1).epsilon(1e-5));
  }
  SUBCASE("empty family estimates nothing") {
    CapGraph g = path_graph(3);
    QualityResult q = approximator_quality(g, {}, 5, 1);
    CHECK(q.infinite);
  }
  SUBCASE("singleton family on K2") {
    CapGraph g = complete_graph(2);
    QualityResult q = approximator_quality(g, {{0}}, 5, 1);
    CHECK(q.max_ratio == doctest::Approx(1).epsilon(1e-6));
  }
  SUBCASE("any laminar family is sound") {
    Rng rng(59);
    for (int trial = 0; trial < 10; ++trial) {
      CapGraph g = random_connected(10, 12, 4, rng);
      std::vector<Vertex> ground;
      for (Vertex v = 0; v < g.n() - 1; ++v) ground.push_back(v);
      auto family = random_laminar(ground, rng);
      Demand b = random_demand(
          std::vector<double>(g.n(), 3.0), rng);
      double est = 0;
      for (const auto& c : family) {
        Cap delta = cut_of_set(g, c).capacity;
        if (delta > 0)
          est = std::max(est, std::abs(demand_of(b, c)) / delta);
      }
      MinCongestionResult opt = min_congestion_route(g, b);
      if (opt.feasible)
        CHECK(est <= opt.congestion * (1 + 1e-6) + 1e-9);
    }
  }
}
