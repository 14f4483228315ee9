#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"
#include "wxflow/dimacs.hpp"
#include "wxflow/grafting.hpp"
#include "wxflow/hierarchy.hpp"
#include "wxflow/report.hpp"

using namespace wxflow;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

const char* kBarbell =
    "c two K4 cliques and a bridge\n"
    "p gr 8 13\n"
    "a 1 2 1\na 1 3 1\na 1 4 1\na 2 3 1\na 2 4 1\na 3 4 1\n"
    "a 5 6 1\na 5 7 1\na 5 8 1\na 6 7 1\na 6 8 1\na 7 8 1\n"
    "a 4 5 1\n";

}  // namespace

TEST_CASE("instance parser") {
  SUBCASE("round trip") {
    std::istringstream in(kBarbell);
    DimacsInstance inst = parse_dimacs(in);
    CHECK(inst.graph.n() == 8);
    CHECK(inst.graph.m() == 13);
    CHECK_FALSE(inst.has_weights);
    std::istringstream again(write_dimacs(inst));
    DimacsInstance inst2 = parse_dimacs(again);
    CHECK(inst2.graph.m() == inst.graph.m());
  }
  SUBCASE("weights and demands") {
    std::istringstream in(
        "p gr 2 1\na 1 2 3\nw 1 7\nb 1 2.5\nb 2 -2.5\n");
    DimacsInstance inst = parse_dimacs(in);
    CHECK(inst.has_weights);
    CHECK(inst.weights[0] == 7);
    CHECK(inst.weights[1] == 3);  // defaulted to the weighted degree
    CHECK(inst.has_demands);
    CHECK(inst.demands[0] == doctest::Approx(2.5));
  }
  SUBCASE("malformed lines are input errors") {
    std::istringstream bad1("p gr 2 1\na 1 5 1\n");
    CHECK_THROWS_AS(parse_dimacs(bad1), InputError);
    std::istringstream bad2("a 1 2 1\n");
    CHECK_THROWS_AS(parse_dimacs(bad2), InputError);
    std::istringstream bad3("p gr 2 2\na 1 2 1\n");
    CHECK_THROWS_AS(parse_dimacs(bad3), InputError);
    std::istringstream bad4("p gr 2 1\nz 1 2\n");
    CHECK_THROWS_AS(parse_dimacs(bad4), InputError);
  }
}

TEST_CASE("serializers emit versioned, well-formed records") {
  using wxflow::fixtures::barbell;
  CapGraph g = barbell(4);
  Weighting d = g.degrees();
  CutMatchingConfig cfg;
  cfg.phi = 0.5;
  cfg.seed = 3;
  DecompositionResult dec =
      run_decomposition(g, d, cfg, exact_matching_oracle);
  FinalDecomposition fin =
      finalize(g, dec, d, 1.0 / 64, 0.0, exact_grafting_oracle);
  HierarchyConfig hc;
  hc.seed = 3;
  Hierarchy h = build_hierarchy(g, hc);

  auto t = nlohmann::json::parse(serialize_transcript(*dec.transcript));
  CHECK(t["format"] == 1);
  CHECK(t["rounds"].size() == dec.transcript->rounds.size());
  CHECK(t["rounds"][0].contains("matching"));
  CHECK(t["rounds"][0].contains("certs"));

  auto dj = nlohmann::json::parse(serialize_decomposition(fin));
  CHECK(dj["format"] == 1);
  CHECK(dj["clusters"].size() == size_t(fin.clusters.num_blocks()));
  CHECK(dj["certificates"].contains("cut_capacity"));

  auto hj = nlohmann::json::parse(serialize_hierarchy(h));
  CHECK(hj["format"] == 1);
  CHECK(hj["levels"].size() == size_t(h.depth()));
  CHECK(hj["family"].size() == h.family().sets.size());
  CHECK(hj["quality"].contains("quality"));
  // Laminar nesting: every non-root parent strictly contains its child.
  for (size_t i = 0; i < hj["family"].size(); ++i) {
    int par = hj["family"][i]["parent"];
    if (par >= 0)
      CHECK(hj["family"][par]["vertices"].size() >
            hj["family"][i]["vertices"].size());
  }
}

#ifdef WXFLOW_CLI_PATH
TEST_CASE("command line reports") {
  std::string dir = "/tmp/wxflow_cli_test";
  std::system(("mkdir -p " + dir).c_str());
  std::string input = dir + "/barbell.gr";
  write_file(input, kBarbell);
  std::string cli = WXFLOW_CLI_PATH;

  SUBCASE("same seed gives byte-identical reports") {
    for (const std::string& sub : {std::string("decompose"),
                                   std::string("hierarchy")}) {
      std::string a = dir + "/a.json", b = dir + "/b.json";
      std::string cmd = cli + " " + sub + " " + input +
                        " --phi 0.5 --seed 42 -o ";
      REQUIRE(std::system((cmd + a).c_str()) == 0);
      REQUIRE(std::system((cmd + b).c_str()) == 0);
      std::string ja = slurp(a), jb = slurp(b);
      CHECK(!ja.empty());
      CHECK(ja == jb);
    }
  }
  SUBCASE("different seeds still verify") {
    std::string out = dir + "/c.json";
    int rc = std::system((cli + " decompose " + input +
                          " --phi 0.5 --seed 7 --verify full-oracle -o " + out)
                             .c_str());
    CHECK(rc == 0);
    CHECK(slurp(out).find("\"passed\": true") != std::string::npos);
  }
  SUBCASE("maxflow verifies against the exact value") {
    std::string out = dir + "/mf.json";
    int rc = std::system((cli + " maxflow " + input +
                          " --source 1 --sink 8 --eps 0.1 "
                          "--verify invariants -o " + out)
                             .c_str());
    CHECK(rc == 0);
    std::string j = slurp(out);
    CHECK(j.find("\"exact_value\": 1.0") != std::string::npos);
    CHECK(j.find("\"passed\": true") != std::string::npos);
  }
  SUBCASE("maxflow picks terminals from demand lines") {
    std::string bfile = dir + "/bdemand.gr";
    write_file(bfile, std::string(kBarbell) + "b 1 5\nb 8 -5\n");
    std::string out = dir + "/mfb.json";
    int rc = std::system((cli + " maxflow " + bfile +
                          " --eps 0.1 --verify invariants -o " + out)
                             .c_str());
    CHECK(rc == 0);
    CHECK(slurp(out).find("\"passed\": true") != std::string::npos);
  }
  SUBCASE("malformed input exits with code 2") {
    std::string badfile = dir + "/bad.gr";
    write_file(badfile, "p gr 2 1\na 1 9 1\n");
    int rc = std::system(
        (cli + " decompose " + badfile + " -o /dev/null 2>/dev/null").c_str());
    CHECK(WEXITSTATUS(rc) == 2);
  }
}
#endif
