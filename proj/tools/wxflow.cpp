// Command line entry points: decompose | hierarchy | maxflow | verify |
// bench.  Reads the DIMACS-like instance format, writes one JSON report.
// Exit codes: 0 ok, 1 contract or verification failure, 2 input error.

#include <chrono>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "wxflow/dimacs.hpp"
#include "wxflow/exact.hpp"
#include "wxflow/hierarchy.hpp"
#include "wxflow/report.hpp"

using namespace wxflow;
using ordered_json = nlohmann::ordered_json;

namespace {

struct RunConfig {
  std::string input;
  std::string output;
  double phi = 0;
  double psi = 1.0 / 64;
  double eps = 0.1;
  double eps1 = 0;
  double eps2 = 1.0 / 16;
  int rounds = 0;
  double x_max = 0;
  uint64_t seed = 1;
  std::string oracle = "exact";
  std::string verify = "off";
  int source = 0;  // 1-based; 0 = unset
  int sink = 0;
  int threads = 0;
  bool timing = false;
  bool pretty = true;
  bool strict_paper = false;
  int bench_iters = 3;
};

class Stopwatch {
 public:
  void lap(const std::string& name) {
    auto now = std::chrono::steady_clock::now();
    laps_.push_back({name, std::chrono::duration<double, std::milli>(
                               now - last_)
                               .count()});
    last_ = now;
  }
  ordered_json json() const {
    ordered_json j = ordered_json::array();
    for (const auto& [name, ms] : laps_) j.push_back({{"phase", name}, {"ms", ms}});
    return j;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
  std::vector<std::pair<std::string, double>> laps_;
};

ordered_json config_json(const RunConfig& rc, const HierarchyConfig& hc,
                         const CutMatchingConfig& cm) {
  return {{"input", rc.input},       {"phi", hc.phi},
          {"psi", hc.psi},           {"eps", rc.eps},
          {"eps1", hc.eps1},         {"eps2", hc.eps2},
          {"rounds", cm.rounds},     {"x_max", cm.x_max},
          {"seed", rc.seed},         {"oracle", rc.oracle},
          {"verify", rc.verify},     {"threads", rc.threads}};
}

ordered_json graph_json(const CapGraph& g) {
  return {{"n", g.n()},
          {"m", g.m()},
          {"max_capacity", g.max_cap()},
          {"total_capacity", g.total_cap()}};
}

void emit(const RunConfig& rc, const ordered_json& j) {
  std::string text = rc.pretty ? j.dump(2) : j.dump();
  text += "\n";
  if (rc.output.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(rc.output, std::ios::binary);
    if (!out) throw InputError("cannot open output file: " + rc.output);
    out << text;
  }
}

struct Check {
  std::string name;
  bool pass;
  std::string detail;
};

ordered_json checks_json(const std::vector<Check>& checks, bool* all_pass) {
  ordered_json arr = ordered_json::array();
  *all_pass = true;
  for (const Check& c : checks) {
    arr.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    if (!c.pass) *all_pass = false;
  }
  return arr;
}

// Shared pipeline: weak decomposition plus grafting.
FinalDecomposition run_decompose(const CapGraph& g, const Weighting& d,
                                 const RunConfig& rc, HierarchyConfig* hc_out,
                                 CutMatchingConfig* cm_out) {
  HierarchyConfig hc;
  hc.phi = rc.phi;
  hc.psi = rc.psi;
  hc.eps1 = rc.eps1;
  hc.eps2 = rc.eps2;
  hc.seed = rc.seed;
  hc.threads = rc.threads;
  hc.strict_paper = rc.strict_paper;
  hc.resolve(g.n(), g.max_cap());

  CutMatchingConfig cm;
  cm.phi = hc.phi;
  cm.eps1 = hc.eps1;
  cm.rounds = rc.rounds;
  cm.x_max = rc.x_max;
  cm.seed = rc.seed;
  cm.threads = rc.threads;
  cm.strict_paper = rc.strict_paper;
  cm.resolve(g.n(), g.max_cap());

  MatchingOracleFn oracle1 = exact_matching_oracle;
  GraftingOracleFn oracle2 = exact_grafting_oracle;
  std::shared_ptr<Hierarchy> helper;
  if (rc.oracle == "sherman") {
    // The pseudo-approximator oracles need a hierarchy to route through;
    // their unsaturated-source filter works at 20000 eps_hat d(A) slack.
    double l2nw = std::max(
        1.0, std::log2(std::max<double>(2.0, double(g.n()) *
                                                 double(g.max_cap()))));
    cm.eps1 = std::max(cm.eps1, 10000.0 / (4.0 * l2nw * l2nw));
    HierarchyConfig pre = hc;
    pre.oracle = HierarchyConfig::OracleBackend::kExact;
    helper = std::make_shared<Hierarchy>(build_hierarchy(g, pre));
    oracle1 = [helper](const MatchingInstance& inst,
                       const CutMatchingState& st) {
      MatchingOracleConfig mc;
      return pseudo_matching_oracle(inst, st, *helper, mc);
    };
    oracle2 = [helper](const GraftingInstance& inst) {
      return gflow_grafting_oracle(inst, *helper, AlmostRouteBackend::kExact);
    };
  }
  DecompositionResult dec = run_decomposition(g, d, cm, oracle1);
  if (hc_out) *hc_out = hc;
  if (cm_out) *cm_out = cm;
  return finalize(g, dec, d, hc.psi, hc.eps2, oracle2);
}

std::vector<Check> verify_decomposition(const CapGraph& g,
                                        const FinalDecomposition& fin,
                                        const CutMatchingConfig& cm,
                                        const RunConfig& rc, bool full) {
  std::vector<Check> checks;
  const Transcript& t = *fin.transcript;
  double dv = static_cast<double>(weight_total(fin.d));
  double l2nw = std::max(1.0, std::log2(std::max<double>(
                                  2.0, double(g.n()) * double(g.max_cap()))));

  // Partition sanity.
  {
    std::vector<char> seen(g.n(), 0);
    bool ok = true;
    for (const auto& b : fin.clusters.blocks())
      for (Vertex v : b) {
        if (seen[v]) ok = false;
        seen[v] = 1;
      }
    for (char c : seen) ok = ok && c;
    checks.push_back({"partition_covers_v", ok, ""});
  }
  // d_T is a 0/d marking.
  {
    bool ok = true;
    for (Vertex v = 0; v < g.n(); ++v)
      ok = ok && (fin.d_t[v] == 0 || fin.d_t[v] == fin.d[v]);
    checks.push_back({"d_final_zero_or_d", ok, ""});
  }
  // Stacked matching congestion against 2t/phi.
  {
    std::vector<double> usage(g.m(), 0.0);
    for (const RoundRecord& r : t.rounds)
      for (const Path& p : r.match_paths.paths) {
        Vertex v = p.start();
        for (EdgeId e : p.edges) {
          usage[e] += p.weight;
          v = g.other(e, v);
        }
      }
    double cong = 0;
    for (EdgeId e = 0; e < g.m(); ++e)
      cong = std::max(cong, usage[e] / double(g.edge(e).cap));
    double bound = 2.0 * t.rounds.size() / cm.phi;
    checks.push_back({"matching_congestion",
                      cong <= bound * (1 + 1e-9) + 1e-9,
                      "measured " + std::to_string(cong) + " bound " +
                          std::to_string(bound)});
  }
  // Deleted demand bound.
  {
    double bound = 64.0 * t.rounds.size() * cm.eps1 * dv + 1e-9;
    checks.push_back({"deleted_demand",
                      static_cast<double>(fin.deleted_mass) <= bound,
                      std::to_string(fin.deleted_mass)});
  }
  // Mixing witness on a few random respecting demands.
  {
    Rng rng(rc.seed ^ 0x5eedULL);
    std::vector<Demand> demands;
    for (int trial = 0; trial < 5; ++trial) {
      for (const auto& block : t.final_blocks) {
        std::vector<Vertex> supp;
        for (Vertex v : block)
          if (t.d_final[v] > 0) supp.push_back(v);
        if (supp.size() < 2) continue;
        Demand b(g.n(), 0.0);
        double pos = 0, neg = 0;
        for (Vertex v : supp) {
          double x = (rng.next_double() * 2 - 1) * double(t.d_final[v]);
          b[v] = x;
          (x > 0 ? pos : neg) += std::abs(x);
        }
        if (pos <= 0 || neg <= 0) continue;
        for (Vertex v : supp)
          if (b[v] > 0) b[v] *= std::min(1.0, neg / pos);
          else b[v] *= std::min(1.0, pos / neg);
        demands.push_back(std::move(b));
        break;
      }
    }
    bool ok = true;
    std::string detail;
    if (!demands.empty()) {
      MultiRouteResult mr = route_respecting_demands(g, t, demands);
      double bound = 4.0 * t.rounds.size() / cm.phi;
      ok = mr.congestion <= bound + 1e-9;
      for (double e : mr.conservation_error) ok = ok && e <= 1e-6 * dv + 1e-9;
      detail = "congestion " + std::to_string(mr.congestion);
    }
    checks.push_back({"mixing_witness", ok, detail});
  }
  if (full) {
    // Brute-force near-expansion of small certified clusters.
    double phi_target = cm.phi / (64.0 * l2nw * l2nw);
    bool ok = true;
    int tested = 0;
    for (int c = 0; c < fin.clusters.num_blocks(); ++c) {
      if (!fin.certified[c]) continue;
      const auto& block = fin.clusters.block(c);
      if (block.size() > 16) continue;
      ++tested;
      if (!brute_near_expander(g, fin.d, block, phi_target)) ok = false;
    }
    checks.push_back({"near_expander_clusters", ok,
                      std::to_string(tested) + " clusters tested"});
  }
  return checks;
}

ordered_json build_decompose_report(const RunConfig& rc, bool as_verify,
                                    bool* pass_out) {
  DimacsInstance inst = parse_dimacs_file(rc.input);
  Stopwatch watch;
  HierarchyConfig hc;
  CutMatchingConfig cm;
  FinalDecomposition fin = run_decompose(inst.graph, inst.weights, rc, &hc, &cm);
  watch.lap("decompose");

  ordered_json j;
  j["format"] = 1;
  j["command"] = as_verify ? "verify.decompose" : "decompose";
  j["config"] = config_json(rc, hc, cm);
  j["graph"] = graph_json(inst.graph);
  j["result"] = ordered_json::parse(serialize_decomposition(fin));
  double dv = static_cast<double>(weight_total(fin.d));
  double l2nw = std::max(1.0, std::log2(std::max<double>(
                                  2.0, double(inst.graph.n()) *
                                           double(inst.graph.max_cap()))));
  double denom = (hc.phi * l2nw + hc.eps1 * cm.rounds) * dv;
  j["certificates"] = {
      {"cut_capacity", fin.cut_capacity},
      {"deleted_demand", fin.deleted_mass},
      {"discarded_demand", fin.discarded_mass},
      {"fitted_c1", denom > 0 ? double(fin.cut_capacity) / denom : 0.0},
      {"fitted_c2",
       denom > 0 ? double(fin.deleted_mass + fin.discarded_mass) / denom : 0.0},
  };

  bool pass = true;
  if (rc.verify != "off" || as_verify) {
    std::vector<Check> checks = verify_decomposition(
        inst.graph, fin, cm, rc, rc.verify == "full-oracle" || as_verify);
    j["verify"] = {{"checks", checks_json(checks, &pass)}, {"passed", pass}};
    watch.lap("verify");
  }
  if (rc.timing) j["timing"] = watch.json();
  *pass_out = pass;
  return j;
}

int cmd_decompose(const RunConfig& rc) {
  bool pass = true;
  ordered_json j = build_decompose_report(rc, false, &pass);
  emit(rc, j);
  return pass ? 0 : 1;
}

ordered_json build_hierarchy_report(const RunConfig& rc, bool as_verify,
                                    bool* pass_out) {
  DimacsInstance inst = parse_dimacs_file(rc.input);
  Stopwatch watch;
  HierarchyConfig hc;
  hc.phi = rc.phi;
  hc.psi = rc.psi;
  hc.eps1 = rc.eps1;
  hc.eps2 = rc.eps2;
  hc.seed = rc.seed;
  hc.threads = rc.threads;
  hc.strict_paper = rc.strict_paper;
  hc.cm_rounds = rc.rounds;
  hc.cm_x_max = rc.x_max;
  hc.oracle = rc.oracle == "sherman"
                  ? HierarchyConfig::OracleBackend::kSherman
                  : HierarchyConfig::OracleBackend::kExact;
  Hierarchy h = build_hierarchy(inst.graph, hc);
  watch.lap("hierarchy");

  CutMatchingConfig cm;
  cm.phi = h.cfg.phi;
  cm.resolve(inst.graph.n(), inst.graph.max_cap());

  ordered_json j;
  j["format"] = 1;
  j["command"] = as_verify ? "verify.hierarchy" : "hierarchy";
  j["config"] = config_json(rc, h.cfg, cm);
  j["graph"] = graph_json(inst.graph);
  j["result"] = ordered_json::parse(serialize_hierarchy(h));

  bool pass = true;
  if (rc.verify != "off" || as_verify) {
    std::vector<Check> checks;
    // Halving at every level.
    {
      bool ok = true;
      for (size_t i = 1; i < h.levels.size(); ++i)
        ok = ok && 2 * h.levels[i].delta_p_bar <= h.levels[i - 1].delta_p_bar;
      checks.push_back({"delta_halving", ok, ""});
    }
    // Soundness and completeness on random zero-sum demands.
    {
      Rng rng(rc.seed ^ 0xab1eULL);
      bool sound = true, complete = true;
      int trials = rc.verify == "full-oracle" || as_verify ? 10 : 3;
      for (int trial = 0; trial < trials; ++trial) {
        Demand b(inst.graph.n(), 0.0);
        double mean = 0;
        for (double& x : b) {
          x = rng.next_gaussian();
          mean += x;
        }
        mean /= inst.graph.n();
        for (double& x : b) x -= mean;
        double est = h.estimate_congestion(b);
        MinCongestionResult opt = min_congestion_route(inst.graph, b);
        if (!opt.feasible) continue;
        if (est > opt.congestion * (1 + 1e-6) + 1e-9) sound = false;
        if (opt.congestion > h.quality() * est * (1 + 1e-6) + 1e-9)
          complete = false;
      }
      checks.push_back({"soundness", sound, ""});
      checks.push_back({"completeness", complete, ""});
      watch.lap("verify");
    }
    j["verify"] = {{"checks", checks_json(checks, &pass)}, {"passed", pass}};
  }
  if (rc.timing) j["timing"] = watch.json();
  *pass_out = pass;
  return j;
}

int cmd_hierarchy(const RunConfig& rc) {
  bool pass = true;
  ordered_json j = build_hierarchy_report(rc, false, &pass);
  emit(rc, j);
  return pass ? 0 : 1;
}

int cmd_verify(const RunConfig& rc) {
  RunConfig v = rc;
  v.verify = "full-oracle";
  bool pass_dec = true, pass_hier = true;
  ordered_json dec = build_decompose_report(v, true, &pass_dec);
  ordered_json hier = build_hierarchy_report(v, true, &pass_hier);
  ordered_json j;
  j["format"] = 1;
  j["command"] = "verify";
  j["decompose"] = dec;
  j["hierarchy"] = hier;
  j["passed"] = pass_dec && pass_hier;
  emit(rc, j);
  return pass_dec && pass_hier ? 0 : 1;
}

int cmd_maxflow(const RunConfig& rc) {
  DimacsInstance inst = parse_dimacs_file(rc.input);
  Vertex s = rc.source - 1, t = rc.sink - 1;
  if (rc.source == 0 || rc.sink == 0) {
    if (!inst.has_demands)
      throw InputError("maxflow needs --source/--sink or demand lines");
    double best_pos = 0, best_neg = 0;
    for (Vertex v = 0; v < inst.graph.n(); ++v) {
      if (inst.demands[v] > best_pos) {
        best_pos = inst.demands[v];
        s = v;
      }
      if (inst.demands[v] < best_neg) {
        best_neg = inst.demands[v];
        t = v;
      }
    }
    if (s < 0 || t < 0) throw InputError("demand lines define no source/sink");
  }
  Stopwatch watch;
  HierarchyConfig hc;
  hc.seed = rc.seed;
  hc.threads = rc.threads;
  Hierarchy h = build_hierarchy(inst.graph, hc);
  watch.lap("hierarchy");
  ApproxMaxFlowResult mf =
      approx_max_flow(inst.graph, s, t, rc.eps, h,
                      rc.oracle == "sherman" ? AlmostRouteBackend::kSherman
                                             : AlmostRouteBackend::kExact);
  watch.lap("maxflow");

  CutMatchingConfig cm;
  cm.phi = h.cfg.phi;
  cm.resolve(inst.graph.n(), inst.graph.max_cap());

  ordered_json j;
  j["format"] = 1;
  j["command"] = "maxflow";
  j["config"] = config_json(rc, h.cfg, cm);
  j["graph"] = graph_json(inst.graph);
  j["result"] = {{"source", s + 1},
                 {"sink", t + 1},
                 {"eps", rc.eps},
                 {"value", mf.value},
                 {"congestion", mf.congestion},
                 {"almost_route_calls", mf.almost_route_calls}};
  bool pass = true;
  if (rc.verify != "off") {
    FlowNet net = scale_graph(inst.graph, 1.0);
    FlowProblem prob;
    prob.net = &net;
    prob.source.assign(inst.graph.n(), 0.0);
    prob.sink.assign(inst.graph.n(), 0.0);
    prob.source[s] = static_cast<double>(inst.graph.degree(s));
    prob.sink[t] = static_cast<double>(inst.graph.degree(t));
    double exact = exact_max_flow(prob).value;
    pass = mf.value >= (1 - rc.eps) * exact - 1e-9 &&
           mf.congestion <= 1 + 1e-9;
    j["verify"] = {{"exact_value", exact},
                   {"ratio", exact > 0 ? mf.value / exact : 1.0},
                   {"passed", pass}};
    watch.lap("verify");
  }
  if (rc.timing) j["timing"] = watch.json();
  emit(rc, j);
  return pass ? 0 : 1;
}

int cmd_bench(const RunConfig& rc) {
  DimacsInstance inst = parse_dimacs_file(rc.input);
  ordered_json runs = ordered_json::array();
  for (int it = 0; it < rc.bench_iters; ++it) {
    Stopwatch watch;
    RunConfig local = rc;
    local.seed = rc.seed + it;
    HierarchyConfig hc;
    CutMatchingConfig cm;
    FinalDecomposition fin =
        run_decompose(inst.graph, inst.weights, local, &hc, &cm);
    watch.lap("decompose");
    HierarchyConfig hcfg;
    hcfg.seed = local.seed;
    Hierarchy h = build_hierarchy(inst.graph, hcfg);
    watch.lap("hierarchy");
    runs.push_back({{"iteration", it},
                    {"clusters", fin.clusters.num_blocks()},
                    {"levels", h.depth()},
                    {"phases", watch.json()}});
  }
  ordered_json j;
  j["format"] = 1;
  j["command"] = "bench";
  j["graph"] = graph_json(inst.graph);
  j["runs"] = runs;
  emit(rc, j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weak expander decomposition / congestion approximator toolkit"};
  app.require_subcommand(1);
  RunConfig rc;

  auto add_common = [&rc](CLI::App* sub) {
    sub->add_option("input", rc.input, "instance file")->required();
    sub->add_option("-o,--output", rc.output, "report file (default stdout)");
    sub->add_option("--phi", rc.phi, "expansion target (0 = default)");
    sub->add_option("--psi", rc.psi, "grafting expansion parameter");
    sub->add_option("--eps", rc.eps, "approximation epsilon");
    sub->add_option("--eps1", rc.eps1, "matching oracle slack");
    sub->add_option("--eps2", rc.eps2, "grafting oracle slack");
    sub->add_option("--rounds", rc.rounds, "cut-matching round budget");
    sub->add_option("--x-max", rc.x_max, "counter threshold");
    sub->add_option("--seed", rc.seed, "rng seed");
    sub->add_option("--oracle", rc.oracle, "oracle backend: exact | sherman")
        ->check(CLI::IsMember({"exact", "sherman"}));
    sub->add_option("--verify", rc.verify,
                    "verification level: off | invariants | full-oracle")
        ->check(CLI::IsMember({"off", "invariants", "full-oracle"}));
    sub->add_option("--threads", rc.threads, "worker threads (0 = serial)");
    sub->add_flag("--strict-paper", rc.strict_paper,
                  "paper-sized constants (impractical round budgets)");
    sub->add_flag("--timing", rc.timing, "include timing in the report");
    sub->add_flag("!--compact", rc.pretty, "compact JSON output");
  };

  CLI::App* dec = app.add_subcommand("decompose", "weak expander decomposition");
  add_common(dec);
  CLI::App* hier = app.add_subcommand("hierarchy", "congestion-approximator");
  add_common(hier);
  CLI::App* mf = app.add_subcommand("maxflow", "(1-eps)-approximate max flow");
  add_common(mf);
  mf->add_option("--source", rc.source, "source vertex (1-based)");
  mf->add_option("--sink", rc.sink, "sink vertex (1-based)");
  CLI::App* ver = app.add_subcommand("verify", "full verification run");
  add_common(ver);
  CLI::App* bench = app.add_subcommand("bench", "timing runs");
  add_common(bench);
  bench->add_option("--iters", rc.bench_iters, "bench iterations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(dec)) return cmd_decompose(rc);
    if (app.got_subcommand(hier)) return cmd_hierarchy(rc);
    if (app.got_subcommand(mf)) return cmd_maxflow(rc);
    if (app.got_subcommand(bench)) return cmd_bench(rc);
    if (app.got_subcommand(ver)) return cmd_verify(rc);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const UnconvergedError& e) {
    std::cerr << "unconverged: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
