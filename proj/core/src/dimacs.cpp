#include "wxflow/dimacs.hpp"

#include <fstream>
#include <sstream>

namespace wxflow {

DimacsInstance parse_dimacs(std::istream& in) {
  DimacsInstance inst;
  std::string line;
  int n = -1;
  long long m_declared = -1;
  std::vector<CapEdge> edges;
  std::vector<std::pair<Vertex, Cap>> weights;
  std::vector<std::pair<Vertex, double>> demands;
  int lineno = 0;

  auto fail = [&](const std::string& why) {
    throw InputError("line " + std::to_string(lineno) + ": " + why);
  };

  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "c") continue;
    if (tag == "p") {
      std::string kind;
      if (!(ls >> kind >> n >> m_declared) || kind != "gr")
        fail("expected 'p gr <n> <m>'");
      if (n < 0) fail("negative vertex count");
    } else if (tag == "a") {
      long long u, v, cap;
      if (!(ls >> u >> v >> cap)) fail("expected 'a <u> <v> <cap>'");
      if (n < 0) fail("'a' line before the problem line");
      if (u < 1 || u > n || v < 1 || v > n) fail("edge endpoint out of range");
      edges.push_back({static_cast<Vertex>(u - 1), static_cast<Vertex>(v - 1),
                       static_cast<Cap>(cap)});
    } else if (tag == "w") {
      long long v, d;
      if (!(ls >> v >> d)) fail("expected 'w <v> <d>'");
      if (n < 0 || v < 1 || v > n) fail("weight vertex out of range");
      if (d < 0) fail("negative vertex weight");
      weights.push_back({static_cast<Vertex>(v - 1), static_cast<Cap>(d)});
    } else if (tag == "b") {
      long long v;
      double val;
      if (!(ls >> v >> val)) fail("expected 'b <v> <val>'");
      if (n < 0 || v < 1 || v > n) fail("demand vertex out of range");
      demands.push_back({static_cast<Vertex>(v - 1), val});
    } else {
      fail("unknown line tag '" + tag + "'");
    }
  }
  if (n < 0) throw InputError("missing problem line 'p gr <n> <m>'");
  if (m_declared >= 0 && m_declared != static_cast<long long>(edges.size()))
    throw InputError("edge count mismatch: declared " +
                     std::to_string(m_declared) + ", found " +
                     std::to_string(edges.size()));

  inst.graph = CapGraph(n, edges);
  inst.weights = inst.graph.degrees();
  for (auto [v, d] : weights) {
    inst.weights[v] = d;
    inst.has_weights = true;
  }
  inst.demands.assign(n, 0.0);
  for (auto [v, val] : demands) {
    inst.demands[v] += val;
    inst.has_demands = true;
  }
  return inst;
}

DimacsInstance parse_dimacs_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open input file: " + path);
  return parse_dimacs(in);
}

std::string write_dimacs(const DimacsInstance& inst) {
  std::ostringstream out;
  out << "p gr " << inst.graph.n() << " " << inst.graph.m() << "\n";
  for (const CapEdge& e : inst.graph.edges())
    out << "a " << e.u + 1 << " " << e.v + 1 << " " << e.cap << "\n";
  if (inst.has_weights)
    for (Vertex v = 0; v < inst.graph.n(); ++v)
      out << "w " << v + 1 << " " << inst.weights[v] << "\n";
  if (inst.has_demands)
    for (Vertex v = 0; v < inst.graph.n(); ++v)
      if (inst.demands[v] != 0)
        out << "b " << v + 1 << " " << inst.demands[v] << "\n";
  return out.str();
}

}  // namespace wxflow
