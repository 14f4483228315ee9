#pragma once

#include <iosfwd>
#include <string>

#include "wxflow/graph.hpp"

namespace wxflow {

/**
   Text instance format:
     c <comment>
     p gr <n> <m>
     a <u> <v> <cap>     edge, 1-based endpoints, integer capacity
     w <v> <d>           optional vertex weight (default: weighted degree)
     b <v> <val>         optional demand entry
 */
struct DimacsInstance {
  CapGraph graph;
  Weighting weights;
  bool has_weights = false;
  Demand demands;
  bool has_demands = false;
};

DimacsInstance parse_dimacs(std::istream& in);
DimacsInstance parse_dimacs_file(const std::string& path);

std::string write_dimacs(const DimacsInstance& inst);

}  // namespace wxflow
