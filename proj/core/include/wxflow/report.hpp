#pragma once

#include <string>

#include "wxflow/cutmatch.hpp"
#include "wxflow/grafting.hpp"
#include "wxflow/hierarchy.hpp"

namespace wxflow {

// Versioned JSON records ("format": 1).  Serialization is deterministic:
// fixed key order, vertex lists sorted, no environment-dependent fields.

// Matchings as COO triples with the oracle certificates inline.
std::string serialize_transcript(const Transcript& t, int indent = -1);

// Clusters with provenance, certificates, and the surviving weighting.
std::string serialize_decomposition(const FinalDecomposition& fin,
                                    int indent = -1);

// Levels, blocks, the laminar family (with parent nesting), delta values
// and the measured quality certificate.
std::string serialize_hierarchy(const Hierarchy& h, int indent = -1);

}  // namespace wxflow
