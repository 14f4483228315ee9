#include "wxflow/report.hpp"

#include <algorithm>

#include "json.hpp"

namespace wxflow {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json blocks_json(const std::vector<std::vector<Vertex>>& blocks) {
  ordered_json arr = ordered_json::array();
  for (const auto& b : blocks) {
    std::vector<Vertex> s = b;
    std::sort(s.begin(), s.end());
    arr.push_back(s);
  }
  return arr;
}

}  // namespace

std::string serialize_transcript(const Transcript& t, int indent) {
  ordered_json j;
  j["format"] = 1;
  j["kind"] = "cut_matching_transcript";
  j["config"] = {{"phi", t.cfg.phi},
                 {"eps1", t.cfg.eps1},
                 {"rounds", t.cfg.rounds},
                 {"x_max", t.cfg.x_max},
                 {"seed", t.cfg.seed}};
  j["d"] = t.d;
  ordered_json rounds = ordered_json::array();
  for (const RoundRecord& r : t.rounds) {
    ordered_json jr;
    jr["round"] = r.round;
    ordered_json coo = ordered_json::array();
    for (const auto& e : r.matching) coo.push_back({e.u, e.v, e.w});
    jr["matching"] = coo;
    ordered_json certs = ordered_json::array();
    for (const auto& c : r.certs) {
      std::vector<Vertex> cut = c.cut;
      std::sort(cut.begin(), cut.end());
      certs.push_back({{"comp", c.comp_id},
                       {"covered", c.covered},
                       {"cut", cut},
                       {"cut_cap", c.cut_cap},
                       {"routed", c.routed},
                       {"delta_target", c.delta_target},
                       {"d_cut", c.d_cut},
                       {"d_comp", c.d_comp}});
    }
    jr["certs"] = certs;
    jr["covered_weight"] = r.covered_weight;
    jr["active_weight"] = r.active_weight;
    rounds.push_back(jr);
  }
  j["rounds"] = rounds;
  j["final_blocks"] = blocks_json(t.final_blocks);
  j["d_final"] = t.d_final;
  return indent >= 0 ? j.dump(indent) : j.dump();
}

std::string serialize_decomposition(const FinalDecomposition& fin,
                                    int indent) {
  ordered_json j;
  j["format"] = 1;
  j["kind"] = "weak_expander_decomposition";
  ordered_json clusters = ordered_json::array();
  for (int c = 0; c < fin.clusters.num_blocks(); ++c) {
    std::vector<Vertex> verts = fin.clusters.block(c);
    std::sort(verts.begin(), verts.end());
    clusters.push_back({{"vertices", verts},
                        {"certified", static_cast<bool>(fin.certified[c])},
                        {"from_block", fin.from_block[c]}});
  }
  j["clusters"] = clusters;
  j["certificates"] = {
      {"cut_capacity_pre_graft", fin.cut_capacity_t},
      {"cut_capacity", fin.cut_capacity},
      {"deleted_demand", fin.deleted_mass},
      {"discarded_demand", fin.discarded_mass},
      {"d_total", weight_total(fin.d)},
  };
  j["d"] = fin.d;
  j["d_final"] = fin.d_t;
  return indent >= 0 ? j.dump(indent) : j.dump();
}

std::string serialize_hierarchy(const Hierarchy& h, int indent) {
  ordered_json j;
  j["format"] = 1;
  j["kind"] = "congestion_approximator_hierarchy";
  ordered_json levels = ordered_json::array();
  for (const HierarchyLevel& lv : h.levels) {
    ordered_json jl;
    jl["index"] = lv.index;
    jl["delta"] = lv.delta_p_bar;
    std::vector<Vertex> vi;
    for (Vertex v = 0; v < static_cast<Vertex>(lv.in_vi.size()); ++v)
      if (lv.in_vi[v]) vi.push_back(v);
    jl["v_i"] = vi;
    jl["blocks"] = blocks_json(lv.p_bar.blocks());
    levels.push_back(jl);
  }
  j["levels"] = levels;

  // Family with laminar nesting: parent = smallest strict superset.
  const auto& sets = h.fam.family.sets;
  std::vector<int> parent(sets.size(), -1);
  for (size_t i = 0; i < sets.size(); ++i) {
    size_t best = SIZE_MAX;
    std::vector<char> in_i(h.g->n(), 0);
    for (Vertex v : sets[i]) in_i[v] = 1;
    for (size_t k = 0; k < sets.size(); ++k) {
      if (k == i || sets[k].size() <= sets[i].size()) continue;
      size_t inside = 0;
      for (Vertex v : sets[k]) inside += in_i[v];
      if (inside == sets[i].size() && sets[k].size() < best) {
        best = sets[k].size();
        parent[i] = static_cast<int>(k);
      }
    }
  }
  ordered_json fam = ordered_json::array();
  for (size_t i = 0; i < sets.size(); ++i)
    fam.push_back({{"vertices", sets[i]},
                   {"delta", h.fam.family.delta[i]},
                   {"parent", parent[i]},
                   {"level", h.fam.first_level[i]}});
  j["family"] = fam;
  j["quality"] = {{"alpha", h.alpha()},
                  {"beta", h.beta()},
                  {"levels", h.depth()},
                  {"quality", h.quality()}};
  return indent >= 0 ? j.dump(indent) : j.dump();
}

}  // namespace wxflow
