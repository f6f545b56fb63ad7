#pragma once

#include <set>
#include <stdexcept>
#include <vector>

#include "pooltrace/matrix.hpp"

namespace pooltrace {

/// Undirected simple graph over n nodes, typically the union of contact
/// edges over a trailing 7-day window.
struct CtGraph {
  int n = 0;
  std::set<std::pair<int, int>> edges;  // (i,j) with i < j

  void add_edge(int i, int j);
  bool has_edge(int i, int j) const;
  std::vector<std::vector<int>> adjacency() const;
};

struct GroupStructure {
  std::vector<std::vector<int>> groups;
  bool overlapping = false;
};

struct GraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::vector<int>> bron_kerbosch(const CtGraph& graph);

struct CliqueCommunities {
  std::vector<std::vector<int>> communities;       // node sets
  std::vector<std::vector<int>> leftover_cliques;  // maximal cliques outside all communities
  GroupStructure as_groups() const;
};

CliqueCommunities k_clique_communities(const CtGraph& graph, int k = 3);

CtGraph perturb_graph(const CtGraph& graph, double add_fraction, double remove_fraction, Rng& rng);

GroupStructure family_blocks(const std::vector<std::vector<int>>& families);

/// Union of contact edges over days [day_end - window + 1, day_end].
template <class ContactLog>
CtGraph ct_graph_from_log(const ContactLog& log, int n, int day_end, int window = 7) {
  CtGraph g;
  g.n = n;
  for (const auto& e : log)
    if (e.day <= day_end && e.day > day_end - window) g.add_edge(e.i, e.j);
  return g;
}

}  // namespace pooltrace
