#include "pooltrace/graph.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>

namespace pooltrace {

void CtGraph::add_edge(int i, int j) {
  if (i == j) throw GraphError("CtGraph: self loop");
  if (i > j) std::swap(i, j);
  edges.insert({i, j});
}

bool CtGraph::has_edge(int i, int j) const {
  if (i > j) std::swap(i, j);
  return edges.count({i, j}) > 0;
}

std::vector<std::vector<int>> CtGraph::adjacency() const {
  std::vector<std::vector<int>> adj(n);
  for (auto [i, j] : edges) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());
  return adj;
}

namespace {

std::vector<int> set_intersect(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

void bk_recurse(std::vector<int>& R, std::vector<int> P, std::vector<int> X,
                const std::vector<std::vector<int>>& adj,
                std::vector<std::vector<int>>& out) {
  if (P.empty() && X.empty()) {
    out.push_back(R);
    return;
  }
  // pivot: vertex of P u X with most neighbors in P
  int pivot = -1;
  std::size_t best = 0;
  bool first = true;
  for (const auto* S : {&P, &X})
    for (int u : *S) {
      std::size_t deg = set_intersect(P, adj[u]).size();
      if (first || deg > best) {
        best = deg;
        pivot = u;
        first = false;
      }
    }
  std::vector<int> candidates;
  for (int v : P)
    if (!std::binary_search(adj[pivot].begin(), adj[pivot].end(), v)) candidates.push_back(v);
  for (int v : candidates) {
    R.push_back(v);
    bk_recurse(R, set_intersect(P, adj[v]), set_intersect(X, adj[v]), adj, out);
    R.pop_back();
    P.erase(std::find(P.begin(), P.end(), v));
    X.insert(std::lower_bound(X.begin(), X.end(), v), v);
  }
}

}  // namespace

std::vector<std::vector<int>> bron_kerbosch(const CtGraph& graph) {
  auto adj = graph.adjacency();
  std::vector<int> R, P(graph.n), X;
  std::iota(P.begin(), P.end(), 0);
  std::vector<std::vector<int>> out;
  bk_recurse(R, std::move(P), std::move(X), adj, out);
  for (auto& c : out) std::sort(c.begin(), c.end());
  return out;
}

GroupStructure CliqueCommunities::as_groups() const {
  GroupStructure gs;
  gs.overlapping = true;
  gs.groups = communities;
  gs.groups.insert(gs.groups.end(), leftover_cliques.begin(), leftover_cliques.end());
  return gs;
}

CliqueCommunities k_clique_communities(const CtGraph& graph, int k) {
  if (k < 2) throw GraphError("k_clique_communities: k must be >= 2");
  auto maximal = bron_kerbosch(graph);
  // Maximal cliques of size >= k sharing >= k-1 vertices belong to the
  // same community; chains of such overlaps give the percolation
  // components.
  std::vector<int> big;
  for (std::size_t i = 0; i < maximal.size(); ++i)
    if (static_cast<int>(maximal[i].size()) >= k) big.push_back(static_cast<int>(i));

  std::vector<int> parent(big.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t a = 0; a < big.size(); ++a)
    for (std::size_t b = a + 1; b < big.size(); ++b) {
      if (static_cast<int>(set_intersect(maximal[big[a]], maximal[big[b]]).size()) >= k - 1)
        parent[find(static_cast<int>(a))] = find(static_cast<int>(b));
    }

  std::map<int, std::set<int>> comps;
  for (std::size_t a = 0; a < big.size(); ++a) {
    auto& nodes = comps[find(static_cast<int>(a))];
    nodes.insert(maximal[big[a]].begin(), maximal[big[a]].end());
  }
  CliqueCommunities result;
  for (auto& [root, nodes] : comps)
    result.communities.emplace_back(nodes.begin(), nodes.end());

  for (const auto& clique : maximal) {
    bool covered = false;
    for (const auto& comm : result.communities)
      if (std::includes(comm.begin(), comm.end(), clique.begin(), clique.end())) {
        covered = true;
        break;
      }
    if (!covered) result.leftover_cliques.push_back(clique);
  }
  return result;
}

CtGraph perturb_graph(const CtGraph& graph, double add_fraction, double remove_fraction, Rng& rng) {
  if (add_fraction < 0 || add_fraction > 1 || remove_fraction < 0 || remove_fraction > 1)
    throw GraphError("perturb_graph: fractions out of [0,1]");
  const auto n_edges = static_cast<long long>(graph.edges.size());
  const auto n_remove = static_cast<long long>(remove_fraction * n_edges);
  const auto n_add = static_cast<long long>(add_fraction * n_edges);

  std::vector<std::pair<int, int>> edge_list(graph.edges.begin(), graph.edges.end());
  std::shuffle(edge_list.begin(), edge_list.end(), rng);
  edge_list.resize(edge_list.size() - n_remove);

  CtGraph out;
  out.n = graph.n;
  out.edges.insert(edge_list.begin(), edge_list.end());

  const long long max_edges = static_cast<long long>(graph.n) * (graph.n - 1) / 2;
  if (max_edges - static_cast<long long>(graph.edges.size()) < n_add)
    throw GraphError("perturb_graph: not enough non-edges to add");
  std::uniform_int_distribution<int> node(0, graph.n - 1);
  long long added = 0;
  while (added < n_add) {
    int i = node(rng), j = node(rng);
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    if (graph.edges.count({i, j}) || out.edges.count({i, j})) continue;
    out.edges.insert({i, j});
    ++added;
  }
  return out;
}

GroupStructure family_blocks(const std::vector<std::vector<int>>& families) {
  GroupStructure gs;
  gs.overlapping = false;
  std::set<int> seen;
  for (const auto& fam : families) {
    std::vector<int> g;
    for (int i : fam)
      if (seen.insert(i).second) g.push_back(i);  // disjointness under the overlap variant
    if (!g.empty()) gs.groups.push_back(std::move(g));
  }
  return gs;
}

}  // namespace pooltrace
