#pragma once
// Algorithms over relation graphs: cycle detection, topological ordering
// and node-induced subgraphs. A preference relation is transitive over an
// item set exactly when its relation graph is acyclic.

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "concord/core.hpp"

namespace concord {

namespace detail {

enum class DfsColor : uint8_t { White, OnStack, Done };

inline bool cycle_from(const RelationGraph& g, const std::string& v,
                       std::unordered_map<std::string, DfsColor>& color) {
  color[v] = DfsColor::OnStack;
  for (const auto& u : g.successors(v)) {
    DfsColor c = color.count(u) ? color[u] : DfsColor::White;
    if (c == DfsColor::OnStack) return true;
    if (c == DfsColor::White && cycle_from(g, u, color)) return true;
  }
  color[v] = DfsColor::Done;
  return false;
}

}  // namespace detail

// True iff the graph contains a directed cycle. Depth-first search with a
// recursion stack; the boolean result does not depend on visit order.
inline bool has_cycle(const RelationGraph& g) {
  std::unordered_map<std::string, detail::DfsColor> color;
  color.reserve(g.node_count());
  for (const auto& v : g.nodes()) {
    if (color.count(v)) continue;
    if (detail::cycle_from(g, v, color)) return true;
  }
  return false;
}

// Kahn's algorithm. Returns a node order consistent with every edge, or
// nullopt when the graph is cyclic. Deterministic: sources are consumed in
// node insertion order.
inline std::optional<std::vector<std::string>> topological_order(const RelationGraph& g) {
  std::unordered_map<std::string, int> in_degree;
  for (const auto& v : g.nodes()) in_degree[v] = 0;
  for (const auto& v : g.nodes())
    for (const auto& u : g.successors(v)) ++in_degree[u];

  std::vector<std::string> ready;
  for (const auto& v : g.nodes())
    if (in_degree[v] == 0) ready.push_back(v);

  std::vector<std::string> order;
  order.reserve(g.node_count());
  for (std::size_t head = 0; head < ready.size(); ++head) {
    const std::string v = ready[head];
    order.push_back(v);
    for (const auto& u : g.successors(v))
      if (--in_degree[u] == 0) ready.push_back(u);
  }
  if (order.size() != g.node_count()) return std::nullopt;
  return order;
}

// Restriction of the graph to `keep` and the edges between kept nodes.
// Every id in `keep` must be a node of the graph.
inline RelationGraph induced_subgraph(const RelationGraph& g, const std::vector<std::string>& keep) {
  std::set<std::string> kept(keep.begin(), keep.end());
  for (const auto& id : keep)
    if (!g.contains(id)) throw InvalidInputError("induced_subgraph: node '" + id + "' not in graph");

  RelationGraph sub;
  for (const auto& v : g.nodes())
    if (kept.count(v)) sub.add_node(v);
  for (const auto& v : sub.nodes())
    for (const auto& u : g.successors(v))
      if (kept.count(u)) sub.add_edge(v, u);
  return sub;
}

}  // namespace concord
