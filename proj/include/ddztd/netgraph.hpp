#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ddztd/errors.hpp"
#include "ddztd/rng.hpp"

namespace ddztd {

// Directed edge between node indices.
struct Edge {
  int tail = -1;
  int head = -1;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Directed credential graph: nodes are devices, an edge (u,v) is a stored
// service connection from u to v.  Node ids are opaque strings; indices are
// assigned in lexicographic id order so serialization is deterministic.
class NetworkGraph {
 public:
  static constexpr std::size_t kMaxNodes = 64;

  NetworkGraph(std::vector<std::string> node_ids,
               std::vector<std::pair<std::string, std::string>> edge_ids,
               const std::string& entry_id, const std::string& target_id) {
    std::sort(node_ids.begin(), node_ids.end());
    for (std::size_t i = 0; i + 1 < node_ids.size(); ++i)
      if (node_ids[i] == node_ids[i + 1])
        throw DuplicateNode("duplicate node id: " + node_ids[i]);
    if (node_ids.size() > kMaxNodes)
      throw Error("graph exceeds the configured node bound");
    ids_ = std::move(node_ids);

    entry_ = find_(entry_id);
    target_ = find_(target_id);
    if (entry_ < 0) throw DanglingEdge("entry node not declared: " + entry_id);
    if (target_ < 0)
      throw DanglingEdge("target node not declared: " + target_id);
    if (entry_ == target_)
      throw EntryEqualsTarget("entry and target must differ");

    std::set<Edge> edge_set;
    for (const auto& [u, v] : edge_ids) {
      int ui = find_(u), vi = find_(v);
      if (ui < 0) throw DanglingEdge("edge tail not declared: " + u);
      if (vi < 0) throw DanglingEdge("edge head not declared: " + v);
      if (ui == vi) throw Error("self-loop on node " + u);
      edge_set.insert(Edge{ui, vi});
    }
    edges_.assign(edge_set.begin(), edge_set.end());
  }

  std::size_t node_count() const { return ids_.size(); }
  const std::vector<std::string>& node_ids() const { return ids_; }
  const std::string& node_id(int index) const { return ids_.at(index); }
  const std::vector<Edge>& edges() const { return edges_; }
  int entry() const { return entry_; }
  int target() const { return target_; }

  int node_index(const std::string& id) const {
    int i = find_(id);
    if (i < 0) throw Error("unknown node id: " + id);
    return i;
  }

  bool has_edge(const Edge& e) const {
    return std::binary_search(edges_.begin(), edges_.end(), e);
  }

 private:
  int find_(const std::string& id) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id) return -1;
    return static_cast<int>(it - ids_.begin());
  }

  std::vector<std::string> ids_;
  std::vector<Edge> edges_;  // sorted
  int entry_ = -1;
  int target_ = -1;
};

inline NetworkGraph build_graph(
    std::vector<std::string> nodes,
    std::vector<std::pair<std::string, std::string>> edges,
    const std::string& entry, const std::string& target) {
  return NetworkGraph(std::move(nodes), std::move(edges), entry, target);
}

// Lateral-movement state: the visited indicator L^t, current position, and
// the step index t in [1, H].  The authentication subgraph is derived from
// the visited set on demand.
struct ZtdState {
  std::vector<char> visited;
  int current = -1;
  int time = 1;

  bool is_visited(int node) const { return visited.at(node) != 0; }

  std::size_t visited_count() const {
    std::size_t n = 0;
    for (char v : visited) n += (v != 0);
    return n;
  }

  friend bool operator==(const ZtdState&, const ZtdState&) = default;
  friend auto operator<=>(const ZtdState&, const ZtdState&) = default;
};

inline ZtdState initial_state(const NetworkGraph& graph) {
  ZtdState s;
  s.visited.assign(graph.node_count(), 0);
  s.visited[graph.entry()] = 1;
  s.current = graph.entry();
  s.time = 1;
  return s;
}

// All edges whose tail is visited, i.e. the edge set E^t of the
// authentication graph G^t.
inline std::vector<Edge> authentication_subgraph(
    const NetworkGraph& graph, const std::vector<char>& visited) {
  bool any = false;
  for (char v : visited) any |= (v != 0);
  if (!any) throw EmptyVisitedSet("visited set is empty");
  std::vector<Edge> out;
  for (const Edge& e : graph.edges())
    if (visited.at(e.tail)) out.push_back(e);
  return out;
}

inline std::vector<Edge> authentication_subgraph(const NetworkGraph& graph,
                                                 const ZtdState& state) {
  return authentication_subgraph(graph, state.visited);
}

// Frontier edges the attacker may traverse: tail visited, head not.
inline std::vector<Edge> attacker_action_set(const NetworkGraph& graph,
                                             const ZtdState& state) {
  std::vector<Edge> out;
  for (const Edge& e : graph.edges())
    if (state.is_visited(e.tail) && !state.is_visited(e.head))
      out.push_back(e);
  return out;
}

// Advances the state by one move attempt.  A passed move marks the head
// visited and relocates the attacker; a rejected one consumes the time step
// and leaves the position unchanged.
inline ZtdState apply_move(const NetworkGraph& graph, const ZtdState& state,
                           const Edge& edge, bool passed) {
  auto frontier = attacker_action_set(graph, state);
  if (!std::binary_search(frontier.begin(), frontier.end(), edge))
    throw IllegalMove("edge is not in the attacker action set");
  ZtdState next = state;
  next.time = state.time + 1;
  if (passed) {
    next.visited[edge.head] = 1;
    next.current = edge.head;
  }
  return next;
}

// Seeded random DAG over n nodes: node ids n00..n(n-1), edges only from lower
// to higher index, a guaranteed entry-to-target chain, entry = first node,
// target = last.
inline NetworkGraph random_dag(std::size_t n_nodes, double edge_prob,
                               Rng& rng) {
  if (n_nodes < 2) throw Error("random_dag needs at least two nodes");
  std::vector<std::string> nodes;
  for (std::size_t i = 0; i < n_nodes; ++i) {
    std::string id = "n";
    if (i < 10) id += "0";
    id += std::to_string(i);
    nodes.push_back(id);
  }
  std::vector<std::pair<std::string, std::string>> edges;
  for (std::size_t i = 0; i + 1 < n_nodes; ++i)
    edges.emplace_back(nodes[i], nodes[i + 1]);
  for (std::size_t i = 0; i < n_nodes; ++i)
    for (std::size_t j = i + 2; j < n_nodes; ++j)
      if (rng.bernoulli(edge_prob)) edges.emplace_back(nodes[i], nodes[j]);
  return build_graph(nodes, edges, nodes.front(), nodes.back());
}

}  // namespace ddztd
