#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "spqn/network.hpp"
#include "spqn/varset.hpp"

namespace spqn {

/// Per-node variable sets, indexed by NodeId.
///   scope:       union over children; {var} at indicators.
///   effective:   variables the node defines a (conditional) distribution
///                over. Equals scope except at quotients, where it is
///                effective(num) minus effective(den).
///   conditional: scope minus effective -- the variables the node's output is
///                conditioned on.
struct ScopeTable {
  std::vector<VarSet> scope;
  std::vector<VarSet> effective;
  std::vector<VarSet> conditional;
};

inline ScopeTable compute_scopes(const Network& net) {
  const std::uint32_t n = net.num_vars();
  ScopeTable t;
  t.scope.assign(net.size(), VarSet(n));
  t.effective.assign(net.size(), VarSet(n));
  t.conditional.assign(net.size(), VarSet(n));
  for (NodeId id : net.topological_order()) {
    const Node& node = net.node(id);
    VarSet s(n), e(n);
    switch (node.kind) {
      case NodeKind::indicator:
        s.set(node.var);
        e.set(node.var);
        break;
      case NodeKind::sum:
      case NodeKind::product:
        for (NodeId c : node.children) {
          s |= t.scope[c];
          e |= t.effective[c];
        }
        break;
      case NodeKind::quotient:
        s = t.scope[node.numerator()] | t.scope[node.denominator()];
        e = t.effective[node.numerator()];
        e.subtract(t.effective[node.denominator()]);
        break;
    }
    VarSet c = s;
    c.subtract(e);
    t.scope[id] = std::move(s);
    t.effective[id] = std::move(e);
    t.conditional[id] = std::move(c);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Child dependency graph of a product node (conditioning structure).

/// Vertices are the product's child list positions; there is an edge i -> j
/// when effective(child_i) intersects conditional(child_j), i.e. child_j's
/// output is conditioned on variables child_i is responsible for.
struct ChildDependencyGraph {
  std::vector<NodeId> children;
  std::vector<std::vector<std::uint32_t>> edges;  // adjacency by position

  /// Kahn order over positions; ties broken by (NodeId, position). Returns
  /// false when the graph has a cycle.
  bool topo_order(std::vector<std::uint32_t>& out) const {
    const std::size_t k = children.size();
    std::vector<std::uint32_t> indeg(k, 0);
    for (const auto& adj : edges)
      for (std::uint32_t j : adj) ++indeg[j];
    auto better = [&](std::uint32_t a, std::uint32_t b) {
      if (children[a] != children[b]) return children[a] < children[b];
      return a < b;
    };
    std::vector<std::uint32_t> ready;
    for (std::uint32_t i = 0; i < k; ++i)
      if (indeg[i] == 0) ready.push_back(i);
    out.clear();
    out.reserve(k);
    while (!ready.empty()) {
      auto it = std::min_element(ready.begin(), ready.end(), better);
      std::uint32_t i = *it;
      ready.erase(it);
      out.push_back(i);
      for (std::uint32_t j : edges[i])
        if (--indeg[j] == 0) ready.push_back(j);
    }
    return out.size() == k;
  }
};

inline ChildDependencyGraph child_dependency_graph(const Network& net, const ScopeTable& scopes,
                                                   NodeId product) {
  const Node& p = net.node(product);
  ChildDependencyGraph g;
  g.children = p.children;
  g.edges.resize(p.children.size());
  for (std::uint32_t i = 0; i < p.children.size(); ++i)
    for (std::uint32_t j = 0; j < p.children.size(); ++j) {
      if (i == j) continue;
      if (scopes.effective[p.children[i]].intersects(scopes.conditional[p.children[j]]))
        g.edges[i].push_back(j);
    }
  return g;
}

// ---------------------------------------------------------------------------
// Star-pattern rule

/// Sufficient condition for a Star pattern to evaluate to an exact marginal:
/// whenever a node's conditional scope touches a Star variable, its whole
/// effective scope must be Star as well. Pure SPNs (no quotients) accept
/// every pattern, since every conditional scope is empty.
inline bool star_pattern_ok(const Network& net, const ScopeTable& scopes,
                            const Evidence& evidence) {
  VarSet star = evidence.star_set();
  for (NodeId id = 0; id < net.size(); ++id) {
    if (scopes.conditional[id].intersects(star) && !scopes.effective[id].subset_of(star))
      return false;
  }
  return true;
}

}  // namespace spqn
