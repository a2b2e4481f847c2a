#pragma once

#include <algorithm>
#include <cstdint>
#include <queue>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spqn/common.hpp"
#include "spqn/varset.hpp"

namespace spqn {

// ---------------------------------------------------------------------------
// Evidence

/// One position of an evidence vector: observed 0, observed 1, or Star
/// (marginalized / not yet sampled).
enum class Mark : std::uint8_t { zero = 0, one = 1, star = 2 };

/// Assignment over the network variables, text form one char per variable
/// from {0,1,*}.
class Evidence {
public:
  Evidence() = default;
  explicit Evidence(std::size_t n, Mark fill = Mark::star) : v_(n, fill) {}

  static Evidence from_string(std::string_view s) {
    Evidence e(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      switch (s[i]) {
        case '0': e.v_[i] = Mark::zero; break;
        case '1': e.v_[i] = Mark::one; break;
        case '*': e.v_[i] = Mark::star; break;
        default:
          throw InputError("evidence char at position " + std::to_string(i) +
                           " must be one of 0, 1, *");
      }
    }
    return e;
  }

  std::string to_string() const {
    std::string s(v_.size(), '*');
    for (std::size_t i = 0; i < v_.size(); ++i)
      s[i] = v_[i] == Mark::zero ? '0' : v_[i] == Mark::one ? '1' : '*';
    return s;
  }

  Mark& operator[](std::size_t i) { return v_[i]; }
  Mark operator[](std::size_t i) const { return v_[i]; }
  std::size_t size() const { return v_.size(); }

  bool has_star() const {
    for (Mark m : v_)
      if (m == Mark::star) return true;
    return false;
  }

  std::size_t star_count() const {
    std::size_t c = 0;
    for (Mark m : v_) c += m == Mark::star;
    return c;
  }

  VarSet star_set() const {
    VarSet s(static_cast<std::uint32_t>(v_.size()));
    for (std::uint32_t i = 0; i < v_.size(); ++i)
      if (v_[i] == Mark::star) s.set(i);
    return s;
  }

  friend bool operator==(const Evidence& a, const Evidence& b) { return a.v_ == b.v_; }
  friend bool operator!=(const Evidence& a, const Evidence& b) { return !(a == b); }

private:
  std::vector<Mark> v_;
};

// ---------------------------------------------------------------------------
// Nodes

enum class NodeKind : std::uint8_t { indicator, sum, product, quotient };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::indicator: return "indicator";
    case NodeKind::sum: return "sum";
    case NodeKind::product: return "product";
    case NodeKind::quotient: return "quotient";
  }
  return "?";
}

struct Node {
  NodeKind kind = NodeKind::indicator;
  std::uint32_t var = 0;    // indicator only
  std::uint8_t value = 0;   // indicator only
  std::int32_t block = -1;  // sum only: logit block in the ParamVector
  std::vector<NodeId> children;  // sum/product: >= 1 entry; quotient: {num, den}

  NodeId numerator() const { return children[0]; }
  NodeId denominator() const { return children[1]; }
};

// ---------------------------------------------------------------------------
// Network

/// Rooted DAG over indicator/sum/product/quotient nodes. Immutable once
/// finalized; safe to share across threads. finalize() guarantees: all node
/// references in range, no cycles, every node reachable from the root, arity
/// constraints hold, and a deterministic topological order is stored.
class Network {
public:
  Network() = default;

  static Network finalize(std::uint32_t num_vars, std::vector<Node> nodes, NodeId root) {
    Network net;
    net.num_vars_ = num_vars;
    net.nodes_ = std::move(nodes);
    net.root_ = root;
    net.check_structure();
    net.topo_ = net.make_topological_order();
    net.check_reachable();
    return net;
  }

  std::uint32_t num_vars() const { return num_vars_; }
  std::size_t size() const { return nodes_.size(); }
  NodeId root() const { return root_; }
  const Node& node(NodeId id) const { return nodes_[id]; }
  const std::vector<Node>& nodes() const { return nodes_; }

  /// Children-before-parents order over all nodes. Deterministic for a fixed
  /// network: among ready nodes the smallest NodeId is emitted first.
  const std::vector<NodeId>& topological_order() const { return topo_; }

private:
  void check_structure() const {
    if (nodes_.empty()) throw StructuralError("network has no nodes");
    if (root_ >= nodes_.size())
      throw StructuralError("root id " + std::to_string(root_) + " out of range");
    for (NodeId id = 0; id < nodes_.size(); ++id) {
      const Node& n = nodes_[id];
      for (NodeId c : n.children)
        if (c >= nodes_.size())
          throw StructuralError("node " + std::to_string(id) + " references missing child " +
                                std::to_string(c));
      switch (n.kind) {
        case NodeKind::indicator:
          if (!n.children.empty())
            throw StructuralError("indicator node " + std::to_string(id) + " has children");
          if (n.var >= num_vars_)
            throw StructuralError("indicator node " + std::to_string(id) + " references variable " +
                                  std::to_string(n.var) + " outside [0," +
                                  std::to_string(num_vars_) + ")");
          if (n.value > 1)
            throw StructuralError("indicator node " + std::to_string(id) + " has value " +
                                  std::to_string(n.value));
          break;
        case NodeKind::sum:
          if (n.children.empty())
            throw StructuralError("sum node " + std::to_string(id) + " has no children");
          if (n.block < 0)
            throw StructuralError("sum node " + std::to_string(id) + " has no weight block");
          break;
        case NodeKind::product:
          if (n.children.empty())
            throw StructuralError("product node " + std::to_string(id) + " has no children");
          break;
        case NodeKind::quotient:
          if (n.children.size() != 2)
            throw StructuralError("quotient node " + std::to_string(id) +
                                  " must have exactly numerator and denominator");
          break;
      }
    }
  }

  std::vector<NodeId> make_topological_order() const {
    // Kahn over child->parent readiness with a min-heap on NodeId.
    std::vector<std::uint32_t> pending(nodes_.size(), 0);
    std::vector<std::vector<NodeId>> parents(nodes_.size());
    for (NodeId id = 0; id < nodes_.size(); ++id) {
      // A child listed twice still only blocks once per edge.
      pending[id] = static_cast<std::uint32_t>(nodes_[id].children.size());
      for (NodeId c : nodes_[id].children) parents[c].push_back(id);
    }
    std::priority_queue<NodeId, std::vector<NodeId>, std::greater<NodeId>> ready;
    for (NodeId id = 0; id < nodes_.size(); ++id)
      if (pending[id] == 0) ready.push(id);
    std::vector<NodeId> order;
    order.reserve(nodes_.size());
    while (!ready.empty()) {
      NodeId id = ready.top();
      ready.pop();
      order.push_back(id);
      for (NodeId p : parents[id])
        if (--pending[p] == 0) ready.push(p);
    }
    if (order.size() != nodes_.size()) {
      for (NodeId id = 0; id < nodes_.size(); ++id)
        if (pending[id] != 0)
          throw StructuralError("cycle detected involving node " + std::to_string(id));
    }
    return order;
  }

  void check_reachable() const {
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<NodeId> stack{root_};
    seen[root_] = 1;
    while (!stack.empty()) {
      NodeId id = stack.back();
      stack.pop_back();
      for (NodeId c : nodes_[id].children)
        if (!seen[c]) {
          seen[c] = 1;
          stack.push_back(c);
        }
    }
    for (NodeId id = 0; id < nodes_.size(); ++id)
      if (!seen[id])
        throw StructuralError("node " + std::to_string(id) + " is unreachable from the root");
  }

  std::uint32_t num_vars_ = 0;
  std::vector<Node> nodes_;
  NodeId root_ = 0;
  std::vector<NodeId> topo_;
};

/// Convenience alias matching the free-function contract.
inline const std::vector<NodeId>& topological_order(const Network& net) {
  return net.topological_order();
}

// ---------------------------------------------------------------------------
// Builder

/// Append-only construction. Children may reference ids that do not exist
/// yet; finalize() validates everything at once.
class NetworkBuilder {
public:
  explicit NetworkBuilder(std::uint32_t num_vars) : num_vars_(num_vars) {}

  NodeId add_indicator(std::uint32_t var, std::uint8_t value) {
    Node n;
    n.kind = NodeKind::indicator;
    n.var = var;
    n.value = value;
    return push(std::move(n));
  }

  NodeId add_sum(std::vector<NodeId> children, std::int32_t block) {
    Node n;
    n.kind = NodeKind::sum;
    n.children = std::move(children);
    n.block = block;
    return push(std::move(n));
  }

  NodeId add_product(std::vector<NodeId> children) {
    Node n;
    n.kind = NodeKind::product;
    n.children = std::move(children);
    return push(std::move(n));
  }

  NodeId add_quotient(NodeId numerator, NodeId denominator) {
    Node n;
    n.kind = NodeKind::quotient;
    n.children = {numerator, denominator};
    return push(std::move(n));
  }

  std::size_t size() const { return nodes_.size(); }
  std::uint32_t num_vars() const { return num_vars_; }

  Network finalize(NodeId root) && {
    return Network::finalize(num_vars_, std::move(nodes_), root);
  }

private:
  NodeId push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  std::uint32_t num_vars_;
  std::vector<Node> nodes_;
};

}  // namespace spqn
