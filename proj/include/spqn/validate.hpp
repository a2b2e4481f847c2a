#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "spqn/common.hpp"
#include "spqn/eval.hpp"
#include "spqn/network.hpp"
#include "spqn/oracle.hpp"
#include "spqn/params.hpp"
#include "spqn/scopes.hpp"

namespace spqn {

// Stable rule identifiers, as printed in validation reports.
namespace rule {
inline constexpr const char* complete = "complete";
inline constexpr const char* cond_complete = "cond-complete";
inline constexpr const char* decomp_disjoint = "decomp-disjoint";
inline constexpr const char* cond_decomp_disjoint = "cond-decomp-disjoint";
inline constexpr const char* cond_decomp_acyclic = "cond-decomp-acyclic";
inline constexpr const char* cmo_base = "cmo-base";
inline constexpr const char* cmo_shape = "cmo-shape";
inline constexpr const char* cmo_child = "cmo-child";
inline constexpr const char* cmo_b_scope = "cmo-b-scope";
inline constexpr const char* cmo_b_to_a = "cmo-b-to-a";
inline constexpr const char* sound_positive = "sound-positive";
inline constexpr const char* sound_marginal = "sound-marginal";
inline constexpr const char* sound_star = "sound-star";
inline constexpr const char* root_unconditional = "root-unconditional";
inline constexpr const char* no_quotient = "dnc-no-quotient";
}  // namespace rule

// Relative tolerance (on linear values; absolute on logs) for the
// brute-force soundness equalities.
inline constexpr double soundness_rel_tol = 1e-9;

struct Violation {
  NodeId node = 0;
  std::string rule;
  std::string detail;
};

/// Outcome of one or more validation checks. Passing is defined as the
/// absence of violations; there is no separate flag to get out of sync.
struct ValidationReport {
  std::vector<Violation> violations;

  bool passed() const { return violations.empty(); }

  void add(NodeId node, const char* rule_id, std::string detail) {
    violations.push_back({node, rule_id, std::move(detail)});
  }

  void merge(const ValidationReport& other) {
    violations.insert(violations.end(), other.violations.begin(), other.violations.end());
  }

  /// One line per violation: RULE <tab> node=<id> <tab> <detail>, then a
  /// final PASS or FAIL line.
  std::string to_text() const {
    std::string out;
    for (const Violation& v : violations) {
      out += v.rule;
      out += "\tnode=" + std::to_string(v.node) + "\t" + v.detail + "\n";
    }
    out += passed() ? "PASS\n" : "FAIL\n";
    return out;
  }
};

// ---------------------------------------------------------------------------
// Completeness / decomposability

/// Sum-node scope agreement. conditional=false compares general scopes
/// (classic completeness); conditional=true compares effective scopes.
inline ValidationReport check_complete(const Network& net, const ScopeTable& scopes,
                                       bool conditional) {
  ValidationReport rep;
  const char* id = conditional ? rule::cond_complete : rule::complete;
  const auto& table = conditional ? scopes.effective : scopes.scope;
  for (NodeId v = 0; v < net.size(); ++v) {
    const Node& n = net.node(v);
    if (n.kind != NodeKind::sum) continue;
    NodeId first = n.children[0];
    for (std::size_t k = 1; k < n.children.size(); ++k) {
      NodeId c = n.children[k];
      if (table[c] != table[first])
        rep.add(v, id,
                "children " + std::to_string(first) + " and " + std::to_string(c) +
                    " have scopes " + table[first].to_string() + " vs " + table[c].to_string());
    }
  }
  return rep;
}

/// Product-node scope disjointness. conditional=false requires pairwise
/// disjoint general scopes; conditional=true requires pairwise disjoint
/// effective scopes plus an acyclic child dependency graph.
inline ValidationReport check_decomposable(const Network& net, const ScopeTable& scopes,
                                           bool conditional) {
  ValidationReport rep;
  const auto& table = conditional ? scopes.effective : scopes.scope;
  const char* id = conditional ? rule::cond_decomp_disjoint : rule::decomp_disjoint;
  for (NodeId v = 0; v < net.size(); ++v) {
    const Node& n = net.node(v);
    if (n.kind != NodeKind::product) continue;
    for (std::size_t i = 0; i < n.children.size(); ++i)
      for (std::size_t j = i + 1; j < n.children.size(); ++j) {
        if (table[n.children[i]].intersects(table[n.children[j]]))
          rep.add(v, id,
                  "children " + std::to_string(n.children[i]) + " and " +
                      std::to_string(n.children[j]) + " overlap on " +
                      (table[n.children[i]] & table[n.children[j]]).to_string());
      }
    if (conditional) {
      ChildDependencyGraph g = child_dependency_graph(net, scopes, v);
      std::vector<std::uint32_t> order;
      if (!g.topo_order(order))
        rep.add(v, rule::cond_decomp_acyclic, "child dependency graph has a cycle");
    }
  }
  return rep;
}

/// The root must define an unconditional distribution over every variable.
inline ValidationReport check_root_unconditional(const Network& net, const ScopeTable& scopes) {
  ValidationReport rep;
  NodeId r = net.root();
  if (!scopes.conditional[r].empty())
    rep.add(r, rule::root_unconditional,
            "root output is conditioned on " + scopes.conditional[r].to_string());
  VarSet all(net.num_vars());
  for (std::uint32_t i = 0; i < net.num_vars(); ++i) all.set(i);
  if (scopes.effective[r] != all)
    rep.add(r, rule::root_unconditional,
            "root effective scope " + scopes.effective[r].to_string() + " does not cover all " +
                std::to_string(net.num_vars()) + " variables");
  return rep;
}

/// Marginalization-safety of a Star pattern (see star_pattern_ok).
inline bool check_star_pattern(const Network& net, const ScopeTable& scopes,
                               const Evidence& evidence) {
  return star_pattern_ok(net, scopes, evidence);
}

// ---------------------------------------------------------------------------
// Valid CMO structure

/// Describes one CMO instance: gamma mixture rows over alpha conditioning
/// (A) columns and beta effective (B) columns. `root` is the quotient when
/// alpha > 0, otherwise the numerator sum. Builders emit these; they ride
/// along in ModelFiles so saved models stay checkable.
struct CmoAnnotation {
  NodeId root = 0;
  std::uint32_t gamma = 0;
  std::uint32_t alpha = 0;
  std::uint32_t beta = 0;
  std::vector<std::vector<NodeId>> a_children;  // gamma x alpha
  std::vector<std::vector<NodeId>> b_children;  // gamma x beta
  std::int32_t block = -1;
};

namespace detail {

inline void check_annotation_well_formed(const CmoAnnotation& a) {
  if (a.gamma < 1) throw InputError("CMO annotation must have gamma >= 1");
  if (a.beta < 1)
    throw InputError("CMO annotation must have beta >= 1 (at least one B column)");
  if (a.a_children.size() != a.gamma || a.b_children.size() != a.gamma)
    throw InputError("CMO annotation row count does not match gamma");
  for (const auto& row : a.a_children)
    if (row.size() != a.alpha) throw InputError("CMO annotation A row width does not match alpha");
  for (const auto& row : a.b_children)
    if (row.size() != a.beta) throw InputError("CMO annotation B row width does not match beta");
}

inline bool same_children(const std::vector<NodeId>& got, const std::vector<NodeId>& want) {
  return got == want;
}

}  // namespace detail

/// Structural check of every annotated CMO against the validity conditions:
/// base case shape, recursive children, conditional completeness of the
/// internal sums, conditional decomposability of the internal products with
/// no B-to-A dependency, and a shared effective scope across the B rows.
/// Every quotient node must be covered by an annotation. Passing, together
/// with the global conditional checks, implies the network is tractable and
/// strongly conditionally sound.
inline ValidationReport check_valid_cmo(const Network& net, const ScopeTable& scopes,
                                        const std::vector<CmoAnnotation>& annotations) {
  ValidationReport rep;
  std::unordered_map<NodeId, const CmoAnnotation*> by_root;
  for (const CmoAnnotation& a : annotations) {
    detail::check_annotation_well_formed(a);
    by_root[a.root] = &a;
  }
  for (NodeId v = 0; v < net.size(); ++v)
    if (net.node(v).kind == NodeKind::quotient && !by_root.count(v))
      throw InputError("quotient node " + std::to_string(v) + " has no CMO annotation");

  // Indicators are only legal children inside the base case, handled below.
  auto is_cmo_child = [&](NodeId c) { return by_root.count(c) != 0; };

  for (const CmoAnnotation& a : annotations) {
    const Node& root = net.node(a.root);

    // Base case: gamma=2, alpha=0, beta=1 over the two indicators of one
    // variable.
    bool base_shape = a.gamma == 2 && a.alpha == 0 && a.beta == 1;
    bool children_are_indicators = false;
    if (base_shape) {
      NodeId c0 = a.b_children[0][0], c1 = a.b_children[1][0];
      const Node& n0 = net.node(c0);
      const Node& n1 = net.node(c1);
      children_are_indicators =
          n0.kind == NodeKind::indicator && n1.kind == NodeKind::indicator;
      if (children_are_indicators) {
        if (root.kind != NodeKind::sum || root.children.size() != 2 ||
            root.children[0] != c0 || root.children[1] != c1 || root.block != a.block) {
          rep.add(a.root, rule::cmo_base, "leaf mixture node does not match its annotation");
          continue;
        }
        if (n0.var != n1.var || n0.value == n1.value) {
          rep.add(a.root, rule::cmo_base,
                  "leaf mixture children must be the 0 and 1 indicators of one variable");
        }
        continue;  // base case fully handled
      }
    }

    // General case: reconstruct the expected internal structure.
    std::vector<NodeId> b_row_nodes(a.gamma, invalid_node);
    bool shape_ok = true;
    auto shape_fail = [&](const std::string& msg) {
      rep.add(a.root, rule::cmo_shape, msg);
      shape_ok = false;
    };

    std::vector<NodeId> internal_products;
    NodeId num = invalid_node, den = invalid_node;
    if (a.alpha == 0) {
      if (root.kind != NodeKind::sum || root.children.size() != a.gamma ||
          root.block != a.block) {
        shape_fail("expected a sum over " + std::to_string(a.gamma) + " mixture rows");
      } else {
        num = a.root;
        for (std::uint32_t i = 0; i < a.gamma && shape_ok; ++i) {
          NodeId row = root.children[i];
          if (a.beta == 1) {
            if (row != a.b_children[i][0])
              shape_fail("row " + std::to_string(i) + " child does not match annotation");
            b_row_nodes[i] = row;
          } else {
            const Node& rn = net.node(row);
            if (rn.kind != NodeKind::product ||
                !detail::same_children(rn.children, a.b_children[i]))
              shape_fail("row " + std::to_string(i) + " is not the annotated B product");
            b_row_nodes[i] = row;
            internal_products.push_back(row);
          }
        }
      }
    } else {
      if (root.kind != NodeKind::quotient) {
        shape_fail("expected a quotient root");
      } else {
        num = root.numerator();
        den = root.denominator();
        const Node& ns = net.node(num);
        const Node& ds = net.node(den);
        if (ns.kind != NodeKind::sum || ds.kind != NodeKind::sum ||
            ns.children.size() != a.gamma || ds.children.size() != a.gamma)
          shape_fail("numerator/denominator must be sums over gamma rows");
        else if (ns.block != a.block || ds.block != a.block)
          shape_fail("numerator and denominator must share the annotated weight block");
        else {
          for (std::uint32_t i = 0; i < a.gamma && shape_ok; ++i) {
            NodeId joint = ns.children[i];
            NodeId a_prod = ds.children[i];
            const Node& jn = net.node(joint);
            const Node& an = net.node(a_prod);
            if (jn.kind != NodeKind::product || jn.children.size() != 2 ||
                jn.children[0] != a_prod) {
              shape_fail("numerator row " + std::to_string(i) +
                         " must multiply the shared A product with the B product");
              break;
            }
            NodeId b_prod = jn.children[1];
            const Node& bn = net.node(b_prod);
            if (an.kind != NodeKind::product ||
                !detail::same_children(an.children, a.a_children[i])) {
              shape_fail("denominator row " + std::to_string(i) +
                         " is not the annotated A product");
              break;
            }
            if (bn.kind != NodeKind::product ||
                !detail::same_children(bn.children, a.b_children[i])) {
              shape_fail("numerator row " + std::to_string(i) +
                         " is not the annotated B product");
              break;
            }
            b_row_nodes[i] = b_prod;
            internal_products.push_back(joint);
            internal_products.push_back(a_prod);
            internal_products.push_back(b_prod);
            // No dependency arrow from the B part to the A part: the B
            // product's effective scope must not feed the A product's
            // conditioning.
            if (scopes.effective[b_prod].intersects(scopes.conditional[a_prod]))
              rep.add(a.root, rule::cmo_b_to_a,
                      "row " + std::to_string(i) + ": B product " + std::to_string(b_prod) +
                          " effective scope feeds A product " + std::to_string(a_prod) +
                          " conditioning");
          }
        }
      }
    }
    if (!shape_ok) continue;

    // Children must themselves be annotated CMOs (the base case was handled
    // above, so bare indicators are not acceptable here).
    for (std::uint32_t i = 0; i < a.gamma; ++i) {
      for (NodeId c : a.a_children[i])
        if (!is_cmo_child(c))
          rep.add(a.root, rule::cmo_child,
                  "A child " + std::to_string(c) + " is not a valid CMO");
      for (NodeId c : a.b_children[i])
        if (!is_cmo_child(c))
          rep.add(a.root, rule::cmo_child,
                  "B child " + std::to_string(c) + " is not a valid CMO");
    }

    // Internal sums conditionally complete.
    auto check_sum_complete = [&](NodeId s) {
      const Node& n = net.node(s);
      NodeId first = n.children[0];
      for (std::size_t k = 1; k < n.children.size(); ++k)
        if (scopes.effective[n.children[k]] != scopes.effective[first])
          rep.add(s, rule::cond_complete,
                  "children " + std::to_string(first) + " and " +
                      std::to_string(n.children[k]) + " have effective scopes " +
                      scopes.effective[first].to_string() + " vs " +
                      scopes.effective[n.children[k]].to_string());
    };
    check_sum_complete(num);
    if (den != invalid_node) check_sum_complete(den);

    // Internal products conditionally decomposable.
    for (NodeId p : internal_products) {
      const Node& n = net.node(p);
      for (std::size_t i = 0; i < n.children.size(); ++i)
        for (std::size_t j = i + 1; j < n.children.size(); ++j)
          if (scopes.effective[n.children[i]].intersects(scopes.effective[n.children[j]]))
            rep.add(p, rule::cond_decomp_disjoint,
                    "children " + std::to_string(n.children[i]) + " and " +
                        std::to_string(n.children[j]) + " overlap on " +
                        (scopes.effective[n.children[i]] & scopes.effective[n.children[j]])
                            .to_string());
      ChildDependencyGraph g = child_dependency_graph(net, scopes, p);
      std::vector<std::uint32_t> order;
      if (!g.topo_order(order))
        rep.add(p, rule::cond_decomp_acyclic, "child dependency graph has a cycle");
    }

    // All B rows share one effective scope.
    for (std::uint32_t i = 1; i < a.gamma; ++i)
      if (scopes.effective[b_row_nodes[i]] != scopes.effective[b_row_nodes[0]])
        rep.add(a.root, rule::cmo_b_scope,
                "B rows 0 and " + std::to_string(i) + " have effective scopes " +
                    scopes.effective[b_row_nodes[0]].to_string() + " vs " +
                    scopes.effective[b_row_nodes[i]].to_string());
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Brute-force conditional soundness

namespace detail {

/// Evaluator over the descendant set of one or two anchor nodes, with a
/// lenient quotient rule (zero denominator yields -inf instead of throwing)
/// so that an unsound inner quotient surfaces as its own violation rather
/// than aborting the enclosing node's check.
class SubgraphEval {
public:
  SubgraphEval(const Network& net, const EvalContext& ctx, std::vector<NodeId> anchors)
      : net_(&net), ctx_(&ctx), values_(net.size(), neg_inf) {
    std::vector<char> in(net.size(), 0);
    std::vector<NodeId> stack = anchors;
    for (NodeId a : stack) in[a] = 1;
    while (!stack.empty()) {
      NodeId id = stack.back();
      stack.pop_back();
      for (NodeId c : net.node(id).children)
        if (!in[c]) {
          in[c] = 1;
          stack.push_back(c);
        }
    }
    for (NodeId id : net.topological_order())
      if (in[id]) order_.push_back(id);
  }

  double value(NodeId id) const { return values_[id]; }

  void run(const Evidence& evidence) {
    for (NodeId id : order_) {
      const Node& n = net_->node(id);
      switch (n.kind) {
        case NodeKind::indicator: {
          Mark m = evidence[n.var];
          values_[id] =
              (m == Mark::star || static_cast<std::uint8_t>(m) == n.value) ? 0.0 : neg_inf;
          break;
        }
        case NodeKind::sum: {
          double m = neg_inf;
          for (std::size_t k = 0; k < n.children.size(); ++k) {
            double t = ctx_->log_weight(n, k) + values_[n.children[k]];
            if (t > m) m = t;
          }
          if (m == neg_inf) {
            values_[id] = neg_inf;
            break;
          }
          double s = 0.0;
          for (std::size_t k = 0; k < n.children.size(); ++k)
            s += std::exp(ctx_->log_weight(n, k) + values_[n.children[k]] - m);
          values_[id] = m + std::log(s);
          break;
        }
        case NodeKind::product: {
          double s = 0.0;
          for (NodeId c : n.children) {
            if (values_[c] == neg_inf) {
              s = neg_inf;
              break;
            }
            s += values_[c];
          }
          values_[id] = s;
          break;
        }
        case NodeKind::quotient: {
          double num = values_[n.numerator()], den = values_[n.denominator()];
          values_[id] = (den == neg_inf || num == neg_inf) ? neg_inf : num - den;
          break;
        }
      }
    }
  }

private:
  const Network* net_;
  const EvalContext* ctx_;
  std::vector<NodeId> order_;
  std::vector<double> values_;
};

inline bool log_close(double a, double b, double tol) {
  if (a == neg_inf && b == neg_inf) return true;
  if (a == neg_inf || b == neg_inf) return false;
  return std::abs(a - b) <= tol;
}

}  // namespace detail

/// Enumerates, for every quotient node v and every 0/1 assignment of the
/// variables in scope(v): the denominator must be strictly positive, the sum
/// of the numerator over all effective-scope assignments must equal the
/// denominator, and (strong variant) the numerator with Star substituted on
/// the effective scope must equal the denominator. Refuses networks above
/// the enumeration bound. The first offending assignment per node and rule
/// is reported.
inline ValidationReport check_soundness_bruteforce(const Network& net, const ParamVector& params,
                                                   const ScopeTable& scopes,
                                                   std::uint32_t bound = default_enumeration_bound) {
  if (net.num_vars() > bound)
    throw InputError("brute-force soundness over " + std::to_string(net.num_vars()) +
                     " variables exceeds the bound " + std::to_string(bound));
  ValidationReport rep;
  EvalContext ctx(net, params);
  for (NodeId v : net.topological_order()) {
    const Node& n = net.node(v);
    if (n.kind != NodeKind::quotient) continue;
    detail::SubgraphEval sub(net, ctx, {n.numerator(), n.denominator()});
    std::vector<std::uint32_t> svars = scopes.scope[v].vars();
    std::vector<std::uint32_t> evars = scopes.effective[v].vars();
    bool positive_ok = true, marginal_ok = true, star_ok = true;
    for (std::size_t a = 0; a < (std::size_t{1} << svars.size()); ++a) {
      Evidence ev(net.num_vars(), Mark::star);
      for (std::size_t k = 0; k < svars.size(); ++k)
        ev[svars[k]] = (a >> k) & 1 ? Mark::one : Mark::zero;
      sub.run(ev);
      double den = sub.value(n.denominator());
      if (positive_ok && den == neg_inf) {
        rep.add(v, rule::sound_positive,
                "denominator is zero at assignment " + ev.to_string());
        positive_ok = false;
      }
      if (marginal_ok) {
        std::vector<double> terms;
        terms.reserve(std::size_t{1} << evars.size());
        Evidence ez = ev;
        for (std::size_t z = 0; z < (std::size_t{1} << evars.size()); ++z) {
          for (std::size_t k = 0; k < evars.size(); ++k)
            ez[evars[k]] = (z >> k) & 1 ? Mark::one : Mark::zero;
          sub.run(ez);
          terms.push_back(sub.value(n.numerator()));
        }
        double lhs = log_sum_exp(terms);
        if (!detail::log_close(lhs, den, soundness_rel_tol)) {
          rep.add(v, rule::sound_marginal,
                  "sum of numerator over effective scope is " + std::to_string(lhs) +
                      " but denominator is " + std::to_string(den) + " at assignment " +
                      ev.to_string());
          marginal_ok = false;
        }
      }
      if (star_ok) {
        Evidence es = ev;
        for (std::uint32_t i : evars) es[i] = Mark::star;
        sub.run(es);
        double num_star = sub.value(n.numerator());
        if (!detail::log_close(num_star, den, soundness_rel_tol)) {
          rep.add(v, rule::sound_star,
                  "numerator with Star on the effective scope is " + std::to_string(num_star) +
                      " but denominator is " + std::to_string(den) + " at assignment " +
                      ev.to_string());
          star_ok = false;
        }
      }
      if (!positive_ok && !marginal_ok && !star_ok) break;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Profiles

/// Named bundles used by the `validate` CLI subcommand:
///   dnc-spn:              strict completeness/decomposability, no quotient
///                         nodes, unconditional root.
///   valid-cmo:            conditional completeness/decomposability, CMO
///                         structure of every annotation, unconditional root.
///   soundness-bruteforce: conditional checks plus per-quotient enumeration.
///   all:                  conditional checks, unconditional root, CMO check
///                         when annotations are present, soundness when the
///                         variable count is within the bound.
inline ValidationReport run_profile(const Network& net, const ParamVector& params,
                                    const ScopeTable& scopes, const std::string& profile,
                                    const std::vector<CmoAnnotation>& annotations,
                                    std::uint32_t bound = default_enumeration_bound) {
  ValidationReport rep;
  if (profile == "dnc-spn") {
    for (NodeId v = 0; v < net.size(); ++v)
      if (net.node(v).kind == NodeKind::quotient)
        rep.add(v, rule::no_quotient, "quotient node in a sum-product-only profile");
    rep.merge(check_complete(net, scopes, /*conditional=*/false));
    rep.merge(check_decomposable(net, scopes, /*conditional=*/false));
    rep.merge(check_root_unconditional(net, scopes));
  } else if (profile == "valid-cmo") {
    rep.merge(check_complete(net, scopes, /*conditional=*/true));
    rep.merge(check_decomposable(net, scopes, /*conditional=*/true));
    rep.merge(check_valid_cmo(net, scopes, annotations));
    rep.merge(check_root_unconditional(net, scopes));
  } else if (profile == "soundness-bruteforce") {
    rep.merge(check_complete(net, scopes, /*conditional=*/true));
    rep.merge(check_decomposable(net, scopes, /*conditional=*/true));
    rep.merge(check_soundness_bruteforce(net, params, scopes, bound));
    rep.merge(check_root_unconditional(net, scopes));
  } else if (profile == "all") {
    rep.merge(check_complete(net, scopes, /*conditional=*/true));
    rep.merge(check_decomposable(net, scopes, /*conditional=*/true));
    rep.merge(check_root_unconditional(net, scopes));
    if (!annotations.empty()) rep.merge(check_valid_cmo(net, scopes, annotations));
    if (net.num_vars() <= bound)
      rep.merge(check_soundness_bruteforce(net, params, scopes, bound));
  } else {
    throw InputError("unknown validation profile: " + profile);
  }
  return rep;
}

}  // namespace spqn
