#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spqn/common.hpp"
#include "spqn/detail/parallel.hpp"
#include "spqn/eval.hpp"
#include "spqn/network.hpp"
#include "spqn/params.hpp"
#include "spqn/rng.hpp"
#include "spqn/scopes.hpp"

namespace spqn {

/// Ancestral sampler: extends a partial assignment to a full one by walking
/// the network top-down. Quotients descend into the numerator (the
/// denominator is only a normalization factor), products visit children in
/// the dependency-graph order computed once at construction, sums draw a
/// child with probability proportional to weight times the child's value
/// under the current partial assignment, indicators set their variable.
///
/// Correctness of the output distribution requires a strongly conditionally
/// sound network; that precondition is the caller's (see the validator).
/// Between draws the per-node values are cached and setting a variable
/// invalidates exactly the nodes whose scope contains it, so a sample costs
/// far less than one full evaluation per sum visited.
class Sampler {
public:
  Sampler(const Network& net, const ParamVector& params, const ScopeTable& scopes,
          bool use_cache = true)
      : net_(&net), ctx_(net, params), scopes_(&scopes), use_cache_(use_cache) {
    // Per-product child visit order, fixed up front. Ties broken by NodeId.
    plans_.resize(net.size());
    for (NodeId v = 0; v < net.size(); ++v) {
      if (net.node(v).kind != NodeKind::product) continue;
      ChildDependencyGraph g = child_dependency_graph(net, scopes, v);
      std::vector<std::uint32_t> order;
      if (!g.topo_order(order))
        throw SampleError("product node " + std::to_string(v) +
                          " has a cyclic child dependency graph");
      plans_[v] = std::move(order);
    }
  }

  /// One sample extending `partial` from the given node; every variable in
  /// the node's effective scope comes back in {0,1}, observed positions are
  /// returned bit-identical, other positions stay Star. The observed
  /// positions must form a marginalization-safe pattern.
  Evidence sample_from(NodeId start, const Evidence& partial, std::uint64_t seed) const {
    if (partial.size() != net_->num_vars())
      throw InputError("partial assignment length " + std::to_string(partial.size()) +
                       " does not match variable count " + std::to_string(net_->num_vars()));
    if (!star_pattern_ok(*net_, *scopes_, partial))
      throw SampleError("observed positions of " + partial.to_string() +
                        " do not form a marginalization-safe conditioning pattern");
    State st;
    st.assignment = partial;
    st.values.assign(net_->size(), neg_inf);
    st.valid.assign(net_->size(), 0);
    st.rng = SplitMix64(seed);
    descend(start, st);
    for (std::uint32_t i : scopes_->effective[start].vars())
      if (st.assignment[i] == Mark::star)
        throw SampleError("sampling left variable " + std::to_string(i) + " unassigned");
    return st.assignment;
  }

  Evidence sample(const Evidence& partial, std::uint64_t seed) const {
    return sample_from(net_->root(), partial, seed);
  }

  /// `count` independent samples. The per-sample seed is derived from
  /// (seed, index), so batches are reproducible and independent of the
  /// execution order across threads.
  std::vector<Evidence> sample_batch(const Evidence& partial, std::size_t count,
                                     std::uint64_t seed, std::uint32_t threads = 1) const {
    std::vector<Evidence> out(count, Evidence(0));
    detail::parallel_chunks(count, threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i)
        out[i] = sample(partial, derive_seed(seed, i));
    });
    return out;
  }

private:
  struct State {
    Evidence assignment{0};
    std::vector<double> values;
    std::vector<char> valid;
    SplitMix64 rng{0};
  };

  void set_var(std::uint32_t var, std::uint8_t value, State& st) const {
    st.assignment[var] = value ? Mark::one : Mark::zero;
    for (NodeId v = 0; v < net_->size(); ++v)
      if (st.valid[v] && scopes_->scope[v].test(var)) st.valid[v] = 0;
  }

  /// Value of one node under the current partial assignment, reusing cached
  /// descendants that no assignment change has touched. Iterative post-order
  /// so deep networks cannot overflow the call stack.
  double value_of(NodeId id, State& st) const {
    if (!use_cache_) st.valid.assign(net_->size(), 0);
    std::vector<NodeId> stack{id};
    while (!stack.empty()) {
      NodeId v = stack.back();
      if (st.valid[v]) {
        stack.pop_back();
        continue;
      }
      const Node& n = net_->node(v);
      bool ready = true;
      for (NodeId c : n.children)
        if (!st.valid[c]) {
          if (ready) ready = false;
          stack.push_back(c);
        }
      if (!ready) continue;
      stack.pop_back();
      double val = neg_inf;
      switch (n.kind) {
        case NodeKind::indicator: {
          Mark m = st.assignment[n.var];
          val = (m == Mark::star || static_cast<std::uint8_t>(m) == n.value) ? 0.0 : neg_inf;
          break;
        }
        case NodeKind::sum: {
          double mx = neg_inf;
          for (std::size_t k = 0; k < n.children.size(); ++k) {
            double t = ctx_.log_weight(n, k) + st.values[n.children[k]];
            if (t > mx) mx = t;
          }
          if (mx != neg_inf) {
            double s = 0.0;
            for (std::size_t k = 0; k < n.children.size(); ++k)
              s += std::exp(ctx_.log_weight(n, k) + st.values[n.children[k]] - mx);
            val = mx + std::log(s);
          }
          break;
        }
        case NodeKind::product: {
          double s = 0.0;
          for (NodeId c : n.children) {
            if (st.values[c] == neg_inf) {
              s = neg_inf;
              break;
            }
            s += st.values[c];
          }
          val = s;
          break;
        }
        case NodeKind::quotient: {
          double den = st.values[n.denominator()];
          if (den == neg_inf)
            throw SampleError("quotient node " + std::to_string(v) +
                              " has zero-probability denominator during sampling");
          double num = st.values[n.numerator()];
          val = num == neg_inf ? neg_inf : num - den;
          break;
        }
      }
      st.values[v] = val;
      st.valid[v] = 1;
    }
    return st.values[id];
  }

  void descend(NodeId id, State& st) const {
    const Node& n = net_->node(id);
    switch (n.kind) {
      case NodeKind::indicator:
        // Observed positions are never overwritten; an indicator reached
        // through a positive-probability branch agrees with them anyway.
        if (st.assignment[n.var] == Mark::star) set_var(n.var, n.value, st);
        return;
      case NodeKind::sum: {
        std::vector<double> t(n.children.size());
        double mx = neg_inf;
        for (std::size_t k = 0; k < n.children.size(); ++k) {
          t[k] = ctx_.log_weight(n, k) + value_of(n.children[k], st);
          if (t[k] > mx) mx = t[k];
        }
        if (mx == neg_inf)
          throw SampleError("every child of sum node " + std::to_string(id) +
                            " has zero probability under the current partial assignment");
        double total = 0.0;
        for (double& x : t) {
          x = std::exp(x - mx);
          total += x;
        }
        double u = st.rng.next_double() * total;
        std::size_t pick = 0;
        double acc = 0.0;
        bool chosen = false;
        for (std::size_t k = 0; k < t.size(); ++k) {
          acc += t[k];
          if (u < acc && t[k] > 0.0) {
            pick = k;
            chosen = true;
            break;
          }
        }
        if (!chosen) {
          // Rounding pushed u past the accumulated mass; take the last
          // positive-probability child.
          for (std::size_t k = t.size(); k-- > 0;)
            if (t[k] > 0.0) {
              pick = k;
              break;
            }
        }
        descend(n.children[pick], st);
        return;
      }
      case NodeKind::product: {
        // Children whose effective scope is already fully assigned are
        // skipped; a partially assigned effective scope is descended into to
        // sample the remainder.
        for (std::uint32_t pos : plans_[id]) {
          NodeId c = n.children[pos];
          bool done = true;
          for (std::uint32_t i : scopes_->effective[c].vars())
            if (st.assignment[i] == Mark::star) {
              done = false;
              break;
            }
          if (!done) descend(c, st);
        }
        return;
      }
      case NodeKind::quotient:
        descend(n.numerator(), st);
        return;
    }
  }

  const Network* net_;
  EvalContext ctx_;
  const ScopeTable* scopes_;
  bool use_cache_;
  std::vector<std::vector<std::uint32_t>> plans_;
};

/// One-shot conveniences for callers without a long-lived Sampler.
inline Evidence sample(const Network& net, const ParamVector& params, const ScopeTable& scopes,
                       const Evidence& partial, std::uint64_t seed) {
  return Sampler(net, params, scopes).sample(partial, seed);
}

inline std::vector<Evidence> sample_batch(const Network& net, const ParamVector& params,
                                          const ScopeTable& scopes, const Evidence& partial,
                                          std::size_t count, std::uint64_t seed,
                                          std::uint32_t threads = 1) {
  return Sampler(net, params, scopes).sample_batch(partial, count, seed, threads);
}

}  // namespace spqn
