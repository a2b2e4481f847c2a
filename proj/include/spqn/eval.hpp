#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "spqn/common.hpp"
#include "spqn/detail/parallel.hpp"
#include "spqn/network.hpp"
#include "spqn/params.hpp"
#include "spqn/scopes.hpp"

namespace spqn {

/// Max-shifted log(sum(exp(x))). Empty input and all -inf input give -inf;
/// never NaN, and values with |x| <= 300 neither overflow nor collapse.
inline double log_sum_exp(const double* x, std::size_t n) {
  double m = neg_inf;
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] > m) m = x[i];
  if (m == neg_inf) return neg_inf;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(x[i] - m);
  return m + std::log(s);
}

inline double log_sum_exp(const std::vector<double>& x) {
  return log_sum_exp(x.data(), x.size());
}

struct EvalOptions {
  /// Scope table to use for the Star-pattern admission check. Computed on the
  /// fly when null and the evidence contains Star.
  const ScopeTable* scopes = nullptr;
  /// Skips the Star-pattern check. The result is then not guaranteed to be a
  /// marginal; internal machinery (brute-force soundness, Algorithm 1) relies
  /// on node-local semantics and sets this deliberately.
  bool allow_unsafe_star = false;
};

/// Reusable evaluation state bound to one (network, params) pair. Holds the
/// log-weights (log-softmax per block) and the per-node value buffer, so
/// batch callers pay the softmax once per parameter refresh instead of per
/// evidence vector.
class EvalContext {
public:
  EvalContext(const Network& net, const ParamVector& params)
      : net_(&net), params_(&params), values_(net.size(), neg_inf) {
    check_params_match(net, params);
    refresh_params();
  }

  const Network& net() const { return *net_; }
  const ParamVector& params() const { return *params_; }

  /// Re-derives log-weights after the underlying logits changed.
  void refresh_params() {
    log_weights_.assign(params_->dim(), 0.0);
    for (std::int32_t b = 0; b < static_cast<std::int32_t>(params_->block_count()); ++b) {
      auto logits = params_->block_logits(b);
      double z = log_sum_exp(logits.data(), logits.size());
      std::size_t off = params_->block(b).offset;
      for (std::size_t k = 0; k < logits.size(); ++k) log_weights_[off + k] = logits[k] - z;
    }
  }

  /// log weight of child index k of a sum node.
  double log_weight(const Node& sum, std::size_t k) const {
    return log_weights_[params_->block(sum.block).offset + k];
  }

  /// Evaluates every node bottom-up; returns the root value. The per-node
  /// trace stays valid until the next call. Bit-deterministic for identical
  /// (network, params, evidence).
  double run(const Evidence& evidence) {
    if (evidence.size() != net_->num_vars())
      throw InputError("evidence length " + std::to_string(evidence.size()) +
                       " does not match variable count " + std::to_string(net_->num_vars()));
    for (NodeId id : net_->topological_order()) values_[id] = eval_node(id, evidence);
    return values_[net_->root()];
  }

  /// Per-node log values indexed by NodeId, filled by the last run().
  const std::vector<double>& trace() const { return values_; }

  double eval_node(NodeId id, const Evidence& evidence) const {
    const Node& n = net_->node(id);
    switch (n.kind) {
      case NodeKind::indicator: {
        Mark m = evidence[n.var];
        if (m == Mark::star) return 0.0;
        return static_cast<std::uint8_t>(m) == n.value ? 0.0 : neg_inf;
      }
      case NodeKind::sum: {
        // log sum_c w_c exp(v_c), max-shifted.
        std::size_t off = params_->block(n.block).offset;
        double m = neg_inf;
        for (std::size_t k = 0; k < n.children.size(); ++k) {
          double t = log_weights_[off + k] + values_[n.children[k]];
          if (t > m) m = t;
        }
        if (m == neg_inf) return neg_inf;
        double s = 0.0;
        for (std::size_t k = 0; k < n.children.size(); ++k)
          s += std::exp(log_weights_[off + k] + values_[n.children[k]] - m);
        return m + std::log(s);
      }
      case NodeKind::product: {
        double s = 0.0;
        for (NodeId c : n.children) {
          if (values_[c] == neg_inf) return neg_inf;
          s += values_[c];
        }
        return s;
      }
      case NodeKind::quotient: {
        double den = values_[n.denominator()];
        if (den == neg_inf)
          throw EvalError("quotient node " + std::to_string(id) +
                          " has zero-probability denominator");
        double num = values_[n.numerator()];
        return num == neg_inf ? neg_inf : num - den;
      }
    }
    return neg_inf;
  }

private:
  const Network* net_;
  const ParamVector* params_;
  std::vector<double> log_weights_;
  std::vector<double> values_;

  friend class GradContext;
  const std::vector<double>& log_weights() const { return log_weights_; }
};

namespace detail {
inline void admit_star_pattern(const Network& net, const Evidence& evidence,
                               const EvalOptions& opts) {
  if (opts.allow_unsafe_star || !evidence.has_star()) return;
  if (opts.scopes) {
    if (!star_pattern_ok(net, *opts.scopes, evidence))
      throw EvalError("Star pattern " + evidence.to_string() +
                      " is not marginalization-safe for this network");
  } else {
    ScopeTable scopes = compute_scopes(net);
    if (!star_pattern_ok(net, scopes, evidence))
      throw EvalError("Star pattern " + evidence.to_string() +
                      " is not marginalization-safe for this network");
  }
}
}  // namespace detail

/// Log value of the root for one evidence vector. Evidence containing Star is
/// admitted only when the Star-pattern rule holds (or the unsafe override is
/// set); what comes back is then exactly the marginal over the Star set.
inline double evaluate(const Network& net, const ParamVector& params, const Evidence& evidence,
                       const EvalOptions& opts = {}) {
  detail::admit_star_pattern(net, evidence, opts);
  EvalContext ctx(net, params);
  return ctx.run(evidence);
}

/// Per-node log values (indexed by NodeId) for one evidence vector.
inline std::vector<double> evaluate_trace(const Network& net, const ParamVector& params,
                                          const Evidence& evidence, const EvalOptions& opts = {}) {
  detail::admit_star_pattern(net, evidence, opts);
  EvalContext ctx(net, params);
  ctx.run(evidence);
  return ctx.trace();
}

/// Mean log-likelihood over a dataset; -inf as soon as any sample has zero
/// probability. Per-sample evaluation may fan out across threads; the
/// reduction is always in sample order, so results are bit-identical for any
/// thread count.
inline double mean_log_likelihood(const Network& net, const ParamVector& params,
                                  const std::vector<Evidence>& data, const EvalOptions& opts = {},
                                  int threads = 1) {
  if (data.empty()) throw InputError("mean_log_likelihood over an empty dataset");
  for (const Evidence& e : data) detail::admit_star_pattern(net, e, opts);
  std::vector<double> vals(data.size());
  detail::parallel_chunks(data.size(), threads, [&](std::size_t b, std::size_t e) {
    EvalContext ctx(net, params);
    for (std::size_t i = b; i < e; ++i) vals[i] = ctx.run(data[i]);
  });
  double s = 0.0;
  for (double v : vals) {
    if (v == neg_inf) return neg_inf;
    s += v;
  }
  return s / static_cast<double>(data.size());
}

}  // namespace spqn
