#pragma once

#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "spqn/common.hpp"
#include "spqn/detail/parallel.hpp"
#include "spqn/eval.hpp"
#include "spqn/network.hpp"
#include "spqn/params.hpp"
#include "spqn/rng.hpp"

namespace spqn {

struct GradResult {
  double value = 0.0;            // mean log-likelihood over the batch
  std::vector<double> grad;      // d(mean LL)/d(logit), same layout as ParamVector
};

namespace detail {

/// Reverse sweep for one sample. `adjoint[v]` is d(log root)/d(log value of v).
/// Sum child: parent adjoint times (weight * child / sum). Product child:
/// parent adjoint, once per occurrence. Quotient: +parent into the numerator,
/// -parent into the denominator. Logit gradients go through the normalized
/// exponential, so per sum node the block picks up t_k - p_k * sum(t).
inline void backward_one(const Network& net, const EvalContext& ctx,
                         std::vector<double>& adjoint, std::vector<double>& grad) {
  const std::vector<double>& val = ctx.trace();
  adjoint.assign(net.size(), 0.0);
  adjoint[net.root()] = 1.0;
  const auto& order = net.topological_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeId id = *it;
    double a = adjoint[id];
    if (a == 0.0) continue;  // also guards zero-probability regions
    const Node& n = net.node(id);
    switch (n.kind) {
      case NodeKind::indicator:
        break;
      case NodeKind::sum: {
        std::size_t off = ctx.params().block(n.block).offset;
        double tsum = 0.0;
        // First pass: child adjoints and the per-logit responsibilities.
        for (std::size_t k = 0; k < n.children.size(); ++k) {
          double c = val[n.children[k]];
          double t = c == neg_inf ? 0.0 : a * std::exp(ctx.log_weight(n, k) + c - val[id]);
          adjoint[n.children[k]] += t;
          grad[off + k] += t;
          tsum += t;
        }
        for (std::size_t k = 0; k < n.children.size(); ++k)
          grad[off + k] -= std::exp(ctx.log_weight(n, k)) * tsum;
        break;
      }
      case NodeKind::product:
        for (NodeId c : n.children) adjoint[c] += a;
        break;
      case NodeKind::quotient:
        adjoint[n.numerator()] += a;
        adjoint[n.denominator()] -= a;
        break;
    }
  }
}

}  // namespace detail

/// Mean log-likelihood of the batch and its gradient with respect to every
/// logit. Shared blocks accumulate over all sum nodes viewing them. A
/// zero-probability sample is an error naming the sample index: the gradient
/// of -inf is undefined, and on the supported constructions such a sample
/// indicates a bug, not data to be clamped. Serial execution (threads <= 1)
/// reduces in sample order; parallel runs reduce per-chunk results in chunk
/// order, deterministic for a fixed thread count.
inline GradResult grad_mean_log_likelihood(const Network& net, const ParamVector& params,
                                           const std::vector<Evidence>& batch, int threads = 1) {
  if (batch.empty()) throw InputError("gradient over an empty batch");
  std::size_t chunks = detail::chunk_count(batch.size(), threads);
  std::vector<std::vector<double>> chunk_grad(chunks);
  std::vector<double> chunk_value(chunks, 0.0);
  std::vector<std::exception_ptr> chunk_error(chunks);
  detail::parallel_chunks_indexed(
      batch.size(), threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        try {
          EvalContext ctx(net, params);
          std::vector<double> grad(params.dim(), 0.0);
          std::vector<double> adjoint;
          double value = 0.0;
          for (std::size_t i = begin; i < end; ++i) {
            double ll;
            try {
              ll = ctx.run(batch[i]);
            } catch (const EvalError& e) {
              throw TrainError("sample " + std::to_string(i) + ": " + e.what());
            }
            if (ll == neg_inf)
              throw TrainError("sample " + std::to_string(i) +
                               " has zero probability; cannot take its gradient");
            value += ll;
            detail::backward_one(net, ctx, adjoint, grad);
          }
          chunk_grad[chunk] = std::move(grad);
          chunk_value[chunk] = value;
        } catch (...) {
          chunk_error[chunk] = std::current_exception();
        }
      });
  for (const std::exception_ptr& e : chunk_error)
    if (e) std::rethrow_exception(e);
  GradResult out;
  out.grad.assign(params.dim(), 0.0);
  for (std::size_t c = 0; c < chunks; ++c) {
    out.value += chunk_value[c];
    for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += chunk_grad[c][i];
  }
  double inv = 1.0 / static_cast<double>(batch.size());
  out.value *= inv;
  for (double& g : out.grad) g *= inv;
  return out;
}

struct TrainConfig {
  double learning_rate = 5e-2;
  double beta1 = 0.9;
  double beta2 = 0.9;
  double epsilon_adam = 1e-8;
  std::uint32_t batch_size = 100;
  std::uint32_t epochs = 20;
  std::uint64_t seed = 0;
  bool shuffle = true;
  int threads = 1;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
      throw InputError("learning rate must be positive and finite");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
      throw InputError("beta1 and beta2 must lie in (0,1)");
    if (!(epsilon_adam > 0.0)) throw InputError("epsilon_adam must be positive");
    if (batch_size == 0) throw InputError("batch size must be positive");
  }
};

/// Adam moment buffers. Frozen blocks are masked at update time: their
/// logits and moments never move, while gradients stay truthful.
struct AdamState {
  std::vector<double> m, v;
  std::vector<char> frozen;
  std::uint64_t step = 0;

  explicit AdamState(const ParamVector& params)
      : m(params.dim(), 0.0), v(params.dim(), 0.0), frozen(params.dim(), 0) {
    for (std::int32_t b = 0; b < static_cast<std::int32_t>(params.block_count()); ++b) {
      const ParamBlock& blk = params.block(b);
      if (blk.frozen)
        for (std::size_t i = 0; i < blk.length; ++i) frozen[blk.offset + i] = 1;
    }
  }
};

/// One ascent step (maximizing log-likelihood) with bias-corrected moments.
inline void adam_step(ParamVector& params, AdamState& state, const std::vector<double>& grad,
                      const TrainConfig& cfg) {
  if (grad.size() != params.dim())
    throw InputError("gradient length " + std::to_string(grad.size()) +
                     " does not match parameter count " + std::to_string(params.dim()));
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!std::isfinite(grad[i]))
      throw TrainError("non-finite gradient " + std::to_string(grad[i]) + " at coordinate " +
                       std::to_string(i));
  state.step += 1;
  double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  std::vector<double>& logits = params.logits();
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (state.frozen[i]) continue;
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    double mhat = state.m[i] / c1;
    double vhat = state.v[i] / c2;
    logits[i] += cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon_adam);
  }
}

struct EpochStats {
  std::uint32_t epoch = 0;  // 1-based
  double train_ll = 0.0;
  double valid_ll = 0.0;
};

/// Mini-batch maximum-likelihood ascent. Shuffles per epoch with a seed
/// derived from (config.seed, epoch), walks contiguous mini-batches (the
/// final short batch included), and records full-pass train and validation
/// mean log-likelihood after each epoch. Deterministic given (seed, config,
/// data) with threads <= 1. epochs = 0 leaves the parameters untouched and
/// returns an empty history.
inline std::vector<EpochStats> train(const Network& net, ParamVector& params,
                                     const std::vector<Evidence>& train_set,
                                     const std::vector<Evidence>& valid_set,
                                     const TrainConfig& config,
                                     const std::function<void(const EpochStats&)>& on_epoch = {}) {
  config.validate();
  if (train_set.empty()) throw InputError("training set is empty");
  if (valid_set.empty()) throw InputError("validation set is empty");
  std::vector<EpochStats> history;
  if (config.epochs == 0) return history;
  AdamState state(params);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Evidence> batch;
  for (std::uint32_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.shuffle) {
      SplitMix64 rng(derive_seed(config.seed, epoch));
      for (std::size_t i = order.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(order[i - 1], order[j]);
      }
    }
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      std::size_t e = std::min(order.size(), b + config.batch_size);
      batch.clear();
      for (std::size_t i = b; i < e; ++i) batch.push_back(train_set[order[i]]);
      GradResult g = grad_mean_log_likelihood(net, params, batch, config.threads);
      adam_step(params, state, g.grad, config);
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_ll = mean_log_likelihood(net, params, train_set, {}, config.threads);
    stats.valid_ll = mean_log_likelihood(net, params, valid_set, {}, config.threads);
    history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return history;
}

}  // namespace spqn
