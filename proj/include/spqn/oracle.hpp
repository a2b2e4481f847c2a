#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "spqn/common.hpp"
#include "spqn/eval.hpp"
#include "spqn/network.hpp"

namespace spqn {

inline constexpr std::uint32_t default_enumeration_bound = 20;

/// Exact distribution table over all 2^N assignments, built by evaluating the
/// network on every one. Assignment index x encodes variable i as bit i.
/// Small-N ground truth for normalization, marginal, and sampling checks.
class ExactDistribution {
public:
  ExactDistribution() = default;
  ExactDistribution(std::uint32_t num_vars, std::vector<double> probs)
      : num_vars_(num_vars), p_(std::move(probs)) {}

  std::uint32_t num_vars() const { return num_vars_; }
  std::size_t size() const { return p_.size(); }
  double prob(std::size_t idx) const { return p_[idx]; }
  const std::vector<double>& table() const { return p_; }

  double total() const {
    double s = 0.0;
    for (double v : p_) s += v;
    return s;
  }

  static Evidence assignment(std::uint32_t num_vars, std::size_t idx) {
    Evidence e(num_vars);
    for (std::uint32_t i = 0; i < num_vars; ++i)
      e[i] = (idx >> i) & 1 ? Mark::one : Mark::zero;
    return e;
  }

  /// Probability mass of every completion of `evidence` (Star = summed out).
  double prob_of(const Evidence& evidence) const {
    if (evidence.size() != num_vars_)
      throw InputError("evidence length does not match oracle variable count");
    std::size_t fixed_mask = 0, fixed_bits = 0;
    for (std::uint32_t i = 0; i < num_vars_; ++i) {
      if (evidence[i] == Mark::star) continue;
      fixed_mask |= std::size_t{1} << i;
      if (evidence[i] == Mark::one) fixed_bits |= std::size_t{1} << i;
    }
    double s = 0.0;
    for (std::size_t x = 0; x < p_.size(); ++x)
      if ((x & fixed_mask) == fixed_bits) s += p_[x];
    return s;
  }

  /// Sums out the given variables, returning the table over the remaining
  /// ones (remaining variables keep their relative order). Summing out every
  /// variable leaves the single-entry total; summing out none returns a copy.
  ExactDistribution marginalize(const VarSet& out) const {
    std::vector<std::uint32_t> keep;
    for (std::uint32_t i = 0; i < num_vars_; ++i)
      if (!out.test(i)) keep.push_back(i);
    std::vector<double> q(std::size_t{1} << keep.size(), 0.0);
    for (std::size_t x = 0; x < p_.size(); ++x) {
      std::size_t y = 0;
      for (std::size_t k = 0; k < keep.size(); ++k)
        if ((x >> keep[k]) & 1) y |= std::size_t{1} << k;
      q[y] += p_[x];
    }
    return ExactDistribution(static_cast<std::uint32_t>(keep.size()), std::move(q));
  }

  /// Conditional slice given the observed positions of `evidence`,
  /// renormalized over the Star positions. Zero-mass conditioning is an
  /// input error.
  ExactDistribution condition(const Evidence& evidence) const {
    double z = prob_of(evidence);
    if (z <= 0.0) throw InputError("conditioning event has zero probability");
    std::vector<std::uint32_t> keep;
    for (std::uint32_t i = 0; i < num_vars_; ++i)
      if (evidence[i] == Mark::star) keep.push_back(i);
    std::vector<double> q(std::size_t{1} << keep.size(), 0.0);
    for (std::size_t x = 0; x < p_.size(); ++x) {
      bool match = true;
      for (std::uint32_t i = 0; i < num_vars_ && match; ++i) {
        if (evidence[i] == Mark::star) continue;
        match = ((x >> i) & 1) == (evidence[i] == Mark::one ? 1u : 0u);
      }
      if (!match) continue;
      std::size_t y = 0;
      for (std::size_t k = 0; k < keep.size(); ++k)
        if ((x >> keep[k]) & 1) y |= std::size_t{1} << k;
      q[y] += p_[x] / z;
    }
    return ExactDistribution(static_cast<std::uint32_t>(keep.size()), std::move(q));
  }

private:
  std::uint32_t num_vars_ = 0;
  std::vector<double> p_;
};

/// Brute-force enumeration; refuses networks with more than `bound`
/// variables.
inline ExactDistribution enumerate_distribution(const Network& net, const ParamVector& params,
                                                std::uint32_t bound = default_enumeration_bound,
                                                int threads = 1) {
  if (net.num_vars() > bound)
    throw InputError("enumeration over " + std::to_string(net.num_vars()) +
                     " variables exceeds the bound " + std::to_string(bound));
  const std::size_t total = std::size_t{1} << net.num_vars();
  std::vector<double> p(total, 0.0);
  detail::parallel_chunks(total, threads, [&](std::size_t b, std::size_t e) {
    EvalContext ctx(net, params);
    for (std::size_t x = b; x < e; ++x) {
      double ll = ctx.run(ExactDistribution::assignment(net.num_vars(), x));
      p[x] = ll == neg_inf ? 0.0 : std::exp(ll);
    }
  });
  return ExactDistribution(net.num_vars(), std::move(p));
}

/// Half L1 distance between two distributions over the same support size.
inline double tvd(const ExactDistribution& a, const ExactDistribution& b) {
  if (a.size() != b.size()) throw InputError("tvd over mismatched supports");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a.prob(i) - b.prob(i));
  return 0.5 * s;
}

/// Empirical distribution of fully observed samples, for comparison against
/// an exact table.
inline ExactDistribution empirical_distribution(std::uint32_t num_vars,
                                                const std::vector<Evidence>& samples) {
  std::vector<double> p(std::size_t{1} << num_vars, 0.0);
  for (const Evidence& s : samples) {
    if (s.size() != num_vars || s.has_star())
      throw InputError("empirical distribution needs fully observed samples");
    std::size_t x = 0;
    for (std::uint32_t i = 0; i < num_vars; ++i)
      if (s[i] == Mark::one) x |= std::size_t{1} << i;
    p[x] += 1.0;
  }
  if (!samples.empty())
    for (double& v : p) v /= static_cast<double>(samples.size());
  return ExactDistribution(num_vars, std::move(p));
}

}  // namespace spqn
