#include <cmath>

#include <catch2/catch_amalgamated.hpp>

#include "spqn/eval.hpp"
#include "spqn/oracle.hpp"
#include "support/helpers.hpp"

using namespace spqn;

namespace {

/// Bernoulli leaf over one variable with the given logits.
struct LeafModel {
  Network net;
  ParamVector params;
  NodeId sum;

  explicit LeafModel(double l0, double l1) {
    NetworkBuilder b(1);
    NodeId i0 = b.add_indicator(0, 0);
    NodeId i1 = b.add_indicator(0, 1);
    std::int32_t blk = params.add_block({l0, l1});
    sum = b.add_sum({i0, i1}, blk);
    net = std::move(b).finalize(sum);
  }
};

}  // namespace

TEST_CASE("log_sum_exp handles empty, degenerate and shifted inputs") {
  REQUIRE(log_sum_exp(nullptr, 0) == neg_inf);
  REQUIRE(log_sum_exp({neg_inf, neg_inf}) == neg_inf);
  REQUIRE(log_sum_exp({std::log(2.0), std::log(3.0)}) == Catch::Approx(std::log(5.0)));
  // Max shift keeps large magnitudes stable.
  double big = log_sum_exp({700.0, 700.0});
  REQUIRE(big == Catch::Approx(700.0 + std::log(2.0)));
  REQUIRE(std::isfinite(big));
  REQUIRE(log_sum_exp({-745.0, neg_inf}) == Catch::Approx(-745.0));
}

TEST_CASE("leaf evaluation is the log of the normalized weight") {
  LeafModel m(0.3, -0.8);
  double z = std::log(std::exp(0.3) + std::exp(-0.8));
  REQUIRE(evaluate(m.net, m.params, Evidence::from_string("0")) == Catch::Approx(0.3 - z));
  REQUIRE(evaluate(m.net, m.params, Evidence::from_string("1")) == Catch::Approx(-0.8 - z));
  // Star marginalizes the variable out entirely.
  REQUIRE(evaluate(m.net, m.params, Evidence::from_string("*")) ==
          Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("weights are invariant under a constant logit shift") {
  LeafModel a(0.3, -0.8);
  LeafModel b(0.3 + 5.0, -0.8 + 5.0);
  Evidence e = Evidence::from_string("1");
  REQUIRE(evaluate(a.net, a.params, e) == Catch::Approx(evaluate(b.net, b.params, e)));
}

TEST_CASE("products add logs and short-circuit at zero") {
  NetworkBuilder b(2);
  NodeId i01 = b.add_indicator(0, 1);
  NodeId i10 = b.add_indicator(1, 0);
  NodeId i11 = b.add_indicator(1, 1);
  ParamVector params;
  std::int32_t blk = params.add_block({0.0, 0.0});
  NodeId leaf1 = b.add_sum({i10, i11}, blk);
  NodeId p = b.add_product({i01, leaf1});
  Network net = std::move(b).finalize(p);

  REQUIRE(evaluate(net, params, Evidence::from_string("10")) == Catch::Approx(std::log(0.5)));
  REQUIRE(evaluate(net, params, Evidence::from_string("00")) == neg_inf);
}

TEST_CASE("quotient value is the log conditional") {
  // P(x0 | x1) built as joint / marginal with an uneven joint.
  NetworkBuilder b(2);
  NodeId i00 = b.add_indicator(0, 0);
  NodeId i01 = b.add_indicator(0, 1);
  NodeId i10 = b.add_indicator(1, 0);
  NodeId i11 = b.add_indicator(1, 1);
  ParamVector params;
  std::int32_t mix = params.add_block({std::log(0.7), std::log(0.3)});
  std::int32_t b0 = params.add_block({std::log(0.9), std::log(0.1)});
  std::int32_t b1 = params.add_block({std::log(0.2), std::log(0.8)});
  // Mixture of two product components, so x0 and x1 are dependent.
  NodeId c0 = b.add_product({b.add_sum({i00, i01}, b0), b.add_sum({i10, i11}, b0)});
  NodeId c1 = b.add_product({b.add_sum({i00, i01}, b1), b.add_sum({i10, i11}, b1)});
  NodeId joint = b.add_sum({c0, c1}, mix);
  NodeId den0 = b.add_sum({i10, i11}, b0);
  NodeId den1 = b.add_sum({i10, i11}, b1);
  NodeId den = b.add_sum({den0, den1}, mix);
  NodeId q = b.add_quotient(joint, den);
  NodeId prior = b.add_sum({den0, den1}, mix);
  NodeId root = b.add_product({q, prior});
  Network net = std::move(b).finalize(root);

  // p(x0, x1) = 0.7 * b0(x0) b0(x1) + 0.3 * b1(x0) b1(x1)
  auto joint_p = [](int x0, int x1) {
    double a0 = x0 ? 0.1 : 0.9, a1 = x1 ? 0.1 : 0.9;
    double c0v = x0 ? 0.8 : 0.2, c1v = x1 ? 0.8 : 0.2;
    return 0.7 * a0 * a1 + 0.3 * c0v * c1v;
  };
  for (int x0 = 0; x0 < 2; ++x0)
    for (int x1 = 0; x1 < 2; ++x1) {
      double marg = joint_p(0, x1) + joint_p(1, x1);
      Evidence e(2);
      e[0] = x0 ? Mark::one : Mark::zero;
      e[1] = x1 ? Mark::one : Mark::zero;
      // Root = P(x0 | x1) * P(x1) = joint.
      REQUIRE(evaluate(net, params, e) == Catch::Approx(std::log(joint_p(x0, x1))));
      // The quotient node itself carries the conditional.
      std::vector<double> tr = evaluate_trace(net, params, e);
      REQUIRE(tr[q] == Catch::Approx(std::log(joint_p(x0, x1) / marg)));
    }
}

TEST_CASE("quotient with zero denominator raises an evaluation error") {
  NetworkBuilder b(2);
  NodeId i01 = b.add_indicator(0, 1);
  NodeId i11 = b.add_indicator(1, 1);
  NodeId num = b.add_product({i01, i11});
  NodeId den = b.add_product({i11});
  NodeId q = b.add_quotient(num, den);
  Network net = std::move(b).finalize(q);
  ParamVector params;
  REQUIRE_THROWS_AS(evaluate(net, params, Evidence::from_string("10")), EvalError);
  // Denominator positive: fine.
  REQUIRE(evaluate(net, params, Evidence::from_string("11")) == Catch::Approx(0.0));
}

TEST_CASE("unsafe star patterns are rejected unless overridden") {
  NetworkBuilder b(2);
  NodeId i00 = b.add_indicator(0, 0);
  NodeId i01 = b.add_indicator(0, 1);
  NodeId i10 = b.add_indicator(1, 0);
  NodeId i11 = b.add_indicator(1, 1);
  ParamVector params;
  std::int32_t blk = params.add_block({0.1, -0.1});
  NodeId leaf0 = b.add_sum({i00, i01}, blk);
  NodeId leaf1 = b.add_sum({i10, i11}, blk);
  NodeId num = b.add_product({leaf0, leaf1});
  NodeId den = b.add_sum({i10, i11}, blk);
  NodeId q = b.add_quotient(num, den);
  NodeId prior = b.add_sum({i10, i11}, blk);
  NodeId root = b.add_product({q, prior});
  Network net = std::move(b).finalize(root);

  // Star on the conditioning variable alone is not marginalization-safe.
  REQUIRE_THROWS_AS(evaluate(net, params, Evidence::from_string("0*")), EvalError);
  EvalOptions unsafe;
  unsafe.allow_unsafe_star = true;
  REQUIRE_NOTHROW(evaluate(net, params, Evidence::from_string("0*"), unsafe));
  // Star over the full effective scope is safe and exact.
  REQUIRE(evaluate(net, params, Evidence::from_string("**")) ==
          Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("safe star evaluation equals the enumerated marginal") {
  spqn::Model m = testutil::random_cmo_model(42);
  ScopeTable scopes = compute_scopes(m.net);
  ExactDistribution dist = enumerate_distribution(m.net, m.params);
  std::uint32_t n = m.net.num_vars();
  // All-star, single-star-suffix and half-half splits that satisfy the rule.
  std::vector<std::string> pats;
  pats.push_back(std::string(n, '*'));
  std::string half(n, '0');
  for (std::uint32_t i = n / 2; i < n; ++i) half[i] = '*';
  pats.push_back(half);
  for (const std::string& pat : pats) {
    Evidence e = Evidence::from_string(pat);
    if (!star_pattern_ok(m.net, scopes, e)) continue;
    double got = evaluate(m.net, m.params, e, {&scopes, false});
    double want = dist.prob_of(e);
    REQUIRE(std::exp(got) == Catch::Approx(want).margin(1e-12));
  }
}

TEST_CASE("mean log-likelihood averages in sample order and handles zeros") {
  LeafModel m(std::log(0.25), std::log(0.75));
  std::vector<Evidence> data{Evidence::from_string("0"), Evidence::from_string("1")};
  double want = (std::log(0.25) + std::log(0.75)) / 2.0;
  REQUIRE(mean_log_likelihood(m.net, m.params, data) == Catch::Approx(want));
  REQUIRE_THROWS_AS(mean_log_likelihood(m.net, m.params, {}), InputError);

  // A zero-probability sample pulls the mean to -inf.
  NetworkBuilder b(1);
  NodeId i1 = b.add_indicator(0, 1);
  NodeId p = b.add_product({i1});
  Network net = std::move(b).finalize(p);
  ParamVector empty;
  REQUIRE(mean_log_likelihood(net, empty, {Evidence::from_string("0")}) == neg_inf);
}

TEST_CASE("evaluation is identical across thread counts") {
  spqn::Model m = testutil::random_cmo_model(7);
  std::vector<Evidence> data;
  for (std::size_t i = 0; i < 37; ++i)
    data.push_back(ExactDistribution::assignment(m.net.num_vars(),
                                                 i % (std::size_t{1} << m.net.num_vars())));
  double one = mean_log_likelihood(m.net, m.params, data, {}, 1);
  double four = mean_log_likelihood(m.net, m.params, data, {}, 4);
  REQUIRE(one == four);
}

TEST_CASE("evidence length must match the variable count") {
  LeafModel m(0.0, 0.0);
  REQUIRE_THROWS_AS(evaluate(m.net, m.params, Evidence::from_string("01")), InputError);
}
