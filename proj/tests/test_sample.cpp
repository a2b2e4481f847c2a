#include <cmath>

#include <catch2/catch_amalgamated.hpp>

#include "spqn/build.hpp"
#include "spqn/oracle.hpp"
#include "spqn/sample.hpp"
#include "support/helpers.hpp"

using namespace spqn;

TEST_CASE("leaf sampling frequencies match the weights") {
  ModelAssembler a(1);
  NodeId leaf = a.leaf_cmo(0, std::log(0.2), std::log(0.8));
  Model m = std::move(a).finalize(leaf);
  ScopeTable scopes = compute_scopes(m.net);
  std::vector<Evidence> out = sample_batch(m.net, m.params, scopes, Evidence(1), 20000, 5);
  std::size_t ones = 0;
  for (const Evidence& e : out) {
    REQUIRE_FALSE(e.has_star());
    ones += e[0] == Mark::one;
  }
  REQUIRE(std::abs(double(ones) / 20000 - 0.8) < 0.01);
}

TEST_CASE("observed positions come back bit-identical") {
  Model m = build_trianglefree_spqn(3);
  ScopeTable scopes = compute_scopes(m.net);
  Evidence partial = Evidence::from_string("1**");
  Sampler s(m.net, m.params, scopes);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Evidence e = s.sample(partial, seed);
    REQUIRE(e[0] == Mark::one);
    REQUIRE_FALSE(e.has_star());
  }
}

TEST_CASE("a fully observed assignment is returned unchanged") {
  Model m = build_trianglefree_spqn(3);
  ScopeTable scopes = compute_scopes(m.net);
  Evidence full = Evidence::from_string("100");
  REQUIRE(sample(m.net, m.params, scopes, full, 9) == full);
}

TEST_CASE("batches are reproducible and independent of thread count") {
  Model m = testutil::random_cmo_model(4);
  ScopeTable scopes = compute_scopes(m.net);
  Evidence blank(m.net.num_vars());
  std::vector<Evidence> a = sample_batch(m.net, m.params, scopes, blank, 500, 42, 1);
  std::vector<Evidence> b = sample_batch(m.net, m.params, scopes, blank, 500, 42, 1);
  std::vector<Evidence> c = sample_batch(m.net, m.params, scopes, blank, 500, 42, 4);
  std::vector<Evidence> d = sample_batch(m.net, m.params, scopes, blank, 500, 43, 1);
  REQUIRE(a == b);
  REQUIRE(a == c);
  REQUIRE(a != d);
}

TEST_CASE("incremental reuse agrees with full re-evaluation") {
  Model m = build_trianglefree_spqn(4);
  ScopeTable scopes = compute_scopes(m.net);
  Sampler cached(m.net, m.params, scopes, /*use_cache=*/true);
  Sampler fresh(m.net, m.params, scopes, /*use_cache=*/false);
  Evidence blank(m.net.num_vars());
  for (std::uint64_t seed = 0; seed < 200; ++seed)
    REQUIRE(cached.sample(blank, seed) == fresh.sample(blank, seed));
}

TEST_CASE("triangle-free sampling matches the enumerated distribution") {
  Model m = build_trianglefree_spqn(3);
  ScopeTable scopes = compute_scopes(m.net);
  ExactDistribution dist = enumerate_distribution(m.net, m.params);
  std::vector<Evidence> out =
      sample_batch(m.net, m.params, scopes, Evidence(m.net.num_vars()), 50000, 77);
  ExactDistribution emp = empirical_distribution(m.net.num_vars(), out);
  REQUIRE(tvd(dist, emp) < 0.015);
  // No sampled graph contains a triangle.
  for (const Evidence& e : out) {
    std::size_t bits = 0;
    for (std::uint32_t i = 0; i < 3; ++i)
      if (e[i] == Mark::one) bits |= std::size_t{1} << i;
    REQUIRE_FALSE(testutil::has_triangle(3, bits));
  }
}

TEST_CASE("conditional sampling matches the renormalized slice") {
  Model m = build_trianglefree_spqn(3);
  ScopeTable scopes = compute_scopes(m.net);
  Evidence cond = Evidence::from_string("1**");
  ExactDistribution slice = enumerate_distribution(m.net, m.params).condition(cond);
  std::vector<Evidence> out = sample_batch(m.net, m.params, scopes, cond, 50000, 99);
  std::vector<double> emp(4, 0.0);
  for (const Evidence& e : out) {
    std::size_t y = (e[1] == Mark::one ? 1 : 0) | (e[2] == Mark::one ? 2 : 0);
    emp[y] += 1.0 / out.size();
  }
  double d = 0.0;
  for (std::size_t y = 0; y < 4; ++y) d += std::abs(emp[y] - slice.prob(y));
  REQUIRE(0.5 * d < 0.015);
}

TEST_CASE("conditioning patterns that break marginalization are refused") {
  Model m = build_trianglefree_spqn(3);
  ScopeTable scopes = compute_scopes(m.net);
  // Star on a wing edge with the dependent edge observed: the quotient for
  // edge (2,3) conditions on both wing edges.
  Evidence bad = Evidence::from_string("0*1");
  REQUIRE_FALSE(star_pattern_ok(m.net, scopes, bad));
  Sampler s(m.net, m.params, scopes);
  REQUIRE_THROWS_AS(s.sample(bad, 1), SampleError);
}

TEST_CASE("partial assignment length must match") {
  Model m = build_trianglefree_spqn(3);
  ScopeTable scopes = compute_scopes(m.net);
  Sampler s(m.net, m.params, scopes);
  REQUIRE_THROWS_AS(s.sample(Evidence(2), 1), InputError);
}

TEST_CASE("conditioning into an impossible event is an error") {
  // Sum whose only component requires x0 = 1, conditioned on x0 = 0.
  NetworkBuilder b(1);
  NodeId i1 = b.add_indicator(0, 1);
  NodeId p = b.add_product({i1});
  ParamVector params;
  std::int32_t blk = params.add_block({0.0});
  NodeId root = b.add_sum({p}, blk);
  Network net = std::move(b).finalize(root);
  ScopeTable scopes = compute_scopes(net);
  Sampler s(net, params, scopes);
  REQUIRE_THROWS_AS(s.sample(Evidence::from_string("0"), 1), SampleError);
  REQUIRE(s.sample(Evidence::from_string("*"), 1) == Evidence::from_string("1"));
}

TEST_CASE("sampler refuses networks whose products cannot be ordered") {
  NetworkBuilder b(2);
  NodeId i00 = b.add_indicator(0, 0);
  NodeId i01 = b.add_indicator(0, 1);
  NodeId i10 = b.add_indicator(1, 0);
  NodeId i11 = b.add_indicator(1, 1);
  ParamVector params;
  std::int32_t blk = params.add_block({0.0, 0.0});
  NodeId leaf0 = b.add_sum({i00, i01}, blk);
  NodeId leaf1 = b.add_sum({i10, i11}, blk);
  NodeId joint = b.add_product({leaf0, leaf1});
  NodeId q0 = b.add_quotient(joint, leaf1);
  NodeId q1 = b.add_quotient(joint, leaf0);
  NodeId root = b.add_product({q0, q1});
  Network net = std::move(b).finalize(root);
  ScopeTable scopes = compute_scopes(net);
  REQUIRE_THROWS_AS(Sampler(net, params, scopes), SampleError);
}

TEST_CASE("deep conditioning chains sample in dependency order") {
  // Random overlapping model: every window's conditioning must be filled
  // before its quotient draws, or the post-condition would fail.
  for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
    Model m = testutil::random_cmo_model(seed);
    ScopeTable scopes = compute_scopes(m.net);
    Evidence blank(m.net.num_vars());
    std::vector<Evidence> out = sample_batch(m.net, m.params, scopes, blank, 200, seed);
    for (const Evidence& e : out) REQUIRE_FALSE(e.has_star());
  }
}
