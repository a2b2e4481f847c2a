#include <catch2/catch_amalgamated.hpp>

#include "spqn/network.hpp"

using namespace spqn;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("evidence text form round-trips") {
  Evidence e = Evidence::from_string("01*10");
  REQUIRE(e.size() == 5);
  REQUIRE(e[0] == Mark::zero);
  REQUIRE(e[1] == Mark::one);
  REQUIRE(e[2] == Mark::star);
  REQUIRE(e.to_string() == "01*10");
  REQUIRE(e.has_star());
  REQUIRE(e.star_count() == 1);
  REQUIRE(e.star_set().vars() == std::vector<std::uint32_t>{2});
  REQUIRE_FALSE(Evidence::from_string("0101").has_star());
}

TEST_CASE("evidence rejects characters outside 0 1 star") {
  REQUIRE_THROWS_MATCHES(Evidence::from_string("01x"), InputError,
                         Catch::Matchers::MessageMatches(ContainsSubstring("position 2")));
}

TEST_CASE("builder produces a finalized network with topological order") {
  NetworkBuilder b(2);
  NodeId i0 = b.add_indicator(0, 0);
  NodeId i1 = b.add_indicator(0, 1);
  NodeId s = b.add_sum({i0, i1}, 0);
  NodeId j0 = b.add_indicator(1, 0);
  NodeId j1 = b.add_indicator(1, 1);
  NodeId t = b.add_sum({j0, j1}, 1);
  NodeId p = b.add_product({s, t});
  Network net = std::move(b).finalize(p);

  REQUIRE(net.size() == 7);
  REQUIRE(net.num_vars() == 2);
  REQUIRE(net.root() == p);
  REQUIRE(net.node(p).kind == NodeKind::product);
  REQUIRE(net.node(s).children == std::vector<NodeId>{i0, i1});

  const std::vector<NodeId>& order = net.topological_order();
  REQUIRE(order.size() == net.size());
  std::vector<std::size_t> pos(net.size());
  for (std::size_t k = 0; k < order.size(); ++k) pos[order[k]] = k;
  for (NodeId id = 0; id < net.size(); ++id)
    for (NodeId c : net.node(id).children) REQUIRE(pos[c] < pos[id]);
  // Everything here is ready in id order, so the deterministic tie-break is
  // the identity permutation.
  REQUIRE(order == std::vector<NodeId>{0, 1, 2, 3, 4, 5, 6});
}

TEST_CASE("quotient children are numerator then denominator") {
  NetworkBuilder b(1);
  NodeId i0 = b.add_indicator(0, 0);
  NodeId i1 = b.add_indicator(0, 1);
  NodeId s = b.add_sum({i0, i1}, 0);
  NodeId s2 = b.add_sum({i0, i1}, 0);
  NodeId q = b.add_quotient(s, s2);
  Network net = std::move(b).finalize(q);
  REQUIRE(net.node(q).kind == NodeKind::quotient);
  REQUIRE(net.node(q).numerator() == s);
  REQUIRE(net.node(q).denominator() == s2);
}

TEST_CASE("structural validation rejects malformed graphs") {
  auto ind = [](std::uint32_t var, std::uint8_t value) {
    Node n;
    n.kind = NodeKind::indicator;
    n.var = var;
    n.value = value;
    return n;
  };
  auto sum = [](std::vector<NodeId> ch, std::int32_t block) {
    Node n;
    n.kind = NodeKind::sum;
    n.children = std::move(ch);
    n.block = block;
    return n;
  };
  auto prod = [](std::vector<NodeId> ch) {
    Node n;
    n.kind = NodeKind::product;
    n.children = std::move(ch);
    return n;
  };

  SECTION("empty network") {
    REQUIRE_THROWS_AS(Network::finalize(1, {}, 0), StructuralError);
  }
  SECTION("root out of range") {
    REQUIRE_THROWS_AS(Network::finalize(1, {ind(0, 0)}, 5), StructuralError);
  }
  SECTION("missing child") {
    REQUIRE_THROWS_AS(Network::finalize(1, {sum({7}, 0)}, 0), StructuralError);
  }
  SECTION("cycle") {
    // 0 -> 1 -> 0
    REQUIRE_THROWS_MATCHES(Network::finalize(1, {prod({1}), prod({0})}, 0), StructuralError,
                           Catch::Matchers::MessageMatches(ContainsSubstring("cycle")));
  }
  SECTION("self reference is a cycle") {
    REQUIRE_THROWS_AS(Network::finalize(1, {prod({0})}, 0), StructuralError);
  }
  SECTION("unreachable node") {
    REQUIRE_THROWS_MATCHES(Network::finalize(1, {ind(0, 0), ind(0, 1)}, 0), StructuralError,
                           Catch::Matchers::MessageMatches(ContainsSubstring("unreachable")));
  }
  SECTION("indicator with children") {
    Node bad = ind(0, 0);
    bad.children = {1};
    REQUIRE_THROWS_AS(Network::finalize(1, {bad, ind(0, 1)}, 0), StructuralError);
  }
  SECTION("indicator variable out of range") {
    REQUIRE_THROWS_AS(Network::finalize(1, {ind(3, 0)}, 0), StructuralError);
  }
  SECTION("indicator value out of range") {
    REQUIRE_THROWS_AS(Network::finalize(1, {ind(0, 2)}, 0), StructuralError);
  }
  SECTION("sum with no children") {
    REQUIRE_THROWS_AS(Network::finalize(1, {sum({}, 0)}, 0), StructuralError);
  }
  SECTION("sum with no block") {
    REQUIRE_THROWS_AS(Network::finalize(1, {ind(0, 0), sum({0}, -1)}, 1), StructuralError);
  }
  SECTION("product with no children") {
    REQUIRE_THROWS_AS(Network::finalize(1, {prod({})}, 0), StructuralError);
  }
  SECTION("quotient arity") {
    Node q;
    q.kind = NodeKind::quotient;
    q.children = {0};
    REQUIRE_THROWS_AS(Network::finalize(1, {ind(0, 0), q}, 1), StructuralError);
  }
}

TEST_CASE("topological order breaks ties toward smaller node ids") {
  // Children listed in descending id order; both leaves are ready at once.
  NetworkBuilder b(2);
  NodeId i1 = b.add_indicator(1, 1);
  NodeId i0 = b.add_indicator(0, 1);
  NodeId p = b.add_product({i0, i1});
  Network net = std::move(b).finalize(p);
  REQUIRE(net.topological_order() == std::vector<NodeId>{i1, i0, p});
}
