#include <doctest.h>

#include <random>

#include "test_support.hpp"
#include "testspace/error.hpp"
#include "testspace/generators.hpp"
#include "testspace/metric_core.hpp"

using namespace testspace;
using testspace::testing::floyd_warshall;
using testspace::testing::random_connected_graph;

namespace {

WeightedGraph path_graph(std::vector<Rational> lengths) {
  std::vector<PointId> points(lengths.size() + 1);
  for (std::size_t i = 0; i < points.size(); ++i) points[i].index = i;
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < lengths.size(); ++i) edges.push_back({i, i + 1, lengths[i]});
  return WeightedGraph(std::move(points), std::move(edges));
}

MetricSpace table3(int d01, int d12, int d02) {
  return MetricSpace::from_table(3, {0, d01, d02, d01, 0, d12, d02, d12, 0});
}

}  // namespace

TEST_CASE("single edge") {
  const auto space = apsp(path_graph({Rational(1)}));
  CHECK(space.dist(0, 1) == 1);
  CHECK(space.dist(1, 0) == 1);
  CHECK(space.dist(0, 0) == 0);
}

TEST_CASE("unweighted four-cycle has opposite vertices at distance 2") {
  const auto space = apsp(diamond(1, Weighting::unit));
  CHECK(space.dist(0, 1) == 2);
  CHECK(space.dist(2, 3) == 2);
}

TEST_CASE("unit diamond source to sink distance doubles per level") {
  for (int n = 0; n <= 4; ++n) {
    const auto graph = diamond(n, Weighting::unit);
    const auto oracle = floyd_warshall(graph);
    CHECK(*oracle[0][1] == pow2(n));
    CHECK(apsp(graph).dist(0, 1) == pow2(n));
  }
}

TEST_CASE("apsp agrees with Floyd-Warshall on random graphs") {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 2 + trial % 14;
    const auto graph = random_connected_graph(rng, n, n);
    const auto space = apsp(graph);
    const auto oracle = floyd_warshall(graph);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) REQUIRE(space.dist(i, j) == *oracle[i][j]);
    }
  }
}

TEST_CASE("apsp output satisfies the metric axioms") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const auto space = apsp(random_connected_graph(rng, 3 + trial % 10, 5));
    CHECK(verify_metric(space).valid());
  }
  CHECK(verify_metric(apsp(diamond(2, Weighting::scaled))).valid());
  CHECK(verify_metric(apsp(laakso(1, Weighting::scaled))).valid());
  CHECK(verify_metric(apsp(cycle(7))).valid());
}

TEST_CASE("disconnected graph names an unreachable pair") {
  std::vector<PointId> points(3);
  for (std::size_t i = 0; i < 3; ++i) points[i].index = i;
  const WeightedGraph graph(points, {{0, 1, Rational(1)}});
  try {
    (void)apsp(graph);
    FAIL("expected a PairError");
  } catch (const PairError& e) {
    CHECK(e.kind() == ErrorKind::validation);
    CHECK((e.pair().first == 2 || e.pair().second == 2));
  }
}

TEST_CASE("graph construction rejects bad edges") {
  std::vector<PointId> points(2);
  points[1].index = 1;
  CHECK_THROWS_AS(WeightedGraph(points, {{0, 0, Rational(1)}}), Error);
  CHECK_THROWS_AS(WeightedGraph(points, {{0, 1, Rational(0)}}), Error);
  CHECK_THROWS_AS(WeightedGraph(points, {{0, 2, Rational(1)}}), Error);
  CHECK_THROWS_AS(WeightedGraph(points, {{0, 1, Rational(1)}, {1, 0, Rational(2)}}), Error);
}

TEST_CASE("constructed triangle violation is reported at (0,2,1)") {
  const auto report = verify_metric(table3(1, 1, 3));
  REQUIRE_FALSE(report.valid());
  bool found = false;
  for (const auto& v : report.violations) {
    if (v.kind == AxiomKind::triangle && v.i == 0 && v.j == 2 && v.k == 1) found = true;
  }
  CHECK(found);
}

TEST_CASE("zero distance between distinct points is an identity violation") {
  const auto report = verify_metric(table3(0, 1, 1));
  REQUIRE_FALSE(report.valid());
  bool found = false;
  for (const auto& v : report.violations) found = found || v.kind == AxiomKind::positivity || v.kind == AxiomKind::identity;
  CHECK(found);
}

TEST_CASE("asymmetric table is a symmetry violation") {
  const auto space = MetricSpace::from_table(2, {0, 1, 2, 0});
  const auto report = verify_metric(space);
  REQUIRE_FALSE(report.valid());
  CHECK(report.violations.front().kind == AxiomKind::symmetry);
}

TEST_CASE("perturbing one distance of a random metric past a detour breaks the triangle inequality") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    const auto space = apsp(random_connected_graph(rng, 4 + trial % 6, 4)).materialized();
    const std::size_t n = space.size();
    std::vector<Rational> table;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) table.push_back(space.dist(i, j));
    }
    const Rational bumped = space.dist(0, 1) + space.dist(1, 2) + space.dist(0, 2) + 1;
    table[0 * n + 2] = table[2 * n + 0] = bumped;
    CHECK_FALSE(verify_metric(MetricSpace::from_table(n, table)).valid());
  }
}

TEST_CASE("scaling and subspaces preserve the metric") {
  const auto space = apsp(diamond(2, Weighting::unit));
  const auto scaled = space.scaled(Rational(1, 3));
  CHECK(scaled.dist(0, 1) == Rational(4, 3));
  const std::vector<std::size_t> points{1, 0, 5};
  const auto sub = space.subspace(points);
  CHECK(sub.size() == 3);
  CHECK(sub.dist(0, 1) == space.dist(1, 0));
  CHECK(sub.dist(1, 2) == space.dist(0, 5));
}

TEST_CASE("geodesic enumeration") {
  SUBCASE("weighted D_1 has two geodesics") {
    const auto graph = diamond(1, Weighting::scaled);
    const auto paths = enumerate_geodesic_paths(graph, 0, 1);
    CHECK(paths.size() == 2);
    for (const auto& p : paths) CHECK(p.length() == 1);
  }
  SUBCASE("weighted D_2 count matches exhaustive search") {
    const auto graph = diamond(2, Weighting::scaled);
    const auto paths = enumerate_geodesic_paths(graph, 0, 1);
    CHECK(paths.size() == testspace::testing::count_geodesics_dfs(graph, 0, 1));
    CHECK(paths.size() == 8);
  }
  SUBCASE("weighted L_1 has two geodesics") {
    const auto graph = laakso(1, Weighting::scaled);
    CHECK(enumerate_geodesic_paths(graph, 0, 1).size() == 2);
    CHECK(testspace::testing::count_geodesics_dfs(graph, 0, 1) == 2);
  }
  SUBCASE("random graphs agree with depth-first search") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
      const auto graph = random_connected_graph(rng, 3 + trial % 7, 6);
      const std::size_t t = graph.num_vertices() - 1;
      CHECK(enumerate_geodesic_paths(graph, 0, t).size() == testspace::testing::count_geodesics_dfs(graph, 0, t));
    }
  }
  SUBCASE("cap is enforced") {
    CHECK_THROWS_AS((void)enumerate_geodesic_paths(diamond(3, Weighting::scaled), 0, 1, 10), Error);
  }
}
