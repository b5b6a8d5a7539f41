#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "test_support.hpp"
#include "testspace/error.hpp"
#include "testspace/generators.hpp"
#include "testspace/rnp.hpp"

using namespace testspace;

namespace {

Rational l1(const RationalVector& v) {
  Rational s = 0;
  for (const auto& x : v) s += abs_value(x);
  return s;
}

/// Source–sink geodesics of a graph as vertex lists, by depth-first search.
std::vector<std::vector<std::size_t>> geodesics_dfs(const WeightedGraph& graph, std::size_t s, std::size_t t,
                                                    const std::vector<std::vector<std::optional<Rational>>>& d) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> path{s};
  auto walk = [&](auto&& self, std::size_t v) -> void {
    if (v == t) {
      out.push_back(path);
      return;
    }
    for (const auto& nb : graph.neighbors(v)) {
      const Rational step = graph.edges()[nb.edge].length;
      if (*d[s][v] + step == *d[s][nb.vertex] && *d[nb.vertex][t] + *d[s][nb.vertex] == *d[s][t]) {
        path.push_back(nb.vertex);
        self(self, nb.vertex);
        path.pop_back();
      }
    }
  };
  walk(walk, s);
  return out;
}

/// Thickness constant of weighted D_n by exhaustive search: every member g,
/// every set of at most `budget` interior control indices on the coarse grid,
/// the best response h through them, deviation per gap = largest distance at
/// interior grid points.
Rational alpha_oracle(int level, std::size_t budget) {
  const auto graph = diamond(level, Weighting::scaled);
  const auto d = testspace::testing::floyd_warshall(graph);
  const auto members = geodesics_dfs(graph, 0, 1, d);
  const std::size_t last = members.front().size() - 1;
  std::vector<std::size_t> allowed;
  for (std::size_t k = 2; k < last; k += 2) allowed.push_back(k);
  std::optional<Rational> alpha;
  for (const auto& g : members) {
    for (std::size_t mask = 0; mask < (std::size_t{1} << allowed.size()); ++mask) {
      if (static_cast<std::size_t>(__builtin_popcountll(mask)) > budget) continue;
      Rational best = 0;
      for (const auto& h : members) {
        bool through = true;
        for (std::size_t b = 0; b < allowed.size(); ++b) {
          if ((mask >> b & 1) && g[allowed[b]] != h[allowed[b]]) through = false;
        }
        if (!through) continue;
        Rational total = 0;
        Rational gap = 0;
        for (std::size_t k = 1; k <= last; ++k) {
          if (g[k] == h[k]) {
            total += gap;
            gap = 0;
          } else {
            gap = std::max(gap, *d[g[k]][h[k]]);
          }
        }
        best = std::max(best, total);
      }
      if (!alpha || best < *alpha) alpha = best;
    }
  }
  return *alpha;
}

}  // namespace

TEST_CASE("Rademacher trees are exact delta-trees") {
  for (int n = 1; n <= 8; ++n) {
    const auto tree = rademacher_tree(n);
    CHECK(tree.nodes.size() == (std::size_t{2} << n) - 1);
    const auto report = verify_tree(tree);
    CHECK(report.ok());
    CHECK(report.midpoints_exact);
    CHECK(report.unit_norms);
    CHECK(report.min_separation == 1);
    CHECK(report.max_separation == 1);
  }
  CHECK_THROWS_AS((void)rademacher_tree(0), Error);
  CHECK_THROWS_AS((void)rademacher_tree(13), Error);
}

TEST_CASE("Rademacher tree norms by direct evaluation") {
  const auto tree = rademacher_tree(5);
  for (std::size_t node = 0; node < tree.nodes.size(); ++node) {
    const auto v = tree.vector(node);
    CHECK(l1(v) * tree.atom_weight() == 1);
    if (node > 0) {
      const auto p = tree.vector((node - 1) / 2);
      RationalVector diff(v.size());
      for (std::size_t a = 0; a < v.size(); ++a) diff[a] = v[a] - p[a];
      CHECK(l1(diff) * tree.atom_weight() == 1);
    }
  }
}

TEST_CASE("corrupted tree fails verification") {
  auto tree = rademacher_tree(3);
  tree.nodes[4][0] += 1;
  const auto report = verify_tree(tree);
  CHECK_FALSE(report.ok());
  REQUIRE(report.first_failure);
}

TEST_CASE("tree to bush") {
  const auto bush = tree_to_bush(rademacher_tree(1));
  REQUIRE(bush.levels.size() == 2);
  CHECK(bush.levels[1].size() == 2);
  CHECK(bush.weights[1] == std::vector<Rational>{Rational(1, 2), Rational(1, 2)});
  for (int n = 1; n <= 4; ++n) {
    const auto b = tree_to_bush(rademacher_tree(n));
    const auto report = verify_bush(b);
    CHECK(report.ok(b.delta));
    CHECK(b.delta == 1);
  }
}

TEST_CASE("bush gauge") {
  const auto bush = tree_to_bush(rademacher_tree(2));
  const auto gauge = bush_gauge(bush);
  CHECK(gauge_eval(gauge, RationalVector(bush.dim, Rational(0))) == 0);
  for (const auto& level : bush.levels) {
    for (const auto& z : level) CHECK(gauge_eval(gauge, z) == 1);
  }
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<long> entry(-4, 4);
  for (int trial = 0; trial < 25; ++trial) {
    RationalVector v(bush.dim);
    RationalVector w(bush.dim);
    for (auto& x : v) x = entry(rng);
    for (auto& x : w) x = entry(rng);
    RationalVector sum(bush.dim);
    RationalVector twice(bush.dim);
    for (std::size_t i = 0; i < bush.dim; ++i) {
      sum[i] = v[i] + w[i];
      twice[i] = -2 * v[i];
    }
    const Rational gv = gauge_eval(gauge, v);
    CHECK(gv <= gauge.base_norm(v));
    CHECK(gauge_eval(gauge, sum) <= gv + gauge_eval(gauge, w));
    CHECK(gauge_eval(gauge, twice) == 2 * gv);
  }
}

TEST_CASE("broken lines") {
  SUBCASE("empty label is a segment") {
    const auto family = broken_line_family(tree_to_bush(rademacher_tree(1)), 0);
    REQUIRE(family.lines.size() == 1);
    CHECK(family.lines[0].label.empty());
    CHECK(family.lines[0].terms.size() == 1);
    CHECK(family.lines[0].vertices.size() == 2);
  }
  for (int depth = 1; depth <= 3; ++depth) {
    CAPTURE(depth);
    const auto bush = tree_to_bush(rademacher_tree(depth));
    const auto family = broken_line_family(bush, depth);
    CHECK(family.lines.size() == (std::size_t{2} << depth) - 1);
    CHECK(family.all_geodesic);
    CHECK(family.vertex_monotone);
    CHECK(family.gauge_delta == 1);
    CHECK(family.endpoint_gauge == 1);
    for (const auto& line : family.lines) {
      CHECK(line.gauge_sum == 1);
      RationalVector end(bush.dim, Rational(0));
      for (const auto& term : line.terms) {
        for (std::size_t a = 0; a < bush.dim; ++a) end[a] += term.coefficient * bush.levels[term.level][term.index][a];
      }
      CHECK(end == bush.levels[0][0]);
      CHECK(line.vertices.back() == end);
    }
    for (const auto& dev : family.deviations) {
      CHECK(dev.meets_bound);
      CHECK(dev.deviation >= family.gauge_delta / 2);
    }
  }
  SUBCASE("labels are breadth first") {
    const auto family = broken_line_family(tree_to_bush(rademacher_tree(2)), 2);
    const std::vector<std::string> expected{"", "0", "1", "00", "01", "10", "11"};
    for (std::size_t i = 0; i < expected.size(); ++i) CHECK(family.lines[i].label == expected[i]);
  }
}

TEST_CASE("diamond geodesic families") {
  CHECK(diamond_geodesic_family(1).members.size() == 2);
  CHECK(diamond_geodesic_family(2).members.size() == 8);
  CHECK(diamond_geodesic_family(3).members.size() == 128);
  const auto family = diamond_geodesic_family(1);
  const auto response = thickness_response(family, 0, {});
  CHECK(response.member == 1);
  REQUIRE(response.deviations.size() == 1);
  CHECK(response.deviations[0] == family.space.dist(family.members[0][1], family.members[1][1]));
  CHECK(response.deviations[0] == 1);
  CHECK(thickness_alpha(family, 0).alpha == 1);
  CHECK_THROWS_AS((void)thickness_response(diamond_geodesic_family(2), 0, {1}), Error);
}

TEST_CASE("thickness constant of D_2 matches exhaustive search") {
  const auto family = diamond_geodesic_family(2);
  Rational previous = -1;
  for (std::size_t budget = 0; budget <= 3; ++budget) {
    const auto result = thickness_alpha(family, budget);
    CHECK(result.complete);
    CHECK(result.alpha == alpha_oracle(2, budget));
    if (previous >= 0) CHECK(result.alpha <= previous);
    previous = result.alpha;
  }
  CHECK(alpha_oracle(3, 2) == thickness_alpha(diamond_geodesic_family(3), 2).alpha);
}

TEST_CASE("recombinations stay in the D_2 family") {
  const auto family = diamond_geodesic_family(2);
  const std::size_t last = family.grid_size() - 1;
  std::vector<std::size_t> allowed;
  for (std::size_t k = family.control_stride; k < last; k += family.control_stride) allowed.push_back(k);
  for (std::size_t member = 0; member < family.members.size(); ++member) {
    for (std::size_t mask = 0; mask < (std::size_t{1} << allowed.size()); ++mask) {
      std::vector<std::size_t> controls;
      for (std::size_t b = 0; b < allowed.size(); ++b) {
        if (mask >> b & 1) controls.push_back(allowed[b]);
      }
      const auto response = thickness_response(family, member, controls);
      CHECK(recombinations_in_family(family, member, response));
    }
  }
}

TEST_CASE("single geodesic family has zero thickness") {
  std::vector<PointId> points(3);
  for (std::size_t i = 0; i < 3; ++i) points[i].index = i;
  WeightedGraph graph(points, {{0, 2, Rational(1, 2)}, {2, 1, Rational(1, 2)}});
  auto paths = enumerate_geodesic_paths(graph, 0, 1);
  const auto family = make_geodesic_family(graph, 0, 1, paths);
  CHECK(thickness_alpha(family, 1).alpha == 0);
}

TEST_CASE("martingale checks") {
  SUBCASE("constant martingale passes") {
    Martingale m;
    m.dim = 2;
    m.levels.push_back({{Rational(0), Rational(1)}, {RationalVector{Rational(1, 2), Rational(-1, 2)}}});
    m.levels.push_back({{Rational(0), Rational(1, 3), Rational(1)},
                        {RationalVector{Rational(1, 2), Rational(-1, 2)}, RationalVector{Rational(1, 2), Rational(-1, 2)}}});
    const auto report = martingale_check(m);
    CHECK(report.ok());
    REQUIRE(report.differences.size() == 1);
    CHECK(report.differences[0] == 0);
    CHECK(report.sup_norm == 1);
  }
  SUBCASE("unbounded values are flagged") {
    Martingale m;
    m.dim = 1;
    m.levels.push_back({{Rational(0), Rational(1)}, {RationalVector{Rational(2)}}});
    CHECK_FALSE(martingale_check(m).bounded);
  }
  SUBCASE("non-refining breakpoints are flagged") {
    Martingale m;
    m.dim = 1;
    m.levels.push_back({{Rational(0), Rational(1, 2), Rational(1)}, {RationalVector{Rational(0)}, RationalVector{Rational(0)}}});
    m.levels.push_back({{Rational(0), Rational(1, 3), Rational(1)}, {RationalVector{Rational(0)}, RationalVector{Rational(0)}}});
    CHECK_FALSE(martingale_check(m).refines);
  }
}

TEST_CASE("martingale from the D_3 embedding") {
  const auto family = diamond_geodesic_family(3);
  const auto embedding = diamond_cut_embedding(3);
  const auto measured = distortion(embedding);
  CHECK(measured.lip_power == 4);
  CHECK(measured.colip_power == 1);
  const auto alpha = thickness_alpha(family, 2);
  REQUIRE(alpha.complete);
  const auto built = martingale_from_embedding(family, embedding, 2, alpha.alpha);
  CHECK(built.ell == Rational(1, 4));
  CHECK(built.report.ok());
  const Rational bound = built.ell * built.alpha / 4;
  REQUIRE(built.martingale.levels.size() == 5);
  for (std::size_t k = 2; k <= 4; k += 2) CHECK(built.report.differences[k - 1] >= bound);
  CHECK(built.report.sup_norm <= 1);

  // M_0 is the constant f(v) − f(u) of the rescaled embedding.
  const auto& m0 = built.martingale.levels[0];
  REQUIRE(m0.values.size() == 1);
  const auto source = embedding.vectors[family.source].to_dense(embedding.target.dim());
  const auto sink = embedding.vectors[family.sink].to_dense(embedding.target.dim());
  for (std::size_t i = 0; i < source.size(); ++i) CHECK(m0.values[0][i] == (sink[i] - source[i]) / 4);

  SUBCASE("corrupted last level is located") {
    auto corrupted = built.martingale;
    auto& top = corrupted.levels.back();
    top.values[0][0] += Rational(1, 8);
    const auto report = martingale_check(corrupted);
    CHECK_FALSE(report.conditional_expectation);
    REQUIRE(report.first_violation);
    CHECK(report.first_violation->first == corrupted.levels.size() - 1);
    CHECK_FALSE(report.violation.empty());
  }
  SUBCASE("non-l1 targets are rejected") {
    auto other = embedding;
    other.target = NormedTarget::linf(embedding.target.dim());
    CHECK_THROWS_AS((void)martingale_from_embedding(family, other, 2, alpha.alpha), Error);
  }
}
