#include <doctest.h>

#include <cmath>
#include <functional>

#include "testspace/error.hpp"
#include "testspace/generators.hpp"
#include "testspace/markov.hpp"

using namespace testspace;

namespace {

/// Brute force over every trajectory of X and every independent continuation
/// of the split copy; integer p only.
std::pair<Rational, Rational> enumerate_functional(const MarkovChain& chain, const MetricMap& map,
                                                   const MetricSpace& space, unsigned p) {
  const std::size_t horizon = chain.horizon;
  int max_k = 0;
  while ((std::size_t{1} << max_k) < horizon) ++max_k;
  auto dp = [&](std::size_t a, std::size_t b) { return ipow(space.dist(map[a], map[b]), p); };

  // Every trajectory (X_0..X_T) with its probability.
  std::vector<std::pair<std::vector<std::size_t>, Rational>> paths{{{chain.start}, Rational(1)}};
  for (std::size_t t = 1; t <= horizon; ++t) {
    std::vector<std::pair<std::vector<std::size_t>, Rational>> next;
    for (const auto& [path, prob] : paths) {
      for (const auto& [to, q] : chain.transitions[path.back()]) {
        auto extended = path;
        extended.push_back(to);
        next.emplace_back(std::move(extended), prob * q);
      }
    }
    paths = std::move(next);
  }
  // Law of the state after `steps` moves from u.
  std::function<void(std::size_t, std::size_t, const Rational&, std::vector<Rational>&)> spread =
      [&](std::size_t u, std::size_t steps, const Rational& prob, std::vector<Rational>& out) {
        if (steps == 0) {
          out[u] += prob;
          return;
        }
        for (const auto& [to, q] : chain.transitions[u]) spread(to, steps - 1, prob * q, out);
      };

  Rational lhs = 0;
  Rational rhs = 0;
  for (const auto& [path, prob] : paths) {
    for (std::size_t t = 1; t <= horizon; ++t) {
      rhs += prob * dp(path[t], path[t - 1]);
      for (int k = 0; k <= max_k; ++k) {
        const std::size_t lag = std::size_t{1} << k;
        const std::size_t s = t > lag ? t - lag : 0;
        std::vector<Rational> law(chain.num_states(), Rational(0));
        spread(path[s], t - s, Rational(1), law);
        Rational expected = 0;
        for (std::size_t b = 0; b < law.size(); ++b) {
          if (law[b] != 0) expected += law[b] * dp(path[t], b);
        }
        lhs += prob * expected / ipow(pow2(k), p);
      }
    }
  }
  return {lhs, rhs};
}

/// Downward walk on T_{2^m} built by hand from heap indices.
WalkInstance hand_built_tree_walk(int m) {
  const int depth = 1 << m;
  const std::size_t n = (std::size_t{2} << depth) - 1;
  WalkInstance w;
  w.chain.horizon = std::size_t{1} << m;
  w.chain.start = 0;
  w.chain.transitions.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    if (2 * v + 2 < n) {
      w.chain.transitions[v] = {{2 * v + 1, Rational(1, 2)}, {2 * v + 2, Rational(1, 2)}};
    } else {
      w.chain.transitions[v] = {{v, Rational(1)}};
    }
  }
  w.map.resize(n);
  for (std::size_t v = 0; v < n; ++v) w.map[v] = v;
  auto depth_of = [](std::size_t v) {
    std::size_t d = 0;
    while (v > 0) {
      v = (v - 1) / 2;
      ++d;
    }
    return d;
  };
  w.space = MetricSpace::from_kernel(n, [depth_of](std::size_t a, std::size_t b) {
    std::size_t steps = 0;
    while (a != b) {
      if (depth_of(a) >= depth_of(b)) {
        a = (a - 1) / 2;
      } else {
        b = (b - 1) / 2;
      }
      ++steps;
    }
    return Rational(static_cast<long>(steps));
  });
  return w;
}

MarkovChain lazy_path_chain(std::size_t horizon) {
  MarkovChain c;
  c.horizon = horizon;
  for (std::size_t i = 0; i <= horizon; ++i) {
    if (i < horizon) {
      c.transitions.push_back({{i, Rational(1, 2)}, {i + 1, Rational(1, 2)}});
    } else {
      c.transitions.push_back({{i, Rational(1)}});
    }
  }
  return c;
}

MetricSpace line_space(std::size_t n) {
  return MetricSpace::from_kernel(n, [](std::size_t a, std::size_t b) {
    return Rational(static_cast<long>(a > b ? a - b : b - a));
  });
}

MetricMap identity_map(std::size_t n) {
  MetricMap map(n);
  for (std::size_t i = 0; i < n; ++i) map[i] = i;
  return map;
}

}  // namespace

TEST_CASE("chain validation") {
  MarkovChain c;
  c.transitions = {{{0, Rational(1, 2)}, {1, Rational(1, 3)}}, {{1, Rational(1)}}};
  CHECK_THROWS_AS(c.validate(), Error);
  c.transitions[0][1].second = Rational(1, 2);
  CHECK_NOTHROW(c.validate());
  c.start = 5;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("constant map gives zero") {
  const auto walk = downward_tree_walk(2);
  const MetricMap constant(walk.chain.num_states(), 0);
  const auto exact = exact_convexity(walk.chain, constant, walk.space, 2.0);
  CHECK(*exact.lhs_exact == 0);
  CHECK(*exact.rhs_exact == 0);
  CHECK_FALSE(exact.pi_lower);
  const auto mc = mc_convexity(walk.chain, constant, walk.space, 2.0, 1, 200);
  CHECK(mc.lhs == 0.0);
  CHECK(mc.rhs == 0.0);
  CHECK_FALSE(mc.pi_lower);
}

TEST_CASE("absorbing start gives zero") {
  MarkovChain c;
  c.transitions = {{{0, Rational(1)}}, {{0, Rational(1, 2)}, {1, Rational(1, 2)}}};
  c.horizon = 5;
  const auto space = line_space(2);
  const auto e = exact_convexity(c, identity_map(2), space, 2.0);
  CHECK(*e.lhs_exact == 0);
  CHECK(*e.rhs_exact == 0);
}

TEST_CASE("missing map image is rejected") {
  const auto walk = downward_tree_walk(1);
  MetricMap map = walk.map;
  map.pop_back();
  CHECK_THROWS_AS((void)exact_convexity(walk.chain, map, walk.space, 2.0), Error);
  map = walk.map;
  map[0] = walk.space.size() + 3;
  CHECK_THROWS_AS((void)exact_convexity(walk.chain, map, walk.space, 2.0), Error);
}

TEST_CASE("downward walk matches a hand-built chain") {
  for (int m = 0; m <= 2; ++m) {
    const auto library = downward_tree_walk(m);
    const auto hand = hand_built_tree_walk(m);
    REQUIRE(library.chain.num_states() == hand.chain.num_states());
    CHECK(library.chain.horizon == hand.chain.horizon);
    CHECK(library.chain.transitions == hand.chain.transitions);
  }
}

TEST_CASE("exact DP agrees with trajectory enumeration") {
  SUBCASE("tree walk, m = 1") {
    const auto walk = hand_built_tree_walk(1);
    for (unsigned p : {1U, 2U, 3U}) {
      const auto [lhs, rhs] = enumerate_functional(walk.chain, walk.map, walk.space, p);
      const auto library = downward_tree_walk(1);
      const auto e = exact_convexity(library.chain, library.map, library.space, p);
      CHECK(*e.lhs_exact == lhs);
      CHECK(*e.rhs_exact == rhs);
      CHECK(rhs == 2);
    }
  }
  SUBCASE("tree walk, m = 2") {
    const auto walk = hand_built_tree_walk(2);
    const auto [lhs, rhs] = enumerate_functional(walk.chain, walk.map, walk.space, 2);
    const auto e = exact_convexity(walk.chain, walk.map, walk.space, 2.0);
    CHECK(*e.lhs_exact == lhs);
    CHECK(*e.rhs_exact == rhs);
  }
  SUBCASE("downhill walks") {
    for (const auto& [graph, horizon] : {std::pair{diamond(1, Weighting::unit), std::size_t{2}},
                                         std::pair{diamond(2, Weighting::scaled), std::size_t{4}},
                                         std::pair{laakso(1, Weighting::unit), std::size_t{4}}}) {
      const auto walk = downhill_walk(graph, 0, 1, horizon);
      const auto [lhs, rhs] = enumerate_functional(walk.chain, walk.map, walk.space, 2);
      const auto e = exact_convexity(walk.chain, walk.map, walk.space, 2.0);
      CHECK(*e.lhs_exact == lhs);
      CHECK(*e.rhs_exact == rhs);
    }
  }
  SUBCASE("lazy path") {
    const auto chain = lazy_path_chain(4);
    const auto [lhs, rhs] = enumerate_functional(chain, identity_map(5), line_space(5), 2);
    const auto e = exact_convexity(chain, identity_map(5), line_space(5), 2.0);
    CHECK(*e.lhs_exact == lhs);
    CHECK(*e.rhs_exact == rhs);
  }
}

TEST_CASE("tree walk step sum equals 2^m") {
  for (int m = 0; m <= 3; ++m) {
    const auto walk = downward_tree_walk(m);
    const auto e = exact_convexity(walk.chain, walk.map, walk.space, 2.0);
    CHECK(*e.rhs_exact == pow2(m));
  }
  for (int m = 1; m <= 12; ++m) {
    const auto a = tree_walk_analytic(m, 2.0);
    CHECK(*a.rhs_exact == pow2(m));
  }
}

TEST_CASE("analytic mode equals explicit mode") {
  for (int m = 0; m <= 3; ++m) {
    const auto walk = downward_tree_walk(m);
    for (double p : {1.0, 2.0, 3.0}) {
      const auto exact = exact_convexity(walk.chain, walk.map, walk.space, p);
      const auto analytic = tree_walk_analytic(m, p);
      CHECK(*exact.lhs_exact == *analytic.lhs_exact);
      CHECK(*exact.rhs_exact == *analytic.rhs_exact);
    }
    const auto exact = exact_convexity(walk.chain, walk.map, walk.space, 1.5);
    const auto analytic = tree_walk_analytic(m, 1.5);
    CHECK(exact.lhs == doctest::Approx(analytic.lhs).epsilon(1e-9));
  }
}

TEST_CASE("tree walk lower bound") {
  for (int m = 1; m <= 12; ++m) {
    for (double p : {2.0, 3.0, 4.0}) {
      const auto a = tree_walk_analytic(m, p);
      REQUIRE(a.pi_lower);
      CHECK(*a.pi_lower >= std::pow(2.0, 1.0 - 2.0 / p) * std::pow(m, 1.0 / p));
    }
  }
}

TEST_CASE("scaling the metric scales both sums by the p-th power") {
  const auto walk = downhill_walk(diamond(2, Weighting::unit), 0, 1, 4);
  const auto base = exact_convexity(walk.chain, walk.map, walk.space, 3.0);
  const auto scaled = exact_convexity(walk.chain, walk.map, walk.space.scaled(Rational(2, 3)), 3.0);
  CHECK(*scaled.lhs_exact == *base.lhs_exact * Rational(8, 27));
  CHECK(*scaled.rhs_exact == *base.rhs_exact * Rational(8, 27));
  CHECK(*scaled.pi_lower == doctest::Approx(*base.pi_lower));
}

TEST_CASE("Monte Carlo is deterministic in the seed") {
  const auto walk = downward_tree_walk(2);
  const auto a = mc_convexity(walk.chain, walk.map, walk.space, 2.0, 42, 3000);
  const auto b = mc_convexity(walk.chain, walk.map, walk.space, 2.0, 42, 3000);
  const auto c = mc_convexity(walk.chain, walk.map, walk.space, 2.0, 43, 3000);
  CHECK(a.lhs == b.lhs);
  CHECK(a.rhs == b.rhs);
  CHECK(a.lhs_stderr == b.lhs_stderr);
  CHECK(a.lhs != c.lhs);
  CHECK(a.seed == 42);
  CHECK(a.samples == 3000);
  CHECK_THROWS_AS((void)mc_convexity(walk.chain, walk.map, walk.space, 2.0, 42, 0), Error);
}

TEST_CASE("Monte Carlo agrees with the exact DP") {
  const auto walk = downward_tree_walk(2);
  const auto exact = exact_convexity(walk.chain, walk.map, walk.space, 2.0);
  const auto mc = mc_convexity(walk.chain, walk.map, walk.space, 2.0, 7, 20000);
  CHECK(std::abs(mc.lhs - exact.lhs) <= 3.0 * mc.lhs_stderr);
  CHECK(std::abs(mc.rhs - exact.rhs) <= 3.0 * mc.rhs_stderr + 1e-12);
}

TEST_CASE("downhill walks") {
  SUBCASE("unweighted D_1 reaches the sink in two steps") {
    const auto walk = downhill_walk(diamond(1, Weighting::unit), 0, 1, 2);
    std::vector<Rational> law(walk.chain.num_states(), Rational(0));
    law[walk.chain.start] = 1;
    for (int step = 0; step < 2; ++step) {
      std::vector<Rational> next(law.size(), Rational(0));
      for (std::size_t u = 0; u < law.size(); ++u) {
        for (const auto& [v, q] : walk.chain.transitions[u]) next[v] += law[u] * q;
      }
      law = next;
    }
    CHECK(law[1] == 1);
  }
  SUBCASE("L_1 separates trajectories") {
    const auto walk = downhill_walk(laakso(1, Weighting::unit), 0, 1, 4);
    CHECK(exact_convexity(walk.chain, walk.map, walk.space, 2.0).lhs > 0.0);
  }
  SUBCASE("diamond lower bound grows with the level") {
    const std::vector<Rational> lhs{Rational(5, 2), Rational(73, 8), Rational(793, 32)};
    double previous = 0.0;
    for (int n = 1; n <= 3; ++n) {
      const auto walk = downhill_walk(diamond(n, Weighting::unit), 0, 1, std::size_t{1} << n);
      const auto e = exact_convexity(walk.chain, walk.map, walk.space, 2.0);
      CHECK(*e.lhs_exact == lhs[static_cast<std::size_t>(n) - 1]);
      CHECK(*e.rhs_exact == pow2(n));
      CHECK(*e.pi_lower >= previous);
      previous = *e.pi_lower;
    }
  }
}

TEST_CASE("monotone walk on a line stays bounded") {
  for (std::size_t horizon = 4; horizon <= 64; horizon *= 2) {
    const auto e = exact_convexity(lazy_path_chain(horizon), identity_map(horizon + 1), line_space(horizon + 1), 2.0);
    REQUIRE(e.pi_lower);
    CHECK(*e.pi_lower < 1.5);
  }
}

TEST_CASE("caps") {
  CHECK_THROWS_AS((void)downward_tree_walk(6), Error);
  try {
    (void)downward_tree_walk(6);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::cap_exceeded);
  }
  const auto walk = downward_tree_walk(3);
  try {
    (void)exact_convexity(walk.chain, walk.map, walk.space, 2.0, 1000);
    FAIL("expected cap_exceeded");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::cap_exceeded);
  }
}
