#include <doctest.h>

#include <array>
#include <map>
#include <set>

#include "test_support.hpp"
#include "testspace/error.hpp"
#include "testspace/generators.hpp"

using namespace testspace;

namespace {

using Matrix3 = std::array<std::array<long, 3>, 3>;

Matrix3 multiply(const Matrix3& a, const Matrix3& b) {
  Matrix3 c{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
    }
  }
  return c;
}

/// Word lengths of every matrix reachable by words of length ≤ r over
/// x^{±1}, y^{±1}, by explicit products of 3×3 integer matrices.
std::map<Matrix3, int> heisenberg_word_oracle(int r) {
  const Matrix3 id{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  const std::vector<Matrix3> gens{
      {{{1, 1, 0}, {0, 1, 0}, {0, 0, 1}}},
      {{{1, -1, 0}, {0, 1, 0}, {0, 0, 1}}},
      {{{1, 0, 0}, {0, 1, 1}, {0, 0, 1}}},
      {{{1, 0, 0}, {0, 1, -1}, {0, 0, 1}}},
  };
  std::map<Matrix3, int> best{{id, 0}};
  std::vector<Matrix3> words{id};
  for (int length = 1; length <= r; ++length) {
    std::vector<Matrix3> next;
    next.reserve(words.size() * 4);
    for (const auto& w : words) {
      for (const auto& g : gens) {
        const Matrix3 product = multiply(w, g);
        best.emplace(product, length);
        next.push_back(product);
      }
    }
    words = std::move(next);
  }
  return best;
}

void check_level_injection(WeightedGraph (*make)(int, Weighting, std::size_t), int n) {
  const auto coarse = apsp(make(n - 1, Weighting::scaled, kDefaultVertexCap));
  const auto fine = apsp(make(n, Weighting::scaled, kDefaultVertexCap));
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    for (std::size_t j = 0; j < coarse.size(); ++j) REQUIRE(coarse.dist(i, j) == fine.dist(i, j));
  }
}

}  // namespace

TEST_CASE("binary trees") {
  CHECK(binary_tree(3).num_vertices() == 15);
  CHECK(binary_tree(0).num_vertices() == 1);
  CHECK(binary_tree(0).num_edges() == 0);
  for (int n = 1; n <= 6; ++n) {
    const auto space = apsp(binary_tree(n));
    Rational diameter = 0;
    for (std::size_t i = 0; i < space.size(); ++i) {
      for (std::size_t j = 0; j < space.size(); ++j) diameter = std::max(diameter, space.dist(i, j));
    }
    CHECK(diameter == 2 * n);
  }
  CHECK(tree_label(0).empty());
  CHECK(tree_label(5) == "10");
  CHECK(tree_vertex_depth(6) == 2);
  CHECK_THROWS_AS((void)binary_tree(30), Error);
}

TEST_CASE("closed-form tree metric matches apsp") {
  for (int n = 0; n <= 6; ++n) {
    const auto kernel = binary_tree_metric(n);
    const auto table = apsp(binary_tree(n));
    REQUIRE(kernel.size() == table.size());
    for (std::size_t i = 0; i < table.size(); ++i) {
      for (std::size_t j = 0; j < table.size(); ++j) REQUIRE(kernel.dist(i, j) == table.dist(i, j));
    }
  }
}

TEST_CASE("fork") {
  const auto space = apsp(testspace::fork());
  CHECK(space.dist(0, 2) == 2);
  CHECK(space.dist(2, 3) == 2);
  const auto tree = binary_tree_metric(2);
  const std::vector<std::size_t> subtree{0, 1, 3, 4};
  const auto sub = tree.subspace(subtree);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) CHECK(sub.dist(i, j) == space.dist(i, j));
  }
}

TEST_CASE("diamond sizes follow the recurrence") {
  std::size_t vertices = 2;
  for (int n = 0; n <= 5; ++n) {
    if (n > 0) vertices += 2 * (std::size_t{1} << (2 * (n - 1)));
    const auto graph = diamond(n, Weighting::unit);
    CHECK(graph.num_vertices() == vertices);
    CHECK(graph.num_edges() == (std::size_t{1} << (2 * n)));
  }
  CHECK(diamond(2, Weighting::scaled).num_vertices() == 12);
  CHECK(diamond(2, Weighting::scaled).num_edges() == 16);
}

TEST_CASE("diamond distances") {
  for (int n = 0; n <= 4; ++n) {
    CHECK(apsp(diamond(n, Weighting::scaled)).dist(0, 1) == 1);
    CHECK(apsp(diamond(n, Weighting::unit)).dist(0, 1) == pow2(n));
  }
  const auto terminals = diamond(3, Weighting::scaled).terminals();
  REQUIRE(terminals);
  CHECK(terminals->first == 0);
  CHECK(terminals->second == 1);
}

TEST_CASE("laakso sizes and distances") {
  CHECK(laakso(1, Weighting::unit).num_vertices() == 6);
  CHECK(laakso(1, Weighting::unit).num_edges() == 6);
  CHECK(laakso(2, Weighting::unit).num_vertices() == 30);
  std::size_t vertices = 2;
  for (int n = 1; n <= 3; ++n) {
    std::size_t six = 1;
    for (int i = 1; i < n; ++i) six *= 6;
    vertices += 4 * six;
    CHECK(laakso(n, Weighting::unit).num_vertices() == vertices);
  }
  for (int n = 0; n <= 3; ++n) CHECK(apsp(laakso(n, Weighting::scaled)).dist(0, 1) == 1);
}

TEST_CASE("weighted level injections are isometric") {
  for (int n = 1; n <= 4; ++n) check_level_injection(&diamond, n);
  for (int n = 1; n <= 3; ++n) check_level_injection(&laakso, n);
}

TEST_CASE("cycles") {
  const auto c4 = apsp(cycle(4));
  const auto d1 = apsp(diamond(1, Weighting::unit));
  std::multiset<Rational> a;
  std::multiset<Rational> b;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      a.insert(c4.dist(i, j));
      b.insert(d1.dist(i, j));
    }
  }
  CHECK(a == b);
  for (std::size_t m = 3; m <= 9; ++m) {
    const auto space = apsp(cycle(m));
    Rational diameter = 0;
    for (std::size_t j = 0; j < m; ++j) diameter = std::max(diameter, space.dist(0, j));
    CHECK(diameter == m / 2);
  }
  CHECK(apsp(cycle(6)).dist(0, 3) == 3);
}

TEST_CASE("tree products") {
  const auto single = tree_product({3});
  const auto tree = binary_tree_metric(3);
  for (std::size_t i = 0; i < tree.size(); ++i) {
    for (std::size_t j = 0; j < tree.size(); ++j) REQUIRE(single.dist(i, j) == tree.dist(i, j));
  }
  const auto pair = tree_product({1, 1});
  CHECK(pair.size() == 9);
  CHECK(pair.dist(0, 4) == 2);
  CHECK(verify_metric(tree_product({2, 1})).valid());
}

TEST_CASE("heisenberg balls match word enumeration") {
  CHECK(heisenberg_ball(0).elements.size() == 1);
  CHECK(heisenberg_ball(1).elements.size() == 5);
  for (int r = 0; r <= 4; ++r) {
    const auto oracle = heisenberg_word_oracle(r);
    const auto ball = heisenberg_ball(r);
    REQUIRE(ball.elements.size() == oracle.size());
    for (std::size_t i = 0; i < ball.elements.size(); ++i) {
      const auto& g = ball.elements[i];
      const Matrix3 m{{{1, g.x, g.z}, {0, 1, g.y}, {0, 0, 1}}};
      REQUIRE(oracle.count(m) == 1);
      CHECK(oracle.at(m) == ball.word_length[i]);
      CHECK(ball.space.dist(0, i) == ball.word_length[i]);
    }
  }
}

TEST_CASE("heisenberg word metric is left-invariant") {
  const auto ball = heisenberg_ball(3);
  std::map<HeisenbergElement, std::size_t> index;
  for (std::size_t i = 0; i < ball.elements.size(); ++i) index[ball.elements[i]] = i;
  const auto big = heisenberg_ball(6);
  std::map<HeisenbergElement, std::size_t> big_index;
  for (std::size_t i = 0; i < big.elements.size(); ++i) big_index[big.elements[i]] = i;
  const auto& gens = heisenberg_generators();
  for (std::size_t i = 0; i < ball.elements.size(); ++i) {
    for (std::size_t j = 0; j < ball.elements.size(); ++j) {
      for (const auto& s : gens) {
        const auto a = big_index.at(s * ball.elements[i]);
        const auto b = big_index.at(s * ball.elements[j]);
        CHECK(big.space.dist(a, b) == ball.space.dist(i, j));
      }
    }
  }
  for (const auto& s : gens) CHECK(s * inverse(s) == HeisenbergElement{});
}
