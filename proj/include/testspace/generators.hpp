#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "testspace/metric_core.hpp"

namespace testspace {

/// unit: every edge has length 1. scaled: level-n edges have length base^(-n)
/// (base 2 for diamonds, 4 for Laakso graphs), so source–sink distance is 1.
enum class Weighting { unit, scaled };

inline constexpr std::size_t kDefaultVertexCap = std::size_t{1} << 22;

// Binary trees use heap order: vertex i has children 2i+1 (label + "0") and
// 2i+2 (label + "1"); the root is vertex 0 with the empty label.

WeightedGraph binary_tree(int depth, std::size_t vertex_cap = kDefaultVertexCap);

/// Closed-form tree metric on T_depth (heap order) without a dense table.
MetricSpace binary_tree_metric(int depth, std::size_t vertex_cap = kDefaultVertexCap);

std::size_t tree_vertex_depth(std::size_t heap_index);
std::size_t tree_distance(std::size_t a, std::size_t b);
std::string tree_label(std::size_t heap_index);

/// Root a0 - a1, and a1's children a2, a2'.
WeightedGraph fork();

/// D_n. Vertices of D_{n-1} keep their indices in D_n; source 0, sink 1.
WeightedGraph diamond(int level, Weighting weighting, std::size_t vertex_cap = kDefaultVertexCap);

/// L_n. Each edge (u,v) becomes u - stem - {left, right} - stem - v with
/// new vertices numbered (stem, left, right, stem). Old indices are kept;
/// source 0, sink 1.
WeightedGraph laakso(int level, Weighting weighting, std::size_t vertex_cap = kDefaultVertexCap);

WeightedGraph cycle(std::size_t size);

/// ℓ₁-product of binary trees: tuples of heap indices, distance = sum of
/// coordinate tree distances. Tuple (i_1,…,i_k) has mixed-radix index with the
/// first coordinate most significant.
MetricSpace tree_product(const std::vector<int>& depths, std::size_t point_cap = kDefaultVertexCap);

/// Integer Heisenberg matrix [[1,x,z],[0,1,y],[0,0,1]].
struct HeisenbergElement {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t z = 0;

  auto operator<=>(const HeisenbergElement&) const = default;
};

HeisenbergElement operator*(const HeisenbergElement& a, const HeisenbergElement& b);
HeisenbergElement inverse(const HeisenbergElement& g);
/// x, x^{-1}, y, y^{-1}.
const std::vector<HeisenbergElement>& heisenberg_generators();

struct HeisenbergBall {
  std::vector<HeisenbergElement> elements;  // BFS order, identity first
  std::vector<int> word_length;             // distance to the identity
  MetricSpace space;                        // exact word distances
};

/// Word-metric ball of radius r around the identity in H(ℤ). Cayley edges are
/// (g, g·s), so the word distance d(g,h) = |g^{-1}h| is left-invariant.
HeisenbergBall heisenberg_ball(int radius, int radius_cap = 12);

}  // namespace testspace
