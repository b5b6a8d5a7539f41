#include "testspace/generators.hpp"

#include <bit>
#include <deque>
#include <map>

#include "testspace/error.hpp"

namespace testspace {

namespace {

void check_level(int level, const char* family) {
  if (level < 0) throw Error(ErrorKind::validation, std::string(family) + " level must be non-negative");
}

void check_cap(std::size_t needed, std::size_t cap, const std::string& what) {
  if (needed > cap) {
    throw Error(ErrorKind::cap_exceeded,
                what + " needs " + std::to_string(needed) + " vertices, above the cap of " + std::to_string(cap));
  }
}

Rational edge_length(Weighting weighting, unsigned base, int level) {
  if (weighting == Weighting::unit) return Rational(1);
  return Rational(Integer(1), boost::multiprecision::pow(Integer(base), static_cast<unsigned>(level)));
}

std::size_t tree_size(int depth) {
  if (depth >= 62) return SIZE_MAX;
  return (std::size_t{1} << (depth + 1)) - 1;
}

// Shared replace-every-edge construction for diamonds and Laakso graphs.
WeightedGraph substitute_edges(int level, Weighting weighting, unsigned base, std::size_t new_per_edge,
                               std::size_t edges_per_gadget, std::size_t vertex_cap, const char* family) {
  check_level(level, family);
  // Count first so the cap fires before allocation.
  std::size_t vertices = 2;
  std::size_t edges = 1;
  for (int k = 1; k <= level; ++k) {
    vertices += new_per_edge * edges;
    edges *= edges_per_gadget;
    check_cap(vertices, vertex_cap, family);
  }

  std::size_t count = 2;
  std::vector<std::pair<std::size_t, std::size_t>> current{{0, 1}};
  for (int k = 1; k <= level; ++k) {
    std::vector<std::pair<std::size_t, std::size_t>> next;
    next.reserve(current.size() * edges_per_gadget);
    for (auto [u, v] : current) {
      if (new_per_edge == 2) {
        std::size_t a = count++;
        std::size_t b = count++;
        next.insert(next.end(), {{u, a}, {a, v}, {v, b}, {b, u}});
      } else {
        std::size_t stem = count++;
        std::size_t left = count++;
        std::size_t right = count++;
        std::size_t stem2 = count++;
        next.insert(next.end(), {{u, stem}, {stem, left}, {stem, right}, {left, stem2}, {right, stem2}, {stem2, v}});
      }
    }
    current = std::move(next);
  }

  std::vector<PointId> points(count);
  points[0].label = "s";
  points[1].label = "t";
  const Rational length = edge_length(weighting, base, level);
  std::vector<Edge> edge_list;
  edge_list.reserve(current.size());
  for (auto [u, v] : current) edge_list.push_back({u, v, length});
  WeightedGraph graph(std::move(points), std::move(edge_list));
  graph.set_terminals(0, 1);
  return graph;
}

}  // namespace

std::size_t tree_vertex_depth(std::size_t heap_index) {
  return static_cast<std::size_t>(std::bit_width(heap_index + 1)) - 1;
}

std::size_t tree_distance(std::size_t a, std::size_t b) {
  std::size_t da = tree_vertex_depth(a);
  std::size_t db = tree_vertex_depth(b);
  std::size_t steps = 0;
  while (da > db) { a = (a - 1) / 2; --da; ++steps; }
  while (db > da) { b = (b - 1) / 2; --db; ++steps; }
  while (a != b) {
    a = (a - 1) / 2;
    b = (b - 1) / 2;
    steps += 2;
  }
  return steps;
}

std::string tree_label(std::size_t heap_index) {
  std::string label;
  while (heap_index != 0) {
    label.push_back(heap_index % 2 == 1 ? '0' : '1');
    heap_index = (heap_index - 1) / 2;
  }
  return {label.rbegin(), label.rend()};
}

WeightedGraph binary_tree(int depth, std::size_t vertex_cap) {
  check_level(depth, "binary tree");
  const std::size_t n = tree_size(depth);
  check_cap(n, vertex_cap, "binary tree");
  std::vector<PointId> points(n);
  std::vector<Edge> edges;
  edges.reserve(n > 0 ? n - 1 : 0);
  for (std::size_t i = 0; i < n; ++i) {
    points[i].label = tree_label(i);
    if (i > 0) edges.push_back({(i - 1) / 2, i, Rational(1)});
  }
  return WeightedGraph(std::move(points), std::move(edges));
}

MetricSpace binary_tree_metric(int depth, std::size_t vertex_cap) {
  check_level(depth, "binary tree");
  const std::size_t n = tree_size(depth);
  check_cap(n, vertex_cap, "binary tree");
  std::vector<std::optional<std::string>> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = tree_label(i);
  return MetricSpace::from_kernel(
      n, [](std::size_t a, std::size_t b) { return Rational(static_cast<long>(tree_distance(a, b))); },
      std::move(labels));
}

WeightedGraph fork() {
  std::vector<PointId> points{{0, "a0"}, {1, "a1"}, {2, "a2"}, {3, "a2'"}};
  std::vector<Edge> edges{{0, 1, Rational(1)}, {1, 2, Rational(1)}, {1, 3, Rational(1)}};
  return WeightedGraph(std::move(points), std::move(edges));
}

WeightedGraph diamond(int level, Weighting weighting, std::size_t vertex_cap) {
  return substitute_edges(level, weighting, 2, 2, 4, vertex_cap, "diamond");
}

WeightedGraph laakso(int level, Weighting weighting, std::size_t vertex_cap) {
  return substitute_edges(level, weighting, 4, 4, 6, vertex_cap, "Laakso graph");
}

WeightedGraph cycle(std::size_t size) {
  if (size < 3) throw Error(ErrorKind::validation, "cycle needs at least 3 vertices");
  std::vector<PointId> points(size);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < size; ++i) edges.push_back({i, (i + 1) % size, Rational(1)});
  return WeightedGraph(std::move(points), std::move(edges));
}

MetricSpace tree_product(const std::vector<int>& depths, std::size_t point_cap) {
  if (depths.empty()) throw Error(ErrorKind::validation, "tree product needs at least one factor");
  std::vector<std::size_t> radix;
  std::size_t total = 1;
  for (int d : depths) {
    check_level(d, "tree product factor");
    std::size_t n = tree_size(d);
    radix.push_back(n);
    if (n > point_cap || total > point_cap / n) {
      throw Error(ErrorKind::cap_exceeded, "tree product exceeds the point cap of " + std::to_string(point_cap));
    }
    total *= n;
  }
  auto decode = [radix](std::size_t index) {
    std::vector<std::size_t> coords(radix.size());
    for (std::size_t c = radix.size(); c-- > 0;) {
      coords[c] = index % radix[c];
      index /= radix[c];
    }
    return coords;
  };
  std::vector<std::optional<std::string>> labels(total);
  for (std::size_t i = 0; i < total; ++i) {
    std::string label = "(";
    auto coords = decode(i);
    for (std::size_t c = 0; c < coords.size(); ++c) {
      if (c) label += ",";
      label += tree_label(coords[c]);
    }
    labels[i] = label + ")";
  }
  return MetricSpace::from_kernel(
      total,
      [decode](std::size_t a, std::size_t b) {
        auto ca = decode(a);
        auto cb = decode(b);
        long sum = 0;
        for (std::size_t c = 0; c < ca.size(); ++c) sum += static_cast<long>(tree_distance(ca[c], cb[c]));
        return Rational(sum);
      },
      std::move(labels));
}

// ------------------------------------------------------------------ Heisenberg

HeisenbergElement operator*(const HeisenbergElement& a, const HeisenbergElement& b) {
  return {a.x + b.x, a.y + b.y, a.z + b.z + a.x * b.y};
}

HeisenbergElement inverse(const HeisenbergElement& g) { return {-g.x, -g.y, g.x * g.y - g.z}; }

const std::vector<HeisenbergElement>& heisenberg_generators() {
  static const std::vector<HeisenbergElement> generators{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}};
  return generators;
}

HeisenbergBall heisenberg_ball(int radius, int radius_cap) {
  if (radius < 0) throw Error(ErrorKind::validation, "radius must be non-negative");
  if (radius > radius_cap) {
    throw Error(ErrorKind::cap_exceeded, "Heisenberg radius " + std::to_string(radius) + " above the cap of " +
                                             std::to_string(radius_cap));
  }
  // BFS to twice the radius so that every |g^{-1}h| with g, h in the ball is known.
  std::map<HeisenbergElement, int> length;
  std::vector<HeisenbergElement> order;
  std::deque<HeisenbergElement> queue;
  length[{}] = 0;
  order.push_back({});
  queue.push_back({});
  while (!queue.empty()) {
    HeisenbergElement g = queue.front();
    queue.pop_front();
    const int lg = length[g];
    if (lg == 2 * radius) continue;
    for (const auto& s : heisenberg_generators()) {
      HeisenbergElement h = g * s;
      if (length.emplace(h, lg + 1).second) {
        order.push_back(h);
        queue.push_back(h);
      }
    }
  }

  HeisenbergBall ball;
  for (const auto& g : order) {
    if (length[g] <= radius) {
      ball.elements.push_back(g);
      ball.word_length.push_back(length[g]);
    }
  }
  const std::size_t n = ball.elements.size();
  std::vector<Rational> table(n * n);
  std::vector<std::optional<std::string>> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& g = ball.elements[i];
    labels[i] = "(" + std::to_string(g.x) + "," + std::to_string(g.y) + "," + std::to_string(g.z) + ")";
    const HeisenbergElement g_inv = inverse(g);
    for (std::size_t j = 0; j < n; ++j) table[i * n + j] = Rational(length.at(g_inv * ball.elements[j]));
  }
  ball.space = MetricSpace::from_table(n, std::move(table), std::move(labels));
  return ball;
}

}  // namespace testspace
