#include "testspace/metric_core.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <unordered_set>

#include "testspace/error.hpp"

namespace testspace {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::cap_exceeded: return "cap_exceeded";
    case ErrorKind::undecided: return "undecided";
    case ErrorKind::io: return "io";
    case ErrorKind::internal: return "internal";
  }
  return "unknown";
}

// ---------------------------------------------------------------- MetricSpace

MetricSpace MetricSpace::from_table(std::size_t n, std::vector<Rational> table,
                                    std::vector<std::optional<std::string>> labels) {
  if (table.size() != n * n) {
    throw Error(ErrorKind::validation, "distance table has " + std::to_string(table.size()) +
                                           " entries, expected " + std::to_string(n * n));
  }
  if (!labels.empty() && labels.size() != n) throw Error(ErrorKind::validation, "label count differs from size");
  MetricSpace space;
  space.size_ = n;
  space.table_ = std::make_shared<const std::vector<Rational>>(std::move(table));
  space.labels_ = std::move(labels);
  return space;
}

MetricSpace MetricSpace::from_kernel(std::size_t n, Kernel kernel, std::vector<std::optional<std::string>> labels) {
  if (!kernel) throw Error(ErrorKind::validation, "empty distance kernel");
  if (!labels.empty() && labels.size() != n) throw Error(ErrorKind::validation, "label count differs from size");
  MetricSpace space;
  space.size_ = n;
  space.kernel_ = std::move(kernel);
  space.labels_ = std::move(labels);
  return space;
}

Rational MetricSpace::dist(std::size_t i, std::size_t j) const {
  if (i >= size_ || j >= size_) throw Error(ErrorKind::validation, "point index out of range");
  if (table_) return (*table_)[i * size_ + j];
  return kernel_(i, j);
}

std::optional<std::string> MetricSpace::label(std::size_t i) const {
  if (labels_.empty()) return std::nullopt;
  return labels_.at(i);
}

MetricSpace MetricSpace::scaled(const Rational& factor) const {
  if (factor <= 0) throw Error(ErrorKind::validation, "scale factor must be positive");
  if (table_) {
    std::vector<Rational> table(*table_);
    for (auto& d : table) d *= factor;
    return from_table(size_, std::move(table), labels_);
  }
  auto kernel = kernel_;
  return from_kernel(size_, [kernel, factor](std::size_t i, std::size_t j) { return Rational(kernel(i, j) * factor); },
                     labels_);
}

MetricSpace MetricSpace::subspace(std::span<const std::size_t> points) const {
  const std::size_t n = points.size();
  std::vector<Rational> table(n * n);
  std::vector<std::optional<std::string>> labels;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) table[a * n + b] = dist(points[a], points[b]);
    if (!labels_.empty()) labels.push_back(labels_.at(points[a]));
  }
  return from_table(n, std::move(table), std::move(labels));
}

MetricSpace MetricSpace::materialized() const {
  if (table_) return *this;
  std::vector<std::size_t> all(size_);
  for (std::size_t i = 0; i < size_; ++i) all[i] = i;
  return subspace(all);
}

// -------------------------------------------------------------- WeightedGraph

WeightedGraph::WeightedGraph(std::vector<PointId> vertices, std::vector<Edge> edges)
    : vertices_(std::move(vertices)), edges_(std::move(edges)), adjacency_(vertices_.size()) {
  std::set<std::string> seen_labels;
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    vertices_[i].index = i;
    if (vertices_[i].label && !seen_labels.insert(*vertices_[i].label).second) {
      throw Error(ErrorKind::validation, "duplicate vertex label '" + *vertices_[i].label + "'");
    }
  }
  std::set<std::pair<std::size_t, std::size_t>> seen_edges;
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto& edge = edges_[e];
    if (edge.u >= vertices_.size() || edge.v >= vertices_.size()) {
      throw Error(ErrorKind::validation, "edge " + std::to_string(e) + " has an endpoint out of range");
    }
    if (edge.u == edge.v) throw Error(ErrorKind::validation, "self-loop at vertex " + std::to_string(edge.u));
    if (edge.length <= 0) throw Error(ErrorKind::validation, "edge " + std::to_string(e) + " has non-positive length");
    auto key = std::minmax(edge.u, edge.v);
    if (!seen_edges.insert(key).second) {
      throw Error(ErrorKind::validation,
                  "duplicate edge {" + std::to_string(key.first) + "," + std::to_string(key.second) + "}");
    }
    adjacency_[edge.u].push_back({edge.v, e});
    adjacency_[edge.v].push_back({edge.u, e});
  }
  for (auto& list : adjacency_) {
    std::sort(list.begin(), list.end(), [](const Neighbor& a, const Neighbor& b) { return a.vertex < b.vertex; });
  }
}

std::span<const WeightedGraph::Neighbor> WeightedGraph::neighbors(std::size_t v) const { return adjacency_.at(v); }

std::optional<std::size_t> WeightedGraph::edge_between(std::size_t u, std::size_t v) const {
  for (const auto& nb : adjacency_.at(u)) {
    if (nb.vertex == v) return nb.edge;
  }
  return std::nullopt;
}

void WeightedGraph::set_terminals(std::size_t source, std::size_t sink) {
  if (source >= vertices_.size() || sink >= vertices_.size() || source == sink) {
    throw Error(ErrorKind::validation, "invalid terminals");
  }
  terminals_ = std::make_pair(source, sink);
}

std::vector<std::optional<std::string>> WeightedGraph::labels() const {
  std::vector<std::optional<std::string>> out;
  out.reserve(vertices_.size());
  for (const auto& v : vertices_) out.push_back(v.label);
  return out;
}

// ------------------------------------------------------------ shortest paths

std::vector<std::optional<Rational>> shortest_distances_from(const WeightedGraph& graph, std::size_t source) {
  const std::size_t n = graph.num_vertices();
  if (source >= n) throw Error(ErrorKind::validation, "source out of range");
  std::vector<std::optional<Rational>> dist(n);
  std::vector<char> done(n, 0);
  // Min-heap on (distance, vertex); stale entries are skipped on pop.
  using Item = std::pair<Rational, std::size_t>;
  auto greater = [](const Item& a, const Item& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second > b.second;
  };
  std::priority_queue<Item, std::vector<Item>, decltype(greater)> heap(greater);
  dist[source] = Rational(0);
  heap.emplace(Rational(0), source);
  while (!heap.empty()) {
    auto [d, x] = heap.top();
    heap.pop();
    if (done[x]) continue;
    done[x] = 1;
    for (const auto& nb : graph.neighbors(x)) {
      Rational candidate = d + graph.edges()[nb.edge].length;
      auto& current = dist[nb.vertex];
      if (!current || candidate < *current) {
        current = candidate;
        heap.emplace(std::move(candidate), nb.vertex);
      }
    }
  }
  return dist;
}

MetricSpace apsp(const WeightedGraph& graph) {
  const std::size_t n = graph.num_vertices();
  std::vector<Rational> table(n * n);
  for (std::size_t s = 0; s < n; ++s) {
    auto row = shortest_distances_from(graph, s);
    for (std::size_t t = 0; t < n; ++t) {
      if (!row[t]) {
        throw PairError(ErrorKind::validation,
                        "graph is disconnected: no path between vertices " + std::to_string(s) + " and " +
                            std::to_string(t),
                        s, t);
      }
      table[s * n + t] = std::move(*row[t]);
    }
  }
  return MetricSpace::from_table(n, std::move(table), graph.labels());
}

// -------------------------------------------------------------- verification

const char* to_string(AxiomKind kind) {
  switch (kind) {
    case AxiomKind::identity: return "identity";
    case AxiomKind::positivity: return "positivity";
    case AxiomKind::symmetry: return "symmetry";
    case AxiomKind::triangle: return "triangle";
  }
  return "unknown";
}

MetricReport verify_metric(const MetricSpace& space) {
  MetricReport report;
  const std::size_t n = space.size();
  const MetricSpace dense = space.materialized();
  for (std::size_t i = 0; i < n; ++i) {
    if (dense.dist(i, i) != 0) report.violations.push_back({AxiomKind::identity, i, i, i});
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (dense.dist(i, j) <= 0) report.violations.push_back({AxiomKind::positivity, i, j, j});
      if (i < j && dense.dist(i, j) != dense.dist(j, i)) report.violations.push_back({AxiomKind::symmetry, i, j, j});
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const Rational dij = dense.dist(i, j);
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        if (dij > dense.dist(i, k) + dense.dist(k, j)) report.violations.push_back({AxiomKind::triangle, i, j, k});
      }
    }
  }
  return report;
}

// ------------------------------------------------------------------ geodesics

std::vector<GeodesicPath> enumerate_geodesic_paths(const WeightedGraph& graph, std::size_t u, std::size_t v,
                                                   std::size_t cap) {
  if (u == v) throw Error(ErrorKind::validation, "geodesic endpoints must differ");
  auto from_u = shortest_distances_from(graph, u);
  auto from_v = shortest_distances_from(graph, v);
  if (!from_u.at(v)) throw PairError(ErrorKind::validation, "endpoints are not connected", u, v);
  const Rational total = *from_u[v];

  auto on_geodesic = [&](std::size_t x) { return from_u[x] && from_v[x] && *from_u[x] + *from_v[x] == total; };

  std::vector<GeodesicPath> paths;
  GeodesicPath current;
  current.vertices.push_back(u);
  current.breakpoints.push_back(Rational(0));

  std::function<void(std::size_t)> extend = [&](std::size_t x) {
    if (x == v) {
      if (paths.size() >= cap) {
        throw Error(ErrorKind::cap_exceeded,
                    "geodesic enumeration exceeded the cap of " + std::to_string(cap) + " paths");
      }
      paths.push_back(current);
      return;
    }
    for (const auto& nb : graph.neighbors(x)) {
      const Rational& len = graph.edges()[nb.edge].length;
      if (!on_geodesic(nb.vertex) || *from_u[x] + len != *from_u[nb.vertex]) continue;
      current.vertices.push_back(nb.vertex);
      current.breakpoints.push_back(*from_u[nb.vertex]);
      extend(nb.vertex);
      current.vertices.pop_back();
      current.breakpoints.pop_back();
    }
  };
  extend(u);
  return paths;
}

}  // namespace testspace
