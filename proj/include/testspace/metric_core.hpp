#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "testspace/rational.hpp"

namespace testspace {

struct PointId {
  std::size_t index = 0;
  std::optional<std::string> label;
};

/// Finite metric space with exact rational distances.
///
/// Distances come either from a dense N×N table or from a kernel
/// (an exact closed-form distance such as the binary-tree metric), so that
/// large structured spaces never materialize N² rationals. The class does not
/// enforce the metric axioms; `verify_metric` reports violations.
class MetricSpace {
 public:
  using Kernel = std::function<Rational(std::size_t, std::size_t)>;

  MetricSpace() = default;

  /// Row-major table of size n*n.
  static MetricSpace from_table(std::size_t n, std::vector<Rational> table,
                                std::vector<std::optional<std::string>> labels = {});
  static MetricSpace from_kernel(std::size_t n, Kernel kernel,
                                 std::vector<std::optional<std::string>> labels = {});

  std::size_t size() const noexcept { return size_; }
  Rational dist(std::size_t i, std::size_t j) const;
  bool has_table() const noexcept { return table_ != nullptr; }

  const std::vector<std::optional<std::string>>& labels() const noexcept { return labels_; }
  std::optional<std::string> label(std::size_t i) const;

  /// Same points, every distance multiplied by `factor` (> 0).
  MetricSpace scaled(const Rational& factor) const;
  /// Induced subspace on `points`, in the given order.
  MetricSpace subspace(std::span<const std::size_t> points) const;
  /// Dense copy of the distance table.
  MetricSpace materialized() const;

 private:
  std::size_t size_ = 0;
  std::shared_ptr<const std::vector<Rational>> table_;
  Kernel kernel_;
  std::vector<std::optional<std::string>> labels_;
};

struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;
  Rational length;
};

/// Undirected graph with positive rational edge lengths.
class WeightedGraph {
 public:
  struct Neighbor {
    std::size_t vertex;
    std::size_t edge;
  };

  WeightedGraph() = default;
  /// Validates: endpoints in range, no self-loops, no duplicate undirected
  /// edges, positive lengths, unique labels. Connectivity is checked by apsp.
  WeightedGraph(std::vector<PointId> vertices, std::vector<Edge> edges);

  std::size_t num_vertices() const noexcept { return vertices_.size(); }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  const std::vector<PointId>& vertices() const noexcept { return vertices_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::span<const Neighbor> neighbors(std::size_t v) const;
  /// Edge joining u and v, if any.
  std::optional<std::size_t> edge_between(std::size_t u, std::size_t v) const;

  /// Designated source/sink (diamonds, Laakso graphs).
  const std::optional<std::pair<std::size_t, std::size_t>>& terminals() const noexcept { return terminals_; }
  void set_terminals(std::size_t source, std::size_t sink);

  std::vector<std::optional<std::string>> labels() const;

 private:
  std::vector<PointId> vertices_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::optional<std::pair<std::size_t, std::size_t>> terminals_;
};

struct GeodesicPath {
  std::vector<std::size_t> vertices;
  /// Cumulative length from the first vertex; starts at 0.
  std::vector<Rational> breakpoints;

  Rational length() const { return breakpoints.empty() ? Rational(0) : breakpoints.back(); }
  bool operator==(const GeodesicPath&) const = default;
};

/// Exact single-source shortest-path distances (Dijkstra on rationals).
/// Unreachable vertices are reported with std::nullopt.
std::vector<std::optional<Rational>> shortest_distances_from(const WeightedGraph& graph, std::size_t source);

/// All-pairs shortest-path metric. Throws PairError naming an unreachable pair
/// when the graph is disconnected.
MetricSpace apsp(const WeightedGraph& graph);

enum class AxiomKind { identity, positivity, symmetry, triangle };

struct AxiomViolation {
  AxiomKind kind;
  /// identity: (i,i,i); positivity/symmetry: (i,j,j);
  /// triangle: d(i,j) > d(i,k) + d(k,j) reported as (i,j,k).
  std::size_t i;
  std::size_t j;
  std::size_t k;
};

struct MetricReport {
  std::vector<AxiomViolation> violations;
  bool valid() const noexcept { return violations.empty(); }
};

const char* to_string(AxiomKind kind);

MetricReport verify_metric(const MetricSpace& space);

inline constexpr std::size_t kDefaultGeodesicCap = 1'000'000;

/// Every shortest u–v vertex path, in lexicographic order of vertex indices.
std::vector<GeodesicPath> enumerate_geodesic_paths(const WeightedGraph& graph, std::size_t u, std::size_t v,
                                                   std::size_t cap = kDefaultGeodesicCap);

}  // namespace testspace
