#include "testspace/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>

#include "testspace/error.hpp"
#include "testspace/generators.hpp"

namespace testspace {

// ------------------------------------------------------------ SparseVector

SparseVector SparseVector::from_dense(std::span<const Rational> values) {
  SparseVector v;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] != 0) v.entries.emplace_back(i, values[i]);
  }
  return v;
}

RationalVector SparseVector::to_dense(std::size_t dim) const {
  RationalVector dense(dim, Rational(0));
  for (const auto& [i, x] : entries) {
    if (i >= dim) throw Error(ErrorKind::validation, "sparse coordinate outside the target dimension");
    dense[i] = x;
  }
  return dense;
}

SparseVector operator-(const SparseVector& a, const SparseVector& b) {
  SparseVector out;
  out.entries.reserve(a.entries.size() + b.entries.size());
  auto ia = a.entries.begin();
  auto ib = b.entries.begin();
  while (ia != a.entries.end() || ib != b.entries.end()) {
    if (ib == b.entries.end() || (ia != a.entries.end() && ia->first < ib->first)) {
      out.entries.push_back(*ia++);
    } else if (ia == a.entries.end() || ib->first < ia->first) {
      out.entries.emplace_back(ib->first, -ib->second);
      ++ib;
    } else {
      Rational d = ia->second - ib->second;
      if (d != 0) out.entries.emplace_back(ia->first, std::move(d));
      ++ia;
      ++ib;
    }
  }
  return out;
}

SparseVector operator*(const Rational& factor, const SparseVector& v) {
  SparseVector out;
  if (factor == 0) return out;
  out.entries.reserve(v.entries.size());
  for (const auto& [i, x] : v.entries) out.entries.emplace_back(i, factor * x);
  return out;
}

// -------------------------------------------------------------------- norms

const char* to_string(NormKind kind) {
  switch (kind) {
    case NormKind::l1: return "l1";
    case NormKind::l2: return "l2";
    case NormKind::linf: return "linf";
    case NormKind::summing: return "summing";
    case NormKind::gauge: return "gauge";
  }
  return "unknown";
}

NormKind parse_norm_kind(std::string_view name) {
  if (name == "l1") return NormKind::l1;
  if (name == "l2") return NormKind::l2;
  if (name == "linf") return NormKind::linf;
  if (name == "summing") return NormKind::summing;
  if (name == "gauge") return NormKind::gauge;
  throw Error(ErrorKind::validation, "unknown norm '" + std::string(name) + "'");
}

NormedTarget NormedTarget::gauge(std::shared_ptr<const GaugeNorm> g) {
  if (!g) throw Error(ErrorKind::validation, "gauge target needs a gauge norm");
  const std::size_t dim = g->dim();
  return {NormKind::gauge, dim, std::move(g)};
}

Rational norm_power(const NormedTarget& target, const SparseVector& v) {
  if (!v.entries.empty() && v.entries.back().first >= target.dim()) {
    throw Error(ErrorKind::validation, "vector has coordinates beyond the target dimension");
  }
  Rational result = 0;
  switch (target.kind()) {
    case NormKind::l1:
      for (const auto& [i, x] : v.entries) result += abs_value(x);
      return result;
    case NormKind::l2:
      for (const auto& [i, x] : v.entries) result += x * x;
      return result;
    case NormKind::linf:
      for (const auto& [i, x] : v.entries) result = std::max(result, abs_value(x));
      return result;
    case NormKind::summing: {
      Rational partial = 0;
      for (const auto& [i, x] : v.entries) {
        partial += x;
        result = std::max(result, abs_value(partial));
      }
      return result;
    }
    case NormKind::gauge: return gauge_eval(*target.gauge_norm(), v.to_dense(target.dim()));
  }
  return result;
}

Rational norm_power(const NormedTarget& target, std::span<const Rational> v) {
  if (v.size() != target.dim()) {
    throw Error(ErrorKind::validation, "vector length " + std::to_string(v.size()) + " differs from target dimension " +
                                           std::to_string(target.dim()));
  }
  return norm_power(target, SparseVector::from_dense(v));
}

Rational exact_norm(const NormedTarget& target, const SparseVector& v) {
  if (target.kind() == NormKind::l2) throw Error(ErrorKind::validation, "the l2 norm has no exact rational value");
  return norm_power(target, v);
}

Rational exact_norm(const NormedTarget& target, std::span<const Rational> v) {
  if (target.kind() == NormKind::l2) throw Error(ErrorKind::validation, "the l2 norm has no exact rational value");
  return norm_power(target, v);
}

double norm(const NormedTarget& target, std::span<const Rational> v) {
  const double value = to_double(norm_power(target, v));
  return target.norm_exponent() == 2 ? std::sqrt(value) : value;
}

// ---------------------------------------------------------------- Embedding

void Embedding::validate() const {
  if (vectors.size() != space.size()) {
    throw Error(ErrorKind::validation, "embedding has " + std::to_string(vectors.size()) + " vectors for " +
                                           std::to_string(space.size()) + " points");
  }
  for (const auto& v : vectors) {
    for (std::size_t k = 0; k < v.entries.size(); ++k) {
      if (v.entries[k].first >= target.dim()) throw Error(ErrorKind::validation, "vector exceeds target dimension");
      if (k > 0 && v.entries[k - 1].first >= v.entries[k].first) {
        throw Error(ErrorKind::validation, "sparse vector coordinates must increase");
      }
    }
  }
}

Embedding Embedding::scaled(const Rational& factor) const {
  Embedding out{space, target, {}};
  out.vectors.reserve(vectors.size());
  for (const auto& v : vectors) out.vectors.push_back(factor * v);
  return out;
}

Embedding Embedding::restricted(std::span<const std::size_t> points) const {
  Embedding out{space.subspace(points), target, {}};
  for (auto p : points) out.vectors.push_back(vectors.at(p));
  return out;
}

namespace {

double root(const Rational& value, int exponent) {
  const double x = to_double(value);
  return exponent == 2 ? std::sqrt(x) : x;
}

}  // namespace

double DistortionReport::lip() const { return root(lip_power, exponent); }
double DistortionReport::colip() const { return root(colip_power, exponent); }
double DistortionReport::distortion() const { return root(distortion_power(), exponent); }

DistortionReport distortion(const Embedding& embedding) {
  embedding.validate();
  const std::size_t n = embedding.space.size();
  if (n < 2) throw Error(ErrorKind::validation, "distortion needs at least two points");
  DistortionReport report;
  report.exponent = embedding.target.norm_exponent();
  bool first = true;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Rational image = norm_power(embedding.target, embedding.vectors[i] - embedding.vectors[j]);
      if (image == 0) {
        throw PairError(ErrorKind::validation,
                        "infinite distortion: points " + std::to_string(i) + " and " + std::to_string(j) +
                            " have identical images",
                        i, j);
      }
      Rational d = embedding.space.dist(i, j);
      if (report.exponent == 2) d *= d;
      Rational expansion = image / d;
      Rational contraction = d / image;
      if (first || expansion > report.lip_power) {
        report.lip_power = std::move(expansion);
        report.lip_witness = {i, j};
      }
      if (first || contraction > report.colip_power) {
        report.colip_power = std::move(contraction);
        report.colip_witness = {i, j};
      }
      first = false;
    }
  }
  return report;
}

Embedding frechet_embed(const MetricSpace& space) {
  const std::size_t n = space.size();
  Embedding out{space, NormedTarget::linf(n), {}};
  out.vectors.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SparseVector v;
    for (std::size_t k = 0; k < n; ++k) {
      Rational d = space.dist(i, k);
      if (d != 0) v.entries.emplace_back(k, std::move(d));
    }
    out.vectors.push_back(std::move(v));
  }
  return out;
}

// -------------------------------------------------------------------- James

std::optional<Rational> james_ratio(std::span<const long> coefficients, std::size_t split) {
  const std::size_t m = coefficients.size();
  if (split < 1 || split >= m) throw Error(ErrorKind::validation, "split index must lie in 1..m-1");
  long partial = 0;
  long sup = 0;
  long head = 0;
  for (std::size_t i = 0; i < m; ++i) {
    partial += coefficients[i];
    sup = std::max(sup, std::labs(partial));
    if (i + 1 == split) head = partial;
  }
  const long tail = partial - head;
  const long denominator = std::labs(head) + std::labs(tail);
  if (denominator == 0) return std::nullopt;
  return Rational(sup, denominator);
}

JamesSearchResult james_alpha(std::size_t length, int coefficient_bound) {
  if (length < 2) throw Error(ErrorKind::validation, "James sequences need m >= 2");
  if (coefficient_bound < 1) throw Error(ErrorKind::validation, "empty coefficient grid");
  if (length > 12) throw Error(ErrorKind::cap_exceeded, "James grid search is limited to m <= 12");
  JamesSearchResult result;
  result.length = length;
  result.coefficient_bound = coefficient_bound;
  bool found = false;
  std::vector<long> a(length, -coefficient_bound);
  // The ratio is invariant under a ↦ −a, so only vectors whose first nonzero
  // entry is positive are visited.
  for (;;) {
    auto lead = std::find_if(a.begin(), a.end(), [](long x) { return x != 0; });
    if (lead != a.end() && *lead > 0) {
      for (std::size_t j = 1; j < length; ++j) {
        auto ratio = james_ratio(a, j);
        ++result.evaluated;
        if (ratio && (!found || *ratio < result.infimum)) {
          found = true;
          result.infimum = *ratio;
          result.argmin_coefficients = a;
          result.argmin_split = j;
        }
      }
    }
    std::size_t k = length;
    while (k > 0 && a[k - 1] == coefficient_bound) {
      a[k - 1] = -coefficient_bound;
      --k;
    }
    if (k == 0) break;
    ++a[k - 1];
  }
  if (!found) throw Error(ErrorKind::validation, "coefficient grid produced no admissible ratio");
  return result;
}

// ----------------------------------------------------------------- Bourgain

BourgainLabeling bourgain_labeling(int depth) {
  if (depth < 0) throw Error(ErrorKind::validation, "depth must be non-negative");
  if (depth > 24) throw Error(ErrorKind::cap_exceeded, "Bourgain labeling is limited to depth 24");
  const std::size_t n = (std::size_t{1} << (depth + 1)) - 1;
  BourgainLabeling labeling;
  labeling.depth = depth;
  labeling.psi.resize(n);
  labeling.phi.resize(n);
  for (std::size_t v = 1; v < n; ++v) {
    const std::size_t parent = (v - 1) / 2;
    const int level = static_cast<int>(tree_vertex_depth(v));
    const Rational step = pow2(-level);
    labeling.psi[v] = v % 2 == 1 ? Rational(labeling.psi[parent] - step) : Rational(labeling.psi[parent] + step);
  }
  std::vector<std::size_t> order(n);
  for (std::size_t v = 0; v < n; ++v) order[v] = v;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return labeling.psi[a] < labeling.psi[b]; });
  for (std::size_t rank = 0; rank < n; ++rank) labeling.phi[order[rank]] = rank + 1;
  return labeling;
}

bool verify_bourgain_labeling(const BourgainLabeling& labeling) {
  const std::size_t n = labeling.phi.size();
  std::vector<std::size_t> sorted_phi(labeling.phi);
  std::sort(sorted_phi.begin(), sorted_phi.end());
  for (std::size_t k = 0; k < n; ++k) {
    if (sorted_phi[k] != k + 1) return false;
  }
  // Subtree φ-ranges, computed bottom-up: (min, max, count).
  struct Range {
    std::size_t lo, hi, count;
  };
  std::vector<Range> range(n);
  for (std::size_t v = n; v-- > 0;) {
    range[v] = {labeling.phi[v], labeling.phi[v], 1};
    for (std::size_t c : {2 * v + 1, 2 * v + 2}) {
      if (c >= n) continue;
      range[v].lo = std::min(range[v].lo, range[c].lo);
      range[v].hi = std::max(range[v].hi, range[c].hi);
      range[v].count += range[c].count;
    }
  }
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t left = 2 * v + 1;
    const std::size_t right = 2 * v + 2;
    if (left >= n) continue;
    for (std::size_t c : {left, right}) {
      if (range[c].hi - range[c].lo + 1 != range[c].count) return false;  // not an interval
    }
    const bool disjoint = range[left].hi < range[right].lo || range[right].hi < range[left].lo;
    if (!disjoint) return false;
  }
  return true;
}

Embedding bourgain_embed(int depth) {
  if (depth < 1) throw Error(ErrorKind::validation, "Bourgain embedding needs depth >= 1");
  const BourgainLabeling labeling = bourgain_labeling(depth);
  const std::size_t n = labeling.phi.size();
  Embedding out{binary_tree_metric(depth), NormedTarget::summing(n), {}};
  out.vectors.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    SparseVector& vec = out.vectors[v];
    for (std::size_t s = v;; s = (s - 1) / 2) {
      vec.entries.emplace_back(labeling.phi[s] - 1, Rational(1));
      if (s == 0) break;
    }
    std::sort(vec.entries.begin(), vec.entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  }
  return out;
}

// ---------------------------------------------------------------- submetric

namespace {

Rational l1_difference(const RationalVector& x, const RationalVector& y) {
  Rational sum = 0;
  for (std::size_t k = 0; k < x.size(); ++k) sum += abs_value(x[k] - y[k]);
  return sum;
}

Rational summing_difference(const RationalVector& x, const RationalVector& y) {
  Rational partial = 0;
  Rational sup = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    partial += x[k] - y[k];
    sup = std::max(sup, abs_value(partial));
  }
  return sup;
}

}  // namespace

bool SubmetricSpace::active(std::size_t i, std::size_t j) const {
  const auto& x = points.at(i);
  const auto& y = points.at(j);
  if (x.size() != y.size()) throw Error(ErrorKind::validation, "submetric points have different dimensions");
  return l1_difference(x, y) <= delta * summing_difference(x, y);
}

Rational SubmetricSpace::distance(std::size_t i, std::size_t j) const {
  return l1_difference(points.at(i), points.at(j));
}

MetricSpace SubmetricSpace::metric() const {
  const std::size_t n = points.size();
  std::vector<Rational> table(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) table[i * n + j] = distance(i, j);
  }
  return MetricSpace::from_table(n, std::move(table));
}

SubmetricResult submetric_check(const SubmetricSpace& sub, const Embedding& embedding) {
  if (sub.delta < 1) throw Error(ErrorKind::validation, "delta must be at least 1");
  if (embedding.vectors.size() != sub.points.size()) {
    throw Error(ErrorKind::validation, "embedding is not defined on every submetric point");
  }
  SubmetricResult result;
  for (std::size_t i = 0; i < sub.points.size(); ++i) {
    for (std::size_t j = i + 1; j < sub.points.size(); ++j) {
      if (!sub.active(i, j)) continue;
      const Rational d = sub.distance(i, j);
      if (d == 0) continue;
      ++result.active_pairs;
      const Rational image = exact_norm(embedding.target, embedding.vectors[i] - embedding.vectors[j]);
      if (image < d) {
        result.violation = PairWitness{i, j};
        result.constant.reset();
        return result;
      }
      Rational ratio = image / d;
      if (!result.constant || ratio > *result.constant) result.constant = std::move(ratio);
    }
  }
  return result;
}

// ------------------------------------------------------- cycles into trees

namespace {

using Adjacency = std::vector<std::vector<std::size_t>>;

std::string rooted_code(const Adjacency& tree, std::size_t v, std::size_t parent) {
  std::vector<std::string> children;
  for (std::size_t c : tree[v]) {
    if (c != parent) children.push_back(rooted_code(tree, c, v));
  }
  std::sort(children.begin(), children.end());
  std::string code = "(";
  for (const auto& c : children) code += c;
  return code + ")";
}

std::string canonical_code(const Adjacency& tree) {
  const std::size_t n = tree.size();
  if (n == 1) return "()";
  // Strip leaves layer by layer to find the center(s).
  std::vector<std::size_t> degree(n);
  std::vector<std::size_t> layer;
  for (std::size_t v = 0; v < n; ++v) {
    degree[v] = tree[v].size();
    if (degree[v] <= 1) layer.push_back(v);
  }
  std::size_t remaining = n;
  while (remaining > 2) {
    remaining -= layer.size();
    std::vector<std::size_t> next;
    for (std::size_t leaf : layer) {
      for (std::size_t nb : tree[leaf]) {
        if (--degree[nb] == 1) next.push_back(nb);
      }
    }
    layer = std::move(next);
  }
  std::string best;
  for (std::size_t center : layer) {
    std::string code = rooted_code(tree, center, n);
    if (best.empty() || code < best) best = code;
  }
  return best;
}

}  // namespace

std::vector<std::vector<std::vector<std::size_t>>> unlabeled_trees(std::size_t vertices) {
  if (vertices == 0) return {};
  std::map<std::string, Adjacency> current{{"()", Adjacency(1)}};
  for (std::size_t k = 2; k <= vertices; ++k) {
    std::map<std::string, Adjacency> next;
    for (const auto& [code, tree] : current) {
      for (std::size_t v = 0; v < tree.size(); ++v) {
        Adjacency grown = tree;
        grown.emplace_back();
        grown[v].push_back(k - 1);
        grown[k - 1].push_back(v);
        next.emplace(canonical_code(grown), std::move(grown));
      }
    }
    current = std::move(next);
  }
  std::vector<Adjacency> out;
  for (auto& [code, tree] : current) out.push_back(std::move(tree));
  return out;
}

namespace {

struct Fraction {
  long num;
  long den;
};

bool greater(const Fraction& a, const Fraction& b) { return a.num * b.den > b.num * a.den; }

}  // namespace

CycleTreeResult cycle_tree_lower_oracle(std::size_t cycle_size, std::size_t max_tree_vertices,
                                        std::uint64_t map_budget) {
  if (cycle_size < 3) throw Error(ErrorKind::validation, "cycle needs at least 3 vertices");
  if (max_tree_vertices > 12) throw Error(ErrorKind::cap_exceeded, "tree enumeration is limited to 12 vertices");
  const std::size_t m = cycle_size;
  CycleTreeResult result;
  result.cycle_size = m;
  result.max_tree_vertices = max_tree_vertices;
  result.lower_bound = Rational(static_cast<long>(m), 3) - 1;

  // Budget check: number of injective maps Σ_k (#trees_k) · k!/(k−m)!.
  std::vector<std::vector<Adjacency>> trees_by_size(max_tree_vertices + 1);
  long double planned = 0;
  for (std::size_t k = 1; k <= max_tree_vertices; ++k) {
    trees_by_size[k] = unlabeled_trees(k);
    if (k < m) continue;
    long double falling = 1;
    for (std::size_t i = 0; i < m; ++i) falling *= static_cast<long double>(k - i);
    planned += falling * static_cast<long double>(trees_by_size[k].size());
  }
  if (planned > static_cast<long double>(map_budget)) {
    throw Error(ErrorKind::cap_exceeded, "cycle-into-tree search needs more maps than the budget allows");
  }

  std::vector<std::vector<long>> cycle_dist(m, std::vector<long>(m));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t gap = i > j ? i - j : j - i;
      cycle_dist[i][j] = static_cast<long>(std::min(gap, m - gap));
    }
  }

  std::optional<Fraction> best;
  for (std::size_t k = 1; k <= max_tree_vertices; ++k) {
    for (const auto& tree : trees_by_size[k]) {
      ++result.trees_examined;
      if (k < m) continue;
      // Tree distances by BFS.
      std::vector<std::vector<long>> td(k, std::vector<long>(k, -1));
      for (std::size_t s = 0; s < k; ++s) {
        std::vector<std::size_t> queue{s};
        td[s][s] = 0;
        for (std::size_t q = 0; q < queue.size(); ++q) {
          for (std::size_t nb : tree[queue[q]]) {
            if (td[s][nb] < 0) {
              td[s][nb] = td[s][queue[q]] + 1;
              queue.push_back(nb);
            }
          }
        }
      }
      std::vector<std::size_t> image(m);
      std::vector<char> used(k, 0);
      // Depth-first assignment; partial lip/colip only grow, so a partial
      // distortion at or above the best found prunes the branch.
      std::function<void(std::size_t, Fraction, Fraction)> assign = [&](std::size_t i, Fraction lip, Fraction colip) {
        if (i == m) {
          ++result.maps_examined;
          Fraction d{lip.num * colip.num, lip.den * colip.den};
          if (!best || greater(*best, d)) best = d;
          return;
        }
        for (std::size_t t = 0; t < k; ++t) {
          if (used[t]) continue;
          Fraction l = lip;
          Fraction c = colip;
          for (std::size_t j = 0; j < i; ++j) {
            Fraction expansion{td[t][image[j]], cycle_dist[i][j]};
            Fraction contraction{cycle_dist[i][j], td[t][image[j]]};
            if (greater(expansion, l)) l = expansion;
            if (greater(contraction, c)) c = contraction;
          }
          if (best && !greater(*best, Fraction{l.num * c.num, l.den * c.den})) {
            ++result.maps_examined;
            continue;
          }
          used[t] = 1;
          image[i] = t;
          assign(i + 1, l, c);
          used[t] = 0;
        }
      };
      assign(0, Fraction{0, 1}, Fraction{0, 1});
    }
  }
  if (best) {
    result.min_distortion = Rational(best->num, best->den);
    result.bound_holds = *result.min_distortion >= result.lower_bound;
  }
  return result;
}

}  // namespace testspace
