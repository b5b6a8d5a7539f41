#include "testspace/rnp.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <set>

#include "testspace/error.hpp"
#include "testspace/generators.hpp"

namespace testspace {

// ---------------------------------------------------------------- δ-trees

RationalVector DeltaTree::vector(std::size_t node) const {
  const auto& values = nodes.at(node);
  return RationalVector(values.begin(), values.end());
}

DeltaTree rademacher_tree(int depth, int depth_cap) {
  if (depth < 1) throw Error(ErrorKind::validation, "tree depth must be >= 1");
  if (depth > depth_cap) {
    throw Error(ErrorKind::cap_exceeded, "tree depth " + std::to_string(depth) + " exceeds the cap " +
                                             std::to_string(depth_cap));
  }
  DeltaTree tree;
  tree.depth = depth;
  const std::size_t dim = tree.dim();
  const std::size_t count = (std::size_t{1} << (depth + 1)) - 1;
  tree.nodes.assign(count, std::vector<std::int64_t>(dim, 0));
  std::fill(tree.nodes[0].begin(), tree.nodes[0].end(), 1);
  for (std::size_t i = 0; 2 * i + 2 < count; ++i) {
    const int k = static_cast<int>(tree_vertex_depth(i)) + 1;
    for (int epsilon = 0; epsilon <= 1; ++epsilon) {
      auto& child = tree.nodes[2 * i + 1 + static_cast<std::size_t>(epsilon)];
      for (std::size_t a = 0; a < dim; ++a) {
        const std::int64_t r = ((a >> (depth - k)) & 1) ? -1 : 1;
        child[a] = tree.nodes[i][a] * (1 + (2 * epsilon - 1) * r);
      }
    }
  }
  return tree;
}

TreeReport verify_tree(const DeltaTree& tree) {
  TreeReport report;
  const std::size_t dim = tree.dim();
  const std::size_t count = tree.nodes.size();
  const Rational scale = tree.atom_weight();
  auto flag = [&](std::size_t node) {
    if (!report.first_failure) report.first_failure = node;
  };
  bool first = true;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& x = tree.nodes[i];
    if (x.size() != dim) throw Error(ErrorKind::validation, "tree node has the wrong dimension");
    std::int64_t mass = 0;
    for (auto value : x) mass += value < 0 ? -value : value;
    if (Rational(mass) * scale != 1) {
      report.unit_norms = false;
      flag(i);
    }
    if (2 * i + 2 >= count) continue;
    const auto& left = tree.nodes[2 * i + 1];
    const auto& right = tree.nodes[2 * i + 2];
    for (std::size_t a = 0; a < dim; ++a) {
      if (2 * x[a] != left[a] + right[a]) {
        report.midpoints_exact = false;
        flag(i);
        break;
      }
    }
    for (const auto* child : {&left, &right}) {
      std::int64_t gap = 0;
      for (std::size_t a = 0; a < dim; ++a) gap += std::abs(x[a] - (*child)[a]);
      const Rational separation = Rational(gap) * scale;
      if (first || separation < report.min_separation) report.min_separation = separation;
      if (first || separation > report.max_separation) report.max_separation = separation;
      first = false;
    }
  }
  return report;
}

// ---------------------------------------------------------------- δ-bushes

std::vector<std::size_t> DeltaBush::children(std::size_t level, std::size_t index) const {
  std::vector<std::size_t> out;
  if (level + 1 >= levels.size()) return out;
  const auto& parents = parent[level + 1];
  for (std::size_t j = 0; j < parents.size(); ++j) {
    if (parents[j] == index) out.push_back(j);
  }
  return out;
}

Rational DeltaBush::norm(const RationalVector& v) const {
  Rational sum = 0;
  for (const auto& x : v) sum += abs_value(x);
  return sum * atom_weight;
}

namespace {

RationalVector difference(const RationalVector& a, const RationalVector& b) {
  RationalVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

RationalVector scaled(const Rational& factor, const RationalVector& v) {
  RationalVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = factor * v[i];
  return out;
}

void add_scaled(RationalVector& target, const Rational& factor, const RationalVector& v) {
  for (std::size_t i = 0; i < v.size(); ++i) target[i] += factor * v[i];
}

}  // namespace

BushReport verify_bush(const DeltaBush& bush) {
  BushReport report;
  if (bush.levels.empty() || bush.levels[0].size() != 1) {
    throw Error(ErrorKind::validation, "a bush starts with a single vector");
  }
  if (bush.parent.size() != bush.levels.size() || bush.weights.size() != bush.levels.size()) {
    throw Error(ErrorKind::validation, "bush partitions and weights must cover every level");
  }
  bool first = true;
  report.sup_norm = bush.norm(bush.levels[0][0]);
  for (std::size_t n = 1; n < bush.levels.size(); ++n) {
    const auto& level = bush.levels[n];
    if (bush.parent[n].size() != level.size() || bush.weights[n].size() != level.size()) {
      throw Error(ErrorKind::validation, "bush level " + std::to_string(n) + " has mismatched partition data");
    }
    for (std::size_t k = 0; k < bush.levels[n - 1].size(); ++k) {
      const auto& z = bush.levels[n - 1][k];
      RationalVector combination(bush.dim, Rational(0));
      Rational total = 0;
      bool has_children = false;
      for (std::size_t j = 0; j < level.size(); ++j) {
        if (bush.parent[n][j] != k) continue;
        has_children = true;
        const Rational& lambda = bush.weights[n][j];
        if (lambda < 0) report.weights_valid = false;
        total += lambda;
        add_scaled(combination, lambda, level[j]);
        const Rational separation = bush.norm(difference(level[j], z));
        if (first || separation < report.min_separation) report.min_separation = separation;
        first = false;
        report.sup_norm = std::max(report.sup_norm, bush.norm(level[j]));
      }
      if (!has_children || total != 1) report.weights_valid = false;
      if (combination != z) report.convex_combinations_exact = false;
      if ((!report.weights_valid || !report.convex_combinations_exact) && !report.first_failure) {
        report.first_failure = std::make_pair(n - 1, k);
      }
    }
  }
  return report;
}

DeltaBush tree_to_bush(const DeltaTree& tree) {
  if (!verify_tree(tree).ok()) throw Error(ErrorKind::validation, "input is not a valid delta-tree");
  DeltaBush bush;
  bush.dim = tree.dim();
  bush.atom_weight = tree.atom_weight();
  bush.delta = tree.delta;
  for (int j = 0; j <= tree.depth; ++j) {
    const std::size_t begin = (std::size_t{1} << j) - 1;
    const std::size_t end = (std::size_t{1} << (j + 1)) - 1;
    std::vector<RationalVector> level;
    std::vector<std::size_t> parents;
    std::vector<Rational> weights;
    for (std::size_t i = begin; i < end; ++i) {
      level.push_back(tree.vector(i));
      if (j > 0) {
        parents.push_back((i - 1) / 2 - ((std::size_t{1} << (j - 1)) - 1));
        weights.emplace_back(1, 2);
      }
    }
    bush.levels.push_back(std::move(level));
    bush.parent.push_back(std::move(parents));
    bush.weights.push_back(std::move(weights));
  }
  if (!verify_bush(bush).ok(bush.delta)) throw Error(ErrorKind::internal, "tree_to_bush produced an invalid bush");
  return bush;
}

GaugeNorm bush_gauge(const DeltaBush& bush) {
  std::vector<RationalVector> generators;
  for (const auto& level : bush.levels) generators.insert(generators.end(), level.begin(), level.end());
  return GaugeNorm(bush.dim, bush.atom_weight, std::move(generators));
}

// ---------------------------------------------------------------- broken lines

namespace {

class GaugeCache {
 public:
  explicit GaugeCache(const GaugeNorm& gauge) : gauge_(gauge) {}

  const Rational& operator()(const RationalVector& v) {
    auto it = values_.find(v);
    if (it == values_.end()) it = values_.emplace(v, gauge_eval(gauge_, v)).first;
    return it->second;
  }

 private:
  const GaugeNorm& gauge_;
  std::map<RationalVector, Rational> values_;
};

std::vector<LineTerm> refine(const DeltaBush& bush, const std::vector<LineTerm>& terms, int bit) {
  std::vector<LineTerm> out;
  for (const auto& term : terms) {
    const auto kids = bush.children(term.level, term.index);
    if (kids.empty()) throw Error(ErrorKind::validation, "bush is too shallow for the requested depth");
    for (const std::size_t j : kids) {
      const Rational half = term.coefficient * bush.weights[term.level + 1][j] / 2;
      LineTerm parent{half, term.level, term.index};
      LineTerm child{half, term.level + 1, j};
      if (bit == 0) {
        out.push_back(parent);
        out.push_back(child);
      } else {
        out.push_back(child);
        out.push_back(parent);
      }
    }
  }
  return out;
}

}  // namespace

BrokenLineFamily broken_line_family(const DeltaBush& bush, int depth) {
  if (depth < 0) throw Error(ErrorKind::validation, "depth must be >= 0");
  if (static_cast<std::size_t>(depth) >= bush.levels.size()) {
    throw Error(ErrorKind::validation, "bush has fewer than " + std::to_string(depth + 1) + " levels");
  }
  if (!verify_bush(bush).ok(bush.delta)) throw Error(ErrorKind::validation, "input is not a valid delta-bush");
  for (const auto& level : bush.levels) {
    for (const auto& z : level) {
      Rational functional = 0;
      for (const auto& x : z) functional += x;
      if (functional * bush.atom_weight != 1) {
        throw Error(ErrorKind::validation, "bush not normalized to the hyperplane x*(z) = 1");
      }
    }
  }

  const GaugeNorm gauge = bush_gauge(bush);
  GaugeCache gauge_of(gauge);
  auto node = [&](const LineTerm& term) -> const RationalVector& { return bush.levels[term.level][term.index]; };

  BrokenLineFamily family;
  const RationalVector& endpoint = bush.levels[0][0];
  family.endpoint_gauge = gauge_of(endpoint);
  bool first = true;
  for (std::size_t n = 1; n < bush.levels.size(); ++n) {
    for (std::size_t j = 0; j < bush.levels[n].size(); ++j) {
      const Rational g = gauge_of(difference(bush.levels[n][j], bush.levels[n - 1][bush.parent[n][j]]));
      if (first || g < family.gauge_delta) family.gauge_delta = g;
      first = false;
    }
  }

  auto make_line = [&](std::string label, std::vector<LineTerm> terms) {
    BrokenLine line;
    line.label = std::move(label);
    line.terms = std::move(terms);
    RationalVector position(bush.dim, Rational(0));
    line.vertices.push_back(position);
    line.gauge_sum = 0;
    for (const auto& term : line.terms) {
      const RationalVector segment = scaled(term.coefficient, node(term));
      line.gauge_sum += gauge_of(segment);
      add_scaled(position, 1, segment);
      line.vertices.push_back(position);
    }
    if (line.gauge_sum != family.endpoint_gauge || position != endpoint) family.all_geodesic = false;
    return line;
  };

  family.lines.push_back(make_line("", {LineTerm{Rational(1), 0, 0}}));
  for (std::size_t i = 0; family.lines[i].label.size() < static_cast<std::size_t>(depth); ++i) {
    for (int bit = 0; bit <= 1; ++bit) {
      const BrokenLine& parent = family.lines[i];
      std::string label = parent.label + static_cast<char>('0' + bit);
      std::vector<LineTerm> terms = refine(bush, parent.terms, bit);
      family.lines.push_back(make_line(std::move(label), std::move(terms)));
    }
  }

  const std::size_t count = family.lines.size();
  for (std::size_t i = 0; 2 * i + 2 < count; ++i) {
    const auto& zero = family.lines[2 * i + 1].vertices;
    const auto& one = family.lines[2 * i + 2].vertices;
    LineDeviation deviation{family.lines[i].label, Rational(0), false};
    for (std::size_t k = 1; k < zero.size(); k += 2) deviation.deviation += gauge_of(difference(zero[k], one[k]));
    deviation.meets_bound = deviation.deviation >= family.gauge_delta / 2;
    family.deviations.push_back(std::move(deviation));
  }

  std::vector<std::set<RationalVector>> vertex_sets;
  for (const auto& line : family.lines) vertex_sets.emplace_back(line.vertices.begin(), line.vertices.end());
  for (std::size_t i = 0; i < count && family.vertex_monotone; ++i) {
    std::vector<std::size_t> frontier{i};
    while (!frontier.empty() && family.vertex_monotone) {
      std::vector<std::size_t> next;
      for (const std::size_t a : frontier) {
        for (const std::size_t b : {2 * a + 1, 2 * a + 2}) {
          if (b >= count) continue;
          next.push_back(b);
          if (!std::includes(vertex_sets[b].begin(), vertex_sets[b].end(), vertex_sets[i].begin(),
                             vertex_sets[i].end())) {
            family.vertex_monotone = false;
            family.monotonicity_failure = std::make_pair(family.lines[i].label, family.lines[b].label);
            break;
          }
        }
      }
      frontier = std::move(next);
    }
  }
  return family;
}

// ---------------------------------------------------------------- thick families

std::optional<std::size_t> GeodesicFamily::find(const std::vector<std::size_t>& path) const {
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (members[i] == path) return i;
  }
  return std::nullopt;
}

GeodesicFamily make_geodesic_family(WeightedGraph graph, std::size_t source, std::size_t sink,
                                    std::vector<GeodesicPath> paths, std::size_t control_stride) {
  if (paths.empty()) throw Error(ErrorKind::validation, "a geodesic family needs at least one member");
  if (control_stride < 1) throw Error(ErrorKind::validation, "control stride must be >= 1");
  GeodesicFamily family;
  family.space = apsp(graph);
  family.source = source;
  family.sink = sink;
  family.grid = paths.front().breakpoints;
  family.control_stride = control_stride;
  const Rational length = family.space.dist(source, sink);
  for (const auto& path : paths) {
    if (path.breakpoints != family.grid) throw Error(ErrorKind::validation, "family members must share breakpoints");
    if (path.vertices.front() != source || path.vertices.back() != sink || path.length() != length) {
      throw Error(ErrorKind::validation, "family member is not a source-sink geodesic");
    }
    family.members.push_back(path.vertices);
  }
  family.graph = std::move(graph);
  return family;
}

GeodesicFamily diamond_geodesic_family(int level, std::size_t geodesic_cap) {
  if (level < 1) throw Error(ErrorKind::validation, "diamond level must be >= 1");
  WeightedGraph graph = diamond(level, Weighting::scaled);
  auto paths = enumerate_geodesic_paths(graph, 0, 1, geodesic_cap);
  return make_geodesic_family(std::move(graph), 0, 1, std::move(paths), 2);
}

ThicknessResponse thickness_response(const GeodesicFamily& family, std::size_t member,
                                     const std::vector<std::size_t>& controls) {
  if (member >= family.members.size()) throw Error(ErrorKind::validation, "member index out of range");
  const std::size_t last = family.grid_size() - 1;
  for (const std::size_t k : controls) {
    if (k > last || (k % family.control_stride != 0 && k != last)) {
      throw Error(ErrorKind::validation, "control point " + std::to_string(k) + " is off the control grid");
    }
  }
  const auto& g = family.members[member];
  std::optional<ThicknessResponse> best;
  for (std::size_t candidate = 0; candidate < family.members.size(); ++candidate) {
    const auto& h = family.members[candidate];
    if (std::any_of(controls.begin(), controls.end(), [&](std::size_t k) { return g[k] != h[k]; })) continue;
    ThicknessResponse response;
    response.member = candidate;
    response.total = 0;
    for (std::size_t k = 0; k <= last; ++k) {
      if (g[k] == h[k]) response.common.push_back(k);
    }
    for (std::size_t i = 1; i < response.common.size(); ++i) {
      const std::size_t a = response.common[i - 1];
      const std::size_t b = response.common[i];
      if (b - a < 2) {
        response.deviation_params.push_back((family.grid[a] + family.grid[b]) / 2);
        response.deviation_index.push_back(std::nullopt);
        response.deviations.emplace_back(0);
        continue;
      }
      std::size_t arg = a + 1;
      Rational value = family.space.dist(g[arg], h[arg]);
      for (std::size_t k = a + 2; k < b; ++k) {
        Rational d = family.space.dist(g[k], h[k]);
        if (d > value) {
          value = std::move(d);
          arg = k;
        }
      }
      response.deviation_params.push_back(family.grid[arg]);
      response.deviation_index.push_back(arg);
      response.total += value;
      response.deviations.push_back(std::move(value));
    }
    if (!best || response.total > best->total ||
        (response.total == best->total && response.common.size() < best->common.size())) {
      best = std::move(response);
    }
  }
  return *best;
}

bool recombinations_in_family(const GeodesicFamily& family, std::size_t member, const ThicknessResponse& response) {
  const auto& g = family.members.at(member);
  const auto& h = family.members.at(response.member);
  const std::size_t intervals = response.common.size() - 1;
  if (intervals > 20) throw Error(ErrorKind::cap_exceeded, "too many intervals to recombine exhaustively");
  for (std::size_t mask = 0; mask < (std::size_t{1} << intervals); ++mask) {
    std::vector<std::size_t> path = g;
    for (std::size_t i = 0; i < intervals; ++i) {
      if (!((mask >> i) & 1)) continue;
      for (std::size_t k = response.common[i]; k <= response.common[i + 1]; ++k) path[k] = h[k];
    }
    if (!family.find(path)) return false;
  }
  return true;
}

ThicknessResult thickness_alpha(const GeodesicFamily& family, std::size_t control_budget,
                                std::size_t evaluation_cap) {
  if (family.members.empty()) throw Error(ErrorKind::validation, "empty geodesic family");
  const std::size_t last = family.grid_size() - 1;
  std::vector<std::size_t> allowed;
  for (std::size_t k = family.control_stride; k < last; k += family.control_stride) allowed.push_back(k);

  ThicknessResult result;
  bool first = true;
  for (std::size_t member = 0; member < family.members.size(); ++member) {
    for (std::size_t size = 0; size <= std::min(control_budget, allowed.size()); ++size) {
      std::vector<std::size_t> pick(size);
      for (std::size_t i = 0; i < size; ++i) pick[i] = i;
      while (true) {
        if (result.configurations >= evaluation_cap) {
          result.complete = false;
          return result;
        }
        std::vector<std::size_t> controls(size);
        for (std::size_t i = 0; i < size; ++i) controls[i] = allowed[pick[i]];
        const Rational total = thickness_response(family, member, controls).total;
        ++result.configurations;
        if (first || total < result.alpha) {
          result.alpha = total;
          result.witness_member = member;
          result.witness_controls = controls;
          first = false;
        }
        // Next combination in lexicographic order.
        std::size_t i = size;
        while (i > 0 && pick[i - 1] == allowed.size() - size + i - 1) --i;
        if (i == 0) break;
        ++pick[i - 1];
        for (std::size_t j = i; j < size; ++j) pick[j] = pick[j - 1] + 1;
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------- martingales

namespace {

Rational l1_norm(const RationalVector& v) {
  Rational sum = 0;
  for (const auto& x : v) sum += abs_value(x);
  return sum;
}

bool well_formed(const MartingaleLevel& level, std::size_t dim) {
  const auto& t = level.breakpoints;
  if (t.size() < 2 || t.front() != 0 || t.back() != 1 || level.values.size() + 1 != t.size()) return false;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i] <= t[i - 1]) return false;
  }
  return std::all_of(level.values.begin(), level.values.end(), [&](const auto& v) { return v.size() == dim; });
}

/// Index of the interval (t[i], t[i+1]] containing the open interval (a, b).
std::size_t interval_containing(const std::vector<Rational>& t, const Rational& a) {
  const auto it = std::upper_bound(t.begin(), t.end(), a);
  return static_cast<std::size_t>(it - t.begin()) - 1;
}

}  // namespace

MartingaleReport martingale_check(const Martingale& martingale) {
  MartingaleReport report;
  report.sup_norm = 0;
  auto fail = [&](std::size_t level, std::size_t interval, std::string what) {
    if (!report.first_violation) {
      report.first_violation = std::make_pair(level, interval);
      report.violation = std::move(what);
    }
  };
  for (std::size_t k = 0; k < martingale.levels.size(); ++k) {
    if (!well_formed(martingale.levels[k], martingale.dim)) {
      report.refines = false;
      fail(k, 0, "malformed partition");
      return report;
    }
    for (std::size_t i = 0; i < martingale.levels[k].values.size(); ++i) {
      const Rational norm = l1_norm(martingale.levels[k].values[i]);
      report.sup_norm = std::max(report.sup_norm, norm);
      if (norm > 1) {
        report.bounded = false;
        fail(k, i, "value norm exceeds 1");
      }
    }
  }
  for (std::size_t k = 1; k < martingale.levels.size(); ++k) {
    const auto& coarse = martingale.levels[k - 1];
    const auto& fine = martingale.levels[k];
    for (const auto& t : coarse.breakpoints) {
      if (!std::binary_search(fine.breakpoints.begin(), fine.breakpoints.end(), t)) {
        report.refines = false;
        fail(k, 0, "partition does not refine the previous one");
      }
    }
    std::vector<Rational> merged = coarse.breakpoints;
    merged.insert(merged.end(), fine.breakpoints.begin(), fine.breakpoints.end());
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());

    Rational integral = 0;
    std::vector<RationalVector> averages(coarse.values.size(), RationalVector(martingale.dim, Rational(0)));
    for (std::size_t i = 0; i + 1 < merged.size(); ++i) {
      const Rational length = merged[i + 1] - merged[i];
      const std::size_t c = interval_containing(coarse.breakpoints, merged[i]);
      const std::size_t f = interval_containing(fine.breakpoints, merged[i]);
      integral += length * l1_norm(difference(fine.values[f], coarse.values[c]));
      add_scaled(averages[c], length, fine.values[f]);
    }
    for (std::size_t c = 0; c < coarse.values.size(); ++c) {
      const Rational length = coarse.breakpoints[c + 1] - coarse.breakpoints[c];
      if (averages[c] != scaled(length, coarse.values[c])) {
        report.conditional_expectation = false;
        fail(k, c, "conditional expectation differs from the previous level");
      }
    }
    if (k % 2 == 0 && martingale.even_difference_bound && integral < *martingale.even_difference_bound) {
      report.differences_meet_bound = false;
      fail(k, 0, "difference below the recorded lower bound");
    }
    report.differences.push_back(std::move(integral));
  }
  return report;
}

Embedding diamond_cut_embedding(int level) {
  if (level < 0) throw Error(ErrorKind::validation, "diamond level must be >= 0");
  WeightedGraph graph = diamond(level, Weighting::scaled);

  struct Quadrilateral {
    std::size_t top;
    std::size_t bottom;
  };
  using Membership = std::vector<std::pair<std::size_t, int>>;
  struct Piece {
    std::size_t u;
    std::size_t v;
    Membership membership;
  };
  std::vector<Quadrilateral> quadrilaterals;
  std::vector<Membership> membership(2);
  std::vector<Piece> current{{0, 1, {}}};
  for (int k = 1; k <= level; ++k) {
    std::vector<Piece> next;
    for (const auto& piece : current) {
      const std::size_t q = quadrilaterals.size();
      quadrilaterals.push_back({piece.u, piece.v});
      Membership left = piece.membership;
      left.emplace_back(q, 1);
      Membership right = piece.membership;
      right.emplace_back(q, -1);
      const std::size_t a = membership.size();
      membership.push_back(left);
      const std::size_t b = membership.size();
      membership.push_back(right);
      next.push_back({piece.u, a, left});
      next.push_back({a, piece.v, left});
      next.push_back({piece.v, b, right});
      next.push_back({b, piece.u, right});
    }
    current = std::move(next);
  }
  if (membership.size() != graph.num_vertices() || current.size() != graph.num_edges()) {
    throw Error(ErrorKind::internal, "diamond layout differs from the generator");
  }
  for (std::size_t e = 0; e < current.size(); ++e) {
    if (graph.edges()[e].u != current[e].u || graph.edges()[e].v != current[e].v) {
      throw Error(ErrorKind::internal, "diamond layout differs from the generator");
    }
  }

  Embedding embedding{apsp(graph), NormedTarget::l1(1 + quadrilaterals.size()), {}};
  const MetricSpace& space = embedding.space;
  for (std::size_t x = 0; x < membership.size(); ++x) {
    RationalVector coordinates(1 + quadrilaterals.size(), Rational(0));
    coordinates[0] = space.dist(0, x);
    for (const auto& [q, sign] : membership[x]) {
      const auto& quad = quadrilaterals[q];
      coordinates[1 + q] = sign * std::min(space.dist(quad.top, x), space.dist(x, quad.bottom));
    }
    embedding.vectors.push_back(SparseVector::from_dense(coordinates));
  }
  return embedding;
}

MartingaleConstruction martingale_from_embedding(const GeodesicFamily& family, const Embedding& embedding,
                                                 std::size_t steps, const Rational& alpha) {
  if (embedding.space.size() != family.space.size()) {
    throw Error(ErrorKind::validation, "embedding and family live on different spaces");
  }
  if (embedding.target.kind() != NormKind::l1) throw Error(ErrorKind::validation, "the target norm must be l1");
  if (family.grid.back() != 1) throw Error(ErrorKind::validation, "family endpoints must be at distance 1");
  embedding.validate();

  const DistortionReport measured = distortion(embedding);
  const std::size_t dim = embedding.target.dim();
  std::vector<RationalVector> f;
  for (const auto& v : embedding.vectors) f.push_back(scaled(1 / measured.lip_power, v.to_dense(dim)));
  auto norm = [&](const RationalVector& v) { return exact_norm(embedding.target, v); };

  MartingaleConstruction out;
  out.ell = 1 / measured.distortion_power();
  out.alpha = alpha;
  out.martingale.dim = dim;
  out.martingale.even_difference_bound = out.ell * alpha / 4;

  auto slope = [&](std::size_t from, std::size_t to, const Rational& length) {
    return scaled(1 / length, difference(f[to], f[from]));
  };
  auto add_level = [&](const std::vector<std::size_t>& path, const std::vector<std::size_t>& points) {
    MartingaleLevel level;
    for (std::size_t i = 0; i < points.size(); ++i) {
      level.breakpoints.push_back(family.grid[points[i]]);
      if (i == 0) continue;
      const Rational length = family.grid[points[i]] - family.grid[points[i - 1]];
      level.values.push_back(slope(path[points[i - 1]], path[points[i]], length));
    }
    out.martingale.levels.push_back(std::move(level));
  };

  const std::size_t last = family.grid_size() - 1;
  std::size_t geodesic = 0;
  std::vector<std::size_t> points{0, last};
  add_level(family.members[geodesic], points);

  for (std::size_t step = 0; step < steps; ++step) {
    MartingaleStep record;
    record.geodesic = geodesic;
    record.controls = points;
    record.response = thickness_response(family, geodesic, points);
    const ThicknessResponse& response = record.response;
    if (response.total == 0) {
      throw Error(ErrorKind::validation, "family is not thick at the requested control points");
    }
    const auto& g = family.members[geodesic];
    const auto& h = family.members[response.member];
    add_level(g, response.common);

    std::vector<std::size_t> path = g;
    std::vector<std::size_t> next_points;
    for (std::size_t i = 0; i + 1 < response.common.size(); ++i) {
      const std::size_t a = response.common[i];
      const std::size_t b = response.common[i + 1];
      next_points.push_back(a);
      const auto& s = response.deviation_index[i];
      if (!s) continue;
      const Rational before = family.grid[*s] - family.grid[a];
      const Rational after = family.grid[b] - family.grid[*s];
      auto bend = [&](std::size_t z) { return norm(difference(slope(z, g[b], after), slope(g[a], z, before))); };

      QuadrupleCheck check;
      check.lhs_z = bend(g[*s]);
      check.lhs_z_tilde = bend(h[*s]);
      check.picked_tilde = !(check.lhs_z > check.lhs_z_tilde);
      const std::size_t chosen = check.picked_tilde ? h[*s] : g[*s];
      const Rational& chosen_lhs = check.picked_tilde ? check.lhs_z_tilde : check.lhs_z;
      check.branch_bound = out.ell / 2 * response.deviations[i] * (1 / after + 1 / before);
      check.branch_holds = chosen_lhs >= check.branch_bound;

      const RationalVector x = slope(g[a], chosen, before);
      const RationalVector y = slope(chosen, g[b], after);
      const RationalVector z = slope(g[a], g[b], before + after);
      check.interval_integral = before * norm(difference(x, z)) + after * norm(difference(y, z));
      check.interval_bound = norm(difference(x, y)) * std::min(before, after) / 2;
      check.interval_holds = check.interval_integral >= check.interval_bound;
      record.quadruples.push_back(std::move(check));

      if (record.quadruples.back().picked_tilde) {
        for (std::size_t k = a; k <= b; ++k) path[k] = h[k];
      }
      next_points.push_back(*s);
    }
    next_points.push_back(last);

    const auto found = family.find(path);
    if (!found) throw Error(ErrorKind::validation, "a recombined geodesic is missing from the family");
    geodesic = *found;
    points = std::move(next_points);
    add_level(family.members[geodesic], points);
    record.next_geodesic = geodesic;
    out.steps.push_back(std::move(record));
  }
  out.report = martingale_check(out.martingale);
  return out;
}

}  // namespace testspace
