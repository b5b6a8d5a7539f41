#include "testspace/markov.hpp"

#include <bit>
#include <cmath>
#include <map>
#include <random>
#include <unordered_map>

#include "testspace/error.hpp"
#include "testspace/generators.hpp"

namespace testspace {

void MarkovChain::validate() const {
  const std::size_t n = transitions.size();
  if (n == 0) throw Error(ErrorKind::validation, "chain has no states");
  if (start >= n) throw Error(ErrorKind::validation, "start state out of range");
  if (horizon < 1) throw Error(ErrorKind::validation, "horizon must be >= 1");
  for (std::size_t u = 0; u < n; ++u) {
    Rational sum = 0;
    std::size_t previous = 0;
    bool first = true;
    for (const auto& [v, probability] : transitions[u]) {
      if (v >= n) throw Error(ErrorKind::validation, "transition target out of range in row " + std::to_string(u));
      if (probability <= 0) throw Error(ErrorKind::validation, "non-positive probability in row " + std::to_string(u));
      if (!first && v <= previous) throw Error(ErrorKind::validation, "row " + std::to_string(u) + " is not sorted");
      previous = v;
      first = false;
      sum += probability;
    }
    if (sum != 1) throw Error(ErrorKind::validation, "row " + std::to_string(u) + " sums to " + to_string(sum));
  }
}

const char* to_string(EstimateMethod method) {
  switch (method) {
    case EstimateMethod::exact_dp: return "exactDP";
    case EstimateMethod::analytic: return "analytic";
    case EstimateMethod::monte_carlo: return "monteCarlo";
  }
  return "unknown";
}

namespace {

int ceil_log2(std::size_t value) {
  return value <= 1 ? 0 : static_cast<int>(std::bit_width(value - 1));
}

std::optional<unsigned> integer_exponent(double p) {
  if (p >= 1.0 && p <= 64.0 && std::floor(p) == p) return static_cast<unsigned>(p);
  return std::nullopt;
}

void check_inputs(const MarkovChain& chain, const MetricMap& map, const MetricSpace& space, double p) {
  chain.validate();
  if (!(p > 0.0) || !std::isfinite(p)) throw Error(ErrorKind::validation, "p must be a positive real");
  if (map.size() != chain.num_states()) {
    throw Error(ErrorKind::validation, "state " + std::to_string(std::min(map.size(), chain.num_states())) +
                                           " has no map image");
  }
  for (std::size_t u = 0; u < map.size(); ++u) {
    if (map[u] >= space.size()) {
      throw Error(ErrorKind::validation, "state " + std::to_string(u) + " maps outside the metric space");
    }
  }
}

struct RationalArithmetic {
  using Scalar = Rational;
  unsigned exponent;

  Scalar probability(const Rational& value) const { return value; }
  Scalar distance_power(const Rational& d) const { return ipow(d, exponent); }
  Scalar weight(int k) const { return pow2(-k * static_cast<int>(exponent)); }
  static double to_real(const Scalar& value) { return to_double(value); }
};

struct RealArithmetic {
  using Scalar = double;
  double exponent;

  Scalar probability(const Rational& value) const { return to_double(value); }
  Scalar distance_power(const Rational& d) const { return std::pow(to_double(d), exponent); }
  Scalar weight(int k) const { return std::pow(2.0, -static_cast<double>(k) * exponent); }
  static double to_real(const Scalar& value) { return value; }
};

template <class Arithmetic>
class ExactProgram {
 public:
  using Scalar = typename Arithmetic::Scalar;
  using Distribution = std::vector<std::pair<std::size_t, Scalar>>;

  ExactProgram(const MarkovChain& chain, const MetricMap& map, const MetricSpace& space, Arithmetic arithmetic,
               std::uint64_t work_cap)
      : chain_(chain), map_(map), space_(space), arithmetic_(arithmetic), work_cap_(work_cap),
        latest_(chain.num_states()), pair_expectation_(chain.num_states()) {
    rows_.resize(chain.num_states());
    for (std::size_t u = 0; u < chain.num_states(); ++u) {
      for (const auto& [v, probability] : chain.transitions[u]) rows_[u].emplace_back(v, arithmetic_.probability(probability));
    }
  }

  std::pair<Scalar, Scalar> run(int max_k) {
    const std::size_t horizon = chain_.horizon;
    std::vector<Distribution> pi{{{chain_.start, Scalar(1)}}};
    for (std::size_t s = 1; s <= horizon; ++s) pi.push_back(step(pi.back()));

    Scalar lhs = 0;
    for (int k = 0; k <= max_k; ++k) {
      const std::size_t span = std::size_t{1} << k;
      Scalar sum = 0;
      for (std::size_t t = 1; t <= horizon; ++t) {
        const std::size_t s = t > span ? t - span : 0;
        for (const auto& [u, mass] : pi[s]) sum += mass * split_expectation(u, t - s);
      }
      lhs += sum * arithmetic_.weight(k);
    }

    Scalar rhs = 0;
    for (std::size_t t = 1; t <= horizon; ++t) {
      for (const auto& [u, mass] : pi[t - 1]) {
        for (const auto& [v, probability] : rows_[u]) rhs += mass * probability * distance_power(map_[u], map_[v]);
      }
    }
    return {lhs, rhs};
  }

 private:
  Distribution step(const Distribution& from) {
    std::map<std::size_t, Scalar> next;
    for (const auto& [u, mass] : from) {
      charge(rows_[u].size());
      for (const auto& [v, probability] : rows_[u]) next[v] += mass * probability;
    }
    return {next.begin(), next.end()};
  }

  /// Law of X_{s+L} given X_s = u; L only grows between calls for the same u.
  const Distribution& after(std::size_t u, std::size_t steps) {
    auto& [reached, law] = latest_[u];
    if (law.empty()) law = {{u, Scalar(1)}};
    for (; reached < steps; ++reached) law = step(law);
    return law;
  }

  void charge(std::uint64_t work) {
    work_ += work;
    if (work_ > work_cap_) {
      throw Error(ErrorKind::cap_exceeded, "exact evaluation exceeds " + std::to_string(work_cap_) +
                                               " terms; use the Monte Carlo mode");
    }
  }

  /// E[d(f(a), f(b))^p] for a, b independent with the law of X_{s+L} | X_s = u.
  const Scalar& split_expectation(std::size_t u, std::size_t steps) {
    auto& cache = pair_expectation_[u];
    while (cache.size() <= steps) {
      const Distribution& law = after(u, cache.size());
      charge(static_cast<std::uint64_t>(law.size()) * law.size() / 2 + 1);
      Scalar total = 0;
      for (std::size_t a = 0; a < law.size(); ++a) {
        for (std::size_t b = a + 1; b < law.size(); ++b) {
          total += law[a].second * law[b].second * distance_power(map_[law[a].first], map_[law[b].first]);
        }
      }
      cache.push_back(total * 2);
    }
    return cache[steps];
  }

  Scalar distance_power(std::size_t i, std::size_t j) {
    if (i == j) return Scalar(0);
    const std::size_t n = space_.size();
    if (n > kDenseCacheSide) return arithmetic_.distance_power(space_.dist(i, j));
    if (power_cache_.empty()) {
      power_cache_.resize(n * n);
      cached_.assign(n * n, 0);
    }
    const std::size_t key = std::min(i, j) * n + std::max(i, j);
    if (!cached_[key]) {
      power_cache_[key] = arithmetic_.distance_power(space_.dist(i, j));
      cached_[key] = 1;
    }
    return power_cache_[key];
  }

  static constexpr std::size_t kDenseCacheSide = 2048;

  const MarkovChain& chain_;
  const MetricMap& map_;
  const MetricSpace& space_;
  Arithmetic arithmetic_;
  std::vector<std::vector<std::pair<std::size_t, Scalar>>> rows_;
  std::uint64_t work_cap_;
  std::uint64_t work_ = 0;
  std::vector<std::pair<std::size_t, Distribution>> latest_;
  std::vector<std::vector<Scalar>> pair_expectation_;
  std::vector<Scalar> power_cache_;
  std::vector<char> cached_;
};

void finish(ConvexityEstimate& estimate) {
  if (estimate.rhs > 0.0) estimate.pi_lower = std::pow(estimate.lhs / estimate.rhs, 1.0 / estimate.p);
}

}  // namespace

ConvexityEstimate exact_convexity(const MarkovChain& chain, const MetricMap& map, const MetricSpace& space, double p,
                                  std::uint64_t work_cap) {
  check_inputs(chain, map, space, p);
  ConvexityEstimate out;
  out.p = p;
  out.method = EstimateMethod::exact_dp;
  out.horizon = chain.horizon;
  out.max_k = ceil_log2(chain.horizon);
  if (const auto exponent = integer_exponent(p)) {
    ExactProgram<RationalArithmetic> program(chain, map, space, RationalArithmetic{*exponent}, work_cap);
    auto [lhs, rhs] = program.run(out.max_k);
    out.lhs = to_double(lhs);
    out.rhs = to_double(rhs);
    out.lhs_exact = std::move(lhs);
    out.rhs_exact = std::move(rhs);
  } else {
    ExactProgram<RealArithmetic> program(chain, map, space, RealArithmetic{p}, work_cap);
    std::tie(out.lhs, out.rhs) = program.run(out.max_k);
  }
  finish(out);
  return out;
}

namespace {

class Sampler {
 public:
  explicit Sampler(const MarkovChain& chain) : cumulative_(chain.num_states()), targets_(chain.num_states()) {
    for (std::size_t u = 0; u < chain.num_states(); ++u) {
      Rational running = 0;
      for (const auto& [v, probability] : chain.transitions[u]) {
        running += probability;
        cumulative_[u].push_back(to_double(running));
        targets_[u].push_back(v);
      }
      cumulative_[u].back() = 1.0;
    }
  }

  std::size_t next(std::size_t u, std::mt19937_64& rng) const {
    const auto& row = cumulative_[u];
    if (row.size() == 1) return targets_[u][0];
    const double x = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (x < row[i]) return targets_[u][i];
    }
    return targets_[u].back();
  }

 private:
  std::vector<std::vector<double>> cumulative_;
  std::vector<std::vector<std::size_t>> targets_;
};

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t k, std::uint64_t t) {
  std::seed_seq sequence{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                         static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(t)};
  return std::mt19937_64(sequence);
}

struct Moments {
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t count = 0;

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }
  double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
};

}  // namespace

ConvexityEstimate mc_convexity(const MarkovChain& chain, const MetricMap& map, const MetricSpace& space, double p,
                               std::uint64_t seed, std::size_t samples) {
  check_inputs(chain, map, space, p);
  if (samples < 1) throw Error(ErrorKind::validation, "samples must be >= 1");
  ConvexityEstimate out;
  out.p = p;
  out.method = EstimateMethod::monte_carlo;
  out.horizon = chain.horizon;
  out.max_k = ceil_log2(chain.horizon);
  out.seed = seed;
  out.samples = samples;

  const Sampler sampler(chain);
  std::unordered_map<std::uint64_t, double> cache;
  auto distance_power = [&](std::size_t a, std::size_t b) {
    std::size_t i = map[a];
    std::size_t j = map[b];
    if (i == j) return 0.0;
    if (i > j) std::swap(i, j);
    const std::uint64_t key = static_cast<std::uint64_t>(i) * space.size() + j;
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, std::pow(to_double(space.dist(i, j)), p)).first;
    return it->second;
  };
  const double n = static_cast<double>(samples);

  double lhs_variance = 0.0;
  for (int k = 0; k <= out.max_k; ++k) {
    const std::size_t span = std::size_t{1} << k;
    const double weight = std::pow(2.0, -static_cast<double>(k) * p);
    for (std::size_t t = 1; t <= chain.horizon; ++t) {
      const std::size_t s = t > span ? t - span : 0;
      std::mt19937_64 rng = substream(seed, static_cast<std::uint64_t>(k) + 1, t);
      Moments moments;
      for (std::size_t sample = 0; sample < samples; ++sample) {
        std::size_t x = chain.start;
        for (std::size_t step = 0; step < s; ++step) x = sampler.next(x, rng);
        std::size_t a = x;
        std::size_t b = x;
        for (std::size_t step = s; step < t; ++step) {
          a = sampler.next(a, rng);
          b = sampler.next(b, rng);
        }
        moments.add(distance_power(a, b));
      }
      out.lhs += weight * moments.mean;
      lhs_variance += weight * weight * moments.variance() / n;
    }
  }

  double rhs_variance = 0.0;
  for (std::size_t t = 1; t <= chain.horizon; ++t) {
    std::mt19937_64 rng = substream(seed, 0, t);
    Moments moments;
    for (std::size_t sample = 0; sample < samples; ++sample) {
      std::size_t x = chain.start;
      for (std::size_t step = 1; step < t; ++step) x = sampler.next(x, rng);
      moments.add(distance_power(x, sampler.next(x, rng)));
    }
    out.rhs += moments.mean;
    rhs_variance += moments.variance() / n;
  }
  out.lhs_stderr = std::sqrt(lhs_variance);
  out.rhs_stderr = std::sqrt(rhs_variance);
  finish(out);
  return out;
}

WalkInstance downward_tree_walk(int m, std::size_t vertex_cap) {
  if (m < 0) throw Error(ErrorKind::validation, "m must be >= 0");
  if (m > 5) {
    throw Error(ErrorKind::cap_exceeded, "T_{2^" + std::to_string(m) + "} is too large to build; use the analytic mode");
  }
  const int depth = 1 << m;
  const std::size_t vertices = (std::size_t{1} << (depth + 1)) - 1;
  if (vertices > vertex_cap) {
    throw Error(ErrorKind::cap_exceeded, "T_{2^" + std::to_string(m) + "} has " + std::to_string(vertices) +
                                             " vertices, above the cap " + std::to_string(vertex_cap) +
                                             "; use the analytic mode");
  }
  WalkInstance out;
  out.chain.start = 0;
  out.chain.horizon = static_cast<std::size_t>(depth);
  out.chain.transitions.resize(vertices);
  const std::size_t internal = (std::size_t{1} << depth) - 1;
  for (std::size_t v = 0; v < vertices; ++v) {
    if (v < internal) {
      out.chain.transitions[v] = {{2 * v + 1, Rational(1, 2)}, {2 * v + 2, Rational(1, 2)}};
    } else {
      out.chain.transitions[v] = {{v, Rational(1)}};
    }
  }
  out.map.resize(vertices);
  for (std::size_t v = 0; v < vertices; ++v) out.map[v] = v;
  out.space = binary_tree_metric(depth, vertex_cap);
  return out;
}

ConvexityEstimate tree_walk_analytic(int m, double p) {
  if (m < 0 || m > 20) throw Error(ErrorKind::validation, "m must be in 0..20");
  if (!(p > 0.0) || !std::isfinite(p)) throw Error(ErrorKind::validation, "p must be a positive real");
  const std::size_t horizon = std::size_t{1} << m;
  ConvexityEstimate out;
  out.p = p;
  out.method = EstimateMethod::analytic;
  out.horizon = horizon;
  out.max_k = ceil_log2(horizon);

  auto evaluate = [&](auto arithmetic, auto zero) {
    using Scalar = decltype(zero);
    // split[L] = Σ_{j=1}^{L} 2^{−j}·(2(L−j+1))^p = ½·split[L−1] + ½·(2L)^p
    std::vector<Scalar> split(horizon + 1, zero);
    std::vector<Scalar> prefix(horizon + 1, zero);
    for (std::size_t length = 1; length <= horizon; ++length) {
      split[length] = (split[length - 1] + arithmetic.distance_power(Rational(2 * length))) / 2;
      prefix[length] = prefix[length - 1] + split[length];
    }
    Scalar lhs = zero;
    for (int k = 0; k <= out.max_k; ++k) {
      const std::size_t span = std::min(std::size_t{1} << k, horizon);
      const Scalar sum = prefix[span] + split[span] * Scalar(static_cast<long>(horizon - span));
      lhs += sum * arithmetic.weight(k);
    }
    return lhs;
  };

  if (const auto exponent = integer_exponent(p)) {
    Rational lhs = evaluate(RationalArithmetic{*exponent}, Rational(0));
    out.lhs = to_double(lhs);
    out.lhs_exact = std::move(lhs);
    out.rhs_exact = Rational(horizon);
  } else {
    out.lhs = evaluate(RealArithmetic{p}, 0.0);
  }
  out.rhs = static_cast<double>(horizon);
  finish(out);
  return out;
}

WalkInstance downhill_walk(const WeightedGraph& graph, std::size_t source, std::size_t sink, std::size_t horizon) {
  const std::size_t n = graph.num_vertices();
  if (source >= n || sink >= n) throw Error(ErrorKind::validation, "source or sink out of range");
  if (horizon < 1) throw Error(ErrorKind::validation, "horizon must be >= 1");
  const auto to_sink = shortest_distances_from(graph, sink);
  WalkInstance out;
  out.chain.start = source;
  out.chain.horizon = horizon;
  out.chain.transitions.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    if (v == sink) {
      out.chain.transitions[v] = {{v, Rational(1)}};
      continue;
    }
    if (!to_sink[v]) throw Error(ErrorKind::validation, "vertex " + std::to_string(v) + " cannot reach the sink");
    std::vector<std::size_t> closer;
    for (const auto& neighbor : graph.neighbors(v)) {
      if (to_sink[neighbor.vertex] && *to_sink[neighbor.vertex] < *to_sink[v]) closer.push_back(neighbor.vertex);
    }
    if (closer.empty()) throw Error(ErrorKind::validation, "vertex " + std::to_string(v) + " has no downhill neighbor");
    std::sort(closer.begin(), closer.end());
    const Rational probability(1, static_cast<long>(closer.size()));
    for (const std::size_t w : closer) out.chain.transitions[v].emplace_back(w, probability);
  }
  out.map.resize(n);
  for (std::size_t v = 0; v < n; ++v) out.map[v] = v;
  out.space = apsp(graph);
  return out;
}

}  // namespace testspace
