#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "testspace/metric_core.hpp"
#include "testspace/rational.hpp"

namespace testspace {

/// Finite Markov chain with exact rational transition probabilities. Time runs
/// 1..horizon; the chain sits at `start` for every t ≤ 0.
struct MarkovChain {
  /// Row u: sorted (target, probability) pairs with positive probabilities.
  std::vector<std::vector<std::pair<std::size_t, Rational>>> transitions;
  std::size_t start = 0;
  std::size_t horizon = 1;

  std::size_t num_states() const noexcept { return transitions.size(); }
  /// Rows sum to exactly 1, targets in range, start in range, horizon ≥ 1.
  void validate() const;
};

/// State → point of a MetricSpace.
using MetricMap = std::vector<std::size_t>;

enum class EstimateMethod { exact_dp, analytic, monte_carlo };

const char* to_string(EstimateMethod method);

/// lhs = Σ_{k=0}^{⌈log₂T⌉} Σ_{t=1}^{T} E[d(f(X_t), f(X̃_t(t−2^k)))^p] / 2^{kp}
/// rhs = Σ_{t=1}^{T} E[d(f(X_t), f(X_{t−1}))^p]
/// where X̃(s) follows X up to time max(s, 0) and then evolves independently.
struct ConvexityEstimate {
  double p = 2.0;
  EstimateMethod method = EstimateMethod::exact_dp;
  std::size_t horizon = 0;
  int max_k = 0;
  /// Exact values, present for integer p in exact and analytic modes.
  std::optional<Rational> lhs_exact;
  std::optional<Rational> rhs_exact;
  double lhs = 0.0;
  double rhs = 0.0;
  /// (lhs/rhs)^{1/p}, only when rhs > 0.
  std::optional<double> pi_lower;
  // Monte Carlo only.
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  double lhs_stderr = 0.0;
  double rhs_stderr = 0.0;
};

/// Exact dynamic program over state distributions. Rational arithmetic for
/// integer p, double otherwise. Throws for states without a map image, and
/// cap_exceeded once more than `work_cap` terms would be summed.
ConvexityEstimate exact_convexity(const MarkovChain& chain, const MetricMap& map, const MetricSpace& space, double p,
                                  std::uint64_t work_cap = std::uint64_t{1} << 22);

/// Sample means of every (k, t) term with one mt19937_64 substream per term
/// seeded from (seed, k, t); the step sum uses k = −1. Deterministic in seed.
ConvexityEstimate mc_convexity(const MarkovChain& chain, const MetricMap& map, const MetricSpace& space, double p,
                               std::uint64_t seed, std::size_t samples);

/// A chain together with its metric image.
struct WalkInstance {
  MarkovChain chain;
  MetricMap map;
  MetricSpace space;
};

/// Downward random walk on T_{2^m}: start at the root, move to each child with
/// probability 1/2, leaves absorbing, horizon 2^m. States are heap indices.
/// Throws cap_exceeded (pointing to the analytic mode) past `vertex_cap`.
WalkInstance downward_tree_walk(int m, std::size_t vertex_cap = std::size_t{1} << 22);

/// The same functional for the downward walk on T_{2^m} without building the
/// tree: after a split at depth s the copies agree for j−1 more steps with
/// probability 2^{−j} and end 2(L−j+1) apart, L = t − s.
ConvexityEstimate tree_walk_analytic(int m, double p);

/// From every vertex, uniform over neighbors strictly closer to `sink`; the
/// sink is absorbing. Throws if some vertex ≠ sink has no such neighbor.
WalkInstance downhill_walk(const WeightedGraph& graph, std::size_t source, std::size_t sink, std::size_t horizon);

}  // namespace testspace
