#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "testspace/gauge.hpp"
#include "testspace/metric_core.hpp"
#include "testspace/rational.hpp"

namespace testspace {

/// Sorted (coordinate, nonzero value) pairs.
struct SparseVector {
  std::vector<std::pair<std::size_t, Rational>> entries;

  static SparseVector from_dense(std::span<const Rational> values);
  RationalVector to_dense(std::size_t dim) const;
  bool operator==(const SparseVector&) const = default;
};

SparseVector operator-(const SparseVector& a, const SparseVector& b);
SparseVector operator*(const Rational& factor, const SparseVector& v);

enum class NormKind { l1, l2, linf, summing, gauge };

const char* to_string(NormKind kind);
NormKind parse_norm_kind(std::string_view name);

/// A norm on ℝ^dim. ℓ₂ is the only kind without exact values; it is handled
/// through its exact square (see `norm_exponent`).
class NormedTarget {
 public:
  static NormedTarget l1(std::size_t dim) { return {NormKind::l1, dim, nullptr}; }
  static NormedTarget l2(std::size_t dim) { return {NormKind::l2, dim, nullptr}; }
  static NormedTarget linf(std::size_t dim) { return {NormKind::linf, dim, nullptr}; }
  static NormedTarget summing(std::size_t dim) { return {NormKind::summing, dim, nullptr}; }
  static NormedTarget gauge(std::shared_ptr<const GaugeNorm> g);

  NormKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  const GaugeNorm* gauge_norm() const noexcept { return gauge_.get(); }

  /// 2 for ℓ₂, 1 otherwise.
  int norm_exponent() const noexcept { return kind_ == NormKind::l2 ? 2 : 1; }

 private:
  NormedTarget(NormKind kind, std::size_t dim, std::shared_ptr<const GaugeNorm> g)
      : kind_(kind), dim_(dim), gauge_(std::move(g)) {}

  NormKind kind_;
  std::size_t dim_;
  std::shared_ptr<const GaugeNorm> gauge_;
};

/// ‖v‖^norm_exponent, exact.
Rational norm_power(const NormedTarget& target, const SparseVector& v);
Rational norm_power(const NormedTarget& target, std::span<const Rational> v);
/// Exact norm; throws for ℓ₂.
Rational exact_norm(const NormedTarget& target, std::span<const Rational> v);
Rational exact_norm(const NormedTarget& target, const SparseVector& v);
double norm(const NormedTarget& target, std::span<const Rational> v);

struct Embedding {
  MetricSpace space;
  NormedTarget target = NormedTarget::l1(1);
  std::vector<SparseVector> vectors;

  /// One vector per point, coordinates inside the target dimension.
  void validate() const;
  Embedding scaled(const Rational& factor) const;
  Embedding restricted(std::span<const std::size_t> points) const;
};

struct PairWitness {
  std::size_t i = 0;
  std::size_t j = 0;
};

/// lip = max ‖Δf‖/d, colip = max d/‖Δf‖, distortion = lip·colip.
/// Values are stored raised to the target's norm exponent so that ℓ₂ stays exact.
struct DistortionReport {
  int exponent = 1;
  Rational lip_power;
  Rational colip_power;
  PairWitness lip_witness;
  PairWitness colip_witness;

  Rational distortion_power() const { return lip_power * colip_power; }
  double lip() const;
  double colip() const;
  double distortion() const;
};

/// Throws PairError (validation) naming the first collapsed pair.
DistortionReport distortion(const Embedding& embedding);

/// Point i ↦ (d(i,0), …, d(i,N−1)) in ℓ_∞^N.
Embedding frechet_embed(const MetricSpace& space);

// ----------------------------------------------------------------- James

/// ‖Σ a_i e_i‖_s / (|Σ_{i≤split} a_i| + |Σ_{i>split} a_i|), split in 1..m−1.
/// Returns nullopt when the denominator vanishes.
std::optional<Rational> james_ratio(std::span<const long> coefficients, std::size_t split);

struct JamesSearchResult {
  std::size_t length = 0;
  int coefficient_bound = 0;
  Rational infimum;
  std::vector<long> argmin_coefficients;
  std::size_t argmin_split = 0;
  Rational analytic_bound{1, 3};
  std::uint64_t evaluated = 0;
};

/// Grid search of the James ratio over integer coefficients in
/// [−bound, bound]^m for basis vectors of the summing norm.
JamesSearchResult james_alpha(std::size_t length, int coefficient_bound = 3);

// --------------------------------------------------------------- Bourgain

struct BourgainLabeling {
  int depth = 0;
  std::vector<Rational> psi;     // heap index → Σ 2^{−i}(2θ_i − 1)
  std::vector<std::size_t> phi;  // heap index → rank of psi in 1..2^{n+1}−1
};

BourgainLabeling bourgain_labeling(int depth);

/// For every non-leaf vertex, the φ-images of its two child subtrees are
/// disjoint integer intervals.
bool verify_bourgain_labeling(const BourgainLabeling& labeling);

/// t ↦ Σ_{s ≤ t} e_{φ(s)} in the summing norm of dimension 2^{n+1}−1.
Embedding bourgain_embed(int depth);

// -------------------------------------------------------------- submetric

/// Points of ℓ₁ with active pairs ‖x−y‖₁ ≤ Δ·‖x−y‖_s.
struct SubmetricSpace {
  std::vector<RationalVector> points;
  Rational delta{1};

  bool active(std::size_t i, std::size_t j) const;
  Rational distance(std::size_t i, std::size_t j) const;
  /// The ℓ₁ metric on the points.
  MetricSpace metric() const;
};

struct SubmetricResult {
  /// Smallest C with d ≤ ‖Δf‖ ≤ C·d on all active pairs.
  std::optional<Rational> constant;
  /// First active pair with ‖Δf‖ < d.
  std::optional<PairWitness> violation;
  std::size_t active_pairs = 0;
};

/// Needs an exact (non-ℓ₂) target.
SubmetricResult submetric_check(const SubmetricSpace& sub, const Embedding& embedding);

// ------------------------------------------------------- cycles into trees

/// Unlabeled trees on `vertices` vertices as adjacency lists, one per
/// isomorphism class, in a deterministic order.
std::vector<std::vector<std::vector<std::size_t>>> unlabeled_trees(std::size_t vertices);

struct CycleTreeResult {
  std::size_t cycle_size = 0;
  std::size_t max_tree_vertices = 0;
  std::size_t trees_examined = 0;
  std::uint64_t maps_examined = 0;
  /// nullopt when no injective map exists (every map collapses a pair).
  std::optional<Rational> min_distortion;
  Rational lower_bound;  // m/3 − 1
  bool bound_holds = true;
};

/// Exhaustive search over unit-weight trees with ≤ max_tree_vertices vertices
/// and all injective maps of C_m into them (non-injective maps have infinite
/// distortion). Throws cap_exceeded if more than `map_budget` maps are needed.
CycleTreeResult cycle_tree_lower_oracle(std::size_t cycle_size, std::size_t max_tree_vertices,
                                        std::uint64_t map_budget = 2'000'000'000ULL);

}  // namespace testspace
