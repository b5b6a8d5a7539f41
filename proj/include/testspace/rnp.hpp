#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "testspace/embeddings.hpp"
#include "testspace/gauge.hpp"
#include "testspace/metric_core.hpp"
#include "testspace/rational.hpp"

namespace testspace {

// ---------------------------------------------------------------------------
// δ-trees and δ-bushes in ℝ^(2^n) with the normalized ℓ₁ norm.

/// Nodes in heap order (node 0 is x_∅, children of i are 2i+1 and 2i+2).
/// Atom values are integers; the norm is Σ|v_a| / 2^depth.
struct DeltaTree {
  int depth = 0;
  std::vector<std::vector<std::int64_t>> nodes;
  Rational delta = 1;

  std::size_t dim() const noexcept { return std::size_t{1} << depth; }
  Rational atom_weight() const { return pow2(-depth); }
  RationalVector vector(std::size_t node) const;
};

/// x_∅ ≡ 1 and x_{τε} = x_τ·(1 + (2ε−1)·r_{|τ|+1}), where r_k(a) is +1 or −1
/// according to bit depth−k of the atom index a. Throws cap_exceeded past depth_cap.
DeltaTree rademacher_tree(int depth, int depth_cap = 12);

struct TreeReport {
  bool midpoints_exact = true;
  bool unit_norms = true;
  Rational min_separation;
  Rational max_separation;
  std::optional<std::size_t> first_failure;  // heap index
  bool ok() const { return midpoints_exact && unit_norms && min_separation >= 1; }
};

TreeReport verify_tree(const DeltaTree& tree);

/// levels[n][j] = z_{n,j}; parent[n][j] = k means j ∈ A^n_k; weights[n][j] = λ_{n,j}.
struct DeltaBush {
  std::size_t dim = 0;
  Rational atom_weight = 1;
  std::vector<std::vector<RationalVector>> levels;
  std::vector<std::vector<std::size_t>> parent;
  std::vector<std::vector<Rational>> weights;
  Rational delta = 1;

  std::vector<std::size_t> children(std::size_t level, std::size_t index) const;
  Rational norm(const RationalVector& v) const;
};

struct BushReport {
  bool convex_combinations_exact = true;
  bool weights_valid = true;
  Rational min_separation;
  Rational sup_norm;
  /// (level, index) of the first failing node.
  std::optional<std::pair<std::size_t, std::size_t>> first_failure;
  bool ok(const Rational& delta) const {
    return convex_combinations_exact && weights_valid && min_separation >= delta;
  }
};

BushReport verify_bush(const DeltaBush& bush);

/// Blocks are child pairs with λ = ½. Throws validation for an invalid tree.
DeltaBush tree_to_bush(const DeltaTree& tree);

/// Gauge whose generators are all bush vectors.
GaugeNorm bush_gauge(const DeltaBush& bush);

// ---------------------------------------------------------------------------
// Broken lines joining 0 and x_{0,1}.

/// coefficient · z_{level,index}
struct LineTerm {
  Rational coefficient;
  std::size_t level = 0;
  std::size_t index = 0;
  bool operator==(const LineTerm&) const = default;
};

struct BrokenLine {
  std::string label;
  std::vector<LineTerm> terms;
  std::vector<RationalVector> vertices;  // prefix sums, starting at 0
  Rational gauge_sum;                    // Σ gauge(z_i)
};

struct LineDeviation {
  std::string label;  // τ; compares τ0 with τ1
  Rational deviation;
  bool meets_bound = false;
};

struct BrokenLineFamily {
  std::vector<BrokenLine> lines;  // labels in breadth-first order
  Rational gauge_delta;           // min gauge(z_{n,j} − z_{n−1,k})
  Rational endpoint_gauge;        // gauge(x_{0,1})
  std::vector<LineDeviation> deviations;
  bool all_geodesic = true;
  bool vertex_monotone = true;
  std::optional<std::pair<std::string, std::string>> monotonicity_failure;
};

/// Preliminary step: each term c·z_{i,k} becomes the terms c·λ_{i+1,j}·y_{i+1,j}
/// over j ∈ A^{i+1}_k, with y_{i+1,j} = ½(z_{i,k} + z_{i+1,j}). Label bit 0 then
/// writes c·y as (c/2·z_{i,k}, c/2·z_{i+1,j}); bit 1 writes (c/2·z_{i+1,j}, c/2·z_{i,k}).
/// Every bush vector must satisfy atom_weight·Σ z = 1, else validation error.
BrokenLineFamily broken_line_family(const DeltaBush& bush, int depth);

// ---------------------------------------------------------------------------
// Thick families of geodesics on graphs with a common breakpoint grid.

struct GeodesicFamily {
  WeightedGraph graph;
  MetricSpace space;
  std::size_t source = 0;
  std::size_t sink = 0;
  /// Members share breakpoints grid[0..N]; member i visits members[i][k] at grid[k].
  std::vector<Rational> grid;
  std::vector<std::vector<std::size_t>> members;
  /// Control points may sit at grid indices that are multiples of this stride.
  std::size_t control_stride = 1;

  std::size_t grid_size() const noexcept { return grid.size(); }
  std::optional<std::size_t> find(const std::vector<std::size_t>& path) const;
};

/// Geodesics given as GeodesicPath objects; all must share breakpoints.
GeodesicFamily make_geodesic_family(WeightedGraph graph, std::size_t source, std::size_t sink,
                                    std::vector<GeodesicPath> paths, std::size_t control_stride = 1);

/// All source–sink geodesics of weighted D_n, control points on the D_{n−1} grid.
GeodesicFamily diamond_geodesic_family(int level, std::size_t geodesic_cap = 100'000);

/// A deviating geodesic for member g and a control set. Common parameters q
/// are all shared grid points; in each gap the deviation parameter s is the
/// grid point of largest d(g(s), g̃(s)), or the gap midpoint (deviation 0)
/// when the gap has no interior grid point.
struct ThicknessResponse {
  std::size_t member = 0;
  std::vector<std::size_t> common;           // grid indices q_0 < … < q_m
  std::vector<Rational> deviation_params;    // s_1 … s_m
  std::vector<std::optional<std::size_t>> deviation_index;  // grid index of s_i if on the grid
  std::vector<Rational> deviations;          // d(g(s_i), g̃(s_i))
  Rational total;
};

/// Maximizes the total deviation over members through the control points; ties
/// go to fewer common points, then the smaller member index. Throws validation
/// for control indices off the control grid.
ThicknessResponse thickness_response(const GeodesicFamily& family, std::size_t member,
                                     const std::vector<std::size_t>& controls);

/// Condition (iv): every recombination of g and g̃ along the common points is a member.
bool recombinations_in_family(const GeodesicFamily& family, std::size_t member, const ThicknessResponse& response);

struct ThicknessResult {
  Rational alpha;
  std::size_t configurations = 0;
  bool complete = true;
  std::size_t witness_member = 0;
  std::vector<std::size_t> witness_controls;
};

/// min over members and control sets of size ≤ control_budget of the response
/// total. Stops with complete = false after evaluation_cap responses.
ThicknessResult thickness_alpha(const GeodesicFamily& family, std::size_t control_budget,
                                std::size_t evaluation_cap = 10'000'000);

// ---------------------------------------------------------------------------
// Martingales from embeddings.

/// M is piecewise constant on (breakpoints[i], breakpoints[i+1]] with values[i].
struct MartingaleLevel {
  std::vector<Rational> breakpoints;
  std::vector<RationalVector> values;
};

/// ℓ₁-valued martingale on (0,1]; embeddings passed in must target ℓ₁.
struct Martingale {
  std::size_t dim = 0;
  std::vector<MartingaleLevel> levels;
  /// Lower bound claimed for ‖M_{2k} − M_{2k−1}‖_{L₁}, k ≥ 1.
  std::optional<Rational> even_difference_bound;
};

struct MartingaleReport {
  bool refines = true;
  bool conditional_expectation = true;
  bool bounded = true;
  bool differences_meet_bound = true;
  std::vector<Rational> differences;  // ‖M_k − M_{k−1}‖_{L₁}, k ≥ 1
  Rational sup_norm;
  /// (level, interval) of the first violation found.
  std::optional<std::pair<std::size_t, std::size_t>> first_violation;
  std::string violation;
  bool ok() const { return refines && conditional_expectation && bounded && differences_meet_bound; }
};

MartingaleReport martingale_check(const Martingale& martingale);

/// Height coordinate plus one signed coordinate per quadrilateral Q of D_n:
/// ±min(d(u_Q,x), d(x,v_Q)) on the two sides of Q, 0 elsewhere. ℓ₁ target,
/// unscaled.
Embedding diamond_cut_embedding(int level);

struct QuadrupleCheck {
  Rational lhs_z;        // ‖(f(w_i)−f(z))/d(w_i,z) − (f(z)−f(w_{i−1}))/d(z,w_{i−1})‖
  Rational lhs_z_tilde;  // same for z̃
  bool picked_tilde = false;
  Rational branch_bound;  // ℓ/2 · d(z,z̃) · (1/d(w_i,z′) + 1/d(z′,w_{i−1}))
  bool branch_holds = false;
  Rational interval_integral;  // A‖x−z‖ + B‖y−z‖
  Rational interval_bound;     // ½‖x−y‖·min(A,B)
  bool interval_holds = false;
};

struct MartingaleStep {
  std::size_t geodesic = 0;
  std::vector<std::size_t> controls;
  ThicknessResponse response;
  std::vector<QuadrupleCheck> quadruples;
  std::size_t next_geodesic = 0;
};

struct MartingaleConstruction {
  Martingale martingale;
  Rational ell;
  Rational alpha;
  std::vector<MartingaleStep> steps;
  MartingaleReport report;
};

/// V(0) = {u, v}; each double step asks the oracle for a deviation past the
/// current points, then inserts z′ = z or z̃ in every gap with a grid deviation
/// point, z̃ on ties. The embedding is rescaled to Lipschitz constant 1 so that
/// ℓ = 1/distortion. Throws validation if the oracle finds no deviation.
MartingaleConstruction martingale_from_embedding(const GeodesicFamily& family, const Embedding& embedding,
                                                 std::size_t steps, const Rational& alpha);

}  // namespace testspace
