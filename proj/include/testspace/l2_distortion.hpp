#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "testspace/embeddings.hpp"
#include "testspace/metric_core.hpp"

namespace testspace {

/// A PSD Gram matrix Q with d² ≤ Q_ii + Q_jj − 2Q_ij ≤ c²·d² up to the
/// recorded residuals. Q lives on the space rescaled so that its largest
/// distance is 1 (`scale` is that factor).
struct GramCertificate {
  Eigen::MatrixXd gram;
  double c = 1.0;
  double scale = 1.0;
  /// Most negative eigenvalue of Q (0 when PSD), and the largest relative
  /// pair-constraint violation.
  double psd_residual = 0.0;
  double constraint_residual = 0.0;
};

enum class SdpStatus { feasible, infeasible, undecided };

const char* to_string(SdpStatus status);

struct SdpOptions {
  std::size_t max_iterations = 50'000;
  /// Relative decrease of the pair violation over `stall_window` iterations
  /// below which the iteration is considered stalled (treated as infeasible).
  double stall_threshold = 1e-9;
  std::size_t stall_window = 2'000;
  /// Iterations between dual-certificate evaluations.
  std::size_t certificate_interval = 10;
};

struct SdpResult {
  SdpStatus status = SdpStatus::undecided;
  std::size_t iterations = 0;
  double constraint_residual = 0.0;
  std::optional<GramCertificate> certificate;
  /// Best lower bound on the optimal distortion of the whole space obtained
  /// from pair weights α, β ≥ 0 with Σ(α−β)A_ij ⪰ 0:
  /// c*² ≥ Σβd² / Σαd². Infeasibility is certified when it reaches c.
  double dual_lower_bound = 1.0;
  bool certified = false;  // infeasible status backed by dual_lower_bound
  /// Final iterate (usable as a warm start).
  Eigen::MatrixXd last_iterate;
};

/// Alternating projection between the centered PSD cone (eigenvalue clipping)
/// and the per-pair slabs d² ≤ ⟨A_ij, Q⟩ ≤ c²d². `tol` is the accepted relative
/// violation of the pair constraints. The slab corrections of each sweep are
/// turned into dual weights and checked for an infeasibility certificate.
SdpResult sdp_feasible(const MetricSpace& space, double c, double tol, const SdpOptions& options = {},
                       const Eigen::MatrixXd* warm_start = nullptr);

/// Rows of V·sqrt(Λ₊) from the eigendecomposition of the certificate, scaled
/// back to the original distances, as an ℓ₂ embedding with exact coordinates.
Embedding embedding_from_gram(const MetricSpace& space, const GramCertificate& certificate);

/// interior_point: primal barrier path-following on the squared distances,
/// stopped when the primal distortion and the dual certificate are within tol.
/// bisection: bisection over sdp_feasible.
enum class L2Method { interior_point, bisection };

const char* to_string(L2Method method);
L2Method parse_l2_method(std::string_view name);

struct L2Options {
  L2Method method = L2Method::interior_point;
  /// Restrict the interior-point variables to the pair classes of
  /// `pair_classes`, falling back to one variable per pair if the bracket
  /// does not close.
  bool reduce_symmetry = true;
  std::size_t max_newton_steps = 3000;
  SdpOptions sdp;  // bisection probes
};

struct L2MinResult {
  double c_star = 1.0;  // distortion of the certified primal solution
  double lower = 1.0;   // certified lower bound
  double upper = 1.0;   // == c_star
  L2Method method = L2Method::interior_point;
  std::size_t probes = 0;      // bisection probes
  std::size_t iterations = 0;  // projection sweeps or Newton steps
  std::size_t variables = 0;   // interior point: pair classes used
  bool reduced = false;
  GramCertificate certificate;
  Embedding embedding;
  DistortionReport embedding_distortion;
};

/// Smallest c with a Euclidean embedding of distortion c, bracketed to
/// upper − lower ≤ tol. The bracket starts at [1, distortion of the Fréchet
/// vectors read in ℓ₂]. Throws Error(undecided) when it cannot be closed.
L2MinResult min_distortion_l2(const MetricSpace& space, double tol = 1e-4, const L2Options& options = {});

/// Pair (i<j, row-major) → class id. Classes come from color refinement of
/// the points by their distance profiles; pairs share a class when their
/// endpoint colors and distance agree. Every isometry of the space maps
/// pairs into their own class.
std::vector<std::size_t> pair_classes(const MetricSpace& space);

// ------------------------------------------------------------ Kloeckner

/// δ_X(ε) ≥ c·ε^q.
struct ConvexityModulus {
  double c = 0.125;
  double q = 2.0;
};

inline ConvexityModulus euclidean_modulus() { return {0.125, 2.0}; }

/// Multiplies by the exact (rounded-up for ℓ₂) co-Lipschitz constant so that
/// d ≤ ‖Δf‖ holds exactly.
Embedding normalize_noncontractive(const Embedding& embedding);

struct ForkSelection {
  int input_depth = 0;
  int output_depth = 0;
  /// Output heap index → input heap index.
  std::vector<std::size_t> selected;
  /// Embedding of T_{⌊n/2⌋}; vectors are the selected input vectors halved.
  Embedding embedding;
  DistortionReport input_distortion;
  DistortionReport output_distortion;
  /// d_{T_n}(selected a, selected b) == 2·d_{T_{⌊n/2⌋}}(a, b) for all pairs.
  bool structure_exact = false;
  /// D = Lipschitz constant of the input.
  double lipschitz = 1.0;
  /// min over selection forks of D − ‖f(v) − f(selected grandchild)‖/2; the
  /// fork lemma bounds it below by K/D^{q−1}.
  double improvement = 0.0;
};

/// Daughter = child 0, son = child 1; among each child's two children the one
/// whose image is closest to the image of the current selected vertex is kept
/// (ties → smaller label). Requires a non-contractive embedding of T_n (heap
/// order), n ≥ 2.
ForkSelection fork_select(int depth, const Embedding& embedding);

struct ForkGapParams {
  double distortion = 1.0;  // D
  double q = 2.0;
  /// inf over D-Lipschitz non-contractive forks in ℝ³ of 2D − min(‖x₂‖, ‖x₂′‖).
  double gap = 0.0;
  /// K = gap · D^{q−1} / 2, so that D − K/D^{q−1} = D − gap/2.
  double constant = 0.0;
  bool converged = true;
  /// False for D < 2/√3: three points pairwise ≥ 2 apart cannot fit in a ball
  /// of radius D around x₁, so no fork exists and gap = constant = +∞.
  bool forks_exist = true;
  std::string warning;
};

ForkGapParams fork_gap_estimate(double distortion, double q, const ConvexityModulus& modulus);

struct KloecknerBound {
  double bound = 1.0;
  int iterations = 0;  // ⌊log₂ n⌋
  double c1 = 0.0;     // (K/2)^{1/q}
  /// bound ≥ c1·(log₂ n)^{1/q}.
  bool c1_bound_holds = true;
};

/// Least D ≥ 1 with D − ⌊log₂ n⌋·K/D^{q−1} ≥ 1.
KloecknerBound kloeckner_bound(int depth, double constant, double q);

}  // namespace testspace
