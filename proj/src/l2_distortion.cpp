#include "testspace/l2_distortion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <tuple>
#include <random>

#include <Eigen/Eigenvalues>

#include "testspace/error.hpp"
#include "testspace/generators.hpp"

namespace testspace {

const char* to_string(SdpStatus status) {
  switch (status) {
    case SdpStatus::feasible: return "feasible";
    case SdpStatus::infeasible: return "infeasible";
    case SdpStatus::undecided: return "undecided";
  }
  return "unknown";
}

namespace {

struct ScaledSquares {
  double scale = 1.0;
  Eigen::MatrixXd squared;  // (scale·d)²
};

ScaledSquares scaled_squares(const MetricSpace& space) {
  const std::size_t n = space.size();
  ScaledSquares out;
  Rational largest = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) largest = std::max(largest, space.dist(i, j));
  }
  if (largest <= 0) throw Error(ErrorKind::validation, "space needs two distinct points");
  out.scale = 1.0 / to_double(largest);
  out.squared = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = to_double(space.dist(i, j)) * out.scale;
      out.squared(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d * d;
    }
  }
  return out;
}

/// Largest relative violation of d² ≤ A(Q) ≤ c²d² over all pairs.
double pair_violation(const Eigen::MatrixXd& q, const Eigen::MatrixXd& squared, double c2) {
  const Eigen::Index n = q.rows();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double value = q(i, i) + q(j, j) - 2.0 * q(i, j);
      const double lo = squared(i, j);
      const double hi = c2 * lo;
      const double excess = std::max(lo - value, value - hi);
      if (excess > 0) worst = std::max(worst, excess / lo);
    }
  }
  return worst;
}

/// min and max of ⟨A_ij, Q⟩ / d_ij² over pairs.
std::pair<double, double> ratio_range(const Eigen::MatrixXd& q, const Eigen::MatrixXd& squared) {
  const Eigen::Index n = q.rows();
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double r = (q(i, i) + q(j, j) - 2.0 * q(i, j)) / squared(i, j);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  }
  return {lo, hi};
}

/// One Kaczmarz sweep of exact slab projections; ‖A_ij‖_F² = 4. The applied
/// corrections are accumulated into `weight` (positive: upper bound active,
/// negative: lower bound active).
void project_slabs(Eigen::MatrixXd& q, const Eigen::MatrixXd& squared, double c2, Eigen::MatrixXd& weight) {
  const Eigen::Index n = q.rows();
  weight.setZero();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double value = q(i, i) + q(j, j) - 2.0 * q(i, j);
      const double lo = squared(i, j);
      const double hi = c2 * lo;
      double delta = 0.0;
      if (value < lo) {
        delta = lo - value;
      } else if (value > hi) {
        delta = hi - value;
      } else {
        continue;
      }
      const double step = delta / 4.0;
      q(i, i) += step;
      q(j, j) += step;
      q(i, j) -= step;
      q(j, i) -= step;
      weight(i, j) -= step;
    }
  }
}

/// Projection onto {Q ⪰ 0, Q·1 = 0}: center, then clip eigenvalues.
void project_centered_psd(Eigen::MatrixXd& q) {
  const Eigen::VectorXd row_mean = q.rowwise().mean();
  const double total_mean = row_mean.mean();
  q.rowwise() -= row_mean.transpose();
  q.colwise() -= row_mean;
  q.array() += total_mean;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(q);
  const Eigen::VectorXd values = solver.eigenvalues().cwiseMax(0.0);
  q = solver.eigenvectors() * values.asDiagonal() * solver.eigenvectors().transpose();
  q = 0.5 * (q + q.transpose());
}

/// Lower bound on the optimal distortion from pair weights w (upper triangle):
/// α = max(w, 0), β = max(−w, 0), lifted uniformly until Σ(α−β)A_ij ⪰ 0.
double dual_bound(const Eigen::MatrixXd& weight, const Eigen::MatrixXd& squared) {
  const Eigen::Index n = weight.rows();
  Eigen::MatrixXd laplacian = Eigen::MatrixXd::Zero(n, n);
  double alpha_sum = 0.0;
  double beta_sum = 0.0;
  double scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double w = weight(i, j);
      if (w == 0.0) continue;
      laplacian(i, i) += w;
      laplacian(j, j) += w;
      laplacian(i, j) -= w;
      laplacian(j, i) -= w;
      if (w > 0) alpha_sum += w * squared(i, j);
      else beta_sum -= w * squared(i, j);
      scale = std::max(scale, std::abs(w));
    }
  }
  if (beta_sum <= 0.0) return 1.0;
  // Lift the all-ones direction out of the way; Σ_{i<j} A_ij = nI − 11ᵀ has
  // eigenvalue n on the complement.
  const double lift = 2.0 * std::max(1.0, laplacian.cwiseAbs().rowwise().sum().maxCoeff());
  laplacian.array() += lift / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian, Eigen::EigenvaluesOnly);
  const double smallest = solver.eigenvalues().minCoeff();
  const double margin = 1e-10 * scale * static_cast<double>(n);
  const double shift = (std::max(0.0, -smallest) + margin) / static_cast<double>(n);
  double lifted = alpha_sum;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) lifted += shift * squared(i, j);
  }
  if (lifted <= 0.0) return 1.0;
  return std::max(1.0, std::sqrt(beta_sum / lifted));
}

}  // namespace

SdpResult sdp_feasible(const MetricSpace& space, double c, double tol, const SdpOptions& options,
                       const Eigen::MatrixXd* warm_start) {
  if (!(c >= 1.0)) throw Error(ErrorKind::validation, "distortion bound c must be >= 1");
  if (!(tol > 0.0)) throw Error(ErrorKind::validation, "tolerance must be positive");
  const std::size_t n = space.size();
  if (n < 2) throw Error(ErrorKind::validation, "space needs at least two points");
  const ScaledSquares data = scaled_squares(space);
  const double c2 = c * c;
  const auto dim = static_cast<Eigen::Index>(n);

  Eigen::MatrixXd q = (warm_start && warm_start->rows() == dim) ? *warm_start : Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd weight(dim, dim);
  Eigen::MatrixXd weight_sum = Eigen::MatrixXd::Zero(dim, dim);
  SdpResult result;
  const std::size_t interval = std::max<std::size_t>(1, options.certificate_interval);
  double window_start_violation = std::numeric_limits<double>::infinity();
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    project_centered_psd(q);
    const double violation = pair_violation(q, data.squared, c2);
    result.iterations = it;
    result.constraint_residual = violation;
    const auto [lo_ratio, hi_ratio] = ratio_range(q, data.squared);
    if (lo_ratio > 0.0 && std::sqrt(hi_ratio / lo_ratio) <= c * (1.0 + tol)) {
      GramCertificate cert;
      cert.gram = q / lo_ratio;
      cert.c = c;
      cert.scale = data.scale;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> check(cert.gram, Eigen::EigenvaluesOnly);
      cert.psd_residual = std::min(0.0, check.eigenvalues().minCoeff());
      cert.constraint_residual = pair_violation(cert.gram, data.squared, c2);
      result.status = SdpStatus::feasible;
      result.constraint_residual = cert.constraint_residual;
      result.certificate = std::move(cert);
      result.last_iterate = std::move(q);
      return result;
    }
    project_slabs(q, data.squared, c2, weight);
    weight_sum += weight;
    if (it % interval == 0) {
      result.dual_lower_bound = std::max(
          {result.dual_lower_bound, dual_bound(weight, data.squared), dual_bound(weight_sum, data.squared)});
      if (result.dual_lower_bound >= c) {
        result.status = SdpStatus::infeasible;
        result.certified = true;
        result.last_iterate = std::move(q);
        return result;
      }
    }
    if (it % options.stall_window == 0) {
      if (violation > window_start_violation * (1.0 - options.stall_threshold)) {
        result.status = SdpStatus::infeasible;
        result.last_iterate = std::move(q);
        return result;
      }
      window_start_violation = violation;
    }
  }
  result.status = SdpStatus::undecided;
  result.last_iterate = std::move(q);
  return result;
}

Embedding embedding_from_gram(const MetricSpace& space, const GramCertificate& certificate) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(certificate.gram);
  const Eigen::VectorXd& values = solver.eigenvalues();
  const Eigen::Index n = certificate.gram.rows();
  std::vector<Eigen::Index> kept;
  const double cutoff = 1e-12 * std::max(1.0, values.cwiseAbs().maxCoeff());
  for (Eigen::Index k = n; k-- > 0;) {
    if (values(k) > cutoff) kept.push_back(k);
  }
  Embedding out{space, NormedTarget::l2(std::max<std::size_t>(kept.size(), 1)), {}};
  out.vectors.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    RationalVector coords(kept.size());
    for (std::size_t a = 0; a < kept.size(); ++a) {
      const double x = solver.eigenvectors()(i, kept[a]) * std::sqrt(values(kept[a])) / certificate.scale;
      coords[a] = from_double(x);
    }
    out.vectors[static_cast<std::size_t>(i)] = SparseVector::from_dense(coords);
  }
  return out;
}

namespace {

/// Exact Gram certificate of an explicit ℓ₂ embedding, rescaled to be
/// non-contractive; used for the top of the bisection bracket.
GramCertificate certificate_from_embedding(const MetricSpace& space, const Embedding& embedding, double c) {
  const std::size_t n = space.size();
  const DistortionReport report = distortion(embedding);
  const double colip = report.colip();
  const ScaledSquares data = scaled_squares(space);
  Eigen::MatrixXd coords = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                 static_cast<Eigen::Index>(embedding.target.dim()));
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [k, x] : embedding.vectors[i].entries) {
      coords(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = to_double(x) * colip * data.scale;
    }
  }
  GramCertificate cert;
  cert.gram = coords * coords.transpose();
  cert.c = c;
  cert.scale = data.scale;
  cert.constraint_residual = pair_violation(cert.gram, data.squared, c * c);
  return cert;
}

L2MinResult bisection_l2(const MetricSpace& space, double tol, const SdpOptions& options) {
  Embedding frechet = frechet_embed(space);
  frechet.target = NormedTarget::l2(frechet.target.dim());
  const double fallback = distortion(frechet).distortion();
  // A certificate at c has distortion ≤ c·(1 + feasibility_tol) ≤ c + tol/2.
  const double feasibility_tol = tol / (2.0 * std::max(1.0, fallback));

  L2MinResult result;
  result.method = L2Method::bisection;
  result.lower = 1.0;
  result.upper = std::max(1.0, fallback * (1.0 + feasibility_tol));
  result.certificate = certificate_from_embedding(space, frechet, result.upper);
  Eigen::MatrixXd warm = result.certificate.gram;

  auto probe = [&](double c) {
    SdpResult r = sdp_feasible(space, c, feasibility_tol, options, &warm);
    ++result.probes;
    result.iterations += r.iterations;
    if (r.status == SdpStatus::undecided) {
      SdpOptions longer = options;
      longer.max_iterations *= 4;
      r = sdp_feasible(space, c, feasibility_tol, longer, &r.last_iterate);
      ++result.probes;
      result.iterations += r.iterations;
    }
    return r;
  };

  auto accept = [&](SdpResult& r, double c) {
    result.upper = c;
    result.certificate = std::move(*r.certificate);
    warm = result.certificate.gram;
  };

  SdpResult at_one = probe(1.0);
  if (at_one.status == SdpStatus::feasible) {
    accept(at_one, 1.0);
  } else {
    result.lower = std::min(result.upper, std::max(result.lower, at_one.dual_lower_bound));
    while (result.upper - result.lower > tol) {
      const double mid = 0.5 * (result.lower + result.upper);
      SdpResult r = probe(mid);
      if (r.status == SdpStatus::feasible) {
        accept(r, mid);
      } else if (r.status == SdpStatus::infeasible) {
        result.lower = std::min(result.upper, std::max(mid, r.dual_lower_bound));
      } else {
        throw Error(ErrorKind::undecided, "SDP undecided at c = " + format_double(mid) + "; bracket [" +
                                              format_double(result.lower) + ", " + format_double(result.upper) + "]");
      }
    }
  }
  result.c_star = result.upper;
  result.embedding = embedding_from_gram(space, result.certificate);
  result.embedding_distortion = distortion(result.embedding);
  return result;
}

constexpr std::size_t kInteriorPointVariableCap = 4'000;

struct PairData {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  Eigen::VectorXd squared;  // scaled d²
};

PairData pair_data(const ScaledSquares& data) {
  const Eigen::Index n = data.squared.rows();
  PairData out;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) out.pairs.emplace_back(i, j);
  }
  out.squared.resize(static_cast<Eigen::Index>(out.pairs.size()));
  for (std::size_t p = 0; p < out.pairs.size(); ++p) {
    out.squared(static_cast<Eigen::Index>(p)) = data.squared(out.pairs[p].first, out.pairs[p].second);
  }
  return out;
}

/// −½·J·D·J for the squared-distance vector `delta`.
Eigen::MatrixXd centered_gram(const PairData& pd, const Eigen::VectorXd& delta, Eigen::Index n) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t p = 0; p < pd.pairs.size(); ++p) {
    const auto [i, j] = pd.pairs[p];
    d(i, j) = d(j, i) = delta(static_cast<Eigen::Index>(p));
  }
  const Eigen::VectorXd mean = d.rowwise().mean();
  const double total = mean.mean();
  Eigen::MatrixXd g = d;
  g.rowwise() -= mean.transpose();
  g.colwise() -= mean;
  g.array() += total;
  return -0.5 * g;
}

struct BarrierPoint {
  Eigen::VectorXd delta;
  double t = 1.0;
};

/// t/μ − log det(G + 11ᵀ/n) − Σ log(Δ − d²) − Σ log(t·d² − Δ); nullopt
/// outside the domain.
std::optional<double> barrier_value(const PairData& pd, const BarrierPoint& x, double mu, Eigen::Index n) {
  double value = x.t / mu;
  for (Eigen::Index p = 0; p < x.delta.size(); ++p) {
    const double lo = x.delta(p) - pd.squared(p);
    const double hi = x.t * pd.squared(p) - x.delta(p);
    if (!(lo > 0.0) || !(hi > 0.0)) return std::nullopt;
    value -= std::log(lo) + std::log(hi);
  }
  Eigen::MatrixXd g = centered_gram(pd, x.delta, n);
  g.array() += 1.0 / static_cast<double>(n);
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(diag(i) > 0.0)) return std::nullopt;
    value -= 2.0 * std::log(diag(i));
  }
  return value;
}

double primal_distortion(const PairData& pd, const Eigen::VectorXd& delta) {
  const Eigen::ArrayXd ratio = delta.array() / pd.squared.array();
  return std::sqrt(ratio.maxCoeff() / ratio.minCoeff());
}

struct InteriorPointOutcome {
  bool closed = false;
  double upper = std::numeric_limits<double>::infinity();
  double lower = 1.0;
  Eigen::VectorXd best_delta;
  std::size_t steps = 0;
};

InteriorPointOutcome interior_point(const ScaledSquares& data, const PairData& pd,
                                    const std::vector<std::size_t>& classes, std::size_t class_count, double tol,
                                    std::size_t max_steps) {
  const Eigen::Index n = data.squared.rows();
  const auto m = static_cast<Eigen::Index>(pd.pairs.size());
  const auto k = static_cast<Eigen::Index>(class_count);
  InteriorPointOutcome out;

  // Start: clip the centered Gram of d² to the PSD cone. Removing a PSD
  // negative part only increases squared distances, so Δ₊ ≥ d²; a constant
  // b·(11ᵀ − I) added to Δ₊ makes the point strictly interior.
  BarrierPoint x;
  {
    Eigen::MatrixXd g0 = centered_gram(pd, pd.squared, n);
    project_centered_psd(g0);
    x.delta.resize(m);
    for (Eigen::Index p = 0; p < m; ++p) {
      const auto [i, j] = pd.pairs[static_cast<std::size_t>(p)];
      x.delta(p) = std::max(g0(i, i) + g0(j, j) - 2.0 * g0(i, j), pd.squared(p));
    }
    x.delta.array() += 0.05 * pd.squared.minCoeff();
    x.t = 1.1 * (x.delta.array() / pd.squared.array()).maxCoeff();
  }
  out.best_delta = x.delta;
  out.upper = primal_distortion(pd, x.delta);

  const bool reduced = k < m;
  std::vector<std::vector<Eigen::Index>> members(class_count);
  for (Eigen::Index p = 0; p < m; ++p) members[classes[static_cast<std::size_t>(p)]].push_back(p);

  Eigen::MatrixXd weight = Eigen::MatrixXd::Zero(n, n);
  double mu = 1.0;
  while (out.steps < max_steps) {
    // Centering.
    for (int inner = 0; inner < 400 && out.steps < max_steps; ++inner) {
      Eigen::MatrixXd g = centered_gram(pd, x.delta, n);
      g.array() += 1.0 / static_cast<double>(n);
      Eigen::MatrixXd w = g.llt().solve(Eigen::MatrixXd::Identity(n, n));
      w.array() -= 1.0 / static_cast<double>(n);

      Eigen::VectorXd grad = Eigen::VectorXd::Zero(k + 1);
      Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(k + 1, k + 1);
      grad(k) = 1.0 / mu;
      for (Eigen::Index p = 0; p < m; ++p) {
        const auto [i, j] = pd.pairs[static_cast<std::size_t>(p)];
        const auto c = static_cast<Eigen::Index>(classes[static_cast<std::size_t>(p)]);
        const double lo = x.delta(p) - pd.squared(p);
        const double hi = x.t * pd.squared(p) - x.delta(p);
        const double d2 = pd.squared(p);
        grad(c) += w(i, j) - 1.0 / lo + 1.0 / hi;
        grad(k) -= d2 / hi;
        hess(c, c) += 1.0 / (lo * lo) + 1.0 / (hi * hi);
        hess(c, k) -= d2 / (hi * hi);
        hess(k, k) += d2 * d2 / (hi * hi);
        if (reduced) continue;
        for (Eigen::Index q = p; q < m; ++q) {
          const auto [a, b] = pd.pairs[static_cast<std::size_t>(q)];
          const double h = 0.5 * (w(i, a) * w(j, b) + w(i, b) * w(j, a));
          hess(p, q) += h;
          if (q != p) hess(q, p) += h;
        }
      }
      if (reduced) {
        // Σ_{p∈c, q∈c'} ½(W_ia W_jb + W_ib W_ja) = ½ Σ_{q∈c'} (W X_c W)_q with
        // X_c the symmetric indicator of class c.
        for (Eigen::Index c = 0; c < k; ++c) {
          Eigen::MatrixXd wx = Eigen::MatrixXd::Zero(n, n);
          for (const Eigen::Index p : members[static_cast<std::size_t>(c)]) {
            const auto [i, j] = pd.pairs[static_cast<std::size_t>(p)];
            wx.col(j) += w.col(i);
            wx.col(i) += w.col(j);
          }
          const Eigen::MatrixXd y = wx * w;
          for (Eigen::Index q = 0; q < m; ++q) {
            const auto [a, b] = pd.pairs[static_cast<std::size_t>(q)];
            hess(c, static_cast<Eigen::Index>(classes[static_cast<std::size_t>(q)])) += 0.5 * y(a, b);
          }
        }
      }
      for (Eigen::Index c = 0; c < k; ++c) hess(k, c) = hess(c, k);

      Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
      Eigen::VectorXd step = ldlt.solve(-grad);
      ++out.steps;
      const double decrement = -grad.dot(step);
      if (!(decrement >= 0.0) || !step.allFinite()) break;
      if (decrement < 1e-6) break;

      Eigen::VectorXd ddelta(m);
      for (Eigen::Index p = 0; p < m; ++p) ddelta(p) = step(static_cast<Eigen::Index>(classes[static_cast<std::size_t>(p)]));
      double alpha = 1.0;
      for (Eigen::Index p = 0; p < m; ++p) {
        const double lo = x.delta(p) - pd.squared(p);
        const double hi = x.t * pd.squared(p) - x.delta(p);
        const double dlo = ddelta(p);
        const double dhi = step(k) * pd.squared(p) - ddelta(p);
        if (dlo < 0) alpha = std::min(alpha, -0.99 * lo / dlo);
        if (dhi < 0) alpha = std::min(alpha, -0.99 * hi / dhi);
      }
      const double current = *barrier_value(pd, x, mu, n);
      bool moved = false;
      for (int backtrack = 0; backtrack < 60; ++backtrack) {
        BarrierPoint trial{x.delta + alpha * ddelta, x.t + alpha * step(k)};
        const auto value = barrier_value(pd, trial, mu, n);
        if (value && *value <= current - 0.25 * alpha * decrement) {
          x = std::move(trial);
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved) break;
      if (decrement < 1e-2) break;
    }

    const double primal = primal_distortion(pd, x.delta);
    if (primal < out.upper) {
      out.upper = primal;
      out.best_delta = x.delta;
    }
    weight.setZero();
    for (Eigen::Index p = 0; p < m; ++p) {
      const auto [i, j] = pd.pairs[static_cast<std::size_t>(p)];
      const double lo = x.delta(p) - pd.squared(p);
      const double hi = x.t * pd.squared(p) - x.delta(p);
      weight(i, j) = mu / hi - mu / lo;
    }
    out.lower = std::max(out.lower, dual_bound(weight, data.squared));
    if (out.upper - out.lower <= tol) {
      out.closed = true;
      return out;
    }
    if (mu < 1e-15) break;
    mu /= 4.0;
  }
  return out;
}

L2MinResult interior_point_l2(const MetricSpace& space, double tol, const L2Options& options) {
  const ScaledSquares data = scaled_squares(space);
  const PairData pd = pair_data(data);
  const Eigen::Index n = data.squared.rows();
  // A certificate normalized to the lower constraints has distortion equal to
  // the primal value, so the bracket only needs tol.
  L2MinResult result;
  result.method = L2Method::interior_point;

  auto attempt = [&](bool reduce) {
    std::vector<std::size_t> classes;
    std::size_t count = 0;
    if (reduce) {
      classes = pair_classes(space);
      for (auto c : classes) count = std::max(count, c + 1);
    } else {
      classes.resize(pd.pairs.size());
      for (std::size_t p = 0; p < classes.size(); ++p) classes[p] = p;
      count = classes.size();
    }
    if (count > kInteriorPointVariableCap) {
      throw Error(ErrorKind::cap_exceeded, "interior point needs " + std::to_string(count) + " variables; cap is " +
                                               std::to_string(kInteriorPointVariableCap) +
                                               " (use the bisection method)");
    }
    result.variables = count;
    result.reduced = reduce && count < pd.pairs.size();
    InteriorPointOutcome outcome = interior_point(data, pd, classes, count, tol, options.max_newton_steps);
    result.iterations += outcome.steps;
    return outcome;
  };

  InteriorPointOutcome outcome = attempt(options.reduce_symmetry);
  if (!outcome.closed && options.reduce_symmetry && result.reduced &&
      pd.pairs.size() <= kInteriorPointVariableCap) {
    outcome = attempt(false);
  }
  if (!outcome.closed) {
    throw Error(ErrorKind::undecided, "interior point did not close the bracket [" + format_double(outcome.lower) +
                                          ", " + format_double(outcome.upper) + "]");
  }

  Eigen::MatrixXd q = centered_gram(pd, outcome.best_delta, n);
  const double lo_ratio = (outcome.best_delta.array() / pd.squared.array()).minCoeff();
  q /= lo_ratio;
  GramCertificate cert;
  cert.gram = q;
  cert.c = outcome.upper;
  cert.scale = data.scale;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> check(q, Eigen::EigenvaluesOnly);
  cert.psd_residual = std::min(0.0, check.eigenvalues().minCoeff());
  cert.constraint_residual = pair_violation(q, data.squared, outcome.upper * outcome.upper);

  result.lower = std::min(outcome.lower, outcome.upper);
  result.upper = outcome.upper;
  result.c_star = outcome.upper;
  result.certificate = std::move(cert);
  result.embedding = embedding_from_gram(space, result.certificate);
  result.embedding_distortion = distortion(result.embedding);
  return result;
}

}  // namespace

const char* to_string(L2Method method) {
  switch (method) {
    case L2Method::interior_point: return "interior-point";
    case L2Method::bisection: return "bisection";
  }
  return "unknown";
}

L2Method parse_l2_method(std::string_view name) {
  if (name == "interior-point") return L2Method::interior_point;
  if (name == "bisection") return L2Method::bisection;
  throw Error(ErrorKind::validation, "unknown method '" + std::string(name) + "' (interior-point, bisection)");
}

std::vector<std::size_t> pair_classes(const MetricSpace& space) {
  const std::size_t n = space.size();
  std::vector<std::size_t> color(n, 0);
  std::size_t colors = 1;
  while (true) {
    using Signature = std::pair<std::size_t, std::vector<std::pair<Rational, std::size_t>>>;
    std::map<Signature, std::size_t> ids;
    std::vector<Signature> signatures(n);
    for (std::size_t v = 0; v < n; ++v) {
      signatures[v].first = color[v];
      for (std::size_t w = 0; w < n; ++w) {
        if (w != v) signatures[v].second.emplace_back(space.dist(v, w), color[w]);
      }
      std::sort(signatures[v].second.begin(), signatures[v].second.end());
      ids.emplace(signatures[v], 0);
    }
    std::size_t next = 0;
    for (auto& [signature, id] : ids) id = next++;
    for (std::size_t v = 0; v < n; ++v) color[v] = ids.at(signatures[v]);
    if (ids.size() == colors) break;
    colors = ids.size();
  }
  std::map<std::tuple<std::size_t, std::size_t, Rational>, std::size_t> classes;
  std::vector<std::size_t> out;
  out.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      auto key = std::make_tuple(std::min(color[i], color[j]), std::max(color[i], color[j]), space.dist(i, j));
      auto [it, inserted] = classes.emplace(std::move(key), classes.size());
      out.push_back(it->second);
    }
  }
  return out;
}

L2MinResult min_distortion_l2(const MetricSpace& space, double tol, const L2Options& options) {
  if (!(tol > 0.0)) throw Error(ErrorKind::validation, "tolerance must be positive");
  if (space.size() < 2) throw Error(ErrorKind::validation, "space needs at least two points");
  if (options.method == L2Method::bisection) return bisection_l2(space, tol, options.sdp);
  return interior_point_l2(space, tol, options);
}

// -------------------------------------------------------------- Kloeckner

Embedding normalize_noncontractive(const Embedding& embedding) {
  const DistortionReport report = distortion(embedding);
  if (report.exponent == 1) return embedding.scaled(report.colip_power);
  // Round sqrt(colip²) up to an exact rational r with r² ≥ colip².
  double approx = std::sqrt(to_double(report.colip_power));
  Rational factor = from_double(approx);
  while (factor * factor < report.colip_power) {
    approx = std::nextafter(approx, std::numeric_limits<double>::infinity());
    factor = from_double(approx);
  }
  return embedding.scaled(factor);
}

ForkSelection fork_select(int depth, const Embedding& embedding) {
  if (depth < 2) throw Error(ErrorKind::validation, "fork selection needs depth >= 2");
  const std::size_t n = (std::size_t{1} << (depth + 1)) - 1;
  if (embedding.space.size() != n) throw Error(ErrorKind::validation, "embedding is not defined on T_n");
  const DistortionReport input = distortion(embedding);
  if (input.colip_power > 1) {
    throw Error(ErrorKind::validation,
                "embedding is contractive; rescale it with normalize_noncontractive before fork selection");
  }

  ForkSelection out;
  out.input_depth = depth;
  out.output_depth = depth / 2;
  out.input_distortion = input;
  const std::size_t m = (std::size_t{1} << (out.output_depth + 1)) - 1;
  out.selected.assign(m, 0);
  out.lipschitz = input.lip();
  out.improvement = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < m; ++a) {
    const std::size_t left = 2 * a + 1;
    if (left >= m) continue;
    const std::size_t v = out.selected[a];
    for (std::size_t branch = 0; branch < 2; ++branch) {
      const std::size_t child = 2 * v + 1 + branch;  // daughter, then son
      const std::size_t g0 = 2 * child + 1;
      const std::size_t g1 = 2 * child + 2;
      const Rational d0 = norm_power(embedding.target, embedding.vectors[g0] - embedding.vectors[v]);
      const Rational d1 = norm_power(embedding.target, embedding.vectors[g1] - embedding.vectors[v]);
      out.selected[left + branch] = d1 < d0 ? g1 : g0;
      const Rational& kept = d1 < d0 ? d1 : d0;
      const double length = embedding.target.norm_exponent() == 2 ? std::sqrt(to_double(kept)) : to_double(kept);
      out.improvement = std::min(out.improvement, out.lipschitz - length / 2.0);
    }
  }

  out.structure_exact = true;
  for (std::size_t a = 0; a < m && out.structure_exact; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      if (tree_distance(out.selected[a], out.selected[b]) != 2 * tree_distance(a, b)) {
        out.structure_exact = false;
        break;
      }
    }
  }

  out.embedding.space = binary_tree_metric(out.output_depth);
  out.embedding.target = embedding.target;
  for (std::size_t a = 0; a < m; ++a) out.embedding.vectors.push_back(Rational(1, 2) * embedding.vectors[out.selected[a]]);
  out.output_distortion = distortion(out.embedding);
  return out;
}

namespace {

using ForkPoint = std::array<double, 9>;  // x1, x2, x2' in ℝ³

double norm3(const double* a, const double* b) {
  double s = 0;
  for (int k = 0; k < 3; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

struct ForkEvaluation {
  double objective;  // −min(‖x2‖, ‖x2'‖)
  double violation;  // Σ squared constraint violations
};

ForkEvaluation evaluate_fork(const ForkPoint& x, double D) {
  static const double origin[3] = {0, 0, 0};
  const double* p[4] = {origin, x.data(), x.data() + 3, x.data() + 6};
  // Tree distances in the fork a0, a1, a2, a2'.
  static const int tree[4][4] = {{0, 1, 2, 2}, {1, 0, 1, 1}, {2, 1, 0, 2}, {2, 1, 2, 0}};
  double violation = 0;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      const double d = norm3(p[i], p[j]);
      const double lo = tree[i][j];
      const double hi = D * tree[i][j];
      if (d < lo) violation += (lo - d) * (lo - d);
      if (d > hi) violation += (d - hi) * (d - hi);
    }
  }
  return {-std::min(norm3(p[2], origin), norm3(p[3], origin)), violation};
}

ForkPoint nelder_mead(const ForkPoint& start, double D, double penalty, double step, int iterations) {
  constexpr int dims = 9;
  auto f = [&](const ForkPoint& x) {
    auto e = evaluate_fork(x, D);
    return e.objective + penalty * e.violation;
  };
  std::array<ForkPoint, dims + 1> simplex;
  std::array<double, dims + 1> value;
  simplex[0] = start;
  for (int k = 0; k < dims; ++k) {
    simplex[k + 1] = start;
    simplex[k + 1][k] += step;
  }
  for (int k = 0; k <= dims; ++k) value[k] = f(simplex[k]);
  for (int it = 0; it < iterations; ++it) {
    std::array<int, dims + 1> order;
    for (int k = 0; k <= dims; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return value[a] < value[b]; });
    const int best = order[0];
    const int worst = order[dims];
    const int second = order[dims - 1];
    if (std::abs(value[worst] - value[best]) < 1e-15) break;
    ForkPoint centroid{};
    for (int k = 0; k <= dims; ++k) {
      if (k == worst) continue;
      for (int d = 0; d < dims; ++d) centroid[d] += simplex[k][d] / dims;
    }
    auto blend = [&](double t) {
      ForkPoint p;
      for (int d = 0; d < dims; ++d) p[d] = centroid[d] + t * (simplex[worst][d] - centroid[d]);
      return p;
    };
    ForkPoint reflected = blend(-1.0);
    const double fr = f(reflected);
    if (fr < value[best]) {
      ForkPoint expanded = blend(-2.0);
      const double fe = f(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        value[worst] = fe;
      } else {
        simplex[worst] = reflected;
        value[worst] = fr;
      }
    } else if (fr < value[second]) {
      simplex[worst] = reflected;
      value[worst] = fr;
    } else {
      ForkPoint contracted = fr < value[worst] ? blend(-0.5) : blend(0.5);
      const double fc = f(contracted);
      if (fc < std::min(fr, value[worst])) {
        simplex[worst] = contracted;
        value[worst] = fc;
      } else {
        for (int k = 0; k <= dims; ++k) {
          if (k == best) continue;
          for (int d = 0; d < dims; ++d) simplex[k][d] = simplex[best][d] + 0.5 * (simplex[k][d] - simplex[best][d]);
          value[k] = f(simplex[k]);
        }
      }
    }
  }
  int best = 0;
  for (int k = 1; k <= dims; ++k) {
    if (value[k] < value[best]) best = k;
  }
  return simplex[best];
}

}  // namespace

ForkGapParams fork_gap_estimate(double distortion_bound, double q, const ConvexityModulus& modulus) {
  if (!(distortion_bound >= 1.0)) throw Error(ErrorKind::validation, "distortion D must be >= 1");
  if (!(q >= 2.0)) throw Error(ErrorKind::validation, "convexity exponent q must be >= 2");
  if (!(modulus.c > 0.0) || !(modulus.q >= 2.0)) throw Error(ErrorKind::validation, "invalid convexity modulus");
  const double D = distortion_bound;
  ForkGapParams out;
  out.distortion = D;
  out.q = q;
  if (D < 2.0 / std::sqrt(3.0)) {
    out.forks_exist = false;
    out.gap = std::numeric_limits<double>::infinity();
    out.constant = std::numeric_limits<double>::infinity();
    out.warning = "no D-Lipschitz non-contractive fork exists for D < 2/sqrt(3)";
    return out;
  }

  std::mt19937_64 rng(0x5eedf0f4ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  double best_min_norm = -1.0;
  constexpr int starts = 24;
  for (int s = 0; s < starts; ++s) {
    ForkPoint x;
    for (auto& v : x) v = normal(rng) * D;
    for (double penalty : {1e2, 1e4, 1e6, 1e8, 1e10}) {
      for (int round = 0; round < 3; ++round) x = nelder_mead(x, D, penalty, 0.05 * D / (1 + round), 4000);
    }
    const ForkEvaluation e = evaluate_fork(x, D);
    if (e.violation > 1e-12) continue;
    best_min_norm = std::max(best_min_norm, -e.objective);
  }
  if (best_min_norm < 0) {
    out.converged = false;
    out.warning = "fork optimizer found no feasible configuration; reporting the trivial bound 0";
    out.gap = 0.0;
    out.constant = 0.0;
    return out;
  }
  out.gap = std::max(0.0, 2.0 * D - best_min_norm);
  out.constant = out.gap * std::pow(D, q - 1.0) / 2.0;
  return out;
}

KloecknerBound kloeckner_bound(int depth, double constant, double q) {
  if (depth < 1) throw Error(ErrorKind::validation, "depth must be >= 1");
  if (!(constant > 0.0)) throw Error(ErrorKind::validation, "K must be positive");
  if (!(q >= 2.0)) throw Error(ErrorKind::validation, "q must be >= 2");
  KloecknerBound out;
  out.iterations = static_cast<int>(std::bit_width(static_cast<unsigned>(depth))) - 1;
  const double budget = out.iterations * constant;
  if (out.iterations == 0) {
    out.bound = 1.0;
  } else if (q == 2.0) {
    out.bound = (1.0 + std::sqrt(1.0 + 4.0 * budget)) / 2.0;
  } else {
    // D^q − D^{q−1} − budget is increasing on [1, ∞).
    double lo = 1.0;
    double hi = 2.0 + budget;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (std::pow(mid, q) - std::pow(mid, q - 1.0) < budget) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    out.bound = hi;
  }
  out.c1 = std::pow(constant / 2.0, 1.0 / q);
  out.c1_bound_holds = out.bound >= out.c1 * std::pow(std::log2(static_cast<double>(depth)), 1.0 / q) - 1e-12;
  return out;
}

}  // namespace testspace
