#pragma once

#include <cstddef>
#include <vector>

#include "testspace/rational.hpp"

namespace testspace {

/// Minkowski functional of conv(B_base ∪ {±generators}), where the base norm
/// is a weighted ℓ₁ norm  base(v) = atom_weight · Σ|v_i|  (discretized L₁
/// over dim atoms of mass atom_weight).
class GaugeNorm {
 public:
  GaugeNorm(std::size_t dim, Rational atom_weight, std::vector<RationalVector> generators);

  std::size_t dim() const noexcept { return dim_; }
  const Rational& atom_weight() const noexcept { return atom_weight_; }
  const std::vector<RationalVector>& generators() const noexcept { return generators_; }

  Rational base_norm(const RationalVector& v) const;

 private:
  std::size_t dim_;
  Rational atom_weight_;
  std::vector<RationalVector> generators_;
};

/// min { base(w) + Σ|μ_j| : v = w + Σ μ_j x_j }, solved as an exact LP.
Rational gauge_eval(const GaugeNorm& gauge, const RationalVector& v);

}  // namespace testspace
