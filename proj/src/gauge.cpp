#include "testspace/gauge.hpp"

#include "testspace/error.hpp"
#include "testspace/linear_program.hpp"

namespace testspace {

GaugeNorm::GaugeNorm(std::size_t dim, Rational atom_weight, std::vector<RationalVector> generators)
    : dim_(dim), atom_weight_(std::move(atom_weight)), generators_(std::move(generators)) {
  if (dim_ == 0) throw Error(ErrorKind::validation, "gauge norm needs a positive dimension");
  if (atom_weight_ <= 0) throw Error(ErrorKind::validation, "atom weight must be positive");
  for (const auto& g : generators_) {
    if (g.size() != dim_) throw Error(ErrorKind::validation, "gauge generator has the wrong dimension");
  }
}

Rational GaugeNorm::base_norm(const RationalVector& v) const {
  if (v.size() != dim_) throw Error(ErrorKind::validation, "dimension mismatch in base norm");
  Rational sum = 0;
  for (const auto& x : v) sum += abs_value(x);
  return sum * atom_weight_;
}

Rational gauge_eval(const GaugeNorm& gauge, const RationalVector& v) {
  const std::size_t dim = gauge.dim();
  if (v.size() != dim) throw Error(ErrorKind::validation, "dimension mismatch in gauge evaluation");
  const std::size_t count = gauge.generators().size();
  if (count == 0) return gauge.base_norm(v);

  // Variables: w⁺ (dim), w⁻ (dim), μ⁺ (count), μ⁻ (count), all ≥ 0.
  // Row i:  w⁺_i − w⁻_i + Σ_j (μ⁺_j − μ⁻_j) x_{j,i} = v_i.
  const std::size_t columns = 2 * dim + 2 * count;
  RationalVector cost(columns, Rational(0));
  for (std::size_t i = 0; i < 2 * dim; ++i) cost[i] = gauge.atom_weight();
  for (std::size_t j = 0; j < 2 * count; ++j) cost[2 * dim + j] = 1;
  std::vector<RationalVector> rows(dim, RationalVector(columns, Rational(0)));
  for (std::size_t i = 0; i < dim; ++i) {
    rows[i][i] = 1;
    rows[i][dim + i] = -1;
    for (std::size_t j = 0; j < count; ++j) {
      const Rational& x = gauge.generators()[j][i];
      if (x == 0) continue;
      rows[i][2 * dim + j] = x;
      rows[i][2 * dim + count + j] = -x;
    }
  }
  auto result = minimize_standard_form(cost, rows, v);
  if (result.status != LinearProgramResult::Status::optimal) {
    // w = v is always feasible and the objective is bounded below by 0.
    throw Error(ErrorKind::internal, "gauge LP did not reach an optimum");
  }
  return result.value;
}

}  // namespace testspace
