#pragma once

#include <vector>

#include "testspace/rational.hpp"

namespace testspace {

struct LinearProgramResult {
  enum class Status { optimal, infeasible, unbounded };

  Status status = Status::infeasible;
  Rational value;
  RationalVector solution;
};

/// Exact two-phase simplex (Bland's rule) for
///   minimize cost·x  subject to  rows·x = rhs,  x ≥ 0.
LinearProgramResult minimize_standard_form(const RationalVector& cost, const std::vector<RationalVector>& rows,
                                           const RationalVector& rhs);

}  // namespace testspace
