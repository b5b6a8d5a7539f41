#include "testspace/linear_program.hpp"

#include <optional>

#include "testspace/error.hpp"

namespace testspace {

namespace {

// Dense tableau. Row `m` is the objective row holding reduced costs; the last
// column is the right-hand side (the objective row's rhs is −value).
class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t columns)
      : rows_(rows), columns_(columns), cells_((rows + 1) * (columns + 1)), basis_(rows) {}

  Rational& at(std::size_t r, std::size_t c) { return cells_[r * (columns_ + 1) + c]; }
  const Rational& at(std::size_t r, std::size_t c) const { return cells_[r * (columns_ + 1) + c]; }
  Rational& rhs(std::size_t r) { return at(r, columns_); }
  std::size_t rows() const { return rows_; }
  std::size_t columns() const { return columns_; }
  std::vector<std::size_t>& basis() { return basis_; }

  void pivot(std::size_t row, std::size_t column) {
    const Rational p = at(row, column);
    for (std::size_t c = 0; c <= columns_; ++c) at(row, c) /= p;
    for (std::size_t r = 0; r <= rows_; ++r) {
      if (r == row) continue;
      const Rational factor = at(r, column);
      if (factor == 0) continue;
      for (std::size_t c = 0; c <= columns_; ++c) {
        if (at(row, c) != 0) at(r, c) -= factor * at(row, c);
      }
    }
    basis_[row] = column;
  }

  /// Runs the simplex on the objective row restricted to `allowed` columns.
  /// Returns false when unbounded.
  bool optimize(std::size_t allowed) {
    for (;;) {
      std::optional<std::size_t> entering;
      for (std::size_t c = 0; c < allowed; ++c) {
        if (at(rows_, c) < 0) {
          entering = c;
          break;
        }
      }
      if (!entering) return true;
      std::optional<std::size_t> leaving;
      Rational best_ratio;
      for (std::size_t r = 0; r < rows_; ++r) {
        const Rational& a = at(r, *entering);
        if (a <= 0) continue;
        Rational ratio = at(r, columns_) / a;
        if (!leaving || ratio < best_ratio || (ratio == best_ratio && basis_[r] < basis_[*leaving])) {
          leaving = r;
          best_ratio = std::move(ratio);
        }
      }
      if (!leaving) return false;
      pivot(*leaving, *entering);
    }
  }

 private:
  std::size_t rows_;
  std::size_t columns_;
  std::vector<Rational> cells_;
  std::vector<std::size_t> basis_;
};

}  // namespace

LinearProgramResult minimize_standard_form(const RationalVector& cost, const std::vector<RationalVector>& rows,
                                           const RationalVector& rhs) {
  const std::size_t m = rows.size();
  const std::size_t n = cost.size();
  if (rhs.size() != m) throw Error(ErrorKind::validation, "LP right-hand side has the wrong length");
  for (const auto& row : rows) {
    if (row.size() != n) throw Error(ErrorKind::validation, "LP constraint row has the wrong length");
  }

  // Columns: n structural, then m artificials.
  Tableau tableau(m, n + m);
  for (std::size_t r = 0; r < m; ++r) {
    const bool flip = rhs[r] < 0;
    for (std::size_t c = 0; c < n; ++c) tableau.at(r, c) = flip ? Rational(-rows[r][c]) : rows[r][c];
    tableau.at(r, n + r) = 1;
    tableau.rhs(r) = flip ? Rational(-rhs[r]) : rhs[r];
    tableau.basis()[r] = n + r;
  }
  // Phase 1 objective: sum of artificials, expressed in non-basic columns.
  for (std::size_t c = 0; c <= n + m; ++c) {
    if (c >= n && c < n + m) continue;
    Rational sum = 0;
    for (std::size_t r = 0; r < m; ++r) sum += tableau.at(r, c);
    tableau.at(m, c) = -sum;
  }
  tableau.optimize(n + m);
  if (tableau.at(m, n + m) != 0) return {LinearProgramResult::Status::infeasible, {}, {}};

  // Drive remaining artificials out of the basis; rows that cannot pivot are redundant.
  for (std::size_t r = 0; r < m; ++r) {
    if (tableau.basis()[r] < n) continue;
    for (std::size_t c = 0; c < n; ++c) {
      if (tableau.at(r, c) != 0) {
        tableau.pivot(r, c);
        break;
      }
    }
  }

  // Phase 2 objective row.
  for (std::size_t c = 0; c <= n + m; ++c) tableau.at(m, c) = c < n ? cost[c] : Rational(0);
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t b = tableau.basis()[r];
    if (b >= n) continue;
    const Rational factor = tableau.at(m, b);
    if (factor == 0) continue;
    for (std::size_t c = 0; c <= n + m; ++c) tableau.at(m, c) -= factor * tableau.at(r, c);
  }
  if (!tableau.optimize(n)) return {LinearProgramResult::Status::unbounded, {}, {}};

  LinearProgramResult result;
  result.status = LinearProgramResult::Status::optimal;
  result.solution.assign(n, Rational(0));
  for (std::size_t r = 0; r < m; ++r) {
    if (tableau.basis()[r] < n) result.solution[tableau.basis()[r]] = tableau.rhs(r);
  }
  result.value = 0;
  for (std::size_t c = 0; c < n; ++c) result.value += cost[c] * result.solution[c];
  return result;
}

}  // namespace testspace
