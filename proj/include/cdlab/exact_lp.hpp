#pragma once

#include "cdlab/rational.hpp"

#include <cstddef>
#include <utility>
#include <vector>

namespace cdlab {

using SparseRow = std::vector<std::pair<std::size_t, Rational>>;

/// Covering LP  min c.x  s.t.  A x >= 1, x >= 0  with c >= 0, A >= 0.
/// Solved through its dual  max 1.y  s.t.  A^T y <= c, y >= 0, whose origin
/// is feasible; dense rational tableau with Bland's rule.
struct CoveringSolution {
  Rational value;
  std::vector<Rational> primal;  // x
  std::vector<Rational> dual;    // y, one per row
  std::size_t pivots = 0;
  /// Primal and dual feasibility plus equal objectives, checked exactly.
  bool certified = false;
};

CoveringSolution solve_covering_lp(const std::vector<Rational>& cost, const std::vector<SparseRow>& rows);

/// Exact feasibility and strong-duality check of a claimed solution.
bool verify_covering(const std::vector<Rational>& cost, const std::vector<SparseRow>& rows,
                     const std::vector<Rational>& primal, const std::vector<Rational>& dual);

}  // namespace cdlab
