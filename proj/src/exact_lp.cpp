#include "cdlab/exact_lp.hpp"

#include <stdexcept>

namespace cdlab {

namespace {

// Tableau row i holds  sum_f A[f][i] y_f + s_i = cost_i.
struct Tableau {
  std::size_t rows = 0, cols = 0;
  std::vector<Rational> a;    // rows x cols
  std::vector<Rational> rhs;  // rows
  std::vector<Rational> obj;  // reduced costs, cols
  Rational value;
  std::vector<std::size_t> basis;

  Rational& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }

  void pivot(std::size_t r, std::size_t c) {
    const Rational p = at(r, c);
    std::vector<std::size_t> nz;
    for (std::size_t j = 0; j < cols; ++j)
      if (sgn(at(r, j)) != 0) {
        at(r, j) /= p;
        nz.push_back(j);
      }
    rhs[r] /= p;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r) continue;
      const Rational f = at(i, c);
      if (sgn(f) == 0) continue;
      for (auto j : nz) at(i, j) -= f * at(r, j);
      rhs[i] -= f * rhs[r];
    }
    const Rational f = obj[c];
    if (sgn(f) != 0) {
      for (auto j : nz) obj[j] -= f * at(r, j);
      value -= f * rhs[r];
    }
    basis[r] = c;
  }
};

}  // namespace

CoveringSolution solve_covering_lp(const std::vector<Rational>& cost, const std::vector<SparseRow>& rows) {
  const std::size_t nc = cost.size(), nf = rows.size();
  for (const auto& c : cost)
    if (sgn(c) < 0) throw std::invalid_argument("covering LP needs nonnegative costs");
  for (const auto& row : rows) {
    bool nonzero = false;
    for (const auto& [j, w] : row) {
      if (j >= nc) throw std::invalid_argument("row references an unknown column");
      if (sgn(w) < 0) throw std::invalid_argument("covering LP needs nonnegative weights");
      nonzero = nonzero || sgn(w) > 0;
    }
    if (!nonzero) throw std::invalid_argument("covering LP row is identically zero");
  }

  CoveringSolution sol;
  sol.primal.assign(nc, Rational(0));
  sol.dual.assign(nf, Rational(0));
  if (nf == 0) {
    sol.value = 0;
    sol.certified = true;
    return sol;
  }

  Tableau t;
  t.rows = nc;
  t.cols = nf + nc;
  t.a.assign(t.rows * t.cols, Rational(0));
  t.rhs = cost;
  t.obj.assign(t.cols, Rational(0));
  t.basis.resize(nc);
  for (std::size_t f = 0; f < nf; ++f) {
    for (const auto& [j, w] : rows[f]) t.at(j, f) += w;
    t.obj[f] = -1;
  }
  for (std::size_t i = 0; i < nc; ++i) {
    t.at(i, nf + i) = 1;
    t.basis[i] = nf + i;
  }

  for (;;) {
    std::size_t enter = t.cols;
    for (std::size_t j = 0; j < t.cols; ++j)
      if (sgn(t.obj[j]) < 0) {
        enter = j;
        break;
      }
    if (enter == t.cols) break;
    std::size_t leave = t.rows;
    Rational best;
    for (std::size_t i = 0; i < t.rows; ++i) {
      const Rational& aij = t.at(i, enter);
      if (sgn(aij) <= 0) continue;
      const Rational ratio = t.rhs[i] / aij;
      if (leave == t.rows || ratio < best || (ratio == best && t.basis[i] < t.basis[leave])) {
        best = ratio;
        leave = i;
      }
    }
    // Never taken: the covering problem is feasible, so its dual is bounded.
    if (leave == t.rows) throw std::logic_error("covering LP dual unbounded");
    t.pivot(leave, enter);
    ++sol.pivots;
  }

  sol.value = t.value;
  for (std::size_t i = 0; i < nc; ++i) sol.primal[i] = t.obj[nf + i];
  for (std::size_t i = 0; i < nc; ++i)
    if (t.basis[i] < nf) sol.dual[t.basis[i]] = t.rhs[i];
  sol.certified = verify_covering(cost, rows, sol.primal, sol.dual) &&
                  [&] {
                    Rational obj = 0;
                    for (std::size_t i = 0; i < nc; ++i) obj += cost[i] * sol.primal[i];
                    return obj == sol.value;
                  }();
  return sol;
}

bool verify_covering(const std::vector<Rational>& cost, const std::vector<SparseRow>& rows,
                     const std::vector<Rational>& primal, const std::vector<Rational>& dual) {
  if (primal.size() != cost.size() || dual.size() != rows.size()) return false;
  for (const auto& x : primal)
    if (sgn(x) < 0) return false;
  for (const auto& y : dual)
    if (sgn(y) < 0) return false;
  for (const auto& row : rows) {
    Rational s = 0;
    for (const auto& [j, w] : row) s += w * primal[j];
    if (s < 1) return false;
  }
  std::vector<Rational> aty(cost.size(), Rational(0));
  for (std::size_t f = 0; f < rows.size(); ++f)
    for (const auto& [j, w] : rows[f]) aty[j] += w * dual[f];
  for (std::size_t j = 0; j < cost.size(); ++j)
    if (aty[j] > cost[j]) return false;
  Rational primal_obj = 0, dual_obj = 0;
  for (std::size_t j = 0; j < cost.size(); ++j) primal_obj += cost[j] * primal[j];
  for (const auto& y : dual) dual_obj += y;
  return primal_obj == dual_obj;
}

}  // namespace cdlab
