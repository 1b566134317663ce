#include "cdlab/exact_lp.hpp"
#include "cdlab/experiments.hpp"
#include "cdlab/modulus.hpp"

#include <doctest.h>

#include <optional>
#include <random>

using namespace cdlab;

namespace {

// Solves the square system M z = b exactly; nullopt when singular.
std::optional<std::vector<Rational>> solve(std::vector<std::vector<Rational>> M, std::vector<Rational> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (p < n && M[p][c] == 0) ++p;
    if (p == n) return std::nullopt;
    std::swap(M[p], M[c]);
    std::swap(b[p], b[c]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || M[r][c] == 0) continue;
      const Rational f = M[r][c] / M[c][c];
      for (std::size_t k = c; k < n; ++k) M[r][k] -= f * M[c][k];
      b[r] -= f * b[c];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= M[i][i];
  return b;
}

// min c.x over {A x >= 1, x >= 0} by enumerating every vertex.
Rational vertex_oracle(const std::vector<Rational>& c, const std::vector<std::vector<Rational>>& A) {
  const std::size_t n = c.size();
  std::vector<std::vector<Rational>> rows = A;
  std::vector<Rational> rhs(A.size(), 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Rational> e(n, 0);
    e[i] = 1;
    rows.push_back(e);
    rhs.push_back(0);
  }
  std::optional<Rational> best;
  const std::size_t R = rows.size();
  std::vector<std::size_t> pick(n);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
    if (depth == n) {
      std::vector<std::vector<Rational>> M;
      std::vector<Rational> b;
      for (auto i : pick) {
        M.push_back(rows[i]);
        b.push_back(rhs[i]);
      }
      const auto z = solve(M, b);
      if (!z) return;
      for (std::size_t r = 0; r < R; ++r) {
        Rational s = 0;
        for (std::size_t k = 0; k < n; ++k) s += rows[r][k] * (*z)[k];
        if (s < rhs[r]) return;
      }
      Rational v = 0;
      for (std::size_t k = 0; k < n; ++k) v += c[k] * (*z)[k];
      if (!best || v < *best) best = v;
      return;
    }
    for (std::size_t i = start; i < R; ++i) {
      pick[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return *best;
}

ModulusProblem chain(int cells, double p) {
  ModulusProblem prob;
  prob.p = p;
  SparseRow row;
  for (int i = 0; i < cells; ++i) {
    prob.cells.push_back("c" + std::to_string(i));
    prob.mass.push_back(1);
    row.emplace_back(i, Rational(1));
  }
  prob.families.push_back(row);
  return prob;
}

}  // namespace

TEST_CASE("covering LP against vertex enumeration") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> coef(0, 4), cost(1, 6);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + trial % 2, m = 2 + trial % 3;
    std::vector<Rational> c(n);
    for (auto& v : c) v = cost(rng);
    std::vector<std::vector<Rational>> A(m, std::vector<Rational>(n));
    std::vector<SparseRow> rows(m);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        A[i][j] = coef(rng);
        if (A[i][j] != 0) rows[i].emplace_back(j, A[i][j]);
      }
      if (rows[i].empty()) {
        A[i][0] = 1;
        rows[i].emplace_back(0, Rational(1));
      }
    }
    const auto sol = solve_covering_lp(c, rows);
    CHECK(sol.certified);
    CHECK(sol.value == vertex_oracle(c, A));
    CHECK(verify_covering(c, rows, sol.primal, sol.dual));
  }
}

TEST_CASE("tampered certificates are rejected") {
  const std::vector<Rational> c{1, 1};
  const std::vector<SparseRow> rows{{{0, Rational(1)}, {1, Rational(1)}}};
  const auto sol = solve_covering_lp(c, rows);
  CHECK(sol.value == 1);
  CHECK_FALSE(verify_covering(c, rows, {Rational(1, 4), Rational(1, 4)}, sol.dual));
  CHECK_FALSE(verify_covering(c, rows, sol.primal, {Rational(2)}));
}

TEST_CASE("series and parallel moduli") {
  // one curve through n unit cells: Mod_1 = 1, Mod_p = n^(1-p)
  const auto one = mod_p(chain(4, 1.0));
  REQUIRE(one.exact_value);
  CHECK(*one.exact_value == 1);
  CHECK(one.certified);
  const auto two = mod_p(chain(4, 2.0));
  CHECK(two.value == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(two.lower_bound <= 0.25 + 1e-9);
  CHECK(two.upper_bound >= 0.25 - 1e-9);
  // two disjoint curves: values add
  ModulusProblem par;
  par.cells = {"a", "b"};
  par.mass = {1, 1};
  par.families = {{{0, Rational(1)}}, {{1, Rational(1)}}};
  CHECK(*mod_p(par).exact_value == 2);
  par.p = 3.0;
  CHECK(mod_p(par).value == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("admissibility") {
  const auto prob = chain(3, 1.0);
  const auto rep = is_admissible(std::vector<Rational>{Rational(1, 3), Rational(1, 3), Rational(1, 3)}, prob);
  CHECK(rep.admissible);
  CHECK(*rep.exact_min == 1);
  CHECK_FALSE(is_admissible(std::vector<double>{0.3, 0.3, 0.3}, prob).admissible);
  CHECK(is_admissible(std::vector<double>{0.3, 0.3, 0.3}, prob, 0.2).admissible);
}

TEST_CASE("problem validation and JSON") {
  auto prob = chain(2, 1.0);
  prob.mass[0] = -1;
  CHECK_THROWS_AS(prob.validate(), ModulusError);
  const auto good = chain(3, 2.0);
  const auto back = modulus_from_json(modulus_to_json(good));
  CHECK(back.cells == good.cells);
  CHECK(back.p == 2.0);
  CHECK(back.families.size() == 1);
  const auto res = result_to_json(mod_p(chain(3, 1.0)), chain(3, 1.0));
  CHECK(res.contains("value"));
}

TEST_CASE("vertical family counts") {
  // k^ell choices per chosen cell, over (ell^n - 1)/(ell - 1) chosen cells
  const auto spec = default_spec(4);
  CHECK(vertical_family_count(spec, 1) == 4);
  CHECK(vertical_family_count(spec, 2) == 64);
  CHECK(vertical_family_count(spec, 3) == 16384);
  const auto prob = vertical_problem(spec, 2, 1000);
  CHECK(prob.families.size() == 64);
  CHECK(prob.cells.size() == 16);
  for (const auto& row : prob.families) {
    Rational s = 0;
    for (const auto& [i, w] : row) s += w;
    CHECK(s == 1);  // each family carries total Lebesgue mass 1
  }
}

TEST_CASE("vertical modulus is one") {
  const auto vm = carpet_vertical_modulus(default_spec(3), 2);
  CHECK(vm.value == 1);
  CHECK(vm.certified);
  CHECK_FALSE(vm.sampled);
  std::vector<std::pair<int, int>> all;
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 2; ++r) all.push_back({c, r});
  CHECK(carpet_vertical_modulus(CarpetSpec::fixed(Pattern(3, 2, all), 2), 1).value == 1);
  const auto big = carpet_vertical_modulus(default_spec(4), 3, 100, 50, 3);
  CHECK(big.sampled);
  CHECK(big.value <= 1);
}

TEST_CASE("rho_infinity keeps admissibility and does not raise the mass") {
  const auto spec = default_spec(2);
  const auto prob = vertical_problem(spec, 2, 1000);
  std::vector<Rational> one(prob.cells.size(), 1);
  const auto flat = rho_infinity(spec, 2, one);
  CHECK(flat.rho_inf == one);
  CHECK(integrate_mu(spec, 2, one) == 1);
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> d(0, 9);
  for (int t = 0; t < 20; ++t) {
    std::vector<Rational> rho(prob.cells.size());
    for (auto& r : rho) {
      r = Rational(d(rng) + 1, 5);
      r.canonicalize();
    }
    const auto m = *is_admissible(rho, prob).exact_min;
    for (auto& r : rho) r /= m;
    const auto out = rho_infinity(spec, 2, rho);
    CHECK(integrate_mu(spec, 2, out.rho_inf) <= integrate_mu(spec, 2, rho));
    CHECK(is_admissible(out.rho_inf, prob).admissible);
  }
}

TEST_CASE("subadditivity") {
  auto a = chain(3, 1.0), b = chain(3, 1.0);
  b.families = {{{0, Rational(1)}}, {{2, Rational(1)}}};
  const auto rep = mod_subadditivity_check({a, b});
  CHECK(rep.holds);
  CHECK(rep.parts.size() == 2);
  CHECK(rep.union_value <= rep.sum_of_parts + 1e-12);
}
