#include "cdlab/experiments.hpp"
#include "cdlab/hmeasure.hpp"

#include <doctest.h>

#include <cmath>

using namespace cdlab;

TEST_CASE("carpet measure is conserved with uniform masses") {
  const auto spec = default_spec(4);
  const auto mu = carpet_measure(spec, 4);
  CHECK(mu.conserved());
  CHECK(mu.total() == 1);
  for (auto i : mu.generation(3)) CHECK(mu.node(i).mass == Rational(1, 64));
  CHECK(mu.generation(4).size() == 256);
  CHECK(mu.mass_of(CellIndex{1, 1, 0}) == 0);
  CHECK(mu.mass_of(CellIndex{1, 2, 0}) == Rational(1, 4));
}

TEST_CASE("slice measure at a = 1/3") {
  const auto spec = default_spec(6);
  const auto s = slice_measure(spec, Rational(1, 3), 6);
  CHECK(s.conserved());
  CHECK(s.generation(6).size() == 64);
  // 1/3 = 0.010101... in base 2: rows alternate 0, 1, 0, ...
  for (auto i : s.generation(6)) {
    const auto& c = s.node(i).cell;
    CHECK(s.node(i).mass == Rational(1, 64));
    CHECK(c.y0(2) <= Rational(1, 3));
    CHECK(c.y0(2) + c.height(2) >= Rational(1, 3));
  }
  CHECK(slice_mass_in(s, spec, 0, 1) == 1);
  CHECK_THROWS_AS(slice_measure(spec, Rational(1, 2), 3), MeasureError);
  CHECK_THROWS_AS(slice_measure(spec, Rational(0), 3), MeasureError);
}

TEST_CASE("disintegration and pushforward are exact") {
  const auto a = default_spec(3);
  const auto b = CarpetSpec::generated(4, 2, 2, random_pattern_generator(4, 2, 2, 5), 3, "random");
  for (const auto& spec : {a, b})
    for (int n = 1; n <= 3; ++n) {
      const auto d = check_disintegration(spec, n);
      const auto p = check_pushforward(spec, n);
      CHECK(d.all_pass());
      CHECK(p.all_pass());
      CHECK_FALSE(d.entries.empty());
      // pushforward covers every ell-adic interval up to generation n
      CHECK(p.entries.size() == static_cast<std::size_t>((ipow(2, n + 1) - 1)));
    }
}

TEST_CASE("vertical selections carry Lebesgue measure") {
  const auto spec = default_spec(5);
  for (const auto& sel : {lowest_column_selection(spec, 5), random_selection(spec, 5, 9)}) {
    sel.validate(spec);
    for (int n = 0; n <= 5; ++n) CHECK(sel.selected(n).size() == static_cast<std::size_t>(ipow(2, n)));
    const auto lam = vertical_lambda(spec, sel, 5);
    CHECK(lam.total() == 1);
    for (auto i : lam.generation(5)) CHECK((lam.node(i).mass == 0 || lam.node(i).mass == Rational(1, 32)));
    CHECK(vertical_lambda_inside(spec, sel, 5, Rational(1, 2), Rational(1, 2), 2) == 1);
    CHECK(vertical_lambda_inside(spec, sel, 5, Rational(1, 2), Rational(1, 2), Rational(1, 1000)) <= Rational(1, 32));
  }
  const auto low = lowest_column_selection(spec, 2);
  for (const auto& c : low.selected(1)) CHECK(c.x == (c.y == 0 ? 0 : 1));
}

TEST_CASE("alpha measure on a hand tree") {
  HierarchicalSpace h;
  const auto root = h.add_root(1.0);
  const auto a = h.add_child(root, 0.5);
  const auto b = h.add_child(root, 0.25);
  const double alpha = 0.5;
  const auto mass = alpha_measure(h, alpha);
  const double wa = std::sqrt(0.5), wb = std::sqrt(0.25);
  CHECK(mass[a] == doctest::Approx(wa / (wa + wb)));
  CHECK(mass[b] == doctest::Approx(wb / (wa + wb)));
  const double sup = std::max({1.0, mass[a] / wa, mass[b] / wb});
  CHECK(alpha_ratio_sup(h, mass, alpha) == doctest::Approx(sup));
  CHECK(h.sibling(a) == static_cast<std::int64_t>(b));
  CHECK(h.depth(b) == 1);
}

TEST_CASE("largest (1/3, eps) parameter") {
  for (double alpha : {0.2, 0.5, 0.8, 0.95}) {
    // (1/3)^a + (2/3)^a (1 - eps)^a = 1, solved in closed form
    const double oracle = 1.0 - std::pow((1.0 - std::pow(1.0 / 3.0, alpha)) / std::pow(2.0 / 3.0, alpha), 1.0 / alpha);
    CHECK(max_third_eps(alpha) == doctest::Approx(oracle).epsilon(1e-9));
  }
}

TEST_CASE("random third trees obey the mass bound") {
  std::mt19937_64 rng(4);
  for (double alpha : {0.3, 0.7, 0.99}) {
    const auto h = random_third_tree(8, alpha, 0.5 * max_third_eps(alpha), rng);
    CHECK(h.leaves().size() == 256);
    CHECK(alpha_ratio_sup(h, alpha_measure(h, alpha), alpha) <= 1.0 + 1e-12);
  }
  CHECK_THROWS_AS(random_third_tree(3, 0.5, 1.0, rng), MeasureError);
}

TEST_CASE("flatness counts maximal pieces inside a ball") {
  HierarchicalSpace h;
  const auto root = h.add_root(1.0);
  const auto l = h.add_child(root, 0.5), r = h.add_child(root, 0.5);
  h.add_sample(l, {0.25, 0});
  h.add_sample(r, {0.75, 0});
  CHECK(flatness_constant(h, {0.25, 0}, 0.1) == 1);
  CHECK(flatness_constant(h, {0.5, 0}, 1.0) == 1);
  CHECK(flatness_constant(h, {2.0, 0}, 0.1) == 0);
}

TEST_CASE("doubling diagnostics") {
  const auto spec = default_spec(6);
  CHECK(check_neighbor_bound(spec, 4));
  const auto balls = sample_doubling_balls(spec, 6, 40, 2);
  CHECK(balls.size() == 40);
  const auto rep = check_doubling(spec, 6, balls);
  CHECK(rep.balls == 40);
  CHECK(rep.max_ratio >= 1.0);
  CHECK(rep.max_ratio < 64.0);
}
