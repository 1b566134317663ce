#include "cdlab/decomposition.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace cdlab;

namespace {

BrownianPath ramp(int g) {
  const std::size_t M = std::size_t{1} << (2 * g);
  std::vector<double> v(M + 1);
  for (std::size_t i = 0; i <= M; ++i) v[i] = static_cast<double>(i) / static_cast<double>(M);
  return path_from_values(1.0 / static_cast<double>(M), std::move(v));
}

BrownianPath to_six(std::uint64_t seed, int g) {
  SimulateOptions o;
  o.stop_level = 6.0;
  o.max_steps = std::uint64_t{1} << 25;
  for (std::uint64_t k = 0;; ++k) {
    try {
      return simulate(seed + (k << 32), std::ldexp(1.0, -2 * g), o);
    } catch (const PathError&) {
    }
  }
}

}  // namespace

TEST_CASE("flatness threshold") {
  // flat iff diam >= 2^-n / (n ln 2)
  CHECK_FALSE(is_flat(0.5, 1));
  CHECK(is_flat(0.25, 2));
  CHECK(is_flat(0.7214, 1));
  CHECK_FALSE(is_flat(0.7213, 1));
}

TEST_CASE("monotone path: one element per band") {
  const auto d = decompose(ramp(7), 7);
  for (int n = 1; n <= 7; ++n) {
    const auto& g = d.generation(n);
    REQUIRE(g.size() == (std::size_t{1} << n));
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK(g[i].band == static_cast<std::int64_t>(i) + 1);
      CHECK(g[i].diam_x() == doctest::Approx(std::ldexp(1.0, -n)).epsilon(1e-6));
      // a traversal of height 2^-n in time 2^-n is flat from n = 2 on
      CHECK(g[i].flat == (n >= 2));
    }
  }
  const auto rep = check_partition(d, ramp(7));
  CHECK(rep.disjoint);
  CHECK(rep.nested);
  CHECK(rep.covered);
  CHECK(rep.uncovered == 0);
}

TEST_CASE("decomposition refuses generations finer than the path") {
  CHECK_THROWS_AS(decompose(ramp(5), 6), GeometryError);
}

TEST_CASE("Brownian decompositions partition the graph") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto p = to_six(seed, 7);
    const auto d = decompose(p, 7);
    const auto rep = check_partition(d, p, 4);
    CHECK(rep.disjoint);
    CHECK(rep.nested);
    CHECK(rep.covered);
    CHECK(rep.checked_samples > 0);
    for (int n = 1; n <= 7; ++n) {
      // every band (i 2^-n, (i+1) 2^-n] inside (0, 1] is met
      std::set<std::int64_t> bands;
      for (const auto& e : d.generation(n)) {
        bands.insert(e.band);
        CHECK(e.start < e.end);
        CHECK(e.x_last <= e.end);
        if (n > 1) {
          const auto& par = d.generation(n - 1)[static_cast<std::size_t>(e.parent)];
          CHECK(par.start <= e.start);
          CHECK(e.end <= par.end);
          CHECK((e.band + 1) / 2 == par.band);
        }
      }
      CHECK(bands.size() == (std::size_t{1} << n));
      CHECK(d.flat_count(n) <= d.generation(n).size());
    }
  }
}

TEST_CASE("vertical Cantor trees and the lambda bound") {
  const auto p = to_six(5, 8);
  const auto d = decompose(p, 8);
  const auto a = extract_vertical_cantor(d, 8, narrowest_chooser());
  const auto b = extract_vertical_cantor(d, 8, leftmost_chooser());
  CHECK(check_vertical_tree(d, a));
  CHECK(check_vertical_tree(d, b));
  CHECK(a.mass(3) == 0.125);
  for (int n = 1; n <= 8; ++n) CHECK(a.nodes[static_cast<std::size_t>(n - 1)].size() == (std::size_t{1} << n));
  // a tampered tree fails the check
  auto bad = a;
  std::swap(bad.nodes[2][0], bad.nodes[2][1]);
  CHECK_FALSE(check_vertical_tree(d, bad));
  // the whole window holds all selected mass
  CHECK(lambda_ball_lower(d, a, d.t_end / 2, 0.5, 100.0) == doctest::Approx(1.0));
  const auto rep = lambda_ball_test(d, a, p, 100, std::ldexp(1.0, -6), 0.25, 3);
  CHECK(rep.tests == 100);
  CHECK(rep.fraction() >= 0.9);
  CHECK_THROWS_AS(extract_vertical_cantor(d, 9, narrowest_chooser()), GeometryError);
}

TEST_CASE("A-like elements and JSON") {
  const auto d = decompose(ramp(6), 6);
  // the ramp is flat from generation 2 on
  CHECK(a_like(d, 1, 0, 1));
  CHECK_FALSE(a_like(d, 4, 3, 2));
  const auto doc = decomposition_to_json(d, 3);
  CHECK(doc["schema_version"] == 1);
  CHECK(doc["generations"].size() == 3);
  CHECK(doc["generations"][2]["elements"].size() == 8);
  CHECK(std::string(to_string(LegKind::Merged)) != std::string(to_string(LegKind::Up)));
}
