#include "cdlab/carpet.hpp"
#include "cdlab/experiments.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace cdlab;

namespace {

// Brute-force membership: every base-(m, ell) digit pair lies in the pattern.
std::set<std::pair<std::int64_t, std::int64_t>> brute_cells(const Pattern& p, int n) {
  std::set<std::pair<std::int64_t, std::int64_t>> out;
  const std::int64_t W = ipow(p.m, n), H = ipow(p.ell, n);
  for (std::int64_t x = 0; x < W; ++x)
    for (std::int64_t y = 0; y < H; ++y) {
      bool in = true;
      std::int64_t xx = x, yy = y;
      for (int j = 0; j < n && in; ++j) {
        in = p.contains(static_cast<int>(xx % p.m), static_cast<int>(yy % p.ell));
        xx /= p.m;
        yy /= p.ell;
      }
      if (in) out.insert({x, y});
    }
  return out;
}

}  // namespace

TEST_CASE("uniform fibers") {
  CHECK(validate_uniform_fibers(Pattern(4, 2, {{0, 0}, {2, 0}, {1, 1}, {3, 1}})) == 2);
  CHECK_THROWS_AS(validate_uniform_fibers(Pattern(4, 2, {{0, 0}, {2, 0}, {1, 1}})), PatternError);
  CHECK_THROWS_AS(Pattern(4, 2, {{4, 0}}), PatternError);
  CHECK_THROWS_AS(Pattern(4, 2, {{1, 0}, {1, 0}}), PatternError);
  // the full grid, k = m
  std::vector<std::pair<int, int>> all;
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 2; ++r) all.push_back({c, r});
  CHECK(validate_uniform_fibers(Pattern(3, 2, all)) == 3);
}

TEST_CASE("generation cells match brute force") {
  const auto spec = default_spec(4);
  for (int n = 0; n <= 4; ++n) {
    const auto cells = build_generation(spec, n);
    CHECK(cells.size() == static_cast<std::size_t>(ipow(4, n)));
    std::set<std::pair<std::int64_t, std::int64_t>> got;
    for (const auto& c : cells) got.insert({c.x, c.y});
    CHECK(got == brute_cells(*spec.fixed_pattern(), n));
    for (std::size_t i = 1; i < cells.size(); ++i)
      CHECK((cells[i - 1].y < cells[i].y || (cells[i - 1].y == cells[i].y && cells[i - 1].x < cells[i].x)));
  }
  CHECK(build_generation(spec, 3).size() == 64);
  CHECK_THROWS(build_generation(spec, 5));
}

TEST_CASE("dimension formula") {
  const auto d = dim_formula(4, 2, 2);
  CHECK(d.hausdorff == doctest::Approx(1.5));
  CHECK(d.slice == doctest::Approx(0.5));
  CHECK(dim_formula(12, 3, 4).hausdorff == doctest::Approx(1.0 + std::log(4.0) / std::log(12.0)));
  CHECK(dim_formula(3, 2, 3).hausdorff == doctest::Approx(2.0));
}

TEST_CASE("cell addressing") {
  CellIndex root;
  const auto c = root.child(3, 1, 4, 2).child(1, 0, 4, 2);
  CHECK(c.generation == 2);
  CHECK(c.x == 3 * 4 + 1);
  CHECK(c.y == 1 * 2 + 0);
  CHECK(c.ancestor(1, 4, 2) == root.child(3, 1, 4, 2));
  CHECK(c.digits(4, 2) == std::vector<std::pair<int, int>>{{3, 1}, {1, 0}});
  CHECK(c.x0(4) == Rational(13, 16));
  CHECK(c.y0(2) == Rational(1, 2));
  CHECK(c.width(4) == Rational(1, 16));
  CHECK(c.center_x(4) == doctest::Approx(13.5 / 16));
}

TEST_CASE("random per-cell patterns keep k cells per row") {
  const auto gen = random_pattern_generator(5, 3, 2, 11);
  for (int x = 0; x < 5; ++x) {
    const auto p = gen(CellIndex{1, x, x % 3});
    CHECK(validate_uniform_fibers(p) == 2);
    CHECK(p.cells == gen(CellIndex{1, x, x % 3}).cells);
  }
  const auto spec = CarpetSpec::generated(5, 3, 2, gen, 3, "random");
  CHECK(build_generation(spec, 3).size() == 216);
}

TEST_CASE("carpet JSON round trip") {
  const auto spec = default_spec(6);
  const auto doc = carpet_to_json(spec);
  CHECK(doc["pattern"] == nlohmann::json::parse("[[1,1],[3,1],[2,2],[4,2]]"));
  const auto back = carpet_from_json(doc);
  CHECK(back.k() == 2);
  CHECK(back.max_generation() == 6);
  CHECK(build_generation(back, 3) == build_generation(spec, 3));
  auto bad = doc;
  bad["k"] = 3;
  CHECK_THROWS_AS(carpet_from_json(bad), PatternError);
}

TEST_CASE("block affine graphs") {
  for (auto [k, ell] : {std::pair{2, 2}, std::pair{4, 3}}) {
    const auto spec = block_graph(k, ell);
    CHECK(validate_affine_spec(spec) == k);
    const auto g = build_affine_graph(spec, 2);
    CHECK(g.m == k * ell);
    CHECK(g.k == k);
    CHECK(g.function_like);
    CHECK(g.continuous);
    CHECK(g.cells.size() == static_cast<std::size_t>(ipow(k * ell, 2)));
    const auto carpet = affine_carpet(spec, 3);
    CHECK(build_generation(carpet, 3).size() == static_cast<std::size_t>(ipow(k * ell, 3)));
  }
  const auto doc = affine_to_json(block_graph(4, 3));
  CHECK(affine_from_json(doc).matrices.size() == 3);
}

TEST_CASE("approximate squares") {
  for (int n = 1; n <= 12; ++n) CHECK(approx_square_x_generation(4, 2, n) == n / 2);
  // floor(n log 3 / log 12), integer comparison against powers
  for (int n = 1; n <= 12; ++n) {
    int g = 0;
    while (std::pow(12.0, g + 1) <= std::pow(3.0, n) + 0.5) ++g;
    CHECK(approx_square_x_generation(12, 3, n) == g);
  }
  const auto spec = default_spec(6);
  std::uint64_t total = 0;
  for (const auto& q : approximate_squares(spec, 4)) {
    total += q.cells;
    CHECK(q.height == Rational(1, 16));
    CHECK(q.width == Rational(1, 16));
  }
  CHECK(total == 256);
}
