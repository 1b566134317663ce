#include "cdlab/geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

using namespace cdlab;

namespace {

// Occupied generation-n boxes, counted by brute force.
std::size_t occupied(const std::vector<Point>& pts, int n) {
  std::set<std::pair<long, long>> boxes;
  const double s = std::ldexp(1.0, n);
  for (const auto& p : pts) boxes.insert({static_cast<long>(std::floor(p.x * s)), static_cast<long>(std::floor(p.y * s))});
  return boxes.size();
}

}  // namespace

TEST_CASE("dyadic intervals") {
  const auto a = DyadicInterval::containing(0.5, 1, true);
  CHECK(a.index() == 0);
  CHECK(a.contains(0.5));
  CHECK_FALSE(a.contains(0.0));
  const auto b = DyadicInterval::containing(0.5, 1, false);
  CHECK(b.index() == 1);
  CHECK(b.lower() == Rational(1, 2));
  CHECK(b.upper() == 1);
  CHECK(b.length() == doctest::Approx(0.5));
  CHECK(DyadicInterval::containing(0.3, 3, true).index() == 2);
}

TEST_CASE("least squares recovers a line") {
  std::vector<double> xs{1, 2, 3, 4, 5}, ys;
  for (double x : xs) ys.push_back(3.0 - 0.5 * x);
  const auto fit = least_squares(xs, ys);
  CHECK(fit.slope == doctest::Approx(-0.5));
  CHECK(fit.intercept == doctest::Approx(3.0));
}

TEST_CASE("box counts of a segment and a square") {
  std::vector<Point> line, square;
  const int N = 256;
  for (int i = 0; i < N; ++i) line.push_back({(i + 0.5) / N, (i + 0.5) / N});
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) square.push_back({(i + 0.5) / 64, (j + 0.5) / 64});
  const std::vector<int> gens{1, 2, 3, 4, 5};
  const auto bl = box_count_dim(PointCloud(line, 1.0 / N), gens);
  const auto bs = box_count_dim(PointCloud(square, 1.0 / 64), gens);
  for (std::size_t i = 0; i < gens.size(); ++i) {
    CHECK(bl.counts[i] == occupied(line, gens[i]));
    CHECK(bs.counts[i] == occupied(square, gens[i]));
  }
  CHECK(bl.slope == doctest::Approx(1.0));
  CHECK(bs.slope == doctest::Approx(2.0));
}

TEST_CASE("box counting refuses scales below the resolution") {
  PointCloud pc({{0, 0}, {1, 1}}, 0.25);
  const std::vector<int> gens{1, 2, 3};
  CHECK_THROWS_AS(box_count_dim(pc, gens), GeometryError);
  CHECK_THROWS_AS(PointCloud({{0, 0}}, 0.0), GeometryError);
}

TEST_CASE("default regression window") {
  CHECK(default_regression_gens(8) == std::vector<int>{2, 3, 4, 5, 6, 7});
}

TEST_CASE("snowflake metric") {
  PointCloud pc({{0, 0}, {0.25, 0}, {1, 0}}, 0.01);
  const auto s = snowflake(pc, 0.5);
  CHECK(s.distance(0, 1) == doctest::Approx(0.5));
  CHECK(s.distance(0, 2) == doctest::Approx(1.0));
  const auto twice = snowflake(s, 0.5);
  CHECK(twice.exponent() == doctest::Approx(0.25));
  CHECK(twice.distance(0, 1) == doctest::Approx(std::pow(0.25, 0.25)));
  CHECK(euclidean(pc).distance(1, 2) == doctest::Approx(0.75));
}

TEST_CASE("greedy packing of a snowflaked segment") {
  std::vector<Point> seg;
  const int N = 4096;
  for (int i = 0; i <= N; ++i) seg.push_back({static_cast<double>(i) / N, 0});
  const std::vector<int> gens{2, 3, 4};
  const auto e = box_count_dim(euclidean(PointCloud(seg, 1.0 / N)), gens);
  const auto s = box_count_dim(snowflake(PointCloud(seg, 1.0 / N), 0.5), gens);
  CHECK(e.slope == doctest::Approx(1.0).epsilon(0.1));
  CHECK(s.slope == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("quasisymmetric distortion of a snowflake is t^p") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<Point> pts;
  for (int i = 0; i < 30; ++i) pts.push_back({u(rng), u(rng)});
  const PointCloud pc(pts, 1e-9);
  const auto src = euclidean(pc);
  const auto tgt = snowflake(pc, 0.5);
  CHECK(qs_max_excess(src, tgt, [](double t) { return std::sqrt(t); }) <= 1e-12);
  // A smaller envelope is violated somewhere.
  CHECK(qs_max_excess(src, tgt, [](double t) { return 0.9 * std::sqrt(t); }) > 0);
  const auto prof = qs_distortion(src, src);
  for (const auto& s : prof.samples()) CHECK(s.bound <= s.t + 1e-12);
  CHECK(prof.eta(-1.0) == 0.0);
}

TEST_CASE("point cloud CSV round trip") {
  PointCloud pc({{0.1, 0.2}, {0.3, 0.4}}, 0.01);
  std::stringstream ss;
  write_point_cloud_csv(ss, pc);
  const auto back = read_point_cloud_csv(ss, 0.01);
  REQUIRE(back.size() == 2);
  CHECK(back.points()[1].y == 0.4);
  CHECK(relative_distance(pc, back) == doctest::Approx(0.0));
}
