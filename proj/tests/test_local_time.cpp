#include "cdlab/local_time.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace cdlab;

namespace {

BrownianPath bm(std::uint64_t seed, int g, double t_end) {
  SimulateOptions o;
  o.t_end = t_end;
  return simulate(seed, std::ldexp(1.0, -2 * g), o);
}

// Time the interpolated path spends in [y0, y1], by fine subdivision.
double occupation(const BrownianPath& p, double y0, double y1) {
  double total = 0;
  const int sub = 16;
  for (std::size_t i = 1; i < p.values.size(); ++i)
    for (int k = 0; k < sub; ++k) {
      const double u = (k + 0.5) / sub;
      const double w = p.values[i - 1] + u * (p.values[i] - p.values[i - 1]);
      if (w >= y0 && w <= y1) total += p.dt / sub;
    }
  return total;
}

}  // namespace

TEST_CASE("field downcrossings match the direct count") {
  const auto p = bm(17, 7, 2.0);
  const auto f = local_time_field(p, {3, 5, 7}, -1.0, 1.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0), ut(0.0, 2.0);
  for (int i = 0; i < 60; ++i) {
    const double a = u(rng), t = ut(rng);
    for (int n : {3, 5, 7}) CHECK(f.downcrossings(a, n, t) == static_cast<std::uint64_t>(downcrossings(p, a, n, t)));
  }
  CHECK(f.finest() == 7);
  CHECK(f.downcrossings(5.0, 3, 2.0) == 0);
  CHECK(f.local_time(0.3, 5, 2.0) == std::ldexp(static_cast<double>(f.downcrossings(0.3, 5, 2.0)), -4));
  CHECK_THROWS_AS(f.generation(4), GeometryError);
  CHECK_THROWS_AS(local_time_field(p, {8}, 0.0, 1.0), GeometryError);
}

TEST_CASE("graph measure approximates occupation time") {
  // integral of L^a over [y0, y1] is the occupation time of [y0, y1]
  for (std::uint64_t seed : {2u, 3u, 4u}) {
    const auto p = bm(seed, 9, 1.0);
    const auto f = local_time_field(p, {7}, -3.0, 3.0);
    const double occ = occupation(p, -0.5, 0.5);
    if (occ < 0.1) continue;
    CHECK(graph_measure(f, 7, 0.0, 1.0, -0.5, 0.5) == doctest::Approx(occ).epsilon(0.15));
    // the ball containing everything carries the whole window
    CHECK(graph_ball_mass(f, 7, 0.5, 0.0, 10.0) == doctest::Approx(graph_measure(f, 7, 0.0, 1.0, -3.0, 3.0)));
  }
  const auto p = bm(2, 6, 1.0);
  const auto f = local_time_field(p, {5}, 0.0, 1.0);
  CHECK(graph_measure(f, 5, 0.5, 0.5, 0.0, 1.0) == 0.0);
  CHECK(graph_ball_mass(f, 5, 0.5, 0.5, 0.0) == 0.0);
}

TEST_CASE("zigzag local time is flat in the level") {
  std::vector<double> v;
  for (int rep = 0; rep < 4; ++rep) {
    for (int i = 0; i < 64; ++i) v.push_back(i / 64.0);
    for (int i = 64; i > 0; --i) v.push_back(i / 64.0);
  }
  v.push_back(0.0);
  const auto p = path_from_values(1.0 / 4096, v);
  const auto f = local_time_field(p, {4}, 0.05, 1.0);
  for (double a : {0.1, 0.5, 0.95}) CHECK(f.downcrossings(a, 4, p.t_end()) == 4);
  const auto h = holder_exponent(f, 4, p.t_end(), {1, 2, 3});
  for (double r : h.rms) CHECK(r == 0.0);
}

TEST_CASE("Hölder exponent of Brownian local time is near 1/2") {
  std::vector<double> exps;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = bm(seed, 9, 4.0);
    const auto f = local_time_field(p, {9}, -0.5, 0.5);
    const auto h = holder_exponent(f, 9, p.t_end(), {3, 4, 5, 6, 7});
    CHECK(h.scales.size() == 5);
    exps.push_back(h.exponent);
  }
  std::sort(exps.begin(), exps.end());
  CHECK(exps[2] > 0.25);
  CHECK(exps[2] < 0.75);
}
