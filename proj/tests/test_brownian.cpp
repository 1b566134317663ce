#include "cdlab/brownian.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

using namespace cdlab;

namespace {

BrownianPath bm(std::uint64_t seed, int g, double t_end) {
  SimulateOptions o;
  o.t_end = t_end;
  return simulate(seed, std::ldexp(1.0, -2 * g), o);
}

}  // namespace

TEST_CASE("resolution parameter") {
  CHECK(resolution_generation(std::ldexp(1.0, -10)) == 5);
  CHECK(resolution_generation(1.0) == 0);
  CHECK_THROWS_AS(resolution_generation(0.3), PathError);
  CHECK_THROWS_AS(resolution_generation(std::ldexp(1.0, -3)), PathError);
}

TEST_CASE("simulation is reproducible and Gaussian") {
  const auto a = bm(42, 6, 16.0), b = bm(42, 6, 16.0), c = bm(43, 6, 16.0);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  CHECK(a.values.front() == 0.0);
  CHECK(a.steps() == 16 * 4096);
  double sum = 0, sq = 0;
  const auto n = static_cast<double>(a.steps());
  for (std::size_t i = 1; i < a.values.size(); ++i) {
    const double d = a.values[i] - a.values[i - 1];
    sum += d;
    sq += d * d;
  }
  // increments have mean 0 and variance dt; five-sigma bands
  CHECK(std::abs(sum / n) < 5 * std::sqrt(a.dt / n));
  CHECK(std::abs(sq / n / a.dt - 1.0) < 5 * std::sqrt(2.0 / n));
}

TEST_CASE("stopped paths end at the first crossing") {
  SimulateOptions o;
  o.stop_level = 0.5;
  const auto p = simulate(7, std::ldexp(1.0, -12), o);
  CHECK(p.values.back() >= 0.5);
  CHECK(*std::max_element(p.values.begin(), p.values.end() - 1) < 0.5);
  o.max_steps = 3;
  o.stop_level = 10.0;
  CHECK_THROWS_AS(simulate(7, std::ldexp(1.0, -12), o), PathError);
}

TEST_CASE("survival agrees with the simulated path") {
  const double dt = std::ldexp(1.0, -10);
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto p = bm(seed, 5, 1.0);
    const bool below = *std::max_element(p.values.begin(), p.values.end()) < 0.7;
    CHECK(survives_below(seed, dt, 0.7, 1.0) == below);
  }
}

TEST_CASE("interpolation, hitting and crossings") {
  const auto p = path_from_values(1.0, {0.0, 0.5, 1.5, 0.5, 2.0});
  CHECK(p.at(0.5) == doctest::Approx(0.25));
  CHECK(p.at(10.0) == 2.0);
  CHECK(*hitting_time(p, 1.0) == doctest::Approx(1.5));
  CHECK_FALSE(hitting_time(p, 3.0).has_value());
  const auto x = level_crossings(p, 1.0);
  REQUIRE(x.size() == 3);
  CHECK(x[1] == doctest::Approx(2.5));
  CHECK(x[2] == doctest::Approx(3.0 + 1.0 / 3.0));
}

TEST_CASE("dyadic bands are left-open") {
  CHECK(dyadic_band_index(0.5, 1) == 0);
  CHECK(dyadic_band_index(0.51, 1) == 1);
  CHECK(dyadic_band_index(0.0, 3) == -1);
  CHECK(dyadic_band_index(1.0 / 3.0, 2) == 1);
}

TEST_CASE("downcrossings of a zigzag") {
  // 0 -> 1 -> 0 three times
  std::vector<double> v;
  for (int rep = 0; rep < 3; ++rep) {
    for (int i = 0; i < 16; ++i) v.push_back(i / 16.0);
    for (int i = 16; i > 0; --i) v.push_back(i / 16.0);
  }
  v.push_back(0.0);
  const auto p = path_from_values(1.0 / 64, v);
  for (int n = 1; n <= 3; ++n)
    for (double a : {0.1, 0.4, 0.9}) CHECK(downcrossings(p, a, n, p.t_end()) == 3);
  CHECK(downcrossings(p, 0.4, 2, p.t_end() / 2) == 1);
}

TEST_CASE("graph box counts against brute force") {
  const auto p = bm(5, 7, 1.0);
  const std::vector<int> gens{2, 3, 4, 5, 6};
  const auto bc = graph_box_count(p, gens);
  for (std::size_t k = 0; k < gens.size(); ++k) {
    const int n = gens[k];
    const double s = std::ldexp(1.0, n);
    std::uint64_t count = 0;
    // column i covers samples with time in [i 2^-n, (i+1) 2^-n]
    const std::size_t per = p.steps() >> n;
    for (std::size_t i = 0; i < (std::size_t{1} << n); ++i) {
      double lo = 1e300, hi = -1e300;
      for (std::size_t j = i * per; j <= (i + 1) * per; ++j) {
        lo = std::min(lo, p.values[j]);
        hi = std::max(hi, p.values[j]);
      }
      count += static_cast<std::uint64_t>(std::floor(hi * s) - std::floor(lo * s) + 1);
    }
    CHECK(bc.counts[k] == count);
  }
  const std::vector<int> too_fine{8};
  CHECK_THROWS_AS(graph_box_count(p, too_fine), GeometryError);
}

TEST_CASE("slice box counts") {
  const auto p = bm(9, 8, 1.0);
  const std::vector<int> gens{2, 4, 6};
  const auto bc = slice_box_count(p, 0.1, gens);
  const auto x = level_crossings(p, 0.1);
  for (std::size_t k = 0; k < gens.size(); ++k) {
    std::set<long> boxes;
    for (double t : x) boxes.insert(static_cast<long>(std::floor(std::ldexp(t, gens[k]))));
    CHECK(bc.counts[k] == boxes.size());
  }
}

TEST_CASE("slow points: constant and steep paths") {
  const double dt = std::ldexp(1.0, -8);
  const auto flat = path_from_values(dt, std::vector<double>(400, 0.0));
  const auto slow = slow_point_counts(flat, 1.0, {2});
  CHECK(slow.interval_generation[0] == 3);
  CHECK(slow.counts[0] == 8);
  std::vector<double> ramp;
  for (int i = 0; i < 400; ++i) ramp.push_back(10.0 * i * dt);
  CHECK(slow_point_counts(path_from_values(dt, ramp), 1.0, {2}).counts[0] == 0);
  CHECK_THROWS_AS(slow_point_counts(flat, 0.5, {2}), PathError);
  CHECK_THROWS_AS(slow_point_counts(flat, 1.0, {5}), GeometryError);
  CHECK_THROWS_AS(slow_point_counts(path_from_values(dt, std::vector<double>(100, 0.0)), 1.0, {2}), PathError);
}

TEST_CASE("path CSV") {
  std::stringstream ss;
  write_path_csv(ss, path_from_values(0.5, {0.0, 1.0}));
  std::string header;
  std::getline(ss, header);
  CHECK(header == "t,W");
}

TEST_CASE("slow points against a direct window scan") {
  const int g = 6;
  const double dt = std::ldexp(1.0, -2 * g);
  bool partial = false;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto p = bm(seed, g, 1.5);
    for (int n : {2, 3, 4}) {
      const double a = std::ldexp(1.0, -n), s = std::exp2(-(n + 1.0));
      const int G = n + 1;
      const auto window = static_cast<std::size_t>(s / dt);
      std::set<long> hits;
      for (std::size_t i = 0; i <= static_cast<std::size_t>(1.0 / dt); ++i) {
        bool slow = true;
        for (std::size_t k = i; k <= i + window && slow; ++k) slow = std::abs(p.values[k] - p.values[i]) < a;
        if (slow) hits.insert(std::min(static_cast<long>(std::floor(std::ldexp(i * dt, G))), (1L << G) - 1));
      }
      CHECK(slow_point_counts(p, 1.0, {n}).counts[0] == hits.size());
      partial = partial || (!hits.empty() && hits.size() < (std::size_t{1} << G));
    }
  }
  CHECK(partial);
}
