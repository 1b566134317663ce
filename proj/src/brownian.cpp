#include "cdlab/brownian.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <unordered_set>

#include <boost/random/normal_distribution.hpp>

namespace cdlab {

double BrownianPath::at(double t) const {
  if (values.empty()) throw PathError("empty path");
  if (t <= 0.0) return values.front();
  if (t >= t_end()) return values.back();
  const double u = t / dt;
  const auto i = static_cast<std::size_t>(u);
  const double f = u - static_cast<double>(i);
  return values[i] + f * (values[i + 1] - values[i]);
}

double BrownianPath::spatial_resolution() const { return std::sqrt(dt); }

int resolution_generation(double dt) {
  if (!(dt > 0.0) || dt > 1.0) throw PathError("dt must lie in (0, 1]");
  const int e = std::ilogb(dt);
  if (std::ldexp(1.0, e) != dt || e % 2 != 0) throw PathError("dt must equal 2^-2g");
  return -e / 2;
}

BrownianPath simulate(std::uint64_t seed, double dt, const SimulateOptions& opts) {
  resolution_generation(dt);
  if (!opts.t_end && !opts.stop_level) throw PathError("simulate needs t_end or a stop level");
  if (opts.stop_level && !(*opts.stop_level > 0.0)) throw PathError("stop level must be positive");
  std::uint64_t limit = opts.max_steps;
  if (opts.t_end) {
    const auto steps = static_cast<std::uint64_t>(std::ceil(*opts.t_end / dt - 1e-9));
    if (steps > opts.max_steps) throw PathError("t_end exceeds the step budget");
    limit = steps;
  }
  BrownianPath path;
  path.seed = seed;
  path.dt = dt;
  path.stop_level = opts.stop_level;
  std::mt19937_64 rng(seed);
  boost::random::normal_distribution<double> normal(0.0, std::sqrt(dt));
  path.values.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(limit, std::uint64_t{1} << 22)) + 1);
  path.values.push_back(0.0);
  double w = 0.0;
  for (std::uint64_t i = 0; i < limit; ++i) {
    w += normal(rng);
    path.values.push_back(w);
    if (opts.stop_level && w >= *opts.stop_level) return path;
  }
  if (opts.stop_level && !opts.t_end)
    throw PathError("level " + std::to_string(*opts.stop_level) + " not reached within " +
                    std::to_string(opts.max_steps) + " steps (seed " + std::to_string(seed) + ")");
  return path;
}

BrownianPath path_from_values(double dt, std::vector<double> values) {
  if (values.size() < 2) throw PathError("a path needs at least two samples");
  if (!(dt > 0.0)) throw PathError("dt must be positive");
  BrownianPath p;
  p.dt = dt;
  p.values = std::move(values);
  return p;
}

bool survives_below(std::uint64_t seed, double dt, double b, double t) {
  std::mt19937_64 rng(seed);
  boost::random::normal_distribution<double> normal(0.0, std::sqrt(dt));
  const auto steps = static_cast<std::uint64_t>(std::llround(t / dt));
  double w = 0.0;
  for (std::uint64_t i = 0; i < steps; ++i) {
    w += normal(rng);
    if (w >= b) return false;
  }
  return true;
}

std::vector<double> level_crossings(const BrownianPath& path, double c) {
  std::vector<double> out;
  const auto& v = path.values;
  if (v.empty()) return out;
  if (v[0] == c) out.push_back(0.0);
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double w0 = v[i - 1], w1 = v[i];
    if ((w0 < c && c <= w1) || (w0 > c && c >= w1))
      out.push_back(path.time(i - 1) + path.dt * (c - w0) / (w1 - w0));
  }
  return out;
}

std::optional<double> hitting_time(const BrownianPath& path, double c) {
  const auto& v = path.values;
  if (!v.empty() && v[0] == c) return 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double w0 = v[i - 1], w1 = v[i];
    if ((w0 < c && c <= w1) || (w0 > c && c >= w1)) return path.time(i - 1) + path.dt * (c - w0) / (w1 - w0);
  }
  return std::nullopt;
}

std::int64_t dyadic_band_index(double a, int n) {
  return static_cast<std::int64_t>(std::ceil(std::ldexp(a, n))) - 1;
}

int downcrossings(const BrownianPath& path, double a, int n, double t) {
  const double lo = std::ldexp(static_cast<double>(dyadic_band_index(a, n)), -n);
  const double hi = lo + std::ldexp(1.0, -n);
  const auto& v = path.values;
  bool want_top = !(v[0] >= hi);
  int count = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (path.time(i - 1) > t) break;
    if (want_top) {
      if (v[i] >= hi) want_top = false;
    } else if (v[i] <= lo) {
      const double tc = path.time(i - 1) + path.dt * (v[i - 1] - lo) / (v[i - 1] - v[i]);
      if (tc > t) break;
      ++count;
      want_top = true;
    }
  }
  return count;
}

BoxCount graph_box_count(const BrownianPath& path, const std::vector<int>& gens) {
  if (gens.empty()) throw PathError("no generations");
  const int finest = *std::max_element(gens.begin(), gens.end());
  if (path.dt > std::ldexp(1.0, -finest) || path.spatial_resolution() > std::ldexp(1.0, -finest) * (1 + 1e-12))
    throw GeometryError("insufficient resolution for generation " + std::to_string(finest));
  const auto& v = path.values;
  // Column extremes at the finest generation, merged pairwise for coarser ones.
  const std::size_t per_col = static_cast<std::size_t>(std::llround(std::ldexp(1.0, -finest) / path.dt));
  const std::size_t cols = (path.steps() + per_col - 1) / per_col;
  std::vector<double> lo(cols, INFINITY), hi(cols, -INFINITY);
  for (std::size_t i = 1; i < v.size(); ++i) {
    const std::size_t c = (i - 1) / per_col;
    lo[c] = std::min({lo[c], v[i - 1], v[i]});
    hi[c] = std::max({hi[c], v[i - 1], v[i]});
  }
  std::vector<std::uint64_t> counts;
  for (int n : gens) {
    const std::size_t group = std::size_t{1} << (finest - n);
    std::uint64_t total = 0;
    for (std::size_t c0 = 0; c0 < cols; c0 += group) {
      double l = INFINITY, h = -INFINITY;
      for (std::size_t c = c0; c < std::min(cols, c0 + group); ++c) {
        l = std::min(l, lo[c]);
        h = std::max(h, hi[c]);
      }
      total += static_cast<std::uint64_t>(std::floor(std::ldexp(h, n)) - std::floor(std::ldexp(l, n))) + 1;
    }
    counts.push_back(total);
  }
  return fit_box_counts(gens, counts);
}

BoxCount slice_box_count(const BrownianPath& path, double c, const std::vector<int>& gens) {
  if (gens.empty()) throw PathError("no generations");
  const int finest = *std::max_element(gens.begin(), gens.end());
  if (path.dt > std::ldexp(1.0, -finest)) throw GeometryError("insufficient time resolution");
  const auto times = level_crossings(path, c);
  std::vector<std::uint64_t> counts;
  for (int n : gens) {
    std::unordered_set<std::int64_t> boxes;
    for (double t : times) boxes.insert(static_cast<std::int64_t>(std::floor(std::ldexp(t, n))));
    counts.push_back(boxes.size());
  }
  return fit_box_counts(gens, counts);
}

SlowPointCounts slow_point_counts(const BrownianPath& path, double alpha, const std::vector<int>& ns) {
  if (!(alpha > 2.0 / 3.0) || alpha > 2.0) throw PathError("alpha must lie in (2/3, 2]");
  SlowPointCounts out;
  out.alpha = alpha;
  const auto& v = path.values;
  const auto last_start = static_cast<std::size_t>(std::llround(1.0 / path.dt));
  for (int n : ns) {
    const double a = std::ldexp(1.0, -n);
    const double s = std::exp2(-alpha * (n + 1));
    const int g = static_cast<int>(std::ceil(alpha * (n + 1) - 1e-9));
    if (path.dt > std::ldexp(1.0, -g) || path.spatial_resolution() > a / 4)
      throw GeometryError("path does not resolve slow points at n = " + std::to_string(n));
    const auto window = static_cast<std::size_t>(std::floor(s / path.dt + 1e-9));
    if (last_start + window >= v.size()) throw PathError("path too short for slow-point windows");
    // Block extremes; a block of start points is skipped when the blocks its
    // windows fully contain already span 2a.
    const std::size_t b = std::max<std::size_t>(1, window / 8);
    const std::size_t end = last_start + window;  // last index used
    const std::size_t nblocks = end / b + 1;
    std::vector<double> bmax(nblocks, -INFINITY), bmin(nblocks, INFINITY);
    for (std::size_t k = 0; k <= end; ++k) {
      bmax[k / b] = std::max(bmax[k / b], v[k]);
      bmin[k / b] = std::min(bmin[k / b], v[k]);
    }
    const std::size_t full = (window + 1) / b - 1;  // blocks k+1 .. k+full lie inside every window
    std::unordered_set<std::int64_t> hit;
    const std::int64_t intervals = std::int64_t{1} << g;
    for (std::size_t blk = 0; blk * b <= last_start; ++blk) {
      double hi = -INFINITY, lo = INFINITY;
      for (std::size_t q = blk + 1; q <= blk + full && q < nblocks; ++q) {
        hi = std::max(hi, bmax[q]);
        lo = std::min(lo, bmin[q]);
      }
      if (hi - lo >= 2 * a) continue;
      for (std::size_t i = blk * b; i < (blk + 1) * b && i <= last_start; ++i) {
        double mx = -INFINITY, mn = INFINITY;
        for (std::size_t k = i; k <= i + window;) {
          if (k % b == 0 && k + b - 1 <= i + window) {
            mx = std::max(mx, bmax[k / b]);
            mn = std::min(mn, bmin[k / b]);
            k += b;
          } else {
            mx = std::max(mx, v[k]);
            mn = std::min(mn, v[k]);
            ++k;
          }
          if (mx - v[i] >= a || v[i] - mn >= a) break;
        }
        if (mx - v[i] < a && v[i] - mn < a) {
          auto idx = static_cast<std::int64_t>(std::floor(std::ldexp(path.time(i), g)));
          hit.insert(std::min(idx, intervals - 1));
        }
      }
    }
    out.n.push_back(n);
    out.interval_generation.push_back(g);
    out.counts.push_back(hit.size());
  }
  return out;
}

void write_path_csv(std::ostream& out, const BrownianPath& path) {
  out << "t,W\n";
  out.precision(17);
  for (std::size_t i = 0; i < path.values.size(); ++i) out << path.time(i) << ',' << path.values[i] << '\n';
}

}  // namespace cdlab
