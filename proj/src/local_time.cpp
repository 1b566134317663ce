#include "cdlab/local_time.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cdlab {

const LocalTimeField::Generation& LocalTimeField::generation(int n) const {
  for (const auto& g : gens)
    if (g.n == n) return g;
  throw GeometryError("generation " + std::to_string(n) + " not in local time field");
}

int LocalTimeField::finest() const {
  int best = 0;
  for (const auto& g : gens) best = std::max(best, g.n);
  return best;
}

std::uint64_t LocalTimeField::band_downcrossings(int n, std::int64_t i, double t) const {
  const auto& g = generation(n);
  const std::int64_t k = i - g.first_band;
  if (k < 0 || k >= static_cast<std::int64_t>(g.completions.size())) return 0;
  const auto& c = g.completions[static_cast<std::size_t>(k)];
  return static_cast<std::uint64_t>(std::upper_bound(c.begin(), c.end(), t) - c.begin());
}

std::uint64_t LocalTimeField::downcrossings(double a, int n, double t) const {
  return band_downcrossings(n, dyadic_band_index(a, n), t);
}

double LocalTimeField::local_time(double a, int n, double t) const {
  return std::ldexp(static_cast<double>(downcrossings(a, n, t)), -n + 1);
}

LocalTimeField local_time_field(const BrownianPath& path, const std::vector<int>& ns, double lo, double hi) {
  if (!(hi >= lo)) throw GeometryError("empty level range");
  if (path.values.size() < 2) throw PathError("path too short");
  LocalTimeField f;
  f.lo = lo;
  f.hi = hi;
  f.t_end = path.t_end();
  const auto& v = path.values;
  for (int n : ns) {
    if (std::ldexp(1.0, -n) < path.spatial_resolution() * (1 - 1e-12))
      throw GeometryError("generation " + std::to_string(n) + " is finer than the path resolution");
    LocalTimeField::Generation g;
    g.n = n;
    g.first_band = dyadic_band_index(lo, n);
    const std::int64_t last = dyadic_band_index(hi, n);
    const auto nb = static_cast<std::size_t>(last - g.first_band + 1);
    g.completions.resize(nb);
    const double scale = std::ldexp(1.0, n);
    // Band i = (i 2^-n, (i+1) 2^-n]; armed once its top has been reached.
    std::vector<char> armed(nb, 0);
    for (std::size_t k = 0; k < nb; ++k)
      armed[k] = std::ldexp(static_cast<double>(g.first_band + static_cast<std::int64_t>(k) + 1), -n) <= v[0];
    for (std::size_t s = 1; s < v.size(); ++s) {
      const double w0 = v[s - 1], w1 = v[s];
      if (w1 > w0) {
        // levels j 2^-n with w0 < level <= w1 arm band j - 1
        const auto j0 = static_cast<std::int64_t>(std::floor(w0 * scale)) + 1;
        const auto j1 = static_cast<std::int64_t>(std::floor(w1 * scale));
        for (std::int64_t j = j0; j <= j1; ++j) {
          const std::int64_t k = j - 1 - g.first_band;
          if (k >= 0 && k < static_cast<std::int64_t>(nb)) armed[static_cast<std::size_t>(k)] = 1;
        }
      } else if (w1 < w0) {
        // levels with w1 <= level < w0 complete band j when armed
        const auto j0 = static_cast<std::int64_t>(std::ceil(w1 * scale));
        const auto j1 = static_cast<std::int64_t>(std::ceil(w0 * scale)) - 1;
        for (std::int64_t j = j0; j <= j1; ++j) {
          const std::int64_t k = j - g.first_band;
          if (k < 0 || k >= static_cast<std::int64_t>(nb) || !armed[static_cast<std::size_t>(k)]) continue;
          const double level = std::ldexp(static_cast<double>(j), -n);
          g.completions[static_cast<std::size_t>(k)].push_back(path.time(s - 1) + path.dt * (w0 - level) / (w0 - w1));
          armed[static_cast<std::size_t>(k)] = 0;
        }
      }
    }
    f.gens.push_back(std::move(g));
  }
  return f;
}

double graph_measure(const LocalTimeField& f, int n, double x0, double x1, double y0, double y1) {
  if (x1 <= x0 || y1 <= y0) return 0.0;
  const auto& g = f.generation(n);
  const double t0 = std::max(0.0, x0), t1 = std::min(f.t_end, x1);
  if (t1 <= t0) return 0.0;
  const double h = std::ldexp(1.0, -n);
  double total = 0.0;
  for (std::size_t k = 0; k < g.completions.size(); ++k) {
    const double lo = h * static_cast<double>(g.first_band + static_cast<std::int64_t>(k));
    const double overlap = std::min(lo + h, y1) - std::max(lo, y0);
    if (overlap <= 0.0) continue;
    const auto& c = g.completions[k];
    // completions in (t0, t1]
    const auto d = std::upper_bound(c.begin(), c.end(), t1) - std::upper_bound(c.begin(), c.end(), t0);
    total += 2.0 * h * static_cast<double>(d) * overlap;
  }
  return total;
}

double graph_ball_mass(const LocalTimeField& f, int n, double x, double y, double r) {
  if (!(r > 0.0)) return 0.0;
  const auto& g = f.generation(n);
  const double h = std::ldexp(1.0, -n);
  double total = 0.0;
  for (std::size_t k = 0; k < g.completions.size(); ++k) {
    const double lo = h * static_cast<double>(g.first_band + static_cast<std::int64_t>(k));
    const double b0 = std::max(lo, y - r), b1 = std::min(lo + h, y + r);
    if (b1 <= b0) continue;
    const double dy = 0.5 * (b0 + b1) - y;
    const double half = std::sqrt(std::max(0.0, r * r - dy * dy));
    const auto& c = g.completions[k];
    const auto d = std::upper_bound(c.begin(), c.end(), x + half) - std::upper_bound(c.begin(), c.end(), x - half);
    total += 2.0 * h * static_cast<double>(d) * (b1 - b0);
  }
  return total;
}

HolderFit holder_exponent(const LocalTimeField& f, int n, double t, const std::vector<int>& scales) {
  HolderFit fit;
  const double h = std::ldexp(1.0, -n);
  std::vector<double> xs, ys;
  for (int k : scales) {
    if (k > n) throw GeometryError("Hölder scale finer than the band generation");
    const double delta = std::ldexp(1.0, -k);
    double sum = 0.0;
    std::size_t count = 0;
    // a at band tops of the 2^-n grid
    for (double a = std::ceil(f.lo / h) * h; a + delta <= f.hi + 1e-15; a += h) {
      const double d = f.local_time(a + delta, n, t) - f.local_time(a, n, t);
      sum += d * d;
      ++count;
    }
    if (count == 0) continue;
    const double rms = std::sqrt(sum / static_cast<double>(count));
    fit.scales.push_back(k);
    fit.rms.push_back(rms);
    if (rms > 0.0) {
      xs.push_back(-static_cast<double>(k));
      ys.push_back(std::log2(rms));
    }
  }
  if (xs.size() >= 2) fit.exponent = least_squares(xs, ys).slope;
  return fit;
}

}  // namespace cdlab
