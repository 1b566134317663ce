#include "cdlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace cdlab {

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

DyadicInterval::DyadicInterval(int generation, std::int64_t index, bool left_open)
    : generation_(generation), index_(index), left_open_(left_open) {
  if (generation < 0 || generation > 62) throw GeometryError("dyadic generation out of range");
}

DyadicInterval DyadicInterval::containing(double a, int generation, bool left_open) {
  const double scaled = std::ldexp(a, generation);
  const auto index = left_open ? static_cast<std::int64_t>(std::ceil(scaled)) - 1
                               : static_cast<std::int64_t>(std::floor(scaled));
  return DyadicInterval(generation, index, left_open);
}

Rational DyadicInterval::lower() const {
  return Rational(mpz_class(static_cast<long>(index_))) * inverse_power(2, generation_);
}

Rational DyadicInterval::upper() const {
  return Rational(mpz_class(static_cast<long>(index_ + 1))) * inverse_power(2, generation_);
}

double DyadicInterval::lower_d() const { return std::ldexp(static_cast<double>(index_), -generation_); }
double DyadicInterval::upper_d() const { return std::ldexp(static_cast<double>(index_ + 1), -generation_); }
double DyadicInterval::length() const { return std::ldexp(1.0, -generation_); }

bool DyadicInterval::contains(double a) const {
  const double lo = lower_d();
  const double hi = upper_d();
  return left_open_ ? (a > lo && a <= hi) : (a >= lo && a <= hi);
}

PointCloud::PointCloud(std::vector<Point> points, double resolution)
    : points_(std::move(points)), resolution_(resolution) {
  if (points_.empty()) throw GeometryError("point cloud must be nonempty");
  if (!(resolution_ > 0.0)) throw GeometryError("point cloud resolution must be positive");
}

double PointCloud::diameter() const {
  double best = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i)
    for (std::size_t j = i + 1; j < points_.size(); ++j)
      best = std::max(best, cdlab::distance(points_[i], points_[j]));
  return best;
}

SnowflakeMetric::SnowflakeMetric(std::shared_ptr<const PointCloud> cloud, double exponent)
    : cloud_(std::move(cloud)), exponent_(exponent) {
  if (!(exponent_ > 0.0) || exponent_ > 1.0)
    throw GeometryError("snowflake exponent must lie in (0, 1]");
}

double SnowflakeMetric::distance(std::size_t i, std::size_t j) const {
  const double d = cdlab::distance(cloud_->points()[i], cloud_->points()[j]);
  return exponent_ == 1.0 ? d : std::pow(d, exponent_);
}

double SnowflakeMetric::resolution() const {
  return exponent_ == 1.0 ? cloud_->resolution() : std::pow(cloud_->resolution(), exponent_);
}

double relative_distance(const PointCloud& e, const PointCloud& f) {
  const double de = e.diameter();
  const double df = f.diameter();
  if (de <= 0.0 || df <= 0.0) throw GeometryError("relative distance needs positive diameters");
  double dist = std::numeric_limits<double>::infinity();
  for (const auto& p : e.points())
    for (const auto& q : f.points()) dist = std::min(dist, distance(p, q));
  return dist / std::min(de, df);
}

SnowflakeMetric euclidean(const PointCloud& x) {
  return SnowflakeMetric(std::make_shared<const PointCloud>(x), 1.0);
}

SnowflakeMetric snowflake(const PointCloud& x, double p) {
  if (!(p > 0.0) || p > 1.0) throw GeometryError("snowflake exponent must lie in (0, 1]");
  return SnowflakeMetric(std::make_shared<const PointCloud>(x), p);
}

SnowflakeMetric snowflake(const SnowflakeMetric& x, double q) {
  if (!(q > 0.0) || q > 1.0) throw GeometryError("snowflake exponent must lie in (0, 1]");
  return SnowflakeMetric(std::make_shared<const PointCloud>(x.cloud()), x.exponent() * q);
}

LineFit least_squares(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw GeometryError("regression needs at least two points");
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw GeometryError("regression abscissae are all equal");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

std::vector<int> default_regression_gens(int finest_generation) {
  std::vector<int> gens;
  for (int n = 2; n <= finest_generation - 1; ++n) gens.push_back(n);
  return gens;
}

BoxCount fit_box_counts(std::vector<int> gens, std::vector<std::uint64_t> counts) {
  BoxCount out;
  out.generations = std::move(gens);
  out.counts = std::move(counts);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < out.generations.size(); ++i) {
    if (out.counts[i] == 0) continue;
    xs.push_back(out.generations[i]);
    ys.push_back(std::log2(static_cast<double>(out.counts[i])));
  }
  if (xs.size() >= 2) {
    const auto fit = least_squares(xs, ys);
    out.slope = fit.slope;
    out.intercept = fit.intercept;
  }
  return out;
}

namespace {

int max_generation(std::span<const int> gens) {
  if (gens.empty()) throw GeometryError("box counting needs at least one generation");
  return *std::max_element(gens.begin(), gens.end());
}

std::uint64_t pack(std::int64_t i, std::int64_t j) {
  return (static_cast<std::uint64_t>(i) << 32) ^ (static_cast<std::uint64_t>(j) & 0xffffffffu);
}

}  // namespace

BoxCount box_count_dim(const PointCloud& x, std::span<const int> gens) {
  const int finest = max_generation(gens);
  if (x.resolution() > std::ldexp(1.0, -finest))
    throw GeometryError("insufficient resolution for generation " + std::to_string(finest));
  std::vector<std::uint64_t> counts;
  std::unordered_set<std::uint64_t> boxes;
  for (int n : gens) {
    boxes.clear();
    boxes.reserve(x.size());
    for (const auto& p : x.points()) {
      const auto i = static_cast<std::int64_t>(std::floor(std::ldexp(p.x, n)));
      const auto j = static_cast<std::int64_t>(std::floor(std::ldexp(p.y, n)));
      boxes.insert(pack(i, j));
    }
    counts.push_back(boxes.size());
  }
  return fit_box_counts(std::vector<int>(gens.begin(), gens.end()), std::move(counts));
}

BoxCount box_count_dim(const SnowflakeMetric& x, std::span<const int> gens) {
  const int finest = max_generation(gens);
  if (x.resolution() > std::ldexp(1.0, -finest))
    throw GeometryError("insufficient resolution for generation " + std::to_string(finest));
  const auto& pts = x.cloud().points();
  std::vector<std::uint64_t> counts;
  for (int n : gens) {
    const double radius = std::ldexp(1.0, -n);
    // A metric ball of radius r is a Euclidean ball of radius r^(1/p).
    const double cell = std::pow(radius, 1.0 / x.exponent());
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid;
    std::uint64_t centers = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto ci = static_cast<std::int64_t>(std::floor(pts[i].x / cell));
      const auto cj = static_cast<std::int64_t>(std::floor(pts[i].y / cell));
      bool covered = false;
      for (std::int64_t di = -1; di <= 1 && !covered; ++di)
        for (std::int64_t dj = -1; dj <= 1 && !covered; ++dj) {
          auto it = grid.find(pack(ci + di, cj + dj));
          if (it == grid.end()) continue;
          for (std::size_t c : it->second)
            if (x.distance(i, c) <= radius) {
              covered = true;
              break;
            }
        }
      if (!covered) {
        grid[pack(ci, cj)].push_back(i);
        ++centers;
      }
    }
    counts.push_back(centers);
  }
  return fit_box_counts(std::vector<int>(gens.begin(), gens.end()), std::move(counts));
}

DistortionProfile::DistortionProfile(std::vector<DistortionSample> samples) : samples_(std::move(samples)) {
  std::sort(samples_.begin(), samples_.end(),
            [](const auto& a, const auto& b) { return a.t < b.t; });
  double running = 0.0;
  for (auto& s : samples_) {
    running = std::max(running, s.bound);
    s.bound = running;
  }
}

double DistortionProfile::eta(double t) const {
  auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                             [](double v, const DistortionSample& s) { return v < s.t; });
  if (it == samples_.begin()) return 0.0;
  return std::prev(it)->bound;
}

namespace {

std::vector<double> distance_matrix(const SnowflakeMetric& m) {
  const std::size_t n = m.size();
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d[i * n + j] = d[j * n + i] = m.distance(i, j);
  return d;
}

template <typename Visit>
void for_each_triple(const SnowflakeMetric& source, const SnowflakeMetric& target, Visit&& visit) {
  if (source.size() != target.size()) throw GeometryError("pairing needs clouds of equal size");
  if (source.size() < 3) throw GeometryError("distortion needs at least three points");
  const std::size_t n = source.size();
  const auto dx = distance_matrix(source);
  const auto dy = distance_matrix(target);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t z = 0; z < n; ++z) {
      if (z == x) continue;
      const double dxz = dx[x * n + z];
      const double dyz = dy[x * n + z];
      if (dxz == 0.0 || dyz == 0.0)
        throw GeometryError("coincident points " + std::to_string(x) + " and " + std::to_string(z));
      for (std::size_t y = 0; y < n; ++y) {
        if (y == x) continue;
        visit(dx[x * n + y] / dxz, dy[x * n + y] / dyz);
      }
    }
}

}  // namespace

DistortionProfile qs_distortion(const SnowflakeMetric& source, const SnowflakeMetric& target) {
  std::vector<DistortionSample> raw;
  for_each_triple(source, target, [&](double t, double r) { raw.push_back({t, r}); });
  DistortionProfile full(std::move(raw));
  // Keep only the points where the envelope changes.
  std::vector<DistortionSample> steps;
  for (const auto& s : full.samples()) {
    if (!steps.empty() && steps.back().t == s.t) {
      steps.back().bound = s.bound;
      continue;
    }
    if (!steps.empty() && steps.back().bound == s.bound) continue;
    steps.push_back(s);
  }
  return DistortionProfile(std::move(steps));
}

double qs_max_excess(const SnowflakeMetric& source, const SnowflakeMetric& target,
                     const std::function<double(double)>& eta) {
  double worst = -std::numeric_limits<double>::infinity();
  for_each_triple(source, target, [&](double t, double r) { worst = std::max(worst, r - eta(t)); });
  return worst;
}

PointCloud read_point_cloud_csv(std::istream& in, double resolution) {
  std::vector<Point> pts;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    Point p;
    if (!(fields >> p.x >> p.y)) {
      if (pts.empty()) continue;  // header row
      throw GeometryError("malformed point row: " + line);
    }
    pts.push_back(p);
  }
  return PointCloud(std::move(pts), resolution);
}

void write_point_cloud_csv(std::ostream& out, const PointCloud& cloud) {
  out << "x,y\n";
  out.precision(17);
  for (const auto& p : cloud.points()) out << p.x << ',' << p.y << '\n';
}

void write_distortion_csv(std::ostream& out, const DistortionProfile& profile) {
  out << "t,bound\n";
  out.precision(17);
  for (const auto& s : profile.samples()) out << s.t << ',' << s.bound << '\n';
}

}  // namespace cdlab
