#pragma once

#include "cdlab/rational.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdlab {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Point& a, const Point& b);

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An n-th generation dyadic interval [i 2^-n, (i+1) 2^-n], or its left-open
/// variant (i 2^-n, (i+1) 2^-n] used for height bands.
class DyadicInterval {
 public:
  DyadicInterval(int generation, std::int64_t index, bool left_open = false);

  /// The generation-n interval containing `a`; with left_open the interval is
  /// (lo, hi], otherwise [lo, hi).
  static DyadicInterval containing(double a, int generation, bool left_open);

  int generation() const { return generation_; }
  std::int64_t index() const { return index_; }
  bool left_open() const { return left_open_; }

  Rational lower() const;
  Rational upper() const;
  double lower_d() const;
  double upper_d() const;
  double length() const;
  bool contains(double a) const;

  friend bool operator==(const DyadicInterval&, const DyadicInterval&) = default;

 private:
  int generation_;
  std::int64_t index_;
  bool left_open_;
};

/// Finite sample of a compact planar set. `resolution` is the scale below
/// which the sample no longer represents the set.
class PointCloud {
 public:
  PointCloud(std::vector<Point> points, double resolution);

  const std::vector<Point>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  double resolution() const { return resolution_; }
  double diameter() const;

 private:
  std::vector<Point> points_;
  double resolution_;
};

/// The metric d^p on a point cloud. Exponent 1 is the Euclidean metric.
class SnowflakeMetric {
 public:
  explicit SnowflakeMetric(std::shared_ptr<const PointCloud> cloud, double exponent = 1.0);

  std::size_t size() const { return cloud_->size(); }
  double exponent() const { return exponent_; }
  const PointCloud& cloud() const { return *cloud_; }
  double distance(std::size_t i, std::size_t j) const;
  /// Resolution measured in this metric.
  double resolution() const;

 private:
  std::shared_ptr<const PointCloud> cloud_;
  double exponent_;
};

double relative_distance(const PointCloud& e, const PointCloud& f);

/// Euclidean metric of the cloud, i.e. snowflake(X, 1).
SnowflakeMetric euclidean(const PointCloud& x);
SnowflakeMetric snowflake(const PointCloud& x, double p);
/// Composition: snowflake(snowflake(X, p), q) == snowflake(X, p q).
SnowflakeMetric snowflake(const SnowflakeMetric& x, double q);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit least_squares(std::span<const double> xs, std::span<const double> ys);

struct BoxCount {
  std::vector<int> generations;
  std::vector<std::uint64_t> counts;
  /// Least-squares slope of log2 N(2^-n) against n.
  double slope = 0.0;
  double intercept = 0.0;
};

/// Regression window used when none is given: the two coarsest generations
/// and the finest one are dropped, leaving 2 .. finest-1.
std::vector<int> default_regression_gens(int finest_generation);

/// Occupied axis-aligned dyadic boxes per generation.
BoxCount box_count_dim(const PointCloud& x, std::span<const int> gens);
/// Greedy packing of metric balls of radius 2^-n.
BoxCount box_count_dim(const SnowflakeMetric& x, std::span<const int> gens);

/// Fits the slope of log2 counts against the generations.
BoxCount fit_box_counts(std::vector<int> gens, std::vector<std::uint64_t> counts);

struct DistortionSample {
  double t = 0.0;
  double bound = 0.0;
};

/// Sampled monotone envelope r <= eta(t) of a map's triple ratios.
class DistortionProfile {
 public:
  DistortionProfile() = default;
  explicit DistortionProfile(std::vector<DistortionSample> samples);

  const std::vector<DistortionSample>& samples() const { return samples_; }
  /// Step-function envelope: max recorded bound over samples with t' <= t,
  /// zero below the first sample.
  double eta(double t) const;

 private:
  std::vector<DistortionSample> samples_;
};

/// Distortion of the index pairing i -> i between two metrics of equal size.
/// Exact envelope over all ordered triples (x, y, z) with x != z.
DistortionProfile qs_distortion(const SnowflakeMetric& source, const SnowflakeMetric& target);

/// max over triples of r - eta(t); <= 0 iff the pairing is dominated by eta.
/// Streams the triples without storing them.
double qs_max_excess(const SnowflakeMetric& source, const SnowflakeMetric& target,
                     const std::function<double(double)>& eta);

PointCloud read_point_cloud_csv(std::istream& in, double resolution);
void write_point_cloud_csv(std::ostream& out, const PointCloud& cloud);
void write_distortion_csv(std::ostream& out, const DistortionProfile& profile);

}  // namespace cdlab
