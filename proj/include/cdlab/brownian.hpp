#pragma once

#include "cdlab/geometry.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

namespace cdlab {

class PathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Brownian values on the grid 0, dt, 2 dt, ...; linear between samples.
struct BrownianPath {
  std::uint64_t seed = 0;
  double dt = 0.0;
  std::vector<double> values;
  std::optional<double> stop_level;

  std::size_t steps() const { return values.empty() ? 0 : values.size() - 1; }
  double t_end() const { return dt * static_cast<double>(steps()); }
  double time(std::size_t i) const { return dt * static_cast<double>(i); }
  /// Linear interpolation; clamps outside [0, t_end].
  double at(double t) const;
  double spatial_resolution() const;
};

struct SimulateOptions {
  std::optional<double> t_end;
  /// Stop at the first grid crossing of this positive level.
  std::optional<double> stop_level;
  std::uint64_t max_steps = std::uint64_t{1} << 26;
};

/// dt must be 2^-2g for an integer g >= 0.
BrownianPath simulate(std::uint64_t seed, double dt, const SimulateOptions& opts);

/// Resolution parameter g with dt = 2^-2g; throws when dt is not of that form.
int resolution_generation(double dt);

/// Synthetic path from explicit samples (W(0) need not be 0).
BrownianPath path_from_values(double dt, std::vector<double> values);

/// Time of the first crossing of level c (linear interpolation), if any.
std::optional<double> hitting_time(const BrownianPath& path, double c);

/// Whether W stays below b on [0, t] at grid resolution (used for P(T_b > t)).
bool survives_below(std::uint64_t seed, double dt, double b, double t);

/// Dyadic interval (i 2^-n, (i+1) 2^-n] containing a: i = ceil(a 2^n) - 1.
std::int64_t dyadic_band_index(double a, int n);

/// Completed top-to-bottom traversals of the band containing a before t.
int downcrossings(const BrownianPath& path, double a, int n, double t);

/// Occupied dyadic boxes of the graph over [0, t_end] per generation: each
/// time column contributes the rows met by the interpolated path.
BoxCount graph_box_count(const BrownianPath& path, const std::vector<int>& gens);

/// Crossing times of level c, in order.
std::vector<double> level_crossings(const BrownianPath& path, double c);
/// Dyadic time intervals of generation n containing a crossing of level c.
BoxCount slice_box_count(const BrownianPath& path, double c, const std::vector<int>& gens);

struct SlowPointCounts {
  double alpha = 0.0;
  std::vector<int> n;
  std::vector<int> interval_generation;
  std::vector<std::uint64_t> counts;
};

/// For each n: generation-ceil(alpha (n+1)) dyadic intervals of [0, 1]
/// meeting A_n = {t : W stays within 2^-n of W(t) for longer than
/// 2^-alpha(n+1)}, decided on grid samples.
SlowPointCounts slow_point_counts(const BrownianPath& path, double alpha, const std::vector<int>& ns);

void write_path_csv(std::ostream& out, const BrownianPath& path);

}  // namespace cdlab
