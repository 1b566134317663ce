#pragma once

#include "cdlab/brownian.hpp"

#include <cstdint>
#include <vector>

namespace cdlab {

/// Downcrossing completion times for every dyadic band meeting [lo, hi],
/// for each requested generation.  D_n(a, t) and L = 2^(-n+1) D_n are
/// answered by binary search.
struct LocalTimeField {
  struct Generation {
    int n = 0;
    std::int64_t first_band = 0;
    std::vector<std::vector<double>> completions;  // per band, increasing
  };

  double lo = 0.0, hi = 0.0;
  double t_end = 0.0;
  std::vector<Generation> gens;

  const Generation& generation(int n) const;
  int finest() const;
  /// Zero for bands outside the field.
  std::uint64_t downcrossings(double a, int n, double t) const;
  double local_time(double a, int n, double t) const;
  /// D for band index i directly.
  std::uint64_t band_downcrossings(int n, std::int64_t i, double t) const;
};

/// Throws GeometryError when 2^-n is finer than the path's spatial resolution.
LocalTimeField local_time_field(const BrownianPath& path, const std::vector<int>& ns, double lo, double hi);

/// mu([x0,x1] x [y0,y1]): sum over bands of L increments times band overlap.
double graph_measure(const LocalTimeField& f, int n, double x0, double x1, double y0, double y1);

/// mu(B((x,y), r)): each band meeting the ball uses the time half-width at
/// the middle height of its overlap.
double graph_ball_mass(const LocalTimeField& f, int n, double x, double y, double r);

struct HolderFit {
  std::vector<int> scales;   // delta = 2^-k
  std::vector<double> rms;   // RMS of L(a + delta) - L(a)
  double exponent = 0.0;     // slope of log2 rms against log2 delta
};

/// Increments of a -> L^a(t) over a in [f.lo, f.hi - delta], a on the 2^-n grid.
HolderFit holder_exponent(const LocalTimeField& f, int n, double t, const std::vector<int>& scales);

}  // namespace cdlab
