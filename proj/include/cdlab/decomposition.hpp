#pragma once

#include "cdlab/brownian.hpp"

#include <cstdint>
#include <functional>
#include <vector>

#include <json.hpp>

namespace cdlab {

enum class LegKind { Up, Down, Merged, Tail };

const char* to_string(LegKind k);

/// One element: graph points over a time span whose heights lie in the
/// left-open band ((m-1)/2^n, m/2^n].  Merged elements carry the leg boundary
/// in `split`; their support is [start, split] and [split, end].
struct GraphElement {
  int generation = 0;
  std::int64_t band = 0;  // m, 1-based
  double start = 0.0, end = 0.0;
  double split = -1.0;    // < 0 unless merged
  double x_last = 0.0;    // last time the element is in its band
  LegKind kind = LegKind::Up;
  bool flat = false;
  double coverage = 0.0;  // fraction of the band met by the interpolated path
  std::int64_t parent = -1;
  // Children in the lower [0] and upper [1] child band: [child_begin, child_end).
  std::uint32_t child_begin[2] = {0, 0};
  std::uint32_t child_end[2] = {0, 0};

  double diam_x() const { return x_last - start; }
  double band_lo() const;
  double band_hi() const;
};

struct Decomposition {
  int n_max = 0;
  double t_end = 0.0;
  std::vector<std::vector<GraphElement>> gens;  // gens[n-1], sorted by (band, start)

  const std::vector<GraphElement>& generation(int n) const { return gens.at(static_cast<std::size_t>(n - 1)); }
  std::size_t flat_count(int n) const;
};

/// Stopping-time cascade on X = graph over [0, t_end] x [0, 1].  Throws
/// GeometryError when 2^-n_max is finer than the path resolution.
Decomposition decompose(const BrownianPath& path, int n_max);

/// flat iff diam(pi_x) >= 2^-n / (n ln 2).
bool is_flat(double diam_x, int n);

struct PartitionReport {
  bool disjoint = true;      // per band, same generation
  bool nested = true;        // child spans and bands inside the parent
  bool covered = true;       // every checked in-band sample owned by an element
  std::size_t checked_samples = 0;
  std::size_t uncovered = 0;
};

/// Samples are checked every `stride` grid points.
PartitionReport check_partition(const Decomposition& d, const BrownianPath& path, std::size_t stride = 1);

/// Picks one candidate (index into `candidates`) for a child band.
using ElementChooser =
    std::function<std::size_t(const Decomposition&, int generation, const std::vector<std::uint32_t>& candidates)>;

ElementChooser leftmost_chooser();
/// Smallest pi_x diameter, i.e. the steepest candidate.
ElementChooser narrowest_chooser();
ElementChooser random_chooser(std::uint64_t seed);

/// One selected element per band at each generation; node mass 2^-n.
struct VerticalCantorTree {
  int depth = 0;
  std::vector<std::vector<std::uint32_t>> nodes;  // per generation, one per band, band order
  double mass(int n) const;
};

/// Throws GeometryError (starvation) when a chosen element lacks a child band.
VerticalCantorTree extract_vertical_cantor(const Decomposition& d, int depth, const ElementChooser& choose);

/// 2^n nodes per generation, distinct bands, nested spans.
bool check_vertical_tree(const Decomposition& d, const VerticalCantorTree& tree);

/// Lower estimate of lambda_E(B((x,y), r)): band lengths of finest selected
/// elements whose bounding box lies inside the ball.
double lambda_ball_lower(const Decomposition& d, const VerticalCantorTree& tree, double x, double y, double r);

struct LambdaBallReport {
  std::size_t tests = 0;
  std::size_t passed = 0;  // lambda >= r / 3
  double fraction() const { return tests ? static_cast<double>(passed) / static_cast<double>(tests) : 0.0; }
};

/// Centres on selected finest elements, r log-uniform in [r_min, r_max].
LambdaBallReport lambda_ball_test(const Decomposition& d, const VerticalCantorTree& tree, const BrownianPath& path,
                                  std::size_t tests, double r_min, double r_max, std::uint64_t seed);

/// All ancestors from generation n0 down to the element are steep.
bool a_like(const Decomposition& d, int n, std::size_t index, int n0);

nlohmann::json decomposition_to_json(const Decomposition& d, int max_generation);

}  // namespace cdlab
