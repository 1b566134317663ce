#pragma once

#include "cdlab/carpet.hpp"
#include "cdlab/geometry.hpp"
#include "cdlab/rational.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <unordered_map>
#include <vector>

namespace cdlab {

class MeasureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact masses on a tree of carpet cells.
class MassTree {
 public:
  struct Node {
    CellIndex cell;
    Rational mass;
    std::int64_t parent = -1;
    std::vector<std::size_t> children;
  };

  std::size_t add_root(const CellIndex& cell, const Rational& mass);
  std::size_t add_child(std::size_t parent, const CellIndex& cell, const Rational& mass);

  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(std::size_t i) const { return nodes_[i]; }
  std::size_t size() const { return nodes_.size(); }
  std::vector<std::size_t> generation(int n) const;
  std::optional<std::size_t> find(const CellIndex& cell) const;
  Rational mass_of(const CellIndex& cell) const;  // 0 when absent
  Rational total() const;

  /// Root mass 1, nonnegative masses, children summing exactly to parents.
  bool conserved() const;

 private:
  std::vector<Node> nodes_;
  std::unordered_map<CellIndex, std::size_t, CellHash> index_;
};

/// Every generation-j cell, j <= n, with mass (k ell)^-j.
MassTree carpet_measure(const CarpetSpec& spec, int n);

/// Fiber cells over the height a with mass k^-j. `a` must not be ell-adic.
MassTree slice_measure(const CarpetSpec& spec, const Rational& a, int n);

/// Slice mass of the deepest fiber cells lying inside the x-interval
/// [x0, x1]; exact for intervals that are unions of such cells.
Rational slice_mass_in(const MassTree& slice, const CarpetSpec& spec, const Rational& x0, const Rational& x1);

struct IdentityEntry {
  CellIndex cell;
  Rational expected;
  Rational computed;
  bool pass = false;
};

struct IdentityReport {
  std::vector<IdentityEntry> entries;
  bool all_pass() const;
  std::size_t failures() const;
};

/// mu(cell) against the integral of slice masses over heights, per cell of
/// generations 0..n, by exact summation over generation-n ell-adic bands.
IdentityReport check_disintegration(const CarpetSpec& spec, int n);

/// Pushforward of mu to the y-axis against the length of every ell-adic
/// interval of generation <= n.
IdentityReport check_pushforward(const CarpetSpec& spec, int n);

/// One chosen child per (parent, child row), for every chosen parent.
class VerticalSelection {
 public:
  using Chooser = std::function<std::size_t(const CellIndex& parent, int row, const std::vector<CellIndex>& candidates)>;

  VerticalSelection() = default;
  VerticalSelection(const CarpetSpec& spec, int depth, const Chooser& chooser);

  int depth() const { return depth_; }
  const std::map<CellIndex, std::vector<CellIndex>>& choices() const { return choices_; }
  void set_choice(const CellIndex& parent, std::vector<CellIndex> per_row);
  /// Selected cells of generation n, sorted by height.
  std::vector<CellIndex> selected(int n) const;
  /// Every chosen parent has exactly one valid child per row.
  void validate(const CarpetSpec& spec) const;

 private:
  int depth_ = 0;
  std::map<CellIndex, std::vector<CellIndex>> choices_;
};

VerticalSelection lowest_column_selection(const CarpetSpec& spec, int depth);
VerticalSelection random_selection(const CarpetSpec& spec, int depth, std::uint64_t seed);

/// lambda_E: selected generation-j cells carry ell^-j, every other cell 0.
MassTree vertical_lambda(const CarpetSpec& spec, const VerticalSelection& sel, int n);

/// Lower estimate of lambda_E(B(x, r)): total mass of selected cells of
/// generation `depth` lying entirely inside the closed ball. Exact rationals.
Rational vertical_lambda_inside(const CarpetSpec& spec, const VerticalSelection& sel, int depth,
                                const Rational& cx, const Rational& cy, const Rational& r);

/// Rooted tree of subsets with diameters; leaves carry sample points.
class HierarchicalSpace {
 public:
  struct Node {
    double diameter = 0.0;
    std::int64_t parent = -1;
    std::vector<std::size_t> children;
    std::vector<Point> samples;  // leaves only
  };

  std::size_t add_root(double diameter);
  std::size_t add_child(std::size_t parent, double diameter);
  void add_sample(std::size_t leaf, Point p);

  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(std::size_t i) const { return nodes_[i]; }
  std::size_t size() const { return nodes_.size(); }
  std::int64_t sibling(std::size_t i) const;  // binary nodes only, else -1
  /// Path of child positions from the root to node i.
  std::vector<std::size_t> path_to(std::size_t i) const;
  std::vector<std::size_t> leaves() const;
  std::size_t depth(std::size_t i) const;

 private:
  std::vector<Node> nodes_;
};

/// Child mass = parent mass * diam(child)^alpha / sum over siblings.
std::vector<double> alpha_measure(const HierarchicalSpace& space, double alpha);

/// Largest mass / diam^alpha over nodes with positive diameter.
double alpha_ratio_sup(const HierarchicalSpace& space, const std::vector<double>& mass, double alpha);

/// Card{E : E inside B(x, r), parent of E not inside}, the root counting
/// when inside. Inclusion is decided on leaf samples.
int flatness_constant(const HierarchicalSpace& space, Point x, double r);

/// The selected cells of a vertical selection as a hierarchical space, with
/// the centres of the deepest cells as samples.
HierarchicalSpace selection_space(const CarpetSpec& spec, const VerticalSelection& sel);

/// Binary tree whose node diameters follow random fractions satisfying
/// child >= parent/3 and f1^alpha + f2^alpha >= 1 via the (1/3, eps) rule.
HierarchicalSpace random_third_tree(int depth, double alpha, double eps, std::mt19937_64& rng);
/// Largest eps with (1/3)^alpha + (2/3)^alpha (1 - eps)^alpha >= 1.
double max_third_eps(double alpha);

struct DoublingReport {
  double max_ratio = 0.0;
  std::size_t balls = 0;
  bool neighbor_bound_holds = false;
  /// Generation of the squares used for the neighbor check.
  std::vector<int> neighbor_generations;
};

struct Ball {
  double x = 0.0, y = 0.0, r = 0.0;
};

/// mu(B(x, r)) / mu(B(x, r/2)) with mu(B) estimated by the mass of
/// generation-`fine` approximate squares whose centres lie in B.
DoublingReport check_doubling(const CarpetSpec& spec, int fine, const std::vector<Ball>& balls);
/// Balls centred at occupied fine squares with radius in [4 side, 1].
std::vector<Ball> sample_doubling_balls(const CarpetSpec& spec, int fine, std::size_t count, std::uint64_t seed);
/// mu(Q~) <= 9 mu(Q) for every occupied approximate square of generation n.
bool check_neighbor_bound(const CarpetSpec& spec, int n);

void write_mass_tree_csv(std::ostream& out, const CarpetSpec& spec, const MassTree& tree);

}  // namespace cdlab
