#pragma once

#include "cdlab/rational.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace cdlab {

class PatternError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Subset of the m x ell grid. Columns and rows are 0-based internally with
/// row 0 at the bottom; JSON uses 1-based [col, row] pairs.
struct Pattern {
  int m = 0;
  int ell = 0;
  std::vector<std::pair<int, int>> cells;

  Pattern() = default;
  Pattern(int m, int ell, std::vector<std::pair<int, int>> cells);

  bool contains(int col, int row) const;
  std::vector<int> row_counts() const;
  /// Sorted column indices per row.
  std::vector<std::vector<int>> columns_by_row() const;
};

/// Returns k when every row holds exactly k cells. k = m (the full grid) is
/// accepted.
int validate_uniform_fibers(const Pattern& p);

/// A generation-n rectangle [x m^-n, (x+1) m^-n] x [y ell^-n, (y+1) ell^-n].
struct CellIndex {
  int generation = 0;
  std::int64_t x = 0;
  std::int64_t y = 0;

  friend bool operator==(const CellIndex&, const CellIndex&) = default;
  friend auto operator<=>(const CellIndex&, const CellIndex&) = default;

  CellIndex child(int col, int row, int m, int ell) const;
  CellIndex ancestor(int generation, int m, int ell) const;
  /// Digit pairs (col, row), coarsest first.
  std::vector<std::pair<int, int>> digits(int m, int ell) const;
  std::string digit_string(int m, int ell) const;

  Rational x0(int m) const;
  Rational y0(int ell) const;
  Rational width(int m) const;
  Rational height(int ell) const;
  double center_x(int m) const;
  double center_y(int ell) const;
};

struct CellHash {
  std::size_t operator()(const CellIndex& c) const noexcept;
};

std::int64_t ipow(std::int64_t base, int exponent);

/// Chooses the pattern that subdivides a given cell.
using PatternGenerator = std::function<Pattern(const CellIndex& parent)>;

/// Uniform-fiber Bedford-McMullen construction. The pattern used to subdivide
/// a cell may be fixed, depend on the generation, or depend on the cell.
class CarpetSpec {
 public:
  static CarpetSpec fixed(Pattern pattern, int max_generation);
  static CarpetSpec sequence(std::vector<Pattern> patterns, int max_generation);
  static CarpetSpec generated(int m, int ell, int k, PatternGenerator generator, int max_generation,
                              std::string description = "generator");

  int m() const { return m_; }
  int ell() const { return ell_; }
  int k() const { return k_; }
  int max_generation() const { return max_generation_; }
  const std::string& source_kind() const { return kind_; }
  const std::optional<Pattern>& fixed_pattern() const { return fixed_; }
  const std::vector<Pattern>& patterns() const { return sequence_; }

  /// Pattern used to subdivide `parent`, checked for uniform fibers with k.
  Pattern pattern_for(const CellIndex& parent) const;
  std::vector<CellIndex> children(const CellIndex& parent) const;
  CarpetSpec with_max_generation(int n) const;

 private:
  CarpetSpec() = default;
  int m_ = 0, ell_ = 0, k_ = 0, max_generation_ = 0;
  std::string kind_;
  std::optional<Pattern> fixed_;
  std::vector<Pattern> sequence_;
  PatternGenerator generator_;
};

/// Per-cell random patterns with k cells per row, seeded from (seed, address).
PatternGenerator random_pattern_generator(int m, int ell, int k, std::uint64_t seed);

/// Generation-n cells sorted by (y, x). Exactly (k ell)^n of them.
std::vector<CellIndex> build_generation(const CarpetSpec& spec, int n);

struct Dimensions {
  double hausdorff = 0.0;
  double slice = 0.0;
};

Dimensions dim_formula(int m, int ell, int k);

/// Label matrix read top row first, as printed; entries 0 (empty) or a label.
struct LabelMatrix {
  int m = 0;
  int ell = 0;
  std::vector<std::vector<int>> rows_top_first;

  LabelMatrix() = default;
  explicit LabelMatrix(std::vector<std::vector<int>> rows_top_first);
  /// Label at (col, row) with row 0 at the bottom.
  int at(int col, int row) const;
  Pattern pattern() const;
};

struct AffineGraphSpec {
  std::vector<LabelMatrix> matrices;  // matrix j carries label j + 1
  int base = 1;
};

struct LabeledCell {
  CellIndex cell;
  int label = 0;
};

struct ContinuityViolation {
  int generation = 0;
  std::int64_t left_column = 0;
  std::int64_t right_column = 0;
  std::string reason;
};

struct AffineGraph {
  int m = 0;
  int ell = 0;
  int k = 0;
  std::vector<LabeledCell> cells;
  bool continuous = false;
  std::optional<ContinuityViolation> violation;
  /// Every column of every matrix holds exactly one label.
  bool function_like = false;
};

/// Checks labels and uniform fibers; returns the common k.
int validate_affine_spec(const AffineGraphSpec& spec);
AffineGraph build_affine_graph(const AffineGraphSpec& spec, int n);
/// Label of the cell (and of every cell on its branch) under the substitution.
int affine_label(const AffineGraphSpec& spec, const CellIndex& cell);
/// The affine-graph substitution as a per-cell carpet.
CarpetSpec affine_carpet(const AffineGraphSpec& spec, int max_generation);
/// The block matrices A_1, A_2, A_3 for m = k ell.
AffineGraphSpec block_graph(int k, int ell);

struct ApproximateSquare {
  int generation = 0;
  std::int64_t column = 0;  // width m^-floor(alpha n)
  std::int64_t row = 0;     // height ell^-n
  Rational x0, y0, width, height;
  std::uint64_t cells = 0;  // generation-n cells inside
};

int approx_square_x_generation(int m, int ell, int n);
/// Occupied approximate squares of generation n, sorted by (row, column).
std::vector<ApproximateSquare> approximate_squares(const CarpetSpec& spec, int n);

CarpetSpec carpet_from_json(const nlohmann::json& doc);
nlohmann::json carpet_to_json(const CarpetSpec& spec);
AffineGraphSpec affine_from_json(const nlohmann::json& doc);
nlohmann::json affine_to_json(const AffineGraphSpec& spec);
void write_cells_csv(std::ostream& out, const CarpetSpec& spec, const std::vector<CellIndex>& cells);

}  // namespace cdlab
