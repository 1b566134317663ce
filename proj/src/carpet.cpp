#include "cdlab/carpet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_map>

namespace cdlab {

Pattern::Pattern(int m_, int ell_, std::vector<std::pair<int, int>> cells_)
    : m(m_), ell(ell_), cells(std::move(cells_)) {
  if (m < 2) throw PatternError("pattern needs m > 1");
  if (ell < 1) throw PatternError("pattern needs ell >= 1");
  for (auto [c, r] : cells)
    if (c < 0 || c >= m || r < 0 || r >= ell)
      throw PatternError("pattern cell (" + std::to_string(c + 1) + "," + std::to_string(r + 1) +
                         ") outside the " + std::to_string(m) + "x" + std::to_string(ell) + " grid");
  std::sort(cells.begin(), cells.end(), [](auto a, auto b) {
    return a.second != b.second ? a.second < b.second : a.first < b.first;
  });
  if (std::adjacent_find(cells.begin(), cells.end()) != cells.end())
    throw PatternError("pattern lists a cell twice");
}

bool Pattern::contains(int col, int row) const {
  return std::find(cells.begin(), cells.end(), std::pair{col, row}) != cells.end();
}

std::vector<int> Pattern::row_counts() const {
  std::vector<int> counts(ell, 0);
  for (auto [c, r] : cells) ++counts[r];
  return counts;
}

std::vector<std::vector<int>> Pattern::columns_by_row() const {
  std::vector<std::vector<int>> rows(ell);
  for (auto [c, r] : cells) rows[r].push_back(c);
  for (auto& r : rows) std::sort(r.begin(), r.end());
  return rows;
}

int validate_uniform_fibers(const Pattern& p) {
  if (p.cells.empty()) throw PatternError("empty pattern");
  const auto counts = p.row_counts();
  if (std::all_of(counts.begin(), counts.end(), [&](int c) { return c == counts[0]; }) && counts[0] > 0)
    return counts[0];
  // Offending rows: those off the unique most common count, or all rows when
  // no count dominates.
  std::map<int, int> freq;
  for (int c : counts) ++freq[c];
  int best = -1, best_freq = 0;
  bool unique = false;
  for (auto [c, f] : freq) {
    if (f > best_freq) {
      best = c;
      best_freq = f;
      unique = true;
    } else if (f == best_freq) {
      unique = false;
    }
  }
  std::ostringstream msg;
  msg << "non-uniform fibers; offending rows:";
  for (int r = 0; r < p.ell; ++r)
    if (!unique || counts[r] != best || counts[r] == 0) msg << " " << r + 1 << " (" << counts[r] << " cells)";
  throw PatternError(msg.str());
}

std::int64_t ipow(std::int64_t base, int exponent) {
  std::int64_t out = 1;
  for (int i = 0; i < exponent; ++i) {
    if (out > std::numeric_limits<std::int64_t>::max() / base) throw PatternError("cell index overflow");
    out *= base;
  }
  return out;
}

CellIndex CellIndex::child(int col, int row, int m, int ell) const {
  return {generation + 1, x * m + col, y * ell + row};
}

CellIndex CellIndex::ancestor(int g, int m, int ell) const {
  if (g > generation || g < 0) throw PatternError("ancestor generation out of range");
  const int up = generation - g;
  return {g, x / ipow(m, up), y / ipow(ell, up)};
}

std::vector<std::pair<int, int>> CellIndex::digits(int m, int ell) const {
  std::vector<std::pair<int, int>> out(generation);
  std::int64_t xx = x, yy = y;
  for (int i = generation - 1; i >= 0; --i) {
    out[i] = {static_cast<int>(xx % m), static_cast<int>(yy % ell)};
    xx /= m;
    yy /= ell;
  }
  return out;
}

std::string CellIndex::digit_string(int m, int ell) const {
  std::string s;
  for (auto [c, r] : digits(m, ell)) {
    if (!s.empty()) s += '.';
    s += std::to_string(c + 1) + ':' + std::to_string(r + 1);
  }
  return s.empty() ? "root" : s;
}

Rational CellIndex::x0(int m) const { return Rational(mpz_class(static_cast<long>(x))) * inverse_power(m, generation); }
Rational CellIndex::y0(int ell) const { return Rational(mpz_class(static_cast<long>(y))) * inverse_power(ell, generation); }
Rational CellIndex::width(int m) const { return inverse_power(m, generation); }
Rational CellIndex::height(int ell) const { return inverse_power(ell, generation); }

double CellIndex::center_x(int m) const {
  return (static_cast<double>(x) + 0.5) / std::pow(static_cast<double>(m), generation);
}
double CellIndex::center_y(int ell) const {
  return (static_cast<double>(y) + 0.5) / std::pow(static_cast<double>(ell), generation);
}

std::size_t CellHash::operator()(const CellIndex& c) const noexcept {
  std::uint64_t h = static_cast<std::uint64_t>(c.generation) * 0x9E3779B97F4A7C15ull;
  h ^= static_cast<std::uint64_t>(c.x) + 0x632BE59BD9B4E019ull + (h << 6) + (h >> 2);
  h ^= static_cast<std::uint64_t>(c.y) + 0x85157AF5ull + (h << 6) + (h >> 2);
  return h;
}

namespace {

void check_dims(int m, int ell, int k) {
  if (m < 2) throw PatternError("m must exceed 1");
  if (ell < 2 || ell >= m) throw PatternError("ell must lie in (1, m)");
  if (k < 1 || k > m) throw PatternError("k must lie in [1, m]");
}

}  // namespace

CarpetSpec CarpetSpec::fixed(Pattern pattern, int max_generation) {
  CarpetSpec s;
  s.k_ = validate_uniform_fibers(pattern);
  s.m_ = pattern.m;
  s.ell_ = pattern.ell;
  check_dims(s.m_, s.ell_, s.k_);
  s.max_generation_ = max_generation;
  s.kind_ = "fixed";
  s.fixed_ = std::move(pattern);
  return s;
}

CarpetSpec CarpetSpec::sequence(std::vector<Pattern> patterns, int max_generation) {
  if (patterns.empty()) throw PatternError("pattern sequence is empty");
  if (static_cast<int>(patterns.size()) < max_generation)
    throw PatternError("pattern sequence shorter than max_generation");
  CarpetSpec s;
  s.m_ = patterns[0].m;
  s.ell_ = patterns[0].ell;
  s.k_ = validate_uniform_fibers(patterns[0]);
  check_dims(s.m_, s.ell_, s.k_);
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    const auto& p = patterns[i];
    if (p.m != s.m_ || p.ell != s.ell_ || validate_uniform_fibers(p) != s.k_)
      throw PatternError("pattern " + std::to_string(i + 1) + " disagrees with (m, ell, k) of the first");
  }
  s.max_generation_ = max_generation;
  s.kind_ = "sequence";
  s.sequence_ = std::move(patterns);
  return s;
}

CarpetSpec CarpetSpec::generated(int m, int ell, int k, PatternGenerator generator, int max_generation,
                                 std::string description) {
  check_dims(m, ell, k);
  CarpetSpec s;
  s.m_ = m;
  s.ell_ = ell;
  s.k_ = k;
  s.max_generation_ = max_generation;
  s.kind_ = std::move(description);
  s.generator_ = std::move(generator);
  return s;
}

Pattern CarpetSpec::pattern_for(const CellIndex& parent) const {
  if (fixed_) return *fixed_;
  if (!sequence_.empty()) {
    if (parent.generation >= static_cast<int>(sequence_.size()))
      throw PatternError("no pattern for generation " + std::to_string(parent.generation + 1));
    return sequence_[parent.generation];
  }
  Pattern p = generator_(parent);
  int k = 0;
  try {
    k = validate_uniform_fibers(p);
  } catch (const PatternError& e) {
    throw PatternError("generator failure at cell " + parent.digit_string(m_, ell_) + ": " + e.what());
  }
  if (p.m != m_ || p.ell != ell_ || k != k_)
    throw PatternError("generator failure at cell " + parent.digit_string(m_, ell_) +
                       ": pattern does not match (m, ell, k)");
  return p;
}

std::vector<CellIndex> CarpetSpec::children(const CellIndex& parent) const {
  const Pattern p = pattern_for(parent);
  std::vector<CellIndex> out;
  out.reserve(p.cells.size());
  for (auto [c, r] : p.cells) out.push_back(parent.child(c, r, m_, ell_));
  return out;
}

CarpetSpec CarpetSpec::with_max_generation(int n) const {
  if (!sequence_.empty() && n > static_cast<int>(sequence_.size()))
    throw PatternError("pattern sequence shorter than max_generation");
  CarpetSpec s = *this;
  s.max_generation_ = n;
  return s;
}

PatternGenerator random_pattern_generator(int m, int ell, int k, std::uint64_t seed) {
  check_dims(m, ell, k);
  return [=](const CellIndex& parent) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(parent.generation), static_cast<std::uint32_t>(parent.x),
                      static_cast<std::uint32_t>(parent.x >> 32), static_cast<std::uint32_t>(parent.y),
                      static_cast<std::uint32_t>(parent.y >> 32)};
    std::mt19937_64 rng(seq);
    std::vector<std::pair<int, int>> cells;
    std::vector<int> cols(m);
    for (int r = 0; r < ell; ++r) {
      std::iota(cols.begin(), cols.end(), 0);
      std::shuffle(cols.begin(), cols.end(), rng);
      for (int i = 0; i < k; ++i) cells.emplace_back(cols[i], r);
    }
    return Pattern(m, ell, std::move(cells));
  };
}

std::vector<CellIndex> build_generation(const CarpetSpec& spec, int n) {
  if (n < 0) throw PatternError("negative generation");
  if (n > spec.max_generation())
    throw PatternError("generation " + std::to_string(n) + " exceeds max_generation " +
                       std::to_string(spec.max_generation()));
  std::vector<CellIndex> level{CellIndex{}};
  for (int g = 0; g < n; ++g) {
    std::vector<CellIndex> next;
    next.reserve(level.size() * static_cast<std::size_t>(spec.k() * spec.ell()));
    for (const auto& c : level)
      for (const auto& ch : spec.children(c)) next.push_back(ch);
    level = std::move(next);
  }
  std::sort(level.begin(), level.end(), [](const CellIndex& a, const CellIndex& b) {
    return a.y != b.y ? a.y < b.y : a.x < b.x;
  });
  return level;
}

Dimensions dim_formula(int m, int ell, int k) {
  check_dims(m, ell, k);
  const double d = std::log(static_cast<double>(k)) / std::log(static_cast<double>(m));
  return {1.0 + d, d};
}

LabelMatrix::LabelMatrix(std::vector<std::vector<int>> rows) : rows_top_first(std::move(rows)) {
  if (rows_top_first.empty() || rows_top_first[0].empty()) throw PatternError("empty label matrix");
  ell = static_cast<int>(rows_top_first.size());
  m = static_cast<int>(rows_top_first[0].size());
  for (const auto& r : rows_top_first)
    if (static_cast<int>(r.size()) != m) throw PatternError("ragged label matrix");
}

int LabelMatrix::at(int col, int row) const { return rows_top_first[ell - 1 - row][col]; }

Pattern LabelMatrix::pattern() const {
  std::vector<std::pair<int, int>> cells;
  for (int r = 0; r < ell; ++r)
    for (int c = 0; c < m; ++c)
      if (at(c, r) != 0) cells.emplace_back(c, r);
  return Pattern(m, ell, std::move(cells));
}

int validate_affine_spec(const AffineGraphSpec& spec) {
  if (spec.matrices.empty()) throw PatternError("affine graph needs at least one matrix");
  const int labels = static_cast<int>(spec.matrices.size());
  if (spec.base < 1 || spec.base > labels) throw PatternError("base label is not defined");
  const int m = spec.matrices[0].m, ell = spec.matrices[0].ell;
  int k = -1;
  for (int j = 0; j < labels; ++j) {
    const auto& a = spec.matrices[j];
    if (a.m != m || a.ell != ell) throw PatternError("matrices differ in shape");
    for (const auto& row : a.rows_top_first)
      for (int v : row)
        if (v < 0 || v > labels) throw PatternError("label " + std::to_string(v) + " is not defined");
    int kj = 0;
    try {
      kj = validate_uniform_fibers(a.pattern());
    } catch (const PatternError& e) {
      throw PatternError("matrix " + std::to_string(j + 1) + ": " + e.what());
    }
    if (k >= 0 && kj != k) throw PatternError("matrices disagree on k");
    k = kj;
  }
  return k;
}

int affine_label(const AffineGraphSpec& spec, const CellIndex& cell) {
  const int m = spec.matrices[0].m, ell = spec.matrices[0].ell;
  int label = spec.base;
  for (auto [c, r] : cell.digits(m, ell)) {
    label = spec.matrices[label - 1].at(c, r);
    if (label == 0) throw PatternError("cell " + cell.digit_string(m, ell) + " is not in the graph");
  }
  return label;
}

AffineGraph build_affine_graph(const AffineGraphSpec& spec, int n) {
  AffineGraph g;
  g.k = validate_affine_spec(spec);
  g.m = spec.matrices[0].m;
  g.ell = spec.matrices[0].ell;
  g.function_like = std::all_of(spec.matrices.begin(), spec.matrices.end(), [&](const LabelMatrix& a) {
    for (int c = 0; c < a.m; ++c) {
      int count = 0;
      for (int r = 0; r < a.ell; ++r) count += a.at(c, r) != 0;
      if (count != 1) return false;
    }
    return true;
  });

  std::vector<LabeledCell> level{{CellIndex{}, spec.base}};
  g.continuous = true;
  for (int gen = 1; gen <= n; ++gen) {
    std::vector<LabeledCell> next;
    for (const auto& lc : level) {
      const auto& a = spec.matrices[lc.label - 1];
      for (int r = 0; r < g.ell; ++r)
        for (int c = 0; c < g.m; ++c)
          if (int lab = a.at(c, r); lab != 0) next.push_back({lc.cell.child(c, r, g.m, g.ell), lab});
    }
    level = std::move(next);
    if (!g.continuous) continue;

    // Each column: one contiguous run of rows; adjacent closed runs meet.
    const std::int64_t columns = ipow(g.m, gen);
    std::vector<std::int64_t> lo(columns, std::numeric_limits<std::int64_t>::max()), hi(columns, -1), count(columns, 0);
    for (const auto& lc : level) {
      lo[lc.cell.x] = std::min(lo[lc.cell.x], lc.cell.y);
      hi[lc.cell.x] = std::max(hi[lc.cell.x], lc.cell.y);
      ++count[lc.cell.x];
    }
    for (std::int64_t x = 0; x < columns && g.continuous; ++x) {
      if (count[x] == 0) {
        g.violation = ContinuityViolation{gen, x, x, "empty column"};
      } else if (hi[x] - lo[x] + 1 != count[x]) {
        g.violation = ContinuityViolation{gen, x, x, "column rows are not contiguous"};
      } else if (x + 1 < columns && count[x + 1] > 0 && (hi[x] + 1 < lo[x + 1] || hi[x + 1] + 1 < lo[x])) {
        g.violation = ContinuityViolation{gen, x, x + 1, "adjacent columns do not meet"};
      }
      if (g.violation) g.continuous = false;
    }
  }
  g.cells = std::move(level);
  std::sort(g.cells.begin(), g.cells.end(), [](const LabeledCell& a, const LabeledCell& b) {
    return a.cell.y != b.cell.y ? a.cell.y < b.cell.y : a.cell.x < b.cell.x;
  });
  return g;
}

CarpetSpec affine_carpet(const AffineGraphSpec& spec, int max_generation) {
  const int k = validate_affine_spec(spec);
  const int m = spec.matrices[0].m, ell = spec.matrices[0].ell;
  std::vector<Pattern> by_label;
  for (const auto& a : spec.matrices) by_label.push_back(a.pattern());
  auto gen = [spec, by_label](const CellIndex& parent) { return by_label[affine_label(spec, parent) - 1]; };
  return CarpetSpec::generated(m, ell, k, gen, max_generation, "affine-graph");
}

AffineGraphSpec block_graph(int k, int ell) {
  if (k < 1 || ell < 2) throw PatternError("block graph needs k >= 1 and ell >= 2");
  const int m = k * ell;
  // Built bottom-up (row 0 = bottom), then flipped to top-first.
  std::vector<std::vector<int>> a1(ell, std::vector<int>(m, 0)), a2 = a1, a3 = a1;
  for (int r = 0; r < ell; ++r) {
    a1[r][r] = 2;
    // D_{k-1} blocks after the first ell columns, starting at the top row.
    const int top_index = ell - 1 - r;
    for (int i = 0; i < k - 1; ++i) a1[r][ell + top_index * (k - 1) + i] = i == 0 ? 3 : 1;
    for (int i = 0; i < k; ++i) a2[r][r * k + i] = i == k - 1 ? 2 : 1;
    for (int i = 0; i < k; ++i) a3[r][top_index * k + i] = i == 0 ? 3 : 1;
  }
  auto flip = [](std::vector<std::vector<int>> rows) {
    std::reverse(rows.begin(), rows.end());
    return LabelMatrix(std::move(rows));
  };
  return AffineGraphSpec{{flip(a1), flip(a2), flip(a3)}, 1};
}

int approx_square_x_generation(int m, int ell, int n) {
  // floor(alpha n) with alpha = log ell / log m, computed in integers.
  int g = 0;
  mpz_class lhs = m, rhs;
  mpz_ui_pow_ui(rhs.get_mpz_t(), static_cast<unsigned long>(ell), static_cast<unsigned long>(n));
  while (lhs <= rhs) {
    ++g;
    lhs *= m;
  }
  return g;
}

std::vector<ApproximateSquare> approximate_squares(const CarpetSpec& spec, int n) {
  if (n < 1) throw PatternError("approximate squares need n >= 1");
  const int gx = approx_square_x_generation(spec.m(), spec.ell(), n);
  const std::int64_t shrink = ipow(spec.m(), n - gx);
  std::map<std::pair<std::int64_t, std::int64_t>, std::uint64_t> counts;  // (row, column)
  for (const auto& c : build_generation(spec, n)) ++counts[{c.y, c.x / shrink}];
  std::vector<ApproximateSquare> out;
  out.reserve(counts.size());
  const Rational w = inverse_power(spec.m(), gx), h = inverse_power(spec.ell(), n);
  for (const auto& [key, count] : counts) {
    ApproximateSquare q;
    q.generation = n;
    q.row = key.first;
    q.column = key.second;
    q.width = w;
    q.height = h;
    q.x0 = Rational(mpz_class(static_cast<long>(q.column))) * w;
    q.y0 = Rational(mpz_class(static_cast<long>(q.row))) * h;
    q.cells = count;
    out.push_back(std::move(q));
  }
  return out;
}

namespace {

Pattern pattern_from_json(int m, int ell, const nlohmann::json& arr) {
  std::vector<std::pair<int, int>> cells;
  for (const auto& p : arr) cells.emplace_back(p.at(0).get<int>() - 1, p.at(1).get<int>() - 1);
  return Pattern(m, ell, std::move(cells));
}

nlohmann::json pattern_to_json(const Pattern& p) {
  auto arr = nlohmann::json::array();
  for (auto [c, r] : p.cells) arr.push_back({c + 1, r + 1});
  return arr;
}

}  // namespace

AffineGraphSpec affine_from_json(const nlohmann::json& doc) {
  AffineGraphSpec spec;
  for (const auto& mat : doc.at("matrices")) spec.matrices.emplace_back(mat.get<std::vector<std::vector<int>>>());
  spec.base = doc.value("base", 1);
  validate_affine_spec(spec);
  return spec;
}

nlohmann::json affine_to_json(const AffineGraphSpec& spec) {
  nlohmann::json doc;
  doc["matrices"] = nlohmann::json::array();
  for (const auto& a : spec.matrices) doc["matrices"].push_back(a.rows_top_first);
  doc["base"] = spec.base;
  return doc;
}

CarpetSpec carpet_from_json(const nlohmann::json& doc) {
  const int max_gen = doc.value("max_generation", 8);
  if (doc.contains("matrices")) return affine_carpet(affine_from_json(doc), max_gen);
  const int m = doc.at("m").get<int>();
  const int ell = doc.at("ell").get<int>();
  CarpetSpec spec = [&] {
    if (doc.contains("pattern")) return CarpetSpec::fixed(pattern_from_json(m, ell, doc["pattern"]), max_gen);
    if (doc.contains("patterns")) {
      std::vector<Pattern> ps;
      for (const auto& p : doc["patterns"]) ps.push_back(pattern_from_json(m, ell, p));
      return CarpetSpec::sequence(std::move(ps), max_gen);
    }
    if (doc.contains("generator")) {
      const int k = doc.at("k").get<int>();
      const auto seed = doc["generator"].value("seed", std::uint64_t{0});
      return CarpetSpec::generated(m, ell, k, random_pattern_generator(m, ell, k, seed), max_gen,
                                   "random:" + std::to_string(seed));
    }
    throw PatternError("carpet spec needs one of pattern, patterns, generator or matrices");
  }();
  if (doc.contains("k") && doc["k"].get<int>() != spec.k())
    throw PatternError("declared k = " + std::to_string(doc["k"].get<int>()) + " but patterns have k = " +
                       std::to_string(spec.k()));
  return spec;
}

nlohmann::json carpet_to_json(const CarpetSpec& spec) {
  nlohmann::json doc{{"m", spec.m()}, {"ell", spec.ell()}, {"k", spec.k()}, {"max_generation", spec.max_generation()}};
  if (spec.fixed_pattern()) {
    doc["pattern"] = pattern_to_json(*spec.fixed_pattern());
  } else if (!spec.patterns().empty()) {
    doc["patterns"] = nlohmann::json::array();
    for (const auto& p : spec.patterns()) doc["patterns"].push_back(pattern_to_json(p));
  } else {
    doc["generator"] = spec.source_kind();
  }
  return doc;
}

void write_cells_csv(std::ostream& out, const CarpetSpec& spec, const std::vector<CellIndex>& cells) {
  out << "generation,digits,x0,y0\n";
  for (const auto& c : cells)
    out << c.generation << ',' << c.digit_string(spec.m(), spec.ell()) << ',' << c.x0(spec.m()) << ','
        << c.y0(spec.ell()) << '\n';
}

}  // namespace cdlab
