#include "cdlab/hmeasure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>

namespace cdlab {

std::size_t MassTree::add_root(const CellIndex& cell, const Rational& mass) {
  if (!nodes_.empty()) throw MeasureError("tree already has a root");
  nodes_.push_back({cell, mass, -1, {}});
  index_[cell] = 0;
  return 0;
}

std::size_t MassTree::add_child(std::size_t parent, const CellIndex& cell, const Rational& mass) {
  const std::size_t id = nodes_.size();
  nodes_.push_back({cell, mass, static_cast<std::int64_t>(parent), {}});
  nodes_[parent].children.push_back(id);
  index_[cell] = id;
  return id;
}

std::vector<std::size_t> MassTree::generation(int n) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].cell.generation == n) out.push_back(i);
  return out;
}

std::optional<std::size_t> MassTree::find(const CellIndex& cell) const {
  auto it = index_.find(cell);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Rational MassTree::mass_of(const CellIndex& cell) const {
  auto i = find(cell);
  return i ? nodes_[*i].mass : Rational(0);
}

Rational MassTree::total() const { return nodes_.empty() ? Rational(0) : nodes_[0].mass; }

bool MassTree::conserved() const {
  if (nodes_.empty() || nodes_[0].mass != 1) return false;
  for (const auto& n : nodes_) {
    if (sgn(n.mass) < 0) return false;
    if (n.children.empty()) continue;
    Rational sum = 0;
    for (auto c : n.children) sum += nodes_[c].mass;
    if (sum != n.mass) return false;
  }
  return true;
}

MassTree carpet_measure(const CarpetSpec& spec, int n) {
  if (n > spec.max_generation()) throw MeasureError("generation not built");
  MassTree tree;
  tree.add_root(CellIndex{}, Rational(1));
  std::vector<std::size_t> level{0};
  for (int g = 1; g <= n; ++g) {
    const Rational mass = inverse_power(static_cast<std::int64_t>(spec.k()) * spec.ell(), g);
    std::vector<std::size_t> next;
    for (auto id : level) {
      const CellIndex parent = tree.node(id).cell;
      for (const auto& ch : spec.children(parent)) next.push_back(tree.add_child(id, ch, mass));
    }
    level = std::move(next);
  }
  return tree;
}

MassTree slice_measure(const CarpetSpec& spec, const Rational& a, int n) {
  if (a <= 0 || a >= 1) throw MeasureError("slice height must lie in (0, 1)");
  if (is_adic(a, spec.ell()))
    throw MeasureError("slice height " + a.get_str() + " is ell-adic; its fiber is not unique");
  if (n > spec.max_generation()) throw MeasureError("generation not built");
  MassTree tree;
  tree.add_root(CellIndex{}, Rational(1));
  std::vector<std::size_t> level{0};
  for (int g = 1; g <= n; ++g) {
    mpz_class scaled;
    mpz_ui_pow_ui(scaled.get_mpz_t(), static_cast<unsigned long>(spec.ell()), static_cast<unsigned long>(g));
    mpz_class row_z = a.get_num() * scaled;
    mpz_fdiv_q(row_z.get_mpz_t(), row_z.get_mpz_t(), a.get_den().get_mpz_t());
    const auto row = static_cast<std::int64_t>(row_z.get_si());
    const Rational mass = inverse_power(spec.k(), g);
    std::vector<std::size_t> next;
    for (auto id : level) {
      const CellIndex parent = tree.node(id).cell;
      for (const auto& ch : spec.children(parent))
        if (ch.y == row) next.push_back(tree.add_child(id, ch, mass));
    }
    level = std::move(next);
  }
  return tree;
}

Rational slice_mass_in(const MassTree& slice, const CarpetSpec& spec, const Rational& x0, const Rational& x1) {
  int deepest = 0;
  for (const auto& nd : slice.nodes()) deepest = std::max(deepest, nd.cell.generation);
  Rational sum = 0;
  for (const auto& nd : slice.nodes()) {
    if (nd.cell.generation != deepest) continue;
    const Rational lo = nd.cell.x0(spec.m());
    if (lo >= x0 && lo + nd.cell.width(spec.m()) <= x1) sum += nd.mass;
  }
  return sum;
}

bool IdentityReport::all_pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const IdentityEntry& e) { return e.pass; });
}

std::size_t IdentityReport::failures() const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [](const IdentityEntry& e) { return !e.pass; }));
}

namespace {

long smallest_prime_coprime(long ell) {
  for (long q = 2;; ++q) {
    bool prime = true;
    for (long d = 2; d * d <= q; ++d) prime = prime && q % d != 0;
    if (prime && ell % q != 0) return q;
  }
}

}  // namespace

IdentityReport check_disintegration(const CarpetSpec& spec, int n) {
  const MassTree mu = carpet_measure(spec, n);
  std::unordered_map<CellIndex, Rational, CellHash> integral;
  const std::int64_t bands = ipow(spec.ell(), n);
  const Rational band_length = inverse_power(spec.ell(), n);
  const long q = smallest_prime_coprime(spec.ell());
  // mu_a is constant in a across the interior of each generation-n band, so
  // one non-ell-adic representative per band integrates exactly.
  for (std::int64_t b = 0; b < bands; ++b) {
    const Rational a = (Rational(mpz_class(static_cast<long>(b))) + Rational(1, q)) * band_length;
    const MassTree slice = slice_measure(spec, a, n);
    for (const auto& nd : slice.nodes()) integral[nd.cell] += nd.mass * band_length;
  }
  IdentityReport report;
  for (const auto& nd : mu.nodes()) {
    IdentityEntry e;
    e.cell = nd.cell;
    e.expected = nd.mass;
    auto it = integral.find(nd.cell);
    e.computed = it == integral.end() ? Rational(0) : it->second;
    e.pass = e.expected == e.computed &&
             e.expected == inverse_power(spec.k(), nd.cell.generation) * inverse_power(spec.ell(), nd.cell.generation);
    report.entries.push_back(std::move(e));
  }
  return report;
}

IdentityReport check_pushforward(const CarpetSpec& spec, int n) {
  const MassTree mu = carpet_measure(spec, n);
  std::map<std::pair<int, std::int64_t>, Rational> bands;
  for (const auto& nd : mu.nodes()) bands[{nd.cell.generation, nd.cell.y}] += nd.mass;
  IdentityReport report;
  for (int g = 0; g <= n; ++g) {
    for (std::int64_t y = 0; y < ipow(spec.ell(), g); ++y) {
      IdentityEntry e;
      e.cell = {g, 0, y};
      e.expected = inverse_power(spec.ell(), g);
      auto it = bands.find({g, y});
      e.computed = it == bands.end() ? Rational(0) : it->second;
      e.pass = e.expected == e.computed;
      report.entries.push_back(std::move(e));
    }
  }
  return report;
}

namespace {

std::vector<std::vector<CellIndex>> children_by_row(const CarpetSpec& spec, const CellIndex& parent) {
  std::vector<std::vector<CellIndex>> rows(spec.ell());
  for (const auto& ch : spec.children(parent)) rows[ch.y - parent.y * spec.ell()].push_back(ch);
  for (auto& r : rows) std::sort(r.begin(), r.end(), [](const CellIndex& a, const CellIndex& b) { return a.x < b.x; });
  return rows;
}

}  // namespace

VerticalSelection::VerticalSelection(const CarpetSpec& spec, int depth, const Chooser& chooser) : depth_(depth) {
  if (depth > spec.max_generation()) throw MeasureError("selection deeper than max_generation");
  std::vector<CellIndex> level{CellIndex{}};
  for (int g = 0; g < depth; ++g) {
    std::vector<CellIndex> next;
    for (const auto& parent : level) {
      const auto rows = children_by_row(spec, parent);
      std::vector<CellIndex> picks;
      for (int r = 0; r < spec.ell(); ++r) {
        const std::size_t i = chooser(parent, r, rows[r]);
        if (i >= rows[r].size()) throw MeasureError("chooser returned an invalid child");
        picks.push_back(rows[r][i]);
        next.push_back(rows[r][i]);
      }
      choices_[parent] = std::move(picks);
    }
    level = std::move(next);
  }
}

void VerticalSelection::set_choice(const CellIndex& parent, std::vector<CellIndex> per_row) {
  choices_[parent] = std::move(per_row);
  depth_ = std::max(depth_, parent.generation + 1);
}

std::vector<CellIndex> VerticalSelection::selected(int n) const {
  if (n > depth_) throw MeasureError("selection is shallower than the requested generation");
  std::vector<CellIndex> level{CellIndex{}};
  for (int g = 0; g < n; ++g) {
    std::vector<CellIndex> next;
    for (const auto& parent : level) {
      auto it = choices_.find(parent);
      if (it == choices_.end())
        throw MeasureError("invalid selection: no choice below cell at generation " + std::to_string(g));
      next.insert(next.end(), it->second.begin(), it->second.end());
    }
    level = std::move(next);
  }
  std::sort(level.begin(), level.end(), [](const CellIndex& a, const CellIndex& b) { return a.y < b.y; });
  return level;
}

void VerticalSelection::validate(const CarpetSpec& spec) const {
  for (int g = 0; g < depth_; ++g) {
    for (const auto& parent : selected(g)) {
      auto it = choices_.find(parent);
      if (it == choices_.end()) throw MeasureError("invalid selection: a selected cell has no choices");
      const auto rows = children_by_row(spec, parent);
      if (static_cast<int>(it->second.size()) != spec.ell())
        throw MeasureError("invalid selection: a row lacks a choice");
      for (int r = 0; r < spec.ell(); ++r) {
        const auto& pick = it->second[r];
        if (std::find(rows[r].begin(), rows[r].end(), pick) == rows[r].end())
          throw MeasureError("invalid selection: row " + std::to_string(r + 1) + " choice is not a child in that row");
      }
    }
  }
}

VerticalSelection lowest_column_selection(const CarpetSpec& spec, int depth) {
  return VerticalSelection(spec, depth, [](const CellIndex&, int, const std::vector<CellIndex>&) { return std::size_t{0}; });
}

VerticalSelection random_selection(const CarpetSpec& spec, int depth, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return VerticalSelection(spec, depth, [&](const CellIndex&, int, const std::vector<CellIndex>& c) {
    return std::uniform_int_distribution<std::size_t>(0, c.size() - 1)(rng);
  });
}

MassTree vertical_lambda(const CarpetSpec& spec, const VerticalSelection& sel, int n) {
  sel.validate(spec);
  std::set<CellIndex> chosen;
  for (int g = 0; g <= n; ++g)
    for (const auto& c : sel.selected(g)) chosen.insert(c);
  MassTree tree;
  tree.add_root(CellIndex{}, Rational(1));
  std::vector<std::size_t> level{0};
  for (int g = 1; g <= n; ++g) {
    const Rational mass = inverse_power(spec.ell(), g);
    std::vector<std::size_t> next;
    for (auto id : level) {
      const CellIndex parent = tree.node(id).cell;
      for (const auto& ch : spec.children(parent))
        next.push_back(tree.add_child(id, ch, chosen.count(ch) ? mass : Rational(0)));
    }
    level = std::move(next);
  }
  return tree;
}

Rational vertical_lambda_inside(const CarpetSpec& spec, const VerticalSelection& sel, int depth,
                                const Rational& cx, const Rational& cy, const Rational& r) {
  const Rational r2 = r * r;
  const Rational unit = inverse_power(spec.ell(), depth);
  Rational total = 0;
  for (const auto& c : sel.selected(depth)) {
    const Rational xs[2] = {c.x0(spec.m()), c.x0(spec.m()) + c.width(spec.m())};
    const Rational ys[2] = {c.y0(spec.ell()), c.y0(spec.ell()) + c.height(spec.ell())};
    bool inside = true;
    for (const auto& x : xs)
      for (const auto& y : ys) {
        const Rational dx = x - cx, dy = y - cy;
        inside = inside && dx * dx + dy * dy <= r2;
      }
    if (inside) total += unit;
  }
  return total;
}

std::size_t HierarchicalSpace::add_root(double diameter) {
  if (!nodes_.empty()) throw MeasureError("space already has a root");
  nodes_.push_back({diameter, -1, {}, {}});
  return 0;
}

std::size_t HierarchicalSpace::add_child(std::size_t parent, double diameter) {
  if (diameter < 0) throw MeasureError("negative diameter");
  const std::size_t id = nodes_.size();
  nodes_.push_back({diameter, static_cast<std::int64_t>(parent), {}, {}});
  nodes_[parent].children.push_back(id);
  return id;
}

void HierarchicalSpace::add_sample(std::size_t leaf, Point p) { nodes_[leaf].samples.push_back(p); }

std::int64_t HierarchicalSpace::sibling(std::size_t i) const {
  const auto p = nodes_[i].parent;
  if (p < 0) return -1;
  const auto& ch = nodes_[p].children;
  if (ch.size() != 2) return -1;
  return static_cast<std::int64_t>(ch[0] == i ? ch[1] : ch[0]);
}

std::vector<std::size_t> HierarchicalSpace::path_to(std::size_t i) const {
  std::vector<std::size_t> path;
  while (nodes_[i].parent >= 0) {
    const auto& ch = nodes_[nodes_[i].parent].children;
    path.push_back(static_cast<std::size_t>(std::find(ch.begin(), ch.end(), i) - ch.begin()));
    i = static_cast<std::size_t>(nodes_[i].parent);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<std::size_t> HierarchicalSpace::leaves() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].children.empty()) out.push_back(i);
  return out;
}

std::size_t HierarchicalSpace::depth(std::size_t i) const {
  std::size_t d = 0;
  while (nodes_[i].parent >= 0) {
    i = static_cast<std::size_t>(nodes_[i].parent);
    ++d;
  }
  return d;
}

std::vector<double> alpha_measure(const HierarchicalSpace& space, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw MeasureError("alpha must lie in (0, 1)");
  std::vector<double> mass(space.size(), 0.0);
  if (space.size() == 0) return mass;
  mass[0] = 1.0;
  // Children are always stored after their parent.
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& ch = space.node(i).children;
    if (ch.empty()) continue;
    double sum = 0.0;
    for (auto c : ch) sum += std::pow(space.node(c).diameter, alpha);
    for (auto c : ch)
      mass[c] = sum > 0.0 ? mass[i] * std::pow(space.node(c).diameter, alpha) / sum
                          : mass[i] / static_cast<double>(ch.size());
  }
  return mass;
}

double alpha_ratio_sup(const HierarchicalSpace& space, const std::vector<double>& mass, double alpha) {
  double best = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i)
    if (space.node(i).diameter > 0.0) best = std::max(best, mass[i] / std::pow(space.node(i).diameter, alpha));
  return best;
}

int flatness_constant(const HierarchicalSpace& space, Point x, double r) {
  if (!(r > 0.0)) throw MeasureError("radius must be positive");
  const std::size_t n = space.size();
  std::vector<char> inside(n, 0), sampled(n, 0);
  for (std::size_t i = n; i-- > 0;) {
    const auto& nd = space.node(i);
    if (nd.children.empty()) {
      sampled[i] = !nd.samples.empty();
      inside[i] = sampled[i] && std::all_of(nd.samples.begin(), nd.samples.end(),
                                            [&](const Point& p) { return distance(p, x) <= r; });
    } else {
      bool all = true, any = false;
      for (auto c : nd.children) {
        any = any || sampled[c];
        all = all && (inside[c] || !sampled[c]);
      }
      sampled[i] = any;
      inside[i] = any && all;
    }
  }
  int count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!inside[i]) continue;
    const auto p = space.node(i).parent;
    if (p < 0 || !inside[p]) ++count;
  }
  return count;
}

HierarchicalSpace selection_space(const CarpetSpec& spec, const VerticalSelection& sel) {
  HierarchicalSpace space;
  auto diam = [&](const CellIndex& c) {
    return std::hypot(to_double(c.width(spec.m())), to_double(c.height(spec.ell())));
  };
  space.add_root(diam(CellIndex{}));
  std::vector<std::pair<CellIndex, std::size_t>> level{{CellIndex{}, 0}};
  for (int g = 0; g < sel.depth(); ++g) {
    std::vector<std::pair<CellIndex, std::size_t>> next;
    for (const auto& [cell, id] : level) {
      auto picks = sel.choices().at(cell);
      for (const auto& ch : picks) next.emplace_back(ch, space.add_child(id, diam(ch)));
    }
    level = std::move(next);
  }
  for (const auto& [cell, id] : level) space.add_sample(id, {cell.center_x(spec.m()), cell.center_y(spec.ell())});
  return space;
}

double max_third_eps(double alpha) {
  const double need = (1.0 - std::pow(1.0 / 3.0, alpha)) / std::pow(2.0 / 3.0, alpha);
  return 1.0 - std::pow(need, 1.0 / alpha);
}

HierarchicalSpace random_third_tree(int depth, double alpha, double eps, std::mt19937_64& rng) {
  if (eps > max_third_eps(alpha) + 1e-15) throw MeasureError("eps too large for alpha");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  HierarchicalSpace space;
  space.add_root(1.0);
  std::vector<std::size_t> level{0};
  for (int g = 0; g < depth; ++g) {
    std::vector<std::size_t> next;
    for (auto id : level) {
      const double d = space.node(id).diameter;
      const double p = 1.0 / 3.0 + (2.0 / 3.0) * unit(rng) * 0.999;
      const double lo = std::max(1.0 / 3.0, (1.0 - p) * (1.0 - eps));
      // Strictly above the lower bound so the eps condition is strict.
      const double q = lo + (1.0 - lo) * (0.001 + 0.998 * unit(rng));
      const bool swap = unit(rng) < 0.5;
      next.push_back(space.add_child(id, d * (swap ? q : p)));
      next.push_back(space.add_child(id, d * (swap ? p : q)));
    }
    level = std::move(next);
  }
  return space;
}

namespace {

struct FineSquares {
  std::vector<Point> centers;
  double side = 0.0;
};

FineSquares fine_squares(const CarpetSpec& spec, int fine) {
  FineSquares out;
  for (const auto& q : approximate_squares(spec, fine))
    out.centers.push_back({to_double(q.x0 + q.width / 2), to_double(q.y0 + q.height / 2)});
  const auto sq = approximate_squares(spec, fine).front();
  out.side = std::max(to_double(sq.width), to_double(sq.height));
  return out;
}

std::size_t count_in_ball(const FineSquares& fs, double x, double y, double r) {
  std::size_t n = 0;
  for (const auto& c : fs.centers) n += std::hypot(c.x - x, c.y - y) <= r;
  return n;
}

}  // namespace

bool check_neighbor_bound(const CarpetSpec& spec, int n) {
  const auto squares = approximate_squares(spec, n);
  const Rational cell_mass = inverse_power(static_cast<std::int64_t>(spec.k()) * spec.ell(), n);
  std::map<std::pair<std::int64_t, std::int64_t>, Rational> mass;
  for (const auto& q : squares) mass[{q.row, q.column}] = cell_mass * static_cast<unsigned long>(q.cells);
  for (const auto& q : squares) {
    Rational around = 0;
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        auto it = mass.find({q.row + dr, q.column + dc});
        if (it != mass.end()) around += it->second;
      }
    if (around > 9 * mass[{q.row, q.column}]) return false;
  }
  return true;
}

DoublingReport check_doubling(const CarpetSpec& spec, int fine, const std::vector<Ball>& balls) {
  const FineSquares fs = fine_squares(spec, fine);
  DoublingReport report;
  // Every occupied square has the same mass, so mass ratios are count ratios.
  for (const auto& b : balls) {
    const auto big = count_in_ball(fs, b.x, b.y, b.r);
    const auto half = count_in_ball(fs, b.x, b.y, b.r / 2);
    if (half == 0) throw MeasureError("empty ball: mu(B(x, r/2)) = 0");
    report.max_ratio = std::max(report.max_ratio, static_cast<double>(big) / static_cast<double>(half));
    ++report.balls;
  }
  report.neighbor_bound_holds = true;
  for (int n = 1; n <= fine; ++n) {
    report.neighbor_generations.push_back(n);
    report.neighbor_bound_holds = report.neighbor_bound_holds && check_neighbor_bound(spec, n);
  }
  return report;
}

std::vector<Ball> sample_doubling_balls(const CarpetSpec& spec, int fine, std::size_t count, std::uint64_t seed) {
  const FineSquares fs = fine_squares(spec, fine);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, fs.centers.size() - 1);
  std::uniform_real_distribution<double> logr(std::log(4 * fs.side), 0.0);
  std::vector<Ball> out;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& c = fs.centers[pick(rng)];
    out.push_back({c.x, c.y, std::exp(logr(rng))});
  }
  return out;
}

void write_mass_tree_csv(std::ostream& out, const CarpetSpec& spec, const MassTree& tree) {
  out << "address,generation,numerator,denominator\n";
  for (const auto& nd : tree.nodes())
    out << nd.cell.digit_string(spec.m(), spec.ell()) << ',' << nd.cell.generation << ',' << nd.mass.get_num() << ','
        << nd.mass.get_den() << '\n';
}

}  // namespace cdlab
