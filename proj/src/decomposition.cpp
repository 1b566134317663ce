#include "cdlab/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <random>
#include <string>

namespace cdlab {

const char* to_string(LegKind k) {
  switch (k) {
    case LegKind::Up: return "up";
    case LegKind::Down: return "down";
    case LegKind::Merged: return "merged";
    case LegKind::Tail: return "tail";
  }
  return "?";
}

double GraphElement::band_lo() const { return std::ldexp(static_cast<double>(band - 1), -generation); }
double GraphElement::band_hi() const { return std::ldexp(static_cast<double>(band), -generation); }

std::size_t Decomposition::flat_count(int n) const {
  const auto& g = generation(n);
  return static_cast<std::size_t>(std::count_if(g.begin(), g.end(), [](const GraphElement& e) { return e.flat; }));
}

bool is_flat(double diam_x, int n) { return diam_x >= std::ldexp(1.0, -n) / (n * std::log(2.0)); }

namespace {

// Crossing times of the levels k 2^-N, k = 0..2^N, same convention as level_crossings.
std::vector<std::vector<double>> level_events(const BrownianPath& path, int N) {
  const auto top = std::int64_t{1} << N;
  const double scale = std::ldexp(1.0, N);
  std::vector<std::vector<double>> ev(static_cast<std::size_t>(top + 1));
  const auto& v = path.values;
  const double s0 = v[0] * scale;
  if (s0 == std::floor(s0) && s0 >= 0 && s0 <= static_cast<double>(top)) ev[static_cast<std::size_t>(s0)].push_back(0.0);
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double w0 = v[i - 1], w1 = v[i];
    std::int64_t k0, k1;
    if (w1 > w0) {
      k0 = static_cast<std::int64_t>(std::floor(w0 * scale)) + 1;
      k1 = static_cast<std::int64_t>(std::floor(w1 * scale));
    } else if (w1 < w0) {
      k0 = static_cast<std::int64_t>(std::ceil(w1 * scale));
      k1 = static_cast<std::int64_t>(std::ceil(w0 * scale)) - 1;
    } else {
      continue;
    }
    k0 = std::max<std::int64_t>(k0, 0);
    k1 = std::min(k1, top);
    for (std::int64_t k = k0; k <= k1; ++k) {
      const double c = std::ldexp(static_cast<double>(k), -N);
      ev[static_cast<std::size_t>(k)].push_back(path.time(i - 1) + path.dt * (c - w0) / (w1 - w0));
    }
  }
  return ev;
}

struct Cascader {
  const BrownianPath& path;
  int N;
  std::vector<std::vector<double>> ev;

  const std::vector<double>& at(std::int64_t k) const { return ev[static_cast<std::size_t>(k)]; }

  std::optional<double> first_at_or_after(std::int64_t k, double t) const {
    const auto& e = at(k);
    auto it = std::lower_bound(e.begin(), e.end(), t);
    if (it == e.end()) return std::nullopt;
    return *it;
  }
  std::optional<double> first_after(std::int64_t k, double t) const {
    const auto& e = at(k);
    auto it = std::upper_bound(e.begin(), e.end(), t);
    if (it == e.end()) return std::nullopt;
    return *it;
  }
  std::optional<double> last_at_or_before(std::int64_t k, double t) const {
    const auto& e = at(k);
    auto it = std::upper_bound(e.begin(), e.end(), t);
    if (it == e.begin()) return std::nullopt;
    return *std::prev(it);
  }

  double tail_coverage(double s, double e, double a, double b) const {
    double lo = std::min(path.at(s), path.at(e)), hi = std::max(path.at(s), path.at(e));
    const auto i0 = static_cast<std::size_t>(std::ceil(s / path.dt));
    const auto i1 = std::min(path.values.size() - 1, static_cast<std::size_t>(std::floor(e / path.dt)));
    for (std::size_t i = i0; i <= i1 && i < path.values.size(); ++i) {
      lo = std::min(lo, path.values[i]);
      hi = std::max(hi, path.values[i]);
    }
    return std::max(0.0, std::min(hi, b) - std::max(lo, a)) / (b - a);
  }

  // Elements of band m at generation n inside the parent span [S, E].
  // Appends to `out`.
  void cascade(int n, std::int64_t m, double S, double E, std::int64_t parent, std::vector<GraphElement>& out) const {
    const std::int64_t step = std::int64_t{1} << (N - n);
    const std::int64_t ia = (m - 1) * step, ib = m * step;
    const double a = std::ldexp(static_cast<double>(m - 1), -n), b = std::ldexp(static_cast<double>(m), -n);
    const auto ta = first_at_or_after(ia, S), tb = first_at_or_after(ib, S);
    double cur;
    bool at_top;
    if (ta && (!tb || *ta <= *tb)) {
      cur = *ta;
      at_top = false;
    } else if (tb) {
      cur = *tb;
      at_top = true;
    } else {
      return;
    }
    if (cur >= E) return;

    auto make = [&](double s, double e, LegKind kind) {
      GraphElement g;
      g.generation = n;
      g.band = m;
      g.start = s;
      g.end = e;
      g.x_last = e;
      g.kind = kind;
      g.coverage = 1.0;
      g.parent = parent;
      return g;
    };
    const std::size_t first = out.size();
    auto& legs = out;
    for (;;) {
      const auto next = first_after(at_top ? ia : ib, cur);
      if (!next || *next > E) break;
      legs.push_back(make(cur, *next, at_top ? LegKind::Down : LegKind::Up));
      cur = *next;
      at_top = !at_top;
    }

    // Trailing leg [cur, E]: never meets the opposite boundary again.
    std::optional<double> last_in;
    const double wE = path.at(E);
    if (at_top) {
      last_in = wE <= b ? E : *last_at_or_before(ib, E);
    } else if (wE > a) {
      last_in = E;
    } else if (auto l = last_at_or_before(ia, E); l && *l > cur) {
      last_in = *l;
    }

    if (last_in) {
      if (legs.size() == first) {
        auto g = make(cur, E, LegKind::Tail);
        g.x_last = *last_in;
        g.coverage = tail_coverage(cur, E, a, b);
        legs.push_back(g);
      } else {
        auto& g = legs.back();
        g.split = g.end;
        g.end = E;
        g.x_last = *last_in;
        g.kind = LegKind::Merged;
      }
    } else if (legs.size() >= first + 2) {
      auto last = legs.back();
      legs.pop_back();
      auto& g = legs.back();
      g.split = g.end;
      g.end = last.end;
      g.x_last = last.x_last;
      g.kind = LegKind::Merged;
    }
    for (std::size_t i = first; i < out.size(); ++i) out[i].flat = is_flat(out[i].diam_x(), n);
  }
};

}  // namespace

Decomposition decompose(const BrownianPath& path, int n_max) {
  if (n_max < 1) throw GeometryError("decomposition needs n_max >= 1");
  if (std::ldexp(1.0, -n_max) < path.spatial_resolution() * (1 - 1e-12))
    throw GeometryError("resolution exhausted: generation " + std::to_string(n_max) +
                        " bands are finer than the path resolution");
  if (path.values.size() < 2) throw PathError("path too short");
  Cascader c{path, n_max, level_events(path, n_max)};
  Decomposition d;
  d.n_max = n_max;
  d.t_end = path.t_end();
  d.gens.resize(static_cast<std::size_t>(n_max));

  auto& first = d.gens[0];
  c.cascade(1, 1, 0.0, d.t_end, -1, first);
  c.cascade(1, 2, 0.0, d.t_end, -1, first);

  // Parents come sorted by (band, start) with disjoint spans, so appending the
  // lower child band of every parent in a band, then the upper one, keeps the
  // children sorted the same way.
  std::vector<GraphElement> upper;
  for (int n = 1; n < n_max; ++n) {
    auto& parents = d.gens[static_cast<std::size_t>(n - 1)];
    auto& kids = d.gens[static_cast<std::size_t>(n)];
    kids.reserve(parents.size() * 4);
    std::size_t p = 0;
    while (p < parents.size()) {
      std::size_t q = p;
      upper.clear();
      for (; q < parents.size() && parents[q].band == parents[p].band; ++q) {
        auto& e = parents[q];
        e.child_begin[0] = static_cast<std::uint32_t>(kids.size());
        c.cascade(n + 1, 2 * e.band - 1, e.start, e.end, static_cast<std::int64_t>(q), kids);
        e.child_end[0] = static_cast<std::uint32_t>(kids.size());
        e.child_begin[1] = static_cast<std::uint32_t>(upper.size());
        c.cascade(n + 1, 2 * e.band, e.start, e.end, static_cast<std::int64_t>(q), upper);
        e.child_end[1] = static_cast<std::uint32_t>(upper.size());
      }
      const auto offset = static_cast<std::uint32_t>(kids.size());
      for (std::size_t r = p; r < q; ++r) {
        parents[r].child_begin[1] += offset;
        parents[r].child_end[1] += offset;
      }
      kids.insert(kids.end(), upper.begin(), upper.end());
      p = q;
    }
  }
  return d;
}

PartitionReport check_partition(const Decomposition& d, const BrownianPath& path, std::size_t stride) {
  PartitionReport r;
  stride = std::max<std::size_t>(stride, 1);
  for (int n = 1; n <= d.n_max; ++n) {
    const auto& g = d.generation(n);
    for (std::size_t i = 0; i + 1 < g.size(); ++i)
      if (g[i].band == g[i + 1].band && g[i].end > g[i + 1].start) r.disjoint = false;
    if (n > 1) {
      const auto& parents = d.generation(n - 1);
      for (const auto& e : g) {
        if (e.parent < 0 || static_cast<std::size_t>(e.parent) >= parents.size()) {
          r.nested = false;
          continue;
        }
        const auto& p = parents[static_cast<std::size_t>(e.parent)];
        if (e.start < p.start || e.end > p.end || (e.band + 1) / 2 != p.band) r.nested = false;
      }
    }
    for (std::size_t i = 0; i < path.values.size(); i += stride) {
      const double w = path.values[i];
      if (!(w > 0.0) || w > 1.0) continue;
      const double t = path.time(i);
      if (t > d.t_end) break;
      ++r.checked_samples;
      const std::int64_t m = dyadic_band_index(w, n) + 1;
      auto lo = std::lower_bound(g.begin(), g.end(), m, [](const GraphElement& e, std::int64_t b) { return e.band < b; });
      auto hi = std::upper_bound(lo, g.end(), m, [](std::int64_t b, const GraphElement& e) { return b < e.band; });
      auto it = std::upper_bound(lo, hi, t, [](double x, const GraphElement& e) { return x < e.start; });
      if (it == lo || std::prev(it)->end < t) {
        ++r.uncovered;
        r.covered = false;
      }
    }
  }
  return r;
}

ElementChooser leftmost_chooser() {
  return [](const Decomposition&, int, const std::vector<std::uint32_t>&) -> std::size_t { return 0; };
}

ElementChooser narrowest_chooser() {
  return [](const Decomposition& d, int n, const std::vector<std::uint32_t>& cands) -> std::size_t {
    const auto& g = d.generation(n);
    std::size_t best = 0;
    for (std::size_t i = 1; i < cands.size(); ++i)
      if (g[cands[i]].diam_x() < g[cands[best]].diam_x()) best = i;
    return best;
  };
}

ElementChooser random_chooser(std::uint64_t seed) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return [rng](const Decomposition&, int, const std::vector<std::uint32_t>& cands) -> std::size_t {
    return std::uniform_int_distribution<std::size_t>(0, cands.size() - 1)(*rng);
  };
}

double VerticalCantorTree::mass(int n) const { return std::ldexp(1.0, -n); }

VerticalCantorTree extract_vertical_cantor(const Decomposition& d, int depth, const ElementChooser& choose) {
  if (depth < 1 || depth > d.n_max) throw GeometryError("tree depth outside the decomposition");
  VerticalCantorTree t;
  t.depth = depth;
  t.nodes.resize(static_cast<std::size_t>(depth));
  auto pick = [&](int n, std::int64_t band, std::uint32_t begin, std::uint32_t end) {
    std::vector<std::uint32_t> cands;
    for (auto k = begin; k < end; ++k)
      if (d.generation(n)[k].band == band) cands.push_back(k);
    if (cands.empty())
      throw GeometryError("starvation: no generation-" + std::to_string(n) + " element in band " +
                          std::to_string(band));
    const auto i = choose(d, n, cands);
    if (i >= cands.size()) throw GeometryError("chooser returned an index out of range");
    return cands[i];
  };
  const auto roots = static_cast<std::uint32_t>(d.generation(1).size());
  t.nodes[0] = {pick(1, 1, 0, roots), pick(1, 2, 0, roots)};
  for (int n = 1; n < depth; ++n) {
    auto& next = t.nodes[static_cast<std::size_t>(n)];
    for (auto p : t.nodes[static_cast<std::size_t>(n - 1)]) {
      const auto& e = d.generation(n)[p];
      next.push_back(pick(n + 1, 2 * e.band - 1, e.child_begin[0], e.child_end[0]));
      next.push_back(pick(n + 1, 2 * e.band, e.child_begin[1], e.child_end[1]));
    }
  }
  return t;
}

bool check_vertical_tree(const Decomposition& d, const VerticalCantorTree& tree) {
  for (int n = 1; n <= tree.depth; ++n) {
    const auto& nodes = tree.nodes[static_cast<std::size_t>(n - 1)];
    if (nodes.size() != (std::size_t{1} << n)) return false;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& e = d.generation(n)[nodes[i]];
      if (e.band != static_cast<std::int64_t>(i) + 1) return false;
      if (n > 1) {
        const auto pi = tree.nodes[static_cast<std::size_t>(n - 2)][i / 2];
        const auto& p = d.generation(n - 1)[pi];
        if (e.parent != static_cast<std::int64_t>(pi) || e.start < p.start || e.end > p.end) return false;
      }
    }
  }
  return true;
}

double lambda_ball_lower(const Decomposition& d, const VerticalCantorTree& tree, double x, double y, double r) {
  const int n = tree.depth;
  double total = 0.0;
  const double r2 = r * r;
  for (auto k : tree.nodes.back()) {
    const auto& e = d.generation(n)[k];
    const double dx = std::max(std::abs(e.start - x), std::abs(e.x_last - x));
    const double dy = std::max(std::abs(e.band_lo() - y), std::abs(e.band_hi() - y));
    if (dx * dx + dy * dy <= r2) total += tree.mass(n);
  }
  return total;
}

LambdaBallReport lambda_ball_test(const Decomposition& d, const VerticalCantorTree& tree, const BrownianPath& path,
                                  std::size_t tests, double r_min, double r_max, std::uint64_t seed) {
  LambdaBallReport rep;
  std::mt19937_64 rng(seed);
  const auto& finest = tree.nodes.back();
  std::uniform_int_distribution<std::size_t> node(0, finest.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 0; k < tests; ++k) {
    const auto& e = d.generation(tree.depth)[finest[node(rng)]];
    double x = e.start, y = path.at(e.start);
    for (int attempt = 0; attempt < 32; ++attempt) {
      const double t = e.start + unit(rng) * (e.x_last - e.start);
      const double w = path.at(t);
      if (w >= e.band_lo() && w <= e.band_hi()) {
        x = t;
        y = w;
        break;
      }
    }
    const double r = std::exp(std::log(r_min) + unit(rng) * (std::log(r_max) - std::log(r_min)));
    ++rep.tests;
    if (lambda_ball_lower(d, tree, x, y, r) >= r / 3) ++rep.passed;
  }
  return rep;
}

bool a_like(const Decomposition& d, int n, std::size_t index, int n0) {
  for (int g = n; g >= n0 && g >= 1; --g) {
    const auto& e = d.generation(g)[index];
    if (e.flat) return false;
    if (e.parent < 0) break;
    index = static_cast<std::size_t>(e.parent);
  }
  return true;
}

nlohmann::json decomposition_to_json(const Decomposition& d, int max_generation) {
  nlohmann::json gens = nlohmann::json::array();
  for (int n = 1; n <= std::min(max_generation, d.n_max); ++n) {
    nlohmann::json els = nlohmann::json::array();
    for (const auto& e : d.generation(n)) {
      nlohmann::json iv = e.split >= 0 ? nlohmann::json::array({{e.start, e.split}, {e.split, e.end}})
                                       : nlohmann::json::array({{e.start, e.end}});
      els.push_back({{"band", e.band}, {"intervals", iv}, {"flat", e.flat}, {"kind", to_string(e.kind)}});
    }
    gens.push_back({{"generation", n}, {"elements", els}});
  }
  return {{"schema_version", 1}, {"n_max", d.n_max}, {"t_end", d.t_end}, {"generations", gens}};
}

}  // namespace cdlab
