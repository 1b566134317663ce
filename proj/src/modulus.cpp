#include "cdlab/modulus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

namespace cdlab {

void ModulusProblem::validate() const {
  if (mass.size() != cells.size()) throw ModulusError("cells and masses differ in length");
  if (!(p >= 1.0)) throw ModulusError("exponent p must be >= 1");
  for (const auto& m : mass)
    if (sgn(m) < 0) throw ModulusError("negative background mass");
  for (std::size_t f = 0; f < families.size(); ++f) {
    bool nonzero = false;
    for (const auto& [j, w] : families[f]) {
      if (j >= cells.size()) throw ModulusError("family " + std::to_string(f) + " references a missing cell");
      if (sgn(w) < 0) throw ModulusError("negative family weight");
      nonzero = nonzero || sgn(w) > 0;
    }
    if (!nonzero) throw ModulusError("family " + std::to_string(f) + " is identically zero");
  }
}

AdmissibilityReport is_admissible(const std::vector<Rational>& rho, const ModulusProblem& prob) {
  prob.validate();
  if (rho.size() != prob.cells.size()) throw ModulusError("density is missing cells");
  AdmissibilityReport rep;
  rep.admissible = true;
  for (std::size_t f = 0; f < prob.families.size(); ++f) {
    Rational s = 0;
    for (const auto& [j, w] : prob.families[f]) s += w * rho[j];
    if (!rep.exact_min || s < *rep.exact_min) {
      rep.exact_min = s;
      rep.worst_family = f;
    }
    rep.admissible = rep.admissible && s >= 1;
  }
  rep.min_integral = rep.exact_min ? to_double(*rep.exact_min) : std::numeric_limits<double>::infinity();
  return rep;
}

AdmissibilityReport is_admissible(const std::vector<double>& rho, const ModulusProblem& prob, double tol) {
  prob.validate();
  if (rho.size() != prob.cells.size()) throw ModulusError("density is missing cells");
  AdmissibilityReport rep;
  rep.admissible = true;
  rep.min_integral = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < prob.families.size(); ++f) {
    double s = 0;
    for (const auto& [j, w] : prob.families[f]) s += to_double(w) * rho[j];
    if (s < rep.min_integral) {
      rep.min_integral = s;
      rep.worst_family = f;
    }
    rep.admissible = rep.admissible && s >= 1.0 - tol;
  }
  return rep;
}

namespace {

ModulusResult solve_p1(const ModulusProblem& prob) {
  const auto sol = solve_covering_lp(prob.mass, prob.families);
  ModulusResult res;
  res.exact_value = sol.value;
  res.value = to_double(sol.value);
  res.rho_exact = sol.primal;
  res.dual_exact = sol.dual;
  for (const auto& r : sol.primal) res.rho.push_back(to_double(r));
  res.certified = sol.certified;
  res.lower_bound = res.upper_bound = res.value;
  return res;
}

// Lagrangian dual of  min sum mu rho^p  s.t.  A rho >= 1,  rho >= 0.
// For y >= 0 the inner minimiser is rho_i = (s_i / (p mu_i))^(1/(p-1)) with
// s = A^T y, giving  g(y) = sum y - (p-1) sum mu rho^p.
struct DualProblem {
  std::size_t nc = 0;
  double p = 2.0;
  std::vector<double> mu;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;

  void density(const std::vector<double>& y, std::vector<double>& rho) const {
    std::vector<double> s(nc, 0.0);
    for (std::size_t f = 0; f < rows.size(); ++f)
      for (auto [j, w] : rows[f]) s[j] += w * y[f];
    rho.assign(nc, 0.0);
    for (std::size_t i = 0; i < nc; ++i)
      if (s[i] > 0.0 && mu[i] > 0.0) rho[i] = std::pow(s[i] / (p * mu[i]), 1.0 / (p - 1.0));
  }

  double energy(const std::vector<double>& rho) const {
    double e = 0.0;
    for (std::size_t i = 0; i < nc; ++i)
      if (rho[i] > 0.0) e += mu[i] * std::pow(rho[i], p);
    return e;
  }

  double value(const std::vector<double>& y, std::vector<double>& rho, std::vector<double>& grad) const {
    density(y, rho);
    grad.assign(rows.size(), 1.0);
    for (std::size_t f = 0; f < rows.size(); ++f)
      for (auto [j, w] : rows[f]) grad[f] -= w * rho[j];
    return std::accumulate(y.begin(), y.end(), 0.0) - (p - 1.0) * energy(rho);
  }

  // Smallest family integral of rho.
  double min_integral(const std::vector<double>& rho) const {
    double c = std::numeric_limits<double>::infinity();
    for (const auto& row : rows) {
      double s = 0.0;
      for (auto [j, w] : row) s += w * rho[j];
      c = std::min(c, s);
    }
    return c;
  }
};

ModulusResult solve_convex(const ModulusProblem& prob, const ModulusOptions& opts) {
  ModulusResult res;
  const std::size_t nc = prob.cells.size();
  res.rho.assign(nc, 0.0);

  // Rows touching a zero-mass cell are satisfied for free on that cell.
  DualProblem dp;
  dp.nc = nc;
  dp.p = prob.p;
  for (const auto& m : prob.mass) dp.mu.push_back(to_double(m));
  std::vector<double> free_rho(nc, 0.0);
  for (const auto& row : prob.families) {
    std::optional<std::pair<std::size_t, double>> free_cell;
    for (const auto& [j, w] : row)
      if (sgn(prob.mass[j]) == 0 && sgn(w) > 0) free_cell = {j, to_double(w)};
    if (free_cell) {
      free_rho[free_cell->first] = std::max(free_rho[free_cell->first], 1.0 / free_cell->second);
      continue;
    }
    std::vector<std::pair<std::size_t, double>> r;
    for (const auto& [j, w] : row)
      if (sgn(w) > 0) r.emplace_back(j, to_double(w));
    dp.rows.push_back(std::move(r));
  }
  auto finish = [&](std::vector<double> rho) {
    for (std::size_t i = 0; i < nc; ++i)
      if (dp.mu[i] == 0.0) rho[i] = free_rho[i];
    res.rho = std::move(rho);
  };
  if (dp.rows.empty()) {
    finish(std::vector<double>(nc, 0.0));
    res.certified = true;
    return res;
  }

  const std::size_t nf = dp.rows.size();
  std::vector<double> y(nf, 0.0), z(nf, 0.0), y_new(nf), rho, grad, rho_z, grad_z;
  double g_y = dp.value(y, rho, grad);
  double lower = g_y, upper = std::numeric_limits<double>::infinity();
  std::vector<double> best_rho;
  double t = 1.0, theta = 1.0;
  std::size_t it = 0;
  for (; it < opts.max_iterations; ++it) {
    const double g_z = dp.value(z, rho_z, grad_z);
    if (opts.known_optimum) {
      double norm2 = 0.0;
      for (std::size_t f = 0; f < nf; ++f) {
        const double d = (z[f] > 0.0 || grad_z[f] > 0.0) ? grad_z[f] : 0.0;
        norm2 += d * d;
      }
      if (norm2 > 0.0 && *opts.known_optimum > g_z) t = std::max(t, (*opts.known_optimum - g_z) / norm2);
    }
    double g_new = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      double lin = 0.0, quad = 0.0;
      for (std::size_t f = 0; f < nf; ++f) {
        y_new[f] = std::max(0.0, z[f] + t * grad_z[f]);
        const double d = y_new[f] - z[f];
        lin += grad_z[f] * d;
        quad += d * d;
      }
      g_new = dp.value(y_new, rho, grad);
      if (g_new >= g_z + lin - quad / (2.0 * t) - 1e-15 * std::abs(g_z)) break;
      t *= 0.5;
    }
    const double theta_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    if (g_new < g_y) {
      // Restart the momentum when the objective drops.
      z = y;
      theta = 1.0;
      t *= 0.5;
    } else {
      for (std::size_t f = 0; f < nf; ++f) z[f] = y_new[f] + ((theta - 1.0) / theta_new) * (y_new[f] - y[f]);
      y = y_new;
      g_y = g_new;
      theta = theta_new;
      t *= 1.1;
    }
    lower = std::max(lower, g_y);
    const double c = dp.min_integral(rho);
    if (c > 0.0) {
      std::vector<double> scaled(rho);
      for (auto& v : scaled) v /= c;
      const double e = dp.energy(scaled);
      if (e < upper) {
        upper = e;
        best_rho = std::move(scaled);
      }
    }
    if (upper - lower <= opts.tolerance * std::max(1.0, std::abs(upper))) break;
  }
  res.iterations = it;
  res.lower_bound = lower;
  res.upper_bound = upper;
  res.gap = upper - lower;
  res.value = std::isfinite(upper) ? upper : lower;
  res.certified = res.gap <= opts.tolerance * std::max(1.0, std::abs(upper));
  finish(best_rho.empty() ? std::vector<double>(nc, 0.0) : best_rho);
  return res;
}

}  // namespace

ModulusResult mod_p(const ModulusProblem& prob, const ModulusOptions& opts) {
  prob.validate();
  return prob.p == 1.0 ? solve_p1(prob) : solve_convex(prob, opts);
}

namespace {

std::vector<std::vector<CellIndex>> children_in_rows(const CarpetSpec& spec, const CellIndex& parent) {
  std::vector<std::vector<CellIndex>> rows(spec.ell());
  for (const auto& ch : spec.children(parent)) rows[ch.y - parent.y * spec.ell()].push_back(ch);
  for (auto& r : rows) std::sort(r.begin(), r.end(), [](const CellIndex& a, const CellIndex& b) { return a.x < b.x; });
  return rows;
}

ModulusProblem carpet_cells_problem(const CarpetSpec& spec, int n, std::unordered_map<CellIndex, std::size_t, CellHash>& index) {
  ModulusProblem prob;
  const auto cells = build_generation(spec, n);
  const Rational mass = inverse_power(static_cast<std::int64_t>(spec.k()) * spec.ell(), n);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    index[cells[i]] = i;
    prob.cells.push_back(cells[i].digit_string(spec.m(), spec.ell()));
    prob.mass.push_back(mass);
  }
  return prob;
}

SparseRow lambda_row(const CarpetSpec& spec, int n, const std::vector<CellIndex>& selected,
                     const std::unordered_map<CellIndex, std::size_t, CellHash>& index) {
  SparseRow row;
  const Rational w = inverse_power(spec.ell(), n);
  for (const auto& c : selected) row.emplace_back(index.at(c), w);
  std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return row;
}

}  // namespace

std::uint64_t vertical_family_count(const CarpetSpec& spec, int n) {
  // Uniform fibers: each of the ell^j selected parents at generation j picks
  // one of k children in each of ell rows.
  long double log_count = 0.0L;
  for (int j = 0; j < n; ++j) log_count += std::pow(static_cast<long double>(spec.ell()), j + 1) * std::log2l(spec.k());
  if (log_count >= 63.0L) return std::numeric_limits<std::uint64_t>::max();
  std::uint64_t count = 1;
  for (int j = 0; j < n; ++j) {
    const auto choices = static_cast<std::uint64_t>(ipow(spec.ell(), j + 1));
    for (std::uint64_t i = 0; i < choices; ++i) count *= static_cast<std::uint64_t>(spec.k());
  }
  return count;
}

ModulusProblem vertical_problem(const CarpetSpec& spec, int n, std::size_t budget) {
  const auto total = vertical_family_count(spec, n);
  if (total > budget)
    throw ModulusError("vertical family count " + std::to_string(total) + " exceeds the budget " +
                       std::to_string(budget));
  std::unordered_map<CellIndex, std::size_t, CellHash> index;
  ModulusProblem prob = carpet_cells_problem(spec, n, index);

  // Depth-first over generations; at each generation an odometer runs over
  // the (parent, row) choices of the current frontier.
  std::vector<CellIndex> frontier{CellIndex{}};
  auto recurse = [&](auto&& self, const std::vector<CellIndex>& front, int g) -> void {
    if (g == n) {
      prob.families.push_back(lambda_row(spec, n, front, index));
      return;
    }
    std::vector<std::vector<CellIndex>> slots;
    for (const auto& parent : front)
      for (auto& row : children_in_rows(spec, parent)) slots.push_back(std::move(row));
    std::vector<std::size_t> odo(slots.size(), 0);
    for (;;) {
      std::vector<CellIndex> next;
      next.reserve(slots.size());
      for (std::size_t s = 0; s < slots.size(); ++s) next.push_back(slots[s][odo[s]]);
      self(self, next, g + 1);
      std::size_t s = 0;
      while (s < slots.size() && ++odo[s] == slots[s].size()) odo[s++] = 0;
      if (s == slots.size()) break;
    }
  };
  recurse(recurse, frontier, 0);
  return prob;
}

ModulusProblem sampled_vertical_problem(const CarpetSpec& spec, int n, std::size_t count, std::uint64_t seed) {
  std::unordered_map<CellIndex, std::size_t, CellHash> index;
  ModulusProblem prob = carpet_cells_problem(spec, n, index);
  std::set<std::vector<std::size_t>> seen;
  for (std::size_t i = 0; i < count; ++i) {
    const auto sel = random_selection(spec, n, seed + i);
    auto row = lambda_row(spec, n, sel.selected(n), index);
    std::vector<std::size_t> key;
    for (const auto& e : row) key.push_back(e.first);
    if (seen.insert(key).second) prob.families.push_back(std::move(row));
  }
  return prob;
}

VerticalModulus carpet_vertical_modulus(const CarpetSpec& spec, int n, std::size_t budget, std::size_t samples,
                                        std::uint64_t seed) {
  VerticalModulus out;
  ModulusProblem prob;
  if (vertical_family_count(spec, n) <= budget) {
    prob = vertical_problem(spec, n, budget);
  } else {
    prob = sampled_vertical_problem(spec, n, samples, seed);
    out.sampled = true;
  }
  out.families = prob.families.size();
  const auto res = mod_p(prob);
  out.value = *res.exact_value;
  out.certified = res.certified;
  return out;
}

Rational integrate_mu(const CarpetSpec& spec, int n, const std::vector<Rational>& rho) {
  Rational sum = 0;
  for (const auto& r : rho) sum += r;
  return sum * inverse_power(static_cast<std::int64_t>(spec.k()) * spec.ell(), n);
}

RhoInfinity rho_infinity(const CarpetSpec& spec, int n, const std::vector<Rational>& rho) {
  const auto cells = build_generation(spec, n);
  if (rho.size() != cells.size()) throw ModulusError("density must cover every generation-n cell");
  for (const auto& r : rho)
    if (sgn(r) < 0) throw ModulusError("density must be nonnegative");

  // Subtree sums and leaf counts; mu is uniform on generation-n cells, so
  // the mu-average of rho over a subtree is sum / count.
  std::unordered_map<CellIndex, std::pair<Rational, std::size_t>, CellHash> agg;
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (int g = 0; g <= n; ++g) {
      auto& a = agg[cells[i].ancestor(g, spec.m(), spec.ell())];
      a.first += rho[i];
      ++a.second;
    }
  auto average = [&](const CellIndex& c) {
    const auto& a = agg.at(c);
    return a.first / static_cast<unsigned long>(a.second);
  };

  RhoInfinity out;
  out.selection = VerticalSelection(spec, n, [&](const CellIndex&, int, const std::vector<CellIndex>& cand) {
    std::size_t best = 0;
    Rational best_avg = average(cand[0]);
    for (std::size_t i = 1; i < cand.size(); ++i) {
      const Rational v = average(cand[i]);
      if (v < best_avg) {
        best_avg = v;
        best = i;
      }
    }
    return best;
  });
  std::unordered_map<std::int64_t, Rational> by_height;
  std::unordered_map<CellIndex, std::size_t, CellHash> position;
  for (std::size_t i = 0; i < cells.size(); ++i) position[cells[i]] = i;
  for (const auto& c : out.selection.selected(n)) by_height[c.y] = rho[position.at(c)];
  out.rho_inf.reserve(cells.size());
  for (const auto& c : cells) out.rho_inf.push_back(by_height.at(c.y));
  return out;
}

SubadditivityReport mod_subadditivity_check(const std::vector<ModulusProblem>& probs, const ModulusOptions& opts) {
  if (probs.empty()) throw ModulusError("no problems to compare");
  ModulusProblem all = probs[0];
  all.families.clear();
  for (const auto& pr : probs) {
    if (pr.p != all.p || pr.mass != all.mass) throw ModulusError("problems must share cells, masses and p");
    all.families.insert(all.families.end(), pr.families.begin(), pr.families.end());
  }
  SubadditivityReport rep;
  const auto whole = mod_p(all, opts);
  rep.union_value = whole.value;
  std::optional<Rational> exact_sum = Rational(0);
  for (const auto& pr : probs) {
    const auto r = mod_p(pr, opts);
    rep.parts.push_back(r.value);
    rep.sum_of_parts += r.value;
    if (exact_sum && r.exact_value) *exact_sum += *r.exact_value;
    else exact_sum.reset();
  }
  if (whole.exact_value && exact_sum) rep.holds = *whole.exact_value <= *exact_sum;
  else rep.holds = rep.union_value <= rep.sum_of_parts + 10 * opts.tolerance * std::max(1.0, rep.sum_of_parts);
  return rep;
}

namespace {

Rational json_rational(const nlohmann::json& v) {
  if (v.is_string()) return parse_rational(v.get<std::string>());
  if (v.is_number_integer()) return Rational(mpz_class(v.get<long>()));
  if (v.is_number()) return Rational(v.get<double>());
  throw ModulusError("expected a number or fraction string");
}

}  // namespace

ModulusProblem modulus_from_json(const nlohmann::json& doc) {
  ModulusProblem prob;
  prob.p = doc.value("p", 1.0);
  std::map<std::string, std::size_t> ids;
  for (const auto& c : doc.at("cells")) {
    const auto id = c.at("id").get<std::string>();
    if (ids.count(id)) throw ModulusError("duplicate cell id " + id);
    ids[id] = prob.cells.size();
    prob.cells.push_back(id);
    prob.mass.push_back(json_rational(c.at("mass")));
  }
  for (const auto& fam : doc.at("families")) {
    SparseRow row;
    for (const auto& entry : fam) {
      const auto id = entry.at(0).get<std::string>();
      auto it = ids.find(id);
      if (it == ids.end()) throw ModulusError("family references missing cell " + id);
      row.emplace_back(it->second, json_rational(entry.at(1)));
    }
    prob.families.push_back(std::move(row));
  }
  prob.validate();
  return prob;
}

nlohmann::json modulus_to_json(const ModulusProblem& prob) {
  nlohmann::json doc;
  doc["p"] = prob.p;
  doc["cells"] = nlohmann::json::array();
  for (std::size_t i = 0; i < prob.cells.size(); ++i)
    doc["cells"].push_back({{"id", prob.cells[i]}, {"mass", to_string(prob.mass[i])}});
  doc["families"] = nlohmann::json::array();
  for (const auto& row : prob.families) {
    auto fam = nlohmann::json::array();
    for (const auto& [j, w] : row) fam.push_back({prob.cells[j], to_string(w)});
    doc["families"].push_back(fam);
  }
  return doc;
}

nlohmann::json result_to_json(const ModulusResult& res, const ModulusProblem& prob) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["p"] = prob.p;
  doc["value"] = res.value;
  if (res.exact_value) doc["value_exact"] = to_string(*res.exact_value);
  doc["certified"] = res.certified;
  doc["lower_bound"] = res.lower_bound;
  doc["upper_bound"] = res.upper_bound;
  doc["gap"] = res.gap;
  doc["iterations"] = res.iterations;
  return doc;
}

}  // namespace cdlab
