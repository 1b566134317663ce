#include "cdlab/experiments.hpp"

#include "cdlab/brownian.hpp"
#include "cdlab/decomposition.hpp"
#include "cdlab/geometry.hpp"
#include "cdlab/hmeasure.hpp"
#include "cdlab/local_time.hpp"
#include "cdlab/modulus.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <thread>

namespace cdlab {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const auto h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

json box_json(const BoxCount& b) {
  return {{"generations", b.generations}, {"counts", b.counts}, {"slope", b.slope}, {"intercept", b.intercept}};
}

json criterion(int id, std::string name, bool pass, double seconds) {
  return {{"id", id}, {"name", std::move(name)}, {"pass", pass}, {"seconds", seconds}};
}

}  // namespace

std::size_t worker_count() {
  if (const char* env = std::getenv("CDLAB_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& job) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mu;
  auto run = [&] {
    for (;;) {
      const auto i = next.fetch_add(1);
      if (i >= n || failed) return;
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  if (workers == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

CarpetSpec default_spec(int max_generation) {
  return CarpetSpec::fixed(Pattern(4, 2, {{0, 0}, {2, 0}, {1, 1}, {3, 1}}), max_generation);
}

// ---------------------------------------------------------------------------
// Carpet suite

namespace {

json carpet_box(const CarpetSuiteConfig& cfg, const Dimensions& dims, double tol) {
  const auto t0 = Clock::now();
  const int g = cfg.box_generation;
  const auto spec = cfg.spec.with_max_generation(std::max(g, cfg.spec.max_generation()));
  std::vector<Point> pts;
  for (const auto& c : build_generation(spec, g)) pts.push_back({c.center_x(spec.m()), c.center_y(spec.ell())});
  const double res = std::max(std::pow(spec.m(), -g), std::pow(spec.ell(), -g));
  const auto bc = box_count_dim(PointCloud(std::move(pts), res), cfg.box_gens);
  auto c = criterion(1, "carpet box dimension", std::abs(bc.slope - dims.hausdorff) <= tol, since(t0));
  c["slope"] = bc.slope;
  c["target"] = dims.hausdorff;
  c["tolerance"] = tol;
  c["regression"] = box_json(bc);
  return c;
}

json carpet_slice(const CarpetSuiteConfig& cfg, const Dimensions& dims, double tol) {
  const auto t0 = Clock::now();
  const int g = cfg.slice_generation;
  const auto spec = cfg.spec.with_max_generation(std::max(g, cfg.spec.max_generation()));
  const auto tree = slice_measure(spec, parse_rational(cfg.slice_level), g);
  std::vector<Point> pts;
  for (auto i : tree.generation(g)) pts.push_back({tree.node(i).cell.center_x(spec.m()), 0.0});
  const auto bc = box_count_dim(PointCloud(std::move(pts), std::pow(spec.m(), -g)), cfg.slice_gens);
  auto c = criterion(2, "carpet slice dimension", std::abs(bc.slope - dims.slice) <= tol, since(t0));
  c["level"] = cfg.slice_level;
  c["slope"] = bc.slope;
  c["target"] = dims.slice;
  c["tolerance"] = tol;
  c["regression"] = box_json(bc);
  return c;
}

json carpet_identities(const CarpetSuiteConfig& cfg) {
  const auto t0 = Clock::now();
  const int g = cfg.identity_generation;
  std::vector<std::pair<std::string, CarpetSpec>> specs{
      {cfg.name, cfg.spec.with_max_generation(std::max(g, cfg.spec.max_generation()))},
      {"block-12x3", affine_carpet(block_graph(4, 3), g)},
      {"random-4x2", CarpetSpec::generated(4, 2, 2, random_pattern_generator(4, 2, 2, cfg.seed), g, "random")}};
  bool pass = true;
  json per = json::array();
  for (const auto& [name, spec] : specs) {
    std::size_t checked = 0, failures = 0;
    for (int n = 1; n <= g; ++n) {
      const auto dis = check_disintegration(spec, n);
      const auto push = check_pushforward(spec, n);
      checked += dis.entries.size() + push.entries.size();
      failures += dis.failures() + push.failures();
    }
    pass = pass && failures == 0;
    per.push_back({{"spec", name}, {"checked", checked}, {"failures", failures}});
  }
  auto c = criterion(3, "exact measure identities", pass, since(t0));
  c["generation"] = g;
  c["specs"] = per;
  return c;
}

json carpet_modulus(const CarpetSuiteConfig& cfg, json& values) {
  const auto t0 = Clock::now();
  bool pass = true;
  for (int n : cfg.modulus_generations) {
    const auto spec = cfg.spec.with_max_generation(std::max(n, cfg.spec.max_generation()));
    const auto vm = carpet_vertical_modulus(spec, n);
    const bool ok = vm.value == 1 && vm.certified && !vm.sampled;
    pass = pass && ok;
    values.push_back({{"generation", n},
                      {"value", to_string(vm.value)},
                      {"families", vm.families},
                      {"sampled", vm.sampled},
                      {"certified", vm.certified}});
  }
  auto c = criterion(4, "vertical modulus equals one", pass, since(t0));
  c["values"] = values;
  return c;
}

json carpet_rho_infinity(const CarpetSuiteConfig& cfg) {
  const auto t0 = Clock::now();
  const int n = cfg.rho_generation;
  const auto spec = cfg.spec.with_max_generation(std::max(n, cfg.spec.max_generation()));
  const auto prob = vertical_problem(spec, n, 1u << 20);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<int> num(0, 20), den(1, 10);
  std::size_t ok = 0, trials = 0;
  Rational worst_ratio = 0;
  while (trials < cfg.rho_trials) {
    std::vector<Rational> rho(prob.cells.size());
    for (auto& r : rho) r = Rational(num(rng), den(rng));
    for (auto& r : rho) r.canonicalize();
    const auto adm = is_admissible(rho, prob);
    if (!adm.exact_min || sgn(*adm.exact_min) == 0) continue;
    for (auto& r : rho) r /= *adm.exact_min;
    ++trials;
    const auto out = rho_infinity(spec, n, rho);
    const Rational before = integrate_mu(spec, n, rho), after = integrate_mu(spec, n, out.rho_inf);
    if (after <= before && is_admissible(out.rho_inf, prob).admissible) ++ok;
    if (sgn(before) > 0) worst_ratio = std::max(worst_ratio, Rational(after / before));
  }
  auto c = criterion(5, "rho_infinity contract", ok == trials, since(t0));
  c["trials"] = trials;
  c["passed"] = ok;
  c["max_mass_ratio"] = to_double(worst_ratio);
  return c;
}

json carpet_alpha_trees(const CarpetSuiteConfig& cfg) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(cfg.seed + 6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < cfg.tree_trials; ++i) {
    const double alpha = 0.05 + 0.94 * unit(rng);
    const double eps = max_third_eps(alpha) * unit(rng);
    const auto tree = random_third_tree(cfg.tree_depth, alpha, eps, rng);
    const double ratio = alpha_ratio_sup(tree, alpha_measure(tree, alpha), alpha);
    worst = std::max(worst, ratio);
    if (ratio <= 1.0 + 1e-12) ++ok;
  }
  auto c = criterion(6, "alpha-measure bound", ok == cfg.tree_trials, since(t0));
  c["trees"] = cfg.tree_trials;
  c["passed"] = ok;
  c["max_ratio"] = worst;
  return c;
}

json carpet_lambda(const CarpetSuiteConfig& cfg) {
  const auto t0 = Clock::now();
  const int depth = cfg.lambda_depth;
  const auto spec = cfg.spec.with_max_generation(std::max(depth, cfg.spec.max_generation()));
  const int m = spec.m(), ell = spec.ell();
  const Rational floor_r = inverse_power(ell, depth - 1);
  const Rational ell2 = Rational(ell * ell);
  std::size_t balls = 0, ok = 0;
  for (const auto& sel : {lowest_column_selection(spec, depth), random_selection(spec, depth, cfg.seed)}) {
    for (const auto& cell : sel.selected(depth)) {
      const Rational cx = cell.x0(m) + cell.width(m) / 2, cy = cell.y0(ell) + cell.height(ell) / 2;
      for (Rational r = 1; r > floor_r; r /= 2) {
        ++balls;
        if (vertical_lambda_inside(spec, sel, depth, cx, cy, r) >= r / ell2) ++ok;
      }
    }
  }
  auto c = criterion(13, "lambda_E lower bound (carpet)", ok == balls, since(t0));
  c["part"] = "carpet";
  c["balls"] = balls;
  c["passed"] = ok;
  return c;
}

json snowflake_checks(const CarpetSuiteConfig& cfg, json& box) {
  const auto t0 = Clock::now();
  const std::size_t n = cfg.snowflake_points;
  std::vector<Point> seg;
  for (std::size_t i = 0; i <= n; ++i) seg.push_back({static_cast<double>(i) / static_cast<double>(n), 0.0});
  const PointCloud line(std::move(seg), 1.0 / static_cast<double>(n));
  const auto bc = box_count_dim(snowflake(line, 0.5), cfg.snowflake_gens);
  box = box_json(bc);

  std::mt19937_64 rng(cfg.seed + 14);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Point> sample;
  for (std::size_t i = 0; i < cfg.qs_points; ++i) sample.push_back({unit(rng), 0.0});
  const PointCloud pts(std::move(sample), 1e-9);
  const double excess = qs_max_excess(euclidean(pts), snowflake(pts, 0.5), [](double t) { return std::sqrt(t); });
  const bool pass = std::abs(bc.slope - 2.0) <= 0.1 && excess <= 1e-12;
  auto c = criterion(14, "snowflake sanity", pass, since(t0));
  c["slope"] = bc.slope;
  c["target"] = 2.0;
  c["max_excess"] = excess;
  c["points"] = cfg.qs_points;
  return c;
}

}  // namespace

json run_carpet_suite(const CarpetSuiteConfig& cfg) {
  const auto& spec = cfg.spec;
  const auto dims = dim_formula(spec.m(), spec.ell(), spec.k());
  json report{{"schema_version", kReportSchemaVersion}, {"kind", "carpet"}, {"spec_name", cfg.name}};
  report["spec"] = carpet_to_json(spec);
  report["dimensions"] = {{"hausdorff", dims.hausdorff}, {"slice", dims.slice}};

  json criteria = json::array();
  criteria.push_back(carpet_box(cfg, dims, cfg.tol.value_or(cfg.box_tol)));
  criteria.push_back(carpet_slice(cfg, dims, cfg.tol.value_or(cfg.slice_tol)));
  criteria.push_back(carpet_identities(cfg));
  json modulus = json::array();
  criteria.push_back(carpet_modulus(cfg, modulus));
  criteria.push_back(carpet_rho_infinity(cfg));
  criteria.push_back(carpet_alpha_trees(cfg));
  criteria.push_back(carpet_lambda(cfg));
  json snow_box;
  criteria.push_back(snowflake_checks(cfg, snow_box));
  report["criteria"] = criteria;
  report["modulus"] = modulus;
  report["snowflake_regression"] = snow_box;

  const int fine = cfg.doubling_generation;
  const auto dspec = spec.with_max_generation(std::max(fine, spec.max_generation()));
  const auto drep = check_doubling(dspec, fine, sample_doubling_balls(dspec, fine, cfg.doubling_balls, cfg.seed));
  report["doubling"] = {{"generation", fine},
                        {"balls", drep.balls},
                        {"max_ratio", drep.max_ratio},
                        {"neighbor_bound_holds", drep.neighbor_bound_holds}};
  report["approximate_squares"] = approximate_squares(dspec, fine).size();
  report["pass"] = report_passed(report);
  return report;
}

// ---------------------------------------------------------------------------
// Brownian suite

namespace {

struct Substitution {
  std::uint64_t seed, used;
  std::string reason;
};

// Stopped path, resampling with seed + k 2^32 when the budget runs out.
BrownianPath stopped_path(std::uint64_t seed, double dt, double level, std::uint64_t budget,
                          std::vector<Substitution>& subs) {
  SimulateOptions o;
  o.stop_level = level;
  o.max_steps = budget;
  for (std::uint64_t k = 0;; ++k) {
    const std::uint64_t s = seed + (k << 32);
    try {
      auto p = simulate(s, dt, o);
      if (k > 0) subs.push_back({seed, s, "level not reached within the step budget"});
      return p;
    } catch (const PathError&) {
      if (k >= 64) throw;
    }
  }
}

json subs_json(const std::vector<Substitution>& subs) {
  json out = json::array();
  for (const auto& s : subs) out.push_back({{"seed", s.seed}, {"used_seed", s.used}, {"reason", s.reason}});
  return out;
}

struct LocalSeed {
  std::uint64_t seed = 0, used = 0;
  double t_end = 0.0;
  std::size_t positive = 0, sampled = 0;
  double holder = 0.0;
  double rel_change = 0.0;
  BoxCount graph, slice;
  double sim_s = 0.0, local_s = 0.0, dims_s = 0.0;
  std::vector<Substitution> subs;
};

LocalSeed local_seed(const BrownianSuiteConfig& cfg, std::uint64_t seed) {
  LocalSeed r;
  r.seed = seed;
  const int g = cfg.local_g;
  auto t0 = Clock::now();
  const auto path = stopped_path(seed, std::ldexp(1.0, -2 * g), 1.0, cfg.local_budget, r.subs);
  r.used = path.seed;
  r.t_end = path.t_end();
  r.sim_s = since(t0);

  t0 = Clock::now();
  const auto field = local_time_field(path, {g - 1, g}, 0.0, 1.0);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> changes;
  for (std::size_t i = 0; i < cfg.levels_per_seed; ++i) {
    const double a = unit(rng);
    const double L = field.local_time(a, g, r.t_end), prev = field.local_time(a, g - 1, r.t_end);
    ++r.sampled;
    if (L > 0) ++r.positive;
    if (prev > 0) changes.push_back(std::abs(L - prev) / prev);
  }
  r.rel_change = median(changes);
  r.holder = holder_exponent(field, g, r.t_end, cfg.holder_scales).exponent;
  r.local_s = since(t0);

  t0 = Clock::now();
  r.graph = graph_box_count(path, cfg.graph_gens);
  r.slice = slice_box_count(path, cfg.slice_level, cfg.slice_gens);
  r.dims_s = since(t0);
  return r;
}

struct DecompSeed {
  std::uint64_t seed = 0, used = 0;
  double t_end = 0.0;
  PartitionReport partition;
  std::vector<std::size_t> elements, flat;
  bool tree_ok = false, second_tree_ok = false, trees_differ = false;
  LambdaBallReport lambda;
  double a_like_fraction = 0.0;
  double coverage_fraction = 0.0;
  double mass_c = 0.0, mass_slope = 0.0;
  double occupation = 0.0, window_mass = 0.0;
  double sim_s = 0.0, decomp_s = 0.0, partition_s = 0.0, lambda_s = 0.0, mass_s = 0.0;
  std::vector<Substitution> subs;
};

DecompSeed decomposition_seed(const BrownianSuiteConfig& cfg, std::uint64_t seed) {
  DecompSeed r;
  r.seed = seed;
  const int g = cfg.decomposition_g;
  auto t0 = Clock::now();
  const auto path = stopped_path(seed, std::ldexp(1.0, -2 * g), 6.0, cfg.decomposition_budget, r.subs);
  r.used = path.seed;
  r.t_end = path.t_end();
  r.sim_s = since(t0);

  t0 = Clock::now();
  const auto d = decompose(path, g);
  r.decomp_s = since(t0);
  std::size_t spanning = 0, total = 0;
  for (int n = 1; n <= g; ++n) {
    r.elements.push_back(d.generation(n).size());
    r.flat.push_back(d.flat_count(n));
    for (const auto& e : d.generation(n)) {
      ++total;
      if (e.coverage >= 0.99) ++spanning;
    }
  }
  r.coverage_fraction = total ? static_cast<double>(spanning) / static_cast<double>(total) : 0.0;

  t0 = Clock::now();
  r.partition = check_partition(d, path, cfg.partition_stride);
  r.partition_s = since(t0);

  t0 = Clock::now();
  const auto tree = extract_vertical_cantor(d, g, narrowest_chooser());
  const auto other = extract_vertical_cantor(d, g, random_chooser(seed));
  r.tree_ok = check_vertical_tree(d, tree);
  r.second_tree_ok = check_vertical_tree(d, other);
  r.trees_differ = tree.nodes != other.nodes;
  r.lambda = lambda_ball_test(d, tree, path, cfg.lambda_tests, std::ldexp(1.0, -g + 2), 0.25, seed);
  std::size_t a_like_count = 0;
  for (std::size_t i = 0; i < tree.nodes.back().size(); ++i)
    if (a_like(d, g, tree.nodes.back()[i], cfg.a_like_n0)) ++a_like_count;
  r.a_like_fraction = static_cast<double>(a_like_count) / static_cast<double>(tree.nodes.back().size());
  r.lambda_s = since(t0);

  // Upper mass bound and the full-window discretisation, reported only.
  t0 = Clock::now();
  const int nl = g - cfg.mass_coarsening;
  const auto field = local_time_field(path, {nl}, 0.0, 1.0);
  r.window_mass = graph_measure(field, nl, 0.0, r.t_end, 0.0, 1.0);
  for (std::size_t i = 1; i < path.values.size(); ++i) {
    const double w = 0.5 * (path.values[i - 1] + path.values[i]);
    if (w > 0.0 && w <= 1.0) r.occupation += path.dt;
  }
  std::mt19937_64 rng(seed + 77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> lr, lm;
  const double r_min = std::ldexp(1.0, -g + 3), r_max = 0.25;
  while (lr.size() < cfg.mass_balls) {
    const double t = unit(rng) * r.t_end, y = path.at(t);
    if (y < 0.0 || y > 1.0) continue;
    const double rad = std::exp(std::log(r_min) + unit(rng) * (std::log(r_max) - std::log(r_min)));
    const double mass = graph_ball_mass(field, nl, t, y, rad);
    r.mass_c = std::max(r.mass_c, mass / std::pow(rad, 1.4));
    if (mass > 0) {
      lr.push_back(std::log2(rad));
      lm.push_back(std::log2(mass));
    } else {
      lr.push_back(std::log2(rad));
      lm.push_back(std::nan(""));
    }
  }
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < lr.size(); ++i)
    if (!std::isnan(lm[i])) {
      xs.push_back(lr[i]);
      ys.push_back(lm[i]);
    }
  if (xs.size() >= 2) r.mass_slope = least_squares(xs, ys).slope;
  r.mass_s = since(t0);
  return r;
}

struct SlowSeed {
  std::uint64_t seed = 0;
  SlowPointCounts counts;
  bool within = false;
  double seconds = 0.0;
};

SlowSeed slow_seed(const BrownianSuiteConfig& cfg, std::uint64_t seed) {
  SlowSeed r;
  r.seed = seed;
  const auto t0 = Clock::now();
  SimulateOptions o;
  const int n0 = *std::min_element(cfg.slow_ns.begin(), cfg.slow_ns.end());
  o.t_end = 1.0 + std::exp2(-cfg.slow_alpha * (n0 + 1));
  o.max_steps = std::uint64_t{1} << 28;
  const auto path = simulate(seed, std::ldexp(1.0, -2 * cfg.slow_g), o);
  r.counts = slow_point_counts(path, cfg.slow_alpha, cfg.slow_ns);
  r.within = true;
  for (std::size_t i = 0; i < r.counts.n.size(); ++i)
    if (static_cast<double>(r.counts.counts[i]) > std::exp2((0.5 + cfg.slow_eps) * (r.counts.n[i] + 1)))
      r.within = false;
  r.seconds = since(t0);
  return r;
}

}  // namespace

json run_brownian_suite(const BrownianSuiteConfig& in) {
  BrownianSuiteConfig cfg = in;
  if (cfg.seeds.empty())
    for (std::uint64_t s = 1; s <= 100; ++s) cfg.seeds.push_back(s);
  std::sort(cfg.seeds.begin(), cfg.seeds.end());
  const std::size_t workers = cfg.workers ? cfg.workers : worker_count();
  const std::size_t S = cfg.seeds.size();

  json report{{"schema_version", kReportSchemaVersion}, {"kind", "brownian"}, {"seeds", cfg.seeds}};
  report["workers"] = workers;
  json criteria = json::array();
  std::vector<Substitution> subs;

  // Hitting law: survival below 1 up to time 1.
  {
    const auto t0 = Clock::now();
    const double dt = std::ldexp(1.0, -2 * cfg.hitting_g);
    std::atomic<std::size_t> survivors{0};
    const std::size_t chunks = std::max<std::size_t>(workers * 8, 1);
    parallel_for(chunks, workers, [&](std::size_t c) {
      std::size_t local = 0;
      for (std::size_t i = c; i < cfg.hitting_paths; i += chunks)
        if (survives_below(i + 1, dt, 1.0, 1.0)) ++local;
      survivors += local;
    });
    const double p = static_cast<double>(survivors) / static_cast<double>(cfg.hitting_paths);
    const double target = std::erf(1.0 / std::sqrt(2.0));
    const double tol = cfg.tol.value_or(cfg.hitting_tol);
    auto c = criterion(7, "hitting law P(T1 > 1)", std::abs(p - target) <= tol, since(t0));
    c["paths"] = cfg.hitting_paths;
    c["dt"] = dt;
    c["estimate"] = p;
    c["target"] = target;
    c["tolerance"] = tol;
    criteria.push_back(c);
  }

  // Local time, graph and slice dimensions on T1-stopped paths.
  std::vector<LocalSeed> local(S);
  {
    const auto t0 = Clock::now();
    parallel_for(S, workers, [&](std::size_t i) { local[i] = local_seed(cfg, cfg.seeds[i]); });
    const double wall = since(t0);
    std::size_t pos = 0, sampled = 0;
    std::vector<double> holder, graph, slice, change;
    double sim = 0, lt = 0, dims = 0;
    json per = json::array();
    for (const auto& r : local) {
      pos += r.positive;
      sampled += r.sampled;
      holder.push_back(r.holder);
      graph.push_back(r.graph.slope);
      slice.push_back(r.slice.slope);
      if (!std::isnan(r.rel_change)) change.push_back(r.rel_change);
      sim += r.sim_s;
      lt += r.local_s;
      dims += r.dims_s;
      subs.insert(subs.end(), r.subs.begin(), r.subs.end());
      per.push_back({{"seed", r.seed},
                     {"used_seed", r.used},
                     {"t_end", r.t_end},
                     {"positive", r.positive},
                     {"sampled", r.sampled},
                     {"holder", r.holder},
                     {"local_time_relative_change", r.rel_change},
                     {"graph", box_json(r.graph)},
                     {"slice", box_json(r.slice)}});
    }
    const double frac = sampled ? static_cast<double>(pos) / static_cast<double>(sampled) : 0.0;
    const double hmed = median(holder);
    auto c8 = criterion(8, "local time positivity and Hölder exponent",
                        frac >= cfg.positivity_fraction && hmed >= cfg.holder_min, lt);
    c8["positive_fraction"] = frac;
    c8["median_holder"] = hmed;
    c8["holder_scales"] = cfg.holder_scales;
    c8["median_relative_change"] = median(change);
    c8["ensemble_seconds"] = sim;
    criteria.push_back(c8);
    const double gmed = median(graph), smed = median(slice);
    auto c9 = criterion(9, "Brownian graph and slice dimensions",
                        gmed >= 1.35 && gmed <= 1.65 && smed >= 0.35 && smed <= 0.65, dims);
    c9["median_graph_slope"] = gmed;
    c9["median_slice_slope"] = smed;
    c9["graph_gens"] = cfg.graph_gens;
    c9["slice_gens"] = cfg.slice_gens;
    c9["slice_level"] = cfg.slice_level;
    c9["ensemble_seconds"] = sim;
    criteria.push_back(c9);
    report["local_ensemble"] = {{"g", cfg.local_g}, {"wall_seconds", wall}, {"simulation_seconds", sim}, {"per_seed", per}};
  }

  // Decomposition ensemble on T6-stopped paths.
  std::vector<DecompSeed> dec(S);
  {
    const auto t0 = Clock::now();
    parallel_for(S, workers, [&](std::size_t i) { dec[i] = decomposition_seed(cfg, cfg.seeds[i]); });
    const double wall = since(t0);
    const int g = cfg.decomposition_g;
    double sim = 0, dcs = 0, ps = 0, ls = 0;
    bool structure = true;
    std::size_t flat_ok = 0, lam_tests = 0, lam_pass = 0;
    std::vector<double> a_like_fr, cover, mass_c, mass_slope, window_err;
    json per = json::array();
    std::vector<std::vector<double>> flat_by_n(static_cast<std::size_t>(g));
    for (const auto& r : dec) {
      sim += r.sim_s;
      dcs += r.decomp_s;
      ps += r.partition_s;
      ls += r.lambda_s;
      subs.insert(subs.end(), r.subs.begin(), r.subs.end());
      structure = structure && r.partition.disjoint && r.partition.nested;
      bool within = true;
      for (int n = cfg.flat_first; n <= g; ++n)
        if (static_cast<double>(r.flat[static_cast<std::size_t>(n - 1)]) > std::exp2((0.5 + cfg.flat_eps) * (n + 1)))
          within = false;
      if (within) ++flat_ok;
      for (int n = 1; n <= g; ++n) flat_by_n[static_cast<std::size_t>(n - 1)].push_back(static_cast<double>(r.flat[static_cast<std::size_t>(n - 1)]));
      lam_tests += r.lambda.tests;
      lam_pass += r.lambda.passed;
      a_like_fr.push_back(r.a_like_fraction);
      cover.push_back(r.coverage_fraction);
      mass_c.push_back(r.mass_c);
      mass_slope.push_back(r.mass_slope);
      if (r.occupation > 0) window_err.push_back(std::abs(r.window_mass - r.occupation) / r.occupation);
      per.push_back({{"seed", r.seed},
                     {"used_seed", r.used},
                     {"t_end", r.t_end},
                     {"disjoint", r.partition.disjoint},
                     {"nested", r.partition.nested},
                     {"covered", r.partition.covered},
                     {"uncovered_samples", r.partition.uncovered},
                     {"elements", r.elements},
                     {"flat", r.flat},
                     {"flat_within_bound", within},
                     {"trees_valid", r.tree_ok && r.second_tree_ok},
                     {"trees_differ", r.trees_differ},
                     {"lambda_tests", r.lambda.tests},
                     {"lambda_passed", r.lambda.passed},
                     {"a_like_fraction", r.a_like_fraction},
                     {"spanning_fraction", r.coverage_fraction},
                     {"mass_constant", r.mass_c},
                     {"mass_slope", r.mass_slope},
                     {"window_mass", r.window_mass},
                     {"occupation_time", r.occupation}});
    }

    // Monotone synthetic path 0 -> 1: one element per band.
    const auto tm = Clock::now();
    const std::size_t M = std::size_t{1} << (2 * g);
    std::vector<double> ramp(M + 1);
    for (std::size_t i = 0; i <= M; ++i) ramp[i] = static_cast<double>(i) / static_cast<double>(M);
    const auto mono = decompose(path_from_values(1.0 / static_cast<double>(M), std::move(ramp)), g);
    bool mono_ok = true;
    json mono_counts = json::array();
    for (int n = 1; n <= g; ++n) {
      mono_counts.push_back(mono.generation(n).size());
      mono_ok = mono_ok && mono.generation(n).size() == (std::size_t{1} << n);
    }
    const double mono_s = since(tm);

    auto c10 = criterion(10, "decomposition structure", structure && mono_ok, dcs + ps + mono_s);
    c10["all_seeds_disjoint_and_nested"] = structure;
    c10["monotone_counts"] = mono_counts;
    c10["monotone_exact"] = mono_ok;
    c10["median_spanning_fraction"] = median(cover);
    c10["ensemble_seconds"] = sim;
    criteria.push_back(c10);

    const auto need = static_cast<std::size_t>(std::ceil(cfg.seed_fraction * static_cast<double>(S)));
    auto c11 = criterion(11, "flat-element scarcity", flat_ok >= need, dcs);
    c11["seeds_within_bound"] = flat_ok;
    c11["seeds_required"] = need;
    json env = json::array();
    for (int n = 1; n <= g; ++n)
      env.push_back({{"n", n},
                     {"median_count", median(flat_by_n[static_cast<std::size_t>(n - 1)])},
                     {"bound", std::exp2((0.5 + cfg.flat_eps) * (n + 1))}});
    c11["envelope"] = env;
    c11["ensemble_seconds"] = sim;
    criteria.push_back(c11);

    auto c13 = criterion(13, "lambda_E lower bound (Brownian)",
                         lam_tests && static_cast<double>(lam_pass) >= cfg.lambda_fraction * static_cast<double>(lam_tests),
                         ls);
    c13["part"] = "brownian";
    c13["tests"] = lam_tests;
    c13["passed"] = lam_pass;
    c13["fraction"] = lam_tests ? static_cast<double>(lam_pass) / static_cast<double>(lam_tests) : 0.0;
    c13["median_a_like_fraction"] = median(a_like_fr);
    c13["ensemble_seconds"] = sim;
    criteria.push_back(c13);

    report["decomposition_ensemble"] = {{"g", g},
                                        {"wall_seconds", wall},
                                        {"simulation_seconds", sim},
                                        {"median_mass_constant", median(mass_c)},
                                        {"median_mass_slope", median(mass_slope)},
                                        {"median_window_relative_error", median(window_err)},
                                        {"per_seed", per}};
  }

  // Slow points.
  {
    std::vector<SlowSeed> slow(S);
    const auto t0 = Clock::now();
    parallel_for(S, workers, [&](std::size_t i) { slow[i] = slow_seed(cfg, cfg.seeds[i]); });
    const double wall = since(t0);
    std::size_t ok = 0;
    json per = json::array();
    std::vector<std::vector<double>> by_n(cfg.slow_ns.size());
    for (const auto& r : slow) {
      if (r.within) ++ok;
      for (std::size_t i = 0; i < r.counts.counts.size(); ++i) by_n[i].push_back(static_cast<double>(r.counts.counts[i]));
      per.push_back({{"seed", r.seed}, {"n", r.counts.n}, {"counts", r.counts.counts}, {"within_bound", r.within}});
    }
    const auto need = static_cast<std::size_t>(std::ceil(cfg.seed_fraction * static_cast<double>(S)));
    auto c = criterion(12, "slow-point counts", ok >= need, wall);
    c["alpha"] = cfg.slow_alpha;
    c["seeds_within_bound"] = ok;
    c["seeds_required"] = need;
    json env = json::array();
    for (std::size_t i = 0; i < cfg.slow_ns.size(); ++i)
      env.push_back({{"n", cfg.slow_ns[i]},
                     {"median_count", median(by_n[i])},
                     {"bound", std::exp2((0.5 + cfg.slow_eps) * (cfg.slow_ns[i] + 1))}});
    c["envelope"] = env;
    c["per_seed"] = per;
    criteria.push_back(c);
  }

  std::sort(criteria.begin(), criteria.end(), [](const json& a, const json& b) { return a["id"] < b["id"]; });
  report["criteria"] = criteria;
  report["substitutions"] = subs_json(subs);
  report["pass"] = report_passed(report);
  return report;
}

std::vector<json> report_criteria(const json& report) {
  std::vector<json> out;
  if (report.contains("criteria"))
    for (const auto& c : report["criteria"]) out.push_back(c);
  std::stable_sort(out.begin(), out.end(), [](const json& a, const json& b) { return a["id"] < b["id"]; });
  return out;
}

bool report_passed(const json& report) {
  for (const auto& c : report_criteria(report))
    if (!c.value("pass", false)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Plot data

namespace {

const json* find_criterion(const json& report, int id, const char* part = nullptr) {
  if (!report.is_object() || !report.contains("criteria")) return nullptr;
  for (const auto& c : report["criteria"])
    if (c.value("id", 0) == id && (!part || c.value("part", "") == part)) return &c;
  return nullptr;
}

void write_regression(std::ostream& out, const json& reg) {
  if (!reg.is_object() || !reg.contains("generations")) return;
  const auto& gens = reg["generations"];
  const auto& counts = reg["counts"];
  for (std::size_t i = 0; i < gens.size() && i < counts.size(); ++i)
    out << gens[i].get<int>() << ',' << std::log2(counts[i].get<double>()) << '\n';
}

// Median log2 N per generation over the per-seed regressions under `key`.
void write_median_regression(std::ostream& out, const json& per_seed, const char* key) {
  std::map<int, std::vector<double>> by_n;
  for (const auto& s : per_seed) {
    const auto& reg = s[key];
    for (std::size_t i = 0; i < reg["generations"].size(); ++i)
      by_n[reg["generations"][i].get<int>()].push_back(std::log2(reg["counts"][i].get<double>()));
  }
  for (const auto& [n, v] : by_n) out << n << ',' << median(v) << '\n';
}

void write_envelope(std::ostream& out, const json* c) {
  if (!c || !c->contains("envelope")) return;
  for (const auto& e : (*c)["envelope"])
    out << e["n"].get<int>() << ',' << e["median_count"].get<double>() << ',' << e["bound"].get<double>() << '\n';
}

}  // namespace

std::vector<std::filesystem::path> emit_plots(const json& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> files;
  auto open = [&](const char* name, const char* header) {
    files.push_back(dir / name);
    std::ofstream out(files.back());
    if (!out) throw std::runtime_error("cannot write " + files.back().string());
    out << header << '\n';
    return out;
  };
  const std::string kind = report.is_object() ? report.value("kind", "") : "";
  const bool carpet = kind == "carpet", brownian = kind == "brownian" && report.contains("local_ensemble");

  {
    auto out = open("box_count.csv", "n,log2N");
    if (carpet) {
      if (auto c = find_criterion(report, 1)) write_regression(out, (*c)["regression"]);
    } else if (brownian) {
      write_median_regression(out, report["local_ensemble"]["per_seed"], "graph");
    }
  }
  {
    auto out = open("slice_count.csv", "n,log2N");
    if (carpet) {
      if (auto c = find_criterion(report, 2)) write_regression(out, (*c)["regression"]);
    } else if (brownian) {
      write_median_regression(out, report["local_ensemble"]["per_seed"], "slice");
    }
  }
  {
    auto out = open("snowflake_count.csv", "n,log2N");
    if (carpet && report.contains("snowflake_regression")) write_regression(out, report["snowflake_regression"]);
  }
  {
    auto out = open("modulus.csv", "generation,value,families,certified");
    if (carpet && report.contains("modulus"))
      for (const auto& m : report["modulus"])
        out << m["generation"].get<int>() << ',' << m["value"].get<std::string>() << ','
            << m["families"].get<std::size_t>() << ',' << (m["certified"].get<bool>() ? 1 : 0) << '\n';
  }
  {
    auto out = open("holder.csv", "seed,exponent");
    if (brownian)
      for (const auto& s : report["local_ensemble"]["per_seed"])
        out << s["seed"].get<std::uint64_t>() << ',' << s["holder"].get<double>() << '\n';
  }
  {
    auto out = open("envelope.csv", "n,count,bound");
    if (kind == "brownian") write_envelope(out, find_criterion(report, 11));
  }
  {
    auto out = open("slow_envelope.csv", "n,count,bound");
    if (kind == "brownian") write_envelope(out, find_criterion(report, 12));
  }
  return files;
}

}  // namespace cdlab
