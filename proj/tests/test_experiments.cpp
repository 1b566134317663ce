#include "cdlab/experiments.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>

using namespace cdlab;
using nlohmann::json;

namespace fs = std::filesystem;

namespace {

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

json strip_timing(json j) {
  if (j.is_object()) {
    for (const char* k : {"seconds", "ensemble_seconds", "wall_seconds", "simulation_seconds", "workers"}) j.erase(k);
    for (auto& [k, v] : j.items()) v = strip_timing(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = strip_timing(v);
  }
  return j;
}

}  // namespace

TEST_CASE("parallel_for visits each index once and forwards errors") {
  std::vector<std::atomic<int>> hits(200);
  parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
  for (auto& h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 7) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
  parallel_for(0, 2, [](std::size_t) { FAIL("no work expected"); });
}

TEST_CASE("worker count from the environment") {
  setenv("CDLAB_WORKERS", "3", 1);
  CHECK(worker_count() == 3);
  setenv("CDLAB_WORKERS", "junk", 1);
  CHECK(worker_count() >= 1);
  unsetenv("CDLAB_WORKERS");
}

TEST_CASE("default carpet") {
  const auto spec = default_spec();
  CHECK(spec.m() == 4);
  CHECK(spec.ell() == 2);
  CHECK(spec.k() == 2);
  CHECK(carpet_to_json(spec)["pattern"] == json::parse("[[1,1],[3,1],[2,2],[4,2]]"));
}

TEST_CASE("report verdicts") {
  json r{{"criteria", json::array({{{"id", 2}, {"pass", true}}, {{"id", 1}, {"pass", true}}})}};
  CHECK(report_passed(r));
  CHECK(report_criteria(r)[0]["id"] == 1);
  r["criteria"].push_back({{"id", 3}, {"pass", false}});
  CHECK_FALSE(report_passed(r));
  CHECK(report_passed(json::object()));
}

TEST_CASE("empty report gives header-only CSVs") {
  const auto dir = fs::temp_directory_path() / "cdlab_empty_bundle";
  fs::remove_all(dir);
  const auto files = emit_plots(json::object(), dir);
  CHECK(files.size() == 7);
  for (const auto& f : files) {
    const auto l = lines(f);
    REQUIRE(l.size() == 1);
    CHECK(l[0].find(',') != std::string::npos);
  }
  CHECK(lines(dir / "box_count.csv")[0] == "n,log2N");
  CHECK(lines(dir / "envelope.csv")[0] == "n,count,bound");
}

TEST_CASE("carpet suite on the full grid and the 12 x 3 graph") {
  std::vector<std::pair<int, int>> all;
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 2; ++r) all.push_back({c, r});
  CarpetSuiteConfig cfg;
  cfg.name = "full";
  cfg.spec = CarpetSpec::fixed(Pattern(3, 2, all), 6);
  cfg.box_generation = 6;
  cfg.box_gens = {1, 2, 3, 4};
  cfg.slice_generation = 6;
  cfg.slice_gens = {1, 2, 3, 4, 5};
  cfg.identity_generation = 2;
  cfg.modulus_generations = {1};
  cfg.rho_trials = 5;
  cfg.rho_generation = 1;
  cfg.tree_trials = 20;
  cfg.lambda_depth = 3;
  cfg.doubling_generation = 4;
  cfg.doubling_balls = 10;
  cfg.snowflake_points = 1024;
  cfg.snowflake_gens = {2, 3, 4};
  cfg.qs_points = 20;
  const auto rep = run_carpet_suite(cfg);
  CHECK(rep["schema_version"] == kReportSchemaVersion);
  CHECK(rep["dimensions"]["hausdorff"].get<double>() == doctest::Approx(2.0));
  const auto crit = report_criteria(rep);
  REQUIRE(crit.size() == 8);
  CHECK(crit[0]["slope"].get<double>() == doctest::Approx(2.0).epsilon(0.05));
  CHECK(rep["modulus"][0]["value"] == "1");
  const auto dir = fs::temp_directory_path() / "cdlab_carpet_bundle";
  fs::remove_all(dir);
  emit_plots(rep, dir);
  const auto box = lines(dir / "box_count.csv");
  CHECK(box.size() == 1 + cfg.box_gens.size());
  CHECK(lines(dir / "modulus.csv").size() == 2);

  const auto graph = affine_carpet(block_graph(4, 3), 4);
  CHECK(dim_formula(graph.m(), graph.ell(), graph.k()).hausdorff == doctest::Approx(1.0 + std::log(4.0) / std::log(12.0)));
}

TEST_CASE("small Brownian suite is deterministic across worker counts") {
  BrownianSuiteConfig cfg;
  cfg.seeds = {3, 1, 2};
  cfg.hitting_paths = 2000;
  cfg.hitting_g = 5;
  cfg.hitting_tol = 0.05;
  cfg.local_g = 8;
  cfg.graph_gens = {3, 4, 5, 6, 7};
  cfg.slice_gens = {4, 6, 8, 10};
  cfg.holder_scales = {2, 3, 4, 5, 6};
  cfg.levels_per_seed = 5;
  cfg.decomposition_g = 6;
  cfg.lambda_tests = 20;
  cfg.mass_balls = 5;
  cfg.slow_g = 10;
  cfg.slow_ns = {4, 5, 6, 7, 8};
  cfg.workers = 1;
  const auto a = run_brownian_suite(cfg);
  cfg.workers = 3;
  const auto b = run_brownian_suite(cfg);
  CHECK(strip_timing(a) == strip_timing(b));
  CHECK(a["seeds"] == json::parse("[1,2,3]"));
  const auto crit = report_criteria(a);
  std::vector<int> ids;
  for (const auto& c : crit) ids.push_back(c["id"].get<int>());
  CHECK(ids == std::vector<int>{7, 8, 9, 10, 11, 12, 13});
  CHECK(crit[3]["monotone_exact"] == true);
  CHECK(crit[3]["all_seeds_disjoint_and_nested"] == true);
  const auto dir = fs::temp_directory_path() / "cdlab_brownian_bundle";
  fs::remove_all(dir);
  emit_plots(a, dir);
  CHECK(lines(dir / "envelope.csv").size() == 7);
  CHECK(lines(dir / "slow_envelope.csv").size() == 6);
  CHECK(lines(dir / "holder.csv").size() == 4);
}
