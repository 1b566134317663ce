#pragma once

#include "cdlab/carpet.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace cdlab {

inline constexpr int kReportSchemaVersion = 1;

/// Worker count from CDLAB_WORKERS, else the hardware concurrency (>= 1).
std::size_t worker_count();

/// Runs job(i) for i in [0, n) on `workers` threads; the first exception is
/// rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& job);

/// The default carpet: m = 4, ell = 2, one column pair per row.
CarpetSpec default_spec(int max_generation = 8);

struct CarpetSuiteConfig {
  std::string name = "default_4x2";
  CarpetSpec spec = default_spec();
  int box_generation = 8;
  std::vector<int> box_gens{2, 3, 4, 5, 6, 7};
  double box_tol = 0.1;
  std::string slice_level = "1/3";
  int slice_generation = 10;
  std::vector<int> slice_gens{4, 6, 8, 10, 12, 14};
  double slice_tol = 0.07;
  int identity_generation = 5;
  std::vector<int> modulus_generations{1, 2};
  std::size_t rho_trials = 100;
  int rho_generation = 2;
  std::size_t tree_trials = 1000;
  int tree_depth = 10;
  int lambda_depth = 6;
  int doubling_generation = 6;
  std::size_t doubling_balls = 200;
  std::size_t snowflake_points = 1u << 14;
  std::vector<int> snowflake_gens{2, 3, 4, 5, 6};
  std::size_t qs_points = 200;
  std::uint64_t seed = 1;
  /// When set, overrides box_tol and slice_tol.
  std::optional<double> tol;
};

struct BrownianSuiteConfig {
  std::vector<std::uint64_t> seeds;  // empty: 1..100
  std::size_t workers = 0;           // 0: worker_count()

  std::size_t hitting_paths = 100000;
  int hitting_g = 7;
  double hitting_tol = 0.01;

  int local_g = 10;
  std::uint64_t local_budget = std::uint64_t{1} << 25;
  std::size_t levels_per_seed = 10;
  std::vector<int> holder_scales{3, 4, 5, 6, 7, 8};
  std::vector<int> graph_gens{4, 5, 6, 7, 8, 9, 10};
  double slice_level = 1.0 / 3.0;
  std::vector<int> slice_gens{6, 8, 10, 12, 14, 16};
  double positivity_fraction = 0.95;
  double holder_min = 0.4;

  int decomposition_g = 8;
  std::uint64_t decomposition_budget = std::uint64_t{1} << 25;
  std::size_t partition_stride = 16;
  int flat_first = 4;
  double flat_eps = 0.25;
  std::size_t lambda_tests = 100;
  double lambda_fraction = 0.9;
  int a_like_n0 = 4;
  std::size_t mass_balls = 20;
  /// Graph-measure diagnostics use bands of generation decomposition_g -
  /// mass_coarsening: at 2^-n = sqrt(dt) the grid misses about half of the
  /// downcrossings.
  int mass_coarsening = 2;

  int slow_g = 12;
  double slow_alpha = 1.0;
  std::vector<int> slow_ns{6, 7, 8, 9, 10};
  double slow_eps = 0.25;

  /// Fraction of seeds that must meet the per-seed count bounds.
  double seed_fraction = 0.6;
  std::optional<double> tol;  // overrides hitting_tol
};

/// Carpet criteria: box dimension, slice dimension, exact measure
/// identities, vertical modulus, rho_infinity, alpha-measure bound, carpet
/// lambda_E bound and the snowflake checks, plus doubling diagnostics.
nlohmann::json run_carpet_suite(const CarpetSuiteConfig& cfg);

/// Brownian criteria: hitting law, local time, graph and slice dimensions,
/// decomposition structure, flat-element counts, slow points and the
/// Brownian lambda_E bound.
nlohmann::json run_brownian_suite(const BrownianSuiteConfig& cfg);

/// Criterion entries of a report, in id order.
std::vector<nlohmann::json> report_criteria(const nlohmann::json& report);
bool report_passed(const nlohmann::json& report);

/// Writes the CSV bundle; returns the files written.  An empty or unknown
/// report yields every file with its header row only.
std::vector<std::filesystem::path> emit_plots(const nlohmann::json& report, const std::filesystem::path& dir);

}  // namespace cdlab
