#pragma once

#include "cdlab/carpet.hpp"
#include "cdlab/exact_lp.hpp"
#include "cdlab/hmeasure.hpp"
#include "cdlab/rational.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace cdlab {

class ModulusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Discrete Fuglede modulus instance: cells with background masses and a
/// family of measures, each a sparse row cell -> weight.
struct ModulusProblem {
  std::vector<std::string> cells;
  std::vector<Rational> mass;
  std::vector<SparseRow> families;
  double p = 1.0;

  /// Checks sizes, signs and nonzero rows.
  void validate() const;
};

struct AdmissibilityReport {
  bool admissible = false;
  double min_integral = 0.0;
  std::optional<Rational> exact_min;  // set for exact densities
  std::size_t worst_family = 0;
};

AdmissibilityReport is_admissible(const std::vector<Rational>& rho, const ModulusProblem& prob);
/// Float densities pass when every integral is >= 1 - tol.
AdmissibilityReport is_admissible(const std::vector<double>& rho, const ModulusProblem& prob, double tol = 0.0);

struct ModulusOptions {
  double tolerance = 1e-9;
  std::size_t max_iterations = 200000;
  /// Known optimum enables Polyak steps.
  std::optional<double> known_optimum;
};

struct ModulusResult {
  double value = 0.0;
  std::optional<Rational> exact_value;  // p = 1
  std::vector<double> rho;
  std::vector<Rational> rho_exact;  // p = 1
  std::vector<Rational> dual_exact;  // p = 1
  bool certified = false;
  // p > 1: dual lower bound, feasible upper bound and their gap.
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  double gap = 0.0;
  std::size_t iterations = 0;
};

ModulusResult mod_p(const ModulusProblem& prob, const ModulusOptions& opts = {});

struct VerticalModulus {
  Rational value;
  std::size_t families = 0;
  bool sampled = false;
  bool certified = false;
};

/// Number of vertical Cantor families at generation n (may overflow: the
/// result saturates at max uint64).
std::uint64_t vertical_family_count(const CarpetSpec& spec, int n);
/// Every vertical Cantor family at generation n as lambda_E rows over the
/// generation-n cells, capped by `budget`.
ModulusProblem vertical_problem(const CarpetSpec& spec, int n, std::size_t budget);
/// `count` random families (seeded), duplicates removed.
ModulusProblem sampled_vertical_problem(const CarpetSpec& spec, int n, std::size_t count, std::uint64_t seed);

/// Mod_1 of the vertical family; above the budget a sampled family is used
/// and the value is only a lower estimate of the full one.
VerticalModulus carpet_vertical_modulus(const CarpetSpec& spec, int n, std::size_t budget = 5000,
                                        std::size_t samples = 1000, std::uint64_t seed = 1);

struct RhoInfinity {
  std::vector<Rational> rho_inf;  // per generation-n cell, build_generation order
  VerticalSelection selection;
};

/// Per parent and child row keep the child whose subtree has the smallest
/// mu-average of rho (ties to the lowest column); rho_inf on a cell is rho
/// of the selected cell at the same height. `rho` follows build_generation.
RhoInfinity rho_infinity(const CarpetSpec& spec, int n, const std::vector<Rational>& rho);

/// Integral of a generation-n density against the carpet measure.
Rational integrate_mu(const CarpetSpec& spec, int n, const std::vector<Rational>& rho);

struct SubadditivityReport {
  double union_value = 0.0;
  double sum_of_parts = 0.0;
  std::vector<double> parts;
  bool holds = false;
};

SubadditivityReport mod_subadditivity_check(const std::vector<ModulusProblem>& probs,
                                            const ModulusOptions& opts = {});

ModulusProblem modulus_from_json(const nlohmann::json& doc);
nlohmann::json modulus_to_json(const ModulusProblem& prob);
nlohmann::json result_to_json(const ModulusResult& res, const ModulusProblem& prob);

}  // namespace cdlab
