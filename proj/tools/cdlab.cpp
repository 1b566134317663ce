#include "cdlab/carpet.hpp"
#include "cdlab/experiments.hpp"
#include "cdlab/modulus.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return json::parse(in);
}

void write_report(const json& report, const std::string& out) {
  if (out.empty()) {
    std::cout << report.dump(2) << '\n';
    return;
  }
  fs::path p(out);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + out);
  f << report.dump(2) << '\n';
}

// "1..100", "1,2,7" or a mix.
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      seeds.push_back(std::stoull(item));
    } else {
      const auto a = std::stoull(item.substr(0, dots)), b = std::stoull(item.substr(dots + 2));
      if (b < a) throw std::runtime_error("empty seed range " + item);
      for (auto s = a; s <= b; ++s) seeds.push_back(s);
    }
  }
  if (seeds.empty()) throw std::runtime_error("seed list is empty");
  return seeds;
}

void summarize(const json& report) {
  for (const auto& c : cdlab::report_criteria(report))
    std::cerr << (c.value("pass", false) ? "PASS " : "FAIL ") << c["id"].get<int>() << "  " << c["name"].get<std::string>()
              << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal dimension lab: carpets, modulus and Brownian graphs"};
  app.require_subcommand(1);

  std::string spec_path, out, seeds_text = "1..100";
  int gen = 0;
  double tol = 0.0;

  auto* carpet = app.add_subcommand("carpet-suite", "Carpet criteria on a carpet or affine spec");
  carpet->add_option("--spec", spec_path, "carpet JSON (default: the default 4x2 carpet)")->check(CLI::ExistingFile);
  carpet->add_option("--gen", gen, "generation for the box-count point cloud");
  carpet->add_option("--tol", tol, "dimension tolerance")->check(CLI::PositiveNumber);
  carpet->add_option("--out", out, "report path (default stdout)");

  auto* brownian = app.add_subcommand("brownian-suite", "Brownian graph criteria over a seed ensemble");
  brownian->add_option("--seeds", seeds_text, "seeds, e.g. 1..100 or 3,5,8");
  brownian->add_option("--gen", gen, "resolution generation g of the local-time paths (dt = 4^-g)");
  brownian->add_option("--tol", tol, "hitting-law tolerance")->check(CLI::PositiveNumber);
  brownian->add_option("--out", out, "report path (default stdout)");

  auto* modulus = app.add_subcommand("modulus", "Modulus of a JSON family, or the vertical modulus of a carpet");
  modulus->add_option("--spec", spec_path, "modulus problem or carpet JSON")->required()->check(CLI::ExistingFile);
  modulus->add_option("--gen", gen, "carpet generation (carpet specs only)");
  modulus->add_option("--tol", tol, "solver tolerance for p > 1")->check(CLI::PositiveNumber);
  modulus->add_option("--out", out, "result path (default stdout)");

  auto* plots = app.add_subcommand("emit-plots", "CSV bundle from a report");
  plots->add_option("--spec", spec_path, "report JSON (omit for an empty bundle)");
  plots->add_option("--out", out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*carpet) {
      cdlab::CarpetSuiteConfig cfg;
      if (!spec_path.empty()) {
        cfg.spec = cdlab::carpet_from_json(read_json(spec_path));
        cfg.name = fs::path(spec_path).stem().string();
      }
      if (gen > 0) {
        if (gen < 3) throw std::runtime_error("--gen must be at least 3");
        cfg.box_generation = gen;
        cfg.box_gens.clear();
        for (int n = 1; n < gen; ++n) cfg.box_gens.push_back(n);
      }
      if (tol > 0) cfg.tol = tol;
      const auto report = cdlab::run_carpet_suite(cfg);
      write_report(report, out);
      summarize(report);
      return cdlab::report_passed(report) ? 0 : 1;
    }
    if (*brownian) {
      cdlab::BrownianSuiteConfig cfg;
      cfg.seeds = parse_seeds(seeds_text);
      if (gen > 0) cfg.local_g = gen;
      if (tol > 0) cfg.tol = tol;
      const auto report = cdlab::run_brownian_suite(cfg);
      write_report(report, out);
      summarize(report);
      return cdlab::report_passed(report) ? 0 : 1;
    }
    if (*modulus) {
      const auto doc = read_json(spec_path);
      if (doc.contains("families")) {
        const auto prob = cdlab::modulus_from_json(doc);
        cdlab::ModulusOptions opts;
        if (tol > 0) opts.tolerance = tol;
        write_report(cdlab::result_to_json(cdlab::mod_p(prob, opts), prob), out);
        return 0;
      }
      auto spec = cdlab::carpet_from_json(doc);
      json res = json::array();
      const int hi = gen > 0 ? gen : 2;
      spec = spec.with_max_generation(std::max(hi, spec.max_generation()));
      for (int n = 1; n <= hi; ++n) {
        const auto vm = cdlab::carpet_vertical_modulus(spec, n);
        res.push_back({{"generation", n},
                       {"value", cdlab::to_string(vm.value)},
                       {"families", vm.families},
                       {"sampled", vm.sampled},
                       {"certified", vm.certified}});
      }
      write_report({{"schema_version", cdlab::kReportSchemaVersion}, {"vertical_modulus", res}}, out);
      return 0;
    }
    if (*plots) {
      const json report = spec_path.empty() ? json::object() : read_json(spec_path);
      for (const auto& f : cdlab::emit_plots(report, out)) std::cout << f.string() << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
