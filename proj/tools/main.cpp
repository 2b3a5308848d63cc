#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "anchordid/error.hpp"
#include "anchordid/pipeline.hpp"
#include "anchordid/version.hpp"

namespace {

struct Flags {
  std::string input;
  std::string out;
  std::string vcov;
  std::string estimator = "imputation";
  std::string family = "rm-cohort";
  std::string param = "0";
  double alpha = 0.05;
  double kappa = -1;
  int bootstrap = 1000;
  std::uint64_t seed = 1;
  std::string grid;
  std::string framework = "cohort";
  std::string target = "att";
  int workers = 1;
  int lf_draws = 10000;
  bool timing = false;
  std::string action;
  bool inverse = false;
  std::string example = "1";
  bool noise_is_sd = false;
};

anchordid::RunConfig to_config(const std::string& command, const Flags& f) {
  anchordid::RunConfig c;
  c.command = command;
  c.input = f.input;
  c.out = f.out;
  c.vcov = f.vcov;
  c.estimator = anchordid::parse_estimator(f.estimator);
  c.family = anchordid::parse_family(f.family);
  c.params = anchordid::parse_sweep(f.param);
  c.alpha = f.alpha;
  if (f.kappa >= 0) c.kappa = f.kappa;
  c.bootstrap = f.bootstrap;
  c.seed = f.seed;
  if (!f.grid.empty()) c.grid = anchordid::parse_grid(f.grid);
  c.framework = anchordid::parse_framework(f.framework);
  c.target = f.target;
  c.workers = f.workers;
  c.lf_draws = f.lf_draws;
  c.timing = f.timing;
  c.inverse = f.inverse;
  c.example = f.example;
  c.noise_is_sd = f.noise_is_sd;
  return c;
}

void panel_options(CLI::App* app, Flags& f) {
  app->add_option("input", f.input, "Panel CSV (unit,time,outcome,cohort)")->required();
  app->add_option("--out", f.out, "Output file (default: standard output)");
  app->add_option("--estimator", f.estimator, "imputation or csnyt");
}

void inference_options(CLI::App* app, Flags& f) {
  app->add_option("--bootstrap", f.bootstrap, "Bootstrap replicates")->check(CLI::Range(2, 1000000));
  app->add_option("--seed", f.seed, "Random seed");
  app->add_option("--workers", f.workers, "Worker threads")->check(CLI::Range(1, 1024));
}

void set_options(CLI::App* app, Flags& f) {
  inference_options(app, f);
  app->add_option("--vcov", f.vcov, "Covariance CSV to use instead of bootstrapping");
  app->add_option("--family", f.family, "rm-global, rm-cohort or sd");
  app->add_option("--param", f.param, "Parameter value or sweep lo:hi:step");
  app->add_option("--alpha", f.alpha, "Test level")->check(CLI::Range(0.0, 1.0));
  app->add_option("--kappa", f.kappa, "First-stage level of the hybrid test (default alpha/10)");
  app->add_option("--grid", f.grid, "Test inversion grid lo:hi:n");
  app->add_option("--target", f.target, "att or period:<s>");
  app->add_option("--lf-draws", f.lf_draws, "Monte Carlo draws for critical values")->check(CLI::Range(100, 10000000));
  app->add_flag("--timing", f.timing, "Record runtime_ms in results");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cohort-anchored robust inference for staggered-adoption event studies"};
  app.set_version_flag("--version", anchordid::kVersion);
  app.require_subcommand(1);
  Flags f;

  auto* validate = app.add_subcommand("validate", "Check a panel and report its cohort layout");
  panel_options(validate, f);

  auto* estimate = app.add_subcommand("estimate", "Cohort-by-period coefficients as CSV");
  panel_options(estimate, f);

  auto* vcov = app.add_subcommand("vcov", "Stratified cluster bootstrap covariance as CSV");
  panel_options(vcov, f);
  inference_options(vcov, f);

  auto* biasmap = app.add_subcommand("biasmap", "Block-to-overall bias map");
  biasmap->add_option("action", f.action, "export")->required()->check(CLI::IsMember({"export"}));
  panel_options(biasmap, f);
  biasmap->add_flag("--inverse", f.inverse, "Emit the inverse map");

  auto* family = app.add_subcommand("family", "Summarize restriction family members");
  panel_options(family, f);
  family->add_option("--family", f.family, "rm-global, rm-cohort or sd");
  family->add_option("--param", f.param, "Parameter value or sweep lo:hi:step");

  auto* sets = app.add_subcommand("sets", "Plug-in and confidence sets across a parameter sweep");
  panel_options(sets, f);
  set_options(sets, f);
  sets->add_option("--framework", f.framework, "cohort, aggregated or both");

  auto* byperiod = app.add_subcommand("byperiod", "Sets for each post-treatment relative period");
  panel_options(byperiod, f);
  set_options(byperiod, f);
  byperiod->add_option("--framework", f.framework, "cohort, aggregated or both");

  auto* compare = app.add_subcommand("compare", "Side-by-side sensitivity table for both frameworks");
  panel_options(compare, f);
  set_options(compare, f);

  auto* simulate = app.add_subcommand("simulate", "Write a simulated panel and a truth sidecar");
  simulate->add_option("--example", f.example, "1, 2 or toy")->check(CLI::IsMember({"1", "2", "toy"}));
  simulate->add_option("--seed", f.seed, "Random seed");
  simulate->add_option("--out", f.out, "Panel CSV path")->required();
  simulate->add_flag("--noise-sd", f.noise_is_sd, "Treat the noise scale 2 as a standard deviation");

  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  anchordid::RunConfig config;
  try {
    config = to_config(command, f);
  } catch (const anchordid::Error& e) {
    anchordid::write_error_json(std::cerr, std::string(anchordid::code_name(e.code())), e.what());
    return 2;
  }
  return anchordid::run(config, std::cout, std::cerr);
}
