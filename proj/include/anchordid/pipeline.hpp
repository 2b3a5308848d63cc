#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "anchordid/inference.hpp"
#include "anchordid/restrictions.hpp"

namespace anchordid {

enum class Framework { CohortAnchored, Aggregated, Both };

[[nodiscard]] Framework parse_framework(const std::string& name);
[[nodiscard]] std::string framework_name(Framework f);

// "lo:hi:step" or a single value; nonnegative and ascending.
[[nodiscard]] std::vector<double> parse_sweep(const std::string& text);
// "lo:hi:n"
[[nodiscard]] GridSpec parse_grid(const std::string& text);

struct RunConfig {
  std::string command;
  std::string input;
  std::string out;        // empty: standard output
  std::string vcov;       // reuse a covariance file instead of bootstrapping
  EstimatorKind estimator = EstimatorKind::Imputation;
  FamilyKind family = FamilyKind::RmCohort;
  std::vector<double> params{0.0};
  double alpha = 0.05;
  std::optional<double> kappa;
  int bootstrap = 1000;
  std::uint64_t seed = 1;
  std::optional<GridSpec> grid;
  Framework framework = Framework::CohortAnchored;
  std::string target = "att";
  int workers = 1;
  int lf_draws = 10000;
  bool timing = false;
  bool inverse = false;        // biasmap: emit the inverse map
  std::string example = "1";   // simulate: 1, 2 or toy
  bool noise_is_sd = false;    // simulate: read the noise scale 2 as a standard deviation
};

// Stable text form of the settings that influence results.
[[nodiscard]] std::string canonical_config(const RunConfig& config);
[[nodiscard]] std::string config_hash(const RunConfig& config);

// Executes one subcommand. Results go to config.out (or `out`); failures are
// reported on `err` as a JSON object with a stable code. Returns the exit
// status.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

// {"error":{"code":...,"message":...}}
void write_error_json(std::ostream& err, const std::string& code, const std::string& message);

}  // namespace anchordid
