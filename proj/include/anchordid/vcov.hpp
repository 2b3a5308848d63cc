#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "anchordid/estimators.hpp"

namespace anchordid {

struct BootstrapSpec {
  int replicates = 1000;
  std::uint64_t seed = 1;
  EstimatorKind estimator = EstimatorKind::Imputation;
  int workers = 1;
  int max_redraws = 100;
};

struct BootstrapResult {
  CoefficientSet coefficients;      // point estimates from the original sample, with vcov
  Matrix draws;                     // replicates x coordinates
  std::vector<std::string> warnings;
  int redraws = 0;
};

// Unit indices of one replicate: units resampled with replacement inside
// each cohort and inside the never-treated group.
[[nodiscard]] std::vector<int> resample_units(const CohortLayout& layout, std::uint64_t key);
[[nodiscard]] PanelData take_units(const PanelData& panel, const std::vector<int>& rows);

// Stratified cluster bootstrap of the stacked coefficient vector.
[[nodiscard]] BootstrapResult bootstrap_vcov(const PanelData& panel, const BootstrapSpec& spec);

// Sample covariance of the rows of draws (divisor B - 1).
[[nodiscard]] Matrix sample_covariance(const Matrix& draws);

}  // namespace anchordid
