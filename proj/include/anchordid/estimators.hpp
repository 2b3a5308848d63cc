#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "anchordid/panel.hpp"

namespace anchordid {

// Two-way fixed effects fit Y_it = alpha_i + xi_t + e_it on a sample mask,
// normalized so that xi at the first period is zero.
struct FixedEffectsFit {
  Vector alpha;        // NaN for units outside the sample
  Vector xi;
  Matrix residuals;    // NaN outside the sample
  Mask sample;
  int sweeps = 0;
  bool direct_solve = false;

  [[nodiscard]] double fitted(int unit, int period_index) const { return alpha(unit) + xi(period_index); }
};

struct FitOptions {
  double tolerance = 1e-12;
  int max_sweeps = 10000;
};

[[nodiscard]] FixedEffectsFit fit_two_way(const Matrix& y, const Mask& sample, const FitOptions& options = {});
[[nodiscard]] FixedEffectsFit fit_untreated(const PanelData& panel, const FitOptions& options = {});

// Estimates over a subset of cells of a CellIndex. positions are ascending
// cell positions; values[j] belongs to positions[j].
struct CoefficientSet {
  CellIndex index;
  std::vector<std::size_t> positions;
  Vector values;
  std::optional<Matrix> vcov;

  [[nodiscard]] EstimatorKind estimator() const { return index.estimator(); }
  [[nodiscard]] Eigen::Index size() const { return values.size(); }
  [[nodiscard]] std::optional<Eigen::Index> coordinate(std::size_t position) const;
  [[nodiscard]] std::optional<double> value(int cohort, int rel) const;
  [[nodiscard]] const Cell& cell(Eigen::Index coordinate) const {
    return index[positions[static_cast<std::size_t>(coordinate)]];
  }
  [[nodiscard]] std::vector<Eigen::Index> post_coordinates() const;
  [[nodiscard]] std::vector<Eigen::Index> pre_coordinates() const;
};

// Joins disjoint coefficient sets over the same index.
[[nodiscard]] CoefficientSet merge(const CoefficientSet& a, const CoefficientSet& b);

// Post-period ATT estimates from the imputation estimator.
[[nodiscard]] CoefficientSet imputation_effects(const PanelData& panel, const CohortLayout& layout,
                                                const FitOptions& options = {});
// Same quantities computed by cohort-by-cohort sequential imputation.
[[nodiscard]] CoefficientSet sequential_imputation(const PanelData& panel, const CohortLayout& layout);
// Pre-period block-bias estimates matching the imputation estimator.
[[nodiscard]] CoefficientSet imputation_pre_biases(const PanelData& panel, const CohortLayout& layout);
// Pre and post cells of the not-yet-treated DiD estimator (s = 0 omitted).
[[nodiscard]] CoefficientSet csnyt_estimates(const PanelData& panel, const CohortLayout& layout);

// Pre block biases and post ATTs for the chosen estimator.
[[nodiscard]] CoefficientSet estimate(const PanelData& panel, const CohortLayout& layout, EstimatorKind estimator,
                                      const FitOptions& options = {});

// Cohort-wise leave-one-out pre coefficients for cohort index g, ordered by
// held-out period 1..t_g-1.
[[nodiscard]] Vector cohort_loo(const PanelData& panel, const CohortLayout& layout, int g,
                                const FitOptions& options = {});

// Relative-period averages weighted by cohort size.
struct AggregatedSeries {
  EstimatorKind estimator = EstimatorKind::Imputation;
  std::vector<int> rel_periods;   // ascending
  Vector values;
  Vector mass;                    // total size of contributing cohorts
  Matrix weights;                 // rows: rel periods, cols: coefficient coordinates
  std::optional<Matrix> vcov;
};

[[nodiscard]] AggregatedSeries aggregate(const CoefficientSet& coefficients, const CohortLayout& layout);

}  // namespace anchordid
