#pragma once
// Independent reference computations used only by the tests. They work from
// plain loops over the outcome matrix and share no code with the library's
// estimators.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "anchordid/biasmap.hpp"
#include "anchordid/estimators.hpp"
#include "anchordid/panel.hpp"

namespace oracle {

using anchordid::Matrix;
using anchordid::PanelData;

struct RandomPanel {
  PanelData panel;
  Matrix untreated;   // Y(0)
};

inline PanelData make_panel(const Matrix& y, const std::vector<std::optional<int>>& adoption) {
  PanelData p;
  p.outcome = y;
  p.adoption = adoption;
  for (Eigen::Index i = 0; i < y.rows(); ++i) p.unit_ids.push_back("u" + std::to_string(i + 1));
  return p;
}

// Random staggered panel: 3..12 periods, up to 4 cohorts, at most 30 units.
// Outcomes mix two-way effects, cohort-specific trends, noise, and
// heterogeneous unit-level treatment effects.
inline RandomPanel random_panel(std::uint64_t seed, bool noise = true, int min_pre = 1) {
  std::mt19937_64 gen(seed);
  auto uni = [&](int a, int b) { return std::uniform_int_distribution<int>(a, b)(gen); };
  std::normal_distribution<double> normal(0.0, 1.0);
  const int periods = uni(std::max(3, min_pre + 2), 12);
  std::vector<int> candidates;
  for (int t = 1 + min_pre; t <= periods; ++t) candidates.push_back(t);
  std::shuffle(candidates.begin(), candidates.end(), gen);
  const int cohorts = std::min<int>(uni(1, 4), static_cast<int>(candidates.size()));
  std::vector<int> times(candidates.begin(), candidates.begin() + cohorts);
  std::sort(times.begin(), times.end());
  std::vector<std::optional<int>> adoption;
  std::vector<int> sizes;
  int budget = 30;
  for (int g = 0; g < cohorts; ++g) {
    const int n = uni(1, std::max(1, std::min(6, budget - (cohorts - g))));
    sizes.push_back(n);
    budget -= n;
    for (int k = 0; k < n; ++k) adoption.emplace_back(times[static_cast<std::size_t>(g)]);
  }
  const int never = uni(1, std::max(1, std::min(6, budget)));
  for (int k = 0; k < never; ++k) adoption.emplace_back(std::nullopt);
  const int n = static_cast<int>(adoption.size());

  std::vector<double> slope(static_cast<std::size_t>(cohorts + 1));
  for (auto& s : slope) s = 0.5 * normal(gen);
  Matrix y0(n, periods);
  Matrix y(n, periods);
  std::vector<double> xi(static_cast<std::size_t>(periods));
  for (auto& v : xi) v = normal(gen);
  for (int i = 0; i < n; ++i) {
    const double a = normal(gen);
    int g = cohorts;
    if (adoption[static_cast<std::size_t>(i)]) {
      g = static_cast<int>(std::find(times.begin(), times.end(), *adoption[static_cast<std::size_t>(i)]) - times.begin());
    }
    const double unit_effect = 1.0 + normal(gen);
    for (int t = 1; t <= periods; ++t) {
      const double trend = slope[static_cast<std::size_t>(g)] * t + 0.3 * std::sin(1.7 * t * (g + 1));
      y0(i, t - 1) = a + xi[static_cast<std::size_t>(t - 1)] + trend + (noise ? normal(gen) : 0.0);
      const auto& ad = adoption[static_cast<std::size_t>(i)];
      const double effect = ad && t >= *ad ? unit_effect * (t - *ad + 1) : 0.0;
      y(i, t - 1) = y0(i, t - 1) + effect;
    }
  }
  return {make_panel(y, adoption), y0};
}

inline double mean_rows(const Matrix& y, const std::vector<int>& units, int t) {
  double s = 0.0;
  for (int i : units) s += y(i, t - 1);
  return s / static_cast<double>(units.size());
}

inline double row_mean(const Matrix& y, int i, int first, int last) {
  double s = 0.0;
  for (int t = first; t <= last; ++t) s += y(i, t - 1);
  return s / (last - first + 1);
}

inline std::vector<int> cohort_units(const PanelData& p, int adoption) {
  std::vector<int> out;
  for (int i = 0; i < p.units(); ++i) {
    if (p.adoption[static_cast<std::size_t>(i)] == adoption) out.push_back(i);
  }
  return out;
}

inline std::vector<int> untreated_units(const PanelData& p, int t) {
  std::vector<int> out;
  for (int i = 0; i < p.units(); ++i) {
    const auto& a = p.adoption[static_cast<std::size_t>(i)];
    if (!a || *a > t) out.push_back(i);
  }
  return out;
}

// Block bias of the imputation estimator, computed from an outcome matrix
// (observed for pre cells, untreated potential outcomes in general).
inline double imputation_block_bias(const PanelData& p, const Matrix& y, int adoption, int t) {
  const auto treated = cohort_units(p, adoption);
  const auto controls = untreated_units(p, adoption);
  double a = 0.0;
  for (int i : treated) a += y(i, t - 1) - row_mean(y, i, 1, adoption - 1);
  double b = 0.0;
  for (int j : controls) b += y(j, t - 1) - row_mean(y, j, 1, adoption - 1);
  return a / treated.size() - b / controls.size();
}

inline double csnyt_block_bias(const PanelData& p, const Matrix& y, int adoption, int t) {
  const auto treated = cohort_units(p, adoption);
  const auto controls = untreated_units(p, adoption);
  const int base = adoption - 1;
  return (mean_rows(y, treated, t) - mean_rows(y, treated, base)) -
         (mean_rows(y, controls, t) - mean_rows(y, controls, base));
}

// Overall bias of the not-yet-treated estimator at a post period.
inline double csnyt_overall_bias(const PanelData& p, const Matrix& y0, int adoption, int t) {
  const auto treated = cohort_units(p, adoption);
  const auto controls = untreated_units(p, t);
  const int base = adoption - 1;
  return (mean_rows(y0, treated, t) - mean_rows(y0, treated, base)) -
         (mean_rows(y0, controls, t) - mean_rows(y0, controls, base));
}

// First-period imputed counterfactual as a block DiD.
inline double first_period_counterfactual(const PanelData& p, int unit, int adoption) {
  const auto controls = untreated_units(p, adoption);
  double pre = 0.0;
  for (int j : controls) pre += row_mean(p.outcome, j, 1, adoption - 1);
  pre /= static_cast<double>(controls.size());
  return row_mean(p.outcome, unit, 1, adoption - 1) + mean_rows(p.outcome, controls, adoption) - pre;
}

// Largest |delta - W Delta| over post cells, where delta is the realized
// overall bias (estimate minus mean true effect) and Delta holds the block
// biases computed from untreated potential outcomes.
inline double decomposition_gap(const RandomPanel& rp, anchordid::EstimatorKind kind) {
  using namespace anchordid;
  const auto layout = build_layout(rp.panel);
  const CellIndex index(layout, kind);
  const auto est = estimate(rp.panel, layout, kind);
  const Matrix effects = rp.panel.outcome - rp.untreated;
  const auto n = static_cast<Eigen::Index>(index.size());
  Eigen::VectorXd block = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& c = index[static_cast<std::size_t>(j)];
    if (c.structural_zero) continue;
    block(j) = kind == EstimatorKind::Imputation ? imputation_block_bias(rp.panel, rp.untreated, c.adoption, c.time)
                                                 : csnyt_block_bias(rp.panel, rp.untreated, c.adoption, c.time);
  }
  const Eigen::VectorXd mapped = bias_map_matrix<double>(layout, index) * block;
  double gap = 0.0;
  for (Eigen::Index j = 0; j < est.size(); ++j) {
    const auto& c = est.cell(j);
    if (!c.is_post()) continue;
    const auto units = cohort_units(rp.panel, c.adoption);
    const double overall = est.values(j) - mean_rows(effects, units, c.time);
    gap = std::max(gap, std::abs(overall - mapped(static_cast<Eigen::Index>(est.positions[static_cast<std::size_t>(j)]))));
    if (kind == EstimatorKind::CsNyt) {
      gap = std::max(gap, std::abs(overall - csnyt_overall_bias(rp.panel, rp.untreated, c.adoption, c.time)));
    }
  }
  return gap;
}

}  // namespace oracle
