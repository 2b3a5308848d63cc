#include "anchordid/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

#include "anchordid/error.hpp"

namespace anchordid {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

CoefficientSet from_pairs(CellIndex index, std::vector<std::pair<std::size_t, double>> pairs) {
  std::sort(pairs.begin(), pairs.end());
  CoefficientSet out{std::move(index), {}, Vector(static_cast<Eigen::Index>(pairs.size())), std::nullopt};
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    out.positions.push_back(pairs[j].first);
    out.values(static_cast<Eigen::Index>(j)) = pairs[j].second;
  }
  return out;
}

double mean_over(const Matrix& y, const std::vector<int>& units, int col) {
  double s = 0.0;
  for (int i : units) s += y(i, col);
  return s / static_cast<double>(units.size());
}

// Mean of y(i, 0..count-1) for a single row.
double row_prefix_mean(const Matrix& y, int i, int count) {
  return y.row(i).head(count).mean();
}

// Largest absolute residual sum over units and periods of the sample.
double first_order_gap(const FixedEffectsFit& fit) {
  const Matrix r = fit.sample.select(fit.residuals, 0.0);
  return std::max(r.rowwise().sum().cwiseAbs().maxCoeff(), r.colwise().sum().cwiseAbs().maxCoeff());
}

void fill_residuals(const Matrix& y, FixedEffectsFit& fit) {
  fit.residuals = Matrix::Constant(y.rows(), y.cols(), kNaN);
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index t = 0; t < y.cols(); ++t) {
      if (fit.sample(i, t)) fit.residuals(i, t) = y(i, t) - fit.alpha(i) - fit.xi(t);
    }
  }
}

// Eliminates unit effects and solves the reduced period system exactly.
void solve_direct(const Matrix& y, FixedEffectsFit& fit) {
  const auto n = y.rows();
  const auto periods = y.cols();
  const Eigen::ArrayXi unit_counts = fit.sample.cast<int>().rowwise().sum();
  const Eigen::ArrayXi period_counts = fit.sample.cast<int>().colwise().sum().transpose();

  Matrix k = Matrix::Zero(periods, periods);
  Vector rhs = Vector::Zero(periods);
  for (Eigen::Index t = 0; t < periods; ++t) k(t, t) = period_counts(t);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (unit_counts(i) == 0) continue;
    const double inv = 1.0 / unit_counts(i);
    double total = 0.0;
    for (Eigen::Index t = 0; t < periods; ++t) {
      if (fit.sample(i, t)) total += y(i, t);
    }
    for (Eigen::Index t = 0; t < periods; ++t) {
      if (!fit.sample(i, t)) continue;
      rhs(t) += y(i, t) - inv * total;
      for (Eigen::Index u = 0; u < periods; ++u) {
        if (fit.sample(i, u)) k(t, u) -= inv;
      }
    }
  }
  std::vector<Eigen::Index> free_periods;
  for (Eigen::Index t = 1; t < periods; ++t) {
    if (period_counts(t) > 0) free_periods.push_back(t);
  }
  const auto m = static_cast<Eigen::Index>(free_periods.size());
  Matrix kk(m, m);
  Vector rr(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    rr(a) = rhs(free_periods[static_cast<std::size_t>(a)]);
    for (Eigen::Index b = 0; b < m; ++b) {
      kk(a, b) = k(free_periods[static_cast<std::size_t>(a)], free_periods[static_cast<std::size_t>(b)]);
    }
  }
  Eigen::FullPivLU<Matrix> lu(kk);
  lu.setThreshold(1e-10);
  if (lu.rank() < m) throw Error(ErrorCode::RankDeficient, "two-way fixed effects design is rank deficient");
  const Vector sol = lu.solve(rr);

  fit.xi = Vector::Constant(periods, kNaN);
  fit.xi(0) = 0.0;
  for (Eigen::Index a = 0; a < m; ++a) fit.xi(free_periods[static_cast<std::size_t>(a)]) = sol(a);
  fit.alpha = Vector::Constant(n, kNaN);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (unit_counts(i) == 0) continue;
    double s = 0.0;
    for (Eigen::Index t = 0; t < periods; ++t) {
      if (fit.sample(i, t)) s += y(i, t) - fit.xi(t);
    }
    fit.alpha(i) = s / unit_counts(i);
  }
  fit.direct_solve = true;
}

}  // namespace

FixedEffectsFit fit_two_way(const Matrix& y, const Mask& sample, const FitOptions& options) {
  if (y.rows() != sample.rows() || y.cols() != sample.cols()) {
    throw Error(ErrorCode::IndexMismatch, "outcome and sample mask shapes differ");
  }
  const auto n = y.rows();
  const auto periods = y.cols();
  if (periods == 0 || !sample.col(0).any()) {
    throw Error(ErrorCode::RankDeficient, "first period has no observations in the fitting sample");
  }
  FixedEffectsFit fit;
  fit.sample = sample;
  const Eigen::ArrayXi unit_counts = sample.cast<int>().rowwise().sum();
  const Eigen::ArrayXi period_counts = sample.cast<int>().colwise().sum().transpose();
  const Matrix masked = sample.select(y, 0.0);
  const double scale = 1.0 + masked.cwiseAbs().maxCoeff();

  Vector alpha = Vector::Zero(n);
  Vector xi = Vector::Zero(periods);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (unit_counts(i) > 0) alpha(i) = masked.row(i).sum() / unit_counts(i);
  }
  bool converged = false;
  int sweep = 0;
  while (sweep < options.max_sweeps) {
    ++sweep;
    double change = 0.0;
    for (Eigen::Index t = 0; t < periods; ++t) {
      if (period_counts(t) == 0) continue;
      double s = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (sample(i, t)) s += y(i, t) - alpha(i);
      }
      const double next = s / period_counts(t);
      change = std::max(change, std::abs(next - xi(t)));
      xi(t) = next;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (unit_counts(i) == 0) continue;
      double s = 0.0;
      for (Eigen::Index t = 0; t < periods; ++t) {
        if (sample(i, t)) s += y(i, t) - xi(t);
      }
      const double next = s / unit_counts(i);
      change = std::max(change, std::abs(next - alpha(i)));
      alpha(i) = next;
    }
    if (change < options.tolerance * scale) {
      converged = true;
      break;
    }
  }
  fit.sweeps = sweep;
  const double shift = xi(0);
  fit.xi = xi.array() - shift;
  fit.alpha = alpha.array() + shift;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (unit_counts(i) == 0) fit.alpha(i) = kNaN;
  }
  for (Eigen::Index t = 0; t < periods; ++t) {
    if (period_counts(t) == 0) fit.xi(t) = kNaN;
  }
  fill_residuals(y, fit);
  // Slow mixing can stall the sweeps short of the normal equations; the
  // reduced period system is small, so solve it exactly instead.
  if (!converged || first_order_gap(fit) > 1e-11 * scale) {
    solve_direct(y, fit);
    fill_residuals(y, fit);
  }
  return fit;
}

FixedEffectsFit fit_untreated(const PanelData& panel, const FitOptions& options) {
  return fit_two_way(panel.outcome, untreated_mask(panel), options);
}

std::optional<Eigen::Index> CoefficientSet::coordinate(std::size_t position) const {
  auto it = std::lower_bound(positions.begin(), positions.end(), position);
  if (it == positions.end() || *it != position) return std::nullopt;
  return static_cast<Eigen::Index>(it - positions.begin());
}

std::optional<double> CoefficientSet::value(int cohort, int rel) const {
  auto pos = index.position(cohort, rel);
  if (!pos) return std::nullopt;
  auto j = coordinate(*pos);
  if (!j) return std::nullopt;
  return values(*j);
}

std::vector<Eigen::Index> CoefficientSet::post_coordinates() const {
  std::vector<Eigen::Index> out;
  for (Eigen::Index j = 0; j < size(); ++j) {
    if (cell(j).is_post()) out.push_back(j);
  }
  return out;
}

std::vector<Eigen::Index> CoefficientSet::pre_coordinates() const {
  std::vector<Eigen::Index> out;
  for (Eigen::Index j = 0; j < size(); ++j) {
    if (cell(j).is_pre()) out.push_back(j);
  }
  return out;
}

CoefficientSet merge(const CoefficientSet& a, const CoefficientSet& b) {
  if (a.index.size() != b.index.size() || a.index.estimator() != b.index.estimator()) {
    throw Error(ErrorCode::IndexMismatch, "coefficient sets use different cell indices");
  }
  std::vector<std::pair<std::size_t, double>> pairs;
  for (Eigen::Index j = 0; j < a.size(); ++j) pairs.emplace_back(a.positions[static_cast<std::size_t>(j)], a.values(j));
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    if (a.coordinate(b.positions[static_cast<std::size_t>(j)])) {
      throw Error(ErrorCode::IndexMismatch, "coefficient sets overlap");
    }
    pairs.emplace_back(b.positions[static_cast<std::size_t>(j)], b.values(j));
  }
  return from_pairs(a.index, std::move(pairs));
}

CoefficientSet imputation_effects(const PanelData& panel, const CohortLayout& layout, const FitOptions& options) {
  const auto fit = fit_untreated(panel, options);
  CellIndex index(layout, EstimatorKind::Imputation);
  std::vector<std::pair<std::size_t, double>> pairs;
  for (int g = 0; g < layout.cohort_count(); ++g) {
    const auto& c = layout.cohort(g);
    for (int t = c.adoption; t <= layout.periods(); ++t) {
      double s = 0.0;
      for (int i : c.members) s += panel.outcome(i, t - 1) - fit.fitted(i, t - 1);
      pairs.emplace_back(index.position_at_time(g, t), s / c.size());
    }
  }
  return from_pairs(std::move(index), std::move(pairs));
}

CoefficientSet sequential_imputation(const PanelData& panel, const CohortLayout& layout) {
  const int periods = layout.periods();
  Matrix z = panel.outcome;
  for (const auto& c : layout.cohorts()) {
    for (int i : c.members) {
      for (int t = c.adoption; t <= periods; ++t) z(i, t - 1) = kNaN;
    }
  }
  CellIndex index(layout, EstimatorKind::Imputation);
  std::vector<std::pair<std::size_t, double>> pairs;
  const int rounds = periods - layout.cohort(0).adoption + 1;
  for (int s = 1; s <= rounds; ++s) {
    for (int g = 0; g < layout.cohort_count(); ++g) {
      const auto& c = layout.cohort(g);
      const int t = c.adoption + s - 1;
      if (t > periods) continue;
      const auto controls = layout.initial_controls(g);
      double control_now = 0.0;
      double control_before = 0.0;
      for (int j : controls) {
        control_now += z(j, t - 1);
        double past = 0.0;
        for (int u = 1; u < t; ++u) past += z(j, u - 1);
        control_before += past / (t - 1);
      }
      control_now /= static_cast<double>(controls.size());
      control_before /= static_cast<double>(controls.size());

      std::vector<double> imputed;
      double gap = 0.0;
      for (int i : c.members) {
        double past = 0.0;
        for (int u = 1; u < t; ++u) past += z(i, u - 1);
        const double y0 = past / (t - 1) + control_now - control_before;
        imputed.push_back(y0);
        gap += panel.outcome(i, t - 1) - y0;
      }
      for (std::size_t k = 0; k < c.members.size(); ++k) z(c.members[k], t - 1) = imputed[k];
      if (!std::isfinite(gap)) throw Error(ErrorCode::UnstableEstimate, "sequential imputation hit a missing value");
      pairs.emplace_back(index.position_at_time(g, t), gap / c.size());
    }
  }
  return from_pairs(std::move(index), std::move(pairs));
}

CoefficientSet imputation_pre_biases(const PanelData& panel, const CohortLayout& layout) {
  const Matrix& y = panel.outcome;
  CellIndex index(layout, EstimatorKind::Imputation);
  std::vector<std::pair<std::size_t, double>> pairs;
  for (int g = 0; g < layout.cohort_count(); ++g) {
    const auto& c = layout.cohort(g);
    const int pre = c.pre_periods();
    const auto controls = layout.initial_controls(g);
    for (int t = 1; t <= pre; ++t) {
      double treated = 0.0;
      for (int i : c.members) treated += y(i, t - 1) - row_prefix_mean(y, i, pre);
      double control = 0.0;
      for (int j : controls) control += y(j, t - 1) - row_prefix_mean(y, j, pre);
      pairs.emplace_back(index.position_at_time(g, t),
                         treated / c.size() - control / static_cast<double>(controls.size()));
    }
  }
  return from_pairs(std::move(index), std::move(pairs));
}

CoefficientSet csnyt_estimates(const PanelData& panel, const CohortLayout& layout) {
  const Matrix& y = panel.outcome;
  CellIndex index(layout, EstimatorKind::CsNyt);
  std::vector<std::pair<std::size_t, double>> pairs;
  for (int g = 0; g < layout.cohort_count(); ++g) {
    const auto& c = layout.cohort(g);
    const int base = c.adoption - 1;
    for (int t = 1; t <= layout.periods(); ++t) {
      if (t == base) continue;
      const auto controls = t >= c.adoption ? layout.untreated_at(t) : layout.initial_controls(g);
      const double treated = mean_over(y, c.members, t - 1) - mean_over(y, c.members, base - 1);
      const double control = mean_over(y, controls, t - 1) - mean_over(y, controls, base - 1);
      pairs.emplace_back(index.position_at_time(g, t), treated - control);
    }
  }
  return from_pairs(std::move(index), std::move(pairs));
}

CoefficientSet estimate(const PanelData& panel, const CohortLayout& layout, EstimatorKind estimator,
                        const FitOptions& options) {
  if (estimator == EstimatorKind::CsNyt) return csnyt_estimates(panel, layout);
  return merge(imputation_pre_biases(panel, layout), imputation_effects(panel, layout, options));
}

Vector cohort_loo(const PanelData& panel, const CohortLayout& layout, int g, const FitOptions& options) {
  if (g < 0 || g >= layout.cohort_count()) throw Error(ErrorCode::UnknownCohort, "unknown cohort index");
  const auto& c = layout.cohort(g);
  const int pre = c.pre_periods();
  if (pre < 2) {
    throw Error(ErrorCode::SinglePrePeriod,
                "cohort " + std::to_string(c.adoption) + " has a single pre-treatment period");
  }
  const Mask untreated = untreated_mask(panel);
  Mask base = Mask::Constant(panel.units(), panel.periods(), false);
  for (int i : c.members) base.row(i) = untreated.row(i);
  for (int j : layout.initial_controls(g)) base.row(j) = untreated.row(j);

  Vector out(pre);
  for (int held = 1; held <= pre; ++held) {
    Mask sample = base;
    for (int i : c.members) sample(i, held - 1) = false;
    const auto fit = fit_two_way(panel.outcome, sample, options);
    double s = 0.0;
    for (int i : c.members) s += panel.outcome(i, held - 1) - fit.fitted(i, held - 1);
    out(held - 1) = s / c.size();
  }
  return out;
}

AggregatedSeries aggregate(const CoefficientSet& coefficients, const CohortLayout& layout) {
  std::map<int, std::vector<Eigen::Index>> support;
  for (Eigen::Index j = 0; j < coefficients.size(); ++j) support[coefficients.cell(j).rel].push_back(j);

  AggregatedSeries out;
  out.estimator = coefficients.estimator();
  const auto rows = static_cast<Eigen::Index>(support.size());
  out.weights = Matrix::Zero(rows, coefficients.size());
  out.mass = Vector::Zero(rows);
  Eigen::Index r = 0;
  for (const auto& [rel, coords] : support) {
    out.rel_periods.push_back(rel);
    double mass = 0.0;
    for (auto j : coords) mass += layout.cohort(coefficients.cell(j).cohort).size();
    for (auto j : coords) out.weights(r, j) = layout.cohort(coefficients.cell(j).cohort).size() / mass;
    out.mass(r) = mass;
    ++r;
  }
  out.values = out.weights * coefficients.values;
  if (coefficients.vcov) out.vcov = out.weights * *coefficients.vcov * out.weights.transpose();
  return out;
}

}  // namespace anchordid
