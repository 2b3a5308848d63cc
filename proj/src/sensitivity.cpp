#include <algorithm>
#include <set>

#include "anchordid/error.hpp"
#include "anchordid/inference.hpp"

namespace anchordid {

AnchoredModel make_model(CohortLayout layout, CoefficientSet coefficients) {
  if (coefficients.index.cohort_count() != layout.cohort_count() ||
      coefficients.index.periods() != layout.periods()) {
    throw Error(ErrorCode::IndexMismatch, "coefficients do not belong to this cohort layout");
  }
  auto map = build_bias_map<double>(layout, coefficients.index);
  return AnchoredModel{std::move(layout), std::move(coefficients), std::move(map)};
}

AnchoredModel aggregated_model(const AggregatedSeries& series) {
  if (series.rel_periods.empty() || series.rel_periods.front() > 0 || series.rel_periods.back() < 1) {
    throw Error(ErrorCode::BadArgument, "aggregated series needs pre and post relative periods");
  }
  const int first = series.rel_periods.front();
  const int adoption = 2 - first;
  const int periods = adoption + series.rel_periods.back() - 1;
  CohortLayout layout(periods, {Cohort{adoption, {0}}}, {1});
  CellIndex index(layout, series.estimator);

  CoefficientSet coefficients{index, {}, series.values, series.vcov};
  std::size_t k = 0;
  for (int s = first; s <= series.rel_periods.back(); ++s) {
    const auto pos = *index.position(0, s);
    if (index[pos].structural_zero) continue;
    if (k >= series.rel_periods.size() || series.rel_periods[k] != s) {
      throw Error(ErrorCode::BadArgument, "aggregated series skips relative period " + std::to_string(s));
    }
    coefficients.positions.push_back(pos);
    ++k;
  }
  if (k != series.rel_periods.size()) throw Error(ErrorCode::BadArgument, "aggregated series has extra periods");
  return make_model(std::move(layout), std::move(coefficients));
}

TargetFunctional aggregated_att(const AggregatedSeries& series, const AnchoredModel& model) {
  const auto& index = model.coefficients.index;
  TargetFunctional t{Vector::Zero(static_cast<Eigen::Index>(index.size())), "att"};
  for (std::size_t r = 0; r < series.rel_periods.size(); ++r) {
    const int s = series.rel_periods[r];
    if (s >= 1) t.weights(static_cast<Eigen::Index>(*index.position(0, s))) = series.mass(static_cast<Eigen::Index>(r));
  }
  t.weights /= t.weights.sum();
  return t;
}

RestrictionFamily overall_family(const AnchoredModel& model, FamilyKind kind, double parameter,
                                 const FamilyOptions& options) {
  const auto& index = model.coefficients.index;
  return map_to_overall(build_family(index, kind, parameter, options), model.map, index);
}

SetResult sensitivity_set(const AnchoredModel& model, FamilyKind kind, double parameter,
                          const TargetFunctional& target, const ConfidenceOptions& options,
                          bool with_corrected_point) {
  const auto family = overall_family(model, kind, parameter);
  const auto cs = confidence_set(model.coefficients, family, target, options);
  SetResult r;
  r.target = target.name;
  r.family = kind;
  r.parameter = parameter;
  r.alpha = options.hybrid.alpha;
  r.grid = cs.grid;
  r.confidence = cs.set;
  r.plugin = cs.plugin.set;
  r.member_count = family.members.size();
  r.distinct_members = cs.distinct_members;
  if (with_corrected_point) {
    r.corrected = corrected_point(model.coefficients, overall_family(model, kind, 0.0), target);
  }
  return r;
}

std::vector<PeriodSet> by_period_sets(const AnchoredModel& model, FamilyKind kind, double parameter,
                                      const ConfidenceOptions& options) {
  std::set<int> rels;
  for (auto j : model.coefficients.post_coordinates()) rels.insert(model.coefficients.cell(j).rel);
  std::vector<PeriodSet> out;
  for (int s : rels) {
    const auto target = period_att(model.layout, model.coefficients.index, s);
    out.push_back({s, sensitivity_set(model, kind, parameter, target, options, true)});
  }
  return out;
}

SetResult aggregated_confidence_set(const AggregatedSeries& series, FamilyKind kind, double parameter,
                                    std::optional<int> rel, const ConfidenceOptions& options,
                                    bool with_corrected_point) {
  const auto model = aggregated_model(series);
  const auto target = rel ? period_att(model.layout, model.coefficients.index, *rel) : aggregated_att(series, model);
  return sensitivity_set(model, kind, parameter, target, options, with_corrected_point);
}

}  // namespace anchordid
