#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "anchordid/biasmap.hpp"
#include "anchordid/estimators.hpp"
#include "anchordid/lp.hpp"
#include "anchordid/restrictions.hpp"

namespace anchordid {

// theta = weights' tau over post cells of the full cell index.
struct TargetFunctional {
  Vector weights;
  std::string name;
};

[[nodiscard]] TargetFunctional overall_att(const CohortLayout& layout, const CellIndex& index);
[[nodiscard]] TargetFunctional period_att(const CohortLayout& layout, const CellIndex& index, int rel);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

struct IntervalSet {
  std::vector<Interval> intervals;   // disjoint, ascending
  bool touches_grid_edge = false;

  [[nodiscard]] bool empty() const { return intervals.empty(); }
  [[nodiscard]] double lower() const { return intervals.front().lower; }
  [[nodiscard]] double upper() const { return intervals.back().upper; }
  [[nodiscard]] bool contains(double x, double tolerance = 0.0) const;
};

[[nodiscard]] IntervalSet merge_intervals(std::vector<Interval> pieces, double tolerance = 1e-12);

struct PluginResult {
  IntervalSet set;
  std::vector<std::optional<Interval>> members;   // nullopt when infeasible
};

// Per member: bounds of theta with pre biases fixed at their estimates; the
// set is the union over feasible members. The family must be in overall
// space.
[[nodiscard]] PluginResult plugin_identified_set(const CoefficientSet& coefficients, const RestrictionFamily& family,
                                                 const TargetFunctional& target);

// Moment inequalities  Y(theta) - X g <= 0  with Y(theta) = intercept - slope * theta.
struct MomentProblem {
  Vector intercept;
  Vector slope;
  Matrix x;
  Matrix sigma;
};

[[nodiscard]] MomentProblem build_moments(const CoefficientSet& coefficients, const Polyhedron& member,
                                          const TargetFunctional& target);
// Same, with an explicit orthonormal basis for the nuisance directions
// (columns orthogonal to the target weights on post coordinates).
[[nodiscard]] MomentProblem build_moments(const CoefficientSet& coefficients, const Polyhedron& member,
                                          const TargetFunctional& target, const Matrix& nuisance_basis);

struct HybridOptions {
  double alpha = 0.05;
  std::optional<double> kappa;   // defaults to alpha / 10
  int lf_draws = 10000;
  std::uint64_t seed = 1;
  double degeneracy_tolerance = 1e-9;

  [[nodiscard]] double first_stage_level() const { return kappa ? *kappa : alpha / 10.0; }
};

struct TestOutcome {
  bool reject = false;
  double statistic = 0.0;
  double lf_critical = 0.0;
  bool first_stage_reject = false;
  bool fell_back = false;
  double v_lower = 0.0;
  double v_upper = 0.0;
  double conditional_tail = 1.0;
};

// Least-favorable first stage at level kappa, then a test conditional on the
// optimal dual vertex at level (alpha - kappa) / (1 - kappa).
class HybridTest {
 public:
  HybridTest(const MomentProblem& problem, const HybridOptions& options, std::uint64_t stream = 0);

  [[nodiscard]] TestOutcome test(double theta0) const;
  [[nodiscard]] double lf_critical_value() const { return lf_critical_; }
  // Profiled statistic min { eta : y - X g <= eta * sigma_tilde }.
  [[nodiscard]] double statistic(const Vector& y) const;

 private:
  struct DualSolution {
    double value;
    Vector gamma;
    std::vector<Eigen::Index> basis;
  };
  [[nodiscard]] std::optional<DualSolution> solve_dual(const Vector& y) const;

  HybridOptions options_;
  Vector intercept_;
  Vector slope_;
  Matrix x_;
  Matrix sigma_;
  Vector scale_;
  Matrix w_;
  Vector fixed_intercept_;
  Vector fixed_slope_;
  bool unbounded_ = false;
  double lf_critical_ = 0.0;
  std::optional<lp::StandardForm> dual_;
};

[[nodiscard]] TestOutcome hybrid_test(const CoefficientSet& coefficients, const Polyhedron& member,
                                      const TargetFunctional& target, double theta0, const HybridOptions& options);

// P(Z > x | lower <= Z <= upper) for standard normal Z; stable in the tails.
[[nodiscard]] double truncated_normal_upper_tail(double x, double lower, double upper);

struct GridSpec {
  double lower = 0.0;
  double upper = 0.0;
  int points = 201;

  [[nodiscard]] double at(int i) const {
    return points == 1 ? lower : lower + (upper - lower) * static_cast<double>(i) / (points - 1);
  }
};

struct ConfidenceOptions {
  HybridOptions hybrid;
  std::optional<GridSpec> grid;
  int grid_points = 201;
  double grid_se_multiple = 10.0;
  int workers = 1;
};

struct ConfidenceResult {
  IntervalSet set;
  GridSpec grid;
  PluginResult plugin;
  std::size_t distinct_members = 0;
};

// Grid inversion of the hybrid test; a point is kept when any member accepts.
[[nodiscard]] ConfidenceResult confidence_set(const CoefficientSet& coefficients, const RestrictionFamily& family,
                                              const TargetFunctional& target, const ConfidenceOptions& options);

// Everything the sensitivity layer needs about one estimation run.
struct AnchoredModel {
  CohortLayout layout;
  CoefficientSet coefficients;
  BiasMap<double> map;
};

[[nodiscard]] AnchoredModel make_model(CohortLayout layout, CoefficientSet coefficients);
// The relative-period series as a single pseudo-cohort with identity map.
[[nodiscard]] AnchoredModel aggregated_model(const AggregatedSeries& series);
// Overall ATT of the aggregated series, weighted by cohort mass per period.
[[nodiscard]] TargetFunctional aggregated_att(const AggregatedSeries& series, const AnchoredModel& model);

[[nodiscard]] RestrictionFamily overall_family(const AnchoredModel& model, FamilyKind kind, double parameter,
                                               const FamilyOptions& options = {});

struct CorrectedPoint {
  double value = 0.0;
  double se = 0.0;
};

// Plug-in point at parameter zero and its standard error; the point is
// linear in the coefficients, so the gradient is exact.
[[nodiscard]] std::optional<CorrectedPoint> corrected_point(const CoefficientSet& coefficients,
                                                            const RestrictionFamily& zero_family,
                                                            const TargetFunctional& target);

struct SetResult {
  std::string target;
  FamilyKind family = FamilyKind::RmGlobal;
  double parameter = 0.0;
  double alpha = 0.05;
  GridSpec grid;
  IntervalSet confidence;
  IntervalSet plugin;
  std::optional<CorrectedPoint> corrected;
  std::size_t member_count = 0;
  std::size_t distinct_members = 0;
};

[[nodiscard]] SetResult sensitivity_set(const AnchoredModel& model, FamilyKind kind, double parameter,
                                        const TargetFunctional& target, const ConfidenceOptions& options,
                                        bool with_corrected_point = false);

struct PeriodSet {
  int rel = 0;
  SetResult result;
};

// One set per post relative period, each with its parameter-zero corrected
// point.
[[nodiscard]] std::vector<PeriodSet> by_period_sets(const AnchoredModel& model, FamilyKind kind, double parameter,
                                                    const ConfidenceOptions& options);

[[nodiscard]] SetResult aggregated_confidence_set(const AggregatedSeries& series, FamilyKind kind, double parameter,
                                                  std::optional<int> rel, const ConfidenceOptions& options,
                                                  bool with_corrected_point = false);

}  // namespace anchordid
