#include "anchordid/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

#include "anchordid/error.hpp"
#include "anchordid/parallel.hpp"
#include "anchordid/rng.hpp"

namespace anchordid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Columns of a full-index matrix restricted to the coefficient coordinates.
Matrix restrict_columns(const Matrix& a, const CoefficientSet& coefficients) {
  if (a.cols() != static_cast<Eigen::Index>(coefficients.index.size())) {
    throw Error(ErrorCode::IndexMismatch, "restriction width does not match the cell index");
  }
  Matrix out(a.rows(), coefficients.size());
  std::vector<bool> used(coefficients.index.size(), false);
  for (Eigen::Index j = 0; j < coefficients.size(); ++j) {
    const auto p = coefficients.positions[static_cast<std::size_t>(j)];
    out.col(j) = a.col(static_cast<Eigen::Index>(p));
    used[p] = true;
  }
  for (std::size_t p = 0; p < used.size(); ++p) {
    if (!used[p] && a.rows() > 0 && !a.col(static_cast<Eigen::Index>(p)).isZero(0)) {
      throw Error(ErrorCode::IndexMismatch, "restriction involves cell " + coefficients.index.label(p) +
                                                " which has no estimate");
    }
  }
  return out;
}

Matrix select_columns(const Matrix& a, const std::vector<Eigen::Index>& cols) {
  Matrix out(a.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = a.col(cols[k]);
  return out;
}

Vector select_entries(const Vector& v, const std::vector<Eigen::Index>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Eigen::Index>(k)) = v(idx[k]);
  return out;
}

Vector target_on_post(const CoefficientSet& coefficients, const TargetFunctional& target,
                      const std::vector<Eigen::Index>& post) {
  if (target.weights.size() != static_cast<Eigen::Index>(coefficients.index.size())) {
    throw Error(ErrorCode::IndexMismatch, "target weights do not match the cell index");
  }
  Vector l(static_cast<Eigen::Index>(post.size()));
  double covered = 0.0;
  for (std::size_t k = 0; k < post.size(); ++k) {
    l(static_cast<Eigen::Index>(k)) = target.weights(static_cast<Eigen::Index>(coefficients.positions[static_cast<std::size_t>(post[k])]));
    covered += std::abs(l(static_cast<Eigen::Index>(k)));
  }
  if (std::abs(covered - target.weights.cwiseAbs().sum()) > 1e-12 * (1.0 + covered)) {
    throw Error(ErrorCode::BadArgument, "target puts weight outside the estimated post cells");
  }
  if (covered == 0.0) throw Error(ErrorCode::EmptyTarget, "target has no weight on post cells");
  return l;
}

// Orthonormal basis of the complement of l, Gram-Schmidt over unit vectors.
Matrix complement_basis(const Vector& l) {
  const auto n = l.size();
  std::vector<Vector> q{l.normalized()};
  for (Eigen::Index i = 0; i < n && static_cast<Eigen::Index>(q.size()) < n; ++i) {
    Vector v = Vector::Unit(n, i);
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& u : q) v -= u.dot(v) * u;
    }
    if (v.norm() > 1e-8) q.push_back(v.normalized());
  }
  Matrix basis(n, n - 1);
  for (Eigen::Index k = 1; k < n; ++k) basis.col(k - 1) = q[static_cast<std::size_t>(k)];
  return basis;
}

double log_upper_tail(double z) {
  if (z == -kInf) return 0.0;
  if (z == kInf) return -kInf;
  if (z < 35.0) {
    static const boost::math::normal_distribution<> standard;
    return std::log(boost::math::cdf(boost::math::complement(standard, z)));
  }
  const double z2 = z * z;
  return -0.5 * z2 - std::log(z) - 0.5 * std::log(2.0 * M_PI) +
         std::log1p(-1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2));
}

double standard_normal_quantile_upper(double p) {
  static const boost::math::normal_distribution<> standard;
  return boost::math::quantile(boost::math::complement(standard, p));
}

std::string member_key(const Polyhedron& p) {
  std::string key;
  auto append = [&key](const auto& m) {
    const auto rows = m.rows();
    const auto cols = m.cols();
    key.append(reinterpret_cast<const char*>(&rows), sizeof rows);
    key.append(reinterpret_cast<const char*>(&cols), sizeof cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double v = m.data()[i] == 0.0 ? 0.0 : m.data()[i];
      key.append(reinterpret_cast<const char*>(&v), sizeof v);
    }
  };
  append(p.a);
  append(p.d);
  append(p.a_eq);
  append(p.d_eq);
  return key;
}

std::vector<std::size_t> distinct_members(const RestrictionFamily& family) {
  std::vector<std::size_t> keep;
  std::vector<std::string> keys;
  for (std::size_t m = 0; m < family.members.size(); ++m) {
    auto key = member_key(family.members[m]);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      keys.push_back(std::move(key));
      keep.push_back(m);
    }
  }
  return keep;
}

void require_overall(const RestrictionFamily& family) {
  if (family.space != BiasSpace::Overall) {
    throw Error(ErrorCode::BadArgument, "restriction family must be mapped to overall-bias space first");
  }
}

}  // namespace

TargetFunctional overall_att(const CohortLayout& layout, const CellIndex& index) {
  TargetFunctional t{Vector::Zero(static_cast<Eigen::Index>(index.size())), "att"};
  for (std::size_t j = 0; j < index.size(); ++j) {
    if (index[j].is_post()) t.weights(static_cast<Eigen::Index>(j)) = layout.cohort(index[j].cohort).size();
  }
  const double total = t.weights.sum();
  if (total <= 0) throw Error(ErrorCode::EmptyTarget, "no post-treatment cells");
  t.weights /= total;
  return t;
}

TargetFunctional period_att(const CohortLayout& layout, const CellIndex& index, int rel) {
  if (rel < 1) throw Error(ErrorCode::EmptyTarget, "period targets need a post-treatment relative period");
  TargetFunctional t{Vector::Zero(static_cast<Eigen::Index>(index.size())), "period:" + std::to_string(rel)};
  for (std::size_t j = 0; j < index.size(); ++j) {
    if (index[j].rel == rel) t.weights(static_cast<Eigen::Index>(j)) = layout.cohort(index[j].cohort).size();
  }
  const double total = t.weights.sum();
  if (total <= 0) throw Error(ErrorCode::EmptyTarget, "no cohort reaches relative period " + std::to_string(rel));
  t.weights /= total;
  return t;
}

bool IntervalSet::contains(double x, double tolerance) const {
  return std::any_of(intervals.begin(), intervals.end(), [&](const Interval& i) {
    return x >= i.lower - tolerance && x <= i.upper + tolerance;
  });
}

IntervalSet merge_intervals(std::vector<Interval> pieces, double tolerance) {
  std::sort(pieces.begin(), pieces.end(), [](const Interval& a, const Interval& b) { return a.lower < b.lower; });
  IntervalSet out;
  for (const auto& p : pieces) {
    if (!out.intervals.empty() && p.lower <= out.intervals.back().upper + tolerance) {
      out.intervals.back().upper = std::max(out.intervals.back().upper, p.upper);
    } else {
      out.intervals.push_back(p);
    }
  }
  return out;
}

namespace {

PluginResult plugin_members(const CoefficientSet& coefficients, const RestrictionFamily& family,
                            const TargetFunctional& target) {
  require_overall(family);
  const auto post = coefficients.post_coordinates();
  const auto pre = coefficients.pre_coordinates();
  const Vector l = target_on_post(coefficients, target, post);
  const Vector beta_post = select_entries(coefficients.values, post);
  const Vector beta_pre = select_entries(coefficients.values, pre);
  const double base = l.dot(beta_post);

  PluginResult out;
  std::vector<Interval> pieces;
  for (const auto& member : family.members) {
    const Matrix a = restrict_columns(member.a, coefficients);
    const Matrix a_eq = restrict_columns(member.a_eq, coefficients);
    const Matrix a_post = select_columns(a, post);
    const Matrix eq_post = select_columns(a_eq, post);
    const Vector b = member.d - select_columns(a, pre) * beta_pre;
    const Vector b_eq = member.d_eq - select_columns(a_eq, pre) * beta_pre;
    const auto lo = lp::minimize(l, a_post, b, eq_post, b_eq);
    if (lo.status == lp::Status::Infeasible) {
      out.members.emplace_back(std::nullopt);
      continue;
    }
    const auto hi = lp::minimize(-l, a_post, b, eq_post, b_eq);
    for (const auto* s : {&lo, &hi}) {
      if (s->status == lp::Status::Unbounded) {
        throw Error(ErrorCode::UnboundedProgram, "identified set is unbounded under member '" + member.label + "'");
      }
      if (s->status != lp::Status::Optimal) {
        throw Error(ErrorCode::UnstableEstimate, "linear program failed under member '" + member.label + "'");
      }
    }
    const Interval iv{base + hi.objective, base - lo.objective};
    out.members.emplace_back(iv);
    pieces.push_back(iv);
  }
  out.set = merge_intervals(std::move(pieces));
  return out;
}

}  // namespace

PluginResult plugin_identified_set(const CoefficientSet& coefficients, const RestrictionFamily& family,
                                   const TargetFunctional& target) {
  auto out = plugin_members(coefficients, family, target);
  if (out.set.empty() && !family.members.empty()) {
    throw Error(ErrorCode::AllMembersInfeasible, "no member of the restriction family is consistent with the estimates");
  }
  return out;
}

MomentProblem build_moments(const CoefficientSet& coefficients, const Polyhedron& member,
                            const TargetFunctional& target) {
  const auto post = coefficients.post_coordinates();
  return build_moments(coefficients, member, target, complement_basis(target_on_post(coefficients, target, post)));
}

MomentProblem build_moments(const CoefficientSet& coefficients, const Polyhedron& member,
                            const TargetFunctional& target, const Matrix& nuisance_basis) {
  if (!coefficients.vcov) throw Error(ErrorCode::MissingVcov, "coefficients carry no covariance matrix");
  const auto post = coefficients.post_coordinates();
  const Vector l = target_on_post(coefficients, target, post);
  if (nuisance_basis.rows() != l.size() || nuisance_basis.cols() != l.size() - 1) {
    throw Error(ErrorCode::IndexMismatch, "nuisance basis has the wrong shape");
  }
  const auto ne = member.a_eq.rows();
  Matrix stacked(member.a.rows() + 2 * ne, member.a.cols());
  stacked << member.a, member.a_eq, -member.a_eq;
  Vector rhs(stacked.rows());
  rhs << member.d, member.d_eq, -member.d_eq;

  const Matrix a = restrict_columns(stacked, coefficients);
  const Matrix a_post = select_columns(a, post);
  MomentProblem p;
  p.intercept = a * coefficients.values - rhs;
  p.slope = a_post * (l / l.squaredNorm());
  p.x = a_post * nuisance_basis;
  p.sigma = a * *coefficients.vcov * a.transpose();
  return p;
}

double truncated_normal_upper_tail(double x, double lower, double upper) {
  if (!(upper > lower)) return x < upper ? 1.0 : 0.0;
  x = std::clamp(x, lower, upper);
  if (upper > 0.0) {
    const double lx = log_upper_tail(x);
    const double llo = log_upper_tail(lower);
    const double lhi = log_upper_tail(upper);
    const double num = -std::expm1(lhi - lx);
    const double den = -std::expm1(lhi - llo);
    if (den <= 0.0) return 0.0;
    return std::clamp(std::exp(lx - llo) * num / den, 0.0, 1.0);
  }
  // Whole support in the left half: mirror so the tails are computed directly.
  const double lu = log_upper_tail(-upper);
  const double a = log_upper_tail(-x) - lu;
  const double b = log_upper_tail(-lower) - lu;
  if (b == 0.0) return 0.0;
  return std::clamp(std::expm1(a) / std::expm1(b), 0.0, 1.0);
}

HybridTest::HybridTest(const MomentProblem& problem, const HybridOptions& options, std::uint64_t stream)
    : options_(options) {
  const auto rows = problem.intercept.size();
  if (problem.slope.size() != rows || problem.x.rows() != rows || problem.sigma.rows() != rows ||
      problem.sigma.cols() != rows) {
    throw Error(ErrorCode::IndexMismatch, "moment problem dimensions disagree");
  }
  const double alpha = options.alpha;
  const double kappa = options.first_stage_level();
  if (!(alpha > 0 && alpha < 1) || !(kappa > 0 && kappa < alpha)) {
    throw Error(ErrorCode::BadArgument, "need 0 < kappa < alpha < 1");
  }
  const Vector sd = problem.sigma.diagonal().cwiseMax(0.0).cwiseSqrt();
  const double max_sd = rows > 0 ? sd.maxCoeff() : 0.0;
  const double x_scale = 1.0 + (problem.x.size() > 0 ? problem.x.cwiseAbs().maxCoeff() : 0.0);

  std::vector<Eigen::Index> random_rows;
  std::vector<Eigen::Index> fixed_rows;
  for (Eigen::Index j = 0; j < rows; ++j) {
    if (max_sd > 0 && sd(j) > 1e-10 * max_sd) {
      random_rows.push_back(j);
      continue;
    }
    if (problem.x.cols() > 0 && problem.x.row(j).cwiseAbs().maxCoeff() > 1e-9 * x_scale) {
      throw Error(ErrorCode::SingularVcov,
                  "a moment with zero variance restricts the nuisance parameters; covariance is singular there");
    }
    fixed_rows.push_back(j);
  }
  fixed_intercept_ = select_entries(problem.intercept, fixed_rows);
  fixed_slope_ = select_entries(problem.slope, fixed_rows);
  intercept_ = select_entries(problem.intercept, random_rows);
  slope_ = select_entries(problem.slope, random_rows);
  scale_ = select_entries(sd, random_rows);
  const auto n = static_cast<Eigen::Index>(random_rows.size());
  sigma_.resize(n, n);
  Matrix x_rows(n, problem.x.cols());
  for (Eigen::Index a = 0; a < n; ++a) {
    x_rows.row(a) = problem.x.row(random_rows[static_cast<std::size_t>(a)]);
    for (Eigen::Index b = 0; b < n; ++b) {
      sigma_(a, b) = problem.sigma(random_rows[static_cast<std::size_t>(a)], random_rows[static_cast<std::size_t>(b)]);
    }
  }
  // Only the span of the nuisance design matters; keep an orthonormal basis.
  Eigen::Index rank = 0;
  if (x_rows.cols() > 0 && n > 0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(x_rows);
    qr.setThreshold(1e-10);
    rank = qr.rank();
    x_ = Matrix(qr.householderQ()).leftCols(rank);
  } else {
    x_.resize(n, 0);
  }
  w_.resize(n, 1 + rank);
  w_ << scale_, x_;

  if (n == 0) {
    lf_critical_ = kInf;
    return;
  }
  dual_.emplace(w_.transpose(), Vector::Unit(1 + rank, 0));
  if (!dual_->feasible()) {
    unbounded_ = true;
    lf_critical_ = kInf;
    return;
  }
  if (n == 1 && rank == 0) {
    lf_critical_ = standard_normal_quantile_upper(kappa);
    return;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma_);
  const Matrix root = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  Rng rng(stream_key(options.seed, kCriticalValueStream, stream));
  std::vector<double> draws(static_cast<std::size_t>(options.lf_draws));
  Vector eps(n);
  for (auto& d : draws) {
    for (Eigen::Index k = 0; k < n; ++k) eps(k) = rng.normal();
    d = statistic(root * eps);
  }
  std::sort(draws.begin(), draws.end());
  const auto idx = static_cast<std::size_t>(std::ceil((1.0 - kappa) * static_cast<double>(draws.size()))) - 1;
  lf_critical_ = draws[std::min(idx, draws.size() - 1)];
}

std::optional<HybridTest::DualSolution> HybridTest::solve_dual(const Vector& y) const {
  const auto s = dual_->minimize(-y);
  if (s.status != lp::Status::Optimal) return std::nullopt;
  return DualSolution{-s.objective, s.x, s.basis};
}

double HybridTest::statistic(const Vector& y) const {
  if (y.size() == 0 || unbounded_) return -kInf;
  if (x_.cols() == 0) return (y.array() / scale_.array()).maxCoeff();
  const auto dual = solve_dual(y);
  return dual ? dual->value : kInf;
}

TestOutcome HybridTest::test(double theta0) const {
  TestOutcome out;
  out.lf_critical = lf_critical_;
  for (Eigen::Index j = 0; j < fixed_intercept_.size(); ++j) {
    const double v = fixed_intercept_(j) - fixed_slope_(j) * theta0;
    if (v > 1e-8 * (1.0 + std::abs(fixed_intercept_(j)) + std::abs(fixed_slope_(j) * theta0))) {
      out.reject = out.first_stage_reject = true;
      out.statistic = kInf;
      return out;
    }
  }
  if (intercept_.size() == 0 || unbounded_) {
    out.statistic = -kInf;
    return out;
  }
  const Vector y = intercept_ - slope_ * theta0;
  const auto dual = solve_dual(y);
  if (!dual) {
    out.fell_back = true;
    return out;
  }
  const double eta = dual->value;
  out.statistic = eta;
  if (eta > lf_critical_) {
    out.reject = out.first_stage_reject = true;
    return out;
  }

  const double kappa = options_.first_stage_level();
  const double level = (options_.alpha - kappa) / (1.0 - kappa);
  const double tol = options_.degeneracy_tolerance;
  const auto k1 = w_.cols();
  const auto& basis = dual->basis;
  auto fall_back = [&out] {
    out.fell_back = true;
    return out;
  };
  if (static_cast<Eigen::Index>(basis.size()) != k1) return fall_back();

  Matrix wb(k1, k1);
  Vector gb(k1);
  Vector yb(k1);
  std::vector<bool> in_basis(static_cast<std::size_t>(y.size()), false);
  for (Eigen::Index r = 0; r < k1; ++r) {
    const auto j = basis[static_cast<std::size_t>(r)];
    wb.row(r) = w_.row(j);
    gb(r) = dual->gamma(j);
    yb(r) = y(j);
    in_basis[static_cast<std::size_t>(j)] = true;
  }
  Eigen::FullPivLU<Matrix> lu(wb);
  if (!lu.isInvertible()) return fall_back();
  if (gb.minCoeff() <= tol * gb.maxCoeff()) return fall_back();
  const Vector z = lu.solve(yb);
  const Vector slack = w_ * z - y;
  const double y_scale = 1.0 + y.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    if (!in_basis[static_cast<std::size_t>(j)] && slack(j) < tol * y_scale) return fall_back();
  }

  const Vector& gamma = dual->gamma;
  const double var = gamma.dot(sigma_ * gamma);
  if (!(var > 0.0)) return fall_back();
  const Vector c = sigma_ * gamma / var;
  const Vector s = y - c * eta;
  Vector cb(k1);
  Vector sb(k1);
  for (Eigen::Index r = 0; r < k1; ++r) {
    cb(r) = c(basis[static_cast<std::size_t>(r)]);
    sb(r) = s(basis[static_cast<std::size_t>(r)]);
  }
  const Vector mc = c - w_ * lu.solve(cb);
  const Vector ms = s - w_ * lu.solve(sb);
  const double eps = 1e-12 * (1.0 + c.cwiseAbs().maxCoeff());
  double v_lo = -kInf;
  double v_up = kInf;
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    if (in_basis[static_cast<std::size_t>(j)]) continue;
    if (mc(j) > eps) v_up = std::min(v_up, -ms(j) / mc(j));
    if (mc(j) < -eps) v_lo = std::max(v_lo, -ms(j) / mc(j));
  }
  v_up = std::min(v_up, lf_critical_);
  out.v_lower = v_lo;
  out.v_upper = v_up;
  if (!(v_up > v_lo)) return fall_back();
  const double sd = std::sqrt(var);
  out.conditional_tail = truncated_normal_upper_tail(eta / sd, v_lo / sd, v_up / sd);
  out.reject = out.conditional_tail < level;
  return out;
}

TestOutcome hybrid_test(const CoefficientSet& coefficients, const Polyhedron& member, const TargetFunctional& target,
                        double theta0, const HybridOptions& options) {
  return HybridTest(build_moments(coefficients, member, target), options).test(theta0);
}

std::optional<CorrectedPoint> corrected_point(const CoefficientSet& coefficients, const RestrictionFamily& zero_family,
                                              const TargetFunctional& target) {
  RestrictionFamily distinct = zero_family;
  distinct.members.clear();
  for (auto m : distinct_members(zero_family)) distinct.members.push_back(zero_family.members[m]);

  auto midpoint = [&](const CoefficientSet& c) -> std::optional<double> {
    const auto p = plugin_members(c, distinct, target);
    if (p.set.empty()) return std::nullopt;
    return 0.5 * (p.set.lower() + p.set.upper());
  };
  const auto value = midpoint(coefficients);
  if (!value) return std::nullopt;
  CorrectedPoint out{*value, 0.0};
  if (!coefficients.vcov) return out;
  Vector gradient(coefficients.size());
  for (Eigen::Index j = 0; j < coefficients.size(); ++j) {
    CoefficientSet shifted = coefficients;
    shifted.values(j) += 1.0;
    const auto v = midpoint(shifted);
    if (!v) return out;
    gradient(j) = *v - *value;
  }
  out.se = std::sqrt(std::max(0.0, gradient.dot(*coefficients.vcov * gradient)));
  return out;
}

ConfidenceResult confidence_set(const CoefficientSet& coefficients, const RestrictionFamily& family,
                                const TargetFunctional& target, const ConfidenceOptions& options) {
  require_overall(family);
  if (!coefficients.vcov) throw Error(ErrorCode::MissingVcov, "coefficients carry no covariance matrix");
  ConfidenceResult out;
  out.plugin = plugin_members(coefficients, family, target);

  const auto post = coefficients.post_coordinates();
  const Vector l = target_on_post(coefficients, target, post);
  if (options.grid) {
    out.grid = *options.grid;
  } else {
    Matrix sigma_post(l.size(), l.size());
    for (Eigen::Index a = 0; a < l.size(); ++a) {
      for (Eigen::Index b = 0; b < l.size(); ++b) {
        sigma_post(a, b) = (*coefficients.vcov)(post[static_cast<std::size_t>(a)], post[static_cast<std::size_t>(b)]);
      }
    }
    double se = std::sqrt(std::max(0.0, l.dot(sigma_post * l)));
    if (!(se > 0)) se = 1.0;
    const double center = l.dot(select_entries(coefficients.values, post));
    const double lo = out.plugin.set.empty() ? center : out.plugin.set.lower();
    const double hi = out.plugin.set.empty() ? center : out.plugin.set.upper();
    out.grid = GridSpec{lo - options.grid_se_multiple * se, hi + options.grid_se_multiple * se, options.grid_points};
  }
  if (out.grid.points < 1 || !(out.grid.upper >= out.grid.lower)) {
    throw Error(ErrorCode::BadArgument, "invalid grid");
  }

  const auto members = distinct_members(family);
  out.distinct_members = members.size();
  const Matrix basis = complement_basis(l);
  std::vector<std::optional<HybridTest>> tests(members.size());
  parallel_for(members.size(), options.workers, [&](std::size_t k) {
    tests[k].emplace(build_moments(coefficients, family.members[members[k]], target, basis), options.hybrid,
                     static_cast<std::uint64_t>(members[k]));
  });

  const auto points = static_cast<std::size_t>(out.grid.points);
  std::vector<char> accepted(points, 0);
  parallel_for(points, options.workers, [&](std::size_t i) {
    const double theta = out.grid.at(static_cast<int>(i));
    for (const auto& t : tests) {
      if (!t->test(theta).reject) {
        accepted[i] = 1;
        return;
      }
    }
  });
  for (std::size_t i = 0; i < points;) {
    if (!accepted[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < points && accepted[j + 1]) ++j;
    out.set.intervals.push_back({out.grid.at(static_cast<int>(i)), out.grid.at(static_cast<int>(j))});
    i = j + 1;
  }
  out.set.touches_grid_edge = points > 0 && (accepted.front() || accepted.back());
  return out;
}

}  // namespace anchordid
