#include <doctest.h>

#include <cmath>
#include <random>

#include "anchordid/error.hpp"
#include "anchordid/inference.hpp"
#include "../oracles.hpp"

using namespace anchordid;

namespace {

CohortLayout layout_for(const std::vector<int>& times, const std::vector<int>& sizes, int never, int periods) {
  std::vector<std::optional<int>> adoption;
  for (std::size_t g = 0; g < times.size(); ++g) {
    for (int k = 0; k < sizes[g]; ++k) adoption.emplace_back(times[g]);
  }
  for (int k = 0; k < never; ++k) adoption.emplace_back(std::nullopt);
  return build_layout(oracle::make_panel(Matrix::Zero(static_cast<Eigen::Index>(adoption.size()), periods), adoption));
}

CoefficientSet full_coefficients(const CellIndex& index, const std::function<double(const Cell&)>& value) {
  CoefficientSet c{index, {}, Vector(), std::nullopt};
  std::vector<double> v;
  for (std::size_t j = 0; j < index.size(); ++j) {
    if (index[j].structural_zero) continue;
    c.positions.push_back(j);
    v.push_back(value(index[j]));
  }
  c.values = Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  return c;
}

// Two cohorts adopting at 3 and 5 over six periods; the later cohort shows a
// pre-period swing of 0.5, the earlier none; post estimates are zero.
AnchoredModel illustration(double variance) {
  auto layout = layout_for({3, 5}, {10, 10}, 10, 6);
  const CellIndex index(layout, EstimatorKind::Imputation);
  auto c = full_coefficients(index, [](const Cell& cell) {
    if (cell.cohort == 1 && cell.rel == -3) return -0.25;
    if (cell.cohort == 1 && cell.rel == -2) return 0.25;
    return 0.0;
  });
  c.vcov = variance * Matrix::Identity(c.size(), c.size());
  return make_model(std::move(layout), std::move(c));
}

TargetFunctional mix(const AnchoredModel& m, double w) {
  const auto& index = m.coefficients.index;
  TargetFunctional t{Vector::Zero(static_cast<Eigen::Index>(index.size())), "mix"};
  t.weights(static_cast<Eigen::Index>(*index.position(0, 1))) = w;
  t.weights(static_cast<Eigen::Index>(*index.position(1, 1))) += 1.0 - w;
  return t;
}

double upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double upper_quantile(double p) {
  double lo = -40;
  double hi = 40;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (upper_tail(mid) > p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("two-cohort illustration: cohort-specific bounds shrink with the good cohort's weight") {
  const auto model = illustration(0.1);
  const auto cohort = overall_family(model, FamilyKind::RmCohort, 1.0);
  const auto global = overall_family(model, FamilyKind::RmGlobal, 1.0);
  double previous = 2.0;
  for (int k = 0; k <= 10; ++k) {
    const double w = k / 10.0;
    const auto pc = plugin_identified_set(model.coefficients, cohort, mix(model, w)).set;
    const auto pg = plugin_identified_set(model.coefficients, global, mix(model, w)).set;
    REQUIRE(pc.intervals.size() == 1);
    CHECK(pg.lower() == doctest::Approx(-0.5).epsilon(1e-9));
    CHECK(pg.upper() == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(std::abs(pc.lower() + 0.5 * (1 - w)) < 1e-8);
    CHECK(std::abs(pc.upper() - 0.5 * (1 - w)) < 1e-8);
    const double width = pc.upper() - pc.lower();
    CHECK(width <= previous + 1e-12);
    previous = width;
  }
}

TEST_CASE("two-cohort illustration: low-noise confidence sets follow the plug-in sets") {
  const auto model = illustration(0.001);
  ConfidenceOptions opt;
  opt.grid = GridSpec{-1.0, 1.0, 81};
  opt.hybrid.lf_draws = 2000;
  const auto global = overall_family(model, FamilyKind::RmGlobal, 1.0);
  const auto cohort = overall_family(model, FamilyKind::RmCohort, 1.0);
  const auto g0 = confidence_set(model.coefficients, global, mix(model, 0.0), opt).set;
  const auto g1 = confidence_set(model.coefficients, global, mix(model, 0.9), opt).set;
  const auto c0 = confidence_set(model.coefficients, cohort, mix(model, 0.0), opt).set;
  const auto c1 = confidence_set(model.coefficients, cohort, mix(model, 0.9), opt).set;
  CHECK(g0.upper() - g0.lower() > 0.9);
  CHECK(g1.upper() - g1.lower() > 0.9);
  CHECK(c0.upper() - c0.lower() > 0.9);
  CHECK(c1.upper() - c1.lower() < 0.5 * (c0.upper() - c0.lower()));
  CHECK(c1.contains(0.0));
}

TEST_CASE("parameter-zero plug-in points equal explicit debiasing") {
  for (std::uint64_t seed = 40; seed < 50; ++seed) {
    const auto rp = oracle::random_panel(seed, true, 2);
    auto layout = build_layout(rp.panel);
    auto est = estimate(rp.panel, layout, EstimatorKind::Imputation);
    est.vcov = Matrix::Identity(est.size(), est.size());
    const auto model = make_model(layout, est);
    const auto& index = model.coefficients.index;
    const auto target = overall_att(model.layout, index);
    for (auto kind : {FamilyKind::RmGlobal, FamilyKind::SecondDifference}) {
      Vector block = Vector::Zero(static_cast<Eigen::Index>(index.size()));
      for (std::size_t j = 0; j < index.size(); ++j) {
        const auto& c = index[j];
        const double d0 = *est.value(c.cohort, 0);
        const double dm1 = *est.value(c.cohort, -1);
        if (c.is_pre()) {
          block(static_cast<Eigen::Index>(j)) = *est.value(c.cohort, c.rel);
        } else {
          block(static_cast<Eigen::Index>(j)) = kind == FamilyKind::RmGlobal ? d0 : d0 + c.rel * (d0 - dm1);
        }
      }
      const Vector overall = model.map.w * block;
      double expected = 0.0;
      for (auto j : est.post_coordinates()) {
        const auto p = static_cast<Eigen::Index>(est.positions[static_cast<std::size_t>(j)]);
        expected += target.weights(p) * (est.values(j) - overall(p));
      }
      const auto fam = overall_family(model, kind, 0.0);
      const auto set = plugin_identified_set(model.coefficients, fam, target).set;
      REQUIRE(!set.empty());
      CHECK(std::abs(set.lower() - expected) < 1e-8);
      CHECK(std::abs(set.upper() - expected) < 1e-8);
      // Normalization leaves the set unchanged.
      const auto normed = map_to_overall(
          with_normalization(build_family(index, kind, 0.0), index), model.map, index);
      const auto set2 = plugin_identified_set(model.coefficients, normed, target).set;
      CHECK(std::abs(set2.lower() - set.lower()) < 1e-8);
      const auto cp = corrected_point(model.coefficients, fam, target);
      REQUIRE(cp);
      CHECK(std::abs(cp->value - expected) < 1e-8);
    }
  }
}

TEST_CASE("cohort-specific plug-in sets sit inside global ones") {
  for (std::uint64_t seed = 60; seed < 70; ++seed) {
    const auto rp = oracle::random_panel(seed, true, 2);
    auto layout = build_layout(rp.panel);
    auto est = estimate(rp.panel, layout, EstimatorKind::CsNyt);
    est.vcov = Matrix::Identity(est.size(), est.size());
    const auto model = make_model(layout, est);
    const auto target = overall_att(model.layout, model.coefficients.index);
    for (double mbar : {0.0, 0.5, 2.0}) {
      const auto c = plugin_identified_set(est, overall_family(model, FamilyKind::RmCohort, mbar), target).set;
      const auto g = plugin_identified_set(est, overall_family(model, FamilyKind::RmGlobal, mbar), target).set;
      REQUIRE(!g.empty());
      if (c.empty()) continue;
      CHECK(c.lower() >= g.lower() - 1e-9);
      CHECK(c.upper() <= g.upper() + 1e-9);
    }
  }
}

TEST_CASE("single moment without nuisance reduces to a one-sided z test") {
  const auto layout = layout_for({2}, {5}, 5, 2);
  const CellIndex index(layout, EstimatorKind::Imputation);
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 20; ++k) {
    const double sigma = 0.2 + 0.1 * k;
    const double beta = u(gen);
    const double bound = 0.1 * (k % 4);
    const double alpha = k % 2 == 0 ? 0.05 : 0.10;
    auto c = full_coefficients(index, [&](const Cell& cell) { return cell.is_post() ? beta : 0.0; });
    c.vcov = Matrix::Identity(2, 2) * sigma * sigma;
    Polyhedron member;
    member.a = Matrix::Zero(1, 2);
    member.a(0, static_cast<Eigen::Index>(*index.position(0, 1))) = 1.0;
    member.d = Vector::Constant(1, bound);
    member.a_eq.resize(0, 2);
    member.d_eq.resize(0);
    const auto target = overall_att(layout, index);
    HybridOptions opt;
    opt.alpha = alpha;
    const double kappa = alpha / (k % 3 == 0 ? 10.0 : k % 3 == 1 ? 5.0 : 2.0);
    opt.kappa = kappa;
    const double theta = beta - bound + sigma * (u(gen) / 1.5);
    const auto out = hybrid_test(c, member, target, theta, opt);
    const double eta = (beta - bound - theta) / sigma;
    const double c_lf = upper_quantile(kappa);
    const bool first = eta > c_lf;
    const bool second = (upper_tail(eta) - kappa) / (1 - kappa) < (alpha - kappa) / (1 - kappa);
    CHECK(out.statistic == doctest::Approx(eta).epsilon(1e-10));
    CHECK(out.lf_critical == doctest::Approx(c_lf).epsilon(1e-8));
    CHECK(out.reject == (first || second));
    CHECK(out.reject == (eta > upper_quantile(alpha)));
  }
}

TEST_CASE("truncated normal tail against quadrature") {
  auto quad = [](double x, double lo, double hi) {
    auto dens = [](double z) { return std::exp(-0.5 * z * z); };
    auto integrate = [&](double a, double b) {
      const int n = 20000;
      const double h = (b - a) / n;
      double s = dens(a) + dens(b);
      for (int k = 1; k < n; ++k) s += (k % 2 ? 4 : 2) * dens(a + k * h);
      return s * h / 3;
    };
    const double top = std::min(hi, 12.0);
    const double bottom = std::max(lo, -12.0);
    return integrate(x, top) / integrate(bottom, top);
  };
  const double inf = std::numeric_limits<double>::infinity();
  for (auto [x, lo, hi] : std::vector<std::tuple<double, double, double>>{
           {0.5, -inf, inf}, {1.0, 0.0, 2.0}, {-1.5, -3.0, -1.0}, {2.2, 2.0, 3.0}, {-0.3, -inf, 0.1}, {4.5, 4.0, inf}}) {
    CHECK(truncated_normal_upper_tail(x, lo, hi) == doctest::Approx(quad(x, lo, hi)).epsilon(1e-6));
  }
  // Far tails stay finite and ordered.
  const double far = truncated_normal_upper_tail(40.01, 40.0, inf);
  CHECK(far > 0.6);
  CHECK(far < 0.7);
  CHECK(truncated_normal_upper_tail(-40.5, -inf, -40.0) == doctest::Approx(1 - std::exp(-40.25 * 0.5)).epsilon(0.02));
}

TEST_CASE("tests do not depend on the nuisance basis") {
  const auto rp = oracle::random_panel(77, true, 2);
  auto layout = build_layout(rp.panel);
  auto est = estimate(rp.panel, layout, EstimatorKind::Imputation);
  est.vcov = 0.05 * Matrix::Identity(est.size(), est.size()) + 0.01 * Matrix::Ones(est.size(), est.size());
  const auto model = make_model(layout, est);
  const auto target = overall_att(model.layout, model.coefficients.index);
  const auto fam = overall_family(model, FamilyKind::SecondDifference, 0.1);
  const auto post = est.post_coordinates();
  if (post.size() < 2) return;
  const auto n = static_cast<Eigen::Index>(post.size());
  Vector l(n);
  for (Eigen::Index k = 0; k < n; ++k) l(k) = target.weights(static_cast<Eigen::Index>(est.positions[static_cast<std::size_t>(post[static_cast<std::size_t>(k)])]));
  Matrix r = Matrix::Random(n, n);
  r.col(0) = l;
  Eigen::HouseholderQR<Matrix> qr(r);
  const Matrix q = qr.householderQ();
  const Matrix basis = q.rightCols(n - 1);
  HybridOptions opt;
  opt.lf_draws = 3000;
  const HybridTest a(build_moments(est, fam.members[0], target), opt);
  const HybridTest b(build_moments(est, fam.members[0], target, basis), opt);
  const double center = plugin_identified_set(est, fam, target).set.lower();
  for (int k = -20; k <= 20; ++k) {
    const double theta = center + 0.1 * k;
    const auto ta = a.test(theta);
    const auto tb = b.test(theta);
    CHECK(ta.statistic == doctest::Approx(tb.statistic).epsilon(1e-8));
    CHECK(ta.reject == tb.reject);
  }
  CHECK(a.lf_critical_value() == doctest::Approx(b.lf_critical_value()).epsilon(1e-8));
}

TEST_CASE("fallback never rejects more than the least-favorable test") {
  const auto rp = oracle::random_panel(88, true, 2);
  auto layout = build_layout(rp.panel);
  auto est = estimate(rp.panel, layout, EstimatorKind::CsNyt);
  est.vcov = 0.05 * Matrix::Identity(est.size(), est.size());
  const auto model = make_model(layout, est);
  const auto target = overall_att(model.layout, model.coefficients.index);
  const auto fam = overall_family(model, FamilyKind::RmGlobal, 0.5);
  const auto problem = build_moments(est, fam.members[0], target);
  HybridOptions forced;
  forced.lf_draws = 2000;
  forced.degeneracy_tolerance = 1e12;
  HybridOptions lf_alpha = forced;
  lf_alpha.alpha = 0.999;
  lf_alpha.kappa = forced.alpha;
  const HybridTest hybrid(problem, forced);
  const HybridTest lf(problem, lf_alpha);
  CHECK(hybrid.lf_critical_value() >= lf.lf_critical_value());
  for (int k = -40; k <= 40; ++k) {
    const double theta = 0.1 * k;
    const auto out = hybrid.test(theta);
    if (!out.first_stage_reject) CHECK(out.fell_back);
    if (out.reject) CHECK(out.statistic > lf.lf_critical_value());
  }
}

TEST_CASE("confidence set covers the plug-in set and flags coarse grids") {
  const auto rp = oracle::random_panel(99, true, 2);
  auto layout = build_layout(rp.panel);
  auto est = estimate(rp.panel, layout, EstimatorKind::Imputation);
  est.vcov = 0.02 * Matrix::Identity(est.size(), est.size());
  const auto model = make_model(layout, est);
  const auto target = overall_att(model.layout, model.coefficients.index);
  const auto fam = overall_family(model, FamilyKind::RmGlobal, 0.5);
  ConfidenceOptions opt;
  opt.hybrid.lf_draws = 2000;
  opt.grid = GridSpec{-20.0, 30.0, 501};
  const auto cs = confidence_set(est, fam, target, opt);
  REQUIRE(!cs.plugin.set.empty());
  REQUIRE(!cs.set.empty());
  CHECK(cs.set.lower() <= cs.plugin.set.lower());
  CHECK(cs.set.upper() >= cs.plugin.set.upper());
  CHECK(!cs.set.touches_grid_edge);
  ConfidenceOptions defaults;
  defaults.hybrid.lf_draws = 2000;
  // Pre-period noise widens this set beyond the default padding.
  CHECK(confidence_set(est, fam, target, defaults).set.touches_grid_edge);
  const auto point = confidence_set(est, overall_family(model, FamilyKind::RmGlobal, 0.0), target, defaults).set;
  CHECK(!point.touches_grid_edge);
  const double mid = 0.5 * (cs.plugin.set.lower() + cs.plugin.set.upper());
  defaults.grid = GridSpec{mid - 1e-3, mid + 1e-3, 5};
  CHECK(confidence_set(est, fam, target, defaults).set.touches_grid_edge);
  // Worker count does not change the answer.
  opt.workers = 3;
  const auto cs3 = confidence_set(est, fam, target, opt);
  CHECK(cs3.set.intervals.size() == cs.set.intervals.size());
  CHECK(cs3.set.lower() == cs.set.lower());
}

TEST_CASE("covariance problems are reported") {
  const auto rp = oracle::random_panel(101, true, 2);
  auto layout = build_layout(rp.panel);
  auto est = estimate(rp.panel, layout, EstimatorKind::Imputation);
  auto model = make_model(layout, est);
  const auto target = overall_att(model.layout, model.coefficients.index);
  const auto fam = overall_family(model, FamilyKind::RmGlobal, 0.5);
  try {
    (void)hybrid_test(est, fam.members[0], target, 0.0, {});
    FAIL("expected MissingVcov");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingVcov);
  }
  est.vcov = Matrix::Zero(est.size(), est.size());
  if (est.post_coordinates().size() > 1) {
    try {
      (void)hybrid_test(est, fam.members[0], target, 0.0, {});
      FAIL("expected SingularVcov");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SingularVcov);
    }
  }
}

TEST_CASE("families inconsistent with the estimates are reported") {
  const auto model = illustration(0.1);
  const auto& index = model.coefficients.index;
  RestrictionFamily fam;
  fam.space = BiasSpace::Overall;
  fam.cells = index.size();
  Polyhedron p;
  const auto n = static_cast<Eigen::Index>(index.size());
  p.a.resize(0, n);
  p.d.resize(0);
  p.a_eq = Matrix::Zero(1, n);
  p.a_eq(0, static_cast<Eigen::Index>(*index.position(1, -3))) = 1.0;
  p.d_eq = Vector::Constant(1, 5.0);
  fam.members.push_back(p);
  try {
    (void)plugin_identified_set(model.coefficients, fam, mix(model, 0.5));
    FAIL("expected AllMembersInfeasible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AllMembersInfeasible);
  }
  ConfidenceOptions opt;
  opt.hybrid.lf_draws = 500;
  opt.grid = GridSpec{-1, 1, 11};
  CHECK(confidence_set(model.coefficients, fam, mix(model, 0.5), opt).plugin.set.empty());
}
