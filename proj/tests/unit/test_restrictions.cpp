#include <doctest.h>

#include <random>

#include "anchordid/error.hpp"
#include "anchordid/restrictions.hpp"
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

ErrorCode failure(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

bool union_contains(const RestrictionFamily& f, const Vector& x) {
  for (const auto& m : f.members) {
    if (m.contains(x, 1e-10)) return true;
  }
  return false;
}

// Block bias vector from per-cohort paths indexed by relative period.
Vector from_paths(const CellIndex& index, const std::function<double(int, int)>& path) {
  Vector v(static_cast<Eigen::Index>(index.size()));
  for (std::size_t j = 0; j < index.size(); ++j) {
    v(static_cast<Eigen::Index>(j)) = index[j].structural_zero ? 0.0 : path(index[j].cohort, index[j].rel);
  }
  return v;
}

}  // namespace

TEST_CASE("member counts on the toy layout") {
  const auto layout = layout_for({5, 7}, {2, 2}, 2, 8);
  const CellIndex index(layout, EstimatorKind::Imputation);
  CHECK(predicted_member_count(index, FamilyKind::RmGlobal) == 16);
  CHECK(predicted_member_count(index, FamilyKind::RmCohort) == 60);
  CHECK(rm_global(index, 1.0).members.size() == 16);
  CHECK(rm_cohort(index, 1.0).members.size() == 60);
  CHECK(second_difference(index, 0.5).members.size() == 1);
  // Each member bounds both signs of every post difference: 4 + 2 post cells.
  CHECK(rm_global(index, 1.0).members[0].a.rows() == 12);
  FamilyOptions capped;
  capped.member_cap = 59;
  CHECK(failure([&] { (void)rm_cohort(index, 1.0, capped); }) == ErrorCode::MemberCountExceedsCap);
}

TEST_CASE("families reject cohorts without enough pre periods") {
  const auto layout = layout_for({2, 4}, {1, 1}, 1, 5);
  const CellIndex index(layout, EstimatorKind::Imputation);
  CHECK(rm_global(index, 1.0).members.size() == 4);
  CHECK(failure([&] { (void)rm_cohort(index, 1.0); }) == ErrorCode::CohortWithoutPreDifference);
  CHECK(failure([&] { (void)second_difference(index, 1.0); }) == ErrorCode::CohortWithoutTwoPrePeriods);
  const auto early = layout_for({2}, {1}, 1, 4);
  CHECK(failure([&] { (void)rm_global(CellIndex(early, EstimatorKind::Imputation), 1.0); }) ==
        ErrorCode::NoPreDifferences);
  CHECK(failure([&] { (void)rm_global(index, -1.0); }) == ErrorCode::BadArgument);
}

TEST_CASE("relative magnitude sets match their definitions") {
  const auto layout = layout_for({5, 7}, {2, 2}, 2, 8);
  const CellIndex index(layout, EstimatorKind::Imputation);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const Vector x = from_paths(index, [&](int, int) { return u(gen); });
    const double mbar = 0.5 + rep % 3;
    double global_max = 0.0;
    std::vector<double> own_max(2, 0.0);
    std::vector<double> post_max(2, 0.0);
    for (int g = 0; g < 2; ++g) {
      const int tg = g == 0 ? 5 : 7;
      auto at = [&](int s) { return x(static_cast<Eigen::Index>(*index.position(g, s))); };
      for (int s = 3 - tg; s <= 0; ++s) own_max[g] = std::max(own_max[g], std::abs(at(s) - at(s - 1)));
      for (int s = 1; s <= 9 - tg; ++s) post_max[g] = std::max(post_max[g], std::abs(at(s) - at(s - 1)));
      global_max = std::max(global_max, own_max[g]);
    }
    const bool in_global = post_max[0] <= mbar * global_max && post_max[1] <= mbar * global_max;
    const bool in_cohort = post_max[0] <= mbar * own_max[0] && post_max[1] <= mbar * own_max[1];
    CHECK(union_contains(rm_global(index, mbar), x) == in_global);
    CHECK(union_contains(rm_cohort(index, mbar), x) == in_cohort);
  }
}

TEST_CASE("second differences at zero allow only linear continuation") {
  const auto layout = layout_for({4, 6}, {1, 1}, 1, 7);
  const CellIndex index(layout, EstimatorKind::Imputation);
  const auto sd = second_difference(index, 0.0);
  const Vector line = from_paths(index, [](int g, int s) { return (g + 1) * 0.3 * s - 0.1; });
  CHECK(union_contains(sd, line));
  Vector bent = line;
  bent(static_cast<Eigen::Index>(*index.position(0, 3))) += 1e-3;
  CHECK(!union_contains(sd, bent));
  CHECK(!union_contains(second_difference(index, 1.9e-3), bent));
  CHECK(union_contains(second_difference(index, 2.1e-3), bent));
}

TEST_CASE("normalization and structural zeros") {
  const auto layout = layout_for({4, 6}, {1, 1}, 1, 7);
  const CellIndex imp(layout, EstimatorKind::Imputation);
  const auto fam = rm_global(imp, 1.0, FamilyOptions{true, 100000});
  CHECK(fam.normalized);
  CHECK(fam.members[0].a_eq.rows() == 2);
  CHECK(fam.members[0].a_eq.row(0).sum() == 3.0);

  const CellIndex cs(layout, EstimatorKind::CsNyt);
  const auto fam_cs = rm_global(cs, 1.0, FamilyOptions{true, 100000});
  CHECK(fam_cs.members[0].a_eq.rows() == 0);
  for (std::size_t j = 0; j < cs.size(); ++j) {
    if (cs[j].structural_zero) {
      for (const auto& m : fam_cs.members) CHECK(m.a.col(static_cast<Eigen::Index>(j)).isZero(0));
    }
  }
}

TEST_CASE("mapping to overall-bias space") {
  const auto layout = layout_for({4, 6}, {2, 3}, 4, 8);
  for (auto kind : {EstimatorKind::Imputation, EstimatorKind::CsNyt}) {
    const CellIndex index(layout, kind);
    const auto map = build_bias_map<double>(layout, index);
    const auto block = rm_cohort(index, 0.7);
    const auto overall = map_to_overall(block, map, index);
    CHECK(overall.space == BiasSpace::Overall);
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
      const Vector x = from_paths(index, [&](int, int) { return u(gen); });
      const Vector y = map.w * x;
      for (std::size_t m = 0; m < block.members.size(); m += 7) {
        CHECK(block.members[m].contains(x) == overall.members[m].contains(y));
      }
    }
    CHECK(failure([&] { (void)map_to_overall(overall, map, index); }) == ErrorCode::AlreadyMapped);
  }
}
