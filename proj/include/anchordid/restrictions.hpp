#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "anchordid/biasmap.hpp"
#include "anchordid/panel.hpp"

namespace anchordid {

enum class FamilyKind { RmGlobal, RmCohort, SecondDifference };
// Block: constraints on cohort block biases. Overall: on estimator biases.
enum class BiasSpace { Block, Overall };

[[nodiscard]] std::string family_name(FamilyKind kind);
[[nodiscard]] FamilyKind parse_family(const std::string& name);

// { x : a x <= d, a_eq x = d_eq } over full cell-index coordinates.
struct Polyhedron {
  Matrix a;
  Vector d;
  Matrix a_eq;
  Vector d_eq;
  std::string label;

  [[nodiscard]] bool contains(const Vector& x, double tolerance = 1e-9) const;
};

struct RestrictionFamily {
  FamilyKind kind = FamilyKind::RmGlobal;
  double parameter = 0.0;
  BiasSpace space = BiasSpace::Block;
  EstimatorKind estimator = EstimatorKind::Imputation;
  std::size_t cells = 0;
  bool normalized = false;
  std::vector<Polyhedron> members;
};

struct FamilyOptions {
  bool normalize = false;
  std::size_t member_cap = 100000;
};

// Post consecutive differences bounded by parameter times one pre-period
// difference of any cohort, chosen jointly for all cohorts. Cohorts with a
// single pre period contribute no benchmark.
[[nodiscard]] RestrictionFamily rm_global(const CellIndex& index, double mbar, const FamilyOptions& options = {});
// Each cohort bounded by one of its own pre-period differences.
[[nodiscard]] RestrictionFamily rm_cohort(const CellIndex& index, double mbar, const FamilyOptions& options = {});
// Post second differences bounded by the parameter in absolute value.
[[nodiscard]] RestrictionFamily second_difference(const CellIndex& index, double m, const FamilyOptions& options = {});
[[nodiscard]] RestrictionFamily build_family(const CellIndex& index, FamilyKind kind, double parameter,
                                             const FamilyOptions& options = {});

[[nodiscard]] std::size_t predicted_member_count(const CellIndex& index, FamilyKind kind);

// Adds per-cohort equalities: pre block biases sum to zero. The
// not-yet-treated estimator is already normalized by its zero base cell, so
// nothing is added there.
[[nodiscard]] RestrictionFamily with_normalization(RestrictionFamily family, const CellIndex& index);

// Substitutes Delta = W^{-1} delta.
[[nodiscard]] RestrictionFamily map_to_overall(const RestrictionFamily& family, const BiasMap<double>& map,
                                               const CellIndex& index);

}  // namespace anchordid
