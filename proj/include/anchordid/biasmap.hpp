#pragma once

#include <optional>

#include <Eigen/Dense>

#include "anchordid/error.hpp"
#include "anchordid/panel.hpp"

namespace anchordid {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Linear map from cohort block biases to overall estimator biases,
// delta = W * Delta, over the full cell index.
template <typename Scalar = double>
struct BiasMap {
  EstimatorKind estimator = EstimatorKind::Imputation;
  MatrixX<Scalar> w;
  std::optional<MatrixX<Scalar>> w_inverse;
};

namespace detail {

template <typename Scalar>
Scalar adjustment_weight(const CohortLayout& layout, int k) {
  long later = layout.never_size();
  for (int j = k; j < layout.cohort_count(); ++j) later += layout.cohort(j).size();
  return Scalar(layout.cohort(k).size()) / Scalar(later);
}

}  // namespace detail

// Post cell (g,s) at period t picks up w_k times the block bias of every
// cohort k adopting in (t_g, t], read at k's own relative period s_k(t). The
// not-yet-treated estimator also subtracts the same cohorts' biases at the
// base period t_g - 1. Pre cells map to themselves.
template <typename Scalar = double>
[[nodiscard]] MatrixX<Scalar> bias_map_matrix(const CohortLayout& layout, const CellIndex& index) {
  const auto n = static_cast<Eigen::Index>(index.size());
  MatrixX<Scalar> w = MatrixX<Scalar>::Identity(n, n);
  for (std::size_t r = 0; r < index.size(); ++r) {
    const Cell& cell = index[r];
    if (!cell.is_post()) continue;
    for (int k : layout.intermediate_cohorts(cell.cohort, cell.time)) {
      const Scalar wk = detail::adjustment_weight<Scalar>(layout, k);
      const auto row = static_cast<Eigen::Index>(r);
      w(row, static_cast<Eigen::Index>(index.position_at_time(k, cell.time))) += wk;
      if (index.estimator() == EstimatorKind::CsNyt) {
        w(row, static_cast<Eigen::Index>(index.position_at_time(k, cell.adoption - 1))) -= wk;
      }
    }
  }
  return w;
}

// W is block lower triangular over calendar periods with unit upper
// triangular diagonal blocks; inversion is block forward substitution.
template <typename Scalar = double>
[[nodiscard]] MatrixX<Scalar> invert_bias_map(const MatrixX<Scalar>& w, const CellIndex& index) {
  const auto n = static_cast<Eigen::Index>(index.size());
  if (w.rows() != n || w.cols() != n) throw Error(ErrorCode::IndexMismatch, "bias map does not match the cell index");
  const Eigen::Index g = index.cohort_count();
  const Eigen::Index periods = index.periods();
  for (Eigen::Index t = 0; t < periods; ++t) {
    const auto block = w.block(t * g, t * g, g, g);
    for (Eigen::Index a = 0; a < g; ++a) {
      if (block(a, a) != Scalar(1)) throw Error(ErrorCode::NonInvertible, "bias map diagonal is not unit");
      for (Eigen::Index b = 0; b < a; ++b) {
        if (block(a, b) != Scalar(0)) throw Error(ErrorCode::NonInvertible, "bias map block is not upper triangular");
      }
    }
    if (t + 1 < periods && !w.block(t * g, (t + 1) * g, g, n - (t + 1) * g).isZero(0)) {
      throw Error(ErrorCode::NonInvertible, "bias map references a later period");
    }
  }
  MatrixX<Scalar> inv = MatrixX<Scalar>::Zero(n, n);
  for (Eigen::Index t = 0; t < periods; ++t) {
    MatrixX<Scalar> rhs = MatrixX<Scalar>::Zero(g, n);
    rhs.block(0, t * g, g, g).setIdentity();
    if (t > 0) rhs.noalias() -= w.block(t * g, 0, g, t * g) * inv.topRows(t * g);
    inv.middleRows(t * g, g) = w.block(t * g, t * g, g, g).template triangularView<Eigen::UnitUpper>().solve(rhs);
  }
  return inv;
}

// Product of the diagonal; exact for the block triangular structure above.
template <typename Scalar = double>
[[nodiscard]] Scalar bias_map_determinant(const MatrixX<Scalar>& w, const CellIndex& index) {
  (void)invert_bias_map<Scalar>(w, index);
  return w.diagonal().prod();
}

template <typename Scalar = double>
[[nodiscard]] BiasMap<Scalar> build_bias_map(const CohortLayout& layout, const CellIndex& index) {
  BiasMap<Scalar> map;
  map.estimator = index.estimator();
  map.w = bias_map_matrix<Scalar>(layout, index);
  map.w_inverse = invert_bias_map<Scalar>(map.w, index);
  return map;
}

}  // namespace anchordid
