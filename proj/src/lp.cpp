#include "anchordid/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace anchordid::lp {

namespace {

constexpr double kPivotTolerance = 1e-10;
constexpr int kBlandAfter = 40;

void pivot(Matrix& t, Eigen::RowVectorXd& z, Eigen::Index r, Eigen::Index j) {
  t.row(r) /= t(r, j);
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    if (i != r && t(i, j) != 0.0) t.row(i) -= t(i, j) * t.row(r);
  }
  if (z.size() > 0 && z(j) != 0.0) z -= z(j) * t.row(r);
}

// Optimizes over every column of t but the last, which holds the rhs.
Status run(Matrix& t, std::vector<Eigen::Index>& basis, const Vector& cost) {
  const Eigen::Index m = t.rows();
  const Eigen::Index n = t.cols() - 1;
  Eigen::RowVectorXd z = Eigen::RowVectorXd::Zero(n + 1);
  z.head(n) = cost.head(n).transpose();
  for (Eigen::Index i = 0; i < m; ++i) {
    const double cb = cost(basis[static_cast<std::size_t>(i)]);
    if (cb != 0.0) z -= cb * t.row(i);
  }
  const double eps = 1e-10 * (1.0 + cost.head(n).cwiseAbs().maxCoeff());
  const int max_iterations = 50 * static_cast<int>(m + n) + 1000;
  int degenerate = 0;
  for (int iter = 0; iter < max_iterations; ++iter) {
    Eigen::Index enter = -1;
    if (degenerate < kBlandAfter) {
      double best = -eps;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (z(j) < best) {
          best = z(j);
          enter = j;
        }
      }
    } else {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (z(j) < -eps) {
          enter = j;
          break;
        }
      }
    }
    if (enter < 0) return Status::Optimal;

    Eigen::Index leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      const double a = t(i, enter);
      if (a <= kPivotTolerance) continue;
      const double ratio = std::max(t(i, n), 0.0) / a;
      if (ratio < best_ratio - 1e-12) {
        best_ratio = ratio;
        leave = i;
      } else if (ratio <= best_ratio + 1e-12 &&
                 basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)]) {
        leave = i;
      }
    }
    if (leave < 0) return Status::Unbounded;
    degenerate = best_ratio <= 1e-12 ? degenerate + 1 : 0;

    pivot(t, z, leave, enter);
    basis[static_cast<std::size_t>(leave)] = enter;
  }
  return Status::IterationLimit;
}

}  // namespace

StandardForm::StandardForm(const Matrix& a, const Vector& b) : n_(a.cols()) {
  const Eigen::Index m = a.rows();
  Matrix t = Matrix::Zero(m, n_ + m + 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double sign = b(i) < 0 ? -1.0 : 1.0;
    t.row(i).head(n_) = sign * a.row(i);
    t(i, n_ + i) = 1.0;
    t(i, n_ + m) = sign * b(i);
  }
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n_ + i;
  Vector cost = Vector::Zero(n_ + m);
  cost.tail(m).setOnes();
  const Status status = run(t, basis, cost);
  const double scale = 1.0 + (m > 0 ? b.cwiseAbs().maxCoeff() : 0.0);
  double infeasibility = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (basis[static_cast<std::size_t>(i)] >= n_) infeasibility += std::abs(t(i, n_ + m));
  }
  if (status != Status::Optimal || infeasibility > 1e-9 * scale) {
    feasible_ = false;
    return;
  }
  // Drive remaining artificials out of the basis; rows where that is
  // impossible are linearly redundant and are dropped.
  std::vector<Eigen::Index> keep;
  Eigen::RowVectorXd no_cost;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (basis[static_cast<std::size_t>(i)] < n_) {
      keep.push_back(i);
      continue;
    }
    Eigen::Index col = -1;
    double best = 1e-9;
    for (Eigen::Index j = 0; j < n_; ++j) {
      if (std::abs(t(i, j)) > best) {
        best = std::abs(t(i, j));
        col = j;
      }
    }
    if (col < 0) continue;
    pivot(t, no_cost, i, col);
    basis[static_cast<std::size_t>(i)] = col;
    keep.push_back(i);
  }
  tableau_.resize(static_cast<Eigen::Index>(keep.size()), n_ + 1);
  for (std::size_t r = 0; r < keep.size(); ++r) {
    tableau_.row(static_cast<Eigen::Index>(r)).head(n_) = t.row(keep[r]).head(n_);
    tableau_(static_cast<Eigen::Index>(r), n_) = std::max(t(keep[r], n_ + m), 0.0);
    basis_.push_back(basis[static_cast<std::size_t>(keep[r])]);
  }
  feasible_ = true;
}

Solution StandardForm::minimize(const Vector& c) const {
  Solution out;
  if (!feasible_) {
    out.status = Status::Infeasible;
    return out;
  }
  Matrix t = tableau_;
  auto basis = basis_;
  out.status = run(t, basis, c);
  if (out.status != Status::Optimal) return out;
  out.x = Vector::Zero(n_);
  for (std::size_t i = 0; i < basis.size(); ++i) out.x(basis[i]) = std::max(t(static_cast<Eigen::Index>(i), n_), 0.0);
  out.objective = c.dot(out.x);
  out.basis = std::move(basis);
  return out;
}

Solution minimize(const Vector& c, const Matrix& a_ub, const Vector& b_ub, const Matrix& a_eq, const Vector& b_eq) {
  const Eigen::Index n = c.size();
  const Eigen::Index mu = a_ub.rows();
  const Eigen::Index me = a_eq.rows();
  Matrix a = Matrix::Zero(mu + me, 2 * n + mu);
  Vector b(mu + me);
  if (mu > 0) {
    a.block(0, 0, mu, n) = a_ub;
    a.block(0, n, mu, n) = -a_ub;
    a.block(0, 2 * n, mu, mu).setIdentity();
    b.head(mu) = b_ub;
  }
  if (me > 0) {
    a.block(mu, 0, me, n) = a_eq;
    a.block(mu, n, me, n) = -a_eq;
    b.tail(me) = b_eq;
  }
  Vector cost = Vector::Zero(2 * n + mu);
  cost.head(n) = c;
  cost.segment(n, n) = -c;
  StandardForm form(a, b);
  Solution s = form.minimize(cost);
  if (s.status != Status::Optimal) return s;
  Vector x = s.x.head(n) - s.x.segment(n, n);
  s.objective = c.dot(x);
  s.x = std::move(x);
  return s;
}

}  // namespace anchordid::lp
