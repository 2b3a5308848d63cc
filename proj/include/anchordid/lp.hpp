#pragma once

#include <vector>

#include <Eigen/Dense>

namespace anchordid::lp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

struct Solution {
  Status status = Status::Infeasible;
  Vector x;
  double objective = 0.0;
  std::vector<Eigen::Index> basis;   // basic column per retained row
};

// Dense two-phase tableau simplex for  min c'x  s.t.  A x = b, x >= 0.
// Phase one runs in the constructor, so one feasible tableau serves many
// objectives. Dantzig pricing with a switch to Bland's rule on degenerate
// streaks.
class StandardForm {
 public:
  StandardForm(const Matrix& a, const Vector& b);

  [[nodiscard]] bool feasible() const { return feasible_; }
  [[nodiscard]] Eigen::Index variables() const { return n_; }
  [[nodiscard]] Solution minimize(const Vector& c) const;

 private:
  Matrix tableau_;
  std::vector<Eigen::Index> basis_;
  Eigen::Index n_ = 0;
  bool feasible_ = false;
};

// min c'x  s.t.  a_ub x <= b_ub, a_eq x = b_eq, x free.
[[nodiscard]] Solution minimize(const Vector& c, const Matrix& a_ub, const Vector& b_ub, const Matrix& a_eq,
                                const Vector& b_eq);

}  // namespace anchordid::lp
