#include <doctest.h>

#include <random>

#include "anchordid/lp.hpp"

using namespace anchordid;
using lp::Matrix;
using lp::Vector;

namespace {

// Dual of  min c'x s.t. A x <= b, x free:  max -b'y s.t. A'y = -c, y >= 0.
double dual_value(const Vector& c, const Matrix& a, const Vector& b) {
  lp::StandardForm form(a.transpose(), -c);
  REQUIRE(form.feasible());
  const auto s = form.minimize(b);
  REQUIRE(s.status == lp::Status::Optimal);
  return -s.objective;
}

}  // namespace

TEST_CASE("small linear program with known optimum") {
  // max x + y  s.t.  x + 2y <= 4, 3x + y <= 6, x, y >= 0.
  Matrix a(4, 2);
  a << 1, 2, 3, 1, -1, 0, 0, -1;
  Vector b(4);
  b << 4, 6, 0, 0;
  Vector c(2);
  c << -1, -1;
  const auto s = lp::minimize(c, a, b, Matrix(0, 2), Vector(0));
  REQUIRE(s.status == lp::Status::Optimal);
  CHECK(s.x(0) == doctest::Approx(1.6));
  CHECK(s.x(1) == doctest::Approx(1.2));
  CHECK(s.objective == doctest::Approx(-2.8));
  CHECK(dual_value(c, a, b) == doctest::Approx(-2.8));
}

TEST_CASE("infeasible and unbounded programs") {
  Matrix a(2, 1);
  a << 1, -1;
  Vector b(2);
  b << -1, -1;   // x <= -1 and x >= 1
  Vector c(1);
  c << 1;
  CHECK(lp::minimize(c, a, b, Matrix(0, 1), Vector(0)).status == lp::Status::Infeasible);
  Matrix a2(1, 1);
  a2 << 1;
  Vector b2(1);
  b2 << 3;
  CHECK(lp::minimize(c, a2, b2, Matrix(0, 1), Vector(0)).status == lp::Status::Unbounded);
}

TEST_CASE("redundant equalities are dropped") {
  Matrix eq(3, 2);
  eq << 1, 1, 2, 2, 1, -1;
  Vector rhs(3);
  rhs << 1, 2, 0;
  Vector c(2);
  c << 1, 0;
  const auto s = lp::minimize(c, Matrix(0, 2), Vector(0), eq, rhs);
  REQUIRE(s.status == lp::Status::Optimal);
  CHECK(s.x(0) == doctest::Approx(0.5));
  rhs(1) = 2.5;
  CHECK(lp::minimize(c, Matrix(0, 2), Vector(0), eq, rhs).status == lp::Status::Infeasible);
}

TEST_CASE("strong duality on random bounded programs") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> normal;
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 2 + rep % 5;
    const int m = 2 * n + 3;
    Matrix a(m, n);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) a(i, j) = normal(gen);
    }
    // Box rows keep the program bounded; the origin keeps it feasible.
    Matrix box(2 * n, n);
    box << Matrix::Identity(n, n), -Matrix::Identity(n, n);
    Matrix full(m + 2 * n, n);
    full << a, box;
    Vector b(m + 2 * n);
    for (int i = 0; i < m + 2 * n; ++i) b(i) = std::abs(normal(gen)) + 0.1;
    Vector c(n);
    for (int j = 0; j < n; ++j) c(j) = normal(gen);
    const auto s = lp::minimize(c, full, b, Matrix(0, n), Vector(0));
    REQUIRE(s.status == lp::Status::Optimal);
    CHECK((full * s.x - b).maxCoeff() < 1e-9);
    CHECK(std::abs(s.objective - dual_value(c, full, b)) < 1e-8);
  }
}

TEST_CASE("one feasible tableau serves many objectives") {
  Matrix a(1, 3);
  a << 1, 1, 1;
  Vector b(1);
  b << 1;
  lp::StandardForm simplex(a, b);
  REQUIRE(simplex.feasible());
  for (int k = 0; k < 3; ++k) {
    Vector c = Vector::Ones(3);
    c(k) = -2;
    const auto s = simplex.minimize(c);
    CHECK(s.x(k) == doctest::Approx(1.0));
    CHECK(s.basis.size() == 1);
  }
}
