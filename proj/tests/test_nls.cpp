#include <doctest.h>

#include <cmath>
#include <limits>

#include "rep/errors.hpp"
#include "rep/nls.hpp"
#include "support.hpp"

using rep::Matrix;
using rep::Vector;

TEST_SUITE("nls") {

TEST_CASE("all-negative target clamps to zero") {
  Matrix m = Matrix::Ones(2, 1);
  Vector y(2);
  y << -1, -2;
  const Vector a = rep::nls_solve(m, y, 0.0);
  REQUIRE(a.size() == 1);
  CHECK(a(0) == 0.0);
}

TEST_CASE("identity design reproduces a nonnegative target") {
  Matrix m = Matrix::Identity(2, 2);
  Vector y(2);
  y << 3, 4;
  const Vector a = rep::nls_solve(m, y, 0.0);
  CHECK(a(0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(a(1) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("6x2 instance agrees with the enumeration oracle") {
  Matrix m(6, 2);
  m << 1.0, 0.5, 0.25, 2.0, 1.5, 0.75, 0.0, 1.0, 2.0, 0.0, 0.5, 0.5;
  Vector y(6);
  y << 1.0, -0.5, 2.0, 0.25, -1.0, 0.75;
  for (double ridge : {0.0, 1e-3, 0.1}) {
    const Vector got = rep::nls_solve(m, y, ridge);
    const Vector want = oracle::nnls_enumerate(m, y, ridge);
    CHECK(std::abs(oracle::nnls_objective(m, y, ridge, got) -
                   oracle::nnls_objective(m, y, ridge, want)) < 1e-8);
    CHECK(oracle::kkt_violation(m, y, ridge, got) <= 1e-8);
  }
}

TEST_CASE("random instances meet the KKT conditions and the oracle objective") {
  rep::Rng rng(101);
  const double ridges[] = {0.0, 1e-8, 1e-3, 1e-1, 1.0};
  for (int trial = 0; trial < 250; ++trial) {
    const int rows = 2 + static_cast<int>(rng.uniform_int(0, 18));
    const int cols = 1 + static_cast<int>(rng.uniform_int(0, 4));
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = rng.normal();
    Vector y(rows);
    for (int r = 0; r < rows; ++r) y(r) = 2.0 * rng.normal();
    const double ridge = ridges[trial % 5];

    const Vector a = rep::nls_solve(m, y, ridge);
    CHECK(a.minCoeff() >= 0.0);
    CHECK(oracle::kkt_violation(m, y, ridge, a) <= 1e-8);

    const Vector best = oracle::nnls_enumerate(m, y, ridge);
    const double got = oracle::nnls_objective(m, y, ridge, a);
    const double want = oracle::nnls_objective(m, y, ridge, best);
    CHECK(got <= want + 1e-8);
    CHECK(std::abs(got - want) <= 1e-8);
  }
}

TEST_CASE("gram form matches the design form") {
  rep::Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int rows = 4 + static_cast<int>(rng.uniform_int(0, 10));
    const int cols = 1 + static_cast<int>(rng.uniform_int(0, 4));
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = rng.normal();
    Vector y(rows);
    for (int r = 0; r < rows; ++r) y(r) = rng.normal();
    const double ridge = trial % 2 ? 1e-3 : 1e-1;

    Matrix gram = m.transpose() * m;
    gram.diagonal().array() += ridge;
    const Vector c = m.transpose() * y;
    const Vector via_gram = rep::nls_solve_gram(gram, c, 1e-12);
    const Vector via_design = rep::nls_solve(m, y, ridge);
    const double obj_gram = oracle::nnls_objective(m, y, ridge, via_gram);
    const double obj_design = oracle::nnls_objective(m, y, ridge, via_design);
    CHECK(std::abs(obj_gram - obj_design) <= 1e-8);
    CHECK(oracle::kkt_violation(m, y, ridge, via_gram) <= 1e-8);
  }
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(rep::nls_solve(Matrix(), Vector(), 0.0), rep::DimensionError);
  CHECK_THROWS_AS(rep::nls_solve(Matrix::Ones(3, 2), Vector::Ones(2), 0.0),
                  rep::DimensionError);
  Matrix bad = Matrix::Ones(2, 2);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(rep::nls_solve(bad, Vector::Ones(2), 0.0), rep::NumericError);
  CHECK_THROWS_AS(rep::nls_solve(Matrix::Ones(2, 2), Vector::Ones(2), -1e-6),
                  rep::NumericError);
}

}  // TEST_SUITE
