#include "doctest.h"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "avgbound/linalg.hpp"

using namespace avgbound;

TEST_CASE("from_rows validates size and finiteness") {
  const Mat A = Mat::from_rows(2, {1.0, 2.0, 3.0, 4.0});
  CHECK(A(0, 1) == 2.0);
  CHECK(A(1, 0) == 3.0);
  CHECK_THROWS_AS(Mat::from_rows(2, {1.0, 2.0, 3.0}), std::invalid_argument);
  CHECK_THROWS_AS(Mat::from_rows(2, {1.0, 2.0, 3.0, std::numeric_limits<double>::quiet_NaN()}),
                  std::invalid_argument);
}

TEST_CASE("matrix products and differences") {
  const Mat A = Mat::from_rows(2, {1.0, 2.0, 3.0, 4.0});
  const Mat B = Mat::from_rows(2, {0.0, 1.0, 1.0, 0.0});

  const Vec y = mat_vec(A, {1.0, -1.0});
  CHECK(y[0] == -1.0);
  CHECK(y[1] == -1.0);

  const Mat AB = mat_mul(A, B);
  CHECK(AB(0, 0) == 2.0);
  CHECK(AB(0, 1) == 1.0);
  CHECK(AB(1, 0) == 4.0);
  CHECK(AB(1, 1) == 3.0);

  const Mat D = mat_sub(A, B);
  CHECK(D(0, 1) == 1.0);
  CHECK(D(1, 0) == 2.0);
}

TEST_CASE("tensor contractions") {
  Tens3 T(2);
  T(0, 0, 0) = 1.0;
  T(0, 1, 0) = 2.0;
  T(0, 1, 1) = 3.0;
  T(1, 0, 1) = -1.0;

  const Vec x{2.0, 5.0};
  const Mat M = contract_first(T, x);
  // (T x)^i_k = T^i_{jk} x^j
  CHECK(M(0, 0) == 1.0 * 2.0 + 2.0 * 5.0);
  CHECK(M(0, 1) == 3.0 * 5.0);
  CHECK(M(1, 1) == -1.0 * 2.0);

  const Vec y{1.0, -1.0};
  const Vec z = contract_both(T, x, y);
  CHECK(z[0] == M(0, 0) * 1.0 + M(0, 1) * -1.0);
  CHECK(z[1] == M(1, 0) * 1.0 + M(1, 1) * -1.0);
}

TEST_CASE("determinant and solve") {
  const Mat A = Mat::from_rows(2, {2.0, 1.0, 1.0, 3.0});
  CHECK(det(A) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(det(Mat::identity(3)) == doctest::Approx(1.0));

  // needs a row swap to stay stable
  const Mat P = Mat::from_rows(2, {0.0, 1.0, 1.0, 0.0});
  CHECK(det(P) == doctest::Approx(-1.0));

  const Vec x = solve(A, {5.0, 10.0});
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(x[1] == doctest::Approx(3.0).epsilon(1e-14));

  const Mat S = Mat::from_rows(2, {1.0, 2.0, 2.0, 4.0});
  CHECK_THROWS_AS((void)solve(S, {1.0, 1.0}), std::runtime_error);
  CHECK(det(S) == doctest::Approx(0.0));
}

TEST_CASE("3x3 solve against hand elimination") {
  const Mat A = Mat::from_rows(3, {3.0, -1.0, 0.0, -1.0, 4.0, 2.0, 0.0, 2.0, 5.0});
  const Vec b{1.0, 2.0, 3.0};
  const Vec x = solve(A, b);
  for (std::size_t i = 0; i < 3; ++i) {
    double r = -b[i];
    for (std::size_t j = 0; j < 3; ++j) r += A(i, j) * x[j];
    CHECK(std::abs(r) < 1e-13);
  }
}

TEST_CASE("finiteness helpers") {
  CHECK(all_finite({1.0, -2.0}));
  CHECK_FALSE(all_finite({1.0, std::numeric_limits<double>::infinity()}));
  CHECK_THROWS_AS(require_finite(std::nan(""), "probe"), std::invalid_argument);
  CHECK(max_abs({1.0, -3.0, 2.0}) == 3.0);
  CHECK(max_abs_diff({1.0, 2.0}, {2.0, 0.0}) == 2.0);
}
