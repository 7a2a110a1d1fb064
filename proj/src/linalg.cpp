#include "avgbound/linalg.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace avgbound {

bool all_finite(const Vec& x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

void require_finite(const Vec& x, const std::string& what) {
  if (!all_finite(x)) throw std::invalid_argument(what + ": non-finite entry");
}

void require_finite(double x, const std::string& what) {
  if (!std::isfinite(x)) throw std::invalid_argument(what + ": non-finite value");
}

Mat Mat::from_rows(std::size_t d, std::initializer_list<double> rows) {
  if (rows.size() != d * d) throw std::invalid_argument("Mat::from_rows: entry count mismatch");
  Mat m(d);
  std::size_t k = 0;
  for (double v : rows) {
    if (!std::isfinite(v)) throw std::invalid_argument("Mat::from_rows: non-finite entry");
    m.a_[k++] = v;
  }
  return m;
}

Mat Mat::identity(std::size_t d) {
  Mat m(d);
  for (std::size_t i = 0; i < d; ++i) m(i, i) = 1.0;
  return m;
}

Vec mat_vec(const Mat& A, const Vec& x) {
  const std::size_t d = A.dim();
  Vec y(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) acc += A(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

Mat mat_mul(const Mat& A, const Mat& B) {
  const std::size_t d = A.dim();
  Mat C(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k) {
      const double aik = A(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < d; ++j) C(i, j) += aik * B(k, j);
    }
  return C;
}

Mat mat_sub(const Mat& A, const Mat& B) {
  const std::size_t d = A.dim();
  Mat C(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) C(i, j) = A(i, j) - B(i, j);
  return C;
}

Mat contract_first(const Tens3& T, const Vec& x) {
  const std::size_t d = T.dim();
  Mat M(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += T(i, j, k) * x[j];
      M(i, k) = acc;
    }
  return M;
}

Vec contract_both(const Tens3& T, const Vec& x, const Vec& y) {
  const std::size_t d = T.dim();
  Vec r(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = 0; k < d; ++k) acc += T(i, j, k) * x[j] * y[k];
    r[i] = acc;
  }
  return r;
}

namespace {

// In-place LU with partial pivoting; returns the permutation sign,
// 0.0 if a pivot column is exactly zero.
double lu_decompose(Mat& A, std::vector<std::size_t>& perm) {
  const std::size_t d = A.dim();
  perm.resize(d);
  for (std::size_t i = 0; i < d; ++i) perm[i] = i;
  double sign = 1.0;
  for (std::size_t col = 0; col < d; ++col) {
    std::size_t piv = col;
    double best = std::fabs(A(col, col));
    for (std::size_t r = col + 1; r < d; ++r) {
      const double cand = std::fabs(A(r, col));
      if (cand > best) {
        best = cand;
        piv = r;
      }
    }
    if (best == 0.0) return 0.0;
    if (piv != col) {
      for (std::size_t j = 0; j < d; ++j) std::swap(A(col, j), A(piv, j));
      std::swap(perm[col], perm[piv]);
      sign = -sign;
    }
    const double inv = 1.0 / A(col, col);
    for (std::size_t r = col + 1; r < d; ++r) {
      const double m = A(r, col) * inv;
      A(r, col) = m;
      for (std::size_t j = col + 1; j < d; ++j) A(r, j) -= m * A(col, j);
    }
  }
  return sign;
}

}  // namespace

double det(const Mat& A) {
  Mat lu = A;
  std::vector<std::size_t> perm;
  const double sign = lu_decompose(lu, perm);
  if (sign == 0.0) return 0.0;
  double d = sign;
  for (std::size_t i = 0; i < lu.dim(); ++i) d *= lu(i, i);
  return d;
}

Vec solve(Mat A, Vec b, double pivot_floor) {
  const std::size_t d = A.dim();
  if (b.size() != d) throw std::invalid_argument("solve: dimension mismatch");
  std::vector<std::size_t> perm;
  if (lu_decompose(A, perm) == 0.0) throw std::runtime_error("solve: singular matrix");
  for (std::size_t i = 0; i < d; ++i)
    if (std::fabs(A(i, i)) < pivot_floor) throw std::runtime_error("solve: pivot below floor");
  Vec pb(d);
  for (std::size_t i = 0; i < d; ++i) pb[i] = b[perm[i]];
  // forward then back substitution
  for (std::size_t i = 1; i < d; ++i)
    for (std::size_t j = 0; j < i; ++j) pb[i] -= A(i, j) * pb[j];
  for (std::size_t ii = d; ii-- > 0;) {
    for (std::size_t j = ii + 1; j < d; ++j) pb[ii] -= A(ii, j) * pb[j];
    pb[ii] /= A(ii, ii);
  }
  return pb;
}

double max_abs(const Vec& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  return m;
}

double max_abs_diff(const Vec& x, const Vec& y) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::fabs(x[i] - y[i]));
  return m;
}

}  // namespace avgbound
