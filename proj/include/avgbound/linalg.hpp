#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace avgbound {

/// Dense vector. Sized at runtime; dimensions in this library are tiny
/// (a handful of components), so no effort is spent on vectorization.
using Vec = std::vector<double>;

[[nodiscard]] bool all_finite(const Vec& x);

/// Throws std::invalid_argument naming `what` if any entry is NaN/Inf.
void require_finite(const Vec& x, const std::string& what);
void require_finite(double x, const std::string& what);

/// Dense square matrix, row-major.
class Mat {
 public:
  Mat() = default;
  explicit Mat(std::size_t d) : d_(d), a_(d * d, 0.0) {}

  /// Builds from row-major data; validates entry count and finiteness.
  static Mat from_rows(std::size_t d, std::initializer_list<double> rows);
  static Mat identity(std::size_t d);

  [[nodiscard]] std::size_t dim() const { return d_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * d_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * d_ + j]; }

  [[nodiscard]] const std::vector<double>& data() const { return a_; }
  std::vector<double>& data() { return a_; }

 private:
  std::size_t d_ = 0;
  std::vector<double> a_;
};

/// Rank-3 array T^i_{jk} (one upper, two lower slots), row-major over (i,j,k).
class Tens3 {
 public:
  Tens3() = default;
  explicit Tens3(std::size_t d) : d_(d), a_(d * d * d, 0.0) {}

  [[nodiscard]] std::size_t dim() const { return d_; }
  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return a_[(i * d_ + j) * d_ + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return a_[(i * d_ + j) * d_ + k];
  }

  [[nodiscard]] const std::vector<double>& data() const { return a_; }
  std::vector<double>& data() { return a_; }

 private:
  std::size_t d_ = 0;
  std::vector<double> a_;
};

[[nodiscard]] Vec mat_vec(const Mat& A, const Vec& x);
[[nodiscard]] Mat mat_mul(const Mat& A, const Mat& B);
[[nodiscard]] Mat mat_sub(const Mat& A, const Mat& B);

/// (T X)^i_k = T^i_{jk} X^j  (contraction over the first lower slot).
[[nodiscard]] Mat contract_first(const Tens3& T, const Vec& x);

/// (T X Y)^i = T^i_{jk} X^j Y^k.
[[nodiscard]] Vec contract_both(const Tens3& T, const Vec& x, const Vec& y);

/// Determinant by LU with partial pivoting.
[[nodiscard]] double det(const Mat& A);

/// Solves A x = b by Gaussian elimination with partial pivoting.
/// Throws std::runtime_error if a pivot falls below `pivot_floor`.
[[nodiscard]] Vec solve(Mat A, Vec b, double pivot_floor = 1e-300);

[[nodiscard]] double max_abs(const Vec& x);
[[nodiscard]] double max_abs_diff(const Vec& x, const Vec& y);

}  // namespace avgbound
