#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "avgbound/linalg.hpp"

namespace avgbound {

/// A finite family of vector seminorms on R^d together with compatible
/// matrix and rank-3 seminorms, indexed mu = 0..count-1 (labels carry the
/// user-facing names).  The matrix/tensor members dominate the action of
/// linear and bilinear maps:
///
///   |A x|^mu  <=  sum_nu  mat(mu,nu) |x|^nu
///   |T x y|^mu <= sum_{nu,ka} tens(mu,nu,ka) |x|^nu |y|^ka
struct SeminormFamily {
  enum class Kind { component, partition, custom };

  std::size_t dim = 0;    // underlying space dimension d
  std::size_t count = 0;  // number of seminorms in the family
  Kind kind = Kind::custom;
  std::vector<std::string> labels;

  std::function<double(std::size_t, const Vec&)> vec_fn;
  std::function<double(std::size_t, std::size_t, const Mat&)> mat_fn;
  std::function<double(std::size_t, std::size_t, std::size_t, const Tens3&)> tens_fn;

  [[nodiscard]] double vec(std::size_t mu, const Vec& x) const { return vec_fn(mu, x); }
  [[nodiscard]] double mat(std::size_t mu, std::size_t nu, const Mat& A) const {
    return mat_fn(mu, nu, A);
  }
  [[nodiscard]] double tens(std::size_t mu, std::size_t nu, std::size_t ka,
                            const Tens3& T) const {
    return tens_fn(mu, nu, ka, T);
  }

  /// All seminorm values of x, as a length-`count` vector.
  [[nodiscard]] Vec all(const Vec& x) const;
};

/// |x|^i = |x_i|, one seminorm per coordinate; matrix/tensor values are the
/// absolute entries.
[[nodiscard]] SeminormFamily component_family(std::size_t d);

/// One seminorm per block: the Euclidean norm of the restriction to the
/// block.  Matrix/tensor values are Frobenius norms of the corresponding
/// sub-blocks.  `blocks` uses 1-based coordinate indices and must partition
/// {1..d} into disjoint nonempty sets; otherwise std::invalid_argument.
[[nodiscard]] SeminormFamily partition_family(std::size_t d,
                                              const std::vector<std::vector<std::size_t>>& blocks);

struct FamilyCheckViolation {
  std::string property;  // which axiom failed
  std::string detail;
  double magnitude = 0.0;
};

struct FamilyCheckReport {
  std::size_t trials = 0;
  std::vector<FamilyCheckViolation> violations;
  [[nodiscard]] bool pass() const { return violations.empty(); }
};

/// Randomized audit of the family axioms: absolute homogeneity,
/// subadditivity, separation (on the canonical basis), and domination of
/// matrix and bilinear actions by the matrix/tensor members.
[[nodiscard]] FamilyCheckReport check_family(const SeminormFamily& fam, std::size_t trials,
                                             std::uint64_t seed);

}  // namespace avgbound
