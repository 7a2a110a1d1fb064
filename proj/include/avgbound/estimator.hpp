#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "avgbound/averaged_flow.hpp"
#include "avgbound/linalg.hpp"
#include "avgbound/ode.hpp"
#include "avgbound/seminorm.hpp"
#include "avgbound/system_model.hpp"

namespace avgbound {

/// Majorant bundle over a seminorm family with indices mu = 0..count-1.
/// For tau in [0, U) and r inside the tube (r^mu < rho^mu(tau)):
///
///   a, b, c   bound the zeroth, first and second-order remainders,
///   d_est, e_est are the matrix/tensor majorants entering gamma,
///   R_hat, P_hat dominate the fundamental matrix and its inverse.
///
/// c, d_est, e_est must be nondecreasing in each r component.  The partial
/// derivative hooks are optional; when absent, central differences with
/// step 1e-6 * max(1, |x|) are used.  rho may return +infinity.
struct EstimatorBundle {
  std::size_t count = 0;
  std::vector<std::string> labels;

  std::function<double(std::size_t, double)> rho;
  std::function<double(std::size_t, double, const Vec&)> a, b, c;
  std::function<double(std::size_t, std::size_t, double, const Vec&)> d_est;
  std::function<double(std::size_t, std::size_t, std::size_t, double, const Vec&)> e_est;
  std::function<double(std::size_t, std::size_t, double)> R_hat, P_hat;

  std::function<double(std::size_t, double, const Vec&)> da_dtau, db_dtau;
  std::function<double(std::size_t, std::size_t, double, const Vec&)> da_dr, db_dr;
  std::function<double(std::size_t, std::size_t, double)> dR_hat_dtau;
};

/// alpha^mu(tau, r) = a^mu + eps b^mu.  Throws std::domain_error when r is
/// not strictly inside the tube.
[[nodiscard]] double alpha(const EstimatorBundle& bundle, double eps, std::size_t mu, double tau,
                           const Vec& r);

/// gamma^mu(tau, r, ell) = c^mu + d^mu_nu ell^nu + e^mu_{nu,ka} ell^nu ell^ka / 2.
[[nodiscard]] double gamma(const EstimatorBundle& bundle, std::size_t mu, double tau, const Vec& r,
                           const Vec& ell);

/// Search box and derivative bound for the time-zero fixed point of
/// ell = alpha(0, eps ell).
struct FixedPointSpec {
  Vec ell_star;  // box center
  Vec sigma;     // box half-width
  Mat A_bound;   // entrywise bound on |dalpha/dr| over the box
  int max_iter = 200;
  double tol = 1e-13;
};

class HypothesisViolation : public std::runtime_error {
 public:
  HypothesisViolation(std::string which, const std::string& detail)
      : std::runtime_error(which + ": " + detail), inequality(std::move(which)) {}
  std::string inequality;  // box_in_domain | contraction_rate | derivative_bound |
                           // invariance_margin
};

struct FixedPoint {
  Vec ell0;
  int iterations = 0;
  double contraction_rate = 0.0;   // eps * max row sum of A_bound; < 1 required
  double residual = 0.0;           // |alpha(0, eps ell0) - ell0|_inf
  double iterate_error_bound = 0.0;  // a-priori tail bound from the last iterates
  bool degenerate_zero = false;    // alpha(0, .) identically zero; ell0 = 0
  FixedPointSpec spec;             // the spec actually used (possibly generated)
};

/// Contraction iteration for ell0.  When no spec is given one is generated:
/// center alpha(0,0), half-width max(center, 1e-3) (lower edge clipped to
/// stay strictly positive), derivative bound 1.1 x the max |dalpha/dr| over
/// a 5-point-per-axis grid.  All hypotheses are verified first; violations
/// throw HypothesisViolation naming the failed inequality.
[[nodiscard]] FixedPoint find_fixed_point(const EstimatorBundle& bundle, double eps,
                                          const std::optional<FixedPointSpec>& spec = {});

struct BoundResult {
  std::size_t count = 0;
  std::vector<std::string> labels;
  double eps = 0.0;

  Vec ell0;
  int iterations = 0;
  double contraction_rate = 0.0;
  double fixed_point_residual = 0.0;
  double iterate_error_bound = 0.0;
  bool degenerate_zero = false;

  /// joint trajectory in tau; state = (m_0..m_{count-1}, n_0..n_{count-1})
  Trajectory mn;

  double requested_horizon = 0.0;
  double U_eff = 0.0;
  enum class Status { full_horizon, domain_violation } status = Status::full_horizon;
  std::string violated_condition;

  double wall_time_seconds = 0.0;  // fixed point + integration only

  [[nodiscard]] Vec n_at(double tau) const;
  [[nodiscard]] Vec m_at(double tau) const;
};

/// Adaptive step underflow during the bound integration; carries whatever
/// prefix was computed.
class IntegrationStall : public std::runtime_error {
 public:
  IntegrationStall(const std::string& msg, BoundResult partial_result);
  BoundResult partial;
};

/// Integrates the bound system
///
///   dm/dtau = P_hat gamma(., eps n, n)                     m(0) = 0
///   dn/dtau = (1 - eps dalpha/dr)^{-1} [ dalpha/dtau
///              + eps R_hat P_hat gamma(., eps n, n)
///              + eps dR_hat/dtau m ]                        n(0) = ell0
///
/// on [0, flow.horizon) with guards 0 < n^mu, eps n^mu < rho^mu(tau) and
/// det(1 - eps dalpha/dr) > 1e-12.  Strict positivity is relaxed to >= 0
/// for components whose ell0 entry is zero (degenerate bundles).
[[nodiscard]] BoundResult integrate_mn(const EstimatorBundle& bundle, double eps,
                                       const FixedPoint& fp, const AveragedFlow& flow,
                                       const IntegratorConfig& cfg = {});

/// find_fixed_point + integrate_mn with the wall clock around both.
[[nodiscard]] BoundResult run_n_operation(const EstimatorBundle& bundle, double eps,
                                          const AveragedFlow& flow,
                                          const IntegratorConfig& cfg = {},
                                          const std::optional<FixedPointSpec>& spec = {});

struct AuditReport {
  std::vector<double> taus;
  std::vector<Vec> margins;  // n^mu(tau) - [alpha + eps R_hat int P_hat gamma]
  double min_margin = 0.0;
  bool rho_ok = true;        // eps n < rho held at every node
  std::size_t flagged = 0;   // nodes with margin < -tol
  double tol = 0.0;
  [[nodiscard]] bool pass() const { return flagged == 0 && rho_ok; }
};

/// Re-checks the integral form of the bound along the computed trajectory
/// with composite Simpson quadrature at n_nodes + 1 sample times.  Margins
/// are zero for the exact solution, so only quadrature and interpolation
/// error shows up; anything below -tol is flagged.
[[nodiscard]] AuditReport audit_integral_inequality(const EstimatorBundle& bundle, double eps,
                                                    const BoundResult& result,
                                                    std::size_t n_nodes = 10000,
                                                    double tol = 1e-6);

/// Randomized check that the bundle majorizes the model along the flow:
/// draws (tau, dJ, theta) with |dJ^i| <= safety * rho-tube radii and
/// verifies the three majorant inequalities and the R_hat/P_hat domination
/// in the given family.  Requires fam.count == bundle.count.
struct BundleValidityViolation {
  std::string which;
  double tau = 0.0;
  double lhs = 0.0, rhs = 0.0;
};

struct BundleValidityReport {
  std::size_t trials = 0;
  std::vector<BundleValidityViolation> violations;
  double max_slack = 0.0;  // largest lhs/rhs seen (tightness indicator)
  [[nodiscard]] bool pass() const { return violations.empty(); }
};

[[nodiscard]] BundleValidityReport check_bundle_validity(const SystemModel& sys,
                                                         const AveragedFlow& flow,
                                                         const EstimatorBundle& bundle,
                                                         const SeminormFamily& fam,
                                                         std::size_t trials, std::uint64_t seed,
                                                         double safety = 0.9);

/// Sampled contract checks on the bundle itself: monotonicity of c, d_est,
/// e_est in r, plus finite-difference smoothness probes on a, b, R_hat.
struct BundleContractReport {
  std::size_t trials = 0;
  std::vector<std::string> violations;
  [[nodiscard]] bool pass() const { return violations.empty(); }
};

[[nodiscard]] BundleContractReport check_bundle_contract(const EstimatorBundle& bundle,
                                                         double horizon, std::size_t trials,
                                                         std::uint64_t seed);

/// Rebuilds a component-family bundle as a partition-family bundle by
/// root-sum-square aggregation over blocks (valid because the component
/// majorants hold pointwise).  Blocks use 1-based coordinate indices.
[[nodiscard]] EstimatorBundle project_bundle(const EstimatorBundle& comp,
                                             const std::vector<std::vector<std::size_t>>& blocks);

}  // namespace avgbound
