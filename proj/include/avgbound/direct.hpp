#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avgbound/averaged_flow.hpp"
#include "avgbound/estimator.hpp"
#include "avgbound/linalg.hpp"
#include "avgbound/ode.hpp"
#include "avgbound/seminorm.hpp"
#include "avgbound/system_model.hpp"

namespace avgbound {

struct DirectConfig {
  /// fixed-step resolution: this many steps per angular period at the
  /// slowest |omega| along the averaged solution
  double steps_per_period = 50.0;
  std::size_t omega_scan_nodes = 1024;
  double step_override = 0.0;  // > 0 replaces the derived step
  std::size_t max_steps = 50'000'000;
};

/// Direct integration of the rescaled error in fast time t on
/// [0, horizon/eps):
///
///   dL/dt     = f(J(eps t) + eps L, Theta) - f_bar(J(eps t))       L(0) = 0
///   dTheta/dt = omega(J(eps t)) + eps g(J(eps t) + eps L, Theta)   Theta(0) = theta0
///
/// Theta is integrated unwrapped; theta_at reduces it mod 2pi.
struct DirectResult {
  std::size_t dim = 0;
  double epsilon = 0.0;
  double theta0 = 0.0;

  Trajectory traj;  // state = (L_1..L_d, Theta)

  double step = 0.0;
  double omega_min = 0.0, omega_max = 0.0;
  bool omega_variation_warning = false;  // |omega| varies by more than 10x

  double horizon_t = 0.0;  // achieved end in fast time
  double U_eff = 0.0;      // eps * horizon_t
  enum class Status { completed, domain_violation } status = Status::completed;
  std::string violated_condition;

  double wall_time_seconds = 0.0;  // integration loop only

  [[nodiscard]] Vec L_at(double t) const;
  [[nodiscard]] double theta_at(double t) const;  // mod 2pi
};

[[nodiscard]] DirectResult run_l_operation(const SystemModel& sys, const AveragedFlow& flow,
                                           const DirectConfig& cfg = {});

/// Pointwise comparison of |L(t)|^mu against n^mu(eps t) on a shared grid.
struct VerificationReport {
  std::size_t n_samples = 0;
  std::size_t n_windows = 0;
  std::vector<std::string> labels;

  std::vector<bool> bound_holds;        // per mu, with 1 + 1e-9 slack factor
  Vec worst_ratio;                      // max |L|^mu / n^mu
  std::vector<Vec> window_peak_ratio;   // [window][mu]: peak |L|^mu vs n at the peak
  double t_common = 0.0;                // fast-time span compared
  bool horizon_mismatch = false;

  double T_N = 0.0, T_L = 0.0;
  double speedup = 0.0;  // T_L / T_N

  [[nodiscard]] bool all_hold() const;
};

[[nodiscard]] VerificationReport verify_bounds(const DirectResult& direct,
                                               const BoundResult& bound,
                                               const SeminormFamily& fam,
                                               std::size_t n_samples = 100000,
                                               std::size_t n_windows = 20);

}  // namespace avgbound
