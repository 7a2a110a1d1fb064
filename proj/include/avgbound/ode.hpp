#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "avgbound/linalg.hpp"

namespace avgbound {

using State = std::vector<double>;

/// dy/dt into `out` (preallocated to y.size()).
using Rhs = std::function<void(double, const State&, State&)>;

/// true while the state is admissible.
using Guard = std::function<bool(double, const State&)>;

/// Names the violated condition at a localized guard failure.
using GuardLabel = std::function<std::string(double, const State&)>;

enum class OdeMethod { rk4, rkf45 };

struct IntegratorConfig {
  OdeMethod method = OdeMethod::rkf45;
  double step = 0.0;  // fixed step for rk4 (> 0 required there)
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double initial_step = 0.0;  // adaptive: 0 picks span/100
  double max_step = 0.0;      // 0 = no cap
  std::size_t max_steps = 20'000'000;
};

enum class TrajectoryStatus {
  completed,
  domain_violation,  // guard tripped; end node sits at the localized time
  step_limit,
  step_underflow,  // adaptive step shrank below resolution (stiffness)
};

/// Accepted integration nodes with stored derivatives; evaluation between
/// nodes is cubic Hermite.  Queries outside the covered span clamp to the
/// nearest end node.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(std::size_t dim) : dim_(dim) {}

  void push_node(double t, const State& y, const State& dy);

  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] std::size_t node_count() const { return times_.size(); }
  [[nodiscard]] double front_time() const { return times_.front(); }
  [[nodiscard]] double back_time() const { return times_.back(); }
  [[nodiscard]] double time_at(std::size_t k) const { return times_[k]; }
  [[nodiscard]] const State& state_at(std::size_t k) const { return states_[k]; }
  [[nodiscard]] const State& deriv_at(std::size_t k) const { return derivs_[k]; }

  [[nodiscard]] State eval(double t) const;
  void eval_into(double t, State& out) const;

  /// Rebuild with transformed nodes (used by tests to inject faults).
  [[nodiscard]] static Trajectory from_nodes(std::vector<double> times,
                                             std::vector<State> states,
                                             std::vector<State> derivs);

  TrajectoryStatus status = TrajectoryStatus::completed;
  double violation_time = std::numeric_limits<double>::quiet_NaN();
  std::string violation_condition;

 private:
  std::size_t dim_ = 0;
  std::vector<double> times_;
  std::vector<State> states_;
  std::vector<State> derivs_;
};

/// Integrates y' = rhs(t, y) from t0 to t1*(1 - 1e-12) (the right endpoint
/// is treated as open).  If a guard is given it is checked at every
/// accepted node; on failure the crossing is localized by bisection on the
/// dense interpolant to a bracket of width 1e-10 * (t1 - t0) and the
/// trajectory ends at the admissible side of that bracket.
[[nodiscard]] Trajectory integrate(const Rhs& rhs, State y0, double t0, double t1,
                                   const IntegratorConfig& cfg, const Guard& guard = {},
                                   const GuardLabel& label = {});

/// Fundamental-matrix helper for Y' = A(t) Y, Y(t0) = Y0 (row-major flat
/// state).  |det Y| is monitored at every node; dipping below `det_floor`
/// sets the near-singular flag but integration continues.
struct MatrixTrajectory {
  Trajectory traj;
  std::size_t dim = 0;
  bool near_singular = false;
  double near_singular_time = std::numeric_limits<double>::quiet_NaN();

  [[nodiscard]] Mat eval(double t) const;
};

[[nodiscard]] MatrixTrajectory integrate_linear_matrix(
    const std::function<Mat(double)>& A, Mat Y0, double t0, double t1,
    const IntegratorConfig& cfg, double det_floor = 1e-12);

}  // namespace avgbound
