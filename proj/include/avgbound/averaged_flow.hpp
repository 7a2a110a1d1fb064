#pragma once

#include <functional>
#include <memory>

#include "avgbound/linalg.hpp"
#include "avgbound/ode.hpp"
#include "avgbound/system_model.hpp"

namespace avgbound {

/// Averaged dynamics in slow time tau:
///
///   dJ/dtau = f_bar(J)                      J(0) = I0
///   dR/dtau = df_bar(J) R                   R(0) = 1
///   dK/dtau = df_bar(J) K + p_bar(J)        K(0) = 0
///
/// with R_inv the inverse fundamental matrix (integrated as its own ODE,
/// never by inverting R).  All evaluators are dense in tau on [0, horizon);
/// queries clamp to the covered span.
struct AveragedFlow {
  enum class Source { numeric, closed_form };

  std::size_t dim = 0;
  Source source = Source::numeric;
  double requested_horizon = 0.0;  // U
  double horizon = 0.0;            // achieved: exit time when truncated, else U
  bool truncated = false;          // J left the domain before U

  std::function<Vec(double)> J;
  std::function<Mat(double)> R;
  std::function<Mat(double)> R_inv;
  std::function<Vec(double)> K;

  bool near_singular = false;  // |det R| dipped below the floor
};

/// Integrates the averaged system numerically.  If J exits the domain
/// before U the flow is truncated at the localized exit time and flagged.
[[nodiscard]] AveragedFlow solve_averaged(const SystemModel& sys, double U,
                                          const IntegratorConfig& cfg = {});

/// Wraps user-supplied closed forms (no integration).
[[nodiscard]] AveragedFlow make_closed_form_flow(std::size_t dim, double U,
                                                 std::function<Vec(double)> J,
                                                 std::function<Mat(double)> R,
                                                 std::function<Mat(double)> R_inv,
                                                 std::function<Vec(double)> K);

/// Quadrature route to K:  K(tau) = R(tau) * int_0^tau R_inv p_bar(J) dtau'
/// (Gauss-Legendre panels).  Test oracle for the ODE route.
[[nodiscard]] Vec drift_by_quadrature(const AveragedFlow& flow, const SystemModel& sys,
                                      double tau, std::size_t panels = 64,
                                      std::size_t quad_order = 8);

}  // namespace avgbound
