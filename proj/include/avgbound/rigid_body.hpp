#pragma once

#include <array>

#include "avgbound/averaged_flow.hpp"
#include "avgbound/estimator.hpp"
#include "avgbound/system_model.hpp"

namespace avgbound {
namespace rigid_body {

/// Dissipatively perturbed Euler equations for a body with two equal
/// moments of inertia, reduced to action-angle-like variables on
/// Lambda = (0, inf)^2:
///
///   omega(I) = I1 I2
///   f(I, th) = ( -I1 (lambda1 + mu cos 2th), -I2 (lambda2 - mu cos 2th) )
///   g(I, th) = mu sin 2th
///
/// Admissible parameters: lambda1 > 0, |mu| < lambda1, lambda2 > -lambda1,
/// positive initial actions.  The anchor angle is fixed at 0.
struct Params {
  double mu = 1.0;
  double lambda1 = 2.0;
  double lambda2 = -1.0;
  std::array<double, 2> initial_action{4.0, 4.0};
  double epsilon = 1e-2;
  double horizon = 1.0;  // U, in slow time
};

/// Throws std::invalid_argument naming the violated constraint.
void validate(const Params& p);

/// Full model with every auxiliary function in closed form.
[[nodiscard]] SystemModel build_system(const Params& p);

/// Component-family majorant bundle (two members), with analytic partial
/// derivative hooks.  rho^i(tau) = J^i(tau).
[[nodiscard]] EstimatorBundle build_bundle(const Params& p);

/// J, R, R_inv, K in closed form (diagonal exponentials; K = 0).
[[nodiscard]] AveragedFlow closed_form_flow(const Params& p);

/// Published benchmark configurations 'a'..'d' ('b'/'d' differ from
/// 'a'/'c' only in which component is plotted, so the parameters repeat).
[[nodiscard]] Params figure_config(char which);

}  // namespace rigid_body
}  // namespace avgbound
