#include "avgbound/averaged_flow.hpp"

#include <cmath>
#include <stdexcept>

namespace avgbound {

AveragedFlow solve_averaged(const SystemModel& sys, double U, const IntegratorConfig& cfg_in) {
  if (!(U > 0.0)) throw std::invalid_argument("solve_averaged: horizon must be positive");
  if (!sys.in_domain(sys.initial_action))
    throw std::domain_error("solve_averaged: initial action outside the domain");
  const std::size_t d = sys.dim;

  // everything downstream reads these curves densely, so keep the Hermite
  // segments short even when the error control would allow long steps
  IntegratorConfig cfg = cfg_in;
  if (cfg.method == OdeMethod::rkf45 && cfg.max_step <= 0.0) cfg.max_step = U / 1024.0;

  Rhs rhsJ = [&sys](double, const State& y, State& dy) {
    const Vec fb = sys.f_bar(y);
    for (std::size_t i = 0; i < fb.size(); ++i) dy[i] = fb[i];
  };
  Guard guardJ = [&sys](double, const State& y) { return sys.in_domain(y); };
  GuardLabel labelJ = [](double, const State&) { return std::string("averaged_in_domain"); };

  auto trJ = std::make_shared<Trajectory>(
      integrate(rhsJ, sys.initial_action, 0.0, U, cfg, guardJ, labelJ));
  if (trJ->status == TrajectoryStatus::step_limit ||
      trJ->status == TrajectoryStatus::step_underflow)
    throw std::runtime_error("solve_averaged: averaged integration did not reach the horizon");

  AveragedFlow flow;
  flow.dim = d;
  flow.source = AveragedFlow::Source::numeric;
  flow.requested_horizon = U;
  flow.truncated = trJ->status == TrajectoryStatus::domain_violation;
  flow.horizon = flow.truncated ? trJ->violation_time : U;
  const double tau_end = flow.truncated ? trJ->back_time() : U;

  flow.J = [trJ](double tau) { return trJ->eval(tau); };

  // capture the model hooks by value so the flow outlives the caller's model
  auto df_bar = sys.df_bar;
  auto p_bar = sys.p_bar;
  std::function<Mat(double)> A = [trJ, df_bar](double tau) { return df_bar(trJ->eval(tau)); };

  auto mR = std::make_shared<MatrixTrajectory>(
      integrate_linear_matrix(A, Mat::identity(d), 0.0, tau_end, cfg));
  flow.near_singular = mR->near_singular;
  flow.R = [mR](double tau) { return mR->eval(tau); };

  // inverse fundamental matrix: dY/dtau = -Y A(tau)
  Rhs rhsRinv = [A, d](double tau, const State& y, State& dy) {
    const Mat At = A(tau);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) acc += y[i * d + k] * At(k, j);
        dy[i * d + j] = -acc;
      }
  };
  auto trRinv = std::make_shared<Trajectory>(
      integrate(rhsRinv, Mat::identity(d).data(), 0.0, tau_end, cfg));
  flow.R_inv = [trRinv, d](double tau) {
    Mat M(d);
    M.data() = trRinv->eval(tau);
    return M;
  };

  Rhs rhsK = [A, p_bar, trJ, d](double tau, const State& y, State& dy) {
    const Mat At = A(tau);
    const Vec pb = p_bar(trJ->eval(tau));
    for (std::size_t i = 0; i < d; ++i) {
      double acc = pb[i];
      for (std::size_t k = 0; k < d; ++k) acc += At(i, k) * y[k];
      dy[i] = acc;
    }
  };
  auto trK = std::make_shared<Trajectory>(integrate(rhsK, Vec(d, 0.0), 0.0, tau_end, cfg));
  flow.K = [trK](double tau) { return trK->eval(tau); };

  return flow;
}

AveragedFlow make_closed_form_flow(std::size_t dim, double U, std::function<Vec(double)> J,
                                   std::function<Mat(double)> R, std::function<Mat(double)> R_inv,
                                   std::function<Vec(double)> K) {
  if (!(U > 0.0)) throw std::invalid_argument("make_closed_form_flow: horizon must be positive");
  AveragedFlow flow;
  flow.dim = dim;
  flow.source = AveragedFlow::Source::closed_form;
  flow.requested_horizon = U;
  flow.horizon = U;
  flow.truncated = false;
  flow.J = std::move(J);
  flow.R = std::move(R);
  flow.R_inv = std::move(R_inv);
  flow.K = std::move(K);
  return flow;
}

Vec drift_by_quadrature(const AveragedFlow& flow, const SystemModel& sys, double tau,
                        std::size_t panels, std::size_t quad_order) {
  if (tau < 0.0 || tau > flow.horizon)
    throw std::invalid_argument("drift_by_quadrature: tau outside the covered span");
  const std::size_t d = flow.dim;
  std::vector<double> xs, ws;
  gauss_legendre_01(quad_order, xs, ws);
  Vec acc(d, 0.0);
  const double h = tau / static_cast<double>(panels);
  for (std::size_t pnl = 0; pnl < panels; ++pnl) {
    const double a = h * static_cast<double>(pnl);
    for (std::size_t q = 0; q < xs.size(); ++q) {
      const double tq = a + xs[q] * h;
      const Vec integrand = mat_vec(flow.R_inv(tq), sys.p_bar(flow.J(tq)));
      for (std::size_t i = 0; i < d; ++i) acc[i] += ws[q] * h * integrand[i];
    }
  }
  return mat_vec(flow.R(tau), acc);
}

}  // namespace avgbound
