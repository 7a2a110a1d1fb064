#include "avgbound/direct.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace avgbound {

Vec DirectResult::L_at(double t) const {
  const State y = traj.eval(t);
  return Vec(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(dim));
}

double DirectResult::theta_at(double t) const {
  const State y = traj.eval(t);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double th = std::fmod(y[dim], two_pi);
  if (th < 0.0) th += two_pi;
  return th;
}

DirectResult run_l_operation(const SystemModel& sys, const AveragedFlow& flow,
                             const DirectConfig& cfg) {
  const std::size_t d = sys.dim;
  const double eps = sys.epsilon;
  if (!(eps > 0.0)) throw std::invalid_argument("run_l_operation: epsilon must be positive");
  const double U = flow.horizon;
  if (!(U > 0.0)) throw std::invalid_argument("run_l_operation: empty horizon");

  DirectResult res;
  res.dim = d;
  res.epsilon = eps;
  res.theta0 = sys.theta0;

  // scan |omega| along the averaged solution to size the fixed step
  double om_min = std::numeric_limits<double>::infinity();
  double om_max = 0.0;
  for (std::size_t k = 0; k < cfg.omega_scan_nodes; ++k) {
    const double tau =
        U * (1.0 - 1e-12) * static_cast<double>(k) / static_cast<double>(cfg.omega_scan_nodes - 1);
    const double om = std::fabs(sys.omega(flow.J(tau)));
    om_min = std::min(om_min, om);
    om_max = std::max(om_max, om);
  }
  if (!(om_min > 0.0))
    throw std::domain_error("run_l_operation: omega vanishes along the averaged solution");
  res.omega_min = om_min;
  res.omega_max = om_max;
  res.omega_variation_warning = om_max / om_min > 10.0;

  res.step = cfg.step_override > 0.0
                 ? cfg.step_override
                 : (2.0 * std::numbers::pi / om_min) / cfg.steps_per_period;

  IntegratorConfig icfg;
  icfg.method = OdeMethod::rk4;
  icfg.step = res.step;
  icfg.max_steps = cfg.max_steps;

  Rhs rhs = [&sys, &flow, eps, d](double t, const State& y, State& dy) {
    const double tau = eps * t;
    const Vec J = flow.J(tau);
    Vec I(d);
    for (std::size_t i = 0; i < d; ++i) I[i] = J[i] + eps * y[i];
    const Vec fv = sys.f(I, y[d]);
    const Vec fb = sys.f_bar(J);
    for (std::size_t i = 0; i < d; ++i) dy[i] = fv[i] - fb[i];
    dy[d] = sys.omega(J) + eps * sys.g(I, y[d]);
  };
  Guard guard = [&sys, &flow, eps, d](double t, const State& y) {
    const Vec J = flow.J(eps * t);
    Vec I(d);
    for (std::size_t i = 0; i < d; ++i) I[i] = J[i] + eps * y[i];
    return sys.in_domain(I);
  };
  GuardLabel label = [](double, const State&) { return std::string("perturbed_in_domain"); };

  State y0(d + 1, 0.0);
  y0[d] = sys.theta0;

  const auto t0 = std::chrono::steady_clock::now();
  Trajectory tr = integrate(rhs, std::move(y0), 0.0, U / eps, icfg, guard, label);
  const auto t1 = std::chrono::steady_clock::now();
  res.wall_time_seconds = std::chrono::duration<double>(t1 - t0).count();

  switch (tr.status) {
    case TrajectoryStatus::completed:
      res.status = DirectResult::Status::completed;
      res.horizon_t = U / eps;
      break;
    case TrajectoryStatus::domain_violation:
      res.status = DirectResult::Status::domain_violation;
      res.horizon_t = tr.violation_time;
      res.violated_condition = tr.violation_condition;
      break;
    default:
      throw std::runtime_error("run_l_operation: integration did not finish (step budget)");
  }
  res.U_eff = eps * res.horizon_t;
  res.traj = std::move(tr);
  return res;
}

bool VerificationReport::all_hold() const {
  for (bool b : bound_holds)
    if (!b) return false;
  return !bound_holds.empty();
}

VerificationReport verify_bounds(const DirectResult& direct, const BoundResult& bound,
                                 const SeminormFamily& fam, std::size_t n_samples,
                                 std::size_t n_windows) {
  if (n_samples < 2) throw std::invalid_argument("verify_bounds: need at least 2 samples");
  if (n_windows == 0) throw std::invalid_argument("verify_bounds: need at least 1 window");
  if (fam.count != bound.count)
    throw std::invalid_argument("verify_bounds: family/bound size mismatch");
  const std::size_t m = bound.count;
  const double eps = direct.epsilon;

  VerificationReport rep;
  rep.n_samples = n_samples;
  rep.n_windows = n_windows;
  rep.labels = bound.labels;

  const double t_direct = direct.traj.back_time();
  const double t_bound = bound.mn.back_time() / eps;
  rep.t_common = std::min(t_direct, t_bound);
  rep.horizon_mismatch = std::fabs(t_direct - t_bound) > 1e-6 * std::max(t_direct, t_bound);

  rep.bound_holds.assign(m, true);
  rep.worst_ratio.assign(m, 0.0);
  rep.window_peak_ratio.assign(n_windows, Vec(m, 0.0));
  std::vector<Vec> window_peak(n_windows, Vec(m, -1.0));
  std::vector<Vec> window_peak_n(n_windows, Vec(m, 0.0));

  constexpr double kSlack = 1e-9;
  State y;
  Vec L(direct.dim), nvals(m);
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double t =
        rep.t_common * static_cast<double>(k) / static_cast<double>(n_samples - 1) *
        (1.0 - 1e-15);
    direct.traj.eval_into(t, y);
    for (std::size_t i = 0; i < direct.dim; ++i) L[i] = y[i];
    const Vec nb = bound.n_at(eps * t);
    const std::size_t w =
        std::min(n_windows - 1, static_cast<std::size_t>(static_cast<double>(n_windows) * t /
                                                         rep.t_common));
    for (std::size_t mu = 0; mu < m; ++mu) {
      const double lv = fam.vec(mu, L);
      const double nv = nb[mu];
      if (lv > nv * (1.0 + kSlack)) rep.bound_holds[mu] = false;
      const double ratio = nv > 0.0 ? lv / nv : (lv > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      rep.worst_ratio[mu] = std::max(rep.worst_ratio[mu], ratio);
      if (lv > window_peak[w][mu]) {
        window_peak[w][mu] = lv;
        window_peak_n[w][mu] = nv;
      }
    }
  }
  for (std::size_t w = 0; w < n_windows; ++w)
    for (std::size_t mu = 0; mu < m; ++mu) {
      const double peak = window_peak[w][mu];
      const double nv = window_peak_n[w][mu];
      rep.window_peak_ratio[w][mu] =
          peak < 0.0 ? 0.0
                     : (nv > 0.0 ? peak / nv
                                 : (peak > 0.0 ? std::numeric_limits<double>::infinity() : 0.0));
    }

  rep.T_N = bound.wall_time_seconds;
  rep.T_L = direct.wall_time_seconds;
  rep.speedup = rep.T_N > 0.0 ? rep.T_L / rep.T_N : 0.0;
  return rep;
}

}  // namespace avgbound
