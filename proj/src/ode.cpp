#include "avgbound/ode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace avgbound {

void Trajectory::push_node(double t, const State& y, const State& dy) {
  if (dim_ == 0) dim_ = y.size();
  times_.push_back(t);
  states_.push_back(y);
  derivs_.push_back(dy);
}

namespace {

// cubic Hermite on [t0,t1] with end states/slopes
void hermite(double t, double t0, double t1, const State& y0, const State& dy0, const State& y1,
             const State& dy1, State& out) {
  const double h = t1 - t0;
  const double u = (t - t0) / h;
  const double u2 = u * u;
  const double u3 = u2 * u;
  const double h00 = 2 * u3 - 3 * u2 + 1;
  const double h10 = u3 - 2 * u2 + u;
  const double h01 = -2 * u3 + 3 * u2;
  const double h11 = u3 - u2;
  const std::size_t n = y0.size();
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = h00 * y0[i] + h10 * h * dy0[i] + h01 * y1[i] + h11 * h * dy1[i];
}

}  // namespace

State Trajectory::eval(double t) const {
  State out;
  eval_into(t, out);
  return out;
}

void Trajectory::eval_into(double t, State& out) const {
  if (times_.empty()) throw std::runtime_error("Trajectory::eval: empty trajectory");
  if (t <= times_.front()) {
    out = states_.front();
    return;
  }
  if (t >= times_.back()) {
    out = states_.back();
    return;
  }
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - times_.begin()) - 1;
  hermite(t, times_[k], times_[k + 1], states_[k], derivs_[k], states_[k + 1], derivs_[k + 1],
          out);
}

Trajectory Trajectory::from_nodes(std::vector<double> times, std::vector<State> states,
                                  std::vector<State> derivs) {
  if (times.empty() || times.size() != states.size() || times.size() != derivs.size())
    throw std::invalid_argument("Trajectory::from_nodes: inconsistent node arrays");
  Trajectory tr(states.front().size());
  tr.times_ = std::move(times);
  tr.states_ = std::move(states);
  tr.derivs_ = std::move(derivs);
  return tr;
}

namespace {

struct StepBuffers {
  State k1, k2, k3, k4, k5, k6, ytmp, ynew, fnew;
  void init(std::size_t n) {
    k1.assign(n, 0.0);
    k2 = k3 = k4 = k5 = k6 = ytmp = ynew = fnew = k1;
  }
};

// One classic RK4 step from (t, y) with slope k1 already evaluated.
void rk4_step(const Rhs& rhs, double t, const State& y, double h, StepBuffers& b) {
  const std::size_t n = y.size();
  for (std::size_t i = 0; i < n; ++i) b.ytmp[i] = y[i] + 0.5 * h * b.k1[i];
  rhs(t + 0.5 * h, b.ytmp, b.k2);
  for (std::size_t i = 0; i < n; ++i) b.ytmp[i] = y[i] + 0.5 * h * b.k2[i];
  rhs(t + 0.5 * h, b.ytmp, b.k3);
  for (std::size_t i = 0; i < n; ++i) b.ytmp[i] = y[i] + h * b.k3[i];
  rhs(t + h, b.ytmp, b.k4);
  for (std::size_t i = 0; i < n; ++i)
    b.ynew[i] = y[i] + (h / 6.0) * (b.k1[i] + 2.0 * b.k2[i] + 2.0 * b.k3[i] + b.k4[i]);
}

// One Fehlberg 4(5) attempt; fills ynew with the 5th-order value and
// returns the scaled error norm (max over components).
double rkf45_step(const Rhs& rhs, double t, const State& y, double h, double atol, double rtol,
                  StepBuffers& b) {
  const std::size_t n = y.size();
  for (std::size_t i = 0; i < n; ++i) b.ytmp[i] = y[i] + h * (0.25 * b.k1[i]);
  rhs(t + 0.25 * h, b.ytmp, b.k2);
  for (std::size_t i = 0; i < n; ++i)
    b.ytmp[i] = y[i] + h * ((3.0 / 32.0) * b.k1[i] + (9.0 / 32.0) * b.k2[i]);
  rhs(t + 3.0 * h / 8.0, b.ytmp, b.k3);
  for (std::size_t i = 0; i < n; ++i)
    b.ytmp[i] = y[i] + h * ((1932.0 / 2197.0) * b.k1[i] - (7200.0 / 2197.0) * b.k2[i] +
                            (7296.0 / 2197.0) * b.k3[i]);
  rhs(t + 12.0 * h / 13.0, b.ytmp, b.k4);
  for (std::size_t i = 0; i < n; ++i)
    b.ytmp[i] = y[i] + h * ((439.0 / 216.0) * b.k1[i] - 8.0 * b.k2[i] +
                            (3680.0 / 513.0) * b.k3[i] - (845.0 / 4104.0) * b.k4[i]);
  rhs(t + h, b.ytmp, b.k5);
  for (std::size_t i = 0; i < n; ++i)
    b.ytmp[i] = y[i] + h * (-(8.0 / 27.0) * b.k1[i] + 2.0 * b.k2[i] -
                            (3544.0 / 2565.0) * b.k3[i] + (1859.0 / 4104.0) * b.k4[i] -
                            (11.0 / 40.0) * b.k5[i]);
  rhs(t + 0.5 * h, b.ytmp, b.k6);

  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double y5 = y[i] + h * ((16.0 / 135.0) * b.k1[i] + (6656.0 / 12825.0) * b.k3[i] +
                                  (28561.0 / 56430.0) * b.k4[i] - (9.0 / 50.0) * b.k5[i] +
                                  (2.0 / 55.0) * b.k6[i]);
    const double y4 = y[i] + h * ((25.0 / 216.0) * b.k1[i] + (1408.0 / 2565.0) * b.k3[i] +
                                  (2197.0 / 4104.0) * b.k4[i] - (1.0 / 5.0) * b.k5[i]);
    b.ynew[i] = y5;
    const double sc = atol + rtol * std::max(std::fabs(y[i]), std::fabs(y5));
    const double e = std::fabs(y5 - y4) / sc;
    if (!(e <= err)) err = std::isfinite(e) ? e : std::numeric_limits<double>::infinity();
  }
  return err;
}

// Bisects the guard crossing inside an accepted step (left end admissible,
// right end not) down to `width`; returns the admissible end of the bracket.
void localize_violation(const Guard& guard, double tl, const State& yl, const State& dyl,
                        double tr, const State& yr, const State& dyr, double width,
                        double& t_out, State& y_out) {
  double lo = tl, hi = tr;
  const double t0 = tl, t1 = tr;
  State mid;
  State ylo = yl;
  while (hi - lo > width) {
    const double tm = 0.5 * (lo + hi);
    hermite(tm, t0, t1, yl, dyl, yr, dyr, mid);
    if (guard(tm, mid)) {
      lo = tm;
      ylo = mid;
    } else {
      hi = tm;
    }
  }
  t_out = lo;
  y_out = ylo;
}

}  // namespace

Trajectory integrate(const Rhs& rhs, State y0, double t0, double t1, const IntegratorConfig& cfg,
                     const Guard& guard, const GuardLabel& label) {
  if (!(t1 > t0)) throw std::invalid_argument("integrate: need t1 > t0");
  const std::size_t n = y0.size();
  if (n == 0) throw std::invalid_argument("integrate: empty state");
  const double span = t1 - t0;
  const double t_end = t1 * (1.0 - 1e-12);  // open right endpoint
  const double bisect_width = 1e-10 * span;

  Trajectory tr(n);
  StepBuffers b;
  b.init(n);

  if (guard && !guard(t0, y0)) {
    tr.status = TrajectoryStatus::domain_violation;
    tr.violation_time = t0;
    if (label) tr.violation_condition = label(t0, y0);
    rhs(t0, y0, b.k1);
    tr.push_node(t0, y0, b.k1);
    return tr;
  }

  double t = t0;
  State y = y0;
  rhs(t, y, b.k1);
  tr.push_node(t, y, b.k1);

  const bool fixed = (cfg.method == OdeMethod::rk4);
  double h;
  if (fixed) {
    if (!(cfg.step > 0.0)) throw std::invalid_argument("integrate: rk4 needs a positive step");
    h = cfg.step;
  } else {
    h = cfg.initial_step > 0.0 ? cfg.initial_step : span / 100.0;
  }
  if (cfg.max_step > 0.0) h = std::min(h, cfg.max_step);

  std::size_t steps = 0;
  while (t < t_end) {
    if (steps++ >= cfg.max_steps) {
      tr.status = TrajectoryStatus::step_limit;
      return tr;
    }
    double h_try = std::min(h, t_end - t);

    if (fixed) {
      rk4_step(rhs, t, y, h_try, b);
    } else {
      // adaptive: retry until the scaled error passes
      for (;;) {
        const double err = rkf45_step(rhs, t, y, h_try, cfg.abs_tol, cfg.rel_tol, b);
        if (err <= 1.0) {
          double grow = std::isfinite(err) && err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
          grow = std::clamp(grow, 0.2, 5.0);
          h = h_try * grow;
          if (cfg.max_step > 0.0) h = std::min(h, cfg.max_step);
          break;
        }
        const double shrink =
            std::isfinite(err) ? std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9) : 0.1;
        h_try *= shrink;
        if (h_try < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(t))) {
          tr.status = TrajectoryStatus::step_underflow;
          tr.violation_time = t;
          return tr;
        }
        if (steps++ >= cfg.max_steps) {
          tr.status = TrajectoryStatus::step_limit;
          return tr;
        }
      }
    }

    const double t_new = t + h_try;
    rhs(t_new, b.ynew, b.fnew);

    if (guard && !guard(t_new, b.ynew)) {
      double t_star;
      State y_star;
      localize_violation(guard, t, y, b.k1, t_new, b.ynew, b.fnew, bisect_width, t_star, y_star);
      State f_star(n);
      rhs(t_star, y_star, f_star);
      if (t_star > t) tr.push_node(t_star, y_star, f_star);
      tr.status = TrajectoryStatus::domain_violation;
      tr.violation_time = t_star;
      if (label) tr.violation_condition = label(t_new, b.ynew);
      return tr;
    }

    t = t_new;
    y = b.ynew;
    b.k1 = b.fnew;  // reuse as next step's first slope
    tr.push_node(t, y, b.k1);
  }
  tr.status = TrajectoryStatus::completed;
  return tr;
}

Mat MatrixTrajectory::eval(double t) const {
  State flat = traj.eval(t);
  Mat M(dim);
  M.data() = std::move(flat);
  return M;
}

MatrixTrajectory integrate_linear_matrix(const std::function<Mat(double)>& A, Mat Y0, double t0,
                                         double t1, const IntegratorConfig& cfg,
                                         double det_floor) {
  const std::size_t d = Y0.dim();
  if (d == 0) throw std::invalid_argument("integrate_linear_matrix: empty matrix");
  Rhs rhs = [&A, d](double t, const State& y, State& dy) {
    const Mat At = A(t);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) acc += At(i, k) * y[k * d + j];
        dy[i * d + j] = acc;
      }
  };
  MatrixTrajectory out;
  out.dim = d;
  out.traj = integrate(rhs, Y0.data(), t0, t1, cfg);
  Mat probe(d);
  for (std::size_t k = 0; k < out.traj.node_count(); ++k) {
    probe.data() = out.traj.state_at(k);
    if (std::fabs(det(probe)) <= det_floor) {
      out.near_singular = true;
      out.near_singular_time = out.traj.time_at(k);
      break;
    }
  }
  return out;
}

}  // namespace avgbound
