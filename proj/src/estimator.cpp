#include "avgbound/estimator.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>

namespace avgbound {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

void check_bundle_shape(const EstimatorBundle& b) {
  if (b.count == 0) throw std::invalid_argument("estimator: empty bundle");
  if (!b.rho || !b.a || !b.b || !b.c || !b.d_est || !b.e_est || !b.R_hat || !b.P_hat)
    throw std::invalid_argument("estimator: bundle is missing a required hook");
}

bool inside_tube(const EstimatorBundle& b, double tau, const Vec& r) {
  for (std::size_t mu = 0; mu < b.count; ++mu)
    if (!(r[mu] < b.rho(mu, tau))) return false;
  return true;
}

double alpha_raw(const EstimatorBundle& b, double eps, std::size_t mu, double tau, const Vec& r) {
  return b.a(mu, tau, r) + eps * b.b(mu, tau, r);
}

double gamma_raw(const EstimatorBundle& b, std::size_t mu, double tau, const Vec& r,
                 const Vec& ell) {
  double val = b.c(mu, tau, r);
  for (std::size_t nu = 0; nu < b.count; ++nu) {
    val += b.d_est(mu, nu, tau, r) * ell[nu];
    for (std::size_t ka = 0; ka < b.count; ++ka)
      val += 0.5 * b.e_est(mu, nu, ka, tau, r) * ell[nu] * ell[ka];
  }
  return val;
}

constexpr double kFdBase = 1e-6;

double fd_step_for(double x) { return kFdBase * std::max(1.0, std::fabs(x)); }

// dalpha^mu/dr^nu, analytic hooks when present
double dalpha_dr(const EstimatorBundle& b, double eps, std::size_t mu, std::size_t nu, double tau,
                 const Vec& r) {
  if (b.da_dr && b.db_dr)
    return b.da_dr(mu, nu, tau, r) + eps * b.db_dr(mu, nu, tau, r);
  Vec rp = r, rm = r;
  const double h = fd_step_for(r[nu]);
  rp[nu] += h;
  rm[nu] -= h;
  return (alpha_raw(b, eps, mu, tau, rp) - alpha_raw(b, eps, mu, tau, rm)) / (2.0 * h);
}

double dalpha_dtau(const EstimatorBundle& b, double eps, std::size_t mu, double tau,
                   const Vec& r) {
  if (b.da_dtau && b.db_dtau)
    return b.da_dtau(mu, tau, r) + eps * b.db_dtau(mu, tau, r);
  const double h = fd_step_for(tau);
  return (alpha_raw(b, eps, mu, tau + h, r) - alpha_raw(b, eps, mu, tau - h, r)) / (2.0 * h);
}

double dRhat_dtau(const EstimatorBundle& b, std::size_t mu, std::size_t nu, double tau) {
  if (b.dR_hat_dtau) return b.dR_hat_dtau(mu, nu, tau);
  const double h = fd_step_for(tau);
  return (b.R_hat(mu, nu, tau + h) - b.R_hat(mu, nu, tau - h)) / (2.0 * h);
}

Mat dalpha_dr_mat(const EstimatorBundle& b, double eps, double tau, const Vec& r) {
  Mat D(b.count);
  for (std::size_t mu = 0; mu < b.count; ++mu)
    for (std::size_t nu = 0; nu < b.count; ++nu) D(mu, nu) = dalpha_dr(b, eps, mu, nu, tau, r);
  return D;
}

}  // namespace

double alpha(const EstimatorBundle& bundle, double eps, std::size_t mu, double tau,
             const Vec& r) {
  check_bundle_shape(bundle);
  if (!inside_tube(bundle, tau, r)) throw std::domain_error("alpha: r outside the tube");
  return alpha_raw(bundle, eps, mu, tau, r);
}

double gamma(const EstimatorBundle& bundle, std::size_t mu, double tau, const Vec& r,
             const Vec& ell) {
  check_bundle_shape(bundle);
  if (!inside_tube(bundle, tau, r)) throw std::domain_error("gamma: r outside the tube");
  return gamma_raw(bundle, mu, tau, r, ell);
}

FixedPoint find_fixed_point(const EstimatorBundle& bundle, double eps,
                            const std::optional<FixedPointSpec>& spec_in) {
  check_bundle_shape(bundle);
  if (!(eps > 0.0)) throw std::invalid_argument("find_fixed_point: eps must be positive");
  const std::size_t m = bundle.count;

  const Vec zero(m, 0.0);
  Vec rho0(m);
  for (std::size_t mu = 0; mu < m; ++mu) {
    rho0[mu] = bundle.rho(mu, 0.0);
    if (!(rho0[mu] > 0.0))
      throw HypothesisViolation("box_in_domain", "rho(0) is not positive for component " +
                                                     bundle.labels[mu]);
  }

  auto alpha0 = [&](const Vec& ell) {
    Vec r(m);
    for (std::size_t mu = 0; mu < m; ++mu) r[mu] = eps * ell[mu];
    Vec out(m);
    for (std::size_t mu = 0; mu < m; ++mu) out[mu] = alpha_raw(bundle, eps, mu, 0.0, r);
    return out;
  };

  const Vec ell_star_probe = alpha0(zero);
  FixedPoint fp;

  // degenerate bundle: alpha(0, .) identically zero => the bound starts at 0
  // and the search-box hypothesis is vacuous
  if (max_abs(ell_star_probe) == 0.0) {
    bool all_zero = true;
    for (int k = 1; k <= 3 && all_zero; ++k) {
      Vec probe(m);
      for (std::size_t mu = 0; mu < m; ++mu)
        probe[mu] = std::min(1e-3 * k, 0.25 * rho0[mu] / eps);
      all_zero = max_abs(alpha0(probe)) == 0.0;
    }
    if (all_zero) {
      fp.ell0 = zero;
      fp.degenerate_zero = true;
      fp.spec.ell_star = zero;
      fp.spec.sigma = zero;
      fp.spec.A_bound = Mat(m);
      return fp;
    }
  }

  FixedPointSpec spec;
  Vec lo(m), hi(m);
  if (spec_in) {
    spec = *spec_in;
    if (spec.ell_star.size() != m || spec.sigma.size() != m || spec.A_bound.dim() != m)
      throw std::invalid_argument("find_fixed_point: spec dimensions do not match the bundle");
    for (std::size_t mu = 0; mu < m; ++mu) {
      lo[mu] = spec.ell_star[mu] - spec.sigma[mu];
      hi[mu] = spec.ell_star[mu] + spec.sigma[mu];
    }
  } else {
    spec.ell_star = ell_star_probe;
    spec.sigma.resize(m);
    for (std::size_t mu = 0; mu < m; ++mu) {
      spec.sigma[mu] = std::max(spec.ell_star[mu], 1e-3);
      lo[mu] = spec.ell_star[mu] - spec.sigma[mu];
      hi[mu] = spec.ell_star[mu] + spec.sigma[mu];
      // keep the box strictly inside (0, rho/eps): the recipe above puts the
      // lower edge at or below zero
      const double floor =
          spec.ell_star[mu] > 0.0 ? std::min(1e-9, 0.5 * spec.ell_star[mu]) : 0.0;
      lo[mu] = std::max(lo[mu], floor);
      spec.ell_star[mu] = 0.5 * (lo[mu] + hi[mu]);
      spec.sigma[mu] = 0.5 * (hi[mu] - lo[mu]);
    }
    // derivative bound: entrywise max over a 5-point-per-axis grid, with a
    // 10% safety factor
    spec.A_bound = Mat(m);
    std::vector<std::size_t> idx(m, 0);
    Vec ell(m);
    for (;;) {
      for (std::size_t mu = 0; mu < m; ++mu)
        ell[mu] = lo[mu] + (hi[mu] - lo[mu]) * static_cast<double>(idx[mu]) / 4.0;
      Vec r(m);
      for (std::size_t mu = 0; mu < m; ++mu) r[mu] = eps * ell[mu];
      for (std::size_t mu = 0; mu < m; ++mu)
        for (std::size_t nu = 0; nu < m; ++nu)
          spec.A_bound(mu, nu) =
              std::max(spec.A_bound(mu, nu), std::fabs(dalpha_dr(bundle, eps, mu, nu, 0.0, r)));
      std::size_t carry = 0;
      while (carry < m && ++idx[carry] == 5) idx[carry++] = 0;
      if (carry == m) break;
    }
    for (auto& v : spec.A_bound.data()) v *= 1.1;
  }

  // hypothesis checks, in the order they are stated
  for (std::size_t mu = 0; mu < m; ++mu) {
    if (!(lo[mu] > 0.0))
      throw HypothesisViolation("box_in_domain",
                                "search box lower edge " + fmt(lo[mu]) +
                                    " is not strictly positive (component " + bundle.labels[mu] +
                                    ")");
    if (!(hi[mu] < rho0[mu] / eps))
      throw HypothesisViolation("box_in_domain",
                                "search box upper edge " + fmt(hi[mu]) + " reaches rho(0)/eps = " +
                                    fmt(rho0[mu] / eps) + " (component " + bundle.labels[mu] +
                                    ")");
  }
  double rate = 0.0;
  for (std::size_t mu = 0; mu < m; ++mu) {
    double row = 0.0;
    for (std::size_t nu = 0; nu < m; ++nu) row += spec.A_bound(mu, nu);
    rate = std::max(rate, row);
  }
  fp.contraction_rate = eps * rate;
  if (!(fp.contraction_rate < 1.0))
    throw HypothesisViolation("contraction_rate",
                              "eps * A = " + fmt(fp.contraction_rate) + " is not below 1");
  {
    // derivative bound must dominate |dalpha/dr| over the box (grid sample)
    std::vector<std::size_t> idx(m, 0);
    Vec ell(m), r(m);
    for (;;) {
      for (std::size_t mu = 0; mu < m; ++mu) {
        ell[mu] = lo[mu] + (hi[mu] - lo[mu]) * static_cast<double>(idx[mu]) / 4.0;
        r[mu] = eps * ell[mu];
      }
      for (std::size_t mu = 0; mu < m; ++mu)
        for (std::size_t nu = 0; nu < m; ++nu) {
          const double der = std::fabs(dalpha_dr(bundle, eps, mu, nu, 0.0, r));
          if (der > spec.A_bound(mu, nu) * (1.0 + 1e-9) + 1e-15)
            throw HypothesisViolation(
                "derivative_bound", "|dalpha/dr| = " + fmt(der) + " exceeds the bound " +
                                        fmt(spec.A_bound(mu, nu)) + " on the box");
        }
      std::size_t carry = 0;
      while (carry < m && ++idx[carry] == 5) idx[carry++] = 0;
      if (carry == m) break;
    }
  }
  {
    const Vec at_center = alpha0(spec.ell_star);
    for (std::size_t mu = 0; mu < m; ++mu) {
      double lhs = std::fabs(at_center[mu] - spec.ell_star[mu]);
      for (std::size_t nu = 0; nu < m; ++nu) lhs += eps * spec.A_bound(mu, nu) * spec.sigma[nu];
      if (!(lhs < spec.sigma[mu]))
        throw HypothesisViolation("invariance_margin",
                                  "|alpha(0, eps ell*) - ell*| + eps A sigma = " + fmt(lhs) +
                                      " is not below sigma = " + fmt(spec.sigma[mu]) +
                                      " (component " + bundle.labels[mu] + ")");
    }
  }

  // contraction iteration from the box center
  Vec l = spec.ell_star;
  double first_gap = 0.0;
  int it = 0;
  for (; it < spec.max_iter; ++it) {
    const Vec next = alpha0(l);
    const double gap = max_abs_diff(next, l);
    if (it == 0) first_gap = gap;
    l = next;
    if (gap <= spec.tol) break;
  }
  if (it == spec.max_iter)
    throw std::runtime_error("find_fixed_point: iteration did not converge within " +
                             std::to_string(spec.max_iter) + " steps");

  fp.ell0 = l;
  fp.iterations = it + 1;
  fp.residual = max_abs_diff(alpha0(l), l);
  const double q = fp.contraction_rate;
  fp.iterate_error_bound =
      q < 1.0 ? std::pow(q, std::max(0, fp.iterations - 1)) * first_gap / (1.0 - q) : first_gap;
  fp.spec = spec;
  return fp;
}

Vec BoundResult::n_at(double tau) const {
  const State y = mn.eval(tau);
  return Vec(y.begin() + static_cast<std::ptrdiff_t>(count), y.end());
}

Vec BoundResult::m_at(double tau) const {
  const State y = mn.eval(tau);
  return Vec(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(count));
}

IntegrationStall::IntegrationStall(const std::string& msg, BoundResult partial_result)
    : std::runtime_error(msg), partial(std::move(partial_result)) {}

BoundResult integrate_mn(const EstimatorBundle& bundle, double eps, const FixedPoint& fp,
                         const AveragedFlow& flow, const IntegratorConfig& cfg) {
  check_bundle_shape(bundle);
  const std::size_t m = bundle.count;
  if (fp.ell0.size() != m) throw std::invalid_argument("integrate_mn: ell0 size mismatch");
  const double U = flow.horizon;
  if (!(U > 0.0)) throw std::invalid_argument("integrate_mn: empty horizon");

  Rhs rhs = [&bundle, eps, m](double tau, const State& y, State& dy) {
    Vec n(m), r(m);
    for (std::size_t mu = 0; mu < m; ++mu) {
      n[mu] = y[m + mu];
      r[mu] = eps * n[mu];
    }
    Vec Pg(m, 0.0);
    for (std::size_t ka = 0; ka < m; ++ka) {
      const double g = gamma_raw(bundle, ka, tau, r, n);
      for (std::size_t mu = 0; mu < m; ++mu) Pg[mu] += bundle.P_hat(mu, ka, tau) * g;
    }
    for (std::size_t mu = 0; mu < m; ++mu) dy[mu] = Pg[mu];

    Vec rhsn(m);
    for (std::size_t la = 0; la < m; ++la) {
      double acc = dalpha_dtau(bundle, eps, la, tau, r);
      for (std::size_t nu = 0; nu < m; ++nu) {
        acc += eps * bundle.R_hat(la, nu, tau) * Pg[nu];
        acc += eps * dRhat_dtau(bundle, la, nu, tau) * y[nu];
      }
      rhsn[la] = acc;
    }
    Mat M = Mat::identity(m);
    const Mat D = dalpha_dr_mat(bundle, eps, tau, r);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) M(i, j) -= eps * D(i, j);
    const Vec dn = solve(std::move(M), std::move(rhsn));
    for (std::size_t mu = 0; mu < m; ++mu) dy[m + mu] = dn[mu];
  };

  std::vector<bool> relax(m);
  for (std::size_t mu = 0; mu < m; ++mu) relax[mu] = fp.ell0[mu] == 0.0;

  Guard guard = [&bundle, eps, m, &relax](double tau, const State& y) {
    for (std::size_t mu = 0; mu < m; ++mu) {
      const double n = y[m + mu];
      if (relax[mu] ? n < 0.0 : !(n > 0.0)) return false;
      const double rho = bundle.rho(mu, tau);
      if (std::isfinite(rho) && !(eps * n < rho)) return false;
    }
    Vec r(m);
    for (std::size_t mu = 0; mu < m; ++mu) r[mu] = eps * y[m + mu];
    Mat M = Mat::identity(m);
    const Mat D = dalpha_dr_mat(bundle, eps, tau, r);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) M(i, j) -= eps * D(i, j);
    return det(M) > 1e-12;
  };
  GuardLabel label = [&bundle, eps, m, &relax](double tau, const State& y) {
    for (std::size_t mu = 0; mu < m; ++mu) {
      const double n = y[m + mu];
      if (relax[mu] ? n < 0.0 : !(n > 0.0)) return "n_positive[" + bundle.labels[mu] + "]";
      const double rho = bundle.rho(mu, tau);
      if (std::isfinite(rho) && !(eps * n < rho))
        return "n_below_rho_over_eps[" + bundle.labels[mu] + "]";
    }
    return std::string("det_floor");
  };

  State y0(2 * m, 0.0);
  for (std::size_t mu = 0; mu < m; ++mu) y0[m + mu] = fp.ell0[mu];

  Trajectory tr = integrate(rhs, std::move(y0), 0.0, U, cfg, guard, label);

  BoundResult res;
  res.count = m;
  res.labels = bundle.labels;
  res.eps = eps;
  res.ell0 = fp.ell0;
  res.iterations = fp.iterations;
  res.contraction_rate = fp.contraction_rate;
  res.fixed_point_residual = fp.residual;
  res.iterate_error_bound = fp.iterate_error_bound;
  res.degenerate_zero = fp.degenerate_zero;
  res.requested_horizon = U;

  switch (tr.status) {
    case TrajectoryStatus::completed:
      res.status = BoundResult::Status::full_horizon;
      res.U_eff = U;
      res.mn = std::move(tr);
      break;
    case TrajectoryStatus::domain_violation:
      res.status = BoundResult::Status::domain_violation;
      res.U_eff = tr.violation_time;
      res.violated_condition = tr.violation_condition;
      res.mn = std::move(tr);
      break;
    case TrajectoryStatus::step_limit:
    case TrajectoryStatus::step_underflow: {
      const double reached = tr.back_time();
      res.status = BoundResult::Status::domain_violation;
      res.U_eff = reached;
      res.violated_condition = "integration_stalled";
      res.mn = std::move(tr);
      throw IntegrationStall(
          "integrate_mn: integration stalled at tau = " + fmt(reached), std::move(res));
    }
  }
  return res;
}

BoundResult run_n_operation(const EstimatorBundle& bundle, double eps, const AveragedFlow& flow,
                            const IntegratorConfig& cfg,
                            const std::optional<FixedPointSpec>& spec) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  const FixedPoint fp = find_fixed_point(bundle, eps, spec);
  try {
    BoundResult res = integrate_mn(bundle, eps, fp, flow, cfg);
    res.wall_time_seconds = elapsed();
    return res;
  } catch (IntegrationStall& e) {
    e.partial.wall_time_seconds = elapsed();
    throw;
  }
}

AuditReport audit_integral_inequality(const EstimatorBundle& bundle, double eps,
                                      const BoundResult& result, std::size_t n_nodes,
                                      double tol) {
  check_bundle_shape(bundle);
  if (n_nodes < 2) throw std::invalid_argument("audit: need at least 2 nodes");
  const std::size_t m = bundle.count;
  const double T = result.mn.back_time();
  const double h = T / (2.0 * static_cast<double>(n_nodes));

  AuditReport rep;
  rep.tol = tol;
  rep.taus.reserve(n_nodes + 1);
  rep.margins.reserve(n_nodes + 1);
  rep.min_margin = std::numeric_limits<double>::infinity();

  // integrand P_hat gamma on the fine grid; cumulative Simpson over pairs
  std::vector<Vec> F(2 * n_nodes + 1, Vec(m, 0.0));
  State y;
  Vec n(m), r(m);
  for (std::size_t k = 0; k <= 2 * n_nodes; ++k) {
    const double tau = h * static_cast<double>(k);
    result.mn.eval_into(tau, y);
    for (std::size_t mu = 0; mu < m; ++mu) {
      n[mu] = y[m + mu];
      r[mu] = eps * n[mu];
    }
    for (std::size_t ka = 0; ka < m; ++ka) {
      const double g = gamma_raw(bundle, ka, tau, r, n);
      for (std::size_t mu = 0; mu < m; ++mu) F[k][mu] += bundle.P_hat(mu, ka, tau) * g;
    }
  }

  Vec integral(m, 0.0);
  for (std::size_t k = 0; k <= 2 * n_nodes; k += 2) {
    const double tau = h * static_cast<double>(k);
    if (k > 0)
      for (std::size_t mu = 0; mu < m; ++mu)
        integral[mu] += (h / 3.0) * (F[k - 2][mu] + 4.0 * F[k - 1][mu] + F[k][mu]);

    result.mn.eval_into(tau, y);
    for (std::size_t mu = 0; mu < m; ++mu) {
      n[mu] = y[m + mu];
      r[mu] = eps * n[mu];
    }
    Vec margin(m);
    for (std::size_t mu = 0; mu < m; ++mu) {
      double rhs = alpha_raw(bundle, eps, mu, tau, r);
      for (std::size_t la = 0; la < m; ++la)
        rhs += eps * bundle.R_hat(mu, la, tau) * integral[la];
      margin[mu] = n[mu] - rhs;
      rep.min_margin = std::min(rep.min_margin, margin[mu]);
      if (margin[mu] < -tol) ++rep.flagged;
      const double rho = bundle.rho(mu, tau);
      if (std::isfinite(rho) && !(eps * n[mu] < rho)) rep.rho_ok = false;
    }
    rep.taus.push_back(tau);
    rep.margins.push_back(std::move(margin));
  }
  return rep;
}

BundleValidityReport check_bundle_validity(const SystemModel& sys, const AveragedFlow& flow,
                                           const EstimatorBundle& bundle,
                                           const SeminormFamily& fam, std::size_t trials,
                                           std::uint64_t seed, double safety) {
  check_bundle_shape(bundle);
  if (fam.count != bundle.count)
    throw std::invalid_argument("check_bundle_validity: family/bundle size mismatch");
  const std::size_t d = sys.dim;
  const std::size_t m = bundle.count;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  constexpr double kTol = 1e-9;

  BundleValidityReport rep;
  rep.trials = trials;
  const Vec s0 = sys.s(sys.initial_action, sys.theta0);

  auto record = [&rep](const char* which, double tau, double lhs, double rhs) {
    if (lhs > rhs * (1.0 + kTol) + 1e-12)
      rep.violations.push_back({which, tau, lhs, rhs});
    if (rhs > 0.0) rep.max_slack = std::max(rep.max_slack, lhs / rhs);
  };

  for (std::size_t trial = 0; trial < trials; ++trial) {
    const double tau = u01(rng) * flow.horizon * (1.0 - 1e-9);
    const Vec J = flow.J(tau);
    const Mat R = flow.R(tau);
    const Mat Rinv = flow.R_inv(tau);
    const Vec K = flow.K(tau);
    const double th = 2.0 * std::numbers::pi * u01(rng);

    // draw dJ inside the scaled tube: random direction, then shrink so every
    // family member sits below safety * rho
    Vec dJ(d);
    for (auto& v : dJ) v = sym(rng);
    double shrink = std::numeric_limits<double>::infinity();
    for (std::size_t mu = 0; mu < m; ++mu) {
      const double rho = bundle.rho(mu, tau);
      const double cur = fam.vec(mu, dJ);
      if (!std::isfinite(rho)) continue;
      if (cur > 0.0) shrink = std::min(shrink, safety * rho / cur);
    }
    if (!std::isfinite(shrink)) shrink = 1.0;  // unbounded tube
    const double scale = u01(rng) * shrink;
    for (auto& v : dJ) v *= scale;

    Vec r(m);
    for (std::size_t mu = 0; mu < m; ++mu) r[mu] = fam.vec(mu, dJ);
    Vec I(d);
    for (std::size_t i = 0; i < d; ++i) I[i] = J[i] + dJ[i];
    if (!sys.in_domain(I)) {
      rep.violations.push_back({"tube_in_domain", tau, 0.0, 0.0});
      continue;
    }

    const Vec sv = sys.s(I, th);
    const Vec Rs0 = mat_vec(R, s0);
    Vec lhs_a(d);
    for (std::size_t i = 0; i < d; ++i) lhs_a[i] = sv[i] - Rs0[i] - K[i];

    const Mat dfb = sys.df_bar(J);
    const Vec vv = sys.v(I, th);
    const Vec wv = sys.w(I, th);
    const Vec qv = sys.q(I, th);
    const Vec uv = sys.u(I, th);
    const Vec dfb_v = mat_vec(dfb, vv);
    Vec lhs_b(d);
    for (std::size_t i = 0; i < d; ++i) lhs_b[i] = wv[i] - dfb_v[i];

    Vec wq(d);
    for (std::size_t i = 0; i < d; ++i) wq[i] = wv[i] + qv[i];
    const Vec dfb_wq = mat_vec(dfb, wq);
    const Vec Mv = mat_vec(sys.m_fun(J), vv);
    Vec lhs_c(d);
    for (std::size_t i = 0; i < d; ++i) lhs_c[i] = uv[i] - dfb_wq[i] - Mv[i];

    const Mat G = sys.g_fun(J, dJ);
    const Tens3 H = sys.h_fun(J, dJ);

    for (std::size_t mu = 0; mu < m; ++mu) {
      record("a_majorizes_s_remainder", tau, fam.vec(mu, lhs_a), bundle.a(mu, tau, r));
      record("b_majorizes_w_remainder", tau, fam.vec(mu, lhs_b), bundle.b(mu, tau, r));
      record("c_majorizes_u_remainder", tau, fam.vec(mu, lhs_c), bundle.c(mu, tau, r));
      for (std::size_t nu = 0; nu < m; ++nu) {
        record("d_majorizes_secant", tau, fam.mat(mu, nu, G), bundle.d_est(mu, nu, tau, r));
        record("R_hat_majorizes_R", tau, fam.mat(mu, nu, R), bundle.R_hat(mu, nu, tau));
        record("P_hat_majorizes_R_inv", tau, fam.mat(mu, nu, Rinv), bundle.P_hat(mu, nu, tau));
        for (std::size_t ka = 0; ka < m; ++ka)
          record("e_majorizes_taylor", tau, fam.tens(mu, nu, ka, H),
                 bundle.e_est(mu, nu, ka, tau, r));
      }
    }
  }
  return rep;
}

BundleContractReport check_bundle_contract(const EstimatorBundle& bundle, double horizon,
                                           std::size_t trials, std::uint64_t seed) {
  check_bundle_shape(bundle);
  const std::size_t m = bundle.count;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  BundleContractReport rep;
  rep.trials = trials;

  for (std::size_t trial = 0; trial < trials; ++trial) {
    const double tau = u01(rng) * horizon * (1.0 - 1e-9);
    Vec rho(m);
    for (std::size_t mu = 0; mu < m; ++mu) rho[mu] = bundle.rho(mu, tau);
    Vec r1(m), r2(m);
    for (std::size_t mu = 0; mu < m; ++mu) {
      const double hi_mu = 0.9 * (std::isfinite(rho[mu]) ? rho[mu] : 1.0);
      const double x = u01(rng) * hi_mu;
      const double y = u01(rng) * hi_mu;
      r1[mu] = std::min(x, y);
      r2[mu] = std::max(x, y);
    }
    for (std::size_t mu = 0; mu < m; ++mu) {
      if (bundle.c(mu, tau, r1) > bundle.c(mu, tau, r2) * (1.0 + 1e-12) + 1e-15)
        rep.violations.push_back("c not nondecreasing in r at tau=" + fmt(tau));
      for (std::size_t nu = 0; nu < m; ++nu) {
        if (bundle.d_est(mu, nu, tau, r1) > bundle.d_est(mu, nu, tau, r2) * (1.0 + 1e-12) + 1e-15)
          rep.violations.push_back("d_est not nondecreasing in r at tau=" + fmt(tau));
        for (std::size_t ka = 0; ka < m; ++ka)
          if (bundle.e_est(mu, nu, ka, tau, r1) >
              bundle.e_est(mu, nu, ka, tau, r2) * (1.0 + 1e-12) + 1e-15)
            rep.violations.push_back("e_est not nondecreasing in r at tau=" + fmt(tau));
      }
      // smoothness probes: central second differences must stay finite and
      // consistent at two resolutions
      const double h1 = 1e-4, h2 = 5e-5;
      auto probe = [&](const std::function<double(std::size_t, double, const Vec&)>& fn) {
        const double d1 = (fn(mu, tau + h1, r1) - 2.0 * fn(mu, tau, r1) + fn(mu, tau - h1, r1)) /
                          (h1 * h1);
        const double d2 = (fn(mu, tau + h2, r1) - 2.0 * fn(mu, tau, r1) + fn(mu, tau - h2, r1)) /
                          (h2 * h2);
        return std::isfinite(d1) && std::isfinite(d2);
      };
      if (tau > h1 && tau + h1 < horizon) {
        if (!probe(bundle.a)) rep.violations.push_back("a smoothness probe failed");
        if (!probe(bundle.b)) rep.violations.push_back("b smoothness probe failed");
      }
    }
  }
  return rep;
}

EstimatorBundle project_bundle(const EstimatorBundle& comp,
                               const std::vector<std::vector<std::size_t>>& blocks) {
  check_bundle_shape(comp);
  const std::size_t d = comp.count;
  auto zb = std::make_shared<std::vector<std::vector<std::size_t>>>();
  std::vector<bool> seen(d, false);
  for (const auto& blk : blocks) {
    if (blk.empty()) throw std::invalid_argument("project_bundle: empty block");
    std::vector<std::size_t> z;
    for (std::size_t idx : blk) {
      if (idx < 1 || idx > d || seen[idx - 1])
        throw std::invalid_argument("project_bundle: blocks must partition the components");
      seen[idx - 1] = true;
      z.push_back(idx - 1);
    }
    zb->push_back(std::move(z));
  }
  for (bool s : seen)
    if (!s) throw std::invalid_argument("project_bundle: blocks must cover all components");

  const std::size_t mb = zb->size();
  // expand a block-indexed r to component indexing: each component inherits
  // its block value (component deviations are dominated by block norms)
  auto expand = [zb, d](const Vec& r) {
    Vec out(d, 0.0);
    for (std::size_t s = 0; s < zb->size(); ++s)
      for (std::size_t i : (*zb)[s]) out[i] = r[s];
    return out;
  };

  EstimatorBundle out;
  out.count = mb;
  for (const auto& blk : blocks) {
    std::string lab = "{";
    for (std::size_t i = 0; i < blk.size(); ++i) lab += (i ? "," : "") + std::to_string(blk[i]);
    out.labels.push_back(lab + "}");
  }

  const EstimatorBundle base = comp;  // value copy shared by the closures
  out.rho = [base, zb](std::size_t s, double tau) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i : (*zb)[s]) m = std::min(m, base.rho(i, tau));
    return m;
  };
  auto rss_scalar = [base, zb, expand](
                        const std::function<double(std::size_t, double, const Vec&)>& fn) {
    return [base, zb, expand, fn](std::size_t s, double tau, const Vec& r) {
      const Vec rc = expand(r);
      double acc = 0.0;
      for (std::size_t i : (*zb)[s]) {
        const double v = fn(i, tau, rc);
        acc += v * v;
      }
      return std::sqrt(acc);
    };
  };
  out.a = rss_scalar(base.a);
  out.b = rss_scalar(base.b);
  out.c = rss_scalar(base.c);
  out.d_est = [base, zb, expand](std::size_t s, std::size_t t, double tau, const Vec& r) {
    const Vec rc = expand(r);
    double acc = 0.0;
    for (std::size_t i : (*zb)[s])
      for (std::size_t j : (*zb)[t]) {
        const double v = base.d_est(i, j, tau, rc);
        acc += v * v;
      }
    return std::sqrt(acc);
  };
  out.e_est = [base, zb, expand](std::size_t s, std::size_t t, std::size_t u, double tau,
                                 const Vec& r) {
    const Vec rc = expand(r);
    double acc = 0.0;
    for (std::size_t i : (*zb)[s])
      for (std::size_t j : (*zb)[t])
        for (std::size_t k : (*zb)[u]) {
          const double v = base.e_est(i, j, k, tau, rc);
          acc += v * v;
        }
    return std::sqrt(acc);
  };
  out.R_hat = [base, zb](std::size_t s, std::size_t t, double tau) {
    double acc = 0.0;
    for (std::size_t i : (*zb)[s])
      for (std::size_t j : (*zb)[t]) {
        const double v = base.R_hat(i, j, tau);
        acc += v * v;
      }
    return std::sqrt(acc);
  };
  out.P_hat = [base, zb](std::size_t s, std::size_t t, double tau) {
    double acc = 0.0;
    for (std::size_t i : (*zb)[s])
      for (std::size_t j : (*zb)[t]) {
        const double v = base.P_hat(i, j, tau);
        acc += v * v;
      }
    return std::sqrt(acc);
  };

  // chain-rule partials when the component bundle has them; the root of a
  // sum of squares differentiates to the weighted average of the summand
  // derivatives
  if (base.da_dtau && base.db_dtau) {
    auto rss_dtau = [base, zb, expand](
                        const std::function<double(std::size_t, double, const Vec&)>& fn,
                        const std::function<double(std::size_t, double, const Vec&)>& dfn) {
      return [base, zb, expand, fn, dfn](std::size_t s, double tau, const Vec& r) {
        const Vec rc = expand(r);
        double num = 0.0, den = 0.0;
        for (std::size_t i : (*zb)[s]) {
          const double v = fn(i, tau, rc);
          num += v * dfn(i, tau, rc);
          den += v * v;
        }
        const double root = std::sqrt(den);
        return root > 0.0 ? num / root : 0.0;
      };
    };
    out.da_dtau = rss_dtau(base.a, base.da_dtau);
    out.db_dtau = rss_dtau(base.b, base.db_dtau);
  }
  if (base.da_dr && base.db_dr) {
    auto rss_dr = [base, zb, expand](
                      const std::function<double(std::size_t, double, const Vec&)>& fn,
                      const std::function<double(std::size_t, std::size_t, double, const Vec&)>&
                          dfn) {
      return [base, zb, expand, fn, dfn](std::size_t s, std::size_t t, double tau, const Vec& r) {
        const Vec rc = expand(r);
        double num = 0.0, den = 0.0;
        for (std::size_t i : (*zb)[s]) {
          const double v = fn(i, tau, rc);
          double dsum = 0.0;
          for (std::size_t j : (*zb)[t]) dsum += dfn(i, j, tau, rc);
          num += v * dsum;
          den += v * v;
        }
        const double root = std::sqrt(den);
        return root > 0.0 ? num / root : 0.0;
      };
    };
    out.da_dr = rss_dr(base.a, base.da_dr);
    out.db_dr = rss_dr(base.b, base.db_dr);
  }
  if (base.dR_hat_dtau) {
    out.dR_hat_dtau = [base, zb](std::size_t s, std::size_t t, double tau) {
      double num = 0.0, den = 0.0;
      for (std::size_t i : (*zb)[s])
        for (std::size_t j : (*zb)[t]) {
          const double v = base.R_hat(i, j, tau);
          num += v * base.dR_hat_dtau(i, j, tau);
          den += v * v;
        }
      const double root = std::sqrt(den);
      return root > 0.0 ? num / root : 0.0;
    };
  }
  return out;
}

}  // namespace avgbound
