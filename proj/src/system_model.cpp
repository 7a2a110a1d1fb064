#include "avgbound/system_model.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace avgbound {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_in_domain(const SystemModel& sys, const Vec& I, const char* where) {
  if (!sys.in_domain(I)) throw std::domain_error(std::string(where) + ": action outside domain");
}

// central difference in the angle
Vec dtheta(const std::function<Vec(const Vec&, double)>& h, const Vec& I, double th,
           double fd_step) {
  const double d = fd_step * std::max(1.0, std::fabs(th));
  Vec hi = h(I, th + d);
  const Vec lo = h(I, th - d);
  for (std::size_t i = 0; i < hi.size(); ++i) hi[i] = (hi[i] - lo[i]) / (2.0 * d);
  return hi;
}

// central-difference Jacobian in the action, columns indexed by the
// differentiation coordinate
Mat jac_action(const std::function<Vec(const Vec&, double)>& h, const Vec& I, double th,
               double fd_step) {
  const std::size_t d = I.size();
  Mat J(d);
  Vec Ip = I, Im = I;
  for (std::size_t j = 0; j < d; ++j) {
    const double step = fd_step * std::max(1.0, std::fabs(I[j]));
    Ip[j] = I[j] + step;
    Im[j] = I[j] - step;
    const Vec hp = h(Ip, th);
    const Vec hm = h(Im, th);
    for (std::size_t i = 0; i < d; ++i) J(i, j) = (hp[i] - hm[i]) / (2.0 * step);
    Ip[j] = I[j];
    Im[j] = I[j];
  }
  return J;
}

Mat jac_action_plain(const std::function<Vec(const Vec&)>& h, const Vec& I, double fd_step) {
  const std::size_t d = I.size();
  Mat J(d);
  Vec Ip = I, Im = I;
  for (std::size_t j = 0; j < d; ++j) {
    const double step = fd_step * std::max(1.0, std::fabs(I[j]));
    Ip[j] = I[j] + step;
    Im[j] = I[j] - step;
    const Vec hp = h(Ip);
    const Vec hm = h(Im);
    for (std::size_t i = 0; i < d; ++i) J(i, j) = (hp[i] - hm[i]) / (2.0 * step);
    Ip[j] = I[j];
    Im[j] = I[j];
  }
  return J;
}

double rel_residual(const Vec& lhs, const Vec& rhs) {
  double worst = 0.0;
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    const double den = std::max({1.0, std::fabs(lhs[i]), std::fabs(rhs[i])});
    worst = std::max(worst, std::fabs(lhs[i] - rhs[i]) / den);
  }
  return worst;
}

double rel_residual(const Mat& lhs, const Mat& rhs) {
  double worst = 0.0;
  for (std::size_t k = 0; k < lhs.data().size(); ++k) {
    const double a = lhs.data()[k], b = rhs.data()[k];
    worst = std::max(worst, std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)}));
  }
  return worst;
}

void segment_in_domain(const SystemModel& sys, const Vec& I, const Vec& dI, const char* where) {
  const std::size_t d = I.size();
  Vec pt(d);
  for (int k = 0; k <= 64; ++k) {
    const double x = static_cast<double>(k) / 64.0;
    for (std::size_t i = 0; i < d; ++i) pt[i] = I[i] + x * dI[i];
    if (!sys.in_domain(pt))
      throw std::domain_error(std::string(where) + ": segment leaves the domain");
  }
}

}  // namespace

void gauss_legendre_01(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n == 0) throw std::invalid_argument("gauss_legendre_01: order must be positive");
  nodes.resize(n);
  weights.resize(n);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t k = 0; k < half; ++k) {
    // Newton from the Chebyshev-like initial guess
    double x = std::cos(std::numbers::pi * (static_cast<double>(k) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (std::size_t j = 2; j <= n; ++j) {
        const double pj =
            ((2.0 * static_cast<double>(j) - 1.0) * x * p1 - (static_cast<double>(j) - 1.0) * p0) /
            static_cast<double>(j);
        p0 = p1;
        p1 = pj;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    // recompute value/derivative at the converged node for the weight
    double p0 = 1.0, p1 = x;
    for (std::size_t j = 2; j <= n; ++j) {
      const double pj =
          ((2.0 * static_cast<double>(j) - 1.0) * x * p1 - (static_cast<double>(j) - 1.0) * p0) /
          static_cast<double>(j);
      p0 = p1;
      p1 = pj;
    }
    dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[k] = 0.5 * (1.0 - x);  // descending x maps to ascending node
    nodes[n - 1 - k] = 0.5 * (1.0 + x);
    weights[k] = 0.5 * w;
    weights[n - 1 - k] = 0.5 * w;
  }
}

Vec average_over_angle(const SystemModel& sys, const std::function<Vec(const Vec&, double)>& h,
                       const Vec& I, std::size_t n_nodes) {
  if (n_nodes < 8) throw std::invalid_argument("average_over_angle: need at least 8 nodes");
  require_in_domain(sys, I, "average_over_angle");
  Vec acc(sys.dim, 0.0);
  for (std::size_t k = 0; k < n_nodes; ++k) {
    const Vec hv = h(I, kTwoPi * static_cast<double>(k) / static_cast<double>(n_nodes));
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += hv[i];
  }
  for (auto& v : acc) v /= static_cast<double>(n_nodes);
  return acc;
}

Mat taylor_secant(const SystemModel& sys, const Vec& I, const Vec& dI, std::size_t quad_order) {
  segment_in_domain(sys, I, dI, "taylor_secant");
  std::vector<double> xs, ws;
  gauss_legendre_01(quad_order, xs, ws);
  const std::size_t d = sys.dim;
  Mat G(d);
  Vec pt(d);
  for (std::size_t q = 0; q < xs.size(); ++q) {
    for (std::size_t i = 0; i < d; ++i) pt[i] = I[i] + xs[q] * dI[i];
    const Mat J = jac_action_plain(sys.p_bar, pt, 1e-6);
    for (std::size_t k = 0; k < G.data().size(); ++k) G.data()[k] += ws[q] * J.data()[k];
  }
  return G;
}

Tens3 taylor_remainder(const SystemModel& sys, const Vec& I, const Vec& dI,
                       std::size_t quad_order) {
  segment_in_domain(sys, I, dI, "taylor_remainder");
  std::vector<double> xs, ws;
  gauss_legendre_01(quad_order, xs, ws);
  const std::size_t d = sys.dim;
  Tens3 H(d);
  Vec pt(d);
  for (std::size_t q = 0; q < xs.size(); ++q) {
    for (std::size_t i = 0; i < d; ++i) pt[i] = I[i] + xs[q] * dI[i];
    const Tens3 D2 = sys.d2f_bar(pt);
    const double c = 2.0 * ws[q] * (1.0 - xs[q]);
    for (std::size_t k = 0; k < H.data().size(); ++k) H.data()[k] += c * D2.data()[k];
  }
  // the remainder is symmetric in the two lower slots by construction
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = j + 1; k < d; ++k) {
        const double m = 0.5 * (H(i, j, k) + H(i, k, j));
        H(i, j, k) = m;
        H(i, k, j) = m;
      }
  return H;
}

double IdentityReport::worst() const {
  double w = 0.0;
  for (const auto& e : entries) w = std::max(w, e.max_rel_residual);
  return w;
}

const IdentityResidual& IdentityReport::by_key(const std::string& key) const {
  for (const auto& e : entries)
    if (e.key == key) return e;
  throw std::out_of_range("IdentityReport: no entry " + key);
}

IdentityReport check_identities(const SystemModel& sys, std::size_t samples, std::uint64_t seed,
                                double fd_step) {
  if (sys.dim == 0) throw std::invalid_argument("check_identities: model has no dimension");
  if (sys.sample_lo.size() != sys.dim || sys.sample_hi.size() != sys.dim)
    throw std::invalid_argument("check_identities: sample box not set");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const std::size_t d = sys.dim;

  auto draw_action = [&] {
    Vec I(d);
    for (std::size_t attempt = 0; attempt < 100; ++attempt) {
      for (std::size_t i = 0; i < d; ++i)
        I[i] = sys.sample_lo[i] + u01(rng) * (sys.sample_hi[i] - sys.sample_lo[i]);
      if (sys.in_domain(I)) return I;
    }
    throw std::domain_error("check_identities: could not sample the domain");
  };

  IdentityReport rep;
  rep.entries = {
      {"a", "f_decomposition", 0.0, {}, 0.0},   {"b", "s_zero_mean", 0.0, {}, 0.0},
      {"c", "v_primitive_of_s", 0.0, {}, 0.0},  {"d", "p_chain_rule", 0.0, {}, 0.0},
      {"e", "w_primitive_of_p", 0.0, {}, 0.0},  {"f", "q_u_definitions", 0.0, {}, 0.0},
      {"g", "m_matrix_formula", 0.0, {}, 0.0},  {"h", "p_bar_secant", 0.0, {}, 0.0},
      {"i", "f_bar_taylor", 0.0, {}, 0.0},
  };
  auto note = [&](std::size_t idx, double res, const Vec& I, double th) {
    auto& e = rep.entries[idx];
    if (res > e.max_rel_residual) {
      e.max_rel_residual = res;
      e.worst_action = I;
      e.worst_angle = th;
    }
  };

  for (std::size_t n = 0; n < samples; ++n) {
    const Vec I = draw_action();
    const double th = kTwoPi * u01(rng);

    const Vec fv = sys.f(I, th);
    const double gv = sys.g(I, th);
    const double om = sys.omega(I);
    const Vec fb = sys.f_bar(I);
    const Vec pb = sys.p_bar(I);

    {  // (a) f = f_bar + omega ds/dtheta
      const Vec dsth = dtheta(sys.s, I, th, fd_step);
      Vec rhs(d);
      for (std::size_t i = 0; i < d; ++i) rhs[i] = fb[i] + om * dsth[i];
      note(0, rel_residual(fv, rhs), I, th);
    }
    {  // (b) angular mean of s vanishes
      Vec mean(d, 0.0);
      double scale = 1.0;
      for (std::size_t k = 0; k < 256; ++k) {
        const Vec sv = sys.s(I, kTwoPi * static_cast<double>(k) / 256.0);
        for (std::size_t i = 0; i < d; ++i) {
          mean[i] += sv[i];
          scale = std::max(scale, std::fabs(sv[i]));
        }
      }
      double res = 0.0;
      for (std::size_t i = 0; i < d; ++i) res = std::max(res, std::fabs(mean[i] / 256.0) / scale);
      note(1, res, I, th);
    }
    {  // (c) s = omega dv/dtheta, v vanishes at the anchor angle
      const Vec sv = sys.s(I, th);
      const Vec dvth = dtheta(sys.v, I, th, fd_step);
      Vec rhs(d);
      for (std::size_t i = 0; i < d; ++i) rhs[i] = om * dvth[i];
      double res = rel_residual(sv, rhs);
      const Vec v0 = sys.v(I, sys.theta0);
      for (double c : v0) res = std::max(res, std::fabs(c));
      note(2, res, I, th);
    }
    const Vec pv = sys.p(I, th);
    {  // (d) p from the s transport
      const Mat dsI = jac_action(sys.s, I, th, fd_step);
      const Vec dsth = dtheta(sys.s, I, th, fd_step);
      Vec rhs = mat_vec(dsI, fv);
      for (std::size_t i = 0; i < d; ++i) rhs[i] += dsth[i] * gv;
      note(3, rel_residual(pv, rhs), I, th);
    }
    {  // (e) p = p_bar + omega dw/dtheta, w anchored, p_bar the mean of p
      const Vec dwth = dtheta(sys.w, I, th, fd_step);
      Vec rhs(d);
      for (std::size_t i = 0; i < d; ++i) rhs[i] = pb[i] + om * dwth[i];
      double res = rel_residual(pv, rhs);
      const Vec w0 = sys.w(I, sys.theta0);
      for (double c : w0) res = std::max(res, std::fabs(c));
      const Vec pmean = average_over_angle(sys, sys.p, I, 256);
      res = std::max(res, rel_residual(pmean, pb));
      note(4, res, I, th);
    }
    {  // (f) q and u from the v and w transports
      const Mat dvI = jac_action(sys.v, I, th, fd_step);
      const Vec dvth = dtheta(sys.v, I, th, fd_step);
      Vec rhs_q = mat_vec(dvI, fv);
      for (std::size_t i = 0; i < d; ++i) rhs_q[i] += dvth[i] * gv;
      double res = rel_residual(sys.q(I, th), rhs_q);

      const Mat dwI = jac_action(sys.w, I, th, fd_step);
      const Vec dwth = dtheta(sys.w, I, th, fd_step);
      Vec rhs_u = mat_vec(dwI, fv);
      for (std::size_t i = 0; i < d; ++i) rhs_u[i] += dwth[i] * gv;
      res = std::max(res, rel_residual(sys.u(I, th), rhs_u));
      note(5, res, I, th);
    }
    {  // (g) m_fun against its definition
      const Mat dfb = sys.df_bar(I);
      const Mat rhs = mat_sub(contract_first(sys.d2f_bar(I), fb), mat_mul(dfb, dfb));
      note(6, rel_residual(sys.m_fun(I), rhs), I, th);
    }
    {  // (h),(i) displacement identities; shrink dI until the segment fits
      Vec target(d), dI(d);
      bool ok = false;
      for (std::size_t attempt = 0; attempt < 100 && !ok; ++attempt) {
        for (std::size_t i = 0; i < d; ++i)
          target[i] = sys.sample_lo[i] + u01(rng) * (sys.sample_hi[i] - sys.sample_lo[i]);
        for (std::size_t i = 0; i < d; ++i) dI[i] = 0.5 * (target[i] - I[i]);
        ok = true;
        Vec pt(d);
        for (int k = 0; k <= 64 && ok; ++k) {
          for (std::size_t i = 0; i < d; ++i)
            pt[i] = I[i] + (static_cast<double>(k) / 64.0) * dI[i];
          ok = sys.in_domain(pt);
        }
      }
      if (!ok) throw std::domain_error("check_identities: could not sample a displacement");
      Vec Ishift(d);
      for (std::size_t i = 0; i < d; ++i) Ishift[i] = I[i] + dI[i];

      const Vec pb_shift = sys.p_bar(Ishift);
      Vec rhs = mat_vec(sys.g_fun(I, dI), dI);
      for (std::size_t i = 0; i < d; ++i) rhs[i] += pb[i];
      note(7, rel_residual(pb_shift, rhs), I, th);

      const Vec fb_shift = sys.f_bar(Ishift);
      const Tens3 H = sys.h_fun(I, dI);
      Vec rhs2 = mat_vec(sys.df_bar(I), dI);
      const Vec quad = contract_both(H, dI, dI);
      for (std::size_t i = 0; i < d; ++i) rhs2[i] += fb[i] + 0.5 * quad[i];
      double res = rel_residual(fb_shift, rhs2);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
          for (std::size_t k = j + 1; k < d; ++k)
            res = std::max(res, std::fabs(H(i, j, k) - H(i, k, j)) /
                                    std::max(1.0, std::fabs(H(i, j, k))));
      note(8, res, I, th);
    }
  }
  return rep;
}

}  // namespace avgbound
