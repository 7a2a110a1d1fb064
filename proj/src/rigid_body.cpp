#include "avgbound/rigid_body.hpp"

#include <cmath>
#include <stdexcept>

namespace avgbound {
namespace rigid_body {

void validate(const Params& p) {
  if (!std::isfinite(p.mu) || !std::isfinite(p.lambda1) || !std::isfinite(p.lambda2))
    throw std::invalid_argument("rigid_body: non-finite parameter");
  if (!(p.lambda1 > 0.0)) throw std::invalid_argument("rigid_body: requires lambda1 > 0");
  if (!(std::fabs(p.mu) < p.lambda1))
    throw std::invalid_argument("rigid_body: requires |mu| < lambda1");
  if (!(p.lambda2 > -p.lambda1))
    throw std::invalid_argument("rigid_body: requires lambda2 > -lambda1");
  if (!(p.initial_action[0] > 0.0) || !(p.initial_action[1] > 0.0) ||
      !std::isfinite(p.initial_action[0]) || !std::isfinite(p.initial_action[1]))
    throw std::invalid_argument("rigid_body: initial actions must be positive");
  if (!(p.epsilon > 0.0)) throw std::invalid_argument("rigid_body: requires epsilon > 0");
  if (!(p.horizon > 0.0)) throw std::invalid_argument("rigid_body: requires a positive horizon");
}

SystemModel build_system(const Params& p) {
  validate(p);
  const double mu = p.mu, l1 = p.lambda1, l2 = p.lambda2;

  SystemModel sys;
  sys.dim = 2;
  sys.theta0 = 0.0;
  sys.initial_action = {p.initial_action[0], p.initial_action[1]};
  sys.epsilon = p.epsilon;
  sys.sample_lo = {0.5, 0.5};
  sys.sample_hi = {10.0, 10.0};

  sys.in_domain = [](const Vec& I) { return I[0] > 0.0 && I[1] > 0.0; };
  sys.omega = [](const Vec& I) { return I[0] * I[1]; };
  sys.f = [mu, l1, l2](const Vec& I, double th) {
    const double c2 = std::cos(2.0 * th);
    return Vec{-I[0] * (l1 + mu * c2), -I[1] * (l2 - mu * c2)};
  };
  sys.g = [mu](const Vec&, double th) { return mu * std::sin(2.0 * th); };

  sys.f_bar = [l1, l2](const Vec& I) { return Vec{-l1 * I[0], -l2 * I[1]}; };
  sys.df_bar = [l1, l2](const Vec&) {
    return Mat::from_rows(2, {-l1, 0.0, 0.0, -l2});
  };
  sys.d2f_bar = [](const Vec&) { return Tens3(2); };

  sys.s = [mu](const Vec& I, double th) {
    const double h = 0.5 * mu * std::sin(2.0 * th);
    return Vec{-h / I[1], h / I[0]};
  };
  sys.v = [mu](const Vec& I, double th) {
    const double sn = std::sin(th);
    const double h = 0.5 * mu * sn * sn / (I[0] * I[1]);
    return Vec{-h / I[1], h / I[0]};
  };
  sys.p = [mu, l1, l2](const Vec& I, double th) {
    const double c2 = std::cos(2.0 * th);
    const double h = 0.5 * mu * std::sin(2.0 * th);
    return Vec{-h * (l2 + mu * c2) / I[1], h * (l1 + 3.0 * mu * c2) / I[0]};
  };
  sys.p_bar = [](const Vec&) { return Vec{0.0, 0.0}; };
  sys.q = [mu, l1, l2](const Vec& I, double th) {
    const double sn = std::sin(th);
    const double c2 = std::cos(2.0 * th);
    const double h = 0.5 * mu * sn * sn / (I[0] * I[1]);
    return Vec{-h * (2.0 * l2 + 2.0 * mu + l1 + mu * c2) / I[1],
               h * (l2 + 2.0 * mu + 2.0 * l1 + 3.0 * mu * c2) / I[0]};
  };
  sys.w = [mu, l1, l2](const Vec& I, double th) {
    const double sn = std::sin(th);
    const double cs = std::cos(th);
    const double h = 0.5 * mu * sn * sn / (I[0] * I[1]);
    return Vec{-h * (l2 + mu * cs * cs) / I[1], h * (l1 + 3.0 * mu * cs * cs) / I[0]};
  };
  sys.u = [mu, l1, l2](const Vec& I, double th) {
    const double sn = std::sin(th);
    const double c2 = std::cos(2.0 * th);
    const double h = 0.25 * mu * sn * sn / (I[0] * I[1]);
    const double top1 = 4.0 * l2 * l2 + 6.0 * l2 * mu + 2.0 * l2 * l1 + mu * l1 +
                        mu * (4.0 * l2 + 3.0 * mu + l1) * c2 + 3.0 * mu * mu * c2 * c2;
    const double top2 = 3.0 * l2 * mu + 2.0 * l2 * l1 + 10.0 * mu * l1 + 4.0 * l1 * l1 +
                        3.0 * mu * (l2 + 5.0 * mu + 4.0 * l1) * c2 + 15.0 * mu * mu * c2 * c2;
    return Vec{-h * top1 / I[1], h * top2 / I[0]};
  };
  sys.m_fun = [l1, l2](const Vec&) {
    return Mat::from_rows(2, {-l1 * l1, 0.0, 0.0, -l2 * l2});
  };
  // p_bar vanishes and f_bar is linear, so both displacement remainders are 0
  sys.g_fun = [](const Vec&, const Vec&) { return Mat(2); };
  sys.h_fun = [](const Vec&, const Vec&) { return Tens3(2); };
  return sys;
}

AveragedFlow closed_form_flow(const Params& p) {
  validate(p);
  const double l1 = p.lambda1, l2 = p.lambda2;
  const double I01 = p.initial_action[0], I02 = p.initial_action[1];
  return make_closed_form_flow(
      2, p.horizon,
      [I01, I02, l1, l2](double tau) {
        return Vec{I01 * std::exp(-l1 * tau), I02 * std::exp(-l2 * tau)};
      },
      [l1, l2](double tau) {
        return Mat::from_rows(2, {std::exp(-l1 * tau), 0.0, 0.0, std::exp(-l2 * tau)});
      },
      [l1, l2](double tau) {
        return Mat::from_rows(2, {std::exp(l1 * tau), 0.0, 0.0, std::exp(l2 * tau)});
      },
      [](double) { return Vec{0.0, 0.0}; });
}

EstimatorBundle build_bundle(const Params& p) {
  validate(p);
  const double am = std::fabs(p.mu);
  const double l1 = p.lambda1, l2 = p.lambda2;
  const double I01 = p.initial_action[0], I02 = p.initial_action[1];
  const double B1 = am * (4.0 * l1 + 4.0 * l2 + am) / 8.0;
  const double B2 = am * (4.0 * l1 + 4.0 * l2 + 3.0 * am) / 8.0;
  const double lsum = l1 + l2;
  const double C1 = am * (16.0 * lsum * lsum + 16.0 * am * lsum + 3.0 * am * am) / 16.0;
  const double C2 = am * (16.0 * lsum * lsum + 16.0 * am * lsum + 15.0 * am * am) / 16.0;

  auto J1 = [I01, l1](double tau) { return I01 * std::exp(-l1 * tau); };
  auto J2 = [I02, l2](double tau) { return I02 * std::exp(-l2 * tau); };

  EstimatorBundle b;
  b.count = 2;
  b.labels = {"1", "2"};
  b.rho = [J1, J2](std::size_t mu, double tau) { return mu == 0 ? J1(tau) : J2(tau); };

  b.a = [am, J1, J2](std::size_t mu, double tau, const Vec& r) {
    return mu == 0 ? 0.5 * am / (J2(tau) - r[1]) : 0.5 * am / (J1(tau) - r[0]);
  };
  b.b = [B1, B2, J1, J2](std::size_t mu, double tau, const Vec& r) {
    const double g1 = J1(tau) - r[0];
    const double g2 = J2(tau) - r[1];
    return mu == 0 ? B1 / (g1 * g2 * g2) : B2 / (g1 * g1 * g2);
  };
  b.c = [C1, C2, J1, J2](std::size_t mu, double tau, const Vec& r) {
    const double g1 = J1(tau) - r[0];
    const double g2 = J2(tau) - r[1];
    return mu == 0 ? C1 / (g1 * g2 * g2) : C2 / (g1 * g1 * g2);
  };
  b.d_est = [](std::size_t, std::size_t, double, const Vec&) { return 0.0; };
  b.e_est = [](std::size_t, std::size_t, std::size_t, double, const Vec&) { return 0.0; };
  b.R_hat = [l1, l2](std::size_t mu, std::size_t nu, double tau) {
    if (mu != nu) return 0.0;
    return std::exp(-(mu == 0 ? l1 : l2) * tau);
  };
  b.P_hat = [l1, l2](std::size_t mu, std::size_t nu, double tau) {
    if (mu != nu) return 0.0;
    return std::exp((mu == 0 ? l1 : l2) * tau);
  };

  b.da_dr = [am, J1, J2](std::size_t mu, std::size_t nu, double tau, const Vec& r) {
    if (mu == 0) {
      if (nu != 1) return 0.0;
      const double g2 = J2(tau) - r[1];
      return 0.5 * am / (g2 * g2);
    }
    if (nu != 0) return 0.0;
    const double g1 = J1(tau) - r[0];
    return 0.5 * am / (g1 * g1);
  };
  b.da_dtau = [am, l1, l2, J1, J2](std::size_t mu, double tau, const Vec& r) {
    if (mu == 0) {
      const double g2 = J2(tau) - r[1];
      return 0.5 * am * l2 * J2(tau) / (g2 * g2);
    }
    const double g1 = J1(tau) - r[0];
    return 0.5 * am * l1 * J1(tau) / (g1 * g1);
  };
  b.db_dr = [B1, B2, J1, J2](std::size_t mu, std::size_t nu, double tau, const Vec& r) {
    const double g1 = J1(tau) - r[0];
    const double g2 = J2(tau) - r[1];
    if (mu == 0)
      return nu == 0 ? B1 / (g1 * g1 * g2 * g2) : 2.0 * B1 / (g1 * g2 * g2 * g2);
    return nu == 0 ? 2.0 * B2 / (g1 * g1 * g1 * g2) : B2 / (g1 * g1 * g2 * g2);
  };
  b.db_dtau = [B1, B2, l1, l2, J1, J2](std::size_t mu, double tau, const Vec& r) {
    const double g1 = J1(tau) - r[0];
    const double g2 = J2(tau) - r[1];
    if (mu == 0)
      return B1 * (l1 * J1(tau) / (g1 * g1 * g2 * g2) +
                   2.0 * l2 * J2(tau) / (g1 * g2 * g2 * g2));
    return B2 * (2.0 * l1 * J1(tau) / (g1 * g1 * g1 * g2) +
                 l2 * J2(tau) / (g1 * g1 * g2 * g2));
  };
  b.dR_hat_dtau = [l1, l2](std::size_t mu, std::size_t nu, double tau) {
    if (mu != nu) return 0.0;
    const double l = mu == 0 ? l1 : l2;
    return -l * std::exp(-l * tau);
  };
  return b;
}

Params figure_config(char which) {
  Params p;
  switch (which) {
    case 'a':
    case 'b':
      p.mu = 1.0;
      p.lambda1 = 2.0;
      p.lambda2 = -1.0;
      p.initial_action = {4.0, 4.0};
      p.epsilon = 1e-2;
      p.horizon = 1.0;
      break;
    case 'c':
    case 'd':
      p.mu = 1.0;
      p.lambda1 = 1.1;
      p.lambda2 = -1.0;
      p.initial_action = {4.0, 4.0};
      p.epsilon = 1e-3;
      p.horizon = 3.0;
      break;
    default:
      throw std::invalid_argument("rigid_body: unknown figure tag (use a, b, c or d)");
  }
  return p;
}

}  // namespace rigid_body
}  // namespace avgbound
