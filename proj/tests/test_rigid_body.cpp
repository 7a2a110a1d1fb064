#include "doctest.h"

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>

#include "avgbound/rigid_body.hpp"

using namespace avgbound;
using doctest::Approx;

namespace {

rigid_body::Params fig_a() { return rigid_body::figure_config('a'); }

double fd_central(const std::function<double(double)>& fn, double x, double h = 1e-5) {
  return (fn(x + h) - fn(x - h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("parameter validation names the violated constraint") {
  using rigid_body::validate;
  rigid_body::Params p;  // defaults are admissible
  CHECK_NOTHROW(validate(p));

  SUBCASE("lambda1 must be positive") {
    p.lambda1 = 0.0;
    CHECK_THROWS_WITH_AS(validate(p), "rigid_body: requires lambda1 > 0", std::invalid_argument);
  }
  SUBCASE("coupling must be dominated") {
    p.mu = 2.0;  // |mu| == lambda1
    CHECK_THROWS_WITH_AS(validate(p), "rigid_body: requires |mu| < lambda1",
                         std::invalid_argument);
  }
  SUBCASE("lambda2 must exceed -lambda1") {
    p.lambda2 = -2.0;
    CHECK_THROWS_WITH_AS(validate(p), "rigid_body: requires lambda2 > -lambda1",
                         std::invalid_argument);
  }
  SUBCASE("initial actions must be positive") {
    p.initial_action[1] = 0.0;
    CHECK_THROWS_WITH_AS(validate(p), "rigid_body: initial actions must be positive",
                         std::invalid_argument);
  }
  SUBCASE("epsilon must be positive") {
    p.epsilon = 0.0;
    CHECK_THROWS_WITH_AS(validate(p), "rigid_body: requires epsilon > 0", std::invalid_argument);
  }
  SUBCASE("horizon must be positive") {
    p.horizon = -1.0;
    CHECK_THROWS_WITH_AS(validate(p), "rigid_body: requires a positive horizon",
                         std::invalid_argument);
  }
  SUBCASE("non-finite parameters are rejected") {
    p.mu = std::nan("");
    CHECK_THROWS_WITH_AS(validate(p), "rigid_body: non-finite parameter", std::invalid_argument);
  }
  SUBCASE("factories re-validate") {
    p.lambda1 = -1.0;
    CHECK_THROWS_AS((void)rigid_body::build_system(p), std::invalid_argument);
    CHECK_THROWS_AS((void)rigid_body::build_bundle(p), std::invalid_argument);
    CHECK_THROWS_AS((void)rigid_body::closed_form_flow(p), std::invalid_argument);
  }
}

TEST_CASE("benchmark configurations") {
  const rigid_body::Params a = rigid_body::figure_config('a');
  CHECK(a.mu == 1.0);
  CHECK(a.lambda1 == 2.0);
  CHECK(a.lambda2 == -1.0);
  CHECK(a.initial_action[0] == 4.0);
  CHECK(a.initial_action[1] == 4.0);
  CHECK(a.epsilon == 1e-2);
  CHECK(a.horizon == 1.0);

  const rigid_body::Params c = rigid_body::figure_config('c');
  CHECK(c.mu == 1.0);
  CHECK(c.lambda1 == 1.1);
  CHECK(c.lambda2 == -1.0);
  CHECK(c.epsilon == 1e-3);
  CHECK(c.horizon == 3.0);

  // 'b' and 'd' only change which component gets plotted
  const rigid_body::Params b = rigid_body::figure_config('b');
  CHECK(b.lambda1 == a.lambda1);
  CHECK(b.epsilon == a.epsilon);
  const rigid_body::Params d = rigid_body::figure_config('d');
  CHECK(d.lambda1 == c.lambda1);
  CHECK(d.epsilon == c.epsilon);

  CHECK_THROWS_AS((void)rigid_body::figure_config('e'), std::invalid_argument);
}

TEST_CASE("model functions at a reference point") {
  const SystemModel sys = rigid_body::build_system(fig_a());
  const Vec I{2.0, 3.0};
  const double th = 0.7;
  const double c2 = std::cos(1.4), s2 = std::sin(1.4);

  CHECK(sys.dim == 2);
  CHECK(sys.theta0 == 0.0);
  CHECK(sys.omega(I) == Approx(6.0).epsilon(1e-15));
  const Vec fv = sys.f(I, th);
  CHECK(fv[0] == Approx(-2.0 * (2.0 + c2)).epsilon(1e-15));
  CHECK(fv[1] == Approx(-3.0 * (-1.0 - c2)).epsilon(1e-15));
  CHECK(sys.g(I, th) == Approx(s2).epsilon(1e-15));

  const Vec fb = sys.f_bar(I);
  CHECK(fb[0] == Approx(-4.0).epsilon(1e-15));
  CHECK(fb[1] == Approx(3.0).epsilon(1e-15));
  const Mat D = sys.df_bar(I);
  CHECK(D(0, 0) == -2.0);
  CHECK(D(0, 1) == 0.0);
  CHECK(D(1, 0) == 0.0);
  CHECK(D(1, 1) == 1.0);

  // the angular primitive of the oscillatory part of f
  const Vec sv = sys.s(I, th);
  CHECK(sv[0] == Approx(-0.5 * s2 / 3.0).epsilon(1e-14));
  CHECK(sv[1] == Approx(0.5 * s2 / 2.0).epsilon(1e-14));

  CHECK(sys.p_bar(I)[0] == 0.0);
  CHECK(sys.p_bar(I)[1] == 0.0);
  const Mat M = sys.m_fun(I);
  CHECK(M(0, 0) == -4.0);
  CHECK(M(1, 1) == -1.0);
  CHECK(M(0, 1) == 0.0);

  CHECK(sys.in_domain({0.1, 0.1}));
  CHECK_FALSE(sys.in_domain({-0.1, 1.0}));
  CHECK_FALSE(sys.in_domain({1.0, 0.0}));
  CHECK(sys.in_domain(sys.sample_lo));
  CHECK(sys.in_domain(sys.sample_hi));
}

TEST_CASE("closed-form averaged flow is the diagonal exponential") {
  const rigid_body::Params p = fig_a();
  const AveragedFlow flow = rigid_body::closed_form_flow(p);
  CHECK(flow.dim == 2);
  CHECK(flow.source == AveragedFlow::Source::closed_form);
  CHECK(flow.horizon == p.horizon);
  CHECK_FALSE(flow.truncated);

  const double tau = 0.37;
  const Vec J = flow.J(tau);
  CHECK(J[0] == Approx(4.0 * std::exp(-2.0 * tau)).epsilon(1e-15));
  CHECK(J[1] == Approx(4.0 * std::exp(tau)).epsilon(1e-15));

  const Mat R = flow.R(tau);
  const Mat Ri = flow.R_inv(tau);
  CHECK(R(0, 0) == Approx(std::exp(-2.0 * tau)).epsilon(1e-15));
  CHECK(R(1, 1) == Approx(std::exp(tau)).epsilon(1e-15));
  CHECK(R(0, 1) == 0.0);
  CHECK(R(0, 0) * Ri(0, 0) == Approx(1.0).epsilon(1e-15));
  CHECK(R(1, 1) * Ri(1, 1) == Approx(1.0).epsilon(1e-15));

  const Vec K = flow.K(tau);
  CHECK(K[0] == 0.0);
  CHECK(K[1] == 0.0);
}

TEST_CASE("bundle closed forms at tau = 0 on the benchmark") {
  const EstimatorBundle b = rigid_body::build_bundle(fig_a());
  REQUIRE(b.count == 2);
  CHECK(b.labels[0] == "1");
  CHECK(b.labels[1] == "2");

  const Vec r0{0.0, 0.0};
  // a^i(0, 0) = |mu| / (2 J^j(0)) = 1/8
  CHECK(b.a(0, 0.0, r0) == Approx(0.125).epsilon(1e-15));
  CHECK(b.a(1, 0.0, r0) == Approx(0.125).epsilon(1e-15));
  // B_1 = |mu|(4 l1 + 4 l2 + |mu|)/8 = 5/8,  b^1(0,0) = B_1/64 = 5/512
  CHECK(b.b(0, 0.0, r0) == Approx(5.0 / 512.0).epsilon(1e-15));
  // B_2 = |mu|(4 l1 + 4 l2 + 3|mu|)/8 = 7/8,  b^2(0,0) = 7/512
  CHECK(b.b(1, 0.0, r0) == Approx(7.0 / 512.0).epsilon(1e-15));
  // C_1 = |mu|(16 S^2 + 16 |mu| S + 3 mu^2)/16, S = l1 + l2 = 1  ->  35/16
  CHECK(b.c(0, 0.0, r0) == Approx(35.0 / 1024.0).epsilon(1e-15));
  // C_2 swaps the mu^2 coefficient for 15  ->  47/16
  CHECK(b.c(1, 0.0, r0) == Approx(47.0 / 1024.0).epsilon(1e-15));

  // no linear or quadratic gamma terms for this system
  for (std::size_t mu = 0; mu < 2; ++mu)
    for (std::size_t nu = 0; nu < 2; ++nu) {
      CHECK(b.d_est(mu, nu, 0.3, r0) == 0.0);
      for (std::size_t ka = 0; ka < 2; ++ka) CHECK(b.e_est(mu, nu, ka, 0.3, r0) == 0.0);
    }

  // tube radii follow the averaged orbit
  CHECK(b.rho(0, 0.5) == Approx(4.0 * std::exp(-1.0)).epsilon(1e-15));
  CHECK(b.rho(1, 0.5) == Approx(4.0 * std::exp(0.5)).epsilon(1e-15));

  // R_hat and P_hat are mutually inverse diagonal exponentials
  const double tau = 0.81;
  for (std::size_t mu = 0; mu < 2; ++mu) {
    CHECK(b.R_hat(mu, 1 - mu, tau) == 0.0);
    CHECK(b.P_hat(mu, 1 - mu, tau) == 0.0);
    CHECK(b.R_hat(mu, mu, tau) * b.P_hat(mu, mu, tau) == Approx(1.0).epsilon(1e-15));
  }
  CHECK(b.R_hat(0, 0, tau) == Approx(std::exp(-2.0 * tau)).epsilon(1e-15));
  CHECK(b.R_hat(1, 1, tau) == Approx(std::exp(tau)).epsilon(1e-15));  // lambda2 = -1

  // hand value: da^1/dr^2 at the origin is |mu| / (2 J^2(0)^2) = 1/32
  CHECK(b.da_dr(0, 1, 0.0, r0) == Approx(1.0 / 32.0).epsilon(1e-15));
  CHECK(b.da_dr(0, 0, 0.0, r0) == 0.0);
}

TEST_CASE("analytic partial hooks match central differences") {
  const EstimatorBundle b = rigid_body::build_bundle(fig_a());
  const auto J1 = [](double tau) { return 4.0 * std::exp(-2.0 * tau); };
  const auto J2 = [](double tau) { return 4.0 * std::exp(tau); };

  const double taus[] = {0.05, 0.4, 0.9};
  const double fracs[] = {0.0, 0.15, 0.45};  // r as a fraction of the tube radius

  for (double tau : taus)
    for (double fr : fracs) {
      const Vec r{fr * J1(tau), fr * J2(tau)};
      for (std::size_t mu = 0; mu < 2; ++mu) {
        // d/dr_nu of a and b
        for (std::size_t nu = 0; nu < 2; ++nu) {
          const auto a_r = [&, nu](double x) {
            Vec rr = r;
            rr[nu] = x;
            return b.a(mu, tau, rr);
          };
          const auto b_r = [&, nu](double x) {
            Vec rr = r;
            rr[nu] = x;
            return b.b(mu, tau, rr);
          };
          CHECK(b.da_dr(mu, nu, tau, r) == Approx(fd_central(a_r, r[nu])).epsilon(1e-7));
          CHECK(b.db_dr(mu, nu, tau, r) == Approx(fd_central(b_r, r[nu])).epsilon(1e-7));
        }
        // d/dtau of a, b and R_hat
        const auto a_t = [&](double x) { return b.a(mu, x, r); };
        const auto b_t = [&](double x) { return b.b(mu, x, r); };
        const auto R_t = [&](double x) { return b.R_hat(mu, mu, x); };
        CHECK(b.da_dtau(mu, tau, r) == Approx(fd_central(a_t, tau)).epsilon(1e-7));
        CHECK(b.db_dtau(mu, tau, r) == Approx(fd_central(b_t, tau)).epsilon(1e-7));
        CHECK(b.dR_hat_dtau(mu, mu, tau) == Approx(fd_central(R_t, tau)).epsilon(1e-7));
        CHECK(b.dR_hat_dtau(mu, 1 - mu, tau) == 0.0);
      }
    }
}

TEST_CASE("majorants blow up toward the tube boundary and shrink with the gap") {
  const EstimatorBundle b = rigid_body::build_bundle(fig_a());
  const double tau = 0.2;
  const Vec small{0.1, 0.1};
  const Vec large{1.5, 1.5};  // still inside: J(0.2) = (2.68, 4.89)
  CHECK(b.a(0, tau, small) < b.a(0, tau, large));
  CHECK(b.b(0, tau, small) < b.b(0, tau, large));
  CHECK(b.c(1, tau, small) < b.c(1, tau, large));
}
