#include "doctest.h"

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "avgbound/direct.hpp"
#include "avgbound/rigid_body.hpp"
#include "avgbound/seminorm.hpp"

using namespace avgbound;

namespace {

rigid_body::Params fig_a() { return rigid_body::figure_config('a'); }

/// One-dimensional system whose perturbed action provably leaves the
/// admissible set I < 2 before the slow horizon: L(t) = 4 sin t exactly,
/// so I(t) = 1 + tau + 0.4 sin t crosses 2 near t = 7.1.
SystemModel escaping_system() {
  SystemModel sys;
  sys.dim = 1;
  sys.in_domain = [](const Vec& I) { return I[0] < 2.0; };
  sys.omega = [](const Vec&) { return 1.0; };
  sys.f = [](const Vec&, double th) { return Vec{1.0 + 4.0 * std::cos(th)}; };
  sys.g = [](const Vec&, double) { return 0.0; };
  sys.f_bar = [](const Vec&) { return Vec{1.0}; };
  sys.theta0 = 0.0;
  sys.initial_action = {1.0};
  sys.epsilon = 0.1;
  return sys;
}

AveragedFlow escaping_flow() {
  return make_closed_form_flow(
      1, 2.0, [](double tau) { return Vec{1.0 + tau}; },
      [](double) { return Mat::identity(1); }, [](double) { return Mat::identity(1); },
      [](double) { return Vec{0.0}; });
}

/// Halve the n block (and the matching initial data) of a bound result.
void halve_n(BoundResult& res) {
  std::vector<double> times;
  std::vector<State> states, derivs;
  for (std::size_t k = 0; k < res.mn.node_count(); ++k) {
    times.push_back(res.mn.time_at(k));
    State y = res.mn.state_at(k);
    State dy = res.mn.deriv_at(k);
    for (std::size_t mu = 0; mu < res.count; ++mu) {
      y[res.count + mu] *= 0.5;
      dy[res.count + mu] *= 0.5;
    }
    states.push_back(y);
    derivs.push_back(dy);
  }
  res.mn = Trajectory::from_nodes(times, states, derivs);
  for (double& v : res.ell0) v *= 0.5;
}

}  // namespace

TEST_CASE("direct integration bookkeeping on the benchmark") {
  const rigid_body::Params p = fig_a();
  const SystemModel sys = rigid_body::build_system(p);
  const AveragedFlow flow = rigid_body::closed_form_flow(p);
  const DirectResult res = run_l_operation(sys, flow);

  CHECK(res.status == DirectResult::Status::completed);
  CHECK(res.violated_condition.empty());
  CHECK(res.dim == 2);
  CHECK(res.epsilon == p.epsilon);
  CHECK(res.theta0 == 0.0);
  CHECK(res.horizon_t == doctest::Approx(p.horizon / p.epsilon).epsilon(1e-12));
  CHECK(res.U_eff == doctest::Approx(p.horizon).epsilon(1e-12));
  CHECK(res.wall_time_seconds > 0.0);

  // omega = I^1 I^2 = 16 e^{-tau} along this averaged orbit
  CHECK(res.omega_max == doctest::Approx(16.0).epsilon(1e-9));
  CHECK(res.omega_min == doctest::Approx(16.0 * std::exp(-1.0)).epsilon(1e-6));
  CHECK_FALSE(res.omega_variation_warning);  // ratio is e < 10

  // fixed step resolves the slowest period with steps_per_period nodes
  CHECK(res.step ==
        doctest::Approx((2.0 * std::numbers::pi / res.omega_min) / 50.0).epsilon(1e-12));

  // the initial sample is exact
  const Vec L0 = res.L_at(0.0);
  CHECK(L0[0] == 0.0);
  CHECK(L0[1] == 0.0);
  CHECK(res.theta_at(0.0) == 0.0);

  // the reduced angle stays in [0, 2pi)
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (int k = 0; k <= 40; ++k) {
    const double t = res.horizon_t * (1.0 - 1e-12) * static_cast<double>(k) / 40.0;
    const double th = res.theta_at(t);
    CHECK(th >= 0.0);
    CHECK(th < two_pi);
  }
}

TEST_CASE("direct integration honours the resolution knobs") {
  const rigid_body::Params p = fig_a();
  const SystemModel sys = rigid_body::build_system(p);
  const AveragedFlow flow = rigid_body::closed_form_flow(p);

  SUBCASE("explicit step override") {
    DirectConfig cfg;
    cfg.step_override = 0.05;
    const DirectResult res = run_l_operation(sys, flow, cfg);
    CHECK(res.step == 0.05);
    CHECK(res.status == DirectResult::Status::completed);
  }

  SUBCASE("steps per period") {
    DirectConfig cfg;
    cfg.steps_per_period = 100.0;
    const DirectResult res = run_l_operation(sys, flow, cfg);
    CHECK(res.step ==
          doctest::Approx((2.0 * std::numbers::pi / res.omega_min) / 100.0).epsilon(1e-12));
  }
}

TEST_CASE("slow omega drift across the horizon raises the variation warning") {
  rigid_body::Params p = fig_a();
  p.horizon = 3.0;  // omega spans a factor e^3 > 10
  const SystemModel sys = rigid_body::build_system(p);
  const AveragedFlow flow = rigid_body::closed_form_flow(p);
  const DirectResult res = run_l_operation(sys, flow);
  CHECK(res.omega_variation_warning);
  CHECK(res.status == DirectResult::Status::completed);
}

TEST_CASE("zero angular coupling gives an identically zero error") {
  rigid_body::Params p = fig_a();
  p.mu = 0.0;
  const SystemModel sys = rigid_body::build_system(p);
  const AveragedFlow flow = rigid_body::closed_form_flow(p);
  const DirectResult res = run_l_operation(sys, flow);

  CHECK(res.status == DirectResult::Status::completed);
  double worst = 0.0;
  for (int k = 0; k <= 400; ++k) {
    const double t = res.horizon_t * (1.0 - 1e-12) * static_cast<double>(k) / 400.0;
    const Vec L = res.L_at(t);
    worst = std::max({worst, std::fabs(L[0]), std::fabs(L[1])});
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("leaving the admissible set stops the integration with a named guard") {
  const SystemModel sys = escaping_system();
  const AveragedFlow flow = escaping_flow();
  const DirectResult res = run_l_operation(sys, flow);

  CHECK(res.status == DirectResult::Status::domain_violation);
  CHECK(res.violated_condition == "perturbed_in_domain");
  // I(t) = 1 + 0.1 t + 0.4 sin t first reaches 2 near t = 7.1
  // (fixed point of t = 10 - 4 sin t on the rising flank)
  CHECK(res.horizon_t > 6.5);
  CHECK(res.horizon_t < 7.5);
  CHECK(res.U_eff == doctest::Approx(sys.epsilon * res.horizon_t).epsilon(1e-12));
  CHECK(res.U_eff < flow.horizon);
  // the partial trajectory is still usable up to the exit time
  const Vec L = res.L_at(res.horizon_t * 0.5);
  CHECK(std::fabs(L[0] - 4.0 * std::sin(res.horizon_t * 0.5)) < 1e-4);
}

TEST_CASE("bound verification against direct integration on the benchmark") {
  const rigid_body::Params p = fig_a();
  const SystemModel sys = rigid_body::build_system(p);
  const AveragedFlow flow = rigid_body::closed_form_flow(p);
  const EstimatorBundle bundle = rigid_body::build_bundle(p);
  const SeminormFamily fam = component_family(2);

  const DirectResult direct = run_l_operation(sys, flow);
  const BoundResult bound = run_n_operation(bundle, p.epsilon, flow);

  const VerificationReport rep = verify_bounds(direct, bound, fam, 20000);
  REQUIRE(rep.labels.size() == 2);
  CHECK(rep.labels[0] == "1");
  CHECK(rep.labels[1] == "2");
  CHECK(rep.n_samples == 20000);
  CHECK(rep.n_windows == 20);
  CHECK_FALSE(rep.horizon_mismatch);
  CHECK(rep.t_common == doctest::Approx(p.horizon / p.epsilon).epsilon(1e-9));

  CHECK(rep.all_hold());
  for (std::size_t mu = 0; mu < 2; ++mu) {
    CHECK(rep.bound_holds[mu]);
    CHECK(rep.worst_ratio[mu] < 1.0 + 1e-9);
    CHECK(rep.worst_ratio[mu] > 0.5);  // tight, not vacuous
  }

  REQUIRE(rep.window_peak_ratio.size() == 20);
  for (const Vec& w : rep.window_peak_ratio) REQUIRE(w.size() == 2);
  for (std::size_t mu = 0; mu < 2; ++mu) {
    int good = 0;
    for (const Vec& w : rep.window_peak_ratio)
      if (w[mu] >= 0.75) ++good;
    CHECK(good >= 15);
  }

  CHECK(rep.T_L > 0.0);
  CHECK(rep.T_N > 0.0);
  CHECK(rep.speedup == doctest::Approx(rep.T_L / rep.T_N).epsilon(1e-12));
}

TEST_CASE("a halved bound curve is caught by the verifier") {
  const rigid_body::Params p = fig_a();
  const SystemModel sys = rigid_body::build_system(p);
  const AveragedFlow flow = rigid_body::closed_form_flow(p);
  const EstimatorBundle bundle = rigid_body::build_bundle(p);
  const SeminormFamily fam = component_family(2);

  const DirectResult direct = run_l_operation(sys, flow);
  BoundResult bound = run_n_operation(bundle, p.epsilon, flow);
  halve_n(bound);

  const VerificationReport rep = verify_bounds(direct, bound, fam, 5000);
  CHECK_FALSE(rep.all_hold());
  CHECK_FALSE(rep.bound_holds[0]);
  CHECK_FALSE(rep.bound_holds[1]);
  CHECK(rep.worst_ratio[0] > 1.0);
  CHECK(rep.worst_ratio[1] > 1.0);
}

TEST_CASE("zero coupling: zero bound and zero error agree") {
  rigid_body::Params p = fig_a();
  p.mu = 0.0;
  const SystemModel sys = rigid_body::build_system(p);
  const AveragedFlow flow = rigid_body::closed_form_flow(p);
  const EstimatorBundle bundle = rigid_body::build_bundle(p);

  const DirectResult direct = run_l_operation(sys, flow);
  const BoundResult bound = run_n_operation(bundle, p.epsilon, flow);

  const VerificationReport rep = verify_bounds(direct, bound, component_family(2), 2000);
  CHECK(rep.all_hold());  // 0 <= 0 everywhere, never 0 > 0
  CHECK(rep.worst_ratio[0] == 0.0);
  CHECK(rep.worst_ratio[1] == 0.0);
}

TEST_CASE("verifier input validation") {
  const rigid_body::Params p = fig_a();
  const SystemModel sys = rigid_body::build_system(p);
  const AveragedFlow flow = rigid_body::closed_form_flow(p);
  const EstimatorBundle bundle = rigid_body::build_bundle(p);

  const DirectResult direct = run_l_operation(sys, flow);
  const BoundResult bound = run_n_operation(bundle, p.epsilon, flow);

  CHECK_THROWS_AS((void)verify_bounds(direct, bound, component_family(2), 1),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)verify_bounds(direct, bound, component_family(2), 100, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)verify_bounds(direct, bound, component_family(3), 100),
                  std::invalid_argument);
}
