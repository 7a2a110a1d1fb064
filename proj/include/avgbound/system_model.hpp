#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "avgbound/linalg.hpp"

namespace avgbound {

/// One-frequency system
///
///   dI/dt     = eps f(I, theta)
///   dtheta/dt = omega(I) + eps g(I, theta)
///
/// on a domain Lambda, together with the auxiliary functions that feed the
/// error estimators.  All handles are total on Lambda x angle and 2pi
/// periodic in the angle.  The auxiliary chain ties them together:
///
///   f = f_bar + omega ds/dtheta            s has zero angular mean
///   p = (ds/dI) f + (ds/dtheta) g
///   s = omega dv/dtheta                    v(., theta0) = 0
///   q = (dv/dI) f + (dv/dtheta) g
///   p = p_bar + omega dw/dtheta            w(., theta0) = 0
///   u = (dw/dI) f + (dw/dtheta) g
///   m_fun = (d2f_bar) f_bar - (df_bar)^2
///
/// g_fun is a secant matrix for p_bar (p_bar(I+dI) = p_bar(I) + g_fun dI),
/// h_fun a symmetric Taylor remainder for f_bar.
struct SystemModel {
  std::size_t dim = 0;

  std::function<bool(const Vec&)> in_domain;
  std::function<Vec(const Vec&, double)> f;
  std::function<double(const Vec&, double)> g;
  std::function<double(const Vec&)> omega;

  std::function<Vec(const Vec&)> f_bar;
  std::function<Mat(const Vec&)> df_bar;
  std::function<Tens3(const Vec&)> d2f_bar;

  std::function<Vec(const Vec&, double)> s, v, p, q, w, u;
  std::function<Vec(const Vec&)> p_bar;
  std::function<Mat(const Vec&)> m_fun;
  std::function<Mat(const Vec&, const Vec&)> g_fun;    // (I, dI)
  std::function<Tens3(const Vec&, const Vec&)> h_fun;  // (I, dI)

  double theta0 = 0.0;
  Vec initial_action;
  double epsilon = 0.0;

  /// Box used by randomized checks to draw sample actions; must lie in the
  /// domain (points falling outside are re-drawn a bounded number of times).
  Vec sample_lo, sample_hi;
};

/// Angular mean of h(I, .) by the periodic trapezoid rule (exact mean of
/// n_nodes uniform samples).  Requires n_nodes >= 8 and I in the domain.
[[nodiscard]] Vec average_over_angle(const SystemModel& sys,
                                     const std::function<Vec(const Vec&, double)>& h,
                                     const Vec& I, std::size_t n_nodes = 256);

/// Secant matrix via the line integral of the p_bar Jacobian (Gauss-Legendre
/// with `quad_order` nodes; the Jacobian itself by central differences).
/// The whole segment [I, I+dI] must lie in the domain; this is checked by
/// sampling 65 equispaced points and throwing std::domain_error otherwise.
[[nodiscard]] Mat taylor_secant(const SystemModel& sys, const Vec& I, const Vec& dI,
                                std::size_t quad_order = 16);

/// Symmetric Taylor remainder 2 * int_0^1 (1-x) d2f_bar(I + x dI) dx, same
/// quadrature and segment check as taylor_secant.
[[nodiscard]] Tens3 taylor_remainder(const SystemModel& sys, const Vec& I, const Vec& dI,
                                     std::size_t quad_order = 16);

struct IdentityResidual {
  std::string key;   // stable one-letter key, "a".."i"
  std::string name;  // human-readable description
  double max_rel_residual = 0.0;
  Vec worst_action;
  double worst_angle = 0.0;
};

struct IdentityReport {
  std::vector<IdentityResidual> entries;
  [[nodiscard]] double worst() const;
  [[nodiscard]] const IdentityResidual& by_key(const std::string& key) const;
};

/// Validates the auxiliary chain at `samples` random (I, theta) pairs drawn
/// from the model's sample box.  Derivatives are central differences with
/// step fd_step * max(1, |x|).  Residuals are relative to
/// max(1, |lhs|, |rhs|) componentwise.
[[nodiscard]] IdentityReport check_identities(const SystemModel& sys, std::size_t samples,
                                              std::uint64_t seed, double fd_step = 1e-6);

/// Gauss-Legendre nodes/weights on [0,1] (exposed for reuse in quadrature
/// oracles).
void gauss_legendre_01(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace avgbound
