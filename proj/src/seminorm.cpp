#include "avgbound/seminorm.hpp"

#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>

namespace avgbound {

Vec SeminormFamily::all(const Vec& x) const {
  Vec out(count);
  for (std::size_t mu = 0; mu < count; ++mu) out[mu] = vec_fn(mu, x);
  return out;
}

SeminormFamily component_family(std::size_t d) {
  if (d == 0) throw std::invalid_argument("component_family: dimension must be positive");
  SeminormFamily fam;
  fam.dim = d;
  fam.count = d;
  fam.kind = SeminormFamily::Kind::component;
  fam.labels.reserve(d);
  for (std::size_t i = 0; i < d; ++i) fam.labels.push_back(std::to_string(i + 1));
  fam.vec_fn = [](std::size_t mu, const Vec& x) { return std::fabs(x[mu]); };
  fam.mat_fn = [](std::size_t mu, std::size_t nu, const Mat& A) { return std::fabs(A(mu, nu)); };
  fam.tens_fn = [](std::size_t mu, std::size_t nu, std::size_t ka, const Tens3& T) {
    return std::fabs(T(mu, nu, ka));
  };
  return fam;
}

SeminormFamily partition_family(std::size_t d,
                                const std::vector<std::vector<std::size_t>>& blocks) {
  if (d == 0) throw std::invalid_argument("partition_family: dimension must be positive");
  if (blocks.empty()) throw std::invalid_argument("partition_family: no blocks");
  std::vector<bool> seen(d, false);
  for (const auto& blk : blocks) {
    if (blk.empty()) throw std::invalid_argument("partition_family: empty block");
    for (std::size_t idx : blk) {
      if (idx < 1 || idx > d)
        throw std::invalid_argument("partition_family: index out of range (blocks are 1-based)");
      if (seen[idx - 1]) throw std::invalid_argument("partition_family: duplicate index");
      seen[idx - 1] = true;
    }
  }
  for (bool s : seen)
    if (!s) throw std::invalid_argument("partition_family: blocks do not cover all coordinates");

  // store 0-based blocks in the closures
  auto zb = std::make_shared<std::vector<std::vector<std::size_t>>>();
  zb->reserve(blocks.size());
  for (const auto& blk : blocks) {
    std::vector<std::size_t> z;
    z.reserve(blk.size());
    for (std::size_t idx : blk) z.push_back(idx - 1);
    zb->push_back(std::move(z));
  }

  SeminormFamily fam;
  fam.dim = d;
  fam.count = blocks.size();
  fam.kind = SeminormFamily::Kind::partition;
  for (const auto& blk : blocks) {
    std::string lab = "{";
    for (std::size_t i = 0; i < blk.size(); ++i) {
      if (i) lab += ",";
      lab += std::to_string(blk[i]);
    }
    lab += "}";
    fam.labels.push_back(lab);
  }
  fam.vec_fn = [zb](std::size_t mu, const Vec& x) {
    double acc = 0.0;
    for (std::size_t i : (*zb)[mu]) acc += x[i] * x[i];
    return std::sqrt(acc);
  };
  fam.mat_fn = [zb](std::size_t mu, std::size_t nu, const Mat& A) {
    double acc = 0.0;
    for (std::size_t i : (*zb)[mu])
      for (std::size_t j : (*zb)[nu]) acc += A(i, j) * A(i, j);
    return std::sqrt(acc);
  };
  fam.tens_fn = [zb](std::size_t mu, std::size_t nu, std::size_t ka, const Tens3& T) {
    double acc = 0.0;
    for (std::size_t i : (*zb)[mu])
      for (std::size_t j : (*zb)[nu])
        for (std::size_t k : (*zb)[ka]) acc += T(i, j, k) * T(i, j, k);
    return std::sqrt(acc);
  };
  return fam;
}

namespace {

constexpr double kRelTol = 1e-12;

void flag(FamilyCheckReport& rep, std::string property, std::string detail, double magnitude) {
  rep.violations.push_back({std::move(property), std::move(detail), magnitude});
}

}  // namespace

FamilyCheckReport check_family(const SeminormFamily& fam, std::size_t trials,
                               std::uint64_t seed) {
  FamilyCheckReport rep;
  rep.trials = trials;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> scale_exp(-2.0, 2.0);
  const std::size_t d = fam.dim;

  auto rand_vec = [&] {
    Vec x(d);
    const double s = std::pow(10.0, scale_exp(rng));
    for (auto& v : x) v = s * unit(rng);
    return x;
  };
  auto rand_mat = [&] {
    Mat A(d);
    const double s = std::pow(10.0, scale_exp(rng));
    for (auto& v : A.data()) v = s * unit(rng);
    return A;
  };
  auto rand_tens = [&] {
    Tens3 T(d);
    const double s = std::pow(10.0, scale_exp(rng));
    for (auto& v : T.data()) v = s * unit(rng);
    return T;
  };

  // separation only needs the basis: every coordinate direction must be
  // seen by at least one member
  for (std::size_t i = 0; i < d; ++i) {
    Vec e(d, 0.0);
    e[i] = 1.0;
    double best = 0.0;
    for (std::size_t mu = 0; mu < fam.count; ++mu) best = std::max(best, fam.vec(mu, e));
    if (best <= 0.0)
      flag(rep, "separation", "basis vector e_" + std::to_string(i + 1) + " invisible to family",
           0.0);
  }

  for (std::size_t trial = 0; trial < trials; ++trial) {
    const Vec x = rand_vec();
    const Vec y = rand_vec();
    const double lam = std::pow(10.0, scale_exp(rng)) * unit(rng);
    Vec lx(d), xy(d);
    for (std::size_t i = 0; i < d; ++i) {
      lx[i] = lam * x[i];
      xy[i] = x[i] + y[i];
    }
    const Mat A = rand_mat();
    const Tens3 T = rand_tens();
    const Vec Ax = mat_vec(A, x);
    const Vec Txy = contract_both(T, x, y);

    for (std::size_t mu = 0; mu < fam.count; ++mu) {
      const double nx = fam.vec(mu, x);
      const double ny = fam.vec(mu, y);

      const double lhs_h = fam.vec(mu, lx);
      const double rhs_h = std::fabs(lam) * nx;
      if (std::fabs(lhs_h - rhs_h) > kRelTol * (1.0 + rhs_h))
        flag(rep, "homogeneity", "mu=" + fam.labels[mu], std::fabs(lhs_h - rhs_h));

      const double lhs_s = fam.vec(mu, xy);
      if (lhs_s > nx + ny + kRelTol * (1.0 + nx + ny))
        flag(rep, "subadditivity", "mu=" + fam.labels[mu], lhs_s - nx - ny);

      double dom = 0.0;
      for (std::size_t nu = 0; nu < fam.count; ++nu) dom += fam.mat(mu, nu, A) * fam.vec(nu, x);
      const double lhs_m = fam.vec(mu, Ax);
      if (lhs_m > dom + kRelTol * (1.0 + dom))
        flag(rep, "matrix_domination", "mu=" + fam.labels[mu], lhs_m - dom);

      double dom2 = 0.0;
      for (std::size_t nu = 0; nu < fam.count; ++nu)
        for (std::size_t ka = 0; ka < fam.count; ++ka)
          dom2 += fam.tens(mu, nu, ka, T) * fam.vec(nu, x) * fam.vec(ka, y);
      const double lhs_t = fam.vec(mu, Txy);
      if (lhs_t > dom2 + kRelTol * (1.0 + dom2))
        flag(rep, "bilinear_domination", "mu=" + fam.labels[mu], lhs_t - dom2);
    }
  }
  return rep;
}

}  // namespace avgbound
