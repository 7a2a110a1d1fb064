#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "avgbound/linalg.hpp"
#include "avgbound/seminorm.hpp"

using namespace avgbound;

TEST_CASE("component family values") {
  const SeminormFamily fam = component_family(3);
  CHECK(fam.count == 3);
  CHECK(fam.vec(0, {-2.0, 1.0, 0.0}) == 2.0);
  CHECK(fam.vec(2, {-2.0, 1.0, 0.5}) == 0.5);

  const Mat A = Mat::from_rows(3, {1.0, -2.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, -4.0});
  CHECK(fam.mat(0, 1, A) == 2.0);
  CHECK(fam.mat(2, 2, A) == 4.0);

  Tens3 T(3);
  T(1, 0, 2) = -5.0;
  CHECK(fam.tens(1, 0, 2, T) == 5.0);
  CHECK(fam.tens(0, 0, 0, T) == 0.0);
}

TEST_CASE("partition family values") {
  const SeminormFamily fam = partition_family(3, {{1, 2}, {3}});
  CHECK(fam.count == 2);
  CHECK(fam.labels[0] == "{1,2}");
  CHECK(fam.labels[1] == "{3}");
  CHECK(fam.vec(0, {3.0, 4.0, 7.0}) == doctest::Approx(5.0));
  CHECK(fam.vec(1, {3.0, 4.0, 7.0}) == 7.0);

  // matrix member: Frobenius norm of the sub-block
  const Mat A = Mat::from_rows(3, {1.0, 1.0, 2.0, 1.0, 1.0, 0.0, 3.0, 4.0, 0.5});
  CHECK(fam.mat(0, 0, A) == doctest::Approx(2.0));
  CHECK(fam.mat(0, 1, A) == doctest::Approx(2.0));
  CHECK(fam.mat(1, 0, A) == doctest::Approx(5.0));
  CHECK(fam.mat(1, 1, A) == doctest::Approx(0.5));
}

TEST_CASE("partition blocks must partition the index set") {
  CHECK_THROWS_AS((void)partition_family(3, {{1, 2}}), std::invalid_argument);  // missing 3
  CHECK_THROWS_AS((void)partition_family(3, {{1, 2}, {2, 3}}), std::invalid_argument);  // overlap
  CHECK_THROWS_AS((void)partition_family(3, {{1, 2}, {3, 4}}), std::invalid_argument);  // range
  CHECK_THROWS_AS((void)partition_family(3, {{0, 1}, {2, 3}}), std::invalid_argument);  // 1-based
  CHECK_THROWS_AS((void)partition_family(3, {{1, 2}, {}, {3}}), std::invalid_argument);
}

TEST_CASE("singleton partition coincides with the component family") {
  const SeminormFamily comp = component_family(2);
  const SeminormFamily part = partition_family(2, {{1}, {2}});
  const Vec x{0.3, -1.7};
  const Mat A = Mat::from_rows(2, {0.1, -0.2, 0.4, 0.8});
  Tens3 T(2);
  T(0, 1, 1) = 2.0;
  T(1, 0, 1) = -0.3;
  for (std::size_t mu = 0; mu < 2; ++mu) {
    CHECK(comp.vec(mu, x) == doctest::Approx(part.vec(mu, x)).epsilon(1e-15));
    for (std::size_t nu = 0; nu < 2; ++nu) {
      CHECK(comp.mat(mu, nu, A) == doctest::Approx(part.mat(mu, nu, A)).epsilon(1e-15));
      for (std::size_t ka = 0; ka < 2; ++ka)
        CHECK(comp.tens(mu, nu, ka, T) == doctest::Approx(part.tens(mu, nu, ka, T)).epsilon(1e-15));
    }
  }
}

TEST_CASE("randomized axiom audit passes for both built-ins") {
  CHECK(check_family(component_family(2), 2000, 7).pass());
  CHECK(check_family(component_family(5), 2000, 8).pass());
  CHECK(check_family(partition_family(2, {{1, 2}}), 2000, 9).pass());
  CHECK(check_family(partition_family(5, {{1, 3}, {2, 5}, {4}}), 2000, 10).pass());
}

TEST_CASE("axiom audit flags a broken family") {
  SeminormFamily bad = component_family(2);
  // too small to dominate |A x|
  bad.mat_fn = [](std::size_t, std::size_t, const Mat&) { return 0.0; };
  const FamilyCheckReport rep = check_family(bad, 500, 11);
  CHECK_FALSE(rep.pass());
  bool saw_matrix = false;
  for (const FamilyCheckViolation& v : rep.violations)
    if (v.property.find("matrix") != std::string::npos) saw_matrix = true;
  CHECK(saw_matrix);
}

TEST_CASE("all() collects every member") {
  const SeminormFamily fam = partition_family(3, {{1, 2}, {3}});
  const Vec n = fam.all({3.0, 4.0, -2.0});
  REQUIRE(n.size() == 2);
  CHECK(n[0] == doctest::Approx(5.0));
  CHECK(n[1] == 2.0);
}
