#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "isac/cubic.hpp"
#include "oracles.hpp"

using isac::real_cubic_roots;

namespace {

double poly(double c3, double c2, double c1, double c0, double x) { return ((c3 * x + c2) * x + c1) * x + c0; }

}  // namespace

TEST_CASE("cubic with known roots") {
  // (x - 1)(x - 2)(x - 3)
  const auto r = real_cubic_roots(1, -6, 11, -6);
  REQUIRE(r.size() == 3);
  CHECK(r[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r[2] == doctest::Approx(3.0).epsilon(1e-12));

  // x^3 + x + 1 has one real root near -0.6823278
  const auto one = real_cubic_roots(1, 0, 1, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == doctest::Approx(-0.6823278038280193).epsilon(1e-12));
}

TEST_CASE("repeated roots are returned with multiplicity") {
  // (x - 2)^2 (x + 1)
  const auto r = real_cubic_roots(1, -3, 0, 4);
  REQUIRE(r.size() == 3);
  CHECK(r[0] == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(r[1] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(r[2] == doctest::Approx(2.0).epsilon(1e-6));

  // (x - 1.5)^3
  const auto t = real_cubic_roots(1, -4.5, 6.75, -3.375);
  REQUIRE(t.size() == 3);
  for (double x : t) CHECK(x == doctest::Approx(1.5).epsilon(1e-4));
}

TEST_CASE("degenerate leading coefficients") {
  const auto q = real_cubic_roots(0, 1, -3, 2);
  REQUIRE(q.size() == 2);
  CHECK(q[0] == doctest::Approx(1.0));
  CHECK(q[1] == doctest::Approx(2.0));
  CHECK(real_cubic_roots(0, 1, 0, 1).empty());
  const auto l = real_cubic_roots(0, 0, 2, -3);
  REQUIRE(l.size() == 1);
  CHECK(l[0] == doctest::Approx(1.5));
  CHECK(real_cubic_roots(0, 0, 0, 1).empty());
}

TEST_CASE("random cubics agree with the companion matrix") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int t = 0; t < 500; ++t) {
    const double c3 = u(rng), c2 = u(rng), c1 = u(rng), c0 = u(rng);
    if (std::abs(c3) < 1e-3) continue;
    auto ref = oracle::companion_roots(c3, c2, c1, c0);
    const auto got = real_cubic_roots(c3, c2, c1, c0);
    REQUIRE(got.size() == ref.size());
    std::sort(ref.begin(), ref.end());
    CHECK(std::is_sorted(got.begin(), got.end()));
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(std::abs(got[i] - ref[i]) <= 1e-8 * std::max(1.0, std::abs(ref[i])));
      CHECK(std::abs(poly(c3, c2, c1, c0, got[i])) < 1e-9 * (std::abs(c3) + std::abs(c2) + std::abs(c1) + std::abs(c0)) *
                                                          std::max(1.0, std::pow(std::abs(got[i]), 3)));
    }
  }
}

TEST_CASE("x-update shaped cubic: b s^3 + a s - |v| = 0") {
  // One positive root for a, b > 0.
  for (double a : {0.1, 1.0, 500.0}) {
    for (double b : {1e-3, 1.0, 50.0}) {
      const auto r = real_cubic_roots(b, 0, a, -2.5);
      REQUIRE(r.size() == 1);
      CHECK(r[0] > 0.0);
      CHECK(std::abs(poly(b, 0, a, -2.5, r[0])) < 1e-10);
    }
  }
}
