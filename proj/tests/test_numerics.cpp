#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "setinf/errors.hpp"
#include "setinf/models.hpp"
#include "setinf/numerics.hpp"

#include <cmath>
#include <limits>
#include <numbers>

using namespace setinf;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("standard normal cdf") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal_cdf(10.0) >= 1.0 - 1e-20);
  CHECK(normal_cdf(1.959964) == doctest::Approx(0.975).epsilon(1e-7));
  CHECK(normal_cdf(-1.959964) == doctest::Approx(0.025).epsilon(1e-6));
  CHECK_THROWS_AS(normal_cdf(-kInf), DomainError);
}

TEST_CASE("bivariate normal orthant identity") {
  for (double rho : {-0.9, -0.5, 0.0, 0.5, 0.9}) {
    const double expected = 0.25 + std::asin(rho) / (2.0 * std::numbers::pi);
    CHECK(std::fabs(bvn_rect(-kInf, 0.0, -kInf, 0.0, rho) - expected) <= 1e-10);
  }
  CHECK(bvn_rect(-kInf, 0.0, -kInf, 0.0, 0.0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(bvn_rect(-kInf, kInf, -kInf, kInf, 0.3) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("bivariate normal cdf against independence and limits") {
  CHECK(bvn_cdf(0.7, -0.4, 0.0) == doctest::Approx(normal_cdf(0.7) * normal_cdf(-0.4)).epsilon(1e-14));
  CHECK(bvn_cdf(kInf, 0.3, 0.6) == doctest::Approx(normal_cdf(0.3)).epsilon(1e-14));
  CHECK(bvn_cdf(-kInf, 0.3, 0.6) == 0.0);
  // Rectangle masses of a 3x3 partition add to one.
  const double cuts[] = {-kInf, -0.3, 0.8, kInf};
  double total = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) total += bvn_rect(cuts[i], cuts[i + 1], cuts[j], cuts[j + 1], -0.45);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("bivariate normal cdf gradient matches finite differences") {
  const double h = 0.3, k = -0.6, rho = 0.4;
  const BvnGrad g = bvn_cdf_grad(h, k, rho);
  const double e = 1e-6;
  CHECK(g.dh == doctest::Approx((bvn_cdf(h + e, k, rho) - bvn_cdf(h - e, k, rho)) / (2 * e)).epsilon(1e-6));
  CHECK(g.dk == doctest::Approx((bvn_cdf(h, k + e, rho) - bvn_cdf(h, k - e, rho)) / (2 * e)).epsilon(1e-6));
  CHECK(g.drho == doctest::Approx(bvn_pdf(h, k, rho)).epsilon(1e-12));
}

TEST_CASE("checked_rho") {
  CHECK(checked_rho(0.5) == 0.5);
  CHECK_THROWS_AS(checked_rho(0.995), DomainError);
}

TEST_CASE("chi-square quantiles") {
  CHECK(std::fabs(chi2_quantile(1, 0.95) - 3.84145882) <= 1e-6);
  CHECK(std::fabs(chi2_quantile(2, 0.95) - 5.99146455) <= 1e-6);
  CHECK(chi2_quantile(6, 0.95) > chi2_quantile(6, 0.90));
  CHECK(chi2_cdf(4, chi2_quantile(4, 0.3)) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK_THROWS_AS(chi2_quantile(0, 0.5), DomainError);
  CHECK_THROWS_AS(chi2_quantile(3, 1.0), DomainError);
}

TEST_CASE("finite-difference gradient") {
  Vec t(2);
  t << 1.0, 2.0;
  const Vec g = fd_gradient([](const Vec& v) { return v.squaredNorm(); }, t);
  CHECK(std::fabs(g[0] - 2.0) <= 1e-6);
  CHECK(std::fabs(g[1] - 4.0) <= 1e-6);
  const Vec z = fd_gradient([](const Vec&) { return 3.0; }, t);
  CHECK(z.norm() == 0.0);
}

TEST_CASE("finite-difference gradient of log containment in the uniform game") {
  // nu({(1,1)} | x = 1) = (1 + delta1)(1 + delta2), delta_j = -0.5 + theta_j.
  Vec t(2);
  t << -0.2, -0.1;
  const EventMask a11 = 1u;  // outcome (1,1) is index 0
  const Vec g = fd_gradient([&](const Vec& v) { return std::log(uniform_game_nu(v, a11, 1.0)); }, t);
  CHECK(std::fabs(g[0] - 1.0 / (0.5 + t[0])) <= 1e-6);
  CHECK(std::fabs(g[1] - 1.0 / (0.5 + t[1])) <= 1e-6);
}

TEST_CASE("seeded streams are reproducible and distinct") {
  SeededRng a(42, 7), b(42, 7), c(42, 8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a();
    CHECK(va == b());
    differs = differs || va != c();
  }
  CHECK(differs);
  SeededRng u(1, 0);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = u.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::fabs(sum / n) < 0.01);
  CHECK(std::fabs(sq / n - 1.0) < 0.02);
}
