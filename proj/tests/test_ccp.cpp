#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "setinf/ccp.hpp"
#include "setinf/errors.hpp"

#include <cmath>
#include <filesystem>

using namespace setinf;

namespace {

OutcomeSpace binary() { return OutcomeSpace({"no", "yes"}); }

Dataset discrete_sample() {
  Dataset d{binary(), {1, 1, 1, 0, 0, 1}, Mat(6, 1), {"x"}};
  d.x << 0, 0, 0, 0, 1, 2;
  return d;
}

// y = yes with probability 0.3 + 0.4 x on x ~ U[0, 1].
Dataset linear_sample(int n, std::uint64_t seed) {
  SeededRng rng(seed, 0);
  Dataset d{binary(), std::vector<int>(static_cast<std::size_t>(n)), Mat(n, 1), {"x"}};
  for (int i = 0; i < n; ++i) {
    const double x = rng.uniform();
    d.x(i, 0) = x;
    d.y[static_cast<std::size_t>(i)] = rng.uniform() < 0.3 + 0.4 * x ? 1 : 0;
  }
  return d;
}

}  // namespace

TEST_CASE("cell means") {
  const Dataset d = discrete_sample();
  const CellMeanCcp c(d, 1e-3);
  const Vec x0 = Vec::Constant(1, 0.0);
  CHECK(c.raw(x0)[1] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(c.pmf(x0)[1] == doctest::Approx(0.75).epsilon(1e-15));
  // a cell with a single observation sits on the floor after clipping
  const Vec x2 = Vec::Constant(1, 2.0);
  CHECK(c.raw(x2)[1] == 1.0);
  CHECK(c.pmf(x2)[1] == doctest::Approx(1.0 - 1e-3).epsilon(1e-14));
  CHECK(c.pmf(x2)[0] == doctest::Approx(1e-3).epsilon(1e-14));
  CHECK(c.basis_dim() == 3);
  CHECK_THROWS_AS(c.raw(Vec::Constant(1, 5.0)), DomainError);

  // row order does not matter
  Dataset r = d;
  std::reverse(r.y.begin(), r.y.end());
  r.x.col(0) = d.x.col(0).reverse().eval();
  const CellMeanCcp c2(r, 1e-3);
  for (double x : {0.0, 1.0, 2.0}) {
    CHECK((c2.pmf(Vec::Constant(1, x)) - c.pmf(Vec::Constant(1, x))).norm() == 0.0);
  }
}

TEST_CASE("clip_renormalize") {
  Vec p(3);
  p << 0.2, 0.3, 0.5;
  CHECK((clip_renormalize(p, 1e-3) - p).norm() == 0.0);
  p << 1.0, 0.0, 0.0;
  const Vec q = clip_renormalize(p, 0.01);
  CHECK(q.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(q[1] == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(q[0] == doctest::Approx(0.98).epsilon(1e-12));
  // arbitrary input, including negative entries from a linear-probability fit
  SeededRng rng(2, 0);
  for (int i = 0; i < 200; ++i) {
    Vec v(4);
    for (int k = 0; k < 4; ++k) v[k] = -0.3 + 1.2 * rng.uniform();
    const Vec w = clip_renormalize(v, 1e-3);
    CHECK(std::fabs(w.sum() - 1.0) <= 1e-12);
    CHECK(w.minCoeff() >= 1e-3 - 1e-15);
  }
  CHECK_THROWS_AS(clip_renormalize(p, 0.4), DomainError);
}

TEST_CASE("B-spline basis") {
  const BSplineBasis1D b(3, {0.25, 0.5, 0.75});
  CHECK(b.size() == 7);
  for (double u = 0.0; u <= 1.0; u += 0.01) {
    const Vec v = b.eval(u);
    CHECK(v.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(v.minCoeff() >= -1e-15);
  }
  CHECK(b.eval(1.0)[6] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tensor spline reproduces cubic polynomials") {
  SeededRng rng(3, 0);
  const int n = 400;
  Mat x(n, 2), y(n, 1);
  auto f = [](double a, double b) { return 1.0 - 2.0 * a + a * a * a + 0.5 * a * b * b; };
  for (int i = 0; i < n; ++i) {
    x(i, 0) = rng.uniform();
    x(i, 1) = 2.0 * rng.uniform();
    y(i, 0) = f(x(i, 0), x(i, 1));
  }
  Vec lo(2), hi(2);
  lo << 0.0, 0.0;
  hi << 1.0, 2.0;
  TensorBSpline t({BSplineBasis1D(3, {0.5}), BSplineBasis1D(3, {0.3, 0.6})}, lo, hi);
  CHECK(t.size() == 5 * 6);
  t.fit(x, y);
  for (int k = 0; k < 20; ++k) {
    Vec p(2);
    p << rng.uniform(), 2.0 * rng.uniform();
    CHECK(std::fabs(t.predict(p)[0] - f(p[0], p[1])) <= 1e-8);
  }
  Vec out(2);
  out << 1.5, 0.5;
  CHECK_THROWS_AS(t.basis(out), DomainError);
}

TEST_CASE("series estimator recovers a constant and a linear ccp") {
  SeededRng rng(4, 0);
  const int n = 5000;
  Dataset c{OutcomeSpace({"a", "b", "c"}), std::vector<int>(n), Mat(n, 1), {"x"}};
  for (int i = 0; i < n; ++i) {
    c.x(i, 0) = rng.uniform();
    const double u = rng.uniform();
    c.y[static_cast<std::size_t>(i)] = u < 0.2 ? 0 : (u < 0.5 ? 1 : 2);
  }
  const CcpPtr fc = fit_bspline(c, 3, {1});
  const Vec truth = (Vec(3) << 0.2, 0.3, 0.5).finished();
  for (double x : {0.1, 0.5, 0.9}) {
    CHECK((fc->pmf(Vec::Constant(1, x)) - truth).lpNorm<Eigen::Infinity>() <= 3.0 * std::sqrt(3.0 / n));
  }

  const Dataset d = linear_sample(100000, 5);
  const CcpPtr f = fit_bspline(d, 3, {5});
  double worst = 0.0;
  for (double x = 0.01; x <= 0.99; x += 0.01) {
    worst = std::max(worst, std::fabs(f->eval(1, Vec::Constant(1, x)) - (0.3 + 0.4 * x)));
  }
  CHECK(worst <= 0.02);
  CHECK(f->basis_dim() == 9);
  CHECK_THROWS_AS(f->pmf(Vec::Constant(1, 1.5)), DomainError);
}

TEST_CASE("basis dimension rule") {
  CHECK(default_basis_dim(7017, 2) == 9);
  int prev = 0;
  for (int n = 50; n < 200000; n = n * 3 / 2) {
    const int k = default_basis_dim(n, 2);
    CHECK(k >= prev);
    prev = k;
  }
  CHECK(default_basis_dim(1000, 0) == 0);
  CHECK_THROWS_AS(default_basis_dim(20, 1), DomainError);
  CHECK(default_interior_knots(16, 2, 3) == 0);
  CHECK(default_interior_knots(36, 2, 3) == 2);
}

TEST_CASE("automatic choice and discrete detection") {
  const Dataset d = discrete_sample();
  CcpConfig cfg;
  CHECK(fit_ccp(d, cfg)->kind() == "cell_mean");

  const Dataset lin = linear_sample(2000, 6);
  CHECK(detect_discrete_columns(lin.x).empty());
  CHECK(detect_discrete_columns(d.x) == std::vector<int>{0});
  CHECK(fit_ccp(lin, cfg)->kind() == "bspline");

  CHECK_THROWS_AS(ccp_config_from_json({{"kind", "kernel"}}), ConfigError);
  CcpConfig series;
  series.kind = "bspline";
  CHECK_THROWS_AS(fit_ccp(d, series), ConfigError);
}

TEST_CASE("thin strata fall back to the pooled fit") {
  Dataset d = linear_sample(3000, 7);
  Mat x(3000, 2);
  x.col(0) = d.x.col(0);
  for (int i = 0; i < 3000; ++i) x(i, 1) = i < 20 ? 1.0 : 0.0;
  d.x = x;
  d.covariate_names = {"x", "g"};
  CcpConfig cfg;
  cfg.kind = "bspline";
  cfg.knots = {3};
  const CcpPtr f = fit_ccp(d, cfg);
  REQUIRE(f->warnings().size() == 1);
  Vec p(2);
  p << 0.4, 1.0;
  CHECK(f->pmf(p).sum() == doctest::Approx(1.0).epsilon(1e-12));
  p[1] = 3.0;
  CHECK_THROWS_AS(f->pmf(p), DomainError);
}

TEST_CASE("dataset csv round trip") {
  const auto path = std::filesystem::temp_directory_path() / "setinf_ccp_roundtrip.csv";
  Dataset d = linear_sample(50, 8);
  write_dataset_csv(path.string(), d);
  const Dataset back = read_dataset_csv(path.string(), binary());
  CHECK(back.y == d.y);
  CHECK((back.x - d.x).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(back.covariate_names == d.covariate_names);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_dataset_csv(path.string(), binary()), IoError);
}
