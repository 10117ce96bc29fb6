#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "setinf/errors.hpp"
#include "setinf/mc.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace setinf;

namespace {

// Covariate file with fixed rows, so every row is a cell with many draws.
std::string covariate_file(const std::string& name, const std::vector<std::pair<double, double>>& rows) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << "presence1,presence2\n";
  for (auto [a, b] : rows) out << a << ',' << b << '\n';
  return path.string();
}

Vec cell_frequencies(const Dataset& d, int m) {
  Vec f = Vec::Zero(m);
  for (int y : d.y) f[y] += 1.0;
  return f;
}

}  // namespace

TEST_CASE("calibrated parameters") {
  const Vec d2 = calibrated_theta(Design::D2);
  const double expected[] = {-0.367, 2.044, -0.066, -0.085, 0.282, 1.774, 0.251, -0.226};
  for (int i = 0; i < 8; ++i) CHECK(d2[i] == expected[i]);
  const Vec d1 = calibrated_theta(Design::D1);
  CHECK(d1.size() == 6);
  CHECK(design_model(Design::D1).dim() == 6);
  CHECK(design_model(Design::D2).dim() == 8);
  CHECK(DgpConfig{}.kappa == 0.0);
  CHECK(parse_design("D2") == Design::D2);
  CHECK_THROWS_AS(parse_design("D3"), ConfigError);
}

TEST_CASE("completed-model pmf and the selection probability") {
  const EntryProbit m = design_model(Design::D1);
  const Vec t = calibrated_theta(Design::D1);
  SeededRng rng(1, 0);
  for (int i = 0; i < 50; ++i) {
    Vec x(2);
    x << rng.uniform(), rng.uniform();
    const EtaTriple e = eta(m.regions(t, x, false));
    const Vec q0 = dgp_probs(m, t, 0.0, x);
    const Vec q1 = dgp_probs(m, t, 1.0, x);
    const Vec qh = dgp_probs(m, t, 0.5, x);
    CHECK(q0[m.idx10()] == doctest::Approx(e.eta3).epsilon(1e-14));
    CHECK(q1[m.idx10()] == doctest::Approx(e.eta2).epsilon(1e-14));
    CHECK(qh[m.idx10()] == doctest::Approx(0.5 * (e.eta2 + e.eta3)).epsilon(1e-14));
    for (double k : {0.0, 0.2, 0.7, 1.0}) {
      const Vec q = dgp_probs(m, t, k, x);
      CHECK(q.sum() == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(q.minCoeff() >= 0.0);
      CHECK(q[m.idx00()] == q0[m.idx00()]);
      CHECK(q[m.idx11()] == q0[m.idx11()]);
      CHECK(q[m.idx10()] >= e.eta3 - 1e-15);
      CHECK(q[m.idx10()] <= e.eta2 + 1e-15);
    }
  }
  CHECK_THROWS_AS(dgp_probs(m, t, 1.5, Vec::Constant(2, 0.5)), DomainError);
}

TEST_CASE("simulation is reproducible") {
  DgpConfig cfg;
  cfg.n = 300;
  cfg.seed = 5;
  const Dataset a = simulate_correct(cfg);
  const Dataset b = simulate_correct(cfg);
  CHECK(a.y == b.y);
  CHECK(a.x == b.x);
  CHECK(simulate_correct(cfg, 1).y != a.y);
  cfg.gamma = -0.4;
  CHECK(simulate_misspecified(cfg).y == simulate_misspecified(cfg).y);
  cfg.gamma = 0.3;
  CHECK_THROWS_AS(simulate(cfg), ConfigError);
}

TEST_CASE("empirical pmf converges to the dgp pmf") {
  DgpConfig cfg;
  cfg.covariate_file = covariate_file("setinf_mc_cells.csv", {{0.2, 0.7}, {0.9, 0.4}});
  cfg.kappa = 0.4;
  cfg.n = 8000;
  const Dataset d = simulate_correct(cfg);
  const EntryProbit m = design_model(Design::D1);
  for (const auto& [a, b] : std::vector<std::pair<double, double>>{{0.2, 0.7}, {0.9, 0.4}}) {
    Vec x(2);
    x << a, b;
    Dataset cell{d.space, {}, Mat(0, 2), {}};
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d.row(i) == x) cell.y.push_back(d.y[i]);
    }
    const double nx = static_cast<double>(cell.y.size());
    REQUIRE(nx >= 1000);
    const Vec f = cell_frequencies(cell, 4) / nx;
    const double bound = 3.0 * std::sqrt(1.0 / (4.0 * nx));
    CHECK((f - dgp_probs(m, cfg.theta(), cfg.kappa, x)).lpNorm<Eigen::Infinity>() <= bound);
  }
  std::filesystem::remove(cfg.covariate_file);
}

TEST_CASE("misspecified simulator") {
  DgpConfig cfg;
  cfg.covariate_file = covariate_file("setinf_mc_one.csv", {{0.5, 0.5}, {0.2, 0.9}});
  cfg.kappa = 0.3;
  cfg.n = 20000;
  cfg.seed = 3;
  const Vec x = Vec::Constant(2, 0.5);
  const auto at_x = [&](const Dataset& d) {
    Dataset cell{d.space, {}, Mat(0, 2), {}};
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d.row(i) == x) cell.y.push_back(d.y[i]);
    }
    return cell_frequencies(cell, 4);
  };
  const Vec a = at_x(simulate_correct(cfg));
  const Vec b = at_x(simulate_misspecified(cfg));
  // two-sample chi-square with equal sizes
  double chi2 = 0.0;
  for (int k = 0; k < 4; ++k) chi2 += (a[k] - b[k]) * (a[k] - b[k]) / (a[k] + b[k]);
  CHECK(chi2 <= chi2_quantile(3, 0.99));

  // with gamma < 0 the omitted variable pushes mass toward the monopoly outcomes
  const EntryProbit m = design_model(Design::D1);
  cfg.gamma = -0.4;
  const Vec c = at_x(simulate_misspecified(cfg));
  const double nx = c.sum();
  const double mono_a = (a[m.idx10()] + a[m.idx01()]) / a.sum();
  const double mono_c = (c[m.idx10()] + c[m.idx01()]) / nx;
  CHECK(mono_c > mono_a + 3.0 * std::sqrt(0.5 / nx));
  const CovariateSource src(cfg);
  const Vec p = misspecified_probs(m, cfg, src, x);
  CHECK((c / nx - p).lpNorm<Eigen::Infinity>() <= 3.0 * std::sqrt(0.25 / nx));
  std::filesystem::remove(cfg.covariate_file);
}

// The calibrated interactions leave almost no multiplicity mass, so the
// selection probability is recovered at stronger interactions.
TEST_CASE("completed-model maximum likelihood recovers kappa") {
  const EntryProbit m = design_model(Design::D1);
  Vec t0 = calibrated_theta(Design::D1);
  t0[m.i_delta1()] = -1.0;
  t0[m.i_delta2()] = -1.0;
  DgpConfig cfg;
  cfg.theta0 = t0;
  cfg.kappa = 0.3;
  cfg.n = 50000;
  cfg.seed = 17;
  const Dataset d = simulate_correct(cfg);
  Vec init = t0;
  init[m.i_delta1()] = -0.6;
  init[m.i_delta2()] = -0.6;
  const MleResult r = mle_completed(m, d, init);
  CHECK(r.converged);
  CHECK(std::fabs(r.kappa - 0.3) <= 0.05);
  CHECK(r.loglik >= completed_loglik(m, d, t0, 0.3));
  CHECK(r.loglik == doctest::Approx(completed_loglik(m, d, r.theta, r.kappa)).epsilon(1e-12));
  CHECK_THROWS_AS(mle_completed(m, simulate_correct(DgpConfig{Design::D1, {}, 0.0, 0.0, 20}), init), DomainError);
}

TEST_CASE("uniform game design") {
  const UniformArc a0 = uniform_game_arc(0.0);
  CHECK(a0.p11 == doctest::Approx(0.09).epsilon(1e-14));
  const Population p = uniform_game_population(0.1);
  CHECK(p.size() == 2);
  for (const Vec& q : p.pmf) CHECK(q.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(uniform_game_pmf(1.5, 1.0), DomainError);
  SeededRng rng(4, 0);
  const Dataset d = simulate_population(p, UniformEntry().outcomes(), 400, rng);
  CHECK(d.size() == 400);
}

TEST_CASE("rank and distribution helpers") {
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman({0, 0, 1, 2}, {0, 0.1, 0.5, 0.9}) > 0.9);
  CHECK_THROWS_AS(spearman({1}, {1}), DomainError);

  // exact chi-square(2) quantiles at (i - 0.5)/n give a KS distance of 0.5/n
  std::vector<double> s;
  const int n = 200;
  for (int i = 1; i <= n; ++i) s.push_back(chi2_quantile(2, (i - 0.5) / n));
  CHECK(ks_chi2(s, 2) == doctest::Approx(0.5 / n).epsilon(1e-6));
  std::vector<double> shifted(s);
  for (double& v : shifted) v += 3.0;
  CHECK(ks_chi2(shifted, 2) > 0.4);
}

TEST_CASE("two-replication experiment") {
  ExperimentConfig e;
  e.dgp.n = 500;
  e.reps = 2;
  e.h_grid = {0.0, 4.0};
  const RejectionTable t = size_power_experiment(e);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0].reps + t.rows[0].failures == 2);
  CHECK(t.critical == doctest::Approx(chi2_quantile(6, 0.95)));
  CHECK(t.statistics.size() == 2);
  CHECK(t.theta_star == calibrated_theta(Design::D1));
  // h = 4 pushes delta past the upper bound at this n, so it fails honestly
  CHECK(t.rows[1].failures == 2);
  CHECK_FALSE(t.failure_messages.empty());

  const ExperimentConfig back = experiment_from_json(to_json(e));
  CHECK(back.reps == 2);
  CHECK(back.h_grid == e.h_grid);
}
