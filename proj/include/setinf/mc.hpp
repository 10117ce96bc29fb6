#pragma once

#include "setinf/ccp.hpp"
#include "setinf/inference.hpp"
#include "setinf/models.hpp"
#include "setinf/projection.hpp"
#include "setinf/score.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace setinf {

// Design D1: covariates (presence_1, presence_2). Design D2 adds a size
// covariate shared by both players.
enum class Design { D1, D2 };
Design parse_design(const std::string& s);
std::string to_string(Design d);

// Probit entry game with rho = 0 for the design; theta ordering is
// (beta1..., delta1, beta2..., delta2).
EntryProbit design_model(Design d);
// Completed-model estimates used as the default calibration.
Vec calibrated_theta(Design d);
int design_covariates(Design d);

struct DgpConfig {
  Design design = Design::D1;
  Vec theta0;          // empty = calibrated_theta(design)
  double kappa = 0.0;  // probability of selecting (1,0) under multiplicity
  double gamma = 0.0;  // interaction shift when the omitted x* equals 1
  int n = 2000;
  std::string covariate_file;  // CSV of covariates; empty = uniform on [0,1]^d
  std::uint64_t seed = 1;

  Vec theta() const;
  void validate() const;
};

// Completed-model pmf: q(00) = F(S00), q(11) = F(S11),
// q(10) = eta3 + kappa (eta2 - eta3), q(01) the remainder.
Vec dgp_probs(const EntryProbit& model, const Vec& theta, double kappa, const Vec& x);

// Covariate source shared by the simulators: resampled rows of a file or
// i.i.d. uniform draws. Moments of the two presence covariates feed the
// omitted-variable probability.
class CovariateSource {
 public:
  explicit CovariateSource(const DgpConfig& cfg);
  Vec draw(SeededRng& rng) const;
  double mean(int j) const { return mu_[j]; }
  double sd(int j) const { return sd_[j]; }
  int dim() const { return dim_; }
  bool synthetic() const { return pool_.rows() == 0; }

 private:
  int dim_ = 0;
  Mat pool_;
  Vec mu_, sd_;
};

// P(x* = 1 | x) = Phi((x1 - mu1)/sd1 + (x2 - mu2)/sd2).
double omitted_probability(const CovariateSource& src, const Vec& x);

// `stream` selects the rng substream (one per replication).
Dataset simulate_correct(const DgpConfig& cfg, std::uint64_t stream = 0);
Dataset simulate_misspecified(const DgpConfig& cfg, std::uint64_t stream = 0);
// Dispatches on cfg.gamma.
Dataset simulate(const DgpConfig& cfg, std::uint64_t stream = 0);

// Exact conditional pmf of the misspecified DGP at x (x* integrated out).
Vec misspecified_probs(const EntryProbit& model, const DgpConfig& cfg, const CovariateSource& src,
                       const Vec& x);

// Gauss-Legendre tensor grid on [0,1]^d carrying the exact pmfs of the DGP.
// Only available for the synthetic covariate source.
Population dgp_population(const DgpConfig& cfg, int nodes_per_dim = 0);

// Point of the pseudo-true set found by maximizing the expected profiled
// log-likelihood from `init` (quasi-Newton with analytic gradient).
Vec locate_pseudo_true(const EntryProbit& model, const Population& pop, const Vec& init);

struct MleResult {
  Vec theta;
  double kappa = 0.0;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Maximizes sum_i ln q_{theta,kappa}(y_i | x_i) with kappa profiled out on
// [0,1] and a simplex search over theta.
MleResult mle_completed(const EntryProbit& model, const Dataset& data, const Vec& init,
                        int max_iter = 5000);
double completed_loglik(const EntryProbit& model, const Dataset& data, const Vec& theta,
                        double kappa);

// Two-point uniform-shock game. theta0 = (-0.2, -0.2); selection always
// (0,1) when x = 1; gamma mixes toward the x = 0 distribution.
Vec uniform_game_pmf(double gamma, double x);
Population uniform_game_population(double gamma);
struct UniformArc {
  double p11 = 0.0;            // vartheta1 * vartheta2 on the arc
  double vartheta1_lo = 0.0;   // feasible range of vartheta1 = theta1 + 0.5
  double vartheta1_hi = 0.0;
};
UniformArc uniform_game_arc(double gamma);

// Choice-set design with two covariate values a_lo, a_hi (A z), equal weights.
Population choiceset_population(double gamma, double a_lo = 0.4, double a_hi = 0.8,
                                double theta0 = 1.0);

// Draws n observations from a population with discrete support.
Dataset simulate_population(const Population& pop, const OutcomeSpace& space, std::size_t n,
                            SeededRng& rng);

struct RejectionRow {
  double gamma = 0.0;
  double h = 0.0;
  double rejection_rate = 0.0;
  int reps = 0;      // replications that produced a statistic
  int failures = 0;  // replications excluded (errors or theta outside the box)
  double mc_se = 0.0;
};

struct StageTimes {
  double simulate = 0.0;
  double ccp = 0.0;
  double statistic = 0.0;
  double critical = 0.0;
};

struct RejectionTable {
  std::vector<RejectionRow> rows;
  Vec theta_star;
  double critical = 0.0;
  // statistics[r][k] = T_n of replication r at h_grid[k] (NaN if failed).
  std::vector<std::vector<double>> statistics;
  std::vector<std::string> failure_messages;  // first few, for the manifest
  StageTimes seconds;
};

struct ExperimentConfig {
  DgpConfig dgp;
  Vec theta_star;  // empty: theta0 when gamma = 0, else located pseudo-true
  double alpha = 0.05;
  double epsilon = 0.05;
  int reps = 200;
  std::vector<double> h_grid{0.0};
  Vec direction;  // empty: +1 on both interaction coordinates
  CcpConfig ccp;
  ScoreMethod method = ScoreMethod::ClosedForm;
  SmoothingConfig smoothing;
};

ExperimentConfig experiment_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);

// theta_h = theta_star + h direction / sqrt(n); one dataset per replication
// is reused across the h grid.
RejectionTable size_power_experiment(const ExperimentConfig& cfg);

// Generic harness: `draw(r)` returns the dataset of replication r.
RejectionTable run_rejection_experiment(const Model& model,
                                        const std::function<Dataset(std::size_t)>& draw,
                                        const Vec& theta_star, const std::vector<double>& h_grid,
                                        const Vec& direction, int reps, std::size_t n,
                                        double alpha, double epsilon, const CcpConfig& ccp,
                                        ScoreMethod method, const SmoothingConfig& smoothing,
                                        double gamma = 0.0);

// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& a, const std::vector<double>& b);
// sup |F_n - F| against the chi-square(df) cdf.
double ks_chi2(std::vector<double> sample, int df);

}  // namespace setinf
