#pragma once

#include "setinf/ccp.hpp"
#include "setinf/models.hpp"
#include "setinf/projection.hpp"
#include "setinf/score.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace setinf {

struct CovEstimates {
  Mat sigma_hat;
  Vec psi_hat;  // diagonal of sigma_hat
  Mat xi_hat;   // correlation matrix
  Mat sigma_tilde;
  double epsilon = 0.0;
};

// Centered outer-product average of score rows. `inflation` multiplies the
// result (1 + 1/R for smoothed scores).
Mat covariance_from_scores(const Mat& scores, double inflation = 1.0);

CovEstimates covariance_hat(const Model& model, const Vec& theta, const Dataset& data,
                            const CcpEstimate& p_hat, ScoreMethod method,
                            const SmoothingConfig& cfg = {});

// sigma_tilde = sigma_hat + max(epsilon - det(xi_hat), 0) psi_hat.
CovEstimates regularize(const Mat& sigma_hat, double epsilon);

struct TestOutcome {
  double t_n = 0.0;
  int df = 0;
  double critical = 0.0;
  bool reject = false;
  std::size_t n = 0;
  Vec sbar;
};

// Rao statistic from a matrix of per-observation scores (rows).
TestOutcome rao_from_scores(const Mat& scores, double epsilon, double alpha,
                            double inflation = 1.0);

TestOutcome rao_statistic(const Model& model, const Vec& theta, const Dataset& data,
                          const CcpEstimate& p_hat, double epsilon, double alpha,
                          ScoreMethod method, const SmoothingConfig& cfg = {});

struct ConfidenceSet {
  std::vector<Vec> grid;
  std::vector<char> accepted;
  std::vector<double> statistics;  // NaN where the point failed
  std::vector<std::string> errors;
  double alpha = 0.05;
  double epsilon = 0.05;
  double critical = 0.0;

  std::size_t accepted_count() const;
};

// Regular grid over [lo, hi] with counts[j] points in coordinate j (the last
// coordinate varies fastest). A count of 1 uses lo[j].
std::vector<Vec> box_grid(const Vec& lo, const Vec& hi, const std::vector<int>& counts);

ConfidenceSet confidence_set(const Model& model, const std::vector<Vec>& grid,
                             const Dataset& data, const CcpEstimate& p_hat, double alpha,
                             double epsilon, ScoreMethod method, const SmoothingConfig& cfg = {});

struct PseudoTrueSet {
  std::vector<Vec> grid;
  std::vector<double> divergence;  // +inf where the projection failed
  std::vector<char> selected;
  double min_divergence = 0.0;
  double tol = 0.0;

  std::vector<Vec> points() const;
};

// Grid points with D(theta) <= min D + tol, where D is the weighted KL from
// p0 to the model polytope. tol < 0 uses 1e-8 + 1e-6 |min D|.
PseudoTrueSet pseudo_true_grid(const Model& model, const std::vector<Vec>& grid,
                               const Population& pop, double tol = -1.0);

// Grid points where p0 itself satisfies every containment restriction at
// every support point (within 1e-12).
std::vector<Vec> sharp_set_grid(const Model& model, const std::vector<Vec>& grid,
                                const Population& pop);

// [min, max] of the functional over the accepted points; throws DomainError
// when nothing was accepted.
std::pair<double, double> counterfactual_ci(const ConfidenceSet& cs,
                                            const std::function<double(const Vec&)>& functional);

// Phi(x_j'beta_j + delta_j d) for player j in {1, 2}.
std::function<double(const Vec&)> entry_probability_functional(const EntryProbit& model,
                                                               int player, const Vec& x, int d);

}  // namespace setinf
