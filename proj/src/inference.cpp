#include "setinf/inference.hpp"

#include "setinf/errors.hpp"
#include "setinf/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace setinf {

Mat covariance_from_scores(const Mat& scores, double inflation) {
  if (scores.rows() == 0) throw DomainError("covariance: no observations");
  const Eigen::RowVectorXd mean = scores.colwise().mean();
  const Mat centered = scores.rowwise() - mean;
  Mat s = centered.transpose() * centered / static_cast<double>(scores.rows());
  s = 0.5 * (s + s.transpose());
  return inflation * s;
}

CovEstimates covariance_hat(const Model& model, const Vec& theta, const Dataset& data,
                            const CcpEstimate& p_hat, ScoreMethod method,
                            const SmoothingConfig& cfg) {
  const Mat s = observation_scores(model, theta, data, p_hat, method, cfg);
  const double infl = method == ScoreMethod::Smoothed ? 1.0 + 1.0 / cfg.R : 1.0;
  CovEstimates out;
  out.sigma_hat = covariance_from_scores(s, infl);
  out.psi_hat = out.sigma_hat.diagonal();
  return out;
}

CovEstimates regularize(const Mat& sigma_hat, double epsilon) {
  if (sigma_hat.rows() != sigma_hat.cols() || sigma_hat.rows() == 0) {
    throw DomainError("regularize: covariance must be a nonempty square matrix");
  }
  if (!(epsilon >= 0.0)) throw DomainError("regularize: epsilon must be nonnegative");
  CovEstimates c;
  c.sigma_hat = sigma_hat;
  c.epsilon = epsilon;
  c.psi_hat = sigma_hat.diagonal();
  for (Eigen::Index j = 0; j < c.psi_hat.size(); ++j) {
    if (!(c.psi_hat[j] > 0.0)) {
      throw DomainError("regularize: score coordinate " + std::to_string(j) +
                        " has zero variance (singular direction)");
    }
  }
  const Vec inv_sd = c.psi_hat.cwiseSqrt().cwiseInverse();
  c.xi_hat = inv_sd.asDiagonal() * sigma_hat * inv_sd.asDiagonal();
  const double det = c.xi_hat.determinant();
  c.sigma_tilde = sigma_hat;
  c.sigma_tilde.diagonal() += std::max(epsilon - det, 0.0) * c.psi_hat;
  return c;
}

TestOutcome rao_from_scores(const Mat& scores, double epsilon, double alpha, double inflation) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  const auto n = static_cast<std::size_t>(scores.rows());
  const auto d = static_cast<int>(scores.cols());
  if (n < static_cast<std::size_t>(d) + 1) {
    throw DomainError("rao statistic: need at least d_theta + 1 observations");
  }
  TestOutcome t;
  t.n = n;
  t.df = d;
  t.critical = chi2_quantile(d, 1.0 - alpha);
  t.sbar = scores.colwise().mean().transpose();
  const CovEstimates c = regularize(covariance_from_scores(scores, inflation), epsilon);
  const Eigen::LLT<Mat> llt(c.sigma_tilde);
  if (llt.info() != Eigen::Success) {
    throw NumericError("rao statistic: regularized covariance is not positive definite");
  }
  const Vec z = std::sqrt(static_cast<double>(n)) * t.sbar;
  t.t_n = std::max(0.0, z.dot(llt.solve(z)));
  if (!std::isfinite(t.t_n)) throw NumericError("rao statistic: non-finite value");
  t.reject = t.t_n > t.critical;
  return t;
}

TestOutcome rao_statistic(const Model& model, const Vec& theta, const Dataset& data,
                          const CcpEstimate& p_hat, double epsilon, double alpha,
                          ScoreMethod method, const SmoothingConfig& cfg) {
  const Mat s = observation_scores(model, theta, data, p_hat, method, cfg);
  const double infl = method == ScoreMethod::Smoothed ? 1.0 + 1.0 / cfg.R : 1.0;
  return rao_from_scores(s, epsilon, alpha, infl);
}

std::size_t ConfidenceSet::accepted_count() const {
  return static_cast<std::size_t>(std::count(accepted.begin(), accepted.end(), 1));
}

std::vector<Vec> box_grid(const Vec& lo, const Vec& hi, const std::vector<int>& counts) {
  const auto d = lo.size();
  if (hi.size() != d || static_cast<Eigen::Index>(counts.size()) != d) {
    throw ConfigError("grid: bounds and counts must have equal length");
  }
  std::size_t total = 1;
  for (int c : counts) {
    if (c < 1) throw ConfigError("grid: counts must be positive");
    total *= static_cast<std::size_t>(c);
  }
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!(lo[j] <= hi[j])) throw ConfigError("grid: lower bound exceeds upper bound");
  }
  std::vector<Vec> out;
  out.reserve(total);
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (std::size_t t = 0; t < total; ++t) {
    Vec v(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      const int c = counts[static_cast<std::size_t>(j)];
      v[j] = c == 1 ? lo[j] : lo[j] + (hi[j] - lo[j]) * idx[static_cast<std::size_t>(j)] / (c - 1);
    }
    out.push_back(v);
    for (auto j = static_cast<std::ptrdiff_t>(d) - 1; j >= 0; --j) {
      auto& k = idx[static_cast<std::size_t>(j)];
      if (++k < counts[static_cast<std::size_t>(j)]) break;
      k = 0;
    }
  }
  return out;
}

ConfidenceSet confidence_set(const Model& model, const std::vector<Vec>& grid,
                             const Dataset& data, const CcpEstimate& p_hat, double alpha,
                             double epsilon, ScoreMethod method, const SmoothingConfig& cfg) {
  if (grid.empty()) throw ConfigError("confidence set: empty grid");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
  ConfidenceSet cs;
  cs.grid = grid;
  cs.alpha = alpha;
  cs.epsilon = epsilon;
  cs.critical = chi2_quantile(model.dim(), 1.0 - alpha);
  cs.accepted.assign(grid.size(), 0);
  cs.statistics.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
  cs.errors.assign(grid.size(), "");
  parallel_for(grid.size(), [&](std::size_t i) {
    try {
      const TestOutcome t = rao_statistic(model, grid[i], data, p_hat, epsilon, alpha, method, cfg);
      cs.statistics[i] = t.t_n;
      cs.accepted[i] = t.t_n <= cs.critical ? 1 : 0;
    } catch (const Error& e) {
      cs.errors[i] = e.what();
    }
  });
  return cs;
}

std::vector<Vec> PseudoTrueSet::points() const {
  std::vector<Vec> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (selected[i]) out.push_back(grid[i]);
  }
  return out;
}

PseudoTrueSet pseudo_true_grid(const Model& model, const std::vector<Vec>& grid,
                               const Population& pop, double tol) {
  PseudoTrueSet out;
  out.grid = grid;
  out.divergence.assign(grid.size(), std::numeric_limits<double>::infinity());
  parallel_for(grid.size(), [&](std::size_t i) {
    try {
      out.divergence[i] = expected_kl(model, grid[i], pop);
    } catch (const Error&) {
      // left at +inf
    }
  });
  out.min_divergence = *std::min_element(out.divergence.begin(), out.divergence.end());
  if (!std::isfinite(out.min_divergence)) {
    throw NumericError("pseudo_true_grid: projection failed at every grid point");
  }
  out.tol = tol >= 0.0 ? tol : 1e-8 + 1e-6 * std::fabs(out.min_divergence);
  out.selected.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.selected[i] = out.divergence[i] <= out.min_divergence + out.tol ? 1 : 0;
  }
  return out;
}

std::vector<Vec> sharp_set_grid(const Model& model, const std::vector<Vec>& grid,
                                const Population& pop) {
  std::vector<char> ok(grid.size(), 0);
  parallel_for(grid.size(), [&](std::size_t i) {
    for (std::size_t k = 0; k < pop.size(); ++k) {
      const ConstraintSet cs = build_constraints(model, grid[i], pop.x[k]);
      if (max_violation(cs, pop.pmf[k]) > 1e-12) return;
    }
    ok[i] = 1;
  });
  std::vector<Vec> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (ok[i]) out.push_back(grid[i]);
  }
  return out;
}

std::pair<double, double> counterfactual_ci(const ConfidenceSet& cs,
                                            const std::function<double(const Vec&)>& functional) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < cs.grid.size(); ++i) {
    if (!cs.accepted[i]) continue;
    const double v = functional(cs.grid[i]);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo > hi) throw DomainError("counterfactual interval: the confidence set is empty");
  return {lo, hi};
}

std::function<double(const Vec&)> entry_probability_functional(const EntryProbit& model,
                                                               int player, const Vec& x, int d) {
  if (player != 1 && player != 2) throw ConfigError("functional: player must be 1 or 2");
  if (d != 0 && d != 1) throw ConfigError("functional: rival entry indicator must be 0 or 1");
  return [&model, player, x, d](const Vec& theta) {
    const int id = player == 1 ? model.i_delta1() : model.i_delta2();
    return normal_cdf(model.index(player, theta, x) + theta[id] * d);
  };
}

}  // namespace setinf
