#pragma once

#include "setinf/numerics.hpp"
#include "setinf/randomset.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace setinf {

struct Dataset {
  OutcomeSpace space;
  std::vector<int> y;  // outcome indices into space
  Mat x;               // n x d_X covariates
  std::vector<std::string> covariate_names;

  std::size_t size() const { return y.size(); }
  Vec row(std::size_t i) const { return x.row(static_cast<Eigen::Index>(i)).transpose(); }
  // Throws DomainError on empty data, bad indices or non-finite covariates.
  void validate() const;
};

// CSV with a header row. The outcome column holds labels (matched against
// `space`); every other column is a covariate.
Dataset read_dataset_csv(const std::string& path, const OutcomeSpace& space,
                         const std::string& outcome_column = "y");
void write_dataset_csv(const std::string& path, const Dataset& data,
                       const std::string& outcome_column = "y");

// Numeric CSV with a header row; returns the values and the column names.
Mat read_numeric_csv(const std::string& path, std::vector<std::string>* names = nullptr);

// Maps p onto {q : sum q = 1, c <= q <= 1 - c} by a common shift followed by
// clamping (q = clamp(p - tau, c, 1 - c)). Entries already inside the band
// with unit total are left untouched.
Vec clip_renormalize(const Vec& p, double c);

class CcpEstimate {
 public:
  virtual ~CcpEstimate() = default;
  virtual std::string kind() const = 0;
  virtual int m_outcomes() const = 0;
  // Full conditional pmf at x (simplex, floor applied).
  virtual Vec pmf(const Vec& x) const = 0;
  virtual int basis_dim() const { return 0; }
  virtual double clip() const { return 0.0; }
  virtual nlohmann::json to_json() const = 0;

  double eval(int y, const Vec& x) const { return pmf(x)[y]; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 protected:
  std::vector<std::string> warnings_;
};

using CcpPtr = std::shared_ptr<const CcpEstimate>;

// Known conditional pmfs, for population-level computations and tests.
class ExactCcp : public CcpEstimate {
 public:
  ExactCcp(int m, std::function<Vec(const Vec&)> fn) : m_(m), fn_(std::move(fn)) {}
  std::string kind() const override { return "exact"; }
  int m_outcomes() const override { return m_; }
  Vec pmf(const Vec& x) const override { return fn_(x); }
  nlohmann::json to_json() const override { return {{"kind", "exact"}}; }

 private:
  int m_;
  std::function<Vec(const Vec&)> fn_;
};

class CellMeanCcp : public CcpEstimate {
 public:
  CellMeanCcp(const Dataset& data, double clip);
  std::string kind() const override { return "cell_mean"; }
  int m_outcomes() const override { return m_; }
  Vec pmf(const Vec& x) const override;
  int basis_dim() const override { return static_cast<int>(cells_.size()); }
  double clip() const override { return clip_; }
  nlohmann::json to_json() const override;

  // Raw relative frequencies before clipping; throws for unseen cells.
  Vec raw(const Vec& x) const;

 private:
  using Key = std::vector<double>;
  int m_ = 0;
  double clip_ = 0.0;
  std::map<Key, Vec> cells_;  // counts
};

// Cox-de Boor B-spline basis on [0, 1] with clamped end knots.
class BSplineBasis1D {
 public:
  BSplineBasis1D(int degree, std::vector<double> interior_knots);
  int size() const { return static_cast<int>(interior_.size()) + degree_ + 1; }
  int degree() const { return degree_; }
  const std::vector<double>& interior_knots() const { return interior_; }
  // All basis values at u in [0, 1].
  Vec eval(double u) const;

 private:
  int degree_;
  std::vector<double> interior_;
  std::vector<double> knots_;  // full clamped knot vector
};

// Tensor-product B-spline least squares on covariates affinely mapped to
// [0,1]^d.
class TensorBSpline {
 public:
  TensorBSpline(std::vector<BSplineBasis1D> bases, Vec lo, Vec hi);

  int size() const;
  int dim() const { return static_cast<int>(bases_.size()); }
  Vec basis(const Vec& x) const;  // x in original units
  Mat design(const Mat& x) const;

  // Least-squares coefficients for each column of y (n x r). Uses the
  // normal equations, or a pseudo-inverse when cond(B'B) > 1e12.
  void fit(const Mat& x, const Mat& y);
  Vec predict(const Vec& x) const { return coef_.transpose() * basis(x); }
  const Mat& coefficients() const { return coef_; }
  bool used_pseudo_inverse() const { return pinv_; }
  nlohmann::json to_json() const;

 private:
  std::vector<BSplineBasis1D> bases_;
  Vec lo_, hi_;
  Mat coef_;
  bool pinv_ = false;
};

struct CcpConfig {
  std::string kind = "auto";  // auto | cell_mean | bspline
  int degree = 3;
  // Interior knots per continuous dimension; empty picks them from
  // default_basis_dim.
  std::vector<int> knots;
  double clip = 1e-3;
  // Columns treated as discrete; empty means detect columns with at most
  // ten distinct values.
  std::vector<int> discrete_columns;
  bool detect_discrete = true;
  double alpha_smooth = 2.0;
  double kappa0 = 1.0;
};

CcpConfig ccp_config_from_json(const nlohmann::json& j);

// Series estimator. Discrete columns stratify the fit; strata with fewer
// than 5K observations use the pooled fit instead.
class BSplineCcp : public CcpEstimate {
 public:
  BSplineCcp(const Dataset& data, const CcpConfig& cfg);
  std::string kind() const override { return "bspline"; }
  int m_outcomes() const override { return m_; }
  Vec pmf(const Vec& x) const override;
  int basis_dim() const override { return basis_dim_; }
  double clip() const override { return clip_; }
  nlohmann::json to_json() const override;

 private:
  using Key = std::vector<double>;
  int m_ = 0;
  double clip_ = 0.0;
  int basis_dim_ = 0;
  std::vector<int> discrete_, continuous_;
  std::vector<TensorBSpline> fits_;
  std::map<Key, std::size_t> stratum_;  // discrete cell -> index into fits_
  std::size_t pooled_ = 0;
  Vec continuous_part(const Vec& x) const;
};

CcpPtr fit_cell_mean(const Dataset& data, double clip = 1e-3);
CcpPtr fit_bspline(const Dataset& data, int degree, const std::vector<int>& knots_per_dim,
                   double clip = 1e-3);
// Dispatches on cfg.kind; "auto" uses cell means when every covariate is
// discrete and the series estimator otherwise.
CcpPtr fit_ccp(const Dataset& data, const CcpConfig& cfg);

// Scalar rate rule K = round(kappa0 (n / ln n)^{d / (2 alpha + d)}).
int default_basis_dim(int n, int d_x, double alpha_smooth = 2.0, double kappa0 = 1.0);
// Interior knots per dimension for the tensor product closest to K:
// max(J + 1, round(K^{1/d})) basis functions per dimension.
int default_interior_knots(int k_total, int d_x, int degree);

// Columns with at most `max_levels` distinct values.
std::vector<int> detect_discrete_columns(const Mat& x, int max_levels = 10);

}  // namespace setinf
