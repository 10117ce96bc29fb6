#include "setinf/ccp.hpp"

#include "setinf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace setinf {

void Dataset::validate() const {
  if (y.empty()) throw DomainError("dataset is empty");
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw DomainError("dataset: covariate rows do not match outcomes");
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || y[i] >= space.size()) {
      throw DomainError("dataset: invalid outcome index at row " + std::to_string(i));
    }
  }
  if (!x.allFinite()) throw DomainError("dataset: non-finite covariate");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

double parse_double(const std::string& s, std::size_t line) {
  std::istringstream in(s);
  in.imbue(std::locale::classic());
  double v = 0.0;
  in >> v;
  if (in.fail() || !(in >> std::ws).eof()) {
    throw IoError("line " + std::to_string(line) + ": cannot parse number '" + s + "'");
  }
  return v;
}

}  // namespace

Dataset read_dataset_csv(const std::string& path, const OutcomeSpace& space,
                         const std::string& outcome_column) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": missing header");
  const auto header = split_csv_line(line);
  int ycol = -1;
  Dataset d;
  d.space = space;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == outcome_column) ycol = static_cast<int>(c);
    else d.covariate_names.push_back(header[c]);
  }
  if (ycol < 0) throw IoError(path + ": no column named '" + outcome_column + "'");
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw IoError(path + ": line " + std::to_string(lineno) + " has " + std::to_string(f.size()) +
                    " fields, expected " + std::to_string(header.size()));
    }
    std::vector<double> r;
    for (std::size_t c = 0; c < f.size(); ++c) {
      if (static_cast<int>(c) == ycol) {
        try {
          d.y.push_back(space.index_of(f[c]));
        } catch (const ConfigError& e) {
          throw IoError(path + ": line " + std::to_string(lineno) + ": " + e.what());
        }
      } else {
        r.push_back(parse_double(f[c], lineno));
      }
    }
    rows.push_back(std::move(r));
  }
  d.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d.covariate_names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    }
  }
  d.validate();
  return d;
}

Mat read_numeric_csv(const std::string& path, std::vector<std::string>* names) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": missing header");
  const auto header = split_csv_line(line);
  std::vector<double> vals;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw IoError(path + ": line " + std::to_string(lineno) + " has the wrong number of fields");
    }
    for (const auto& v : f) vals.push_back(parse_double(v, lineno));
  }
  if (vals.empty()) throw IoError(path + ": no data rows");
  const auto cols = static_cast<Eigen::Index>(header.size());
  const Eigen::Index rows = static_cast<Eigen::Index>(vals.size()) / cols;
  Mat out = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      vals.data(), rows, cols);
  if (names) *names = header;
  return out;
}

void write_dataset_csv(const std::string& path, const Dataset& data,
                       const std::string& outcome_column) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out.imbue(std::locale::classic());
  out << csv_field(outcome_column);
  for (Eigen::Index c = 0; c < data.x.cols(); ++c) {
    const std::string name = static_cast<std::size_t>(c) < data.covariate_names.size()
                                 ? data.covariate_names[static_cast<std::size_t>(c)]
                                 : "x" + std::to_string(c + 1);
    out << ',' << csv_field(name);
  }
  out << '\n';
  out.precision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << csv_field(data.space.label(data.y[i]));
    for (Eigen::Index c = 0; c < data.x.cols(); ++c) out << ',' << data.x(static_cast<Eigen::Index>(i), c);
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

Vec clip_renormalize(const Vec& p, double c) {
  const auto m = p.size();
  if (!(c >= 0.0) || c * static_cast<double>(m) > 1.0) {
    throw DomainError("clip floor incompatible with the number of outcomes");
  }
  if (p.minCoeff() >= c && p.maxCoeff() <= 1.0 - c && std::fabs(p.sum() - 1.0) <= 1e-14) return p;
  auto total = [&](double tau) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) s += std::clamp(p[i] - tau, c, 1.0 - c);
    return s;
  };
  // total() is nonincreasing in tau; bracket the root and bisect.
  double lo = p.minCoeff() - 1.0;
  double hi = p.maxCoeff() + 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (total(mid) > 1.0) lo = mid;
    else hi = mid;
  }
  const double tau = 0.5 * (lo + hi);
  Vec q(m);
  for (Eigen::Index i = 0; i < m; ++i) q[i] = std::clamp(p[i] - tau, c, 1.0 - c);
  // Remove the bisection residue from an unclamped coordinate if there is one.
  const double resid = 1.0 - q.sum();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (q[i] + resid > c && q[i] + resid < 1.0 - c && q[i] > c && q[i] < 1.0 - c) {
      q[i] += resid;
      break;
    }
  }
  return q;
}

// ---------------------------------------------------------------------------

namespace {
std::vector<double> key_of(const Vec& x) { return {x.data(), x.data() + x.size()}; }
}  // namespace

CellMeanCcp::CellMeanCcp(const Dataset& data, double clip) : m_(data.space.size()), clip_(clip) {
  data.validate();
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto [it, fresh] = cells_.try_emplace(key_of(data.row(i)), Vec::Zero(m_));
    it->second[data.y[i]] += 1.0;
    if (fresh && cells_.size() > 10000) {
      throw ConfigError("cell-mean estimator: more than 10^4 distinct covariate values");
    }
  }
}

Vec CellMeanCcp::raw(const Vec& x) const {
  const auto it = cells_.find(key_of(x));
  if (it == cells_.end()) throw DomainError("cell-mean estimator: unseen covariate value");
  return it->second / it->second.sum();
}

Vec CellMeanCcp::pmf(const Vec& x) const { return clip_renormalize(raw(x), clip_); }

nlohmann::json CellMeanCcp::to_json() const {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& [k, counts] : cells_) {
    cells.push_back({{"x", k}, {"counts", std::vector<double>(counts.data(), counts.data() + counts.size())}});
  }
  return {{"kind", "cell_mean"}, {"clip", clip_}, {"cells", cells}};
}

// ---------------------------------------------------------------------------

BSplineBasis1D::BSplineBasis1D(int degree, std::vector<double> interior_knots)
    : degree_(degree), interior_(std::move(interior_knots)) {
  if (degree_ < 0) throw DomainError("spline degree must be nonnegative");
  std::sort(interior_.begin(), interior_.end());
  for (double k : interior_) {
    if (!(k > 0.0 && k < 1.0)) throw DomainError("interior knots must lie in (0,1)");
  }
  knots_.assign(static_cast<std::size_t>(degree_ + 1), 0.0);
  knots_.insert(knots_.end(), interior_.begin(), interior_.end());
  knots_.insert(knots_.end(), static_cast<std::size_t>(degree_ + 1), 1.0);
}

Vec BSplineBasis1D::eval(double u) const {
  const int nb = size();
  Vec out = Vec::Zero(nb);
  // Knot span containing u; u = 1 belongs to the last nonempty span.
  const int last = static_cast<int>(knots_.size()) - degree_ - 2;
  int span = degree_;
  while (span < last && u >= knots_[static_cast<std::size_t>(span + 1)]) ++span;
  // Triangular Cox-de Boor recursion (nonzero functions only).
  std::vector<double> n(static_cast<std::size_t>(degree_ + 1), 0.0);
  std::vector<double> left(static_cast<std::size_t>(degree_ + 1)), right(static_cast<std::size_t>(degree_ + 1));
  n[0] = 1.0;
  for (int j = 1; j <= degree_; ++j) {
    left[static_cast<std::size_t>(j)] = u - knots_[static_cast<std::size_t>(span + 1 - j)];
    right[static_cast<std::size_t>(j)] = knots_[static_cast<std::size_t>(span + j)] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double den = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
      const double tmp = den > 0.0 ? n[static_cast<std::size_t>(r)] / den : 0.0;
      n[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * tmp;
      saved = left[static_cast<std::size_t>(j - r)] * tmp;
    }
    n[static_cast<std::size_t>(j)] = saved;
  }
  for (int r = 0; r <= degree_; ++r) out[span - degree_ + r] = n[static_cast<std::size_t>(r)];
  return out;
}

TensorBSpline::TensorBSpline(std::vector<BSplineBasis1D> bases, Vec lo, Vec hi)
    : bases_(std::move(bases)), lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.size() != dim() || hi_.size() != dim()) throw DomainError("tensor spline: bad affine map");
}

int TensorBSpline::size() const {
  int k = 1;
  for (const auto& b : bases_) k *= b.size();
  return k;
}

Vec TensorBSpline::basis(const Vec& x) const {
  if (x.size() != dim()) throw DomainError("tensor spline: covariate dimension mismatch");
  Vec out = Vec::Ones(1);
  for (int d = 0; d < dim(); ++d) {
    const double width = hi_[d] - lo_[d];
    double u = width > 0.0 ? (x[d] - lo_[d]) / width : 0.5;
    if (u < -1e-9 || u > 1.0 + 1e-9) {
      throw DomainError("series estimator: covariate outside the fitted range (extrapolation)");
    }
    u = std::clamp(u, 0.0, 1.0);
    const Vec b = bases_[static_cast<std::size_t>(d)].eval(u);
    Vec next(out.size() * b.size());
    for (Eigen::Index i = 0; i < out.size(); ++i) next.segment(i * b.size(), b.size()) = out[i] * b;
    out = std::move(next);
  }
  return out;
}

Mat TensorBSpline::design(const Mat& x) const {
  Mat b(x.rows(), size());
  for (Eigen::Index i = 0; i < x.rows(); ++i) b.row(i) = basis(x.row(i).transpose()).transpose();
  return b;
}

void TensorBSpline::fit(const Mat& x, const Mat& y) {
  const int k = size();
  if (k >= x.rows()) {
    throw DomainError("series estimator: basis dimension " + std::to_string(k) +
                      " is not below the sample size " + std::to_string(x.rows()));
  }
  const Mat b = design(x);
  const Mat btb = b.transpose() * b;
  const Eigen::SelfAdjointEigenSolver<Mat> eig(btb, Eigen::EigenvaluesOnly);
  const double emax = eig.eigenvalues().maxCoeff();
  const double emin = eig.eigenvalues().minCoeff();
  pinv_ = !(emin > 0.0) || emax / emin > 1e12;
  if (pinv_) {
    coef_ = b.completeOrthogonalDecomposition().solve(y);
  } else {
    coef_ = btb.ldlt().solve(b.transpose() * y);
  }
}

nlohmann::json TensorBSpline::to_json() const {
  nlohmann::json dims = nlohmann::json::array();
  for (int d = 0; d < dim(); ++d) {
    const auto& b = bases_[static_cast<std::size_t>(d)];
    dims.push_back({{"degree", b.degree()}, {"interior_knots", b.interior_knots()}, {"lo", lo_[d]}, {"hi", hi_[d]}});
  }
  nlohmann::json coef = nlohmann::json::array();
  for (Eigen::Index r = 0; r < coef_.rows(); ++r) {
    coef.push_back(std::vector<double>(coef_.cols()));
    for (Eigen::Index c = 0; c < coef_.cols(); ++c) coef.back()[static_cast<std::size_t>(c)] = coef_(r, c);
  }
  return {{"dims", dims}, {"coefficients", coef}, {"pseudo_inverse", pinv_}};
}

// ---------------------------------------------------------------------------

std::vector<int> detect_discrete_columns(const Mat& x, int max_levels) {
  std::vector<int> out;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    std::set<double> levels;
    for (Eigen::Index i = 0; i < x.rows() && static_cast<int>(levels.size()) <= max_levels; ++i) {
      levels.insert(x(i, c));
    }
    if (static_cast<int>(levels.size()) <= max_levels) out.push_back(static_cast<int>(c));
  }
  return out;
}

int default_basis_dim(int n, int d_x, double alpha_smooth, double kappa0) {
  if (n < 50) throw DomainError("default_basis_dim requires n >= 50");
  if (d_x <= 0) return 0;
  const double rate = static_cast<double>(d_x) / (2.0 * alpha_smooth + d_x);
  const double nn = static_cast<double>(n);
  return static_cast<int>(std::lround(kappa0 * std::pow(nn / std::log(nn), rate)));
}

int default_interior_knots(int k_total, int d_x, int degree) {
  if (d_x <= 0) return 0;
  const long per_dim = std::lround(std::pow(std::max(k_total, 1), 1.0 / d_x));
  return static_cast<int>(std::max<long>(degree + 1, per_dim)) - degree - 1;
}

namespace {

std::vector<double> quantile_knots(std::vector<double> u, int count) {
  std::vector<double> knots;
  if (count <= 0) return knots;
  std::sort(u.begin(), u.end());
  for (int k = 1; k <= count; ++k) {
    const double pos = static_cast<double>(k) / (count + 1) * static_cast<double>(u.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    const double v = i + 1 < u.size() ? (1 - frac) * u[i] + frac * u[i + 1] : u.back();
    knots.push_back(v);
  }
  // Degenerate quantiles (ties, knots at the boundary) fall back to uniform.
  bool ok = true;
  for (std::size_t k = 0; k < knots.size(); ++k) {
    if (!(knots[k] > 1e-6 && knots[k] < 1 - 1e-6) || (k > 0 && knots[k] - knots[k - 1] < 1e-6)) ok = false;
  }
  if (!ok) {
    for (int k = 1; k <= count; ++k) knots[static_cast<std::size_t>(k - 1)] = static_cast<double>(k) / (count + 1);
  }
  return knots;
}

}  // namespace

CcpConfig ccp_config_from_json(const nlohmann::json& j) {
  CcpConfig c;
  try {
    c.kind = j.value("kind", c.kind);
    c.degree = j.value("degree", c.degree);
    c.knots = j.value("knots", c.knots);
    c.clip = j.value("clip", c.clip);
    if (j.contains("discrete_columns")) {
      c.discrete_columns = j.at("discrete_columns").get<std::vector<int>>();
      c.detect_discrete = false;
    }
    c.alpha_smooth = j.value("alpha_smooth", c.alpha_smooth);
    c.kappa0 = j.value("kappa0", c.kappa0);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("ccp config: ") + e.what());
  }
  if (c.kind != "auto" && c.kind != "cell_mean" && c.kind != "bspline") {
    throw ConfigError("ccp config: unknown kind '" + c.kind + "'");
  }
  return c;
}

BSplineCcp::BSplineCcp(const Dataset& data, const CcpConfig& cfg)
    : m_(data.space.size()), clip_(cfg.clip) {
  data.validate();
  const auto dx = static_cast<int>(data.x.cols());
  discrete_ = cfg.detect_discrete && cfg.discrete_columns.empty() ? detect_discrete_columns(data.x)
                                                                  : cfg.discrete_columns;
  for (int c = 0; c < dx; ++c) {
    if (std::find(discrete_.begin(), discrete_.end(), c) == discrete_.end()) continuous_.push_back(c);
  }
  const int dc = static_cast<int>(continuous_.size());
  if (dc == 0) throw ConfigError("series estimator needs at least one continuous covariate");
  std::vector<int> knots = cfg.knots;
  if (knots.empty()) {
    const int k = default_basis_dim(static_cast<int>(data.size()), dc, cfg.alpha_smooth, cfg.kappa0);
    knots.assign(static_cast<std::size_t>(dc), default_interior_knots(k, dc, cfg.degree));
  } else if (knots.size() == 1 && dc > 1) {
    knots.assign(static_cast<std::size_t>(dc), knots[0]);
  }
  if (static_cast<int>(knots.size()) != dc) throw ConfigError("ccp config: one knot count per continuous covariate");

  const auto n = static_cast<Eigen::Index>(data.size());
  Mat xc(n, dc);
  for (int d = 0; d < dc; ++d) xc.col(d) = data.x.col(continuous_[static_cast<std::size_t>(d)]);
  Mat yind = Mat::Zero(n, m_);
  for (Eigen::Index i = 0; i < n; ++i) yind(i, data.y[static_cast<std::size_t>(i)]) = 1.0;

  auto make_fit = [&](const std::vector<Eigen::Index>& rows) {
    Mat xs(static_cast<Eigen::Index>(rows.size()), dc);
    Mat ys(static_cast<Eigen::Index>(rows.size()), m_);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      xs.row(static_cast<Eigen::Index>(r)) = xc.row(rows[r]);
      ys.row(static_cast<Eigen::Index>(r)) = yind.row(rows[r]);
    }
    Vec lo = xs.colwise().minCoeff().transpose();
    Vec hi = xs.colwise().maxCoeff().transpose();
    std::vector<BSplineBasis1D> bases;
    for (int d = 0; d < dc; ++d) {
      std::vector<double> u(rows.size());
      const double w = hi[d] - lo[d];
      for (std::size_t r = 0; r < rows.size(); ++r) {
        u[r] = w > 0 ? (xs(static_cast<Eigen::Index>(r), d) - lo[d]) / w : 0.5;
      }
      bases.emplace_back(cfg.degree, quantile_knots(u, knots[static_cast<std::size_t>(d)]));
    }
    TensorBSpline fit(std::move(bases), lo, hi);
    fit.fit(xs, ys);
    return fit;
  };

  std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  fits_.push_back(make_fit(all));
  pooled_ = 0;
  basis_dim_ = fits_[0].size();

  if (!discrete_.empty()) {
    std::map<Key, std::vector<Eigen::Index>> groups;
    for (Eigen::Index i = 0; i < n; ++i) {
      Key k;
      for (int c : discrete_) k.push_back(data.x(i, c));
      groups[k].push_back(i);
    }
    for (const auto& [k, rows] : groups) {
      if (static_cast<int>(rows.size()) < 5 * basis_dim_) {
        warnings_.push_back("stratum with " + std::to_string(rows.size()) +
                            " observations uses the pooled fit");
        stratum_[k] = pooled_;
        continue;
      }
      fits_.push_back(make_fit(rows));
      stratum_[k] = fits_.size() - 1;
    }
  }
}

Vec BSplineCcp::continuous_part(const Vec& x) const {
  Vec xc(static_cast<Eigen::Index>(continuous_.size()));
  for (std::size_t d = 0; d < continuous_.size(); ++d) xc[static_cast<Eigen::Index>(d)] = x[continuous_[d]];
  return xc;
}

Vec BSplineCcp::pmf(const Vec& x) const {
  std::size_t idx = pooled_;
  if (!discrete_.empty()) {
    Key k;
    for (int c : discrete_) k.push_back(x[c]);
    const auto it = stratum_.find(k);
    if (it == stratum_.end()) throw DomainError("series estimator: unseen discrete covariate cell");
    idx = it->second;
  }
  return clip_renormalize(fits_[idx].predict(continuous_part(x)), clip_);
}

nlohmann::json BSplineCcp::to_json() const {
  nlohmann::json fits = nlohmann::json::array();
  for (const auto& f : fits_) fits.push_back(f.to_json());
  nlohmann::json strata = nlohmann::json::array();
  for (const auto& [k, idx] : stratum_) strata.push_back({{"cell", k}, {"fit", idx}});
  return {{"kind", "bspline"}, {"clip", clip_}, {"basis_dim", basis_dim_},
          {"discrete_columns", discrete_}, {"continuous_columns", continuous_},
          {"fits", fits}, {"strata", strata}, {"pooled_fit", pooled_}};
}

CcpPtr fit_cell_mean(const Dataset& data, double clip) {
  return std::make_shared<CellMeanCcp>(data, clip);
}

CcpPtr fit_bspline(const Dataset& data, int degree, const std::vector<int>& knots_per_dim,
                   double clip) {
  CcpConfig cfg;
  cfg.kind = "bspline";
  cfg.degree = degree;
  cfg.knots = knots_per_dim;
  cfg.clip = clip;
  cfg.detect_discrete = false;
  return std::make_shared<BSplineCcp>(data, cfg);
}

CcpPtr fit_ccp(const Dataset& data, const CcpConfig& cfg) {
  if (cfg.kind == "cell_mean") return fit_cell_mean(data, cfg.clip);
  if (cfg.kind == "bspline") return std::make_shared<BSplineCcp>(data, cfg);
  const auto disc = cfg.detect_discrete && cfg.discrete_columns.empty() ? detect_discrete_columns(data.x)
                                                                        : cfg.discrete_columns;
  if (static_cast<Eigen::Index>(disc.size()) == data.x.cols()) return fit_cell_mean(data, cfg.clip);
  return std::make_shared<BSplineCcp>(data, cfg);
}

}  // namespace setinf
