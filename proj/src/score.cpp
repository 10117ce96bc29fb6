#include "setinf/score.hpp"

#include "setinf/errors.hpp"
#include "setinf/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace setinf {

std::string to_string(ScoreMethod m) {
  switch (m) {
    case ScoreMethod::ClosedForm: return "closed_form";
    case ScoreMethod::Multiplier: return "multiplier";
    default: return "smoothed";
  }
}

ScoreMethod parse_score_method(const std::string& s) {
  if (s == "closed_form") return ScoreMethod::ClosedForm;
  if (s == "multiplier") return ScoreMethod::Multiplier;
  if (s == "smoothed") return ScoreMethod::Smoothed;
  throw ConfigError("unknown score method '" + s + "' (closed_form, multiplier, smoothed)");
}

namespace {

constexpr double kActiveSlack = 1e-7;
constexpr double kWeakMultiplier = 1e-10;
constexpr double kResidualTol = 1e-8;

std::string event_name(EventMask a, const OutcomeSpace& space) {
  std::string s = "{";
  bool first = true;
  for (int m = 0; m < space.size(); ++m) {
    if (a & (EventMask{1} << m)) {
      if (!first) s += ",";
      s += space.label(m);
      first = false;
    }
  }
  return s + "}";
}

}  // namespace

ScoreMatrix score_multiplier(const Model& model, const Vec& theta, const Vec& x, const Vec& p0x) {
  const ConstraintSet cs = build_constraints(model, theta, x, true);
  const ProjectionResult pr = project_generic(p0x, cs);
  const int m = cs.m_outcomes;
  const Vec& q = pr.q_star;

  std::vector<int> candidates;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const double sl = representer(cs.events[i], m).dot(q) - cs.lower[i];
    if (cs.equality[i] || sl <= kActiveSlack) candidates.push_back(static_cast<int>(i));
  }
  const Vec r = p0x.cwiseQuotient(q);

  ScoreMatrix out;
  out.theta = theta;
  out.x = x;
  out.method = ScoreMethod::Multiplier;

  for (int round = 0; round <= static_cast<int>(cs.size()); ++round) {
    // Greedy independent columns, total mass first.
    std::vector<int> cols;
    std::vector<int> dropped;
    Mat basis(m, 0);
    auto try_add = [&](const Vec& v) {
      Vec resid = v;
      for (Eigen::Index c = 0; c < basis.cols(); ++c) resid -= basis.col(c).dot(resid) * basis.col(c);
      for (Eigen::Index c = 0; c < basis.cols(); ++c) resid -= basis.col(c).dot(resid) * basis.col(c);
      if (resid.norm() <= 1e-10 * v.norm()) return false;
      basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
      basis.col(basis.cols() - 1) = resid / resid.norm();
      return true;
    };
    try_add(Vec::Ones(m));
    for (int i : candidates) {
      if (try_add(representer(cs.events[static_cast<std::size_t>(i)], m))) cols.push_back(i);
      else dropped.push_back(i);
    }
    const auto k = static_cast<Eigen::Index>(cols.size()) + 1;
    Mat b(m, k);
    Mat e = Mat::Zero(model.dim(), k);
    b.col(0) = Vec::Ones(m);
    for (Eigen::Index c = 1; c < k; ++c) {
      const auto i = static_cast<std::size_t>(cols[static_cast<std::size_t>(c - 1)]);
      b.col(c) = representer(cs.events[i], m);
      e.col(c) = cs.grad.col(static_cast<Eigen::Index>(i));
    }
    const Vec coef = b.colPivHouseholderQr().solve(r);
    const double resid = (b * coef - r).lpNorm<Eigen::Infinity>();
    if (!(resid <= kResidualTol * (1.0 + r.lpNorm<Eigen::Infinity>()))) {
      std::ostringstream msg;
      msg << "score_multiplier: KKT inconsistency, residual " << resid << " at active set";
      for (int i : cols) msg << ' ' << event_name(cs.events[static_cast<std::size_t>(i)], model.outcomes());
      throw NumericError(msg.str());
    }
    // coef_c = -lambda_c for event columns; drop weakly active inequalities.
    std::vector<int> weak;
    for (Eigen::Index c = 1; c < k; ++c) {
      const int i = cols[static_cast<std::size_t>(c - 1)];
      if (!cs.equality[static_cast<std::size_t>(i)] && -coef[c] <= kWeakMultiplier) weak.push_back(i);
    }
    if (!weak.empty()) {
      std::vector<int> next;
      for (int i : candidates) {
        if (std::find(weak.begin(), weak.end(), i) == weak.end()) next.push_back(i);
      }
      candidates = std::move(next);
      continue;
    }
    const Mat btqb = b.transpose() * q.asDiagonal() * b;
    const Eigen::LDLT<Mat> ldlt(btqb);
    if (ldlt.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "score_multiplier: degenerate active set";
      for (int i : cols) msg << ' ' << event_name(cs.events[static_cast<std::size_t>(i)], model.outcomes());
      throw NumericError(msg.str());
    }
    out.values = e * ldlt.solve(b.transpose());
    out.dropped = std::move(dropped);
    if (!out.values.allFinite()) throw NumericError("score_multiplier: non-finite score");
    return out;
  }
  throw NumericError("score_multiplier: active-set refinement did not settle");
}

ScoreMatrix score_entry_closed_form(const EntryGame& model, const Vec& theta, const Vec& x,
                                    const Vec& p0x) {
  model.check(theta, x);
  if (p0x.size() != model.outcomes().size()) throw DomainError("pmf length does not match the outcome space");
  const RegionProbs r = model.regions(theta, x, true);
  const EtaTriple e = eta(r);
  const Region region = entry_region(p0x, e, model);
  constexpr double floor = 1e-10;
  auto ratio = [&](const Vec& g, double v, const char* what) -> Vec {
    if (!(v >= floor)) {
      throw DomainError(std::string("closed-form score: ") + what +
                        " is below 1e-10 (degenerate region probability)");
    }
    return g / v;
  };
  ScoreMatrix out;
  out.theta = theta;
  out.x = x;
  out.method = ScoreMethod::ClosedForm;
  out.values = Mat::Zero(model.dim(), model.outcomes().size());
  if (model.idx00() >= 0) out.values.col(model.idx00()) = ratio(r.g00, r.s00, "F(S00)");
  out.values.col(model.idx11()) = ratio(r.g11, r.s11, "F(S11)");
  switch (region) {
    case Region::Theta1: {
      const Vec s = ratio(e.g1, e.eta1, "eta1");
      out.values.col(model.idx01()) = s;
      out.values.col(model.idx10()) = s;
      break;
    }
    case Region::Theta2:
      out.values.col(model.idx01()) = ratio(e.g1 - e.g2, e.eta1 - e.eta2, "eta1 - eta2");
      out.values.col(model.idx10()) = ratio(e.g2, e.eta2, "eta2");
      break;
    default:
      out.values.col(model.idx01()) = ratio(e.g1 - e.g3, e.eta1 - e.eta3, "eta1 - eta3");
      out.values.col(model.idx10()) = ratio(e.g3, e.eta3, "eta3");
      break;
  }
  return out;
}

ScoreMatrix score_matrix(const Model& model, const Vec& theta, const Vec& x, const Vec& p0x,
                         ScoreMethod method) {
  if (method == ScoreMethod::ClosedForm) {
    const auto* entry = dynamic_cast<const EntryGame*>(&model);
    if (!entry) throw ConfigError("closed-form score is only available for entry games");
    return score_entry_closed_form(*entry, theta, x, p0x);
  }
  if (method == ScoreMethod::Multiplier) return score_multiplier(model, theta, x, p0x);
  throw ConfigError("score_matrix: the smoothed score is per outcome; use score_smoothed");
}

double SmoothingConfig::bandwidth(std::size_t n) const {
  validate();
  if (sigma > 0.0) return sigma;
  return c_sigma * std::pow(static_cast<double>(n) * R, -0.25);
}

void SmoothingConfig::validate() const {
  if (R < 100) throw ConfigError("smoothing: R must be at least 100");
  if (!(c_sigma > 0.0) && !(sigma > 0.0)) throw ConfigError("smoothing: bandwidth must be positive");
}

Vec smoothed_gradient(const std::function<std::optional<double>(const Vec&)>& f, const Vec& theta,
                      double sigma, int R, SeededRng& rng, int* rejected) {
  if (!(sigma > 0.0)) throw DomainError("smoothed_gradient: sigma must be positive");
  const auto f0 = f(theta);
  if (!f0) throw NumericError("smoothed_gradient: objective not evaluable at theta");
  const auto d = theta.size();
  Vec acc = Vec::Zero(d);
  Vec z(d);
  int rej = 0;
  for (int r = 0; r < R;) {
    for (Eigen::Index j = 0; j < d; ++j) z[j] = rng.normal();
    const auto fv = f(theta + sigma * z);
    if (!fv) {
      if (++rej > R / 10) {
        throw NumericError("smoothed_gradient: more than 10% of perturbed evaluations failed");
      }
      continue;
    }
    acc += (*fv - *f0) * z;
    ++r;
  }
  if (rejected) *rejected = rej;
  return acc / (sigma * R);
}

Vec score_smoothed(const Model& model, const Vec& theta, int y, const Vec& x, const Vec& p,
                   double sigma, int R, SeededRng& rng, int* rejected) {
  if (y < 0 || y >= model.outcomes().size()) throw DomainError("score_smoothed: invalid outcome");
  auto f = [&](const Vec& t) -> std::optional<double> {
    try {
      const ProjectionResult pr = project(model, t, x, p);
      return std::log(std::max(pr.q_star[y], kLogFloor));
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  return smoothed_gradient(f, theta, sigma, R, rng, rejected);
}

Mat observation_scores(const Model& model, const Vec& theta, const Dataset& data,
                       const CcpEstimate& p_hat, ScoreMethod method, const SmoothingConfig& cfg) {
  data.validate();
  const std::size_t n = data.size();
  Mat out(static_cast<Eigen::Index>(n), model.dim());
  std::vector<std::string> failures(n);

  if (method == ScoreMethod::Smoothed) {
    const double sigma = cfg.bandwidth(n);
    parallel_for(n, [&](std::size_t i) {
      try {
        SeededRng rng(cfg.seed, i);
        const Vec x = data.row(i);
        out.row(static_cast<Eigen::Index>(i)) =
            score_smoothed(model, theta, data.y[i], x, p_hat.pmf(x), sigma, cfg.R, rng).transpose();
      } catch (const Error& e) {
        failures[i] = e.what();
      }
    });
  } else {
    // Observations sharing a covariate value share one score matrix.
    std::map<std::vector<double>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec x = data.row(i);
      groups[std::vector<double>(x.data(), x.data() + x.size())].push_back(i);
    }
    std::vector<const std::vector<std::size_t>*> members;
    for (const auto& [k, rows] : groups) members.push_back(&rows);
    parallel_for(members.size(), [&](std::size_t g) {
      const auto& rows = *members[g];
      try {
        const Vec x = data.row(rows.front());
        const ScoreMatrix sm = score_matrix(model, theta, x, p_hat.pmf(x), method);
        for (std::size_t i : rows) out.row(static_cast<Eigen::Index>(i)) = sm.values.col(data.y[i]).transpose();
      } catch (const Error& e) {
        for (std::size_t i : rows) failures[i] = e.what();
      }
    });
  }

  std::ostringstream report;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (failures[i].empty()) continue;
    if (count < 5) report << (count ? "; " : "") << "observation " << i << ": " << failures[i];
    ++count;
  }
  if (count > 0) {
    throw NumericError("score failed for " + std::to_string(count) + " observation(s): " + report.str());
  }
  return out;
}

Vec average_score(const Model& model, const Vec& theta, const Dataset& data,
                  const CcpEstimate& p_hat, ScoreMethod method, const SmoothingConfig& cfg) {
  const Mat s = observation_scores(model, theta, data, p_hat, method, cfg);
  return s.colwise().mean().transpose();
}

}  // namespace setinf
