#include "setinf/randomset.hpp"

#include "setinf/errors.hpp"
#include "setinf/models.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace setinf {

OutcomeSpace::OutcomeSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2 || labels_.size() > static_cast<std::size_t>(kMaxOutcomes)) {
    throw DomainError("outcome space must have between 2 and 16 outcomes");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    for (std::size_t j = i + 1; j < labels_.size(); ++j) {
      if (labels_[i] == labels_[j]) throw DomainError("duplicate outcome label " + labels_[i]);
    }
  }
}

int OutcomeSpace::index_of(const std::string& label) const {
  for (int m = 0; m < size(); ++m) {
    if (labels_[m] == label) return m;
  }
  throw ConfigError("unknown outcome label '" + label + "'");
}

int event_size(EventMask a) { return std::popcount(a); }

EventMask complement(EventMask a, int m_outcomes) {
  const EventMask full = (EventMask{1} << m_outcomes) - 1;
  return full & ~a;
}

Vec representer(EventMask a, int m_outcomes) {
  Vec b = Vec::Zero(m_outcomes);
  for (int m = 0; m < m_outcomes; ++m) {
    if (a & (EventMask{1} << m)) b[m] = 1.0;
  }
  return b;
}

std::vector<EventMask> enumerate_events(const OutcomeSpace& space) {
  const int m = space.size();
  if (m > kMaxOutcomes) throw DomainError("outcome space too large for enumeration");
  const int max_card = (m + 1) / 2;
  std::vector<EventMask> out;
  for (int card = 1; card <= max_card; ++card) {
    for (EventMask a = 1; a < (EventMask{1} << m); ++a) {
      if (event_size(a) == card) out.push_back(a);
    }
  }
  return out;
}

namespace {

constexpr double kEqTol = 1e-10;
constexpr double kNuTol = 1e-10;

double nu_from_masses(const std::vector<SetMass>& masses, EventMask a) {
  double v = 0.0;
  for (const auto& sm : masses) {
    if ((sm.set & ~a) == 0) v += sm.mass;
  }
  return v;
}

}  // namespace

ConstraintSet build_constraints(const Model& model, const Vec& theta, const Vec& x,
                                bool with_grad) {
  model.check(theta, x);
  const auto masses = model.set_masses(theta, x, with_grad);
  const int m = model.outcomes().size();
  ConstraintSet cs;
  cs.m_outcomes = m;
  cs.theta = theta;
  cs.x = x;
  cs.events = enumerate_events(model.outcomes());
  cs.lower.reserve(cs.events.size());
  cs.equality.reserve(cs.events.size());
  if (with_grad) cs.grad = Mat::Zero(model.dim(), static_cast<Eigen::Index>(cs.events.size()));
  for (std::size_t i = 0; i < cs.events.size(); ++i) {
    const EventMask a = cs.events[i];
    double v = nu_from_masses(masses, a);
    const double vc = nu_from_masses(masses, complement(a, m));
    if (v < -kNuTol || v > 1.0 + kNuTol || vc < -kNuTol || vc > 1.0 + kNuTol) {
      throw NumericError("containment functional outside [0,1] for event index " +
                         std::to_string(i));
    }
    if (v + vc > 1.0 + kNuTol) {
      throw NumericError("containment exceeds capacity for event index " + std::to_string(i));
    }
    v = std::clamp(v, 0.0, 1.0);
    cs.lower.push_back(v);
    cs.equality.push_back(std::fabs(v + vc - 1.0) <= kEqTol ? 1 : 0);
    if (with_grad) {
      for (const auto& sm : masses) {
        if ((sm.set & ~a) == 0) cs.grad.col(static_cast<Eigen::Index>(i)) += sm.grad;
      }
    }
  }
  return cs;
}

double max_violation(const ConstraintSet& cs, const Vec& q) {
  double worst = std::fabs(q.sum() - 1.0);
  for (Eigen::Index m = 0; m < q.size(); ++m) worst = std::max(worst, -q[m]);
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const double mass = representer(cs.events[i], cs.m_outcomes).dot(q);
    const double gap = cs.lower[i] - mass;
    worst = std::max(worst, cs.equality[i] ? std::fabs(gap) : gap);
  }
  return worst;
}

bool lp_min(const Vec& c, const Mat& g, const Vec& h, double* value) {
  // Solve the dual  max h'mu  s.t. G'mu <= c, mu >= 0  with the slack basis
  // as the starting point (feasible because c >= 0). Bland's rule avoids
  // cycling. An unbounded dual certifies an empty primal.
  const Eigen::Index m = c.size();
  const Eigen::Index j = g.rows();
  if ((c.array() < 0.0).any()) throw DomainError("lp_min: objective must be nonnegative");
  const Eigen::Index ncol = j + m;
  Mat t(m, ncol);
  t.leftCols(j) = g.transpose();
  t.rightCols(m) = Mat::Identity(m, m);
  Vec rhs = c;
  Vec red(ncol);  // reduced costs of the maximization, objective row
  red.head(j) = -h;
  red.tail(m).setZero();
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index r = 0; r < m; ++r) basis[static_cast<std::size_t>(r)] = j + r;
  double obj = 0.0;
  constexpr double tol = 1e-12;
  for (int iter = 0; iter < 100000; ++iter) {
    Eigen::Index enter = -1;
    for (Eigen::Index col = 0; col < ncol; ++col) {
      if (red[col] < -tol) {
        enter = col;
        break;
      }
    }
    if (enter < 0) {
      if (value) *value = obj;
      return true;
    }
    Eigen::Index leave = -1;
    double best = 0.0;
    for (Eigen::Index r = 0; r < m; ++r) {
      if (t(r, enter) > tol) {
        const double ratio = rhs[r] / t(r, enter);
        if (leave < 0 || ratio < best - 1e-15 ||
            (ratio <= best + 1e-15 && basis[static_cast<std::size_t>(r)] <
                                          basis[static_cast<std::size_t>(leave)])) {
          leave = r;
          best = ratio;
        }
      }
    }
    if (leave < 0) return false;
    const double piv = t(leave, enter);
    t.row(leave) /= piv;
    rhs[leave] /= piv;
    for (Eigen::Index r = 0; r < m; ++r) {
      if (r == leave) continue;
      const double f = t(r, enter);
      if (f != 0.0) {
        t.row(r) -= f * t.row(leave);
        rhs[r] -= f * rhs[leave];
      }
    }
    const double f = red[enter];
    red -= f * t.row(leave).transpose();
    obj -= f * rhs[leave];
    basis[static_cast<std::size_t>(leave)] = enter;
  }
  throw NumericError("lp_min: iteration limit reached");
}

namespace {

// Stacks the constraints of `keep` (plus the simplex) as G q >= h.
void stack_rows(const ConstraintSet& cs, const std::vector<char>& keep, std::size_t skip,
                Mat* g, Vec* h) {
  const int m = cs.m_outcomes;
  std::vector<std::pair<Vec, double>> rows;
  rows.emplace_back(Vec::Ones(m), 1.0);
  rows.emplace_back(-Vec::Ones(m), -1.0);
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (!keep[i] || i == skip) continue;
    const Vec b = representer(cs.events[i], m);
    rows.emplace_back(b, cs.lower[i]);
    if (cs.equality[i]) rows.emplace_back(-b, -cs.lower[i]);
  }
  g->resize(static_cast<Eigen::Index>(rows.size()), m);
  h->resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    g->row(static_cast<Eigen::Index>(r)) = rows[r].first.transpose();
    (*h)[static_cast<Eigen::Index>(r)] = rows[r].second;
  }
}

}  // namespace

ConstraintSet prune_redundant(const ConstraintSet& cs) {
  const int m = cs.m_outcomes;
  std::vector<char> keep(cs.size(), 1);
  Mat g;
  Vec h;
  stack_rows(cs, keep, cs.size(), &g, &h);
  if (!lp_min(Vec::Zero(m), g, h, nullptr)) {
    throw InfeasibleError("prune_redundant: the base polytope is empty");
  }
  constexpr double tol = 1e-12;
  for (std::size_t k = cs.size(); k-- > 0;) {
    stack_rows(cs, keep, k, &g, &h);
    const Vec b = representer(cs.events[k], m);
    double lo = 0.0;
    if (!lp_min(b, g, h, &lo)) throw InfeasibleError("prune_redundant: subproblem infeasible");
    bool implied = lo - cs.lower[k] >= -tol;
    if (implied && cs.equality[k]) {
      // max b'q = 1 - min (1-b)'q on the simplex.
      double lo_c = 0.0;
      if (!lp_min(Vec::Ones(m) - b, g, h, &lo_c)) {
        throw InfeasibleError("prune_redundant: subproblem infeasible");
      }
      implied = (1.0 - lo_c) - cs.lower[k] <= tol;
    }
    if (implied) keep[k] = 0;
  }
  ConstraintSet out;
  out.m_outcomes = m;
  out.theta = cs.theta;
  out.x = cs.x;
  std::vector<Eigen::Index> cols;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (!keep[i]) continue;
    out.events.push_back(cs.events[i]);
    out.lower.push_back(cs.lower[i]);
    out.equality.push_back(cs.equality[i]);
    cols.push_back(static_cast<Eigen::Index>(i));
  }
  if (cs.has_grad()) {
    out.grad.resize(cs.grad.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
      out.grad.col(static_cast<Eigen::Index>(c)) = cs.grad.col(cols[c]);
    }
  }
  return out;
}

nlohmann::json to_json(const ConstraintSet& cs, const OutcomeSpace& space) {
  nlohmann::json events = nlohmann::json::array();
  for (EventMask a : cs.events) {
    nlohmann::json labels = nlohmann::json::array();
    for (int m = 0; m < cs.m_outcomes; ++m) {
      if (a & (EventMask{1} << m)) labels.push_back(space.label(m));
    }
    events.push_back(labels);
  }
  nlohmann::json eq = nlohmann::json::array();
  for (char e : cs.equality) eq.push_back(static_cast<bool>(e));
  return {{"events", events}, {"lower", cs.lower}, {"equality", eq}};
}

}  // namespace setinf
