#include "setinf/projection.hpp"

#include "setinf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace setinf {

std::string to_string(Region r) {
  switch (r) {
    case Region::Theta1: return "Theta1";
    case Region::Theta2: return "Theta2";
    case Region::Theta3: return "Theta3";
    default: return "none";
  }
}

double kl_divergence(const Vec& p, const Vec& q, bool* abs_cont_violation) {
  if (p.size() != q.size()) throw DomainError("kl_divergence: size mismatch");
  if (abs_cont_violation) *abs_cont_violation = false;
  double v = 0.0;
  for (Eigen::Index m = 0; m < p.size(); ++m) {
    if (p[m] <= 0.0) continue;
    if (q[m] <= 0.0) {
      if (abs_cont_violation) *abs_cont_violation = true;
      return std::numeric_limits<double>::infinity();
    }
    v += p[m] * std::log(p[m] / q[m]);
  }
  return std::max(v, 0.0);
}

namespace {

void check_pmf(const Vec& p, int m) {
  if (p.size() != m) throw DomainError("pmf length does not match the outcome space");
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0) || !std::isfinite(p[i])) {
      throw DomainError("pmf must be strictly positive");
    }
  }
  if (std::fabs(p.sum() - 1.0) > 1e-8) throw DomainError("pmf does not sum to one");
}

double loglik_of(const Vec& p, const Vec& q) {
  double v = 0.0;
  for (Eigen::Index m = 0; m < p.size(); ++m) v += p[m] * std::log(std::max(q[m], kLogFloor));
  return v;
}

// Greedy selection of linearly independent rows, in the given order.
std::vector<int> independent_rows(const std::vector<Vec>& rows, double tol = 1e-10) {
  std::vector<int> keep;
  std::vector<Vec> basis;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Vec v = rows[r];
    for (const Vec& b : basis) v -= b.dot(v) * b;
    for (const Vec& b : basis) v -= b.dot(v) * b;  // second pass for stability
    const double nv = v.norm();
    if (nv > tol * std::max(1.0, rows[r].norm())) {
      basis.push_back(v / nv);
      keep.push_back(static_cast<int>(r));
    }
  }
  return keep;
}

struct Problem {
  const Vec* p = nullptr;
  const ConstraintSet* cs = nullptr;
  int m = 0;
  std::vector<Vec> rep;   // representers per constraint
  std::vector<int> eq;    // constraint indices flagged equality
  std::vector<int> ineq;  // constraint indices flagged inequality
};

double slack(const Problem& pr, int i, const Vec& q) {
  return pr.rep[static_cast<std::size_t>(i)].dot(q) - pr.cs->lower[static_cast<std::size_t>(i)];
}

// Newton's method for max sum p ln q subject to A q = b, where rows are the
// total-mass row (code -1) plus the listed constraint indices. Returns false
// when the iteration fails to converge.
bool equality_newton(const Problem& pr, const std::vector<int>& rows, Vec* q, Vec* w) {
  const int m = pr.m;
  const int k = static_cast<int>(rows.size());
  Mat a(k, m);
  Vec b(k);
  for (int r = 0; r < k; ++r) {
    if (rows[r] < 0) {
      a.row(r) = Vec::Ones(m).transpose();
      b[r] = 1.0;
    } else {
      a.row(r) = pr.rep[static_cast<std::size_t>(rows[r])].transpose();
      b[r] = pr.cs->lower[static_cast<std::size_t>(rows[r])];
    }
  }
  const Vec& p = *pr.p;
  Vec qq = q->cwiseMax(1e-14);
  Mat kkt = Mat::Zero(m + k, m + k);
  Vec rhs(m + k);
  Vec sol;
  for (int it = 0; it < 100; ++it) {
    const Vec grad = -p.cwiseQuotient(qq);  // gradient of -sum p ln q
    kkt.setZero();
    kkt.topLeftCorner(m, m) = (p.array() / qq.array().square()).matrix().asDiagonal();
    kkt.topRightCorner(m, k) = a.transpose();
    kkt.bottomLeftCorner(k, m) = a;
    rhs.head(m) = -grad;
    rhs.tail(k) = b - a * qq;
    sol = kkt.fullPivLu().solve(rhs);
    if (!sol.allFinite()) return false;
    const Vec dq = sol.head(m);
    double step = 1.0;
    for (int i = 0; i < m; ++i) {
      if (dq[i] < 0.0) step = std::min(step, -0.99 * qq[i] / dq[i]);
    }
    qq += step * dq;
    if (step == 1.0 && dq.lpNorm<Eigen::Infinity>() <= 1e-15 * (1.0 + qq.lpNorm<Eigen::Infinity>())) {
      break;
    }
    if (it == 99 && dq.lpNorm<Eigen::Infinity>() > 1e-12) return false;
  }
  // Multipliers from stationarity: p/q = A' w.
  const Vec r = p.cwiseQuotient(qq);
  *w = a.transpose().colPivHouseholderQr().solve(r);
  *q = qq;
  return true;
}

struct IpmState {
  Vec q, s, mu, y;
  std::vector<int> eq_rows;  // -1 for total mass, otherwise constraint index
};

IpmState interior_point(const Problem& pr, const std::vector<int>& eq_rows) {
  const int m = pr.m;
  const int j = static_cast<int>(pr.ineq.size());
  const int e = static_cast<int>(eq_rows.size());
  const Vec& p = *pr.p;
  Mat g(j, m);
  Vec h(j);
  for (int i = 0; i < j; ++i) {
    g.row(i) = pr.rep[static_cast<std::size_t>(pr.ineq[static_cast<std::size_t>(i)])].transpose();
    h[i] = pr.cs->lower[static_cast<std::size_t>(pr.ineq[static_cast<std::size_t>(i)])];
  }
  Mat ematrix(e, m);
  Vec evec(e);
  for (int r = 0; r < e; ++r) {
    if (eq_rows[static_cast<std::size_t>(r)] < 0) {
      ematrix.row(r) = Vec::Ones(m).transpose();
      evec[r] = 1.0;
    } else {
      ematrix.row(r) = pr.rep[static_cast<std::size_t>(eq_rows[static_cast<std::size_t>(r)])].transpose();
      evec[r] = pr.cs->lower[static_cast<std::size_t>(eq_rows[static_cast<std::size_t>(r)])];
    }
  }

  IpmState st;
  st.eq_rows = eq_rows;
  st.q = (0.5 * p.array() + 0.5 / m).matrix();
  st.s = (g * st.q - h).cwiseMax(0.1);
  st.mu = Vec::Constant(j, 0.1);
  st.y = Vec::Zero(e);
  if (j == 0) {
    return st;
  }

  Mat kkt(m + e, m + e);
  Vec rhs(m + e);
  for (int it = 0; it < 300; ++it) {
    const Vec grad = -p.cwiseQuotient(st.q);
    const Vec rd = grad - g.transpose() * st.mu - ematrix.transpose() * st.y;
    const Vec rp = g * st.q - st.s - h;
    const Vec re = ematrix * st.q - evec;
    const double tau = st.s.dot(st.mu) / j;
    const double scale = 1.0 + p.cwiseQuotient(st.q).lpNorm<Eigen::Infinity>();
    if (rd.lpNorm<Eigen::Infinity>() <= 1e-12 * scale && rp.lpNorm<Eigen::Infinity>() <= 1e-13 &&
        (e == 0 || re.lpNorm<Eigen::Infinity>() <= 1e-13) && tau <= 1e-14) {
      break;
    }
    const Vec dvec = st.mu.cwiseQuotient(st.s);
    kkt.setZero();
    kkt.topLeftCorner(m, m) = g.transpose() * dvec.asDiagonal() * g;
    kkt.topLeftCorner(m, m).diagonal() += (p.array() / st.q.array().square()).matrix();
    if (e > 0) {
      kkt.topRightCorner(m, e) = -ematrix.transpose();
      kkt.bottomLeftCorner(e, m) = ematrix;
    }
    const auto lu = kkt.fullPivLu();

    auto solve = [&](const Vec& rc, Vec* dq, Vec* ds, Vec* dmu, Vec* dy) {
      const Vec t = (rc + st.mu.cwiseProduct(rp)).cwiseQuotient(st.s);
      rhs.head(m) = -rd - g.transpose() * t;
      if (e > 0) rhs.tail(e) = -re;
      const Vec sol = lu.solve(rhs);
      *dq = sol.head(m);
      *dy = sol.tail(e);
      *ds = g * (*dq) + rp;
      *dmu = -t - dvec.cwiseProduct(g * (*dq));
    };
    auto max_step = [&](const Vec& dq, const Vec& ds, const Vec& dmu) {
      double a = 1.0;
      // q enters through a logarithm, so at most halve it per step.
      for (int i = 0; i < m; ++i) {
        if (dq[i] < 0.0) a = std::min(a, -0.5 * st.q[i] / dq[i]);
      }
      for (int i = 0; i < j; ++i) {
        if (ds[i] < 0.0) a = std::min(a, -st.s[i] / ds[i]);
        if (dmu[i] < 0.0) a = std::min(a, -st.mu[i] / dmu[i]);
      }
      return a;
    };

    Vec dq, ds, dmu, dy;
    const Vec rc_aff = st.s.cwiseProduct(st.mu);
    solve(rc_aff, &dq, &ds, &dmu, &dy);
    const double a_aff = max_step(dq, ds, dmu);
    const double tau_aff = (st.s + a_aff * ds).dot(st.mu + a_aff * dmu) / j;
    const double sigma = std::pow(std::clamp(tau_aff / std::max(tau, 1e-300), 0.0, 1.0), 3);
    const Vec rc = rc_aff + ds.cwiseProduct(dmu) - Vec::Constant(j, sigma * tau);
    solve(rc, &dq, &ds, &dmu, &dy);
    if (!dq.allFinite() || !dmu.allFinite()) break;
    const double a = std::min(1.0, 0.995 * max_step(dq, ds, dmu));
    st.q += a * dq;
    st.s += a * ds;
    st.mu += a * dmu;
    st.y += a * dy;
    st.s = st.s.cwiseMax(1e-300);
    st.mu = st.mu.cwiseMax(1e-300);
  }
  return st;
}

struct Kkt {
  double residual = 0.0;
  bool dual_ok = true;
  bool primal_ok = true;
  int worst_dual = -1;    // most negative inequality multiplier
  int worst_primal = -1;  // most violated inactive inequality
};

Kkt kkt_check(const Problem& pr, const Vec& q, double lam0, const Vec& lam) {
  Kkt k;
  const Vec& p = *pr.p;
  Vec stat = p.cwiseQuotient(q) - Vec::Constant(pr.m, lam0);
  for (std::size_t i = 0; i < pr.rep.size(); ++i) stat += lam[static_cast<Eigen::Index>(i)] * pr.rep[i];
  k.residual = stat.lpNorm<Eigen::Infinity>();
  k.residual = std::max(k.residual, std::fabs(q.sum() - 1.0));
  double worst_d = 0.0;
  double worst_p = 0.0;
  for (int i : pr.eq) k.residual = std::max(k.residual, std::fabs(slack(pr, i, q)));
  for (int i : pr.ineq) {
    const double sl = slack(pr, i, q);
    const double li = lam[i];
    k.residual = std::max({k.residual, -sl, -li, std::fabs(li * sl)});
    if (li < worst_d) {
      worst_d = li;
      k.worst_dual = i;
    }
    if (sl < worst_p) {
      worst_p = sl;
      k.worst_primal = i;
    }
  }
  k.dual_ok = worst_d >= -1e-12;
  k.primal_ok = worst_p >= -1e-13;
  return k;
}


ProjectionResult solve_projection(const Vec& p0x, const ConstraintSet& cs) {
  const int m = cs.m_outcomes;
  check_pmf(p0x, m);
  Problem pr;
  pr.p = &p0x;
  pr.cs = &cs;
  pr.m = m;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    pr.rep.push_back(representer(cs.events[i], m));
    if (cs.equality[i]) pr.eq.push_back(static_cast<int>(i));
    else pr.ineq.push_back(static_cast<int>(i));
  }

  ProjectionResult res;
  const auto nconstr = static_cast<Eigen::Index>(cs.size());
  res.lambda = Vec::Zero(nconstr);

  if (max_violation(cs, p0x) <= 1e-13) {
    res.q_star = p0x;
    res.lambda_total = 1.0;
  } else {
    // Independent equality rows, total mass first.
    std::vector<int> eq_candidates{-1};
    std::vector<Vec> eq_vecs{Vec::Ones(m)};
    for (int i : pr.eq) {
      eq_candidates.push_back(i);
      eq_vecs.push_back(pr.rep[static_cast<std::size_t>(i)]);
    }
    std::vector<int> eq_rows;
    for (int r : independent_rows(eq_vecs)) eq_rows.push_back(eq_candidates[static_cast<std::size_t>(r)]);

    const IpmState st = interior_point(pr, eq_rows);

    // Multipliers straight from the interior-point iterate.
    Vec lam_ipm = Vec::Zero(nconstr);
    double lam0_ipm = 0.0;
    for (std::size_t r = 0; r < eq_rows.size(); ++r) {
      if (eq_rows[r] < 0) lam0_ipm = -st.y[static_cast<Eigen::Index>(r)];
      else lam_ipm[eq_rows[r]] = st.y[static_cast<Eigen::Index>(r)];
    }
    for (std::size_t i = 0; i < pr.ineq.size(); ++i) lam_ipm[pr.ineq[i]] = st.mu[static_cast<Eigen::Index>(i)];
    if (pr.ineq.empty()) {
      // Pure equality problem: the Newton solve below is exact.
      lam0_ipm = 1.0;
    }
    Vec best_q = st.q;
    Vec best_lam = lam_ipm;
    double best_lam0 = lam0_ipm;
    double best_res = kkt_check(pr, st.q, lam0_ipm, lam_ipm).residual;

    // Active-set polish: treat the identified binding inequalities as
    // equalities and solve the smooth subproblem by Newton's method.
    std::vector<char> in_active(cs.size(), 0);
    for (std::size_t i = 0; i < pr.ineq.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      if (pr.ineq.empty()) break;
      if (st.mu[ii] > st.s[ii]) in_active[static_cast<std::size_t>(pr.ineq[i])] = 1;
    }
    for (int round = 0; round < 2 * static_cast<int>(cs.size()) + 4; ++round) {
      std::vector<int> cand = eq_rows;
      std::vector<Vec> vecs;
      for (int r : eq_rows) vecs.push_back(r < 0 ? Vec(Vec::Ones(m)) : pr.rep[static_cast<std::size_t>(r)]);
      for (int i : pr.ineq) {
        if (in_active[static_cast<std::size_t>(i)]) {
          cand.push_back(i);
          vecs.push_back(pr.rep[static_cast<std::size_t>(i)]);
        }
      }
      std::vector<int> rows;
      for (int r : independent_rows(vecs)) rows.push_back(cand[static_cast<std::size_t>(r)]);
      Vec q = st.q;
      Vec w;
      if (!equality_newton(pr, rows, &q, &w)) break;
      Vec lam = Vec::Zero(nconstr);
      double lam0 = 0.0;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] < 0) lam0 = w[static_cast<Eigen::Index>(r)];
        else lam[rows[r]] = -w[static_cast<Eigen::Index>(r)];
      }
      const Kkt k = kkt_check(pr, q, lam0, lam);
      if (k.residual < best_res) {
        best_res = k.residual;
        best_q = q;
        best_lam = lam;
        best_lam0 = lam0;
      }
      if (k.dual_ok && k.primal_ok) break;
      if (!k.dual_ok) {
        in_active[static_cast<std::size_t>(k.worst_dual)] = 0;
      } else {
        in_active[static_cast<std::size_t>(k.worst_primal)] = 1;
      }
    }
    res.q_star = best_q;
    res.lambda = best_lam;
    res.lambda_total = best_lam0;
  }

  const Kkt k = kkt_check(pr, res.q_star, res.lambda_total, res.lambda);
  res.kkt_residual = k.residual;
  if (!(k.residual <= 1e-6)) {
    throw NumericError("project_generic: KKT residual " + std::to_string(k.residual) +
                       " exceeds tolerance");
  }
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (cs.equality[i] || slack(pr, static_cast<int>(i), res.q_star) <= 1e-7) {
      res.active.push_back(static_cast<int>(i));
    }
  }
  res.kl = kl_divergence(p0x, res.q_star);
  res.loglik = loglik_of(p0x, res.q_star);
  return res;
}

// Polytope {q >= 0 : G q >= h} including the simplex and both sides of
// every equality.
void stack_polytope(const ConstraintSet& cs, Mat* g, Vec* h) {
  const int m = cs.m_outcomes;
  std::size_t rows = 2;
  for (std::size_t i = 0; i < cs.size(); ++i) rows += cs.equality[i] ? 2 : 1;
  g->resize(static_cast<Eigen::Index>(rows), m);
  h->resize(static_cast<Eigen::Index>(rows));
  Eigen::Index r = 0;
  g->row(r) = Vec::Ones(m).transpose();
  (*h)[r++] = 1.0;
  g->row(r) = -Vec::Ones(m).transpose();
  (*h)[r++] = -1.0;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const Vec b = representer(cs.events[i], m);
    g->row(r) = b.transpose();
    (*h)[r++] = cs.lower[i];
    if (cs.equality[i]) {
      g->row(r) = -b.transpose();
      (*h)[r++] = -cs.lower[i];
    }
  }
}

}  // namespace

ProjectionResult project_generic(const Vec& p0x, const ConstraintSet& cs) {
  const int m = cs.m_outcomes;
  check_pmf(p0x, m);
  if (max_violation(cs, p0x) <= 1e-13) return solve_projection(p0x, cs);

  // Emptiness check before the solver so infeasibility is never masked.
  Mat g;
  Vec h;
  stack_polytope(cs, &g, &h);
  if (!lp_min(Vec::Zero(m), g, h, nullptr)) {
    throw InfeasibleError("project_generic: the constraint polytope is empty");
  }
  // Outcomes that every point of the polytope assigns zero mass. They make
  // the divergence infinite; the remaining coordinates solve the projection
  // of p restricted (and renormalized) to the other outcomes.
  std::vector<int> keep;
  for (int k = 0; k < m; ++k) {
    double rest = 0.0;
    lp_min(Vec::Ones(m) - representer(EventMask{1} << k, m), g, h, &rest);
    if (1.0 - rest > 1e-12) keep.push_back(k);
  }
  if (static_cast<int>(keep.size()) == m) return solve_projection(p0x, cs);

  const int mk = static_cast<int>(keep.size());
  Vec pk(mk);
  for (int k = 0; k < mk; ++k) pk[k] = p0x[keep[static_cast<std::size_t>(k)]];
  const double mass = pk.sum();
  pk /= mass;
  ConstraintSet red;
  red.m_outcomes = mk;
  std::vector<int> origin;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    EventMask a = 0;
    for (int k = 0; k < mk; ++k) {
      if (cs.events[i] & (EventMask{1} << keep[static_cast<std::size_t>(k)])) a |= EventMask{1} << k;
    }
    if (a == 0) continue;  // b'q = 0 on the polytope, so nu = 0 and the row is void
    red.events.push_back(a);
    red.lower.push_back(cs.lower[i]);
    // Only a full reduced event can be an equality after dropping zeros.
    red.equality.push_back(cs.equality[i]);
    origin.push_back(static_cast<int>(i));
  }
  ProjectionResult sub;
  if (mk == 1) {
    sub.q_star = Vec::Ones(1);
    sub.lambda = Vec::Zero(static_cast<Eigen::Index>(red.size()));
    sub.lambda_total = 1.0;
  } else {
    sub = solve_projection(pk, red);
  }
  ProjectionResult res;
  res.q_star = Vec::Zero(m);
  for (int k = 0; k < mk; ++k) res.q_star[keep[static_cast<std::size_t>(k)]] = sub.q_star[k];
  res.lambda = Vec::Zero(static_cast<Eigen::Index>(cs.size()));
  for (std::size_t r = 0; r < origin.size(); ++r) {
    res.lambda[origin[r]] = mass * sub.lambda[static_cast<Eigen::Index>(r)];
  }
  res.lambda_total = mass * sub.lambda_total;
  res.kkt_residual = sub.kkt_residual;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const double sl = representer(cs.events[i], m).dot(res.q_star) - cs.lower[i];
    if (cs.equality[i] || sl <= 1e-7) res.active.push_back(static_cast<int>(i));
  }
  res.kl = kl_divergence(p0x, res.q_star);
  res.loglik = loglik_of(p0x, res.q_star);
  return res;
}

Region entry_region(const Vec& p0x, const EtaTriple& e, const EntryGame& model) {
  const double p10 = p0x[model.idx10()];
  const double p01 = p0x[model.idx01()];
  if (!(p10 + p01 > 0.0)) throw DomainError("entry region: p((1,0)) + p((0,1)) must be positive");
  const double rhat = p10 / (p10 + p01);
  const double v = rhat * e.eta1;
  if (v - e.eta2 > kRegionMargin) return Region::Theta2;
  if (e.eta3 - v > kRegionMargin) return Region::Theta3;
  return Region::Theta1;
}

ProjectionResult project_entry_closed_form(const Vec& p0x, const Vec& theta, const Vec& x,
                                           const EntryGame& model) {
  const int m = model.outcomes().size();
  check_pmf(p0x, m);
  model.check(theta, x);
  const RegionProbs r = model.regions(theta, x, false);
  const EtaTriple e = eta(r);
  if (!(e.eta1 > 0.0)) throw NumericError("closed-form projection: eta1 = 0 (degenerate model)");
  const double p10 = p0x[model.idx10()];
  const double p01 = p0x[model.idx01()];
  const double rhat = p10 / (p10 + p01);
  ProjectionResult res;
  res.region = entry_region(p0x, e, model);
  res.q_star = Vec::Zero(m);
  if (model.idx00() >= 0) res.q_star[model.idx00()] = r.s00;
  res.q_star[model.idx11()] = r.s11;
  double q01 = 0.0;
  switch (res.region) {
    case Region::Theta1: q01 = (1.0 - rhat) * e.eta1; break;
    case Region::Theta2: q01 = e.eta1 - e.eta2; break;
    default: q01 = e.eta1 - e.eta3; break;
  }
  res.q_star[model.idx01()] = q01;
  res.q_star[model.idx10()] = e.eta1 - q01;
  res.kl = kl_divergence(p0x, res.q_star);
  res.loglik = loglik_of(p0x, res.q_star);
  return res;
}

ProjectionResult project(const Model& model, const Vec& theta, const Vec& x, const Vec& p0x,
                         Projector how) {
  const auto* entry = dynamic_cast<const EntryGame*>(&model);
  if (how == Projector::ClosedForm && !entry) {
    throw ConfigError("closed-form projection is only available for entry games");
  }
  if (entry && how != Projector::Generic) return project_entry_closed_form(p0x, theta, x, *entry);
  return project_generic(p0x, build_constraints(model, theta, x));
}

double profiled_loglik(const Model& model, const Vec& theta, const Vec& x, const Vec& p0x,
                       Projector how) {
  return project(model, theta, x, p0x, how).loglik;
}

namespace {
void check_population(const Population& pop) {
  if (pop.size() == 0) throw DomainError("empty covariate support");
  if (pop.pmf.size() != pop.size() || (!pop.weight.empty() && pop.weight.size() != pop.size())) {
    throw DomainError("population arrays have inconsistent lengths");
  }
}
}  // namespace

double expected_profiled_loglik(const Model& model, const Vec& theta, const Population& pop,
                                Projector how) {
  check_population(pop);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const double w = pop.weight.empty() ? 1.0 : pop.weight[i];
    num += w * profiled_loglik(model, theta, pop.x[i], pop.pmf[i], how);
    den += w;
  }
  return num / den;
}

double expected_kl(const Model& model, const Vec& theta, const Population& pop, Projector how) {
  check_population(pop);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const double w = pop.weight.empty() ? 1.0 : pop.weight[i];
    num += w * project(model, theta, pop.x[i], pop.pmf[i], how).kl;
    den += w;
  }
  return num / den;
}

}  // namespace setinf
