#include "setinf/mc.hpp"

#include "setinf/errors.hpp"
#include "setinf/parallel.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/minima.hpp>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>

namespace setinf {

Design parse_design(const std::string& s) {
  if (s == "D1") return Design::D1;
  if (s == "D2") return Design::D2;
  throw ConfigError("unknown design '" + s + "' (D1 or D2)");
}

std::string to_string(Design d) { return d == Design::D1 ? "D1" : "D2"; }

int design_covariates(Design d) { return d == Design::D1 ? 2 : 3; }

EntryProbit design_model(Design d) {
  EntryProbitConfig cfg;
  if (d == Design::D1) {
    cfg.cols1 = {0};
    cfg.cols2 = {1};
  } else {
    cfg.cols1 = {0, 2};
    cfg.cols2 = {1, 2};
  }
  return EntryProbit(cfg);
}

Vec calibrated_theta(Design d) {
  Vec t;
  if (d == Design::D1) {
    t.resize(6);
    t << -0.367, 2.044, -0.085, 0.282, 1.774, -0.226;
  } else {
    t.resize(8);
    t << -0.367, 2.044, -0.066, -0.085, 0.282, 1.774, 0.251, -0.226;
  }
  return t;
}

Vec DgpConfig::theta() const { return theta0.size() > 0 ? theta0 : calibrated_theta(design); }

void DgpConfig::validate() const {
  if (!(kappa >= 0.0 && kappa <= 1.0)) throw ConfigError("dgp: kappa must lie in [0,1]");
  if (!(gamma <= 0.0)) throw ConfigError("dgp: gamma must be nonpositive");
  if (n < 1) throw ConfigError("dgp: n must be positive");
  if (theta().size() != design_model(design).dim()) {
    throw ConfigError("dgp: theta0 length does not match the design");
  }
}

Vec dgp_probs(const EntryProbit& model, const Vec& theta, double kappa, const Vec& x) {
  if (!(kappa >= 0.0 && kappa <= 1.0)) throw DomainError("kappa must lie in [0,1]");
  model.check(theta, x);
  const RegionProbs r = model.regions(theta, x, false);
  const EtaTriple e = eta(r);
  Vec q(4);
  q[model.idx00()] = r.s00;
  q[model.idx11()] = r.s11;
  q[model.idx10()] = e.eta3 + kappa * (e.eta2 - e.eta3);
  q[model.idx01()] = e.eta1 - q[model.idx10()];
  return q;
}

// ---------------------------------------------------------------------------

CovariateSource::CovariateSource(const DgpConfig& cfg) : dim_(design_covariates(cfg.design)) {
  mu_ = Vec::Constant(dim_, 0.5);
  sd_ = Vec::Constant(dim_, 1.0 / std::sqrt(12.0));
  if (cfg.covariate_file.empty()) return;
  pool_ = read_numeric_csv(cfg.covariate_file);
  if (pool_.cols() < dim_) {
    throw ConfigError("covariate file has " + std::to_string(pool_.cols()) + " columns, design " +
                      to_string(cfg.design) + " needs " + std::to_string(dim_));
  }
  pool_.conservativeResize(Eigen::NoChange, dim_);
  mu_ = pool_.colwise().mean().transpose();
  for (int j = 0; j < dim_; ++j) {
    sd_[j] = std::sqrt((pool_.col(j).array() - mu_[j]).square().mean());
    if (!(sd_[j] > 0.0)) throw ConfigError("covariate file: constant column " + std::to_string(j));
  }
}

Vec CovariateSource::draw(SeededRng& rng) const {
  if (pool_.rows() == 0) {
    Vec x(dim_);
    for (int j = 0; j < dim_; ++j) x[j] = rng.uniform();
    return x;
  }
  const auto i = static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(pool_.rows()));
  return pool_.row(std::min(i, pool_.rows() - 1)).transpose();
}

double omitted_probability(const CovariateSource& src, const Vec& x) {
  return normal_cdf((x[0] - src.mean(0)) / src.sd(0) + (x[1] - src.mean(1)) / src.sd(1));
}

namespace {

int draw_index(const Vec& p, double u) {
  double acc = 0.0;
  for (Eigen::Index m = 0; m + 1 < p.size(); ++m) {
    acc += p[m];
    if (u < acc) return static_cast<int>(m);
  }
  return static_cast<int>(p.size()) - 1;
}

Vec shifted_theta(const EntryProbit& model, const Vec& theta, double shift) {
  Vec t = theta;
  t[model.i_delta1()] += shift;
  t[model.i_delta2()] += shift;
  return t;
}

}  // namespace

Dataset simulate_correct(const DgpConfig& cfg, std::uint64_t stream) {
  cfg.validate();
  const EntryProbit model = design_model(cfg.design);
  const CovariateSource src(cfg);
  const Vec theta = cfg.theta();
  SeededRng rng(cfg.seed, stream);
  Dataset d;
  d.space = model.outcomes();
  d.x.resize(cfg.n, src.dim());
  d.y.resize(static_cast<std::size_t>(cfg.n));
  for (int i = 0; i < cfg.n; ++i) {
    const Vec x = src.draw(rng);
    d.x.row(i) = x.transpose();
    d.y[static_cast<std::size_t>(i)] = draw_index(dgp_probs(model, theta, cfg.kappa, x), rng.uniform());
  }
  return d;
}

Dataset simulate_misspecified(const DgpConfig& cfg, std::uint64_t stream) {
  cfg.validate();
  const EntryProbit model = design_model(cfg.design);
  const CovariateSource src(cfg);
  const Vec theta = cfg.theta();
  SeededRng rng(cfg.seed, stream);
  Dataset d;
  d.space = model.outcomes();
  d.x.resize(cfg.n, src.dim());
  d.y.resize(static_cast<std::size_t>(cfg.n));
  const double delta1 = theta[model.i_delta1()];
  const double delta2 = theta[model.i_delta2()];
  for (int i = 0; i < cfg.n; ++i) {
    const Vec x = src.draw(rng);
    d.x.row(i) = x.transpose();
    const int xstar = rng.uniform() < omitted_probability(src, x) ? 1 : 0;
    const double u1 = rng.normal();
    const double u2 = rng.normal();
    const double sel = rng.uniform();
    const double v1 = model.index(1, theta, x) + u1;
    const double v2 = model.index(2, theta, x) + u2;
    const double d1 = delta1 + cfg.gamma * xstar;
    const double d2 = delta2 + cfg.gamma * xstar;
    // Pure-strategy equilibria of the 2x2 game with payoffs v_j + d_j y_{-j}.
    const bool e00 = v1 < 0.0 && v2 < 0.0;
    const bool e11 = v1 + d1 >= 0.0 && v2 + d2 >= 0.0;
    const bool e10 = v1 >= 0.0 && v2 + d2 < 0.0;
    const bool e01 = v1 + d1 < 0.0 && v2 >= 0.0;
    int y = -1;
    if (e10 && e01) y = sel < cfg.kappa ? model.idx10() : model.idx01();
    else if (e00) y = model.idx00();
    else if (e11) y = model.idx11();
    else if (e10) y = model.idx10();
    else if (e01) y = model.idx01();
    if (y < 0) throw NumericError("simulate_misspecified: no pure-strategy equilibrium (invariant violated)");
    d.y[static_cast<std::size_t>(i)] = y;
  }
  return d;
}

Dataset simulate(const DgpConfig& cfg, std::uint64_t stream) {
  return cfg.gamma == 0.0 ? simulate_correct(cfg, stream) : simulate_misspecified(cfg, stream);
}

Vec misspecified_probs(const EntryProbit& model, const DgpConfig& cfg, const CovariateSource& src,
                       const Vec& x) {
  const Vec theta = cfg.theta();
  const Vec q0 = dgp_probs(model, theta, cfg.kappa, x);
  if (cfg.gamma == 0.0) return q0;
  const double w = omitted_probability(src, x);
  return (1.0 - w) * q0 + w * dgp_probs(model, shifted_theta(model, theta, cfg.gamma), cfg.kappa, x);
}

Population dgp_population(const DgpConfig& cfg, int nodes_per_dim) {
  cfg.validate();
  const EntryProbit model = design_model(cfg.design);
  const CovariateSource src(cfg);
  Population pop;
  if (!src.synthetic()) {
    // Empirical support of the covariate file.
    const Mat pool = read_numeric_csv(cfg.covariate_file).leftCols(src.dim());
    for (Eigen::Index i = 0; i < pool.rows(); ++i) {
      pop.x.push_back(pool.row(i).transpose());
      pop.pmf.push_back(misspecified_probs(model, cfg, src, pop.x.back()));
      pop.weight.push_back(1.0);
    }
    return pop;
  }
  const int d = src.dim();
  if (nodes_per_dim <= 0) nodes_per_dim = d == 2 ? 32 : 12;
  std::vector<double> nodes;
  std::vector<double> weights;
  auto add_rule = [&](const auto& absc, const auto& wts, bool odd) {
    // boost stores the nonnegative half of the symmetric rule on [-1, 1].
    for (std::size_t k = 0; k < absc.size(); ++k) {
      const double a = absc[k];
      const double w = wts[k];
      if (odd && k == 0) {
        nodes.push_back(0.5);
        weights.push_back(0.5 * w);
        continue;
      }
      nodes.push_back(0.5 * (1 - a));
      weights.push_back(0.5 * w);
      nodes.push_back(0.5 * (1 + a));
      weights.push_back(0.5 * w);
    }
  };
  switch (nodes_per_dim) {
    case 8: add_rule(boost::math::quadrature::gauss<double, 8>::abscissa(), boost::math::quadrature::gauss<double, 8>::weights(), false); break;
    case 12: add_rule(boost::math::quadrature::gauss<double, 12>::abscissa(), boost::math::quadrature::gauss<double, 12>::weights(), false); break;
    case 16: add_rule(boost::math::quadrature::gauss<double, 16>::abscissa(), boost::math::quadrature::gauss<double, 16>::weights(), false); break;
    case 32: add_rule(boost::math::quadrature::gauss<double, 32>::abscissa(), boost::math::quadrature::gauss<double, 32>::weights(), false); break;
    default: throw ConfigError("dgp_population: supported node counts are 8, 12, 16, 32");
  }
  const auto k = nodes.size();
  std::size_t total = 1;
  for (int j = 0; j < d; ++j) total *= k;
  for (std::size_t t = 0; t < total; ++t) {
    Vec x(d);
    double w = 1.0;
    std::size_t rem = t;
    for (int j = d - 1; j >= 0; --j) {
      x[j] = nodes[rem % k];
      w *= weights[rem % k];
      rem /= k;
    }
    pop.x.push_back(x);
    pop.weight.push_back(w);
  }
  pop.pmf.resize(total);
  parallel_for(total, [&](std::size_t t) { pop.pmf[t] = misspecified_probs(model, cfg, src, pop.x[t]); });
  return pop;
}

// ---------------------------------------------------------------------------

namespace {

struct PseudoTrueProblem {
  const EntryProbit* model;
  const Population* pop;
  ParamBox box;
};

// Negative expected profiled log-likelihood, evaluated at the box projection
// of theta with a quadratic penalty on the distance to the box.
double pt_eval(const PseudoTrueProblem& pr, const Vec& theta, Vec* grad) {
  const Vec clamped = theta.cwiseMax(pr.box.lo).cwiseMin(pr.box.hi);
  const Vec diff = theta - clamped;
  constexpr double penalty = 1e4;
  double total = 0.0;
  double wsum = 0.0;
  Vec g = Vec::Zero(theta.size());
  const auto& pop = *pr.pop;
  std::vector<double> ll(pop.size());
  std::vector<Vec> gs(pop.size());
  parallel_for(pop.size(), [&](std::size_t i) {
    const ProjectionResult r = project_entry_closed_form(pop.pmf[i], clamped, pop.x[i], *pr.model);
    ll[i] = r.loglik;
    if (grad) {
      gs[i] = score_entry_closed_form(*pr.model, clamped, pop.x[i], pop.pmf[i]).values * pop.pmf[i];
    }
  });
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const double w = pop.weight.empty() ? 1.0 : pop.weight[i];
    total += w * ll[i];
    if (grad) g += w * gs[i];
    wsum += w;
  }
  if (grad) *grad = -g / wsum + 2.0 * penalty * diff;
  return -total / wsum + penalty * diff.squaredNorm();
}

Vec to_vec(const gsl_vector* v) {
  Vec out(static_cast<Eigen::Index>(v->size));
  for (std::size_t i = 0; i < v->size; ++i) out[static_cast<Eigen::Index>(i)] = gsl_vector_get(v, i);
  return out;
}

double pt_f(const gsl_vector* v, void* params) {
  return pt_eval(*static_cast<PseudoTrueProblem*>(params), to_vec(v), nullptr);
}

void pt_df(const gsl_vector* v, void* params, gsl_vector* df) {
  Vec g;
  pt_eval(*static_cast<PseudoTrueProblem*>(params), to_vec(v), &g);
  for (std::size_t i = 0; i < df->size; ++i) gsl_vector_set(df, i, g[static_cast<Eigen::Index>(i)]);
}

void pt_fdf(const gsl_vector* v, void* params, double* f, gsl_vector* df) {
  Vec g;
  *f = pt_eval(*static_cast<PseudoTrueProblem*>(params), to_vec(v), &g);
  for (std::size_t i = 0; i < df->size; ++i) gsl_vector_set(df, i, g[static_cast<Eigen::Index>(i)]);
}

}  // namespace

Vec locate_pseudo_true(const EntryProbit& model, const Population& pop, const Vec& init) {
  PseudoTrueProblem pr{&model, &pop, model.param_space()};
  const auto d = static_cast<std::size_t>(init.size());
  gsl_multimin_function_fdf fn;
  fn.n = d;
  fn.f = pt_f;
  fn.df = pt_df;
  fn.fdf = pt_fdf;
  fn.params = &pr;
  gsl_vector* x = gsl_vector_alloc(d);
  for (std::size_t i = 0; i < d; ++i) gsl_vector_set(x, i, init[static_cast<Eigen::Index>(i)]);
  gsl_multimin_fdfminimizer* s = gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, d);
  gsl_multimin_fdfminimizer_set(s, &fn, x, 0.01, 0.1);
  int status = GSL_CONTINUE;
  for (int it = 0; it < 2000 && status == GSL_CONTINUE; ++it) {
    if (gsl_multimin_fdfminimizer_iterate(s)) break;
    status = gsl_multimin_test_gradient(s->gradient, 1e-10);
  }
  Vec out = to_vec(s->x).cwiseMax(pr.box.lo).cwiseMin(pr.box.hi);
  gsl_multimin_fdfminimizer_free(s);
  gsl_vector_free(x);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct MleProblem {
  const EntryProbit* model;
  const Dataset* data;
  ParamBox box;
  double best_kappa = 0.0;
};

// Log-likelihood maximized over kappa. For each observation the completed
// pmf is affine in kappa: q_i = a_i + kappa b_i.
double profile_kappa(const EntryProbit& model, const Dataset& data, const Vec& theta, double* kappa) {
  const std::size_t n = data.size();
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec x = data.row(i);
    const RegionProbs r = model.regions(theta, x, false);
    const EtaTriple e = eta(r);
    const int y = data.y[i];
    if (y == model.idx00()) {
      a[i] = r.s00;
      b[i] = 0.0;
    } else if (y == model.idx11()) {
      a[i] = r.s11;
      b[i] = 0.0;
    } else if (y == model.idx10()) {
      a[i] = e.eta3;
      b[i] = e.eta2 - e.eta3;
    } else {
      a[i] = e.eta1 - e.eta3;
      b[i] = -(e.eta2 - e.eta3);
    }
  }
  auto negll = [&](double k) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::log(std::max(a[i] + k * b[i], 1e-300));
    return -s;
  };
  const auto [k, v] = boost::math::tools::brent_find_minima(negll, 0.0, 1.0, 40);
  // Brent works on the open interval; compare with the endpoints.
  double best_k = k;
  double best_v = v;
  for (double edge : {0.0, 1.0}) {
    const double ve = negll(edge);
    if (ve < best_v) {
      best_v = ve;
      best_k = edge;
    }
  }
  if (kappa) *kappa = best_k;
  return -best_v;
}

double mle_f(const gsl_vector* v, void* params) {
  auto& pr = *static_cast<MleProblem*>(params);
  const Vec theta = to_vec(v);
  if (!pr.box.contains(theta)) return 1e100;
  try {
    return -profile_kappa(*pr.model, *pr.data, theta, nullptr);
  } catch (const Error&) {
    return 1e100;
  }
}

}  // namespace

double completed_loglik(const EntryProbit& model, const Dataset& data, const Vec& theta,
                        double kappa) {
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vec q = dgp_probs(model, theta, kappa, data.row(i));
    s += std::log(std::max(q[data.y[i]], 1e-300));
  }
  return s;
}

MleResult mle_completed(const EntryProbit& model, const Dataset& data, const Vec& init,
                        int max_iter) {
  data.validate();
  if (data.size() < 50) throw DomainError("mle_completed: need at least 50 observations");
  MleProblem pr{&model, &data, model.param_space(), 0.0};
  if (!pr.box.contains(init)) throw DomainError("mle_completed: initial value outside the parameter space");
  const auto d = static_cast<std::size_t>(init.size());
  gsl_multimin_function fn{mle_f, d, &pr};
  gsl_vector* x = gsl_vector_alloc(d);
  gsl_vector* step = gsl_vector_alloc(d);
  for (std::size_t i = 0; i < d; ++i) {
    gsl_vector_set(x, i, init[static_cast<Eigen::Index>(i)]);
    gsl_vector_set(step, i, 0.1);
  }
  // Keep the initial simplex inside the box for the interaction terms.
  for (int idx : {model.i_delta1(), model.i_delta2()}) {
    gsl_vector_set(step, static_cast<std::size_t>(idx), -0.1);
  }
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, d);
  gsl_multimin_fminimizer_set(s, &fn, x, step);
  MleResult res;
  double prev = std::numeric_limits<double>::infinity();
  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    if (gsl_multimin_fminimizer_iterate(s)) break;
    const double size = gsl_multimin_fminimizer_size(s);
    const double fval = s->fval;
    if (size < 1e-8 && std::fabs(prev - fval) < 1e-8) {
      res.converged = true;
      break;
    }
    prev = fval;
  }
  res.theta = to_vec(s->x);
  res.loglik = profile_kappa(model, data, res.theta, &res.kappa);
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(x);
  gsl_vector_free(step);
  return res;
}

// ---------------------------------------------------------------------------

namespace {
constexpr double kUniformP11 = 0.09;
constexpr double kUniformP10 = 0.21;
}  // namespace

Vec uniform_game_pmf(double gamma, double x) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw DomainError("uniform game: gamma must lie in [0,1]");
  const double k = (1.0 - gamma) * x + gamma * (1.0 - x);
  Vec p(3);  // (1,1), (0,1), (1,0)
  p[0] = kUniformP11 * k + 0.25 * (1.0 - k);
  p[2] = kUniformP10 * k + 0.25 * (1.0 - k);
  p[1] = 1.0 - p[0] - p[2];
  return p;
}

Population uniform_game_population(double gamma) {
  Population pop;
  for (double x : {0.0, 1.0}) {
    pop.x.push_back(Vec::Constant(1, x));
    pop.pmf.push_back(uniform_game_pmf(gamma, x));
    pop.weight.push_back(0.5);
  }
  return pop;
}

UniformArc uniform_game_arc(double gamma) {
  const Vec p = uniform_game_pmf(gamma, 1.0);
  UniformArc a;
  a.p11 = p[0];
  a.vartheta1_lo = p[0] / (1.0 - p[2]);
  a.vartheta1_hi = 1.0 - p[1];
  return a;
}

Population choiceset_population(double gamma, double a_lo, double a_hi, double theta0) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw DomainError("choice-set design: gamma must lie in [0,1]");
  const double hi = (1.0 - gamma) * std::pow(a_hi, theta0) + gamma * std::pow(a_lo, theta0);
  const double lo = (1.0 - gamma) * std::pow(a_lo, theta0) + gamma * std::pow(a_hi, theta0);
  Population pop;
  for (auto [z, mass] : {std::pair{a_lo, lo}, std::pair{a_hi, hi}}) {
    Vec p(3);
    p << 1.0 - mass, 0.5 * mass, 0.5 * mass;
    pop.x.push_back(Vec::Constant(1, z));
    pop.pmf.push_back(p);
    pop.weight.push_back(0.5);
  }
  return pop;
}

Dataset simulate_population(const Population& pop, const OutcomeSpace& space, std::size_t n,
                            SeededRng& rng) {
  if (pop.size() == 0) throw DomainError("simulate_population: empty support");
  Vec w(static_cast<Eigen::Index>(pop.size()));
  for (std::size_t k = 0; k < pop.size(); ++k) w[static_cast<Eigen::Index>(k)] = pop.weight.empty() ? 1.0 : pop.weight[k];
  w /= w.sum();
  Dataset d;
  d.space = space;
  d.x.resize(static_cast<Eigen::Index>(n), pop.x[0].size());
  d.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(draw_index(w, rng.uniform()));
    d.x.row(static_cast<Eigen::Index>(i)) = pop.x[k].transpose();
    d.y[i] = draw_index(pop.pmf[k], rng.uniform());
  }
  return d;
}

// ---------------------------------------------------------------------------

RejectionTable run_rejection_experiment(const Model& model,
                                        const std::function<Dataset(std::size_t)>& draw,
                                        const Vec& theta_star, const std::vector<double>& h_grid,
                                        const Vec& direction, int reps, std::size_t n,
                                        double alpha, double epsilon, const CcpConfig& ccp,
                                        ScoreMethod method, const SmoothingConfig& smoothing,
                                        double gamma) {
  using clock = std::chrono::steady_clock;
  auto secs = [](clock::time_point a, clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  };
  if (reps < 1) throw ConfigError("experiment: reps must be positive");
  if (h_grid.empty()) throw ConfigError("experiment: empty h grid");
  if (direction.size() != model.dim() || theta_star.size() != model.dim()) {
    throw ConfigError("experiment: theta_star and direction must have length " + std::to_string(model.dim()));
  }
  RejectionTable table;
  table.theta_star = theta_star;
  const auto t0 = clock::now();
  table.critical = chi2_quantile(model.dim(), 1.0 - alpha);
  table.seconds.critical = secs(t0, clock::now());

  const std::size_t nh = h_grid.size();
  const auto r_count = static_cast<std::size_t>(reps);
  table.statistics.assign(r_count, std::vector<double>(nh, std::numeric_limits<double>::quiet_NaN()));
  std::vector<std::vector<std::string>> errors(r_count, std::vector<std::string>(nh));
  std::vector<StageTimes> times(r_count);
  const ParamBox box = model.param_space();
  const double root_n = std::sqrt(static_cast<double>(n));

  parallel_for(r_count, [&](std::size_t r) {
    auto a = clock::now();
    Dataset data;
    CcpPtr fit;
    try {
      data = draw(r);
      auto b = clock::now();
      times[r].simulate = secs(a, b);
      fit = fit_ccp(data, ccp);
      a = clock::now();
      times[r].ccp = secs(b, a);
    } catch (const Error& e) {
      for (auto& msg : errors[r]) msg = e.what();
      return;
    }
    SmoothingConfig sm = smoothing;
    sm.seed = smoothing.seed + 1000003ULL * r;
    for (std::size_t k = 0; k < nh; ++k) {
      const Vec theta = theta_star + h_grid[k] * direction / root_n;
      if (!box.contains(theta)) {
        errors[r][k] = "theta outside the parameter space";
        continue;
      }
      try {
        table.statistics[r][k] = rao_statistic(model, theta, data, *fit, epsilon, alpha, method, sm).t_n;
      } catch (const Error& e) {
        errors[r][k] = e.what();
      }
    }
    times[r].statistic = secs(a, clock::now());
  });

  for (const auto& t : times) {
    table.seconds.simulate += t.simulate;
    table.seconds.ccp += t.ccp;
    table.seconds.statistic += t.statistic;
  }
  for (std::size_t k = 0; k < nh; ++k) {
    RejectionRow row;
    row.gamma = gamma;
    row.h = h_grid[k];
    int rej = 0;
    for (std::size_t r = 0; r < r_count; ++r) {
      const double t = table.statistics[r][k];
      if (std::isnan(t)) {
        ++row.failures;
        if (table.failure_messages.size() < 10) {
          table.failure_messages.push_back("rep " + std::to_string(r) + ", h=" + std::to_string(h_grid[k]) + ": " + errors[r][k]);
        }
        continue;
      }
      ++row.reps;
      if (t > table.critical) ++rej;
    }
    if (row.reps > 0) {
      row.rejection_rate = static_cast<double>(rej) / row.reps;
      row.mc_se = std::sqrt(row.rejection_rate * (1.0 - row.rejection_rate) / row.reps);
    } else {
      row.rejection_rate = std::numeric_limits<double>::quiet_NaN();
      row.mc_se = std::numeric_limits<double>::quiet_NaN();
    }
    table.rows.push_back(row);
  }
  return table;
}

RejectionTable size_power_experiment(const ExperimentConfig& cfg) {
  cfg.dgp.validate();
  const EntryProbit model = design_model(cfg.dgp.design);
  Vec theta_star = cfg.theta_star;
  if (theta_star.size() == 0) {
    theta_star = cfg.dgp.gamma == 0.0
                     ? cfg.dgp.theta()
                     : locate_pseudo_true(model, dgp_population(cfg.dgp), cfg.dgp.theta());
  }
  Vec direction = cfg.direction;
  if (direction.size() == 0) {
    direction = Vec::Zero(model.dim());
    direction[model.i_delta1()] = 1.0;
    direction[model.i_delta2()] = 1.0;
  }
  const DgpConfig dgp = cfg.dgp;
  auto draw = [&dgp](std::size_t r) { return simulate(dgp, r); };
  return run_rejection_experiment(model, draw, theta_star, cfg.h_grid, direction, cfg.reps,
                                  static_cast<std::size_t>(cfg.dgp.n), cfg.alpha, cfg.epsilon,
                                  cfg.ccp, cfg.method, cfg.smoothing, cfg.dgp.gamma);
}

namespace {
Vec json_to_vec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}
std::vector<double> vec_to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }
}  // namespace

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    const auto& d = j.contains("dgp") ? j.at("dgp") : j;
    c.dgp.design = parse_design(d.value("design", std::string("D1")));
    if (d.contains("theta0")) c.dgp.theta0 = json_to_vec(d.at("theta0"));
    c.dgp.kappa = d.value("kappa", c.dgp.kappa);
    c.dgp.gamma = d.value("gamma", c.dgp.gamma);
    c.dgp.n = d.value("n", c.dgp.n);
    c.dgp.covariate_file = d.value("covariate_file", std::string());
    c.dgp.seed = d.value("seed", c.dgp.seed);
    if (j.contains("theta_star")) c.theta_star = json_to_vec(j.at("theta_star"));
    c.alpha = j.value("alpha", c.alpha);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.reps = j.value("reps", c.reps);
    if (j.contains("h_grid")) c.h_grid = j.at("h_grid").get<std::vector<double>>();
    if (j.contains("direction")) c.direction = json_to_vec(j.at("direction"));
    if (j.contains("ccp")) c.ccp = ccp_config_from_json(j.at("ccp"));
    c.method = parse_score_method(j.value("method", std::string("closed_form")));
    if (j.contains("smoothing")) {
      const auto& s = j.at("smoothing");
      c.smoothing.c_sigma = s.value("c_sigma", c.smoothing.c_sigma);
      c.smoothing.R = s.value("R", c.smoothing.R);
      c.smoothing.sigma = s.value("sigma", c.smoothing.sigma);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("experiment config: alpha must lie in (0,1)");
  c.dgp.validate();
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["dgp"] = {{"design", to_string(c.dgp.design)}, {"theta0", vec_to_std(c.dgp.theta())},
              {"kappa", c.dgp.kappa}, {"gamma", c.dgp.gamma}, {"n", c.dgp.n},
              {"covariate_file", c.dgp.covariate_file}, {"seed", c.dgp.seed}};
  if (c.theta_star.size() > 0) j["theta_star"] = vec_to_std(c.theta_star);
  j["alpha"] = c.alpha;
  j["epsilon"] = c.epsilon;
  j["reps"] = c.reps;
  j["h_grid"] = c.h_grid;
  if (c.direction.size() > 0) j["direction"] = vec_to_std(c.direction);
  j["method"] = to_string(c.method);
  j["ccp"] = {{"kind", c.ccp.kind}, {"degree", c.ccp.degree}, {"knots", c.ccp.knots}, {"clip", c.ccp.clip}};
  j["smoothing"] = {{"c_sigma", c.smoothing.c_sigma}, {"R", c.smoothing.R}, {"sigma", c.smoothing.sigma}};
  return j;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw DomainError("spearman: need two equal-length samples");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const Eigen::Map<const Vec> va(ra.data(), static_cast<Eigen::Index>(ra.size()));
  const Eigen::Map<const Vec> vb(rb.data(), static_cast<Eigen::Index>(rb.size()));
  const Vec ca = va.array() - va.mean();
  const Vec cb = vb.array() - vb.mean();
  const double den = std::sqrt(ca.squaredNorm() * cb.squaredNorm());
  if (!(den > 0.0)) return 0.0;
  return ca.dot(cb) / den;
}

double ks_chi2(std::vector<double> sample, int df) {
  if (sample.empty()) throw DomainError("ks_chi2: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = chi2_cdf(df, std::max(sample[i], 0.0));
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

}  // namespace setinf
