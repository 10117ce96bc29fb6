#include "setinf/models.hpp"

#include "setinf/errors.hpp"

#include <cmath>
#include <limits>

namespace setinf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

nlohmann::json vec_json(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// Orthant probability with its partials, used to assemble region masses.
struct Orthant {
  double v = 0.0;
  BvnGrad g;
};

Orthant orthant(double h, double k, double rho, bool with_grad) {
  Orthant o;
  if (rho == 0.0) {
    const double ph = (h == kInf) ? 1.0 : normal_cdf(h);
    const double pk = (k == kInf) ? 1.0 : normal_cdf(k);
    o.v = ph * pk;
    if (with_grad) {
      o.g.dh = (h == kInf) ? 0.0 : normal_pdf(h) * pk;
      o.g.dk = (k == kInf) ? 0.0 : normal_pdf(k) * ph;
      o.g.drho = bvn_pdf(h, k, 0.0);
    }
    return o;
  }
  o.v = bvn_cdf(h, k, rho);
  if (with_grad) o.g = bvn_cdf_grad(h, k, rho);
  return o;
}

// Partials of a region mass with respect to (a1, c1, a2, c2, rho).
struct Partials {
  double a1 = 0, c1 = 0, a2 = 0, c2 = 0, rho = 0;
};

}  // namespace

bool ParamBox::contains(const Vec& theta) const {
  if (theta.size() != lo.size()) return false;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    if (!(theta[j] >= lo[j] && theta[j] <= hi[j])) return false;
  }
  return true;
}

void Model::check(const Vec& theta, const Vec&) const {
  if (theta.size() != dim()) {
    throw DomainError("parameter vector has length " + std::to_string(theta.size()) +
                      ", expected " + std::to_string(dim()));
  }
  if (!param_space().contains(theta)) throw DomainError("parameter outside the parameter space");
}

double Model::nu(const Vec& theta, EventMask a, const Vec& x) const {
  double v = 0.0;
  for (const auto& sm : set_masses(theta, x, false)) {
    if ((sm.set & ~a) == 0) v += sm.mass;
  }
  return v;
}

Vec Model::grad_nu(const Vec& theta, EventMask a, const Vec& x) const {
  Vec g = Vec::Zero(dim());
  for (const auto& sm : set_masses(theta, x, true)) {
    if ((sm.set & ~a) == 0) g += sm.grad;
  }
  return g;
}

EtaTriple eta(const RegionProbs& r) {
  EtaTriple e;
  e.eta1 = 1.0 - r.s00 - r.s11;
  e.eta2 = r.s10 + r.m;
  e.eta3 = r.s10;
  if (r.g00.size() > 0) {
    e.g1 = -r.g00 - r.g11;
    e.g2 = r.g10 + r.gm;
    e.g3 = r.g10;
  }
  return e;
}

void EntryGame::set_space(std::vector<std::string> labels) {
  space_ = OutcomeSpace(std::move(labels));
  for (int m = 0; m < space_.size(); ++m) {
    const auto& l = space_.label(m);
    if (l == "(0,0)") i00_ = m;
    else if (l == "(0,1)") i01_ = m;
    else if (l == "(1,0)") i10_ = m;
    else if (l == "(1,1)") i11_ = m;
  }
}

std::vector<SetMass> EntryGame::set_masses(const Vec& theta, const Vec& x,
                                           bool with_grad) const {
  const RegionProbs r = regions(theta, x, with_grad);
  const auto bit = [](int m) { return EventMask{1} << m; };
  std::vector<SetMass> out;
  if (i00_ >= 0) out.push_back({bit(i00_), r.s00, r.g00});
  out.push_back({bit(i11_), r.s11, r.g11});
  out.push_back({bit(i10_), r.s10, r.g10});
  out.push_back({bit(i01_), r.s01, r.g01});
  out.push_back({bit(i10_) | bit(i01_), r.m, r.gm});
  return out;
}

// ---------------------------------------------------------------------------
// Bivariate probit entry game

EntryProbit::EntryProbit(EntryProbitConfig cfg) : cfg_(std::move(cfg)) {
  set_space({"(0,0)", "(0,1)", "(1,0)", "(1,1)"});
  if (!(cfg_.c_delta > 0.0)) throw ConfigError("c_delta must be positive");
  if (!(cfg_.rho_max > 0.0 && cfg_.rho_max < 1.0)) throw ConfigError("rho_max must lie in (0,1)");
  if (!cfg_.estimate_rho && std::fabs(cfg_.rho) > cfg_.rho_max) {
    throw ConfigError("fixed rho outside [-rho_max, rho_max]");
  }
  for (int c : cfg_.cols1) {
    if (c < 0) throw ConfigError("negative covariate column");
    covariate_dim_ = std::max(covariate_dim_, c + 1);
  }
  for (int c : cfg_.cols2) {
    if (c < 0) throw ConfigError("negative covariate column");
    covariate_dim_ = std::max(covariate_dim_, c + 1);
  }
  if ((cfg_.lo.size() > 0 && cfg_.lo.size() != dim()) ||
      (cfg_.hi.size() > 0 && cfg_.hi.size() != dim())) {
    throw ConfigError("param_space bounds have the wrong length");
  }
}

int EntryProbit::dim() const { return k1() + k2() + 2 + (cfg_.estimate_rho ? 1 : 0); }

std::vector<std::string> EntryProbit::param_names() const {
  std::vector<std::string> names;
  for (int j = 0; j < k1(); ++j) names.push_back("beta1_" + std::to_string(j));
  names.push_back("delta1");
  for (int j = 0; j < k2(); ++j) names.push_back("beta2_" + std::to_string(j));
  names.push_back("delta2");
  if (cfg_.estimate_rho) names.push_back("rho");
  return names;
}

ParamBox EntryProbit::param_space() const {
  ParamBox box;
  box.lo = Vec::Constant(dim(), -kInf);
  box.hi = Vec::Constant(dim(), kInf);
  box.hi[i_delta1()] = -cfg_.c_delta;
  box.hi[i_delta2()] = -cfg_.c_delta;
  if (cfg_.estimate_rho) {
    box.lo[i_rho()] = -cfg_.rho_max;
    box.hi[i_rho()] = cfg_.rho_max;
  }
  if (cfg_.lo.size() > 0) box.lo = box.lo.cwiseMax(cfg_.lo);
  if (cfg_.hi.size() > 0) box.hi = box.hi.cwiseMin(cfg_.hi);
  return box;
}

nlohmann::json EntryProbit::to_json() const {
  nlohmann::json params = {{"player1_columns", cfg_.cols1},
                           {"player2_columns", cfg_.cols2},
                           {"estimate_rho", cfg_.estimate_rho},
                           {"rho", cfg_.rho},
                           {"rho_max", cfg_.rho_max},
                           {"c_delta", cfg_.c_delta}};
  const ParamBox box = param_space();
  auto bound = [](const Vec& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (std::isfinite(v[i])) a.push_back(v[i]);
      else a.push_back(nullptr);
    }
    return a;
  };
  return {{"model", kind()},
          {"params", params},
          {"param_space", {{"lower", bound(box.lo)}, {"upper", bound(box.hi)}}}};
}

void EntryProbit::check(const Vec& theta, const Vec& x) const {
  Model::check(theta, x);
  if (x.size() < covariate_dim_) {
    throw DomainError("covariate vector has length " + std::to_string(x.size()) +
                      ", the model reads column " + std::to_string(covariate_dim_ - 1));
  }
  if (!x.allFinite()) throw DomainError("non-finite covariate");
}

double EntryProbit::rho(const Vec& theta) const {
  return cfg_.estimate_rho ? theta[i_rho()] : cfg_.rho;
}

Vec EntryProbit::regressors1(const Vec& x) const {
  Vec r(k1());
  r[0] = 1.0;
  for (std::size_t j = 0; j < cfg_.cols1.size(); ++j) r[static_cast<Eigen::Index>(j) + 1] = x[cfg_.cols1[j]];
  return r;
}

Vec EntryProbit::regressors2(const Vec& x) const {
  Vec r(k2());
  r[0] = 1.0;
  for (std::size_t j = 0; j < cfg_.cols2.size(); ++j) r[static_cast<Eigen::Index>(j) + 1] = x[cfg_.cols2[j]];
  return r;
}

double EntryProbit::index(int player, const Vec& theta, const Vec& x) const {
  if (player == 1) return regressors1(x).dot(theta.segment(0, k1()));
  return regressors2(x).dot(theta.segment(i_beta2(), k2()));
}

RegionProbs EntryProbit::regions(const Vec& theta, const Vec& x, bool with_grad) const {
  const double r = rho(theta);
  if (std::fabs(r) > cfg_.rho_max) throw DomainError("rho too close to +-1");
  const Vec x1 = regressors1(x);
  const Vec x2 = regressors2(x);
  // Player j enters alone iff u_j >= a_j, and still enters facing a rival iff
  // u_j >= c_j = a_j - delta_j.
  const double a1 = -x1.dot(theta.segment(0, k1()));
  const double c1 = a1 - theta[i_delta1()];
  const double a2 = -x2.dot(theta.segment(i_beta2(), k2()));
  const double c2 = a2 - theta[i_delta2()];

  const Orthant gaa = orthant(a1, a2, r, with_grad);
  const Orthant gac = orthant(a1, c2, r, with_grad);
  const Orthant gca = orthant(c1, a2, r, with_grad);
  const Orthant gcc = orthant(c1, c2, r, with_grad);
  const double pa1 = normal_cdf(a1);
  const double pc1 = normal_cdf(c1);
  const double pc2 = normal_cdf(c2);

  RegionProbs out;
  out.s00 = std::max(0.0, gaa.v);
  out.s11 = std::max(0.0, 1.0 - pc1 - pc2 + gcc.v);
  out.m = std::max(0.0, gcc.v - gac.v - gca.v + gaa.v);
  out.s10 = std::max(0.0, (pc2 - gcc.v) + (gca.v - gaa.v));
  out.s01 = std::max(0.0, (pc1 - gcc.v) + (gac.v - gaa.v));
  (void)pa1;
  if (!with_grad) return out;

  Partials p00, p11, pm, p10, p01;
  p00.a1 = gaa.g.dh;
  p00.a2 = gaa.g.dk;
  p00.rho = gaa.g.drho;

  p11.c1 = -normal_pdf(c1) + gcc.g.dh;
  p11.c2 = -normal_pdf(c2) + gcc.g.dk;
  p11.rho = gcc.g.drho;

  pm.c1 = gcc.g.dh - gca.g.dh;
  pm.c2 = gcc.g.dk - gac.g.dk;
  pm.a1 = -gac.g.dh + gaa.g.dh;
  pm.a2 = -gca.g.dk + gaa.g.dk;
  pm.rho = gcc.g.drho - gac.g.drho - gca.g.drho + gaa.g.drho;

  p10.c2 = normal_pdf(c2) - gcc.g.dk;
  p10.c1 = -gcc.g.dh + gca.g.dh;
  p10.a2 = gca.g.dk - gaa.g.dk;
  p10.a1 = -gaa.g.dh;
  p10.rho = -gcc.g.drho + gca.g.drho - gaa.g.drho;

  p01.c1 = normal_pdf(c1) - gcc.g.dh;
  p01.c2 = -gcc.g.dk + gac.g.dk;
  p01.a1 = gac.g.dh - gaa.g.dh;
  p01.a2 = -gaa.g.dk;
  p01.rho = -gcc.g.drho + gac.g.drho - gaa.g.drho;

  const int d = dim();
  auto to_theta = [&](const Partials& pp) {
    Vec g = Vec::Zero(d);
    // da_j/dbeta_j = -x_j, dc_j/dbeta_j = -x_j, dc_j/ddelta_j = -1.
    g.segment(0, k1()) = -(pp.a1 + pp.c1) * x1;
    g[i_delta1()] = -pp.c1;
    g.segment(i_beta2(), k2()) = -(pp.a2 + pp.c2) * x2;
    g[i_delta2()] = -pp.c2;
    if (cfg_.estimate_rho) g[i_rho()] = pp.rho;
    return g;
  };
  out.g00 = to_theta(p00);
  out.g11 = to_theta(p11);
  out.gm = to_theta(pm);
  out.g10 = to_theta(p10);
  out.g01 = to_theta(p01);
  return out;
}

// ---------------------------------------------------------------------------
// Uniform-shock entry game

namespace {
ParamBox default_uniform_box() {
  ParamBox b;
  b.lo = Vec::Constant(2, -0.45);
  b.hi = Vec::Zero(2);
  return b;
}
}  // namespace

UniformEntry::UniformEntry() : UniformEntry(default_uniform_box()) {}

UniformEntry::UniformEntry(ParamBox box) : box_(std::move(box)) {
  set_space({"(1,1)", "(0,1)", "(1,0)"});
  if (box_.lo.size() != 2 || box_.hi.size() != 2) throw ConfigError("uniform game box must be 2-d");
}

nlohmann::json UniformEntry::to_json() const {
  return {{"model", kind()},
          {"params", nlohmann::json::object()},
          {"param_space", {{"lower", vec_json(box_.lo)}, {"upper", vec_json(box_.hi)}}}};
}

void UniformEntry::check(const Vec& theta, const Vec& x) const {
  Model::check(theta, x);
  if (x.size() != 1 || !(x[0] >= 0.0 && x[0] <= 1.0)) {
    throw DomainError("uniform game covariate must be a scalar in [0,1]");
  }
  for (int j = 0; j < 2; ++j) {
    const double d = -0.5 + theta[j] * x[0];
    if (d > 0.0 || d < -1.0) throw DomainError("uniform game interaction outside [-1,0]");
  }
}

RegionProbs UniformEntry::regions(const Vec& theta, const Vec& x, bool with_grad) const {
  const double xv = x[0];
  const double d1 = -0.5 + theta[0] * xv;
  const double d2 = -0.5 + theta[1] * xv;
  RegionProbs r;
  r.s00 = 0.0;
  r.s11 = (1.0 + d1) * (1.0 + d2);
  r.s10 = (1.0 + d1) * (-d2);
  r.s01 = (-d1) * (1.0 + d2);
  r.m = d1 * d2;
  if (with_grad) {
    r.g00 = Vec::Zero(2);
    r.g11 = Vec(2);
    r.g11 << xv * (1.0 + d2), xv * (1.0 + d1);
    r.g10 = Vec(2);
    r.g10 << -xv * d2, -xv * (1.0 + d1);
    r.g01 = Vec(2);
    r.g01 << -xv * (1.0 + d2), -xv * d1;
    r.gm = Vec(2);
    r.gm << xv * d2, xv * d1;
  }
  return r;
}

double uniform_game_nu(const Vec& theta, EventMask a, double x) {
  static const UniformEntry model;
  Vec xv(1);
  xv << x;
  model.check(theta, xv);
  return model.nu(theta, a, xv);
}

// ---------------------------------------------------------------------------
// Choice-set model

ChoiceSetModel::ChoiceSetModel(double a, ParamBox box)
    : space_({"1", "2", "3"}), a_(a), box_(std::move(box)) {
  if (!(a_ > 0.0) || !std::isfinite(a_)) throw ConfigError("choice-set scale A must be positive");
  if (box_.lo.size() != 1 || box_.hi.size() != 1 || !(box_.lo[0] > 0.0)) {
    throw ConfigError("choice-set parameter box must be a positive interval");
  }
}

nlohmann::json ChoiceSetModel::to_json() const {
  return {{"model", kind()},
          {"params", {{"A", a_}}},
          {"param_space", {{"lower", vec_json(box_.lo)}, {"upper", vec_json(box_.hi)}}}};
}

void ChoiceSetModel::check(const Vec& theta, const Vec& x) const {
  Model::check(theta, x);
  if (x.size() != 1) throw DomainError("choice-set covariate must be scalar");
  const double az = a_ * x[0];
  if (!(az > 0.0 && az < 1.0)) throw ConfigError("A*z must lie in (0,1)");
}

double ChoiceSetModel::eta(double theta, double z) const {
  return 1.0 - std::pow(a_ * z, theta);
}

std::vector<SetMass> ChoiceSetModel::set_masses(const Vec& theta, const Vec& x,
                                                bool with_grad) const {
  const double az = a_ * x[0];
  const double p = std::pow(az, theta[0]);
  Vec g12, g23;
  if (with_grad) {
    g23 = Vec::Constant(1, std::log(az) * p);
    g12 = -g23;
  }
  return {{0b011u, 1.0 - p, g12}, {0b110u, p, g23}};
}

double choiceset_model_nu(const ChoiceSetModel& model, double theta, EventMask a, double z) {
  Vec t(1), x(1);
  t << theta;
  x << z;
  model.check(t, x);
  return model.nu(t, a, x);
}

// ---------------------------------------------------------------------------

namespace {

ParamBox read_box(const nlohmann::json& spec, int dim, const ParamBox& fallback) {
  ParamBox box = fallback;
  if (!spec.contains("param_space")) return box;
  const auto& ps = spec.at("param_space");
  auto read = [&](const char* key, Vec* out) {
    if (!ps.contains(key)) return;
    const auto& arr = ps.at(key);
    if (!arr.is_array() || static_cast<int>(arr.size()) != dim) {
      throw ConfigError(std::string("param_space.") + key + " must have length " + std::to_string(dim));
    }
    for (int j = 0; j < dim; ++j) {
      if (!arr[j].is_null()) (*out)[j] = arr[j].get<double>();
    }
  };
  read("lower", &box.lo);
  read("upper", &box.hi);
  return box;
}

}  // namespace

ModelPtr make_model(const nlohmann::json& spec) {
  try {
    const std::string kind = spec.at("model").get<std::string>();
    const nlohmann::json params = spec.value("params", nlohmann::json::object());
    if (kind == "entry_probit") {
      EntryProbitConfig cfg;
      cfg.cols1 = params.value("player1_columns", std::vector<int>{});
      cfg.cols2 = params.value("player2_columns", std::vector<int>{});
      cfg.estimate_rho = params.value("estimate_rho", false);
      cfg.rho = params.value("rho", 0.0);
      cfg.rho_max = params.value("rho_max", 0.9);
      cfg.c_delta = params.value("c_delta", 1e-3);
      const EntryProbit probe(cfg);
      const ParamBox box = read_box(spec, probe.dim(), probe.param_space());
      cfg.lo = box.lo;
      cfg.hi = box.hi;
      return std::make_shared<EntryProbit>(cfg);
    }
    if (kind == "entry_uniform") {
      return std::make_shared<UniformEntry>(read_box(spec, 2, default_uniform_box()));
    }
    if (kind == "choiceset") {
      ParamBox fallback;
      fallback.lo = Vec::Constant(1, 0.01);
      fallback.hi = Vec::Constant(1, 10.0);
      return std::make_shared<ChoiceSetModel>(params.value("A", 1.0), read_box(spec, 1, fallback));
    }
    throw ConfigError("unknown model kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model specification: ") + e.what());
  }
}

}  // namespace setinf
