#include "setinf/cli.hpp"

#include "setinf/ccp.hpp"
#include "setinf/errors.hpp"
#include "setinf/inference.hpp"
#include "setinf/mc.hpp"
#include "setinf/models.hpp"
#include "setinf/parallel.hpp"
#include "setinf/projection.hpp"
#include "setinf/score.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>
#include <boost/version.hpp>
#include <gsl/gsl_version.h>
#include <nlohmann/json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#ifndef SETINF_VERSION
#define SETINF_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace setinf {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DomainError*>(&e)) return 2;
  if (dynamic_cast<const NumericError*>(&e)) return 3;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) return 4;
  if (dynamic_cast<const json::exception*>(&e)) return 2;
  return 1;
}

namespace {

struct Options {
  std::string config;
  std::string out = "setinf-out";
  std::string cs_file;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  bool overwrite = false;
  double alpha = 0.0;
  double epsilon = -1.0;
};

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// Shortest round-trip representation; independent of the global locale.
std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + '"';
}

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec json_vec(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

// ------------------------------------------------------------------ config

struct Loaded {
  json cfg;
  fs::path dir;  // relative paths inside the config resolve against this

  std::string path(const std::string& key) const {
    if (!cfg.contains(key)) throw ConfigError("config: missing '" + key + "'");
    return resolve(cfg.at(key).get<std::string>());
  }
  std::string resolve(const std::string& p) const {
    const fs::path fp(p);
    return fp.is_absolute() ? p : (dir / fp).lexically_normal().string();
  }
};

Loaded load_config(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open config file '" + file + "'");
  Loaded l;
  try {
    l.cfg = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + file + "' is not valid JSON: " + e.what());
  }
  if (!l.cfg.is_object()) throw ConfigError("config '" + file + "' must hold a JSON object");
  l.dir = fs::absolute(fs::path(file)).parent_path();
  return l;
}

ModelPtr load_model(const Loaded& l) {
  if (!l.cfg.contains("model")) throw ConfigError("config: missing 'model'");
  const json& m = l.cfg.at("model");
  if (m.is_string()) return load_model(load_config(l.resolve(m.get<std::string>())));
  return make_model(m);
}

Vec config_theta(const Loaded& l, const Model& model) {
  if (!l.cfg.contains("theta")) throw ConfigError("config: missing 'theta'");
  const Vec t = json_vec(l.cfg.at("theta"), "theta");
  if (t.size() != model.dim()) {
    throw ConfigError("config: theta has length " + std::to_string(t.size()) + ", model needs " +
                      std::to_string(model.dim()));
  }
  return t;
}

ScoreMethod config_method(const Loaded& l, const Model& model) {
  if (l.cfg.contains("method")) return parse_score_method(l.cfg.at("method").get<std::string>());
  return dynamic_cast<const EntryGame*>(&model) ? ScoreMethod::ClosedForm : ScoreMethod::Multiplier;
}

SmoothingConfig config_smoothing(const Loaded& l, const Options& opt) {
  SmoothingConfig s;
  if (l.cfg.contains("smoothing")) {
    const json& j = l.cfg.at("smoothing");
    s.c_sigma = j.value("c_sigma", s.c_sigma);
    s.R = j.value("R", s.R);
    s.sigma = j.value("sigma", s.sigma);
  }
  s.seed = opt.seed_set ? opt.seed : l.cfg.value("seed", std::uint64_t{0});
  s.validate();
  return s;
}

double config_alpha(const Loaded& l, const Options& opt) {
  const double a = opt.alpha > 0.0 ? opt.alpha : l.cfg.value("alpha", 0.05);
  if (!(a > 0.0 && a < 1.0)) throw ConfigError("alpha must lie in (0,1)");
  return a;
}

double config_epsilon(const Loaded& l, const Options& opt) {
  const double e = opt.epsilon >= 0.0 ? opt.epsilon : l.cfg.value("epsilon", 0.05);
  if (!(e >= 0.0)) throw ConfigError("epsilon must be nonnegative");
  return e;
}

Dataset load_data(const Loaded& l, const Model& model) {
  return read_dataset_csv(l.path("data"), model.outcomes(), l.cfg.value("outcome_column", std::string("y")));
}

CcpConfig config_ccp(const Loaded& l) {
  return l.cfg.contains("ccp") ? ccp_config_from_json(l.cfg.at("ccp")) : CcpConfig{};
}

std::vector<Vec> load_grid(const Loaded& l, const Model& model) {
  if (!l.cfg.contains("grid")) throw ConfigError("config: missing 'grid'");
  const json& g = l.cfg.at("grid");
  std::vector<Vec> out;
  if (g.contains("points")) {
    for (const auto& p : g.at("points")) out.push_back(json_vec(p, "grid.points[i]"));
  } else if (g.contains("file")) {
    const Mat m = read_numeric_csv(l.resolve(g.at("file").get<std::string>()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(m.row(i).transpose());
  } else {
    const ParamBox box = model.param_space();
    const Vec lo = g.contains("lower") ? json_vec(g.at("lower"), "grid.lower") : box.lo;
    const Vec hi = g.contains("upper") ? json_vec(g.at("upper"), "grid.upper") : box.hi;
    if (!lo.allFinite() || !hi.allFinite()) {
      throw ConfigError("grid: give finite 'lower' and 'upper' (the parameter space is unbounded)");
    }
    out = box_grid(lo, hi, g.at("counts").get<std::vector<int>>());
  }
  if (out.empty()) throw ConfigError("grid: no points");
  for (const auto& p : out) {
    if (p.size() != model.dim()) throw ConfigError("grid: point dimension does not match the model");
  }
  return out;
}

// Population spec: uniform_game | choiceset | dgp | explicit.
Population load_population(const Loaded& l) {
  if (!l.cfg.contains("population")) throw ConfigError("config: missing 'population'");
  const json& p = l.cfg.at("population");
  const std::string kind = p.value("kind", std::string("explicit"));
  if (kind == "uniform_game") return uniform_game_population(p.value("gamma", 0.0));
  if (kind == "choiceset") {
    return choiceset_population(p.value("gamma", 0.0), p.value("a_lo", 0.4), p.value("a_hi", 0.8),
                                p.value("theta0", 1.0));
  }
  if (kind == "dgp") {
    json d = p;
    if (d.contains("covariate_file")) d["covariate_file"] = l.resolve(d.at("covariate_file").get<std::string>());
    const ExperimentConfig e = experiment_from_json(json{{"dgp", d}});
    return dgp_population(e.dgp, p.value("nodes_per_dim", 0));
  }
  if (kind == "explicit") {
    Population pop;
    for (const auto& x : p.at("x")) pop.x.push_back(json_vec(x, "population.x[i]"));
    for (const auto& q : p.at("pmf")) pop.pmf.push_back(json_vec(q, "population.pmf[i]"));
    if (p.contains("weight")) {
      pop.weight = p.at("weight").get<std::vector<double>>();
    } else {
      pop.weight.assign(pop.x.size(), 1.0);
    }
    if (pop.x.empty() || pop.pmf.size() != pop.x.size() || pop.weight.size() != pop.x.size()) {
      throw ConfigError("population: x, pmf and weight must be nonempty and of equal length");
    }
    return pop;
  }
  throw ConfigError("population: unknown kind '" + kind + "'");
}

// ------------------------------------------------------------------ output

class RunDir {
 public:
  RunDir(const Options& opt, const std::string& command) {
    fs::path base(opt.out);
    if (opt.overwrite) {
      path_ = base;
    } else {
      const std::time_t now = std::time(nullptr);
      std::tm tm{};
      gmtime_r(&now, &tm);
      char stamp[32];
      std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
      const std::string stem = command + "-" + stamp;
      path_ = base / stem;
      for (int k = 1; fs::exists(path_); ++k) path_ = base / (stem + "-" + std::to_string(k));
    }
    std::error_code ec;
    fs::create_directories(path_, ec);
    if (ec) throw IoError("cannot create output directory '" + path_.string() + "': " + ec.message());
  }

  void write(const std::string& name, const std::string& content) {
    const fs::path p = path_ / name;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + p.string() + "'");
    out << content;
    if (!out) throw IoError("write failed for '" + p.string() + "'");
    files_.push_back(name);
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  const fs::path& path() const { return path_; }
  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path path_;
  std::vector<std::string> files_;
};

// Timings live under "runtime", the only part allowed to differ between reruns.
json manifest(const std::string& command, const Loaded& l, const Options& opt, const RunDir& dir,
              const json& timings) {
  json m;
  m["command"] = command;
  m["version"] = SETINF_VERSION;
  m["seed"] = opt.seed_set ? opt.seed : l.cfg.value("seed", std::uint64_t{0});
  m["config"] = l.cfg;
  m["outputs"] = dir.files();
  m["libraries"] = {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                  "." + std::to_string(EIGEN_MINOR_VERSION)},
                    {"gsl", GSL_VERSION},
                    {"boost", BOOST_LIB_VERSION},
                    {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  m["runtime"] = {{"threads", default_threads()}, {"seconds", timings}};
  return m;
}

void finish(RunDir& dir, const std::string& command, const Loaded& l, const Options& opt,
            const json& timings) {
  dir.write_json("manifest.json", manifest(command, l, opt, dir, timings));
  std::cout << dir.path().string() << "\n";
}

std::string param_header(const Model& model) {
  std::string h;
  for (const auto& name : model.param_names()) h += quote(name) + ",";
  return h;
}

// ------------------------------------------------------------------ commands

void cmd_project(const Options& opt) {
  const auto t0 = Clock::now();
  const Loaded l = load_config(opt.config);
  const ModelPtr model = load_model(l);
  const Vec theta = config_theta(l, *model);
  const Vec x = l.cfg.contains("x") ? json_vec(l.cfg.at("x"), "x") : Vec();
  if (!l.cfg.contains("p0")) throw ConfigError("config: missing 'p0'");
  const Vec p0 = json_vec(l.cfg.at("p0"), "p0");
  const std::string how = l.cfg.value("projector", std::string("auto"));
  Projector pr = Projector::Auto;
  if (how == "generic") pr = Projector::Generic;
  else if (how == "closed_form") pr = Projector::ClosedForm;
  else if (how != "auto") throw ConfigError("projector must be auto, generic or closed_form");

  const ProjectionResult r = project(*model, theta, x, p0, pr);
  json out;
  out["outcomes"] = model->outcomes().labels();
  out["q_star"] = vec_json(r.q_star);
  out["lambda"] = vec_json(r.lambda);
  out["lambda_total"] = r.lambda_total;
  out["active"] = r.active;
  out["kl"] = r.kl;
  out["loglik"] = r.loglik;
  out["region"] = to_string(r.region);
  out["kkt_residual"] = r.kkt_residual;
  RunDir dir(opt, "project");
  dir.write_json("project.json", out);
  finish(dir, "project", l, opt, {{"total", since(t0)}});
}

void cmd_score(const Options& opt) {
  const auto t0 = Clock::now();
  const Loaded l = load_config(opt.config);
  const ModelPtr model = load_model(l);
  const Vec theta = config_theta(l, *model);
  const ScoreMethod method = config_method(l, *model);
  json out;
  out["method"] = to_string(method);
  out["parameters"] = model->param_names();
  if (l.cfg.contains("p0")) {
    if (method == ScoreMethod::Smoothed) {
      throw ConfigError("score: the smoothed method needs a dataset ('data'), not a single p0");
    }
    const Vec x = l.cfg.contains("x") ? json_vec(l.cfg.at("x"), "x") : Vec();
    const Vec p0 = json_vec(l.cfg.at("p0"), "p0");
    const ScoreMatrix s = score_matrix(*model, theta, x, p0, method);
    json per;
    const auto& labels = model->outcomes().labels();
    for (Eigen::Index m = 0; m < s.values.cols(); ++m) per[labels[static_cast<std::size_t>(m)]] = vec_json(s.values.col(m));
    out["scores"] = per;
    out["mean"] = vec_json(s.values * p0);
  } else {
    const Dataset data = load_data(l, *model);
    const CcpPtr fit = fit_ccp(data, config_ccp(l));
    const Mat s = observation_scores(*model, theta, data, *fit, method, config_smoothing(l, opt));
    json rows = json::array();
    for (Eigen::Index i = 0; i < s.rows(); ++i) rows.push_back(vec_json(s.row(i).transpose()));
    out["observation_scores"] = rows;
    out["mean"] = vec_json(s.colwise().mean().transpose());
    out["ccp"] = fit->to_json();
  }
  RunDir dir(opt, "score");
  dir.write_json("score.json", out);
  finish(dir, "score", l, opt, {{"total", since(t0)}});
}

void cmd_test(const Options& opt) {
  const auto t0 = Clock::now();
  const Loaded l = load_config(opt.config);
  const ModelPtr model = load_model(l);
  const Vec theta = config_theta(l, *model);
  const Dataset data = load_data(l, *model);
  const auto t1 = Clock::now();
  const CcpPtr fit = fit_ccp(data, config_ccp(l));
  const double t_ccp = since(t1);
  const auto t2 = Clock::now();
  const TestOutcome t = rao_statistic(*model, theta, data, *fit, config_epsilon(l, opt), config_alpha(l, opt),
                                      config_method(l, *model), config_smoothing(l, opt));
  const double t_stat = since(t2);
  json out = {{"T_n", t.t_n}, {"df", t.df}, {"critical", t.critical}, {"reject", t.reject},
              {"n", t.n}, {"mean_score", vec_json(t.sbar)}, {"ccp", fit->to_json()}};
  if (!fit->warnings().empty()) out["warnings"] = fit->warnings();
  RunDir dir(opt, "test");
  dir.write_json("test.json", out);
  finish(dir, "test", l, opt, {{"ccp", t_ccp}, {"statistic", t_stat}, {"total", since(t0)}});
}

void cmd_cs(const Options& opt) {
  const auto t0 = Clock::now();
  const Loaded l = load_config(opt.config);
  const ModelPtr model = load_model(l);
  const std::vector<Vec> grid = load_grid(l, *model);
  const Dataset data = load_data(l, *model);
  const double alpha = config_alpha(l, opt);
  const double eps = config_epsilon(l, opt);
  const auto t1 = Clock::now();
  const CcpPtr fit = fit_ccp(data, config_ccp(l));
  const double t_ccp = since(t1);
  const auto t2 = Clock::now();
  const double crit = chi2_quantile(model->dim(), 1.0 - alpha);
  const double t_crit = since(t2);
  const auto t3 = Clock::now();
  const ConfidenceSet cs = confidence_set(*model, grid, data, *fit, alpha, eps, config_method(l, *model),
                                          config_smoothing(l, opt));
  const double t_stat = since(t3);

  std::string csv = param_header(*model) + "\"T_n\",\"accepted\",\"error\"\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (Eigen::Index j = 0; j < grid[i].size(); ++j) csv += fmt(grid[i][j]) + ",";
    csv += fmt(cs.statistics[i]) + "," + (cs.accepted[i] ? "1" : "0") + "," + quote(cs.errors[i]) + "\n";
  }
  RunDir dir(opt, "cs");
  dir.write("cs.csv", csv);
  json summary = {{"alpha", alpha}, {"epsilon", eps}, {"critical", crit}, {"grid_points", grid.size()},
                  {"accepted", cs.accepted_count()}, {"ccp", fit->to_json()}};
  if (!fit->warnings().empty()) summary["warnings"] = fit->warnings();
  dir.write_json("cs.json", summary);
  finish(dir, "cs", l, opt,
         {{"ccp", t_ccp}, {"statistic", t_stat}, {"critical", t_crit}, {"total", since(t0)}});
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        in_quotes = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  if (s == "nan") return std::nan("");
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw IoError(where + ": cannot parse number '" + s + "'");
  }
  return v;
}

ConfidenceSet read_cs_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open confidence-set file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + path + "' is empty");
  const auto header = split_csv_line(line);
  const auto it = std::find(header.begin(), header.end(), "T_n");
  if (it == header.end() || it + 1 == header.end() || *(it + 1) != "accepted") {
    throw IoError("'" + path + "' lacks the T_n and accepted columns");
  }
  const auto d = static_cast<std::size_t>(it - header.begin());
  ConfidenceSet cs;
  for (int row = 2; std::getline(in, line); ++row) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    const std::string where = path + ":" + std::to_string(row);
    if (cells.size() < d + 2) throw IoError(where + ": too few columns");
    Vec theta(static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) theta[static_cast<Eigen::Index>(j)] = parse_double(cells[j], where);
    cs.grid.push_back(theta);
    cs.statistics.push_back(parse_double(cells[d], where));
    cs.accepted.push_back(cells[d + 1] == "1" ? 1 : 0);
    cs.errors.push_back(cells.size() > d + 2 ? cells[d + 2] : "");
  }
  return cs;
}

void cmd_ci(const Options& opt) {
  const auto t0 = Clock::now();
  const Loaded l = load_config(opt.config);
  const std::string cs_path = opt.cs_file.empty() ? l.path("cs_file") : opt.cs_file;
  const ConfidenceSet cs = read_cs_csv(cs_path);
  if (!l.cfg.contains("functional")) throw ConfigError("config: missing 'functional'");
  const json& f = l.cfg.at("functional");
  const std::string kind = f.value("kind", std::string());
  std::function<double(const Vec&)> fn;
  ModelPtr model;
  if (kind == "coordinate") {
    const int j = f.at("index").get<int>();
    fn = [j](const Vec& t) {
      if (j < 0 || j >= t.size()) throw ConfigError("functional: coordinate index out of range");
      return t[j];
    };
  } else if (kind == "entry_probability") {
    model = load_model(l);
    const auto* probit = dynamic_cast<const EntryProbit*>(model.get());
    if (!probit) throw ConfigError("functional entry_probability needs an entry_probit model");
    fn = entry_probability_functional(*probit, f.at("player").get<int>(), json_vec(f.at("x"), "functional.x"),
                                      f.value("rival_entry", 0));
  } else {
    throw ConfigError("functional: kind must be coordinate or entry_probability");
  }
  const auto [lo, hi] = counterfactual_ci(cs, fn);
  RunDir dir(opt, "ci");
  dir.write_json("ci.json", {{"lower", lo}, {"upper", hi}, {"accepted_points", cs.accepted_count()},
                             {"grid_points", cs.grid.size()}, {"functional", f}});
  finish(dir, "ci", l, opt, {{"total", since(t0)}});
}

void cmd_pseudotrue(const Options& opt) {
  const auto t0 = Clock::now();
  const Loaded l = load_config(opt.config);
  const ModelPtr model = load_model(l);
  const std::vector<Vec> grid = load_grid(l, *model);
  const Population pop = load_population(l);
  const auto t1 = Clock::now();
  const PseudoTrueSet pt = pseudo_true_grid(*model, grid, pop, l.cfg.value("tol", -1.0));
  const double t_kl = since(t1);
  const auto t2 = Clock::now();
  const std::vector<Vec> sharp = sharp_set_grid(*model, grid, pop);
  const double t_sharp = since(t2);

  std::vector<char> in_sharp(grid.size(), 0);
  {
    std::size_t k = 0;
    for (std::size_t i = 0; i < grid.size() && k < sharp.size(); ++i) {
      if (grid[i] == sharp[k]) {
        in_sharp[i] = 1;
        ++k;
      }
    }
  }
  std::string csv = param_header(*model) + "\"divergence\",\"selected\",\"feasible\"\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (Eigen::Index j = 0; j < grid[i].size(); ++j) csv += fmt(grid[i][j]) + ",";
    csv += fmt(pt.divergence[i]) + "," + (pt.selected[i] ? "1" : "0") + "," + (in_sharp[i] ? "1" : "0") + "\n";
  }
  RunDir dir(opt, "pseudotrue");
  dir.write("pseudotrue.csv", csv);
  dir.write_json("pseudotrue.json", {{"min_divergence", pt.min_divergence}, {"tol", pt.tol},
                                     {"selected", pt.points().size()}, {"feasible", sharp.size()},
                                     {"grid_points", grid.size()}});
  finish(dir, "pseudotrue", l, opt, {{"divergence", t_kl}, {"sharp_set", t_sharp}, {"total", since(t0)}});
}

void cmd_mc(const Options& opt) {
  const auto t0 = Clock::now();
  Loaded l = load_config(opt.config);
  json spec = l.cfg;
  if (opt.alpha > 0.0) spec["alpha"] = opt.alpha;
  if (opt.epsilon >= 0.0) spec["epsilon"] = opt.epsilon;
  json& dgp = spec.contains("dgp") ? spec["dgp"] : spec;
  if (opt.seed_set) dgp["seed"] = opt.seed;
  if (dgp.contains("covariate_file")) dgp["covariate_file"] = l.resolve(dgp.at("covariate_file").get<std::string>());
  ExperimentConfig cfg = experiment_from_json(spec);
  cfg.smoothing.seed = cfg.dgp.seed;
  const RejectionTable t = size_power_experiment(cfg);

  std::string rows = "\"gamma\",\"h\",\"rejection_rate\",\"reps\",\"failures\",\"mc_se\"\n";
  for (const auto& r : t.rows) {
    rows += fmt(r.gamma) + "," + fmt(r.h) + "," + fmt(r.rejection_rate) + "," + std::to_string(r.reps) + "," +
            std::to_string(r.failures) + "," + fmt(r.mc_se) + "\n";
  }
  std::string stats = "\"rep\",\"h\",\"T_n\"\n";
  for (std::size_t r = 0; r < t.statistics.size(); ++r) {
    for (std::size_t k = 0; k < cfg.h_grid.size(); ++k) {
      stats += std::to_string(r) + "," + fmt(cfg.h_grid[k]) + "," + fmt(t.statistics[r][k]) + "\n";
    }
  }
  RunDir dir(opt, "mc");
  dir.write("rejection.csv", rows);
  dir.write("statistics.csv", stats);
  dir.write_json("experiment.json", {{"resolved", to_json(cfg)},
                                     {"theta_star", vec_json(t.theta_star)},
                                     {"critical", t.critical},
                                     {"failure_messages", t.failure_messages}});
  l.cfg = spec;
  finish(dir, "mc", l, opt,
         {{"simulate", t.seconds.simulate}, {"ccp", t.seconds.ccp}, {"statistic", t.seconds.statistic},
          {"critical", t.seconds.critical}, {"total", since(t0)}});
}

}  // namespace

std::string config_schemas() {
  const json num_array = {{"type", "array"}, {"items", {{"type", "number"}}}};
  const json model = {{"description", "model spec object, or path to a JSON file holding one"},
                      {"oneOf", json::array({{{"type", "string"}},
                                             {{"type", "object"},
                                              {"required", {"model"}},
                                              {"properties",
                                               {{"model", {{"enum", {"entry_probit", "entry_uniform", "choiceset"}}}},
                                                {"params", {{"type", "object"}}},
                                                {"param_space",
                                                 {{"type", "object"},
                                                  {"properties", {{"lower", num_array}, {"upper", num_array}}}}}}}}})}};
  const json grid = {{"type", "object"},
                     {"description", "box (lower, upper, counts), explicit points, or a numeric CSV file"},
                     {"properties", {{"lower", num_array}, {"upper", num_array},
                                     {"counts", {{"type", "array"}, {"items", {{"type", "integer"}}}}},
                                     {"points", {{"type", "array"}, {"items", num_array}}},
                                     {"file", {{"type", "string"}}}}}};
  const json inference = {{"alpha", {{"type", "number"}, {"default", 0.05}}},
                          {"epsilon", {{"type", "number"}, {"default", 0.05}}},
                          {"method", {{"enum", {"closed_form", "multiplier", "smoothed"}}}},
                          {"smoothing", {{"type", "object"},
                                         {"properties", {{"c_sigma", {{"type", "number"}, {"default", 0.075}}},
                                                         {"R", {{"type", "integer"}, {"default", 1000}}},
                                                         {"sigma", {{"type", "number"}}}}}}},
                          {"ccp", {{"type", "object"},
                                   {"properties", {{"kind", {{"enum", {"auto", "cell_mean", "bspline"}}}},
                                                   {"degree", {{"type", "integer"}, {"default", 3}}},
                                                   {"knots", {{"type", "array"}, {"items", {{"type", "integer"}}}}},
                                                   {"clip", {{"type", "number"}, {"default", 1e-3}}},
                                                   {"discrete_columns", {{"type", "array"}}}}}}},
                          {"seed", {{"type", "integer"}}}};
  json data_props = inference;
  data_props["model"] = model;
  data_props["data"] = {{"type", "string"}, {"description", "CSV with an outcome-label column and covariates"}};
  data_props["outcome_column"] = {{"type", "string"}, {"default", "y"}};

  json s;
  s["project"] = {{"required", {"model", "theta", "p0"}},
                  {"properties", {{"model", model}, {"theta", num_array}, {"x", num_array}, {"p0", num_array},
                                  {"projector", {{"enum", {"auto", "generic", "closed_form"}}}}}}};
  json score_props = data_props;
  score_props["theta"] = num_array;
  score_props["x"] = num_array;
  score_props["p0"] = num_array;
  s["score"] = {{"required", {"model", "theta"}},
                {"description", "give p0 (and x) for one covariate value, or data for per-observation scores"},
                {"properties", score_props}};
  json test_props = data_props;
  test_props["theta"] = num_array;
  s["test"] = {{"required", {"model", "data", "theta"}}, {"properties", test_props}};
  json cs_props = data_props;
  cs_props["grid"] = grid;
  s["cs"] = {{"required", {"model", "data", "grid"}}, {"properties", cs_props}};
  s["ci"] = {{"required", {"cs_file", "functional"}},
             {"properties",
              {{"cs_file", {{"type", "string"}}},
               {"model", model},
               {"functional", {{"type", "object"},
                               {"properties", {{"kind", {{"enum", {"coordinate", "entry_probability"}}}},
                                               {"index", {{"type", "integer"}}},
                                               {"player", {{"enum", {1, 2}}}},
                                               {"x", num_array},
                                               {"rival_entry", {{"enum", {0, 1}}}}}}}}}}};
  s["pseudotrue"] = {{"required", {"model", "grid", "population"}},
                     {"properties",
                      {{"model", model},
                       {"grid", grid},
                       {"tol", {{"type", "number"}}},
                       {"population",
                        {{"type", "object"},
                         {"properties", {{"kind", {{"enum", {"uniform_game", "choiceset", "dgp", "explicit"}}}},
                                         {"gamma", {{"type", "number"}}},
                                         {"x", {{"type", "array"}}},
                                         {"pmf", {{"type", "array"}}},
                                         {"weight", num_array}}}}}}}};
  s["mc"] = {{"required", {"dgp"}},
             {"properties",
              {{"dgp", {{"type", "object"},
                        {"properties", {{"design", {{"enum", {"D1", "D2"}}}},
                                        {"theta0", num_array},
                                        {"kappa", {{"type", "number"}, {"default", 0.0}}},
                                        {"gamma", {{"type", "number"}, {"default", 0.0}}},
                                        {"n", {{"type", "integer"}, {"default", 2000}}},
                                        {"covariate_file", {{"type", "string"}}},
                                        {"seed", {{"type", "integer"}, {"default", 1}}}}}}},
               {"theta_star", num_array},
               {"reps", {{"type", "integer"}, {"default", 200}}},
               {"h_grid", num_array},
               {"direction", num_array},
               {"alpha", inference["alpha"]},
               {"epsilon", inference["epsilon"]},
               {"method", inference["method"]},
               {"ccp", inference["ccp"]},
               {"smoothing", inference["smoothing"]}}}};
  return s.dump(2);
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Misspecification-robust set inference for incomplete discrete-outcome models"};
  app.require_subcommand(0, 1);
  Options opt;
  bool schema = false;
  app.add_flag("--schema", schema, "Print the JSON schemas of the config files and exit");
  app.add_option("--threads", opt.threads, "Worker threads (0 = all logical cores)")->check(CLI::NonNegativeNumber);

  struct Command {
    const char* name;
    const char* help;
    void (*run)(const Options&);
  };
  const Command commands[] = {
      {"project", "KL projection of p0 onto the model polytope", cmd_project},
      {"score", "Score vectors at theta", cmd_score},
      {"test", "Regularized Rao statistic at theta", cmd_test},
      {"cs", "Grid confidence set", cmd_cs},
      {"ci", "Interval for a functional over a confidence set", cmd_ci},
      {"pseudotrue", "Pseudo-true set of a known population on a grid", cmd_pseudotrue},
      {"mc", "Monte Carlo size and power experiment", cmd_mc},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", opt.config, "JSON configuration file")->required();
    sub->add_option("--out", opt.out, "Output directory")->capture_default_str();
    auto* seed = sub->add_option("--seed", opt.seed, "Seed (overrides the config)");
    sub->add_option("--threads", opt.threads, "Worker threads (0 = all logical cores)")->check(CLI::NonNegativeNumber);
    sub->add_flag("--overwrite", opt.overwrite, "Write into --out directly instead of a fresh subdirectory");
    sub->add_option("--alpha", opt.alpha, "Nominal level (overrides the config)");
    sub->add_option("--epsilon", opt.epsilon, "Regularization floor (overrides the config)");
    if (std::string(c.name) == "ci") sub->add_option("--cs", opt.cs_file, "Confidence-set CSV (overrides cs_file)");
    sub->callback([&opt, seed] { opt.seed_set = seed->count() > 0; });
    subs.emplace_back(sub, &c);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (schema) {
    std::cout << config_schemas() << "\n";
    return 0;
  }
  try {
    set_default_threads(opt.threads);
    for (const auto& [sub, c] : subs) {
      if (sub->parsed()) {
        c->run(opt);
        return 0;
      }
    }
    std::cerr << app.help();
    return 2;
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    std::cerr << "setinf: error: " << e.what() << "\n";
    return code;
  }
}

}  // namespace setinf
