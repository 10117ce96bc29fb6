#pragma once

#include "setinf/numerics.hpp"
#include "setinf/randomset.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <string>
#include <vector>

namespace setinf {

// Probability that the predicted outcome set equals `set`, with its gradient.
struct SetMass {
  EventMask set = 0;
  double mass = 0.0;
  Vec grad;
};

struct ParamBox {
  Vec lo;
  Vec hi;
  bool contains(const Vec& theta) const;
};

class Model {
 public:
  virtual ~Model() = default;

  virtual std::string kind() const = 0;
  virtual const OutcomeSpace& outcomes() const = 0;
  virtual int dim() const = 0;
  virtual std::vector<std::string> param_names() const = 0;
  virtual ParamBox param_space() const = 0;
  virtual nlohmann::json to_json() const = 0;

  // Throws DomainError when theta leaves the parameter space or x is invalid.
  virtual void check(const Vec& theta, const Vec& x) const;

  // Distribution of the random predicted set G_theta(x), listed by set.
  virtual std::vector<SetMass> set_masses(const Vec& theta, const Vec& x,
                                          bool with_grad) const = 0;

  // Containment functional nu(A) = P(G subset of A) and its gradient.
  double nu(const Vec& theta, EventMask a, const Vec& x) const;
  Vec grad_nu(const Vec& theta, EventMask a, const Vec& x) const;
};

using ModelPtr = std::shared_ptr<const Model>;

// Region masses of the two-player entry game: both out, both in, player 1
// alone as unique equilibrium, player 2 alone, and the multiplicity region
// where (1,0) and (0,1) are both equilibria.
struct RegionProbs {
  double s00 = 0.0;
  double s11 = 0.0;
  double s10 = 0.0;
  double s01 = 0.0;
  double m = 0.0;
  Vec g00, g11, g10, g01, gm;
};

struct EtaTriple {
  double eta1 = 0.0;
  double eta2 = 0.0;
  double eta3 = 0.0;
  Vec g1, g2, g3;
};

EtaTriple eta(const RegionProbs& r);

class EntryGame : public Model {
 public:
  virtual RegionProbs regions(const Vec& theta, const Vec& x, bool with_grad) const = 0;

  const OutcomeSpace& outcomes() const override { return space_; }
  std::vector<SetMass> set_masses(const Vec& theta, const Vec& x,
                                  bool with_grad) const override;

  // Outcome indices within outcomes(); idx00() is -1 when (0,0) is not in the
  // support.
  int idx00() const { return i00_; }
  int idx01() const { return i01_; }
  int idx10() const { return i10_; }
  int idx11() const { return i11_; }

 protected:
  void set_space(std::vector<std::string> labels);

 private:
  OutcomeSpace space_;
  int i00_ = -1, i01_ = -1, i10_ = -1, i11_ = -1;
};

struct EntryProbitConfig {
  // Covariate columns entering each player's index after the intercept.
  std::vector<int> cols1;
  std::vector<int> cols2;
  bool estimate_rho = false;
  double rho = 0.0;
  double rho_max = 0.9;
  double c_delta = 1e-3;
  Vec lo;  // optional box overrides (empty = defaults)
  Vec hi;
};

// Bivariate-probit entry game. theta = (beta1, delta1, beta2, delta2[, rho]),
// each beta starting with the intercept.
class EntryProbit : public EntryGame {
 public:
  explicit EntryProbit(EntryProbitConfig cfg);

  std::string kind() const override { return "entry_probit"; }
  int dim() const override;
  std::vector<std::string> param_names() const override;
  ParamBox param_space() const override;
  nlohmann::json to_json() const override;
  void check(const Vec& theta, const Vec& x) const override;

  RegionProbs regions(const Vec& theta, const Vec& x, bool with_grad) const override;

  int k1() const { return static_cast<int>(cfg_.cols1.size()) + 1; }
  int k2() const { return static_cast<int>(cfg_.cols2.size()) + 1; }
  int i_delta1() const { return k1(); }
  int i_beta2() const { return k1() + 1; }
  int i_delta2() const { return k1() + 1 + k2(); }
  int i_rho() const { return cfg_.estimate_rho ? k1() + k2() + 2 : -1; }
  double rho(const Vec& theta) const;
  const EntryProbitConfig& config() const { return cfg_; }

  // Player regressor vectors (1, x[cols]).
  Vec regressors1(const Vec& x) const;
  Vec regressors2(const Vec& x) const;
  // x_j'beta_j for the given player (1 or 2).
  double index(int player, const Vec& theta, const Vec& x) const;

 private:
  EntryProbitConfig cfg_;
  int covariate_dim_ = 0;
};

// Entry game with independent uniform shocks, no covariate index, and
// interaction delta_j(x) = -0.5 + theta_j x. The outcome (0,0) has mass zero,
// so the support is {(1,1), (0,1), (1,0)}.
class UniformEntry : public EntryGame {
 public:
  UniformEntry();
  explicit UniformEntry(ParamBox box);

  std::string kind() const override { return "entry_uniform"; }
  int dim() const override { return 2; }
  std::vector<std::string> param_names() const override { return {"theta1", "theta2"}; }
  ParamBox param_space() const override { return box_; }
  nlohmann::json to_json() const override;
  void check(const Vec& theta, const Vec& x) const override;

  RegionProbs regions(const Vec& theta, const Vec& x, bool with_grad) const override;

 private:
  ParamBox box_;
};

// Three-alternative choice-set model: the predicted set is {1,2} with
// probability eta = 1 - (A z)^theta and {2,3} otherwise.
class ChoiceSetModel : public Model {
 public:
  ChoiceSetModel(double a, ParamBox box);

  std::string kind() const override { return "choiceset"; }
  const OutcomeSpace& outcomes() const override { return space_; }
  int dim() const override { return 1; }
  std::vector<std::string> param_names() const override { return {"theta"}; }
  ParamBox param_space() const override { return box_; }
  nlohmann::json to_json() const override;
  void check(const Vec& theta, const Vec& x) const override;

  double eta(double theta, double z) const;
  double a() const { return a_; }
  std::vector<SetMass> set_masses(const Vec& theta, const Vec& x,
                                  bool with_grad) const override;

 private:
  OutcomeSpace space_;
  double a_;
  ParamBox box_;
};

double uniform_game_nu(const Vec& theta, EventMask a, double x);
double choiceset_model_nu(const ChoiceSetModel& model, double theta, EventMask a, double z);

// {model: ..., params: {...}, param_space: {lower: [...], upper: [...]}}
ModelPtr make_model(const nlohmann::json& spec);

}  // namespace setinf
