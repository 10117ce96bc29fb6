#pragma once

#include "setinf/models.hpp"
#include "setinf/randomset.hpp"

#include <optional>
#include <string>
#include <vector>

namespace setinf {

enum class Region { None, Theta1, Theta2, Theta3 };
std::string to_string(Region r);

struct ProjectionResult {
  Vec q_star;
  // One multiplier per constraint of the set, under the convention
  //   p(y)/q*(y) = lambda_total - sum_i lambda_i b_i(y),
  // so lambda_i >= 0 for inequalities. Empty for the closed form.
  Vec lambda;
  double lambda_total = 0.0;
  std::vector<int> active;
  double kl = 0.0;
  double loglik = 0.0;
  Region region = Region::None;
  double kkt_residual = 0.0;
};

// Floor applied inside logarithms only.
constexpr double kLogFloor = 1e-8;
// Region predicates closer than this to a boundary resolve to Theta1.
constexpr double kRegionMargin = 1e-10;

ProjectionResult project_generic(const Vec& p0x, const ConstraintSet& cs);

// Closed-form projection for the entry game (probit or uniform shocks).
ProjectionResult project_entry_closed_form(const Vec& p0x, const Vec& theta, const Vec& x,
                                           const EntryGame& model);

// Region of the entry game at (theta, x, p0x); ties resolve to Theta1.
Region entry_region(const Vec& p0x, const EtaTriple& e, const EntryGame& model);

double kl_divergence(const Vec& p, const Vec& q, bool* abs_cont_violation = nullptr);

enum class Projector { Auto, Generic, ClosedForm };

// Projects with the closed form for entry games under Auto, generic otherwise.
ProjectionResult project(const Model& model, const Vec& theta, const Vec& x, const Vec& p0x,
                         Projector how = Projector::Auto);

double profiled_loglik(const Model& model, const Vec& theta, const Vec& x, const Vec& p0x,
                       Projector how = Projector::Auto);

// Covariate support points with conditional pmfs and weights.
struct Population {
  std::vector<Vec> x;
  std::vector<Vec> pmf;
  std::vector<double> weight;
  std::size_t size() const { return x.size(); }
};

double expected_profiled_loglik(const Model& model, const Vec& theta, const Population& pop,
                                Projector how = Projector::Auto);

// Weighted mean of KL(p0(.|x) || q*_theta(.|x)).
double expected_kl(const Model& model, const Vec& theta, const Population& pop,
                   Projector how = Projector::Auto);

}  // namespace setinf
