#pragma once

#include "setinf/ccp.hpp"
#include "setinf/models.hpp"
#include "setinf/projection.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace setinf {

enum class ScoreMethod { ClosedForm, Multiplier, Smoothed };
std::string to_string(ScoreMethod m);
ScoreMethod parse_score_method(const std::string& s);

// Column m holds s_theta(y_m | x; p).
struct ScoreMatrix {
  Mat values;
  Vec theta;
  Vec x;
  ScoreMethod method = ScoreMethod::Multiplier;
  // Active constraints left out of the multiplier system because their
  // representers were linearly dependent on earlier ones.
  std::vector<int> dropped;
};

// Multiplier construction from the KKT system of the projection. The active
// representers B (total mass first) and their containment gradients E give
// s(y_m) = E (B' Q B)^{-1} B'e_m with Q = diag(q*).
ScoreMatrix score_multiplier(const Model& model, const Vec& theta, const Vec& x, const Vec& p0x);

ScoreMatrix score_entry_closed_form(const EntryGame& model, const Vec& theta, const Vec& x,
                                    const Vec& p0x);

// Exact score matrix; ClosedForm requires an entry game.
ScoreMatrix score_matrix(const Model& model, const Vec& theta, const Vec& x, const Vec& p0x,
                         ScoreMethod method);

struct SmoothingConfig {
  double c_sigma = 0.075;
  int R = 1000;
  double sigma = 0.0;  // > 0 overrides the rate rule
  std::uint64_t seed = 0;

  // c_sigma (n R)^{-1/4} unless overridden.
  double bandwidth(std::size_t n) const;
  void validate() const;
};

// Gaussian-smoothing gradient estimate (1/(sigma R)) sum_r [f(t + sigma Z_r) - f(t)] Z_r.
// Evaluations returning nullopt are rejected and redrawn; more than R/10
// rejections raise NumericError. `rejected` receives the count.
Vec smoothed_gradient(const std::function<std::optional<double>(const Vec&)>& f, const Vec& theta,
                      double sigma, int R, SeededRng& rng, int* rejected = nullptr);

// Smoothed score of ln q*_theta(y | x; p).
Vec score_smoothed(const Model& model, const Vec& theta, int y, const Vec& x, const Vec& p,
                   double sigma, int R, SeededRng& rng, int* rejected = nullptr);

// One row per observation. Smoothed scores use rng stream i for row i.
Mat observation_scores(const Model& model, const Vec& theta, const Dataset& data,
                       const CcpEstimate& p_hat, ScoreMethod method,
                       const SmoothingConfig& cfg = {});

Vec average_score(const Model& model, const Vec& theta, const Dataset& data,
                  const CcpEstimate& p_hat, ScoreMethod method, const SmoothingConfig& cfg = {});

}  // namespace setinf
