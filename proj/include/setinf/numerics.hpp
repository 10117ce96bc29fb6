#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>

namespace setinf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

double normal_cdf(double z);
double normal_pdf(double z);

// Lower-orthant probability P(U1 < h, U2 < k) for a standard bivariate normal
// with correlation rho. h and k may be +-infinity.
double bvn_cdf(double h, double k, double rho);
double bvn_pdf(double h, double k, double rho);

// P(lo1 <= U1 < hi1, lo2 <= U2 < hi2).
double bvn_rect(double lo1, double hi1, double lo2, double hi2, double rho);

// Partial derivatives of bvn_cdf with respect to its limits and rho.
struct BvnGrad {
  double dh = 0.0;
  double dk = 0.0;
  double drho = 0.0;
};
BvnGrad bvn_cdf_grad(double h, double k, double rho);

// Validates a correlation value; throws DomainError when |rho| > max_abs.
double checked_rho(double rho, double max_abs = 0.99);

double chi2_cdf(int df, double x);
double chi2_quantile(int df, double p);

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& theta,
                double step = 1e-6);

// Splittable counter-style generator (SplitMix64 with a per-stream odd
// increment). Streams are addressed by (seed, stream_id) so replications can
// be scheduled on any worker without changing their draws.
class SeededRng {
 public:
  using result_type = std::uint64_t;

  SeededRng(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()();
  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t state_;
  std::uint64_t gamma_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace setinf
