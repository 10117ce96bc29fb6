#include "setinf/numerics.hpp"

#include "setinf/errors.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

namespace setinf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Gauss-Legendre abscissae/weights (half rules) for 6, 12 and 20 points.
constexpr double kGlW[3][10] = {
    {0.1713244923791705, 0.3607615730481384, 0.4679139345726904},
    {0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
     0.2031674267230659, 0.2334925365383547, 0.2491470458134029},
    {0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
     0.08327674157670475, 0.1019301198172404, 0.1181945319615184,
     0.1316886384491766, 0.1420961093183821, 0.1491729864726037,
     0.1527533871307259}};
constexpr double kGlX[3][10] = {
    {-0.9324695142031522, -0.6612093864662647, -0.238619186083197},
    {-0.9815606342467191, -0.904117256370475, -0.769902674194305,
     -0.5873179542866171, -0.3678314989981802, -0.1252334085114692},
    {-0.9931285991850949, -0.9639719272779138, -0.9122344282513259,
     -0.8391169718222188, -0.7463319064601508, -0.636053680726515,
     -0.5108670019508271, -0.3737060887154196, -0.2277858511416451,
     -0.07652652113349733}};

// Upper-orthant probability P(U1 > h, U2 > k) for finite h, k (Drezner-
// Wesolowsky method as refined by Genz).
double bvn_upper(double h, double k, double r) {
  int ng;
  int lg;
  if (std::fabs(r) < 0.3) {
    ng = 0;
    lg = 3;
  } else if (std::fabs(r) < 0.75) {
    ng = 1;
    lg = 6;
  } else {
    ng = 2;
    lg = 10;
  }
  double hk = h * k;
  double bvn = 0.0;
  if (std::fabs(r) < 0.925) {
    const double hs = (h * h + k * k) / 2.0;
    const double asr = std::asin(r);
    for (int i = 0; i < lg; ++i) {
      double sn = std::sin(asr * (kGlX[ng][i] + 1.0) / 2.0);
      bvn += kGlW[ng][i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      sn = std::sin(asr * (-kGlX[ng][i] + 1.0) / 2.0);
      bvn += kGlW[ng][i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
    }
    return bvn * asr / (2.0 * kTwoPi) + normal_cdf(-h) * normal_cdf(-k);
  }
  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  if (std::fabs(r) < 1.0) {
    const double as = (1.0 - r) * (1.0 + r);
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 16.0;
    bvn = a * std::exp(-(bs / as + hk) / 2.0) *
          (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
    if (hk > -160.0) {
      const double b = std::sqrt(bs);
      bvn -= std::exp(-hk / 2.0) * std::sqrt(kTwoPi) * normal_cdf(-b / a) * b *
             (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    a /= 2.0;
    for (int i = 0; i < lg; ++i) {
      double xs = a * (kGlX[ng][i] + 1.0);
      xs *= xs;
      double rs = std::sqrt(1.0 - xs);
      bvn += a * kGlW[ng][i] *
             (std::exp(-bs / (xs * 2.0) - hk / (rs + 1.0)) / rs -
              std::exp(-(bs / xs + hk) / 2.0) * (c * xs * (d * xs + 1.0) + 1.0));
      xs = as * (-kGlX[ng][i] + 1.0) * (-kGlX[ng][i] + 1.0) / 4.0;
      rs = std::sqrt(1.0 - xs);
      bvn += a * kGlW[ng][i] * std::exp(-(bs / xs + hk) / 2.0) *
             (std::exp(-hk * (1.0 - rs) / ((rs + 1.0) * 2.0)) / rs -
              (c * xs * (d * xs + 1.0) + 1.0));
    }
    bvn = -bvn / kTwoPi;
  }
  if (r > 0.0) {
    bvn += normal_cdf(-std::max(h, k));
  } else {
    bvn = -bvn + std::max(0.0, normal_cdf(-h) - normal_cdf(-k));
  }
  return bvn;
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_gamma(std::uint64_t z) {
  z = mix64(z) | 1ULL;
  if (std::popcount(z ^ (z >> 1)) < 24) z ^= 0xaaaaaaaaaaaaaaaaULL;
  return z;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string(what) + ": non-finite input");
}

void require_not_nan(double v, const char* what) {
  if (std::isnan(v)) throw DomainError(std::string(what) + ": NaN input");
}

}  // namespace

double normal_cdf(double z) {
  require_finite(z, "normal_cdf");
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double normal_pdf(double z) {
  require_finite(z, "normal_pdf");
  return std::exp(-0.5 * z * z) / std::sqrt(kTwoPi);
}

double checked_rho(double rho, double max_abs) {
  if (!std::isfinite(rho) || std::fabs(rho) > max_abs) {
    throw DomainError("correlation " + std::to_string(rho) + " outside [-" +
                      std::to_string(max_abs) + ", " + std::to_string(max_abs) + "]");
  }
  return rho;
}

double bvn_cdf(double h, double k, double rho) {
  require_not_nan(h, "bvn_cdf");
  require_not_nan(k, "bvn_cdf");
  checked_rho(rho);
  if (h == -kInf || k == -kInf) return 0.0;
  if (h == kInf && k == kInf) return 1.0;
  if (h == kInf) return normal_cdf(k);
  if (k == kInf) return normal_cdf(h);
  return std::clamp(bvn_upper(-h, -k, rho), 0.0, 1.0);
}

double bvn_pdf(double h, double k, double rho) {
  if (!std::isfinite(h) || !std::isfinite(k)) return 0.0;
  const double om = 1.0 - rho * rho;
  return std::exp(-(h * h - 2.0 * rho * h * k + k * k) / (2.0 * om)) /
         (kTwoPi * std::sqrt(om));
}

double bvn_rect(double lo1, double hi1, double lo2, double hi2, double rho) {
  require_not_nan(lo1, "bvn_rect");
  require_not_nan(hi1, "bvn_rect");
  require_not_nan(lo2, "bvn_rect");
  require_not_nan(hi2, "bvn_rect");
  if (lo1 > hi1 || lo2 > hi2) throw DomainError("bvn_rect: inverted bounds");
  const double v = bvn_cdf(hi1, hi2, rho) - bvn_cdf(lo1, hi2, rho) -
                   bvn_cdf(hi1, lo2, rho) + bvn_cdf(lo1, lo2, rho);
  return std::clamp(v, 0.0, 1.0);
}

BvnGrad bvn_cdf_grad(double h, double k, double rho) {
  checked_rho(rho);
  BvnGrad g;
  if (h == -kInf || k == -kInf) return g;
  const double s = std::sqrt(1.0 - rho * rho);
  if (std::isfinite(h)) {
    g.dh = normal_pdf(h) * (k == kInf ? 1.0 : normal_cdf((k - rho * h) / s));
  }
  if (std::isfinite(k)) {
    g.dk = normal_pdf(k) * (h == kInf ? 1.0 : normal_cdf((h - rho * k) / s));
  }
  g.drho = bvn_pdf(h, k, rho);
  return g;
}

double chi2_cdf(int df, double x) {
  if (df < 1) throw DomainError("chi2_cdf: df must be positive");
  if (std::isnan(x)) throw DomainError("chi2_cdf: NaN input");
  if (x <= 0.0) return 0.0;
  if (x == kInf) return 1.0;
  return boost::math::gamma_p(0.5 * df, 0.5 * x);
}

double chi2_quantile(int df, double p) {
  if (df < 1) throw DomainError("chi2_quantile: df must be positive");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("chi2_quantile: p must lie in (0,1)");
  return 2.0 * boost::math::gamma_p_inv(0.5 * df, p);
}

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& theta,
                double step) {
  if (!(step > 0.0)) throw DomainError("fd_gradient: step must be positive");
  Vec g(theta.size());
  Vec t = theta;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    t[j] = theta[j] + step;
    const double fp = f(t);
    t[j] = theta[j] - step;
    const double fm = f(t);
    t[j] = theta[j];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("fd_gradient: non-finite function value at coordinate " +
                         std::to_string(j));
    }
    g[j] = (fp - fm) / (2.0 * step);
  }
  return g;
}

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_(stream_id) {
  const std::uint64_t key = mix64(seed ^ 0x632be59bd9b4e019ULL);
  state_ = mix64(key + mix64(stream_id + 0x9e3779b97f4a7c15ULL));
  gamma_ = mix_gamma(key ^ mix64(stream_id * 0xd1b54a32d192ed03ULL + 1ULL));
}

SeededRng::result_type SeededRng::operator()() {
  state_ += gamma_;
  return mix64(state_);
}

double SeededRng::uniform() {
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double SeededRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u;
  double v;
  double s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  has_spare_ = true;
  return u * m;
}

}  // namespace setinf
