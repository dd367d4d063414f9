// special.hpp
//
// Normal distribution functions, bivariate normal probabilities, and the
// Kolmogorov limiting distribution.

#ifndef CONDPRED_SPECIAL_HPP
#define CONDPRED_SPECIAL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "condpred/error.hpp"

namespace condpred {

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// 1 - Phi(x), accurate in the upper tail.
inline double normal_survival(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

namespace detail {

// Acklam's rational approximation for p <= 0.5, polished by two Halley
// steps against erfc. The polished result has relative error near 1e-15.
inline double normal_lower_quantile(double p) {
  static constexpr std::array<double, 6> a = {-3.969683028665376e+01, 2.209460984245205e+02,
                                              -2.759285104469687e+02, 1.383577518672690e+02,
                                              -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b = {-5.447609879822406e+01, 1.615858368580409e+02,
                                              -1.556989798598866e+02, 6.680131188771972e+01,
                                              -1.328068155288572e+01};
  static constexpr std::array<double, 6> c = {-7.784894002430293e-03, -3.223964580411365e-01,
                                              -2.400758277161838e+00, -2.549671285942815e+00,
                                              4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> d = {7.784695709041462e-03, 3.224671290700398e-01,
                                              2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  for (int step = 0; step < 2; ++step) {
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

}  // namespace detail

/// Inverse of the standard normal cdf on (0, 1).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0, 1)");
  if (p > 0.5) return -detail::normal_lower_quantile(1.0 - p);
  return detail::normal_lower_quantile(p);
}

/// x with 1 - Phi(x) = q, without forming 1 - q.
inline double normal_upper_quantile(double q) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("normal_upper_quantile: q must lie in (0, 1)");
  if (q > 0.5) return detail::normal_lower_quantile(1.0 - q);
  return -detail::normal_lower_quantile(q);
}

/// P(X > h, Y > k) for a standard bivariate normal with correlation r.
/// Port of Genz's BVND (Drezner-Wesolowsky with Gauss-Legendre rules),
/// absolute accuracy about 1e-15.
inline double bivariate_normal_upper(double h, double k, double r) {
  static constexpr double x[3][10] = {
      {-0.9324695142031522, -0.6612093864662647, -0.2386191860831970},
      {-0.9815606342467191, -0.9041172563704750, -0.7699026741943050, -0.5873179542866171,
       -0.3678314989981802, -0.1252334085114692},
      {-0.9931285991850949, -0.9639719272779138, -0.9122344282513259, -0.8391169718222188,
       -0.7463319064601508, -0.6360536807265150, -0.5108670019508271, -0.3737060887154196,
       -0.2277858511416451, -0.07652652113349733}};
  static constexpr double w[3][10] = {
      {0.1713244923791705, 0.3607615730481384, 0.4679139345726904},
      {0.04717533638651177, 0.1069393259953183, 0.1600783285433464, 0.2031674267230659,
       0.2334925365383547, 0.2491470458134029},
      {0.01761400713915212, 0.04060142980038694, 0.06267204833410906, 0.08327674157670475,
       0.1019301198172404, 0.1181945319615184, 0.1316886384491766, 0.1420961093183821,
       0.1491729864726037, 0.1527533871307259}};
  constexpr double twopi = 2.0 * std::numbers::pi;

  int ng;
  int lg;
  if (std::abs(r) < 0.3) {
    ng = 0;
    lg = 3;
  } else if (std::abs(r) < 0.75) {
    ng = 1;
    lg = 6;
  } else {
    ng = 2;
    lg = 10;
  }

  double hk = h * k;
  double bvn = 0.0;
  if (std::abs(r) < 0.925) {
    const double hs = (h * h + k * k) / 2.0;
    const double asr = std::asin(r);
    for (int i = 0; i < lg; ++i) {
      double sn = std::sin(asr * (x[ng][i] + 1.0) / 2.0);
      bvn += w[ng][i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      sn = std::sin(asr * (-x[ng][i] + 1.0) / 2.0);
      bvn += w[ng][i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
    }
    return bvn * asr / (2.0 * twopi) + normal_cdf(-h) * normal_cdf(-k);
  }

  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  if (std::abs(r) < 1.0) {
    const double as = (1.0 - r) * (1.0 + r);
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 16.0;
    bvn = a * std::exp(-(bs / as + hk) / 2.0) *
          (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
    if (hk > -160.0) {
      const double b = std::sqrt(bs);
      bvn -= std::exp(-hk / 2.0) * std::sqrt(twopi) * normal_cdf(-b / a) * b *
             (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    a /= 2.0;
    for (int i = 0; i < lg; ++i) {
      for (const double sign : {-1.0, 1.0}) {
        const double xs = std::pow(a * (sign * x[ng][i] + 1.0), 2);
        const double rs = std::sqrt(1.0 - xs);
        const double asr = -(bs / xs + hk) / 2.0;
        if (asr > -100.0) {
          bvn += a * w[ng][i] * std::exp(asr) *
                 (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs -
                  (1.0 + c * xs * (1.0 + d * xs)));
        }
      }
    }
    bvn = -bvn / twopi;
  }
  if (r > 0.0) {
    bvn += normal_cdf(-std::max(h, k));
  } else {
    bvn = -bvn + std::max(0.0, normal_cdf(-h) - normal_cdf(-k));
  }
  return bvn;
}

/// P(X <= a, Y <= b) for a standard bivariate normal with correlation r.
inline double bivariate_normal_cdf(double a, double b, double r) {
  return std::clamp(bivariate_normal_upper(-a, -b, r), 0.0, 1.0);
}

/// P(K > t) for the Kolmogorov limiting distribution.
inline double kolmogorov_survival(double t) {
  if (t <= 0.0) return 1.0;
  if (t < 1.0) {
    // Small-t series for the cdf converges fast here.
    double cdf = 0.0;
    const double f = -std::numbers::pi * std::numbers::pi / (8.0 * t * t);
    for (int k = 1; k <= 50; k += 2) cdf += std::exp(f * k * k);
    cdf *= std::sqrt(2.0 * std::numbers::pi) / t;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace condpred

#endif  // CONDPRED_SPECIAL_HPP
