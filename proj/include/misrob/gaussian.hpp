#pragma once

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <limits>

#include "misrob/errors.hpp"
#include "misrob/rng.hpp"

namespace misrob {

inline constexpr double kSqrt2 = 1.4142135623730951;
inline constexpr double kSqrt2OverPi = 0.7978845608028654;  // sqrt(2/pi)
inline constexpr double kInvSqrt2Pi = 0.3989422804014327;

inline double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

inline double norm_pdf(double x, double mu, double sigma) {
    return norm_pdf((x - mu) / sigma) / sigma;
}

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

// Survival function, accurate in the upper tail.
inline double norm_sf(double x) { return 0.5 * std::erfc(x / kSqrt2); }

// Inverse CDF, accurate to full double precision across both tails.
inline double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw NumericError("norm_quantile: p outside (0,1)");
    return -kSqrt2 * boost::math::erfc_inv(2.0 * p);
}

// Inverse survival function.
inline double norm_isf(double p) { return -norm_quantile(p); }

// m!! with the conventions (-1)!! = 0!! = 1.
inline long long double_factorial(int m) {
    if (m < -1) throw NumericError("double_factorial: m < -1");
    long long out = 1;
    for (long long v = m; v > 1; v -= 2) {
        if (out > std::numeric_limits<long long>::max() / v)
            throw std::range_error("double_factorial overflow");
        out *= v;
    }
    return out;
}

// E[G^{2k}] = (2k-1)!! for G standard normal.
inline double gaussian_even_moment(int k) {
    if (k < 1) throw NumericError("gaussian_even_moment: k < 1");
    double out = 1.0;
    for (int v = 2 * k - 1; v > 1; v -= 2) out *= v;
    if (!std::isfinite(out)) throw std::range_error("gaussian_even_moment overflow");
    return out;
}

// E[|G|^{2k-1}] = sqrt(2/pi) (2k-2)!!.
inline double gaussian_abs_odd_moment(int k) {
    if (k < 1) throw NumericError("gaussian_abs_odd_moment: k < 1");
    double out = kSqrt2OverPi;
    for (int v = 2 * k - 2; v > 1; v -= 2) out *= v;
    if (!std::isfinite(out)) throw std::range_error("gaussian_abs_odd_moment overflow");
    return out;
}

// E[G^m] for any m >= 0: zero when odd.
inline double gaussian_raw_moment(int m) {
    if (m < 0) throw NumericError("gaussian_raw_moment: m < 0");
    if (m % 2 == 1) return 0.0;
    return m == 0 ? 1.0 : gaussian_even_moment(m / 2);
}

inline double sample_normal(Rng& rng) { return norm_quantile(rng.uniform01()); }

// N(mu, sigma^2) conditioned on [lo, hi]; inverse-CDF on the window.
inline double sample_normal_interval(Rng& rng, double mu, double sigma, double lo, double hi) {
    const double a = norm_cdf((lo - mu) / sigma);
    const double b = norm_cdf((hi - mu) / sigma);
    if (!(b > a)) throw NumericError("sample_normal_interval: empty window");
    const double u = a + (b - a) * rng.uniform01();
    return mu + sigma * norm_quantile(u);
}

// N(mu, sigma^2) conditioned on (a, inf); works far into the tail.
inline double sample_normal_above(Rng& rng, double mu, double sigma, double a) {
    const double s = norm_sf((a - mu) / sigma);
    return mu + sigma * norm_isf(s * rng.uniform01());
}

inline double sample_normal_below(Rng& rng, double mu, double sigma, double b) {
    return 2.0 * mu - sample_normal_above(rng, mu, sigma, 2.0 * mu - b);
}

}  // namespace misrob
