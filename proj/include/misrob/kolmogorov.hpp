#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "misrob/errors.hpp"
#include "misrob/gaussian.hpp"
#include "misrob/masked.hpp"
#include "misrob/model.hpp"

namespace misrob {

// Empirical distribution of a univariate sample with missing atoms. F(r) is
// the fraction of *all* n_total samples with an observed value <= r, so
// F(+inf) = 1 - n_missing/n_total.
class EmpiricalCdf {
public:
    static EmpiricalCdf from(const Masked1D& samples) {
        EmpiricalCdf e;
        e.n_missing_ = samples.n_missing;
        e.n_total_ = samples.n_total();
        std::vector<double> sorted = samples.observed;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size();) {
            std::size_t j = i;
            while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
            e.uniq_.push_back(sorted[i]);
            e.cum_.push_back(static_cast<std::int64_t>(j));
            i = j;
        }
        return e;
    }

    std::int64_t n_total() const { return n_total_; }
    std::int64_t n_missing() const { return n_missing_; }
    std::int64_t n_observed() const { return n_total_ - n_missing_; }
    double observed_fraction() const {
        return static_cast<double>(n_observed()) / static_cast<double>(n_total_);
    }
    const std::vector<double>& unique_values() const { return uniq_; }

    double at(double r) const {
        const auto it = std::upper_bound(uniq_.begin(), uniq_.end(), r);
        if (it == uniq_.begin()) return 0.0;
        return static_cast<double>(cum_[static_cast<std::size_t>(it - uniq_.begin()) - 1]) /
               static_cast<double>(n_total_);
    }

    // Cumulative count of values <= uniq_[j] (and < uniq_[j] via j-1).
    std::int64_t cum(std::size_t j) const { return cum_[j]; }
    std::size_t n_unique() const { return uniq_.size(); }

private:
    std::vector<double> uniq_;
    std::vector<std::int64_t> cum_;
    std::int64_t n_total_ = 0;
    std::int64_t n_missing_ = 0;
};

namespace detail {

// Indices of the unique values at which the sup is evaluated. Exact (all
// of them) up to max_eval points, stratified beyond that.
inline std::vector<std::size_t> eval_indices(std::size_t n_unique, std::int64_t max_eval) {
    std::vector<std::size_t> idx;
    if (n_unique == 0) return idx;
    const auto cap = static_cast<std::size_t>(std::max<std::int64_t>(2, max_eval));
    if (n_unique <= cap) {
        idx.resize(n_unique);
        for (std::size_t i = 0; i < n_unique; ++i) idx[i] = i;
        return idx;
    }
    const std::size_t stride = (n_unique + cap - 1) / cap;
    for (std::size_t i = 0; i < n_unique; i += stride) idx.push_back(i);
    if (idx.back() != n_unique - 1) idx.push_back(n_unique - 1);
    return idx;
}

// sup_r dist(F_hat(r), [L model(r), U model(r)]) for a nondecreasing model
// CDF. Because both band edges are monotone, the sup over each constancy
// interval of the step function F_hat is attained at a sample point or its
// left limit, plus the r -> +inf term where the band closes at [L, U].
inline double band_distance(const EmpiricalCdf& e, const std::function<double(double)>& model,
                            double L, double U, std::int64_t max_eval) {
    const double n = static_cast<double>(e.n_total());
    double worst = 0.0;
    const auto idx = eval_indices(e.n_unique(), max_eval);
    for (const std::size_t j : idx) {
        const double F = model(e.unique_values()[j]);
        const double before = (j == 0 ? 0.0 : static_cast<double>(e.cum(j - 1))) / n;
        const double after = static_cast<double>(e.cum(j)) / n;
        worst = std::max(worst, L * F - before);
        worst = std::max(worst, after - U * F);
    }
    const double tail = e.observed_fraction();
    worst = std::max(worst, L - tail);
    worst = std::max(worst, tail - U);
    return std::max(worst, 0.0);
}

// Conditional variant: empirical CDF renormalized to the observed mass
// against the fractional band [LF/(LF+U(1-F)), UF/(UF+L(1-F))].
inline double conditional_band_distance(const EmpiricalCdf& e,
                                        const std::function<double(double)>& model, double L,
                                        double U, std::int64_t max_eval) {
    if (e.n_observed() < 1) throw NoObservedData();
    const double n_obs = static_cast<double>(e.n_observed());
    double worst = 0.0;
    const auto idx = eval_indices(e.n_unique(), max_eval);
    for (const std::size_t j : idx) {
        const double F = model(e.unique_values()[j]);
        const double lo = L * F / (L * F + U * (1.0 - F));
        const double hi = U * F / (U * F + L * (1.0 - F));
        const double before = (j == 0 ? 0.0 : static_cast<double>(e.cum(j - 1))) / n_obs;
        const double after = static_cast<double>(e.cum(j)) / n_obs;
        worst = std::max(worst, lo - before);
        worst = std::max(worst, after - hi);
    }
    return std::max(worst, 0.0);
}

struct GridMin {
    double x = 0.0;
    double value = std::numeric_limits<double>::infinity();
};

// Global grid scan followed by golden-section refinement in the best bracket.
// Ties break toward the smallest argument.
inline GridMin scan_and_refine(const std::function<double(double)>& f, double lo, double hi,
                               int grid_points, double tol) {
    GridMin best;
    const int g = std::max(grid_points, 3);
    const double step = (hi - lo) / (g - 1);
    int best_i = 0;
    for (int i = 0; i < g; ++i) {
        const double x = lo + i * step;
        const double v = f(x);
        if (v < best.value) {
            best.value = v;
            best.x = x;
            best_i = i;
        }
    }
    double a = lo + std::max(0, best_i - 1) * step;
    double b = lo + std::min(g - 1, best_i + 1) * step;
    const double invphi = 0.6180339887498949;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
        const double xm = f1 <= f2 ? x1 : x2;
        const double fm = std::min(f1, f2);
        if (fm < best.value || (fm == best.value && xm < best.x)) {
            best.value = fm;
            best.x = xm;
        }
    }
    return best;
}

}  // namespace detail

struct SearchConfig {
    double lo = std::numeric_limits<double>::quiet_NaN();  // default: data min - 4 sigma
    double hi = std::numeric_limits<double>::quiet_NaN();  // default: data max + 4 sigma
    int grid_points = 512;
    double refine_tol = 1e-8;          // in units of sigma
    std::int64_t max_eval_points = 16384;
};

// Radius within which the empirical distribution sits of the realizable set
// with probability 1 - delta: 3 sqrt({q(1-eps)+eps} log(1/delta) / n).
inline double dkw_threshold(const ContaminationParams& p, std::int64_t n, double delta) {
    if (n < 1 || !(delta > 0.0 && delta < 1.0))
        throw ConfigError("dkw_threshold: need n >= 1 and delta in (0,1)");
    return 3.0 * std::sqrt(p.upper() * std::log(1.0 / delta) / static_cast<double>(n));
}

inline double band_distance_mean(const EmpiricalCdf& e, double theta, double sigma,
                                 const ContaminationParams& p,
                                 std::int64_t max_eval = 16384) {
    if (!(sigma > 0.0)) throw ConfigError("band_distance_mean: sigma must be > 0");
    return detail::band_distance(
        e, [&](double r) { return norm_cdf((r - theta) / sigma); }, p.lower(), p.upper(),
        max_eval);
}

inline double conditional_band_distance_mean(const EmpiricalCdf& e, double theta, double sigma,
                                             const ContaminationParams& p,
                                             std::int64_t max_eval = 16384) {
    if (!(sigma > 0.0)) throw ConfigError("conditional_band_distance_mean: sigma must be > 0");
    return detail::conditional_band_distance(
        e, [&](double r) { return norm_cdf((r - theta) / sigma); }, p.lower(), p.upper(),
        max_eval);
}

// CDF of sigma2 * G^2 evaluated at r.
inline double scaled_chisq_cdf(double r, double sigma2) {
    if (r <= 0.0) return 0.0;
    return 2.0 * norm_cdf(std::sqrt(r / sigma2)) - 1.0;
}

inline double band_distance_variance(const EmpiricalCdf& squares, double sigma2,
                                     const ContaminationParams& p,
                                     std::int64_t max_eval = 16384) {
    if (!(sigma2 > 0.0)) throw ConfigError("band_distance_variance: sigma2 must be > 0");
    return detail::band_distance(
        squares, [&](double r) { return scaled_chisq_cdf(r, sigma2); }, p.lower(), p.upper(),
        max_eval);
}

namespace detail {

inline std::pair<double, double> default_mean_range(const EmpiricalCdf& e, double sigma,
                                                    const SearchConfig& cfg) {
    double lo = cfg.lo;
    double hi = cfg.hi;
    if (std::isnan(lo)) lo = e.unique_values().front() - 4.0 * sigma;
    if (std::isnan(hi)) hi = e.unique_values().back() + 4.0 * sigma;
    if (!(hi > lo)) hi = lo + sigma;
    return {lo, hi};
}

}  // namespace detail

// argmin over theta of the band distance between the empirical distribution
// and the realizable contaminations of N(theta, sigma^2).
inline double min_distance_mean(const Masked1D& samples, double sigma,
                                const ContaminationParams& p, const SearchConfig& cfg = {}) {
    if (samples.observed.empty()) throw NoObservedData();
    const EmpiricalCdf e = EmpiricalCdf::from(samples);
    const auto [lo, hi] = detail::default_mean_range(e, sigma, cfg);
    const auto obj = [&](double theta) {
        return band_distance_mean(e, theta, sigma, p, cfg.max_eval_points);
    };
    return detail::scan_and_refine(obj, lo, hi, cfg.grid_points, cfg.refine_tol * sigma).x;
}

inline double min_distance_mean_conditional(const Masked1D& samples, double sigma,
                                            const ContaminationParams& p,
                                            const SearchConfig& cfg = {}) {
    if (samples.observed.empty()) throw NoObservedData();
    const EmpiricalCdf e = EmpiricalCdf::from(samples);
    const auto [lo, hi] = detail::default_mean_range(e, sigma, cfg);
    const auto obj = [&](double theta) {
        return conditional_band_distance_mean(e, theta, sigma, p, cfg.max_eval_points);
    };
    return detail::scan_and_refine(obj, lo, hi, cfg.grid_points, cfg.refine_tol * sigma).x;
}

struct MeanEstimate {
    double theta = 0.0;
    bool used_conditional = false;
};

// Dispatches to the conditional estimator in the heavy-contamination regime
// tau > (1/20) alpha^{-1/4}, else the unconditional one.
inline MeanEstimate auto_mean_estimator(const Masked1D& samples, double sigma,
                                        const ContaminationParams& p,
                                        const ConfidenceParams& conf,
                                        const SearchConfig& cfg = {}) {
    const double alpha = conf.alpha(p);
    MeanEstimate out;
    out.used_conditional = p.tau() > 0.05 * std::pow(alpha, -0.25);
    out.theta = out.used_conditional ? min_distance_mean_conditional(samples, sigma, p, cfg)
                                     : min_distance_mean(samples, sigma, p, cfg);
    return out;
}

struct VarianceSearchConfig {
    double lo = std::numeric_limits<double>::quiet_NaN();  // default: 1e-3 * mean square
    double hi = std::numeric_limits<double>::quiet_NaN();  // default: 1e+3 * mean square
    int grid_points = 160;
    double refine_tol = 1e-8;  // relative, on sigma^2
    std::int64_t max_eval_points = 16384;
};

// Largest sigma^2 whose realizable band lies within the DKW radius of the
// empirical distribution of the squared values. Returns 0 when nothing is
// feasible or in the heavy-contamination regime where the scale is not
// identifiable at this sample size.
inline double min_distance_variance(const Masked1D& raw, const ContaminationParams& p,
                                    const ConfidenceParams& conf,
                                    const VarianceSearchConfig& cfg = {}) {
    if (raw.observed.empty()) throw NoObservedData();
    const double alpha = conf.alpha(p);
    if (p.tau() > 0.05 * std::pow(alpha, -0.25)) return 0.0;

    Masked1D squares;
    squares.n_missing = raw.n_missing;
    squares.observed.reserve(raw.observed.size());
    for (const double z : raw.observed) squares.observed.push_back(z * z);
    const EmpiricalCdf e = EmpiricalCdf::from(squares);
    const double radius = dkw_threshold(p, raw.n_total(), conf.delta);

    double m2 = 0.0;
    for (const double s : squares.observed) m2 += s;
    m2 /= static_cast<double>(squares.observed.size());
    if (m2 <= 0.0) return 0.0;
    const double lo = std::isnan(cfg.lo) ? m2 * 1e-3 : cfg.lo;
    const double hi = std::isnan(cfg.hi) ? m2 * 1e3 : cfg.hi;

    const auto distance = [&](double s2) {
        return band_distance_variance(e, s2, p, cfg.max_eval_points);
    };
    const auto feasible = [&](double s2) { return distance(s2) <= radius; };

    // The feasible set can be far narrower than any fixed log-grid step. Scan
    // a geometric grid for the distance minimizer, refine the minimum by
    // midpoint subdivision, then push the feasibility boundary upward by
    // doubling and bisection. Every candidate is built from the data scale by
    // multiplications and midpoints only, so the whole search commutes with a
    // power-of-two rescaling of the inputs (exact scale equivariance).
    const int g = std::max(cfg.grid_points, 8);
    const double ratio = std::pow(hi / lo, 1.0 / (g - 1));
    double s2 = lo;
    double best_s2 = lo;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < g; ++i) {
        const double d = distance(s2);
        if (d < best_d) {
            best_d = d;
            best_s2 = s2;
        }
        s2 *= ratio;
    }
    // midpoint refinement of the minimum inside the best bracket
    double a = best_s2 / ratio;
    double b = best_s2 * ratio;
    for (int it = 0; it < 60 && b - a > 0.25 * cfg.refine_tol * a; ++it) {
        const double m = 0.5 * (a + b);
        const double q1 = 0.5 * (a + m);
        const double q2 = 0.5 * (m + b);
        const double dq1 = distance(q1), dm = distance(m), dq2 = distance(q2);
        double c = m, dc = dm;
        if (dq1 < dc) { c = q1; dc = dq1; }
        if (dq2 < dc) { c = q2; dc = dq2; }
        if (dc < best_d) { best_d = dc; best_s2 = c; }
        const double quarter = 0.25 * (b - a);
        a = c - quarter;
        b = c + quarter;
    }
    if (best_d > radius) return 0.0;

    a = best_s2;
    b = best_s2;
    while (b < hi && feasible(b)) b *= 2.0;
    if (feasible(b)) return b;
    while (b - a > cfg.refine_tol * a) {
        const double mid = 0.5 * (a + b);
        (feasible(mid) ? a : b) = mid;
    }
    return a;
}

}  // namespace misrob
