#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "misrob/errors.hpp"
#include "misrob/gaussian.hpp"
#include "misrob/linalg.hpp"
#include "misrob/masked.hpp"
#include "misrob/model.hpp"
#include "misrob/net.hpp"

namespace misrob {

namespace detail {

// t^(2k) by repeated squaring; exact sign handling is irrelevant (even power).
inline double even_pow(double t, int k) {
    double base = t * t;
    double out = 1.0;
    int e = k;
    while (e > 0) {
        if (e & 1) out *= base;
        base *= base;
        e >>= 1;
    }
    return out;
}

inline double odd_pow(double t, int k) {  // t^(2k-1), safe at t = 0
    return t * even_pow(t, k - 1);
}

}  // namespace detail

// Empirical mean of X^{2k}.
inline double psi_k(std::span<const double> xs, int k) {
    if (k < 1) throw ConfigError("psi_k: k must be >= 1");
    if (xs.empty()) throw NoObservedData();
    double acc = 0.0, comp = 0.0;
    for (const double x : xs) {
        const double term = detail::even_pow(x, k) - comp;
        const double next = acc + term;
        comp = (next - acc) - term;
        acc = next;
    }
    if (!std::isfinite(acc)) throw std::range_error("psi_k overflow");
    return acc / static_cast<double>(xs.size());
}

// Smallest mean shift the degree-2k test can detect: sqrt((tau^2 + 2 tau)/k).
inline double separation_threshold(double tau, int k) {
    if (tau < 0.0 || k < 1) throw ConfigError("separation_threshold: need tau >= 0, k >= 1");
    return std::sqrt((tau * tau + 2.0 * tau) / k);
}

struct ShiftTestResult {
    bool reject = false;
    double statistic = 0.0;
    double null_upper = 0.0;   // population ceiling under H0
    double alt_lower = 0.0;    // population floor under H1 at the given rho
    double threshold = 0.0;    // midpoint decision rule
};

// Tests H0: contaminated N(0,1) against H1: contaminated N(rho,1) by
// thresholding the empirical 2k-th moment at the midpoint of the two
// population bounds.
inline ShiftTestResult test_mean_shift(std::span<const double> xs, int k,
                                       const ContaminationParams& p, double rho) {
    ShiftTestResult res;
    res.statistic = psi_k(xs, k);
    const double tau = p.tau();
    const double m2k = gaussian_even_moment(k);
    res.null_upper = (1.0 + tau) * m2k;
    res.alt_lower = m2k * (1.0 + k * rho * rho) / (1.0 + tau);
    res.threshold = 0.5 * (res.null_upper + res.alt_lower);
    res.reject = res.statistic > res.threshold;
    return res;
}

// Net approximation of sup_v (1/|T|) sum <v, Z_i>^{2k} over observed samples
// (the injective norm of the empirical 2k-tensor).
inline double injective_moment(const std::vector<MaskedSample>& samples, int k,
                               const SphereNet& net) {
    if (k < 1) throw ConfigError("injective_moment: k must be >= 1");
    const auto rows = observed_rows(samples);
    if (rows.empty()) throw NoObservedData();
    double best = 0.0;
    for (const auto& v : net.directions) {
        double acc = 0.0;
        for (const auto& x : rows) acc += detail::even_pow(x.dot(v), k);
        if (!std::isfinite(acc)) throw std::range_error("injective_moment overflow");
        best = std::max(best, acc / static_cast<double>(rows.size()));
    }
    return best;
}

struct MomentMeanConfig {
    int max_iters = 600;
    double tol = 1e-7;  // objective tolerance relative to its scale
};

struct MomentMeanResult {
    Eigen::VectorXd theta;
    double objective = 0.0;      // max directional central 2k-moment at theta
    double level = 0.0;          // ((1+eps)^2/(1-eps)) E[G^{2k}]
    bool feasible = false;       // objective <= level
    bool k_above_theory = false; // k > sqrt(d): the exact minimizer is still
                                 // well defined, but the accuracy theory
                                 // makes no claim in this range
    int iterations = 0;
};

// Exact moment-feasibility mean estimator: minimizes
//   g(theta) = max_{v in net} (1/|T|) sum_T <v, x - theta>^{2k}
// by subgradient descent with target-level steps from the observed mean.
// Each term is a convex even power of an affine function, so g is convex.
inline MomentMeanResult moment_feasible_mean(const std::vector<MaskedSample>& samples, int k,
                                             const ContaminationParams& params,
                                             const SphereNet& net,
                                             const MomentMeanConfig& cfg = {}) {
    if (k < 1) throw ConfigError("moment_feasible_mean: k must be >= 1");
    const auto rows = observed_rows(samples);
    if (rows.empty()) throw NoObservedData();
    const int d = net.dim;
    const double n = static_cast<double>(rows.size());

    // cache projections: proj[i][j] = <v_i, x_j>
    std::vector<std::vector<double>> proj(net.size(), std::vector<double>(rows.size()));
    for (std::size_t i = 0; i < net.size(); ++i)
        for (std::size_t j = 0; j < rows.size(); ++j)
            proj[i][j] = net.directions[i].dot(rows[j]);

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (const auto& x : rows) mean += x;
    mean /= n;

    const auto eval = [&](const Eigen::VectorXd& th, std::size_t& arg) {
        double worst = -1.0;
        for (std::size_t i = 0; i < net.size(); ++i) {
            const double s = net.directions[i].dot(th);
            double acc = 0.0;
            for (const double pv : proj[i]) acc += detail::even_pow(pv - s, k);
            if (!std::isfinite(acc)) throw std::range_error("moment objective overflow");
            acc /= n;
            if (acc > worst) {
                worst = acc;
                arg = i;
            }
        }
        return worst;
    };
    const auto subgrad_scalar = [&](const Eigen::VectorXd& th, std::size_t i) {
        // d/ds of (1/n) sum (p - s)^{2k} at s = <v_i, theta>, times -1 chain
        const double s = net.directions[i].dot(th);
        double acc = 0.0;
        for (const double pv : proj[i]) acc += detail::odd_pow(pv - s, k);
        return -2.0 * k * acc / n;
    };

    MomentMeanResult res;
    res.k_above_theory = static_cast<double>(k) > std::sqrt(static_cast<double>(d));
    res.level = (1.0 + params.epsilon()) * (1.0 + params.epsilon()) /
                (1.0 - params.epsilon()) * gaussian_even_moment(k);

    Eigen::VectorXd theta = mean;
    std::size_t arg = 0;
    double best_f = eval(theta, arg);
    Eigen::VectorXd best_theta = theta;
    const double scale = std::max(best_f, 1.0);
    double level_gap = std::max(0.5 * best_f, cfg.tol * scale);
    double path = 0.0;
    const double path_budget = 2.0;
    int last_improve = 0;
    int it = 0;
    for (; it < cfg.max_iters && level_gap > 0.25 * cfg.tol * scale; ++it) {
        const double f = eval(theta, arg);
        if (f < best_f - 0.25 * level_gap) last_improve = it;
        if (f < best_f) {
            best_f = f;
            best_theta = theta;
        }
        const double target = std::max(best_f - level_gap, 0.0);
        if (f > target) {
            const double gs = subgrad_scalar(theta, arg);
            const double gn2 = gs * gs;  // gradient = gs * v, |v| = 1
            if (gn2 <= 0.0) break;
            const double step = (f - target) / gn2;
            theta -= step * gs * net.directions[arg];
            path += step * std::abs(gs);
        }
        if (path > path_budget || it - last_improve > 60) {
            level_gap *= 0.5;
            path = 0.0;
            last_improve = it;
        }
    }
    res.theta = best_theta;
    res.objective = best_f;
    res.feasible = best_f <= res.level;
    res.iterations = it;
    return res;
}

// Exact entry of E[z^{tensor power ell}] for z standard normal: the product of
// (m-1)!! over coordinate multiplicities m, zero unless all are even.
inline double gaussian_tensor_entry(const std::vector<int>& multiplicities) {
    double out = 1.0;
    for (const int m : multiplicities) {
        if (m % 2 == 1) return 0.0;
        out *= static_cast<double>(double_factorial(m - 1));
    }
    return out;
}

// Sup-norm deviation between the empirical ell-th tensor moment of fully
// observed rows and its exact Gaussian counterpart.
inline double tensor_moment_deviation(const std::vector<Eigen::VectorXd>& rows, int ell) {
    if (rows.empty()) throw NoObservedData();
    const int d = static_cast<int>(rows.front().size());
    if (ell < 1) throw ConfigError("tensor_moment_deviation: ell must be >= 1");
    double entries = 1.0;
    for (int i = 0; i < ell; ++i) entries *= d;
    if (entries > 4096.0)
        throw ConfigError("tensor_moment_deviation: d^ell exceeds the 4096-entry cap");

    const auto n = static_cast<double>(rows.size());
    std::vector<int> index(static_cast<std::size_t>(ell), 0);
    double worst = 0.0;
    while (true) {
        double acc = 0.0;
        for (const auto& z : rows) {
            double prod = 1.0;
            for (const int j : index) prod *= z[j];
            acc += prod;
        }
        std::vector<int> mult(static_cast<std::size_t>(d), 0);
        for (const int j : index) ++mult[static_cast<std::size_t>(j)];
        worst = std::max(worst, std::abs(acc / n - gaussian_tensor_entry(mult)));

        int pos = ell - 1;
        while (pos >= 0 && index[static_cast<std::size_t>(pos)] == d - 1) {
            index[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
        ++index[static_cast<std::size_t>(pos)];
    }
    return worst;
}

struct WhitenedBandReport {
    double fraction_inside = 0.0;
    std::vector<double> dir_moments;
    double lo = 0.0, hi = 0.0;
};

// Whitens the observed samples by the inverse square root of their empirical
// second moment and reports the fraction of net directions whose empirical
// 2 ell-th moment lies in (1 +- 10 eps) E[G^{2 ell}].
inline WhitenedBandReport whitened_moment_band_check(const std::vector<MaskedSample>& samples,
                                                     int ell, const ContaminationParams& params,
                                                     const SphereNet& net) {
    const auto rows = observed_rows(samples);
    if (rows.empty()) throw NoObservedData();
    const int d = static_cast<int>(rows.front().size());
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(d, d);
    for (const auto& x : rows) S.noalias() += x * x.transpose();
    S /= static_cast<double>(rows.size());
    const Eigen::MatrixXd W = sym_inv_sqrt(S);

    WhitenedBandReport rep;
    const double m = gaussian_even_moment(ell);
    rep.lo = (1.0 - 10.0 * params.epsilon()) * m;
    rep.hi = (1.0 + 10.0 * params.epsilon()) * m;
    int inside = 0;
    for (const auto& v : net.directions) {
        const Eigen::VectorXd Wv = W * v;
        double acc = 0.0;
        for (const auto& x : rows) acc += detail::even_pow(Wv.dot(x), ell);
        const double val = acc / static_cast<double>(rows.size());
        rep.dir_moments.push_back(val);
        inside += (val >= rep.lo && val <= rep.hi);
    }
    rep.fraction_inside = static_cast<double>(inside) / static_cast<double>(net.size());
    return rep;
}

}  // namespace misrob
