#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "misrob/errors.hpp"
#include "misrob/masked.hpp"
#include "misrob/model.hpp"
#include "misrob/netopt.hpp"
#include "misrob/rng.hpp"

namespace misrob {

// Missingness patterns: subsets of coordinates with MCAR selection weights.
struct PatternSet {
    std::vector<std::vector<int>> patterns;  // each sorted, distinct indices
    std::vector<double> pi;

    static PatternSet make(std::vector<std::vector<int>> pats, std::vector<double> weights) {
        if (pats.empty() || pats.size() != weights.size())
            throw ConfigError("PatternSet: need matching nonempty patterns and weights");
        double total = 0.0;
        for (auto& s : pats) {
            if (s.empty()) throw ConfigError("PatternSet: empty pattern");
            std::sort(s.begin(), s.end());
            if (std::adjacent_find(s.begin(), s.end()) != s.end())
                throw ConfigError("PatternSet: repeated coordinate in a pattern");
        }
        for (const double w : weights) {
            if (w < 0.0) throw ConfigError("PatternSet: negative weight");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-12) throw ConfigError("PatternSet: weights must sum to 1");
        return {std::move(pats), std::move(weights)};
    }

    std::size_t size() const { return patterns.size(); }
};

// Rows whose observed mask is exactly S keep the S coordinates; every other
// row becomes the fully missing atom in |S| dimensions.
inline std::vector<MaskedSample> censor_to_pattern(const std::vector<MaskedSample>& samples,
                                                   const std::vector<int>& S) {
    if (S.empty()) throw ConfigError("censor_to_pattern: empty pattern");
    std::vector<MaskedSample> out;
    out.reserve(samples.size());
    const int m = static_cast<int>(S.size());
    if (!samples.empty() && S.back() >= samples.front().dim())
        throw ConfigError("censor_to_pattern: pattern index out of range");
    for (const auto& s : samples) {
        bool exact = true;
        std::size_t in_S = 0;
        for (int j = 0; j < s.dim(); ++j) {
            const bool member = std::binary_search(S.begin(), S.end(), j);
            if (member != s.is_observed(j)) {
                exact = false;
                break;
            }
            in_S += member;
        }
        if (!exact || in_S != S.size()) {
            out.push_back(MaskedSample::missing(m));
            continue;
        }
        Eigen::VectorXd v(m);
        for (int i = 0; i < m; ++i) v[i] = s.value(S[static_cast<std::size_t>(i)]);
        out.push_back(MaskedSample::observed(std::move(v)));
    }
    return out;
}

struct CoverageReport {
    bool min_weight_ok = false;
    bool union_ok = false;
    bool pairwise_ok = false;
};

inline CoverageReport coverage_checks(const PatternSet& ps, double c0, int d) {
    CoverageReport rep;
    rep.min_weight_ok = *std::min_element(ps.pi.begin(), ps.pi.end()) > c0;
    std::vector<char> seen(static_cast<std::size_t>(d), 0);
    for (const auto& S : ps.patterns)
        for (const int j : S) seen[static_cast<std::size_t>(j)] = 1;
    rep.union_ok = std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
    rep.pairwise_ok = true;
    for (int i = 0; i < d && rep.pairwise_ok; ++i) {
        for (int j = i; j < d && rep.pairwise_ok; ++j) {
            bool covered = false;
            for (const auto& S : ps.patterns) {
                if (std::binary_search(S.begin(), S.end(), i) &&
                    std::binary_search(S.begin(), S.end(), j)) {
                    covered = true;
                    break;
                }
            }
            rep.pairwise_ok = covered;
        }
    }
    return rep;
}

// Coordinates grouped by their membership signature across the patterns;
// empty classes dropped, so the count is at most min(d, 2^|patterns|).
inline std::vector<std::vector<int>> binary_signature_partition(const PatternSet& ps, int d) {
    std::map<std::vector<char>, std::vector<int>> classes;
    for (int j = 0; j < d; ++j) {
        std::vector<char> sig;
        sig.reserve(ps.size());
        for (const auto& S : ps.patterns)
            sig.push_back(std::binary_search(S.begin(), S.end(), j) ? 1 : 0);
        if (std::all_of(sig.begin(), sig.end(), [](char c) { return c == 0; }))
            throw ConfigError("binary_signature_partition: coordinate in no pattern");
        classes[sig].push_back(j);
    }
    std::vector<std::vector<int>> out;
    out.reserve(classes.size());
    for (auto& [sig, js] : classes) out.push_back(std::move(js));
    return out;
}

// Multi-pattern generator: with probability 1 - eps the pattern is drawn from
// pi, otherwise the adversary assigns one as an arbitrary function of the
// full value vector.
inline std::vector<MaskedSample> generate_multipattern(
    const std::function<Eigen::VectorXd(Rng&)>& base_sampler, const ContaminationParams& params,
    const PatternSet& ps, const std::function<std::size_t(const Eigen::VectorXd&)>& adversary,
    std::int64_t n, std::uint64_t seed) {
    Rng root(seed);
    Rng draw = root.derive("mp-draws");
    Rng pick = root.derive("mp-pattern");
    std::vector<MaskedSample> out;
    out.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const Eigen::VectorXd x = base_sampler(draw);
        std::size_t s_idx;
        if (pick.bernoulli(params.epsilon())) {
            s_idx = adversary(x);
        } else {
            double u = pick.uniform01();
            s_idx = 0;
            while (s_idx + 1 < ps.size() && u > ps.pi[s_idx]) {
                u -= ps.pi[s_idx];
                ++s_idx;
            }
        }
        if (s_idx >= ps.size()) throw ConfigError("generate_multipattern: bad pattern index");
        std::vector<std::uint8_t> mask(static_cast<std::size_t>(x.size()), 0);
        for (const int j : ps.patterns[s_idx]) mask[static_cast<std::size_t>(j)] = 1;
        out.push_back(MaskedSample::with_pattern(x, std::move(mask)));
    }
    return out;
}

// Rate-shaped cylinder radius for a pattern: the per-direction resolution at
// the pattern's effective observation probability, with unit constant.
inline double pattern_radius(double sigma, const ContaminationParams& pattern_params,
                             const ConfidenceParams& conf) {
    const double alpha = conf.alpha(pattern_params);
    const double tau = pattern_params.tau();
    if (tau <= 0.0) return sigma * alpha;
    const double rate = std::log1p(tau) / std::sqrt(std::log1p(tau * tau / (alpha * alpha)));
    return sigma * std::max(alpha, rate);
}

struct PocsResult {
    Eigen::VectorXd theta;
    double residual = 0.0;  // worst cylinder violation at theta
    int iterations = 0;
};

// Point in the intersection of cylinders {theta : |theta_S - c_S| <= rho_S}
// by cyclic alternating projections. Each projection rescales the S block
// toward its center and leaves the complement untouched.
inline PocsResult pocs_intersect(const std::vector<std::vector<int>>& supports,
                                 const std::vector<Eigen::VectorXd>& centers,
                                 const std::vector<double>& rho, Eigen::VectorXd init,
                                 int max_iters = 10000, double tol = 1e-10) {
    if (supports.size() != centers.size() || supports.size() != rho.size())
        throw ConfigError("pocs_intersect: mismatched cylinder lists");
    const auto violation = [&](const Eigen::VectorXd& th, std::size_t s) {
        double norm2 = 0.0;
        for (std::size_t i = 0; i < supports[s].size(); ++i) {
            const double diff = th[supports[s][i]] - centers[s][static_cast<Eigen::Index>(i)];
            norm2 += diff * diff;
        }
        return std::sqrt(norm2) - rho[s];
    };
    PocsResult res;
    res.theta = std::move(init);
    for (; res.iterations < max_iters; ++res.iterations) {
        res.residual = 0.0;
        for (std::size_t s = 0; s < supports.size(); ++s)
            res.residual = std::max(res.residual, violation(res.theta, s));
        if (res.residual <= tol) break;
        for (std::size_t s = 0; s < supports.size(); ++s) {
            const double excess = violation(res.theta, s);
            if (excess <= 0.0) continue;
            const double scale = rho[s] / (excess + rho[s]);
            for (std::size_t i = 0; i < supports[s].size(); ++i) {
                const double c = centers[s][static_cast<Eigen::Index>(i)];
                res.theta[supports[s][i]] = c + scale * (res.theta[supports[s][i]] - c);
            }
        }
    }
    return res;
}

struct MultiPatternMeanConfig {
    double net_radius = 0.5;
    std::uint64_t net_seed = 99;
    int pocs_iters = 10000;
    double pocs_tol = 1e-10;
    NetMeanConfig net_mean;
};

struct MultiPatternMeanResult {
    Eigen::VectorXd theta;
    double diameter_bound = 0.0;           // 2 sqrt(sum_S r_S^2)
    double residual = 0.0;                 // worst cylinder violation at theta
    std::vector<Eigen::VectorXd> per_pattern;
    std::vector<double> radii;
    int iterations = 0;
};

// Per-pattern all-or-nothing estimation followed by a point in the
// intersection of the cylinders {theta : |theta_S - theta_S_hat| <= 2 r_S},
// found by alternating projections from the coordinatewise average.
inline MultiPatternMeanResult estimate_mean_multipattern(
    const std::vector<MaskedSample>& samples, const PatternSet& ps, double sigma,
    const ContaminationParams& params, const ConfidenceParams& conf,
    const MultiPatternMeanConfig& cfg = {}) {
    if (samples.empty()) throw NoObservedData();
    const int d = samples.front().dim();
    const auto cover = coverage_checks(ps, 0.0, d);
    if (!cover.union_ok)
        throw ConfigError("estimate_mean_multipattern: patterns do not cover [d]");

    MultiPatternMeanResult res;
    const double delta_s = conf.delta / static_cast<double>(ps.size());
    for (std::size_t s = 0; s < ps.size(); ++s) {
        const auto& S = ps.patterns[s];
        const auto censored = censor_to_pattern(samples, S);
        const ContaminationParams pattern_params(params.epsilon(), params.q() * ps.pi[s]);
        const ConfidenceParams pattern_conf{conf.n, static_cast<int>(S.size()), delta_s};
        const SphereNet net = make_net(static_cast<int>(S.size()), cfg.net_radius,
                                       cfg.net_seed + s);
        const auto est = estimate_mean_net(censored, sigma, pattern_params, pattern_conf, net,
                                           cfg.net_mean);
        res.per_pattern.push_back(est.theta);
        res.radii.push_back(pattern_radius(sigma, pattern_params, pattern_conf));
    }

    // coordinatewise average of the per-pattern estimates
    Eigen::VectorXd init = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(d);
    for (std::size_t s = 0; s < ps.size(); ++s) {
        const auto& S = ps.patterns[s];
        for (std::size_t i = 0; i < S.size(); ++i) {
            init[S[i]] += res.per_pattern[s][static_cast<Eigen::Index>(i)];
            counts[S[i]] += 1.0;
        }
    }
    for (int j = 0; j < d; ++j) init[j] /= std::max(counts[j], 1.0);

    std::vector<double> rho;
    rho.reserve(ps.size());
    for (const double r : res.radii) rho.push_back(2.0 * r);
    const auto pocs = pocs_intersect(ps.patterns, res.per_pattern, rho, std::move(init),
                                     cfg.pocs_iters, cfg.pocs_tol);
    res.theta = pocs.theta;
    res.residual = pocs.residual;
    res.iterations = pocs.iterations;
    double sum_r2 = 0.0;
    for (const double r : res.radii) sum_r2 += r * r;
    res.diameter_bound = 2.0 * std::sqrt(sum_r2);
    return res;
}

struct MultiPatternCovConfig {
    std::uint64_t net_seed = 77;
    CovTwoStepConfig two_step;
};

struct MultiPatternCovResult {
    Eigen::MatrixXd sigma;
    double diameter_bound = 0.0;  // min(d, 2^|S|) max_S r_S
    double clip_shift = 0.0;      // operator-norm movement of the PSD clip
    std::vector<double> radii;
};

// Per-pattern two-step covariance estimates stitched entrywise (averaging the
// patterns that contain both coordinates), then clipped to the PSD cone.
inline MultiPatternCovResult estimate_cov_multipattern(const std::vector<MaskedSample>& samples,
                                                       const PatternSet& ps,
                                                       const ContaminationParams& params,
                                                       const ConfidenceParams& conf,
                                                       const MultiPatternCovConfig& cfg = {}) {
    if (samples.empty()) throw NoObservedData();
    const int d = samples.front().dim();
    if (!coverage_checks(ps, 0.0, d).pairwise_ok)
        throw ConfigError("estimate_cov_multipattern: pairwise coverage fails");

    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd count = Eigen::MatrixXd::Zero(d, d);
    MultiPatternCovResult res;
    const double delta_s = conf.delta / static_cast<double>(ps.size());
    for (std::size_t s = 0; s < ps.size(); ++s) {
        const auto& S = ps.patterns[s];
        const auto censored = censor_to_pattern(samples, S);
        const ContaminationParams pattern_params(params.epsilon(), params.q() * ps.pi[s]);
        const ConfidenceParams pattern_conf{conf.n, static_cast<int>(S.size()), delta_s};
        CovTwoStepConfig two_step = cfg.two_step;
        two_step.net_seed = cfg.net_seed + s;
        const auto est = estimate_cov_two_step(censored, pattern_params, pattern_conf, two_step);
        const double alpha = pattern_conf.alpha(pattern_params);
        const double tau = pattern_params.tau();
        const double rel =
            alpha + (tau > 0.0 ? std::log1p(tau) / std::log1p(tau / alpha) : 0.0);
        res.radii.push_back(rel * op_norm(est.sigma));
        for (std::size_t a = 0; a < S.size(); ++a)
            for (std::size_t b = 0; b < S.size(); ++b) {
                sum(S[a], S[b]) += est.sigma(static_cast<Eigen::Index>(a),
                                             static_cast<Eigen::Index>(b));
                count(S[a], S[b]) += 1.0;
            }
    }
    Eigen::MatrixXd stitched(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) stitched(i, j) = sum(i, j) / count(i, j);
    stitched = symmetrize(stitched);
    res.sigma = psd_project(stitched);
    res.clip_shift = op_norm(res.sigma - stitched);
    const double k_classes = std::min(
        static_cast<double>(d), std::pow(2.0, static_cast<double>(ps.size())));
    res.diameter_bound = k_classes * *std::max_element(res.radii.begin(), res.radii.end());
    return res;
}

}  // namespace misrob
