#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <vector>

#include "misrob/errors.hpp"
#include "misrob/kolmogorov.hpp"
#include "misrob/linalg.hpp"
#include "misrob/masked.hpp"
#include "misrob/model.hpp"
#include "misrob/net.hpp"

namespace misrob {

namespace detail {

// Minimize f(theta) = max_i |v_i' theta - c_i| by subgradient descent with
// target-level (Polyak-style) steps: the step aims at f_rec - level, and the
// level is halved whenever the accumulated path length exceeds its budget.
// Returns the best iterate. The objective is a max of |affine|, hence convex
// with unit-norm subgradients.
struct MaxAffineResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
};

inline MaxAffineResult minimize_max_affine(const std::vector<Eigen::VectorXd>& dirs,
                                           const std::vector<double>& targets,
                                           Eigen::VectorXd init, int max_iters, double tol) {
    const auto eval = [&](const Eigen::VectorXd& th, std::size_t& arg, double& sgn) {
        double worst = -1.0;
        for (std::size_t i = 0; i < dirs.size(); ++i) {
            const double r = dirs[i].dot(th) - targets[i];
            if (std::abs(r) > worst) {
                worst = std::abs(r);
                arg = i;
                sgn = r >= 0.0 ? 1.0 : -1.0;
            }
        }
        return worst;
    };

    MaxAffineResult best;
    best.x = init;
    std::size_t arg = 0;
    double sgn = 1.0;
    best.value = eval(init, arg, sgn);

    Eigen::VectorXd theta = init;
    double level_gap = std::max(best.value * 0.5, tol);
    double path = 0.0;
    const double path_budget = std::max(1.0, 4.0 * best.value);
    int last_improve = 0;
    int it = 0;
    for (; it < max_iters && level_gap > 0.25 * tol; ++it) {
        const double f = eval(theta, arg, sgn);
        if (f < best.value - 0.25 * level_gap) last_improve = it;
        if (f < best.value) {
            best.value = f;
            best.x = theta;
        }
        const double target = std::max(best.value - level_gap, 0.0);
        const double step = f - target;
        if (step > 0.0) {
            theta -= step * sgn * dirs[arg];
            path += step;
        }
        // halve the level on path exhaustion or stall
        if (path > path_budget || it - last_improve > 100) {
            level_gap *= 0.5;
            path = 0.0;
            last_improve = it;
        }
    }
    best.iterations = it;
    return best;
}

}  // namespace detail

struct NetMeanConfig {
    int max_iters = 20000;
    double tol_mult = 1e-6;  // objective tolerance in units of sigma
    SearchConfig univariate;
};

struct NetMeanResult {
    Eigen::VectorXd theta;
    double objective = 0.0;
    int iterations = 0;
    std::vector<double> dir_estimates;      // per net direction
    std::vector<std::uint8_t> dir_conditional;
};

// Epsilon-net mean estimator: a univariate minimum-distance estimate per net
// direction at failure budget delta/|net|, combined through
// argmin_theta max_v |v'theta - theta_v|.
inline NetMeanResult estimate_mean_net(const std::vector<MaskedSample>& samples, double sigma,
                                       const ContaminationParams& params,
                                       const ConfidenceParams& conf, const SphereNet& net,
                                       const NetMeanConfig& cfg = {}) {
    if (net.directions.empty()) throw ConfigError("estimate_mean_net: empty net");
    const int d = net.dim;
    if (samples.empty() || samples.front().dim() != d)
        throw ConfigError("estimate_mean_net: dimension mismatch");

    const ConfidenceParams dir_conf{conf.n, 0,
                                    conf.delta / static_cast<double>(net.size())};

    NetMeanResult res;
    res.dir_estimates.reserve(net.size());
    for (const auto& v : net.directions) {
        const auto est =
            auto_mean_estimator(project_all(samples, v), sigma, params, dir_conf, cfg.univariate);
        res.dir_estimates.push_back(est.theta);
        res.dir_conditional.push_back(est.used_conditional ? 1 : 0);
    }

    // coordinatewise initializer from the axis directions
    Eigen::VectorXd init(d);
    for (int j = 0; j < d; ++j) {
        const auto est = auto_mean_estimator(extract_coordinate(samples, j), sigma, params,
                                             dir_conf, cfg.univariate);
        init[j] = est.theta;
    }

    const auto fit = detail::minimize_max_affine(net.directions, res.dir_estimates, init,
                                                 cfg.max_iters, cfg.tol_mult * sigma);
    res.theta = fit.x;
    res.objective = fit.value;
    res.iterations = fit.iterations;
    return res;
}

// Relative operator-norm loss |Sigma*^{-1/2} Sigma Sigma*^{-1/2} - I|_op.
inline double relative_op_error(const Eigen::MatrixXd& sigma_hat,
                                const Eigen::MatrixXd& sigma_star) {
    const Eigen::MatrixXd W = sym_inv_sqrt(sigma_star);
    const Eigen::Index d = sigma_star.rows();
    return op_norm(W * symmetrize(sigma_hat) * W -
                   Eigen::MatrixXd::Identity(d, d));
}

struct CovTwoStepConfig {
    double c2 = 1.0;                 // constant in the feasibility slack gamma
    double net_radius = -1.0;        // <= 0: the default 1/(16 sqrt(1+tau))
    std::uint64_t net_seed = 1234;
    int recover_iters = 2000;
    VarianceSearchConfig variance;
};

struct CovTwoStepResult {
    Eigen::MatrixXd sigma;        // recovered covariance
    Eigen::MatrixXd sigma_tilde;  // first-half unnormalized second moment
    double gamma = 0.0;           // relative feasibility slack used
    double residual = 0.0;        // final hinge violation h (0 = feasible)
    int net_size = 0;
    int iterations = 0;
    std::vector<double> dir_variances;
};

// Two-step covariance estimator: whiten with the first half's second moment,
// estimate a robust variance per net direction on the scaled second half, and
// recover the matrix by minimizing the worst relative feasibility violation
// over the PSD cone.
inline CovTwoStepResult estimate_cov_two_step(const std::vector<MaskedSample>& samples,
                                              const ContaminationParams& params,
                                              const ConfidenceParams& conf,
                                              const CovTwoStepConfig& cfg = {}) {
    if (samples.size() < 2) throw ConfigError("estimate_cov_two_step: need n >= 2");
    const int d = samples.front().dim();
    const std::size_t half = samples.size() / 2;

    Eigen::MatrixXd sigma_tilde = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t i = 0; i < half; ++i) {
        if (!samples[i].fully_observed()) continue;
        sigma_tilde.noalias() += samples[i].values() * samples[i].values().transpose();
    }
    sigma_tilde /= static_cast<double>(half);

    const Eigen::MatrixXd M = sym_inv_sqrt(sigma_tilde);  // throws if singular
    const Eigen::MatrixXd M_inv = sym_sqrt(sigma_tilde);

    const double tau = params.tau();
    const double radius = cfg.net_radius > 0.0 ? cfg.net_radius : 1.0 / (16.0 * std::sqrt(1.0 + tau));
    const SphereNet net = make_net(d, radius, cfg.net_seed);

    const std::int64_t n2 = static_cast<std::int64_t>(samples.size() - half);
    const ConfidenceParams dir_conf{n2, 0, conf.delta / static_cast<double>(net.size())};

    CovTwoStepResult res;
    res.sigma_tilde = sigma_tilde;
    res.net_size = static_cast<int>(net.size());
    res.dir_variances.reserve(net.size());
    for (const auto& v : net.directions) {
        const Eigen::VectorXd Mv = M * v;
        Masked1D proj;
        proj.observed.reserve(samples.size() - half);
        for (std::size_t i = half; i < samples.size(); ++i) {
            if (samples[i].fully_observed())
                proj.observed.push_back(Mv.dot(samples[i].values()));
            else
                ++proj.n_missing;
        }
        res.dir_variances.push_back(min_distance_variance(proj, params, dir_conf, cfg.variance));
    }

    // feasibility slack: alpha floor plus the heavy-contamination log ratio
    const double alpha_dir = dir_conf.alpha(params);
    const double log_term = tau > 0.0 ? std::log1p(tau) / std::log1p(tau / alpha_dir) : 0.0;
    const double gamma = cfg.c2 * (alpha_dir + log_term);
    res.gamma = gamma;

    // initializer: M^{-1} (diagonal least-squares fit of the directional
    // variances) M^{-1}
    Eigen::MatrixXd A(net.size(), d);
    Eigen::VectorXd rhs(net.size());
    for (std::size_t i = 0; i < net.size(); ++i) {
        for (int j = 0; j < d; ++j) A(static_cast<Eigen::Index>(i), j) =
            net.directions[i][j] * net.directions[i][j];
        rhs[static_cast<Eigen::Index>(i)] = res.dir_variances[i];
    }
    const Eigen::VectorXd diag = (A.transpose() * A).ldlt().solve(A.transpose() * rhs);
    Eigen::MatrixXd sigma = psd_project(M_inv * diag.asDiagonal() * M_inv);

    const auto hinge = [&](const Eigen::MatrixXd& S, std::size_t& arg, double& sgn) {
        double worst = 0.0;
        for (std::size_t i = 0; i < net.size(); ++i) {
            const Eigen::VectorXd Mv = M * net.directions[i];
            const double a = Mv.dot(S * Mv);
            const double r = a - res.dir_variances[i];
            const double h = std::abs(r) - gamma * a;
            if (h > worst) {
                worst = h;
                arg = i;
                sgn = r >= 0.0 ? 1.0 : -1.0;
            }
        }
        return worst;
    };

    std::size_t arg = 0;
    double sgn = 1.0;
    double h = hinge(sigma, arg, sgn);
    Eigen::MatrixXd best = sigma;
    double best_h = h;
    int it = 0;
    for (; it < cfg.recover_iters && h > 0.0; ++it) {
        const Eigen::VectorXd Mv = M * net.directions[arg];
        const Eigen::MatrixXd G = (sgn - gamma) * (Mv * Mv.transpose());
        const double gn2 = G.squaredNorm();
        if (gn2 <= 0.0) break;
        sigma = psd_project(sigma - (h / gn2) * G);
        h = hinge(sigma, arg, sgn);
        if (h < best_h) {
            best_h = h;
            best = sigma;
        }
    }
    res.sigma = best;
    res.residual = best_h;
    res.iterations = it;
    return res;
}

}  // namespace misrob
