#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "misrob/adversary.hpp"
#include "misrob/errors.hpp"
#include "misrob/gaussian.hpp"
#include "misrob/masked.hpp"
#include "misrob/model.hpp"
#include "misrob/momenttest.hpp"

namespace misrob {

// Regression sample: observed (x, y) rows plus the count of fully masked
// pairs. The loss normalizes by the total count including the masked rows.
struct RegressionData {
    Eigen::MatrixXd X;  // observed rows only
    Eigen::VectorXd y;
    std::int64_t n_total = 0;

    int d() const { return static_cast<int>(X.cols()); }
    std::int64_t n_observed() const { return X.rows(); }

    static RegressionData from_masked(const std::vector<MaskedSample>& samples) {
        if (samples.empty()) throw ConfigError("RegressionData: empty input");
        const int dim = samples.front().dim() - 1;
        if (dim < 1) throw ConfigError("RegressionData: need at least one covariate");
        std::vector<const MaskedSample*> obs;
        for (const auto& s : samples)
            if (s.fully_observed()) obs.push_back(&s);
        RegressionData out;
        out.n_total = static_cast<std::int64_t>(samples.size());
        out.X.resize(static_cast<Eigen::Index>(obs.size()), dim);
        out.y.resize(static_cast<Eigen::Index>(obs.size()));
        for (std::size_t i = 0; i < obs.size(); ++i) {
            out.X.row(static_cast<Eigen::Index>(i)) = obs[i]->values().head(dim);
            out.y[static_cast<Eigen::Index>(i)] = obs[i]->values()[dim];
        }
        return out;
    }
};

namespace detail {

struct Kahan {
    double acc = 0.0, comp = 0.0;
    void add(double term) {
        const double t = term - comp;
        const double next = acc + t;
        comp = (next - acc) - t;
        acc = next;
    }
};

}  // namespace detail

// F_n^{(k)}(theta) = (1/n) sum over observed rows of (y - x'theta)^{2k}.
inline double loss(const Eigen::VectorXd& theta, const RegressionData& data, int k) {
    if (k < 1) throw ConfigError("loss: k must be >= 1");
    detail::Kahan acc;
    for (Eigen::Index i = 0; i < data.X.rows(); ++i)
        acc.add(detail::even_pow(data.y[i] - data.X.row(i).dot(theta), k));
    if (!std::isfinite(acc.acc)) throw std::range_error("loss overflow");
    return acc.acc / static_cast<double>(data.n_total);
}

inline Eigen::VectorXd gradient(const Eigen::VectorXd& theta, const RegressionData& data, int k) {
    std::vector<detail::Kahan> acc(static_cast<std::size_t>(data.d()));
    for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
        const double r = data.y[i] - data.X.row(i).dot(theta);
        const double w = detail::odd_pow(r, k);
        for (int j = 0; j < data.d(); ++j) acc[static_cast<std::size_t>(j)].add(w * data.X(i, j));
    }
    Eigen::VectorXd g(data.d());
    for (int j = 0; j < data.d(); ++j) {
        g[j] = -2.0 * k * acc[static_cast<std::size_t>(j)].acc / static_cast<double>(data.n_total);
        if (!std::isfinite(g[j])) throw std::range_error("gradient overflow");
    }
    return g;
}

inline Eigen::MatrixXd hessian(const Eigen::VectorXd& theta, const RegressionData& data, int k) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(data.d(), data.d());
    for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
        const double r = data.y[i] - data.X.row(i).dot(theta);
        const double w = k == 1 ? 1.0 : detail::even_pow(r, k - 1);
        H.noalias() += w * data.X.row(i).transpose() * data.X.row(i);
    }
    H *= 2.0 * k * (2.0 * k - 1.0) / static_cast<double>(data.n_total);
    if (!H.allFinite()) throw std::range_error("hessian overflow");
    return H;
}

// floor(c L / (log L)^2) with the inner log clamped at 1 and the result
// clamped at 1, for L = log(tau/alpha).
inline int choose_k_power(double log_ratio, double c) {
    const double ll = std::max(1.0, std::log(log_ratio));
    return std::max(1, static_cast<int>(std::floor(c * log_ratio / (ll * ll))));
}

// Power selection: k = 1 in the small-contamination regime tau <= C' alpha,
// else the clamped floor formula above.
inline int choose_k(const ConfidenceParams& conf, const ContaminationParams& params,
                    double c = 0.1, double c_prime = 10.0) {
    const double alpha = conf.alpha(params);
    const double tau = params.tau();
    if (tau <= c_prime * alpha) return 1;
    return choose_k_power(std::log(tau / alpha), c);
}

struct FitConfig {
    int max_iters = 200;
    double step_tol = 1e-12;   // Newton decrement, relative to 1 + |theta|
    int max_backtracks = 60;
};

struct FitResult {
    Eigen::VectorXd theta;
    int iterations = 0;
    double grad_norm = 0.0;
    double hess_min_eig = 0.0;
    bool converged = false;
};

// Two-step fit: the exact k = 1 solution from the normal equations, then
// damped Newton with backtracking on the 2k-power loss. Global convergence
// follows from convexity; the quadratic case terminates in one step.
inline FitResult fit(const RegressionData& data, int k, const FitConfig& cfg = {}) {
    if (data.n_observed() < 1) throw NoObservedData();
    if (data.n_observed() < data.d())
        throw DataError("fit: fewer observed rows than parameters");

    const Eigen::MatrixXd XtX = data.X.transpose() * data.X;
    {
        const Eigen::VectorXd ev =
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(XtX).eigenvalues();
        if (ev.minCoeff() <= 1e-12 * std::max(1.0, ev.maxCoeff()))
            throw SingularMatrixError("fit: rank-deficient design matrix");
    }
    Eigen::VectorXd theta = XtX.ldlt().solve(data.X.transpose() * data.y);

    FitResult res;
    res.theta = theta;
    if (k == 1) {
        res.grad_norm = gradient(theta, data, 1).norm();
        res.hess_min_eig = min_eigenvalue(hessian(theta, data, 1));
        res.converged = true;
        return res;
    }

    double f = loss(theta, data, k);
    int it = 0;
    for (; it < cfg.max_iters; ++it) {
        const Eigen::VectorXd g = gradient(theta, data, k);
        const Eigen::MatrixXd H = hessian(theta, data, k);
        Eigen::VectorXd step = H.ldlt().solve(g);
        if (!step.allFinite()) throw NumericError("fit: Newton step failed");
        const double decrement = step.norm() / (1.0 + theta.norm());
        if (decrement <= cfg.step_tol) {
            res.converged = true;
            break;
        }
        double t = 1.0;
        const double slope = g.dot(step);
        int bt = 0;
        while (bt < cfg.max_backtracks) {
            const double f_new = loss(theta - t * step, data, k);
            if (f_new <= f - 0.25 * t * slope) {
                theta -= t * step;
                f = f_new;
                break;
            }
            t *= 0.5;
            ++bt;
        }
        if (bt == cfg.max_backtracks) break;  // no progress possible at fp resolution
    }
    res.theta = theta;
    res.iterations = it;
    res.grad_norm = gradient(theta, data, k).norm();
    res.hess_min_eig = min_eigenvalue(hessian(theta, data, k));
    return res;
}

// Population ceiling 2 sqrt(2/pi) k sigma^{2k-1} eps (2k-2)!! on the gradient
// norm at the truth, over all masking mechanisms.
inline double population_gradient_bound(int k, double sigma, double epsilon) {
    if (k < 1) throw ConfigError("population_gradient_bound: k must be >= 1");
    const double s_pow = std::pow(sigma, 2 * k - 1);
    const double out = 2.0 * kSqrt2OverPi * k * s_pow * epsilon *
                       static_cast<double>(double_factorial(2 * k - 2));
    if (!std::isfinite(out)) throw std::range_error("population_gradient_bound overflow");
    return out;
}

// Matching error ceiling sigma (eps/(1-eps)) sqrt(2/pi) (2k-2)!!/(2k-1)!!,
// which decays like 1/sqrt(k).
inline double population_error_bound(int k, double sigma, double epsilon) {
    if (k < 1) throw ConfigError("population_error_bound: k must be >= 1");
    const double ratio = static_cast<double>(double_factorial(2 * k - 2)) /
                         static_cast<double>(double_factorial(2 * k - 1));
    return sigma * epsilon / (1.0 - epsilon) * kSqrt2OverPi * ratio;
}

struct OracleEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

// Monte-Carlo estimate of |grad F^{(k)}(theta*)| under a given adversary,
// averaged over batches. theta* = 0 without loss of generality.
inline OracleEstimate population_oracle(int k, double sigma, double epsilon, int d,
                                        const SelectionRule& adversary, std::int64_t n_draws,
                                        int batches, std::uint64_t seed) {
    const ContaminationParams params(epsilon, 1.0);
    const Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(d);
    std::vector<double> vals;
    for (int b = 0; b < batches; ++b) {
        const auto data = generate_all_or_nothing(regression_sampler(theta0, sigma), params,
                                                  adversary, n_draws, seed + 1000ull * b);
        const RegressionData reg = RegressionData::from_masked(data);
        vals.push_back(gradient(theta0, reg, k).norm());
    }
    OracleEstimate out;
    for (const double v : vals) out.value += v;
    out.value /= batches;
    double ss = 0.0;
    for (const double v : vals) ss += (v - out.value) * (v - out.value);
    out.std_error = batches > 1 ? std::sqrt(ss / (batches * (batches - 1.0))) : 0.0;
    return out;
}

}  // namespace misrob
