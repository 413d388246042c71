#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "misrob/errors.hpp"
#include "misrob/gaussian.hpp"
#include "misrob/masked.hpp"
#include "misrob/model.hpp"
#include "misrob/quadrature.hpp"
#include "misrob/rng.hpp"

namespace misrob {

// ---------------------------------------------------------------------------
// Data generation
// ---------------------------------------------------------------------------

// A masking mechanism: given the contamination-slot samples, decide which to
// reveal (true) and which to censor. The rule sees the full slot list, so it
// may depend arbitrarily on the values, including the responses in the
// regression setting.
using SelectionRule = std::function<std::vector<char>(const std::vector<Eigen::VectorXd>&)>;

inline SelectionRule reveal_all() {
    return [](const std::vector<Eigen::VectorXd>& slots) {
        return std::vector<char>(slots.size(), 1);
    };
}

inline SelectionRule censor_all() {
    return [](const std::vector<Eigen::VectorXd>& slots) {
        return std::vector<char>(slots.size(), 0);
    };
}

enum class Tail { Upper, Lower };

// Censors the slots whose statistic falls strictly inside the chosen tail,
// where the tail is the top (resp. bottom) `fraction` of the slot statistics.
// Ties at the threshold are revealed, so a constant statistic reveals all.
inline SelectionRule tail_censor_adversary(std::function<double(const Eigen::VectorXd&)> statistic,
                                           Tail tail, double fraction = 0.5) {
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw ConfigError("tail_censor_adversary: fraction must be in [0,1]");
    return [statistic = std::move(statistic), tail, fraction](
               const std::vector<Eigen::VectorXd>& slots) {
        std::vector<char> reveal(slots.size(), 1);
        if (slots.empty() || fraction == 0.0) return reveal;
        std::vector<double> stats(slots.size());
        for (std::size_t i = 0; i < slots.size(); ++i) stats[i] = statistic(slots[i]);
        std::vector<double> sorted = stats;
        std::sort(sorted.begin(), sorted.end());
        // Threshold = the (1-fraction) empirical quantile; censoring is strict,
        // so ties at the threshold (and a constant statistic) are revealed.
        const std::size_t keep = std::max<std::size_t>(
            1, static_cast<std::size_t>(
                   std::llround((1.0 - fraction) * static_cast<double>(sorted.size()))));
        for (std::size_t i = 0; i < slots.size(); ++i) {
            if (tail == Tail::Upper)
                reveal[i] = stats[i] <= sorted[keep - 1] ? 1 : 0;
            else
                reveal[i] = stats[i] >= sorted[sorted.size() - keep] ? 1 : 0;
        }
        return reveal;
    };
}

// Regression rows are packed as (x_1..x_d, y). Censors slots whose residual
// sign agrees with the sign of v'x and whose |residual| is at most
// sigma_cap; the bias this induces on the quadratic loss is maximal while the
// 2k-power losses see almost none of it.
inline SelectionRule sign_aligned_residual_censor(Eigen::VectorXd theta_star, double sigma_cap) {
    return [theta = std::move(theta_star), sigma_cap](const std::vector<Eigen::VectorXd>& slots) {
        std::vector<char> reveal(slots.size(), 1);
        const Eigen::Index d = theta.size();
        const double vnorm = theta.norm();
        const Eigen::VectorXd v =
            vnorm > 0 ? Eigen::VectorXd(theta / vnorm) : Eigen::VectorXd::Unit(d, 0);
        for (std::size_t i = 0; i < slots.size(); ++i) {
            const auto& row = slots[i];
            const double r = row[d] - row.head(d).dot(theta);
            const double u = row.head(d).dot(v);
            if (r * u > 0.0 && std::abs(r) <= sigma_cap) reveal[i] = 0;
        }
        return reveal;
    };
}

// Draws n samples from the all-or-nothing process: a Binomial(n, 1-eps) batch
// is revealed unconditionally, the remaining slots are fresh draws handed to
// the adversary, and everything not revealed becomes the fully missing atom.
// Output order is shuffled by the seed; the whole function is bit-reproducible.
inline std::vector<MaskedSample> generate_all_or_nothing(
    const std::function<Eigen::VectorXd(Rng&)>& base_sampler, const ContaminationParams& params,
    const SelectionRule& adversary, std::int64_t n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("generate_all_or_nothing: n must be >= 1");
    if (params.q() != 1.0)
        throw ConfigError("generate_all_or_nothing: requires q = 1 (reduce first)");

    Rng root(seed);
    Rng count_rng = root.derive("mcar-count");
    Rng draw_rng = root.derive("draws");
    Rng shuffle_rng = root.derive("shuffle");

    const std::int64_t m = count_rng.binomial(n, 1.0 - params.epsilon());

    std::vector<MaskedSample> out;
    out.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < m; ++i) out.push_back(MaskedSample::observed(base_sampler(draw_rng)));

    std::vector<Eigen::VectorXd> slots;
    slots.reserve(static_cast<std::size_t>(n - m));
    for (std::int64_t i = 0; i < n - m; ++i) slots.push_back(base_sampler(draw_rng));

    int dim = 0;
    if (!slots.empty())
        dim = static_cast<int>(slots.front().size());
    else if (!out.empty())
        dim = out.front().dim();
    else
        dim = static_cast<int>(base_sampler(draw_rng).size());

    const std::vector<char> reveal = slots.empty() ? std::vector<char>{} : adversary(slots);
    if (reveal.size() != slots.size())
        throw NumericError("selection rule returned wrong-length mask");
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (reveal[i])
            out.push_back(MaskedSample::observed(std::move(slots[i])));
        else
            out.push_back(MaskedSample::missing(dim));
    }
    shuffle_rng.shuffle(out);
    return out;
}

inline std::function<Eigen::VectorXd(Rng&)> gaussian_sampler(Eigen::VectorXd mean, double sigma) {
    return [mean = std::move(mean), sigma](Rng& rng) {
        Eigen::VectorXd x(mean.size());
        for (Eigen::Index j = 0; j < mean.size(); ++j) x[j] = mean[j] + sigma * sample_normal(rng);
        return x;
    };
}

// Rows (x, y) with x ~ N(0, I_d) and y = x'theta + sigma g.
inline std::function<Eigen::VectorXd(Rng&)> regression_sampler(Eigen::VectorXd theta,
                                                               double sigma) {
    return [theta = std::move(theta), sigma](Rng& rng) {
        const Eigen::Index d = theta.size();
        Eigen::VectorXd row(d + 1);
        for (Eigen::Index j = 0; j < d; ++j) row[j] = sample_normal(rng);
        row[d] = row.head(d).dot(theta) + sigma * sample_normal(rng);
        return row;
    };
}

// ---------------------------------------------------------------------------
// Hard instances: contaminations that agree with the null on a central window
// and carry the parameter signal only in the tails.
// ---------------------------------------------------------------------------

struct HardInstanceMean {
    double gamma = 0.0;  // mean shift along the hidden direction
    double R = 0.0;      // window half-width
    double beta = 1.0;   // window renormalizer
    double b = 1.0;      // observed mass
    double tau = 0.0;

    // Two-branch density: beta*phi inside the window, phi(.-gamma) outside.
    double density(double x) const {
        return std::abs(x) <= R ? beta * norm_pdf(x) : norm_pdf(x - gamma);
    }
    double cdf(double x) const {
        if (x < -R) return norm_cdf(x - gamma);
        if (x <= R) return norm_cdf(-R - gamma) + beta * (norm_cdf(x) - norm_cdf(-R));
        return norm_cdf(x - gamma);
    }
    double ratio_to_shifted(double x) const { return density(x) / norm_pdf(x - gamma); }
};

inline HardInstanceMean build_mean_hard_instance(double gamma, const ContaminationParams& params,
                                                 double R_override = -1.0) {
    const double tau = params.tau();
    const double tp = std::log1p(tau);
    if (!(gamma > 0.0)) throw ConfigError("mean hard instance: gamma must be > 0");
    if (gamma * gamma > 0.25 * tp)
        throw InfeasibleInstance("mean hard instance: gamma^2 > 0.25 log(1+tau)");
    double R = R_override > 0.0 ? R_override : tp / (8.0 * gamma);
    if (R < 2.0 * gamma || R > tp / (8.0 * gamma) + 1e-12)
        throw InfeasibleInstance("mean hard instance: R window [2 gamma, log(1+tau)/(8 gamma)] empty or violated");
    HardInstanceMean inst;
    inst.gamma = gamma;
    inst.R = R;
    inst.tau = tau;
    inst.beta = (norm_cdf(R - gamma) - norm_cdf(-R - gamma)) / (norm_cdf(R) - norm_cdf(-R));
    inst.b = params.lower() * std::sqrt(1.0 + tau);
    return inst;
}

struct HardInstanceCov {
    double gamma = 0.0;  // variance inflation along the hidden direction
    double R = 0.0;
    double beta = 1.0;
    double b = 1.0;
    double tau = 0.0;

    double sd_out() const { return std::sqrt(1.0 + gamma); }
    double density(double x) const {
        return std::abs(x) <= R ? beta * norm_pdf(x) : norm_pdf(x, 0.0, sd_out());
    }
    double cdf(double x) const {
        const double s = sd_out();
        if (x < -R) return norm_cdf(x / s);
        if (x <= R) return norm_cdf(-R / s) + beta * (norm_cdf(x) - norm_cdf(-R));
        return norm_cdf(x / s);
    }
    double ratio_to_inflated(double x) const { return density(x) / norm_pdf(x, 0.0, sd_out()); }
};

inline HardInstanceCov build_cov_hard_instance(double gamma, const ContaminationParams& params,
                                               double R_override = -1.0) {
    const double tau = params.tau();
    const double tp = std::log1p(tau);
    if (!(gamma > 0.0 && gamma <= tau))
        throw InfeasibleInstance("cov hard instance: need 0 < gamma <= tau");
    const double Rmax = std::sqrt((1.0 + gamma) / gamma * tp);
    const double R = R_override > 0.0 ? R_override : Rmax;
    if (R > Rmax + 1e-12) throw InfeasibleInstance("cov hard instance: R^2 exceeds ((1+gamma)/gamma) log(1+tau)");
    HardInstanceCov inst;
    inst.gamma = gamma;
    inst.R = R;
    inst.tau = tau;
    const double s = std::sqrt(1.0 + gamma);
    inst.beta = (norm_cdf(R / s) - norm_cdf(-R / s)) / (norm_cdf(R) - norm_cdf(-R));
    inst.b = params.lower() * std::sqrt(1.0 + tau);
    return inst;
}

struct HardInstanceReg {
    double gamma = 0.0;  // coefficient magnitude along the hidden direction
    double r = 0.0;      // covariate window
    double R = 0.0;      // response window
    double b = 1.0;
    double tau = 0.0;

    double beta_x(double vx) const {
        return (norm_cdf(R - gamma * vx) - norm_cdf(-R - gamma * vx)) /
               (norm_cdf(R) - norm_cdf(-R));
    }
    // Conditional density of y given v'x = vx.
    double density(double vx, double y) const {
        if (std::abs(vx) <= r && std::abs(y) <= R) return beta_x(vx) * norm_pdf(y);
        return norm_pdf(y - gamma * vx);
    }
    double ratio_to_model(double vx, double y) const {
        return density(vx, y) / norm_pdf(y - gamma * vx);
    }
};

inline HardInstanceReg build_reg_hard_instance(double gamma, double r,
                                               const ContaminationParams& params) {
    const double tau = params.tau();
    const double tp = std::log1p(tau);
    if (!(gamma > 0.0 && r > 0.0)) throw ConfigError("reg hard instance: gamma, r must be > 0");
    if (gamma * gamma * r * r > 0.5 * tp)
        throw InfeasibleInstance("reg hard instance: gamma^2 r^2 > 0.5 log(1+tau)");
    HardInstanceReg inst;
    inst.gamma = gamma;
    inst.r = r;
    inst.R = tp / (8.0 * gamma * r);
    inst.tau = tau;
    inst.b = params.lower() * std::sqrt(1.0 + tau);
    return inst;
}

// ---------------------------------------------------------------------------
// Hidden-direction samplers: the univariate law on direction v, independent
// standard Gaussian on the orthogonal complement, missing atom with mass 1-b.
// Branch masses are available in closed form, so draws are rejection-free.
// ---------------------------------------------------------------------------

namespace detail {

inline Eigen::VectorXd embed_along(Rng& rng, const Eigen::VectorXd& v, double a) {
    const Eigen::Index d = v.size();
    Eigen::VectorXd w(d);
    for (Eigen::Index j = 0; j < d; ++j) w[j] = sample_normal(rng);
    w -= w.dot(v) * v;
    return a * v + w;
}

}  // namespace detail

inline double sample_mean_hard_1d(const HardInstanceMean& inst, Rng& rng) {
    const double p_in = inst.beta * (norm_cdf(inst.R) - norm_cdf(-inst.R));
    if (rng.uniform01() < p_in) return sample_normal_interval(rng, 0.0, 1.0, -inst.R, inst.R);
    const double mass_left = norm_cdf(-inst.R - inst.gamma);
    const double mass_right = norm_sf(inst.R - inst.gamma);
    if (rng.uniform01() * (mass_left + mass_right) < mass_left)
        return sample_normal_below(rng, inst.gamma, 1.0, -inst.R);
    return sample_normal_above(rng, inst.gamma, 1.0, inst.R);
}

inline std::vector<MaskedSample> sample_mean_hard(const HardInstanceMean& inst,
                                                  const Eigen::VectorXd& v, std::int64_t n,
                                                  std::uint64_t seed) {
    Rng rng = Rng(seed).derive("mean-hard");
    std::vector<MaskedSample> out;
    out.reserve(static_cast<std::size_t>(n));
    const int d = static_cast<int>(v.size());
    for (std::int64_t i = 0; i < n; ++i) {
        if (rng.uniform01() >= inst.b) {
            out.push_back(MaskedSample::missing(d));
            continue;
        }
        const double a = sample_mean_hard_1d(inst, rng);
        out.push_back(MaskedSample::observed(detail::embed_along(rng, v, a)));
    }
    return out;
}

inline double sample_cov_hard_1d(const HardInstanceCov& inst, Rng& rng) {
    const double p_in = inst.beta * (norm_cdf(inst.R) - norm_cdf(-inst.R));
    if (rng.uniform01() < p_in) return sample_normal_interval(rng, 0.0, 1.0, -inst.R, inst.R);
    const double s = inst.sd_out();
    // symmetric tails of N(0, 1+gamma)
    if (rng.uniform01() < 0.5) return sample_normal_below(rng, 0.0, s, -inst.R);
    return sample_normal_above(rng, 0.0, s, inst.R);
}

inline std::vector<MaskedSample> sample_cov_hard(const HardInstanceCov& inst,
                                                 const Eigen::VectorXd& v, std::int64_t n,
                                                 std::uint64_t seed) {
    Rng rng = Rng(seed).derive("cov-hard");
    std::vector<MaskedSample> out;
    out.reserve(static_cast<std::size_t>(n));
    const int d = static_cast<int>(v.size());
    for (std::int64_t i = 0; i < n; ++i) {
        if (rng.uniform01() >= inst.b) {
            out.push_back(MaskedSample::missing(d));
            continue;
        }
        const double a = sample_cov_hard_1d(inst, rng);
        out.push_back(MaskedSample::observed(detail::embed_along(rng, v, a)));
    }
    return out;
}

// Regression rows (x, y); x ~ N(0, I_d), y from the two-branch conditional law.
inline std::vector<MaskedSample> sample_reg_hard(const HardInstanceReg& inst,
                                                 const Eigen::VectorXd& v, std::int64_t n,
                                                 std::uint64_t seed) {
    Rng rng = Rng(seed).derive("reg-hard");
    std::vector<MaskedSample> out;
    out.reserve(static_cast<std::size_t>(n));
    const Eigen::Index d = v.size();
    for (std::int64_t i = 0; i < n; ++i) {
        if (rng.uniform01() >= inst.b) {
            out.push_back(MaskedSample::missing(static_cast<int>(d) + 1));
            continue;
        }
        Eigen::VectorXd row(d + 1);
        for (Eigen::Index j = 0; j < d; ++j) row[j] = sample_normal(rng);
        const double vx = row.head(d).dot(v);
        double y;
        if (std::abs(vx) <= inst.r) {
            const double mu = inst.gamma * vx;
            const double p_in = inst.beta_x(vx) * (norm_cdf(inst.R) - norm_cdf(-inst.R));
            if (rng.uniform01() < p_in) {
                y = sample_normal_interval(rng, 0.0, 1.0, -inst.R, inst.R);
            } else {
                const double ml = norm_cdf(-inst.R - mu);
                const double mr = norm_sf(inst.R - mu);
                y = rng.uniform01() * (ml + mr) < ml ? sample_normal_below(rng, mu, 1.0, -inst.R)
                                                     : sample_normal_above(rng, mu, 1.0, inst.R);
            }
        } else {
            y = inst.gamma * vx + sample_normal(rng);
        }
        row[d] = y;
        out.push_back(MaskedSample::observed(std::move(row)));
    }
    return out;
}

// |integral of x^i density - E[G^i]|, integrated across the density's window
// breakpoints. `span` is the half-width of the integration range beyond R.
inline double moment_gap(const std::function<double(double)>& density, int i, double R,
                         double span = 12.0, const QuadOptions& opt = {}) {
    if (i < 1) throw ConfigError("moment_gap: i must be >= 1");
    const auto f = [&](double x) { return std::pow(x, i) * density(x); };
    const double val = integrate_piecewise(f, -R - span, R + span, {-R, R}, opt);
    return std::abs(val - gaussian_raw_moment(i));
}

}  // namespace misrob
