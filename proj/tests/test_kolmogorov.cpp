#include <catch2/catch_amalgamated.hpp>

#include "misrob/adversary.hpp"
#include "misrob/kolmogorov.hpp"

#include <algorithm>
#include <cmath>

using namespace misrob;

namespace {

Masked1D draw_clean(double mu, double sigma, std::int64_t n, std::uint64_t seed) {
    Rng rng(seed);
    Masked1D out;
    out.observed.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) out.observed.push_back(mu + sigma * sample_normal(rng));
    return out;
}

// Independent projection oracle: bisect on t over feasibility of a monotone
// selection within [max(lo_j, F_j - t), min(hi_j, F_j + t)] where the
// evaluation set carries explicit left-limit entries.
struct EvalPoint {
    double model;  // model CDF at r
    double fhat;   // empirical value (left limit or value)
};

double lp_projection_distance(const std::vector<EvalPoint>& pts, double L, double U) {
    const auto feasible = [&](double t) {
        double running_lo = 0.0;
        for (const auto& p : pts) {
            const double lo = std::max(L * p.model, p.fhat - t);
            const double hi = std::min(U * p.model, p.fhat + t);
            running_lo = std::max(running_lo, lo);
            if (running_lo > hi + 1e-15) return false;
        }
        return true;
    };
    double a = 0.0, b = 1.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (a + b);
        (feasible(mid) ? b : a) = mid;
    }
    return b;
}

double oracle_distance_mean(const Masked1D& samples, double theta, double sigma,
                            const ContaminationParams& p) {
    std::vector<double> xs = samples.observed;
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(samples.n_total());
    std::vector<EvalPoint> pts;
    double below = 0.0;
    for (std::size_t i = 0; i < xs.size();) {
        std::size_t j = i;
        while (j < xs.size() && xs[j] == xs[i]) ++j;
        const double F = norm_cdf((xs[i] - theta) / sigma);
        pts.push_back({F, below / n});                         // left limit
        pts.push_back({F, static_cast<double>(j) / n});        // value
        below = static_cast<double>(j);
        i = j;
    }
    pts.push_back({1.0, (n - static_cast<double>(samples.n_missing)) / n});  // r -> +inf
    return lp_projection_distance(pts, p.lower(), p.upper());
}

}  // namespace

TEST_CASE("dkw threshold") {
    CHECK(dkw_threshold(ContaminationParams(0.0, 1.0), 900, std::exp(-1.0)) ==
          Catch::Approx(0.1).epsilon(1e-12));
    // U -> 1 as eps -> 1
    CHECK(dkw_threshold(ContaminationParams(0.999999, 1.0), 100, 0.1) ==
          Catch::Approx(3.0 * std::sqrt(std::log(10.0) / 100.0)).epsilon(1e-4));
    const double t1 = dkw_threshold(ContaminationParams(0.3, 1.0), 1000, 0.05);
    const double t4 = dkw_threshold(ContaminationParams(0.3, 1.0), 4000, 0.05);
    CHECK(t4 == Catch::Approx(0.5 * t1).epsilon(1e-12));
}

TEST_CASE("band distance: clean empirical fits the clean band") {
    const Masked1D xs = draw_clean(0.0, 1.0, 100000, 1);
    const EmpiricalCdf e = EmpiricalCdf::from(xs);
    const double d0 = band_distance_mean(e, 0.0, 1.0, ContaminationParams(0.0, 1.0));
    CHECK(d0 <= 0.006);  // pure DKW fluctuation at n = 1e5

    // idealized empirical (quantile-spaced): full observation sits inside the
    // eps = 0.5 band up to the 1/n discretization
    Masked1D ideal;
    const int n = 100000;
    for (int i = 0; i < n; ++i) ideal.observed.push_back(norm_quantile((i + 0.5) / n));
    const EmpiricalCdf ei = EmpiricalCdf::from(ideal);
    CHECK(band_distance_mean(ei, 0.0, 1.0, ContaminationParams(0.5, 1.0)) <= 1.0 / n);
    CHECK(band_distance_mean(ei, 0.0, 1.0, ContaminationParams(0.0, 1.0)) <= 1.0 / n);
}

TEST_CASE("band distance matches the LP projection oracle on small instances") {
    Rng rng(2024);
    const ContaminationParams p(0.3, 1.0);
    for (int t = 0; t < 60; ++t) {
        Masked1D xs;
        const int n_obs = 5 + static_cast<int>(rng.next_below(16));
        for (int i = 0; i < n_obs; ++i) xs.observed.push_back(rng.uniform(-3.0, 3.0));
        xs.n_missing = static_cast<std::int64_t>(rng.next_below(5));
        const double theta = rng.uniform(-1.0, 1.0);
        const EmpiricalCdf e = EmpiricalCdf::from(xs);
        const double direct = band_distance_mean(e, theta, 1.0, p);
        const double oracle = oracle_distance_mean(xs, theta, 1.0, p);
        CHECK(direct == Catch::Approx(oracle).margin(1e-9));
    }
}

TEST_CASE("band distance objective is translation-covariant (dyadic data)") {
    // values and shift on a dyadic grid make every sum exact
    Rng rng(7);
    Masked1D xs;
    for (int i = 0; i < 500; ++i)
        xs.observed.push_back(std::round(rng.uniform(-4.0, 4.0) * 1048576.0) / 1048576.0);
    xs.n_missing = 30;
    const double c = 3.25;
    Masked1D shifted;
    shifted.n_missing = xs.n_missing;
    for (const double x : xs.observed) shifted.observed.push_back(x + c);
    const EmpiricalCdf e0 = EmpiricalCdf::from(xs);
    const EmpiricalCdf e1 = EmpiricalCdf::from(shifted);
    const ContaminationParams p(0.2, 1.0);
    for (double theta = -2.0; theta <= 2.0; theta += 0.125) {
        CHECK(band_distance_mean(e0, theta, 1.0, p) ==
              band_distance_mean(e1, theta + c, 1.0, p));
    }
}

TEST_CASE("min distance mean: clean data") {
    // median over a few seeds of the estimate on clean N(2,1)
    std::vector<double> errs;
    for (std::uint64_t s = 0; s < 5; ++s) {
        const Masked1D xs = draw_clean(2.0, 1.0, 20000, 100 + s);
        errs.push_back(std::abs(min_distance_mean(xs, 1.0, ContaminationParams(0.0, 1.0)) - 2.0));
    }
    std::sort(errs.begin(), errs.end());
    CHECK(errs[2] <= 0.02);
}

TEST_CASE("min distance mean shifts with the data") {
    Rng rng(9);
    Masked1D xs;
    for (int i = 0; i < 2000; ++i)
        xs.observed.push_back(std::round(rng.uniform(-4.0, 4.0) * 1048576.0) / 1048576.0);
    const ContaminationParams p(0.1, 1.0);
    const double t0 = min_distance_mean(xs, 1.0, p);
    Masked1D shifted;
    for (const double x : xs.observed) shifted.observed.push_back(x + 3.25);
    const double t1 = min_distance_mean(shifted, 1.0, p);
    CHECK(t1 - t0 == Catch::Approx(3.25).margin(1e-7));
}

TEST_CASE("conditional estimator coincides with unconditional at eps = 0") {
    const Masked1D xs = draw_clean(-0.7, 1.0, 5000, 21);
    const ContaminationParams p(0.0, 1.0);
    const double a = min_distance_mean(xs, 1.0, p);
    const double b = min_distance_mean_conditional(xs, 1.0, p);
    CHECK(a == Catch::Approx(b).margin(2e-7));
}

TEST_CASE("conditional band separation lower bound at the proof's r = theta/2") {
    // evaluate the closed-form separation between the conditional bands of
    // N(0,1) and N(theta,1) contaminations at the split point
    for (const double tau : {0.5, 1.0, 4.0, 20.0}) {
        const double theta = std::sqrt(8.0 * std::log(4.0 * (1.0 + tau)));
        const double r = theta / 2.0;
        const double num = norm_cdf(r) * norm_cdf(theta - r) -
                           (1.0 + tau) * (1.0 + tau) * norm_cdf(r - theta) * norm_cdf(-r);
        const double den = (norm_cdf(r) + (1.0 + tau) * norm_cdf(-r)) *
                           ((1.0 + tau) * norm_cdf(r - theta) + norm_cdf(theta - r));
        CHECK(num / den >= 1.0 / 3.0 - 1e-12);
    }
}

TEST_CASE("conditional feasibility at truth") {
    // with fully observed clean data the conditional distance at the true
    // theta is ordinary DKW: compare against 2 sqrt(log(1/delta)/(q(1-eps)n))
    const ContaminationParams p(0.5, 1.0);
    const std::int64_t n = 4000;
    int ok = 0;
    for (std::uint64_t s = 0; s < 40; ++s) {
        const Masked1D xs = draw_clean(0.0, 1.0, n, 400 + s);
        const EmpiricalCdf e = EmpiricalCdf::from(xs);
        const double d = conditional_band_distance_mean(e, 0.0, 1.0, p);
        ok += d <= 2.0 * std::sqrt(std::log(1.0 / 0.05) / (0.5 * static_cast<double>(n)));
    }
    CHECK(ok >= 38);
}

TEST_CASE("auto estimator branch selection") {
    const Masked1D xs = draw_clean(0.0, 1.0, 1000, 3);

    const auto branch = [&](double eps, double alpha_target) {
        const ContaminationParams p(eps, 1.0);
        // pick delta so that alpha(p) == alpha_target at n = 1000, d = 0
        const double log_inv = alpha_target * alpha_target * 1000.0 * (1.0 - eps);
        const ConfidenceParams conf{1000, 0, std::exp(-log_inv)};
        return auto_mean_estimator(xs, 1.0, p, conf).used_conditional;
    };
    // tau = 0.1/0.9 vs threshold 0.05 alpha^{-1/4}
    CHECK(branch(0.1, 0.1) == (0.1 / 0.9 > 0.05 * std::pow(0.1, -0.25)));
    CHECK(branch(0.1, 0.1) == true);
    CHECK_FALSE(branch(0.0, 0.1));                    // tau = 0 -> unconditional
    CHECK(branch(1.0 - 1.0 / 11.0, 0.1));             // tau = 10 -> conditional
}

TEST_CASE("min distance variance: clean scale recovery") {
    // the sup-feasible rule sits above the truth by ~ radius/(2 max u phi(u)),
    // so n must be large enough for that slack to fit the tolerance
    std::vector<double> est;
    for (std::uint64_t s = 0; s < 5; ++s) {
        const Masked1D xs = draw_clean(0.0, 2.0, 1000000, 50 + s);
        est.push_back(min_distance_variance(xs, ContaminationParams(0.0, 1.0),
                                            ConfidenceParams{1000000, 0, 0.5}));
    }
    std::sort(est.begin(), est.end());
    CHECK(est[2] == Catch::Approx(4.0).margin(0.1));
}

TEST_CASE("variance estimator is exactly scale equivariant (power-of-two scale)") {
    const Masked1D xs = draw_clean(0.0, 1.0, 5000, 33);
    Masked1D doubled;
    for (const double x : xs.observed) doubled.observed.push_back(2.0 * x);
    const ContaminationParams p(0.1, 1.0);
    const ConfidenceParams conf{5000, 0, 0.1};
    const double a = min_distance_variance(xs, p, conf);
    const double b = min_distance_variance(doubled, p, conf);
    CHECK(b == 4.0 * a);  // bit-exact: the whole search commutes with the scaling
}

TEST_CASE("variance estimator returns zero in the heavy-contamination regime") {
    const Masked1D xs = draw_clean(0.0, 1.0, 200, 1);
    const ContaminationParams p(0.9, 1.0);  // tau = 9
    const ConfidenceParams conf{200, 0, 0.1};
    CHECK(min_distance_variance(xs, p, conf) == 0.0);
}

TEST_CASE("feasibility at truth across seeded contaminations") {
    const ContaminationParams p(0.3, 1.0);
    const std::int64_t n = 2000;
    const double thr = dkw_threshold(p, n, 0.01);
    const auto base = gaussian_sampler(Eigen::VectorXd::Zero(1), 1.0);
    const auto adv = tail_censor_adversary([](const Eigen::VectorXd& x) { return x[0]; },
                                           Tail::Upper, 0.5);
    Eigen::VectorXd e1 = Eigen::VectorXd::Ones(1);
    int ok = 0;
    for (std::uint64_t s = 0; s < 60; ++s) {
        const auto data = generate_all_or_nothing(base, p, adv, n, 9000 + s);
        const EmpiricalCdf e = EmpiricalCdf::from(project_all(data, e1));
        ok += band_distance_mean(e, 0.0, 1.0, p) <= thr;
    }
    CHECK(ok >= 59);
}

TEST_CASE("all-missing input is an error") {
    Masked1D xs;
    xs.n_missing = 10;
    CHECK_THROWS_AS(min_distance_mean(xs, 1.0, ContaminationParams(0.1, 1.0)), NoObservedData);
    CHECK_THROWS_AS(min_distance_variance(xs, ContaminationParams(0.1, 1.0),
                                          ConfidenceParams{10, 0, 0.1}),
                    NoObservedData);
}

TEST_CASE("auto estimator on hard-instance data stays within the rate-shaped bound") {
    // gamma = 0.2 at tau = 1: the bound C2 log(1+tau)/sqrt(log(1+tau^2/alpha^2))
    // with C2 = 2 frozen for the suite
    const ContaminationParams p(0.5, 1.0);
    const auto inst = build_mean_hard_instance(0.2, p);
    Eigen::VectorXd v(1);
    v << 1.0;
    const std::int64_t n = 100000;
    const ConfidenceParams conf{n, 0, 0.05};
    const double alpha = conf.alpha(p);
    const double bound = 2.0 * std::log1p(p.tau()) /
                         std::sqrt(std::log1p(p.tau() * p.tau() / (alpha * alpha)));
    std::vector<double> errs;
    for (std::uint64_t s = 0; s < 3; ++s) {
        const auto data = sample_mean_hard(inst, v, n, 800 + s);
        const auto est = auto_mean_estimator(project_all(data, v), 1.0, p, conf);
        CHECK(est.used_conditional);  // tau = 1 is deep in the conditional regime
        errs.push_back(std::abs(est.theta - 0.2));
    }
    std::sort(errs.begin(), errs.end());
    CHECK(errs[1] <= bound);
}

TEST_CASE("empirical cdf shape") {
    Masked1D xs;
    xs.observed = {2.0, 1.0, 1.0, 3.0};
    xs.n_missing = 1;
    const EmpiricalCdf e = EmpiricalCdf::from(xs);
    CHECK(e.at(0.5) == 0.0);
    CHECK(e.at(1.0) == 0.4);   // right-continuous at the atom
    CHECK(e.at(1.5) == 0.4);
    CHECK(e.at(2.0) == 0.6);
    CHECK(e.at(10.0) == 0.8);  // 1 - missing fraction
    CHECK(e.observed_fraction() == 0.8);
    // nondecreasing
    double prev = -1.0;
    for (double r = -1.0; r < 5.0; r += 0.1) {
        CHECK(e.at(r) >= prev);
        prev = e.at(r);
    }
}
