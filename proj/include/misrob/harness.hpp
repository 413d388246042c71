#pragma once

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "misrob/adversary.hpp"
#include "misrob/csv.hpp"
#include "misrob/kolmogorov.hpp"
#include "misrob/momenttest.hpp"
#include "misrob/netopt.hpp"
#include "misrob/patterns.hpp"
#include "misrob/polyreg.hpp"

namespace misrob {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

namespace harness_detail {

inline void require_schema(const json& cfg) {
    if (!cfg.contains("schema_version") || cfg["schema_version"].get<int>() != kSchemaVersion)
        throw ConfigError("config: missing or unsupported schema_version (expected 1)");
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    return j.contains(key) ? j[key].get<T>() : fallback;
}

template <typename T>
T require(const json& j, const std::string& key, const char* where) {
    if (!j.contains(key))
        throw ConfigError(std::string("config: missing field '") + key + "' in " + where);
    return j[key].get<T>();
}

inline Eigen::VectorXd to_vector(const json& j) {
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return v;
}

inline json from_vector(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

inline Eigen::MatrixXd to_matrix(const json& j) {
    const auto rows = j.size();
    if (rows == 0) throw ConfigError("config: empty matrix");
    const auto cols = j[0].size();
    Eigen::MatrixXd M(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t k = 0; k < cols; ++k)
            M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
    return M;
}

inline json from_matrix(const Eigen::MatrixXd& M) {
    json out = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < M.cols(); ++k) row.push_back(M(i, k));
        out.push_back(row);
    }
    return out;
}

// Builds a selection rule from its JSON spec. Regression rows are packed as
// (x_1..x_d, y).
inline SelectionRule build_adversary(const json& spec, const json& truth) {
    const std::string kind = get_or<std::string>(spec, "kind", "censor-all");
    if (kind == "censor-all") return censor_all();
    if (kind == "reveal-all") return reveal_all();
    if (kind == "tail-censor") {
        const std::string stat = get_or<std::string>(spec, "statistic", "coordinate");
        const int index = get_or<int>(spec, "index", 0);
        const double fraction = get_or<double>(spec, "fraction", 0.5);
        const Tail tail =
            get_or<std::string>(spec, "tail", "upper") == "lower" ? Tail::Lower : Tail::Upper;
        std::function<double(const Eigen::VectorXd&)> statistic;
        if (stat == "coordinate")
            statistic = [index](const Eigen::VectorXd& x) { return x[index]; };
        else if (stat == "response")
            statistic = [](const Eigen::VectorXd& x) { return x[x.size() - 1]; };
        else if (stat == "norm")
            statistic = [](const Eigen::VectorXd& x) { return x.norm(); };
        else
            throw ConfigError("adversary: unknown statistic '" + stat + "'");
        return tail_censor_adversary(statistic, tail, fraction);
    }
    if (kind == "sign-residual") {
        if (!truth.contains("theta"))
            throw ConfigError("adversary: sign-residual needs the true theta");
        const double cap = get_or<double>(spec, "cap", 2.0) * get_or<double>(spec, "sigma", 1.0);
        return sign_aligned_residual_censor(to_vector(truth["theta"]), cap);
    }
    throw ConfigError("adversary: unknown kind '" + kind + "'");
}

}  // namespace harness_detail

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOutput {
    std::string csv;
    json meta;
};

inline SimulateOutput run_simulate(const json& cfg) {
    using namespace harness_detail;
    require_schema(cfg);
    if (!cfg.contains("simulate")) throw ConfigError("config: missing 'simulate' section");
    const json& sim = cfg["simulate"];
    const std::string task = require<std::string>(sim, "task", "simulate");
    const auto n = require<std::int64_t>(sim, "n", "simulate");
    const auto seed = require<std::uint64_t>(sim, "seed", "simulate");
    const double epsilon = get_or<double>(sim, "epsilon", 0.0);
    const double q = get_or<double>(sim, "q", 1.0);
    const ContaminationParams params(epsilon, q);

    SimulateOutput out;
    out.meta = {{"schema_version", kSchemaVersion},
                {"task", task},
                {"n", n},
                {"seed", seed},
                {"epsilon", epsilon},
                {"q", q}};
    json truth;

    std::vector<MaskedSample> data;
    bool regression = false;
    if (task == "mean") {
        const Eigen::VectorXd mu = to_vector(require<json>(sim, "mean", "simulate"));
        const double sigma = get_or<double>(sim, "sigma", 1.0);
        truth["theta"] = from_vector(mu);
        truth["sigma"] = sigma;
        const auto adv = build_adversary(get_or<json>(sim, "adversary", json::object()), truth);
        data = generate_all_or_nothing(gaussian_sampler(mu, sigma), params, adv, n, seed);
    } else if (task == "cov") {
        const Eigen::MatrixXd sigma_star = to_matrix(require<json>(sim, "cov", "simulate"));
        truth["cov"] = from_matrix(sigma_star);
        const Eigen::MatrixXd root = sym_sqrt(sigma_star);
        const auto sampler = [root](Rng& rng) {
            Eigen::VectorXd z(root.rows());
            for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = sample_normal(rng);
            return Eigen::VectorXd(root * z);
        };
        const auto adv = build_adversary(get_or<json>(sim, "adversary", json::object()), truth);
        data = generate_all_or_nothing(sampler, params, adv, n, seed);
    } else if (task == "reg") {
        regression = true;
        const Eigen::VectorXd theta = to_vector(require<json>(sim, "theta", "simulate"));
        const double sigma = get_or<double>(sim, "sigma", 1.0);
        truth["theta"] = from_vector(theta);
        truth["sigma"] = sigma;
        json adv_spec = get_or<json>(sim, "adversary", json::object());
        adv_spec["sigma"] = sigma;
        const auto adv = build_adversary(adv_spec, truth);
        data = generate_all_or_nothing(regression_sampler(theta, sigma), params, adv, n, seed);
    } else if (task == "mean-hard") {
        const double gamma = require<double>(sim, "gamma", "simulate");
        const int d = require<int>(sim, "d", "simulate");
        const auto inst = build_mean_hard_instance(gamma, params);
        Eigen::VectorXd v = sim.contains("direction") ? to_vector(sim["direction"])
                                                      : Eigen::VectorXd::Unit(d, 0);
        v.normalize();
        truth["theta"] = from_vector(Eigen::VectorXd(gamma * v));
        truth["sigma"] = 1.0;
        out.meta["instance"] = {{"gamma", gamma}, {"R", inst.R}, {"beta", inst.beta},
                                {"b", inst.b}};
        data = sample_mean_hard(inst, v, n, seed);
    } else if (task == "cov-hard") {
        const double gamma = require<double>(sim, "gamma", "simulate");
        const int d = require<int>(sim, "d", "simulate");
        const auto inst = build_cov_hard_instance(gamma, params);
        Eigen::VectorXd v = sim.contains("direction") ? to_vector(sim["direction"])
                                                      : Eigen::VectorXd::Unit(d, 0);
        v.normalize();
        Eigen::MatrixXd sigma_star =
            Eigen::MatrixXd::Identity(d, d) + gamma * v * v.transpose();
        truth["cov"] = from_matrix(sigma_star);
        out.meta["instance"] = {{"gamma", gamma}, {"R", inst.R}, {"beta", inst.beta},
                                {"b", inst.b}};
        data = sample_cov_hard(inst, v, n, seed);
    } else if (task == "reg-hard") {
        regression = true;
        const double gamma = require<double>(sim, "gamma", "simulate");
        const double r = require<double>(sim, "r", "simulate");
        const int d = require<int>(sim, "d", "simulate");
        const auto inst = build_reg_hard_instance(gamma, r, params);
        Eigen::VectorXd v = sim.contains("direction") ? to_vector(sim["direction"])
                                                      : Eigen::VectorXd::Unit(d, 0);
        v.normalize();
        truth["theta"] = from_vector(Eigen::VectorXd(gamma * v));
        truth["sigma"] = 1.0;
        out.meta["instance"] = {{"gamma", gamma}, {"r", r}, {"R", inst.R}, {"b", inst.b}};
        data = sample_reg_hard(inst, v, n, seed);
    } else if (task == "multipattern-mean") {
        const Eigen::VectorXd mu = to_vector(require<json>(sim, "mean", "simulate"));
        const double sigma = get_or<double>(sim, "sigma", 1.0);
        truth["theta"] = from_vector(mu);
        truth["sigma"] = sigma;
        std::vector<std::vector<int>> pats;
        for (const auto& p : require<json>(sim, "patterns", "simulate"))
            pats.push_back(p.get<std::vector<int>>());
        const auto weights = require<std::vector<double>>(sim, "pattern_weights", "simulate");
        const auto ps = PatternSet::make(pats, weights);
        out.meta["patterns"] = sim["patterns"];
        out.meta["pattern_weights"] = sim["pattern_weights"];
        const int coord = get_or<int>(sim, "pattern_adversary_coordinate", 0);
        const auto adv = [coord, &ps](const Eigen::VectorXd& x) {
            return x[coord] > 0.0 ? 0u : static_cast<unsigned>(ps.size() - 1);
        };
        data = generate_multipattern(gaussian_sampler(mu, sigma), params, ps, adv, n, seed);
    } else {
        throw ConfigError("simulate: unknown task '" + task + "'");
    }

    if (sim.contains("adversary")) out.meta["adversary"] = sim["adversary"];
    out.meta["truth"] = truth;
    out.meta["d"] = data.front().dim() - (regression ? 1 : 0);
    out.csv = dataset_to_csv(data, regression);
    return out;
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

inline json run_estimate(const json& cfg, const std::vector<MaskedSample>& data,
                         const json& meta) {
    using namespace harness_detail;
    require_schema(cfg);
    if (!cfg.contains("estimate")) throw ConfigError("config: missing 'estimate' section");
    const json& est = cfg["estimate"];
    const std::string task = require<std::string>(est, "task", "estimate");
    const std::string method = require<std::string>(est, "method", "estimate");
    const double epsilon = get_or<double>(est, "epsilon", get_or<double>(meta, "epsilon", 0.0));
    const double q = get_or<double>(est, "q", get_or<double>(meta, "q", 1.0));
    const double delta = get_or<double>(est, "delta", 0.1);
    const double sigma = get_or<double>(est, "sigma", 1.0);
    const ContaminationParams params(epsilon, q);

    static const std::vector<std::pair<std::string, std::string>> methods = {
        {"kolmogorov", "mean"},      {"net-mean", "mean"},
        {"moment-mean", "mean"},     {"cov-two-step", "cov"},
        {"polyreg", "reg"},          {"multipattern-mean", "mean"},
        {"multipattern-cov", "cov"},
    };
    bool known = false;
    for (const auto& [m, t] : methods) {
        if (m != method) continue;
        known = true;
        if (t != task)
            throw ConfigError("estimate: method '" + method + "' does not apply to task '" +
                              task + "'");
    }
    if (!known) throw ConfigError("estimate: unknown method '" + method + "'");

    const auto t0 = std::chrono::steady_clock::now();
    json report = {{"schema_version", kSchemaVersion}, {"task", task}, {"method", method}};
    json diag;

    const bool reg = task == "reg";
    const int d = data.front().dim() - (reg ? 1 : 0);
    const ConfidenceParams conf{static_cast<std::int64_t>(data.size()), d, delta};

    if (method == "kolmogorov") {
        if (d != 1) throw ConfigError("estimate: kolmogorov method needs a 1-d dataset");
        const auto xs = extract_coordinate(data, 0);
        const auto res = auto_mean_estimator(xs, sigma, params, conf);
        report["estimate"] = {{"theta", json::array({res.theta})}};
        diag["conditional_branch"] = res.used_conditional;
    } else if (method == "net-mean") {
        const SphereNet net = make_net(d, get_or<double>(est, "net_radius", 0.5),
                                       get_or<std::uint64_t>(est, "net_seed", 1234));
        const auto res = estimate_mean_net(data, sigma, params, conf, net);
        report["estimate"] = {{"theta", from_vector(res.theta)}};
        diag["objective"] = res.objective;
        diag["net_size"] = net.size();
        diag["iterations"] = res.iterations;
        diag["dir_estimates"] = res.dir_estimates;
        int conditional = 0;
        for (const auto c : res.dir_conditional) conditional += c;
        diag["conditional_directions"] = conditional;
    } else if (method == "moment-mean") {
        const SphereNet net = make_net(d, get_or<double>(est, "net_radius", 0.3),
                                       get_or<std::uint64_t>(est, "net_seed", 1234));
        const int k = get_or<int>(est, "k", 2);
        const auto res = moment_feasible_mean(data, k, params, net);
        report["estimate"] = {{"theta", from_vector(res.theta)}};
        diag["objective"] = res.objective;
        diag["level"] = res.level;
        diag["feasible"] = res.feasible;
        diag["k"] = k;
        diag["k_above_theory"] = res.k_above_theory;
    } else if (method == "cov-two-step") {
        CovTwoStepConfig tcfg;
        tcfg.net_seed = get_or<std::uint64_t>(est, "net_seed", 1234);
        if (est.contains("net_radius")) tcfg.net_radius = est["net_radius"].get<double>();
        const auto res = estimate_cov_two_step(data, params, conf, tcfg);
        report["estimate"] = {{"cov", from_matrix(res.sigma)}};
        diag["gamma"] = res.gamma;
        diag["residual"] = res.residual;
        diag["net_size"] = res.net_size;
        diag["dir_variances"] = res.dir_variances;
    } else if (method == "polyreg") {
        const RegressionData rd = RegressionData::from_masked(data);
        int k = get_or<int>(est, "k", 0);
        if (k <= 0) k = choose_k(conf, params, get_or<double>(est, "k_select_c", 0.1));
        const auto res = fit(rd, k);
        report["estimate"] = {{"theta", from_vector(res.theta)}};
        diag["k"] = k;
        diag["grad_norm"] = res.grad_norm;
        diag["hess_min_eig"] = res.hess_min_eig;
        diag["converged"] = res.converged;
        diag["iterations"] = res.iterations;
    } else if (method == "multipattern-mean" || method == "multipattern-cov") {
        const json& pats_json =
            est.contains("patterns") ? est["patterns"] : get_or<json>(meta, "patterns", json());
        const json& w_json = est.contains("pattern_weights")
                                 ? est["pattern_weights"]
                                 : get_or<json>(meta, "pattern_weights", json());
        if (pats_json.is_null() || w_json.is_null())
            throw ConfigError("estimate: multipattern methods need patterns + weights");
        std::vector<std::vector<int>> pats;
        for (const auto& p : pats_json) pats.push_back(p.get<std::vector<int>>());
        const auto ps = PatternSet::make(pats, w_json.get<std::vector<double>>());
        if (method == "multipattern-mean") {
            const auto res = estimate_mean_multipattern(data, ps, sigma, params, conf);
            report["estimate"] = {{"theta", from_vector(res.theta)}};
            diag["diameter_bound"] = res.diameter_bound;
            diag["residual"] = res.residual;
            diag["radii"] = res.radii;
        } else {
            const auto res = estimate_cov_multipattern(data, ps, params, conf);
            report["estimate"] = {{"cov", from_matrix(res.sigma)}};
            diag["diameter_bound"] = res.diameter_bound;
            diag["clip_shift"] = res.clip_shift;
            diag["radii"] = res.radii;
        }
    }

    const auto t1 = std::chrono::steady_clock::now();
    report["wall_ms"] = std::chrono::duration<double, std::milli>(t1 - t0).count();
    report["diagnostics"] = diag;

    // loss against the sidecar truth when present
    if (meta.contains("truth")) {
        const json& truth = meta["truth"];
        if (report["estimate"].contains("theta") && truth.contains("theta")) {
            const Eigen::VectorXd th = to_vector(report["estimate"]["theta"]);
            const Eigen::VectorXd ts = to_vector(truth["theta"]);
            if (th.size() == ts.size()) report["loss"] = (th - ts).norm();
        } else if (report["estimate"].contains("cov") && truth.contains("cov")) {
            report["loss"] = relative_op_error(to_matrix(report["estimate"]["cov"]),
                                               to_matrix(truth["cov"]));
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchCell {
    std::string method;
    std::int64_t n = 0;
    double epsilon = 0.0;
    int k = 0;  // regression power; 0 elsewhere
};

// Monte-Carlo rate table. Work is distributed over a shared task queue; each
// trial's seed is derived from (seed, cell, trial), so the table is invariant
// to the thread count.
inline std::string run_bench(const json& cfg) {
    using namespace harness_detail;
    require_schema(cfg);
    if (!cfg.contains("bench")) throw ConfigError("config: missing 'bench' section");
    const json& bench = cfg["bench"];
    const std::string task = require<std::string>(bench, "task", "bench");
    if (task != "mean" && task != "reg") throw ConfigError("bench: task must be mean or reg");
    const auto methods = require<std::vector<std::string>>(bench, "methods", "bench");
    const auto n_list = require<std::vector<std::int64_t>>(bench, "n_list", "bench");
    const auto eps_list = require<std::vector<double>>(bench, "epsilon_list", "bench");
    const auto k_list = get_or<std::vector<int>>(bench, "k_list", {0});
    const auto trials = require<int>(bench, "trials", "bench");
    const auto seed = require<std::uint64_t>(bench, "seed", "bench");
    const int d = get_or<int>(bench, "d", 2);
    const double sigma = get_or<double>(bench, "sigma", 1.0);
    int threads = get_or<int>(bench, "threads", 0);
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    const json adv_spec = get_or<json>(bench, "adversary", json::object());

    std::vector<BenchCell> cells;
    for (const auto& m : methods)
        for (const auto n : n_list)
            for (const auto eps : eps_list)
                for (const auto k : (task == "reg" ? k_list : std::vector<int>{0}))
                    cells.push_back({m, n, eps, k});

    std::vector<std::vector<double>> losses(cells.size(),
                                            std::vector<double>(static_cast<std::size_t>(trials),
                                                                std::nan("")));
    std::vector<std::atomic<int>> failures(cells.size());
    for (auto& f : failures) f = 0;

    Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
    if (bench.contains("mean")) mu = to_vector(bench["mean"]);
    Eigen::VectorXd theta_star = Eigen::VectorXd::Zero(d);
    if (bench.contains("theta")) theta_star = to_vector(bench["theta"]);
    if (task == "reg" && !bench.contains("theta")) theta_star = Eigen::VectorXd::Ones(d);

    const auto run_trial = [&](std::size_t ci, int trial) {
        const BenchCell& cell = cells[ci];
        const std::uint64_t trial_seed =
            Rng(seed).derive("bench").derive(ci).derive(static_cast<std::uint64_t>(trial))
                .next_u64();
        const ContaminationParams params(cell.epsilon, 1.0);
        const ConfidenceParams conf{cell.n, d, get_or<double>(bench, "delta", 0.1)};
        if (task == "mean") {
            json truth;
            truth["theta"] = from_vector(mu);
            const auto adv = build_adversary(adv_spec, truth);
            const auto data = generate_all_or_nothing(gaussian_sampler(mu, sigma), params, adv,
                                                      cell.n, trial_seed);
            Eigen::VectorXd est;
            if (cell.method == "net-mean") {
                const SphereNet net =
                    make_net(d, get_or<double>(bench, "net_radius", 0.5), seed ^ 0x9e37);
                est = estimate_mean_net(data, sigma, params, conf, net).theta;
            } else if (cell.method == "moment-mean") {
                const SphereNet net =
                    make_net(d, get_or<double>(bench, "net_radius", 0.5), seed ^ 0x9e37);
                est = moment_feasible_mean(data, get_or<int>(bench, "moment_k", 2), params, net)
                          .theta;
            } else {
                throw ConfigError("bench: unknown mean method '" + cell.method + "'");
            }
            losses[ci][static_cast<std::size_t>(trial)] = (est - mu).norm();
        } else {
            json truth;
            truth["theta"] = from_vector(theta_star);
            json spec = adv_spec;
            spec["sigma"] = sigma;
            const auto adv = build_adversary(spec, truth);
            const auto data = generate_all_or_nothing(regression_sampler(theta_star, sigma),
                                                      params, adv, cell.n, trial_seed);
            const RegressionData rd = RegressionData::from_masked(data);
            int k = cell.k;
            if (k <= 0) k = choose_k(conf, params, get_or<double>(bench, "k_select_c", 0.1));
            if (cell.method != "polyreg")
                throw ConfigError("bench: unknown reg method '" + cell.method + "'");
            losses[ci][static_cast<std::size_t>(trial)] = (fit(rd, k).theta - theta_star).norm();
        }
    };

    std::atomic<std::size_t> next{0};
    const std::size_t total = cells.size() * static_cast<std::size_t>(trials);
    const auto worker = [&] {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= total) return;
            const std::size_t ci = t / static_cast<std::size_t>(trials);
            const int trial = static_cast<int>(t % static_cast<std::size_t>(trials));
            try {
                run_trial(ci, trial);
            } catch (const Error&) {
                ++failures[ci];
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    // order-independent aggregation: sort the collected losses per cell
    std::ostringstream out;
    out << "method,task,n,epsilon,k,trials,failures,median,q25,q75\n";
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        std::vector<double> vals;
        for (const double v : losses[ci])
            if (!std::isnan(v)) vals.push_back(v);
        std::sort(vals.begin(), vals.end());
        const auto quantile = [&](double p) {
            if (vals.empty()) return std::nan("");
            const double idx = p * static_cast<double>(vals.size() - 1);
            const auto lo = static_cast<std::size_t>(idx);
            const std::size_t hi = std::min(lo + 1, vals.size() - 1);
            return vals[lo] + (idx - static_cast<double>(lo)) * (vals[hi] - vals[lo]);
        };
        const auto& c = cells[ci];
        out << c.method << "," << task << "," << c.n << "," << format_double(c.epsilon) << ","
            << c.k << "," << trials << "," << failures[ci].load() << ",";
        if (vals.empty())
            out << "NA,NA,NA\n";
        else
            out << format_double(quantile(0.5)) << "," << format_double(quantile(0.25)) << ","
                << format_double(quantile(0.75)) << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

// Runs the hard-instance membership checks and density normalizations over a
// grid of contamination levels.
inline json run_verify(const json& cfg) {
    using namespace harness_detail;
    std::vector<double> tau_list{0.25, 1.0, 4.0};
    int grid_points = 4000;
    double tol = 1e-9;
    if (!cfg.is_null() && cfg.contains("verify")) {
        const json& v = cfg["verify"];
        tau_list = get_or<std::vector<double>>(v, "tau_list", tau_list);
        grid_points = get_or<int>(v, "grid_points", grid_points);
        tol = get_or<double>(v, "tol", tol);
    }

    json rows = json::array();
    bool all_ok = true;
    for (const double tau : tau_list) {
        const double eps = tau / (1.0 + tau);
        const ContaminationParams p(eps, 1.0);
        const double tp = std::log1p(tau);

        const auto grid = [&](double R) {
            std::vector<double> g;
            for (int i = 0; i <= grid_points; ++i)
                g.push_back(-R - 8.0 + (2.0 * (R + 8.0)) * i / grid_points);
            return g;
        };

        {
            const double gamma = 0.8 * std::sqrt(tp / 16.0);
            const auto inst = build_mean_hard_instance(gamma, p);
            const auto rep = verify_membership(
                [&](double x) { return inst.ratio_to_shifted(x); }, inst.b, p, grid(inst.R), tol);
            const double mass = integrate_piecewise(
                [&](double x) { return inst.density(x); }, -inst.R - 14.0, inst.R + 14.0,
                {-inst.R, inst.R});
            rows.push_back({{"instance", "mean"}, {"tau", tau}, {"gamma", gamma},
                            {"worst_violation", rep.worst_violation},
                            {"mass_error", std::abs(mass - 1.0)},
                            {"ok", rep.ok && std::abs(mass - 1.0) <= 1e-8}});
            all_ok = all_ok && rows.back()["ok"].get<bool>();
        }
        {
            const double gamma = 0.5 * std::min(tau, 1.0);
            const auto inst = build_cov_hard_instance(gamma, p);
            const auto rep = verify_membership(
                [&](double x) { return inst.ratio_to_inflated(x); }, inst.b, p, grid(inst.R),
                tol);
            const double mass = integrate_piecewise(
                [&](double x) { return inst.density(x); }, -inst.R - 14.0, inst.R + 14.0,
                {-inst.R, inst.R});
            rows.push_back({{"instance", "cov"}, {"tau", tau}, {"gamma", gamma},
                            {"worst_violation", rep.worst_violation},
                            {"mass_error", std::abs(mass - 1.0)},
                            {"ok", rep.ok && std::abs(mass - 1.0) <= 1e-8}});
            all_ok = all_ok && rows.back()["ok"].get<bool>();
        }
        {
            const double gamma = 0.8 * std::sqrt(0.5 * tp);
            const auto inst = build_reg_hard_instance(gamma, 1.0, p);
            double worst = 0.0;
            for (const double vx : {0.0, 0.5, -0.9, 1.0, -1.5, 3.0}) {
                const auto rep = verify_membership(
                    [&](double y) { return inst.ratio_to_model(vx, y); }, inst.b, p,
                    grid(inst.R), tol);
                worst = std::max(worst, rep.worst_violation);
            }
            rows.push_back({{"instance", "reg"}, {"tau", tau}, {"gamma", gamma},
                            {"worst_violation", worst}, {"ok", worst <= tol}});
            all_ok = all_ok && rows.back()["ok"].get<bool>();
        }
    }
    return {{"schema_version", kSchemaVersion}, {"ok", all_ok}, {"checks", rows}};
}

}  // namespace misrob
