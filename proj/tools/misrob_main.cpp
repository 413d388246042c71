// Command-line harness: dataset simulation, estimation, Monte-Carlo rate
// tables, and model self-checks. All behavior is driven by a single JSON
// config file; no environment variable affects results.

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "misrob/misrob.hpp"

namespace {

using misrob::json;

json load_config(const std::string& path) {
    try {
        return json::parse(misrob::read_text_file(path));
    } catch (const misrob::Error&) {
        throw;
    } catch (const std::exception& e) {
        throw misrob::ConfigError(std::string("config parse error: ") + e.what());
    }
}

int cmd_simulate(const std::string& config_path) {
    const json cfg = load_config(config_path);
    const auto out = misrob::run_simulate(cfg);
    const std::string path =
        misrob::harness_detail::require<std::string>(cfg["simulate"], "out", "simulate");
    misrob::write_text_file(path, out.csv);
    misrob::write_text_file(path + ".meta.json", out.meta.dump(2) + "\n");
    std::cout << "wrote " << path << " and sidecar\n";
    return 0;
}

int cmd_estimate(const std::string& config_path) {
    const json cfg = load_config(config_path);
    if (!cfg.contains("estimate")) throw misrob::ConfigError("config: missing 'estimate'");
    const std::string dataset =
        misrob::harness_detail::require<std::string>(cfg["estimate"], "dataset", "estimate");
    const auto data = misrob::dataset_from_csv(misrob::read_text_file(dataset));
    json meta;
    if (misrob::file_exists(dataset + ".meta.json"))
        meta = json::parse(misrob::read_text_file(dataset + ".meta.json"));
    const json report = misrob::run_estimate(cfg, data, meta);
    if (cfg["estimate"].contains("out"))
        misrob::write_text_file(cfg["estimate"]["out"].get<std::string>(),
                                report.dump(2) + "\n");
    else
        std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_bench(const std::string& config_path) {
    const json cfg = load_config(config_path);
    const std::string table = misrob::run_bench(cfg);
    if (cfg.contains("bench") && cfg["bench"].contains("out"))
        misrob::write_text_file(cfg["bench"]["out"].get<std::string>(), table);
    else
        std::cout << table;
    return 0;
}

int cmd_verify(const std::string& config_path) {
    const json cfg = config_path.empty() ? json() : load_config(config_path);
    const json report = misrob::run_verify(cfg);
    std::cout << report.dump(2) << "\n";
    return report["ok"].get<bool>() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"robust estimation under adversarially missing data"};
    app.require_subcommand(1);

    std::string config_path;
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "log progress to stderr");

    auto* simulate = app.add_subcommand("simulate", "generate a dataset from a config");
    simulate->add_option("-c,--config", config_path, "JSON config file")->required();
    auto* estimate = app.add_subcommand("estimate", "run an estimator on a dataset");
    estimate->add_option("-c,--config", config_path, "JSON config file")->required();
    auto* bench = app.add_subcommand("bench", "Monte-Carlo rate table over a parameter grid");
    bench->add_option("-c,--config", config_path, "JSON config file")->required();
    auto* verify = app.add_subcommand("verify", "hard-instance membership self-checks");
    verify->add_option("-c,--config", config_path, "JSON config file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) return cmd_simulate(config_path);
        if (estimate->parsed()) return cmd_estimate(config_path);
        if (bench->parsed()) return cmd_bench(config_path);
        return cmd_verify(config_path);
    } catch (const misrob::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const misrob::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
