// coboost: one-shot federated learning simulator with co-boosted data-free
// distillation. Subcommands: run, sweep, report.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "coboost/fl/orchestrator.hpp"
#include "coboost/io/metrics.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace coboost;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void print_result(const RunResult& r) {
    std::cout << r.run_id << ": server_acc=" << r.final_server_acc
              << " ensemble_acc=" << r.final_ensemble_acc << " wall_clock=" << r.wall_clock_sec
              << "s\n";
}

// Rebuild report series from run directories (summary.json + metrics.jsonl).
std::vector<RunSeries> collect_series(const std::string& dir, std::vector<std::string>& methods) {
    std::vector<RunSeries> series;
    std::vector<fs::path> run_dirs;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory() && fs::exists(e.path() / "summary.json")) run_dirs.push_back(e.path());
    std::sort(run_dirs.begin(), run_dirs.end());
    for (const auto& p : run_dirs) {
        RunSeries s;
        {
            std::ifstream in(p / "summary.json");
            nlohmann::json j = nlohmann::json::parse(in);
            s.run_id = j.at("run_id").get<std::string>();
            s.method = j.at("method").get<std::string>();
            s.seed = j.at("seed").get<uint64_t>();
            s.final_server_acc = j.at("final_server_acc").get<double>();
            s.final_ensemble_acc = j.at("final_ensemble_acc").get<double>();
        }
        if (fs::exists(p / "metrics.jsonl")) {
            for (const auto& r : read_metrics((p / "metrics.jsonl").string())) {
                if (r.name == "server_test_acc") s.server_curve.push_back({r.epoch, r.value.scalar});
                if (r.name == "ensemble_test_acc")
                    s.ensemble_curve.push_back({r.epoch, r.value.scalar});
            }
        }
        if (std::find(methods.begin(), methods.end(), s.method) == methods.end())
            methods.push_back(s.method);
        series.push_back(std::move(s));
    }
    return series;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"one-shot federated learning simulator"};
    app.require_subcommand(1);

    std::string config_path, report_dir;
    std::vector<std::string> overrides;
    int64_t seed_flag = -1;
    std::string method_flag;

    auto* run_cmd = app.add_subcommand("run", "run one experiment config");
    run_cmd->add_option("--config", config_path, "config JSON file")->required();
    run_cmd->add_option("--seed", seed_flag, "run a single seed instead of the config's list");
    run_cmd->add_option("--method", method_flag,
                        "override method (co_boosting|fedavg|fedens|plain_distill)");
    run_cmd->add_option("--override", overrides, "key.path=value config overrides")
        ->take_all();

    auto* sweep_cmd = app.add_subcommand("sweep", "run all methods listed in the config");
    sweep_cmd->add_option("--config", config_path, "config JSON file")->required();
    sweep_cmd->add_option("--override", overrides, "key.path=value config overrides")->take_all();

    auto* report_cmd = app.add_subcommand("report", "aggregate finished run directories");
    report_cmd->add_option("--dir", report_dir, "directory holding run subdirectories")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            std::string text = read_file(config_path);
            for (const auto& o : overrides) apply_override(text, o);
            ExperimentConfig cfg = config_from_json_text(text);
            if (!method_flag.empty()) cfg.method = method_from_string(method_flag);
            std::vector<uint64_t> seeds =
                seed_flag >= 0 ? std::vector<uint64_t>{static_cast<uint64_t>(seed_flag)} : cfg.seeds;
            for (uint64_t seed : seeds) print_result(run_method(cfg, seed));
        } else if (sweep_cmd->parsed()) {
            std::string text = read_file(config_path);
            for (const auto& o : overrides) apply_override(text, o);
            ExperimentConfig base = config_from_json_text(text);
            // a "methods" array in the config expands into one config per method
            nlohmann::json j = nlohmann::json::parse(text);
            std::vector<ExperimentConfig> configs;
            if (j.contains("methods")) {
                for (const auto& m : j["methods"]) {
                    ExperimentConfig c = base;
                    c.method = method_from_string(m.get<std::string>());
                    configs.push_back(std::move(c));
                }
            } else {
                configs.push_back(base);
            }
            SweepOutcome outcome = sweep(configs);
            std::cout << outcome.table;
            for (const auto& f : outcome.failures) std::cerr << "FAILED " << f << "\n";
            if (!outcome.failures.empty()) return 2;
        } else if (report_cmd->parsed()) {
            std::vector<std::string> methods;
            auto series = collect_series(report_dir, methods);
            if (series.empty()) {
                std::cerr << "no finished runs under " << report_dir << "\n";
                return 1;
            }
            std::cout << write_report(series, methods, report_dir);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
