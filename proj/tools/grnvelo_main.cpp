#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "grnvelo/scenario.hpp"

namespace fs = std::filesystem;
using namespace grnvelo;

namespace {

struct Job {
    fs::path config_path;
    std::optional<ScenarioConfig> config;
    fs::path out_dir;
    int code = 0;
    std::string message;
};

fs::path resolve_out(const ScenarioConfig& cfg, const fs::path& config_path,
                     const std::string& cli_out, bool many) {
    const std::string stem = config_path.stem().string();
    if (!cli_out.empty()) return many ? fs::path(cli_out) / stem : fs::path(cli_out);
    if (cfg.output_dir) return *cfg.output_dir;
    if (const char* env = std::getenv("GRNVELO_OUT_DIR"); env && *env) return fs::path(env) / stem;
    return fs::path("grnvelo_out") / stem;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"grnvelo: GRN-driven RNA velocity analyses from JSON scenario files"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run one or more scenario configs");
    std::vector<std::string> configs;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<double> dt;
    bool dump = false;
    unsigned jobs = 1;
    run->add_option("config", configs, "Scenario config file(s)")->required();
    run->add_option("--out", out,
                    "Output directory (one subdirectory per config when several are given); "
                    "defaults to the config's output_dir, then $GRNVELO_OUT_DIR/<name>, then "
                    "./grnvelo_out/<name>");
    run->add_option("--seed", seed, "Override the config seed");
    run->add_option("--dt", dt,
                    "Override the integration step; intervention times snap to the nearest "
                    "multiple of dt");
    run->add_flag("--dump-config", dump, "Print the normalized config and exit");
    run->add_option("--jobs", jobs, "Configs to run concurrently")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_code::usage;
    }

    std::vector<Job> work(configs.size());
    int worst = 0;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        Job& job = work[i];
        job.config_path = configs[i];
        try {
            ScenarioConfig cfg = parse_config(job.config_path);
            if (seed) cfg.seed = *seed;
            if (dt) override_dt(cfg, *dt);
            job.out_dir = resolve_out(cfg, job.config_path, out, configs.size() > 1);
            job.config = std::move(cfg);
        } catch (const ConfigError& e) {
            job.code = e.code();
            job.message = e.what();
        }
    }

    if (dump) {
        for (const auto& job : work) {
            if (job.config) std::cout << dump_config(*job.config);
            else std::cerr << job.config_path.string() << ": " << job.message << "\n";
            worst = std::max(worst, job.code);
        }
        return worst;
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < work.size(); i = next++) {
            Job& job = work[i];
            if (!job.config) continue;
            try {
                const RunResult r = run_scenario(*job.config, job.out_dir);
                job.code = r.exit_code;
                job.message = r.message;
            } catch (const std::exception& e) {
                job.code = exit_code::usage;
                job.message = e.what();
            }
        }
    };
    const unsigned n_threads = std::max(1u, std::min<unsigned>(jobs, work.size()));
    std::vector<std::thread> threads;
    for (unsigned t = 1; t < n_threads; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();

    for (const auto& job : work) {
        if (job.code == 0) {
            std::cout << "ok " << job.config_path.string() << " -> " << job.out_dir.string() << "\n";
        } else {
            std::cerr << "error (exit " << job.code << ") " << job.config_path.string() << ": "
                      << job.message << "\n";
        }
        worst = std::max(worst, job.code);
    }
    return worst;
}
