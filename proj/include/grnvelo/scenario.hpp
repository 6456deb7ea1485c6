#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "grnvelo/control.hpp"
#include "grnvelo/model.hpp"

namespace grnvelo {

// Process exit codes of the command-line runner.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int usage = 2;
inline constexpr int invariant = 3;
inline constexpr int no_convergence = 4;
inline constexpr int unreachable = 5;
inline constexpr int divergence = 6;
inline constexpr int syntax = 7;
inline constexpr int schema = 8;
}  // namespace exit_code

class ConfigError : public std::runtime_error {
public:
    ConfigError(int code, std::string path, const std::string& message)
        : std::runtime_error(path.empty() ? message : path + ": " + message),
          code_(code),
          path_(std::move(path)) {}

    int code() const noexcept { return code_; }
    const std::string& path() const noexcept { return path_; }

private:
    int code_;
    std::string path_;
};

using Rows = std::vector<std::vector<double>>;

struct RatesConfig {
    Vector alpha, beta, gamma;
    friend bool operator==(const RatesConfig&, const RatesConfig&) = default;
};

struct CellsConfig {
    Rows adjacency;
    double coupling = 0.0;
    std::vector<RatesConfig> rates;  // one per cell after normalization
    std::optional<int> regular_degree;
    friend bool operator==(const CellsConfig&, const CellsConfig&) = default;
};

struct ModelConfig {
    double kappa = 1.0;
    Rows w_plus;
    Rows w_minus;
    RatesConfig rates;
    std::optional<CellsConfig> cells;
    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct StateConfig {
    Vector u, s;
    friend bool operator==(const StateConfig&, const StateConfig&) = default;
};

struct InitialConfig {
    // A single entry applies to every cell; otherwise one entry per cell.
    std::vector<StateConfig> states;
    bool per_cell = false;
    friend bool operator==(const InitialConfig&, const InitialConfig&) = default;
};

struct InterventionConfig {
    double time = 0.0;
    std::optional<std::size_t> cell;
    std::size_t gene = 0;
    std::string parameter = "alpha";
    double value = 0.0;
    friend bool operator==(const InterventionConfig&, const InterventionConfig&) = default;
};

struct SimulateConfig {
    double horizon = 0.0;
    double dt = 1e-3;
    std::vector<InterventionConfig> interventions;
    std::size_t output_stride = 1;
    friend bool operator==(const SimulateConfig&, const SimulateConfig&) = default;
};

struct EquilibriumConfig {
    double tolerance = 1e-12;
    std::size_t max_iterations = 100000;
    friend bool operator==(const EquilibriumConfig&, const EquilibriumConfig&) = default;
};

struct StabilityConfig {
    std::string mode = "auto";  // auto | linear | lyapunov
    double horizon = 0.0;       // > 0: also integrate from the initial state and track V
    double dt = 1e-3;
    std::size_t output_stride = 1;
    friend bool operator==(const StabilityConfig&, const StabilityConfig&) = default;
};

struct ConsensusConfig {
    double horizon = 0.0;
    double dt = 1e-3;
    std::size_t output_stride = 1;
    friend bool operator==(const ConsensusConfig&, const ConsensusConfig&) = default;
};

struct TargetConfig {
    std::size_t gene = 0;
    std::size_t cell = 0;
    double value = 0.0;
    friend bool operator==(const TargetConfig&, const TargetConfig&) = default;
};

struct ControlConfig {
    std::size_t gene = 0;
    double lower = 0.0;
    double upper = 1.0;
    std::vector<TargetConfig> targets;
    std::optional<std::vector<bool>> delta;
    std::optional<double> delta_probability;
    std::string mode = "min_time";  // min_time | fixed_time
    double horizon = 0.0;           // fixed_time only
    FbsmConfig fbsm;
    std::size_t output_stride = 1;
    friend bool operator==(const ControlConfig&, const ControlConfig&) = default;
};

struct ReachabilityConfig {
    std::size_t gene = 0;
    int max_order = 4;
    double step = 1e-5;
    std::size_t csp_samples = 200;
    std::optional<StateConfig> state;
    friend bool operator==(const ReachabilityConfig&, const ReachabilityConfig&) = default;
};

struct ScenarioConfig {
    std::string kind;
    std::uint64_t seed = 0;
    std::optional<std::string> output_dir;
    ModelConfig model;
    std::optional<InitialConfig> initial;
    std::optional<SimulateConfig> simulate;
    std::optional<EquilibriumConfig> equilibrium;
    std::optional<StabilityConfig> stability;
    std::optional<ConsensusConfig> consensus;
    std::optional<ControlConfig> control;
    std::optional<ReachabilityConfig> reachability;
    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

ScenarioConfig parse_config(const std::filesystem::path& path);
ScenarioConfig parse_config_text(const std::string& text);
// Normalized JSON text (all defaults explicit); parse_config_text(dump_config(c)) == c.
std::string dump_config(const ScenarioConfig& config);

// Replace the step size in every block that has one.
void override_dt(ScenarioConfig& config, double dt);

struct RunResult {
    int exit_code = exit_code::ok;
    std::string message;
    std::vector<std::filesystem::path> files;
};

// Writes outputs into out_dir (created if needed). Solver failures are reported through the
// exit code and an error.json file rather than exceptions.
RunResult run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_dir);

// Model objects built from a validated config.
GrnTopology build_topology(const ModelConfig& model);
MultiCellSystem build_system(const ModelConfig& model);

}  // namespace grnvelo
