#pragma once

#include "rdoe/design.hpp"
#include "rdoe/evaluation.hpp"
#include "rdoe/protocols.hpp"
#include "rdoe/scenarios.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rdoe {

inline constexpr int kConfigSchema = 1;

/// What cmd_design computes.
enum class DesignStrategy { nominal, sequential, minmax, scenario, two_stage, multi_stage };

std::string_view to_string(DesignStrategy strategy);
DesignStrategy design_strategy_from_string(std::string_view name);

/// Fully resolved run configuration shared by every subcommand.
struct RunConfig {
    std::string preset;  ///< informational; empty when built from scratch
    std::string model = "case1";
    ParameterBox box;
    Vector sigma;
    int n_total = 2;
    int n_e = 1;
    /// Cumulative robust-stage allocations of a multi-stage tree; empty means {N_e}.
    std::vector<int> allocations;
    Vector p_hat;  ///< empty: midpoint of the box
    ScenarioMode scenario_mode = ScenarioMode::full_factorial_3;
    std::optional<std::vector<double>> scenario_weights;
    /// Explicit realizations replace the sampled ones.
    std::vector<Vector> scenario_realizations;
    DesignStrategy strategy = DesignStrategy::nominal;
    StageAccounting accounting = StageAccounting::stagewise;
    CriterionConfig criterion;
    double alpha = kTwoSigmaAlpha;
    SolverConfig solver;
    SolverConfig estimation_solver;
    TwoStageOptions two_stage;

    // Monte-Carlo comparison
    int n_trials = 100;
    std::uint64_t base_seed = 1;
    EvaluationMode mode = EvaluationMode::revealed_truth;
    std::vector<Strategy> strategies = all_strategies();
    std::vector<Vector> truths;
    DominanceConfig dominance;

    // Interactive protocol
    ProtocolKind protocol = ProtocolKind::sequential;
    int n_step = 0;  ///< 0: N_e
    StopConfig stop;

    int threads = 0;  ///< 0: all hardware threads
    std::string output_dir = "out";

    /// Fills defaults that depend on other fields (scaling, p_hat, allocations).
    void resolve(const ModelSpec& model);
    /// Throws ConfigError when the configuration does not fit the model.
    void validate(const ModelSpec& model) const;

    NoiseModel noise() const { return NoiseModel(sigma); }
    ScenarioSet scenarios() const;
    ScenarioTree tree() const;
    MonteCarloSetup monte_carlo_setup() const;
    ProtocolConfig protocol_config() const;
};

/// Built-in setups: case1 (Delta = 1/2), case1-wide (Delta = 3/4), case2, case3, case4.
RunConfig preset_config(std::string_view name);
std::vector<std::string> preset_names();

/// Parses JSON text; `origin` names the source in diagnostics. Syntax errors
/// carry line and column. A "preset" key selects the base configuration that
/// the remaining keys override. The result is resolved and validated.
RunConfig parse_config(std::string_view text, std::string_view origin = "config");
RunConfig load_config(const std::string& path);

/// Every field, defaults included, as pretty-printed JSON.
std::string config_to_json(const RunConfig& cfg);

}  // namespace rdoe
