#pragma once

#include "rdoe/design.hpp"
#include "rdoe/protocols.hpp"
#include "rdoe/scenarios.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rdoe {

enum class Strategy { nominal, sequential, minmax, scenario, two_stage };

std::string_view to_string(Strategy strategy);
Strategy strategy_from_string(std::string_view name);
/// nominal, sequential, minmax, scenario, two_stage
const std::vector<Strategy>& all_strategies();

enum class EvaluationMode { revealed_truth, noisy };

std::string_view to_string(EvaluationMode mode);
EvaluationMode evaluation_mode_from_string(std::string_view name);

struct CrystalBall {
    Design design;
    double phi_star = 0.0;
};

/// Nominal design at the true parameters. `hints` are extra start designs
/// (typically the applied ones), so phi_star never exceeds their criterion.
CrystalBall crystal_ball(const ModelSpec& model, const Vector& p_true, int n, const NoiseModel& noise,
                         const SolverConfig& solver, const CriterionConfig& criterion,
                         const std::vector<Design>& hints = {});

/// Criterion of the applied design at the true parameters.
double evaluate_design(const ModelSpec& model, const Vector& p_true, const Design& design, const NoiseModel& noise,
                       const CriterionConfig& criterion);

struct TrialRecord {
    int trial_id = 0;
    std::uint64_t seed = 0;
    Vector p_true;
    Strategy strategy = Strategy::nominal;
    Design applied;
    double phi_applied = 0.0;
    double phi_star = 0.0;
    double loss = 0.0;
    bool excluded = false;  ///< some strategy failed in this trial
    std::string error;
};

/// Box-plot summary; quartiles by linear interpolation between order
/// statistics, whiskers at the most extreme points within 1.5 IQR.
struct BoxSummary {
    int count = 0;
    double mean = 0.0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    double whisker_low = 0.0;
    double whisker_high = 0.0;
    std::vector<double> outliers;
};

BoxSummary summarize(std::vector<double> values);

/// Quantile q in [0, 1] of sorted values by linear interpolation.
double interpolated_quantile(const std::vector<double>& sorted, double q);

struct StrategyStats {
    Strategy strategy = Strategy::nominal;
    BoxSummary loss;
    /// Mean loss relative to the nominal strategy's mean loss, in percent;
    /// NaN when nominal is not evaluated.
    double relative_pct = 0.0;
    /// Mean of 100 * loss / phi_star.
    double mean_loss_pct = 0.0;
};

struct DominanceConfig {
    enum class Sampler { grid, scatter };
    bool enabled = true;
    Strategy first = Strategy::sequential;
    Strategy second = Strategy::two_stage;
    Sampler sampler = Sampler::grid;
    int grid_points = 21;  ///< per parameter axis
};

/// Loss difference first - second at one true parameter vector.
struct DominancePoint {
    Vector p_true;
    double first_loss = 0.0;
    double second_loss = 0.0;
    double difference = 0.0;
};

struct MonteCarloSetup {
    ParameterBox box;
    NoiseModel noise;
    int n_total = 0;
    int n_e = 1;
    std::optional<ScenarioSet> scenarios;  ///< sampled from `box` when absent
    ScenarioMode scenario_mode = ScenarioMode::full_factorial_3;
    std::vector<Strategy> strategies = all_strategies();
    int n_trials = 100;
    std::uint64_t base_seed = 1;
    EvaluationMode mode = EvaluationMode::revealed_truth;
    SolverConfig solver;
    SolverConfig estimation_solver;
    CriterionConfig criterion;
    TwoStageOptions two_stage;
    Vector p_hat0;  ///< empty: midpoint of the box
    /// Fixed true parameters per trial instead of uniform sampling.
    std::vector<Vector> truths;
    DominanceConfig dominance;
    int threads = 1;
    double alpha = kTwoSigmaAlpha;

    void validate(const ModelSpec& model) const;
    ScenarioSet resolved_scenarios() const;
};

/// Designs that do not depend on the true parameters, computed once.
struct OneShotDesigns {
    std::optional<DesignOutcome> nominal;
    std::optional<DesignOutcome> minmax;
    std::optional<DesignOutcome> scenario;
    std::optional<DesignOutcome> sequential_first;
    std::optional<StagedOutcome> two_stage;
};

struct MonteCarloResult {
    std::vector<TrialRecord> records;  ///< trial-major, strategies in setup order
    std::vector<StrategyStats> stats;
    std::vector<DominancePoint> dominance;
    std::vector<int> excluded_trials;
    OneShotDesigns designs;
    ScenarioSet scenarios;
};

OneShotDesigns compute_one_shot_designs(const ModelSpec& model, const MonteCarloSetup& setup);

/// True parameters of a trial: the explicit truth, or n_p uniforms over the
/// box from Rng(base_seed + trial_id). The generator is returned positioned
/// after those draws and feeds the measurement noise of every strategy.
Vector trial_truth(const MonteCarloSetup& setup, int trial_id, Rng& rng);

/// Applied design of one strategy for a given truth.
Design applied_design(const ModelSpec& model, const MonteCarloSetup& setup, const OneShotDesigns& designs,
                      Strategy strategy, const Vector& p_true, const Rng& noise_rng);

MonteCarloResult monte_carlo_compare(const ModelSpec& model, const MonteCarloSetup& setup);

std::vector<StrategyStats> strategy_statistics(const std::vector<TrialRecord>& records,
                                               const std::vector<Strategy>& strategies);

}  // namespace rdoe
