#pragma once

#include "rdoe/design_types.hpp"
#include "rdoe/models.hpp"
#include "rdoe/optimizer.hpp"
#include "rdoe/scenarios.hpp"
#include "rdoe/statistics.hpp"

#include <string_view>

namespace rdoe {

struct DesignOutcome {
    Design design;
    double objective = 0.0;
    SolveReport report;
};

struct StagedOutcome {
    StagedDesign design;
    double objective = 0.0;
    SolveReport report;
};

/// A-optimal design of N experiments at `p_hat`. Experiments in `prior`
/// (already performed) contribute their information at `p_hat` but are not
/// decision variables. Rows of the result are sorted.
DesignOutcome design_nominal(const ModelSpec& model, const Vector& p_hat, int n, const NoiseModel& noise,
                             const SolverConfig& solver, const CriterionConfig& criterion,
                             const Design& prior = {});

/// Minimizes the worst scenario criterion.
DesignOutcome design_minmax(const ModelSpec& model, const ScenarioSet& scenarios, int n, const NoiseModel& noise,
                            const SolverConfig& solver, const CriterionConfig& criterion,
                            const Design& prior = {});

/// Minimizes the weighted scenario criterion with one common design.
DesignOutcome design_scenario(const ModelSpec& model, const ScenarioSet& scenarios, int n, const NoiseModel& noise,
                              const SolverConfig& solver, const CriterionConfig& criterion,
                              const Design& prior = {});

struct TwoStageOptions {
    /// Solver for the per-scenario recourse subproblems. Its thread count is
    /// ignored; parallelism comes from the outer solver.
    SolverConfig inner = default_inner();

    static SolverConfig default_inner() {
        SolverConfig cfg;
        cfg.screen = 32;
        cfg.n_starts = 2;
        cfg.restarts = 1;
        return cfg;
    }
};

/// Shared block of N_e experiments plus per-scenario recourse blocks of
/// N - N_e experiments. The recourse blocks are independent once the shared
/// block is fixed, so the problem is solved as an outer search over the shared
/// block with an exact inner minimization per scenario.
StagedOutcome design_two_stage(const ModelSpec& model, const ScenarioSet& scenarios, int n, int n_e,
                               const NoiseModel& noise, const SolverConfig& solver, const CriterionConfig& criterion,
                               const TwoStageOptions& options = {}, const Design& prior = {});

/// sum_s w_s phi(p_s, prior + shared + recourse_s) for a two-stage layout.
double two_stage_objective(const ModelSpec& model, const StagedDesign& design, const NoiseModel& noise,
                           const CriterionConfig& criterion, const Design& prior = {});

enum class StageAccounting {
    stagewise,   ///< each node scored on its own stage block
    cumulative,  ///< each node scored on all experiments along its path
};

std::string_view to_string(StageAccounting accounting);
StageAccounting stage_accounting_from_string(std::string_view name);

/// Multi-stage design over a scenario tree; siblings share their stage block.
/// Stagewise accounting separates into one weighted scenario problem per
/// sibling group, solved independently.
StagedOutcome design_multi_stage(const ModelSpec& model, const ScenarioTree& tree, const NoiseModel& noise,
                                 const SolverConfig& solver, const CriterionConfig& criterion,
                                 StageAccounting accounting = StageAccounting::stagewise);

/// Objective of a multi-stage design under the given accounting.
double multi_stage_objective(const ModelSpec& model, const StagedDesign& design, const NoiseModel& noise,
                             const CriterionConfig& criterion, StageAccounting accounting);

/// Criterion of `design` (after `prior`) evaluated at each realization.
std::vector<double> per_scenario_criteria(const ModelSpec& model, const ScenarioSet& scenarios,
                                          const Design& design, const NoiseModel& noise,
                                          const CriterionConfig& criterion, const Design& prior = {});

}  // namespace rdoe
