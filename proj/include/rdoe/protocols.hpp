#pragma once

#include "rdoe/design.hpp"
#include "rdoe/estimation.hpp"
#include "rdoe/random.hpp"
#include "rdoe/scenarios.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rdoe {

/// Where measurements come from when a designed block is applied.
class MeasurementSource {
public:
    virtual ~MeasurementSource() = default;
    virtual Vector measure(const Vector& u) = 0;
    /// True parameters, when the source reveals them after each block.
    virtual std::optional<Vector> revealed_parameters() const { return std::nullopt; }
};

/// Noisy model output at fixed true parameters, drawn from a seeded stream.
class SimulatedSource : public MeasurementSource {
public:
    SimulatedSource(ModelSpec model, Vector p_true, NoiseModel noise, Rng rng);
    Vector measure(const Vector& u) override;
    const Vector& p_true() const { return p_true_; }

private:
    ModelSpec model_;
    Vector p_true_;
    NoiseModel noise_;
    Rng rng_;
};

/// Simulated source whose re-estimation returns the true parameters.
class RevealedTruthSource : public SimulatedSource {
public:
    using SimulatedSource::SimulatedSource;
    std::optional<Vector> revealed_parameters() const override { return p_true(); }
};

/// Replays a fixed list of measured outputs.
class ScriptedSource : public MeasurementSource {
public:
    explicit ScriptedSource(std::vector<Vector> outputs) : outputs_(std::move(outputs)) {}
    Vector measure(const Vector& u) override;

private:
    std::vector<Vector> outputs_;
    std::size_t next_ = 0;
};

enum class ProtocolKind { sequential, two_stage_open_loop, two_stage_closed_loop };

std::string_view to_string(ProtocolKind kind);
ProtocolKind protocol_kind_from_string(std::string_view name);

/// A zero tolerance disables the rule.
struct StopConfig {
    double rel_tol = 0.0;   ///< relative criterion improvement between steps
    double step_tol = 0.0;  ///< relative infinity-norm change of the estimate
};

struct ProtocolConfig {
    ProtocolKind kind = ProtocolKind::sequential;
    int n_total = 0;
    int n_step = 1;  ///< N_e_step for sequential, N_e for two-stage
    ParameterBox box;
    Vector p_hat0;  ///< empty: midpoint of the box
    NoiseModel noise;
    SolverConfig design_solver;
    SolverConfig estimation_solver;
    CriterionConfig criterion;
    TwoStageOptions two_stage;
    ScenarioMode scenario_mode = ScenarioMode::full_factorial_3;
    /// Scenarios of the first two-stage round; sampled from `box` when absent.
    std::optional<ScenarioSet> scenarios;
    StopConfig stop;
    double alpha = kTwoSigmaAlpha;
    /// Precomputed first block; it does not depend on the measurements.
    std::optional<Design> first_block;

    void validate(const ModelSpec& model) const;
    Vector initial_estimate() const;
};

struct ProtocolStep {
    Design block;  ///< experiments applied in this step
    Dataset data;  ///< every measurement so far
    Estimate estimate;
    double criterion = 0.0;  ///< phi at the new estimate over all applied experiments
    bool revealed = false;
};

struct ProtocolHistory {
    std::vector<ProtocolStep> steps;
    std::string stop_reason;

    /// All applied experiments in order, with stage marks at step boundaries.
    Design applied() const;
};

/// Step-wise driver of the sequential and two-stage protocols. Each call to
/// pending_block() designs the next block if needed; submit() ingests one
/// measurement for the next pending experiment.
class ProtocolEngine {
public:
    ProtocolEngine(ModelSpec model, ProtocolConfig cfg);

    bool finished() const { return finished_; }
    /// Next block of experiments to run; empty once finished.
    const Design& pending_block();
    /// Index of the next experiment inside the pending block.
    int pending_index() const { return pending_pos_; }
    /// Control of the next experiment to run.
    Vector next_control();
    /// Records the measurement for the next pending experiment. At the end of
    /// a block the parameters are re-estimated (or taken from `revealed`).
    void submit(const Vector& y, const std::optional<Vector>& revealed = std::nullopt);

    const ProtocolHistory& history() const { return history_; }
    const Vector& current_estimate() const { return p_hat_; }
    const ParameterBox& current_box() const { return box_; }
    int experiments_used() const { return data_.size(); }
    const ProtocolConfig& config() const { return cfg_; }
    const ModelSpec& model() const { return model_; }

private:
    Design plan_next();
    void finish_block(const std::optional<Vector>& revealed);

    ModelSpec model_;
    ProtocolConfig cfg_;
    Vector p_hat_;
    ParameterBox box_;
    Dataset data_;
    ProtocolHistory history_;
    Design pending_;
    int pending_pos_ = 0;
    bool planned_ = false;
    bool finished_ = false;
};

/// Runs the engine against a measurement source until it stops.
ProtocolHistory run_protocol(const ModelSpec& model, const ProtocolConfig& cfg, MeasurementSource& source);

ProtocolHistory run_sequential(const ModelSpec& model, ProtocolConfig cfg, MeasurementSource& source);

ProtocolHistory run_two_stage_protocol(const ModelSpec& model, ProtocolConfig cfg, MeasurementSource& source,
                                       bool closed_loop);

}  // namespace rdoe
