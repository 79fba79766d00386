#include "rdoe/protocols.hpp"

#include "rdoe/errors.hpp"

#include <algorithm>
#include <cmath>

namespace rdoe {

SimulatedSource::SimulatedSource(ModelSpec model, Vector p_true, NoiseModel noise, Rng rng)
    : model_(std::move(model)), p_true_(std::move(p_true)), noise_(std::move(noise)), rng_(rng) {
    if (p_true_.size() != model_.n_p) throw DomainError("true parameters have wrong dimension");
}

Vector SimulatedSource::measure(const Vector& u) { return simulate_measurement(model_, p_true_, u, noise_, rng_); }

Vector ScriptedSource::measure(const Vector&) {
    if (next_ >= outputs_.size()) throw DomainError("scripted measurements exhausted");
    return outputs_[next_++];
}

std::string_view to_string(ProtocolKind kind) {
    switch (kind) {
        case ProtocolKind::sequential: return "sequential";
        case ProtocolKind::two_stage_open_loop: return "two_stage_open_loop";
        case ProtocolKind::two_stage_closed_loop: return "two_stage_closed_loop";
    }
    return "sequential";
}

ProtocolKind protocol_kind_from_string(std::string_view name) {
    if (name == "sequential") return ProtocolKind::sequential;
    if (name == "two_stage_open_loop" || name == "two_stage") return ProtocolKind::two_stage_open_loop;
    if (name == "two_stage_closed_loop") return ProtocolKind::two_stage_closed_loop;
    throw ConfigError("unknown protocol '" + std::string(name) + "'");
}

void ProtocolConfig::validate(const ModelSpec& model) const {
    if (n_total < 1) throw DomainError("protocol needs N >= 1");
    if (n_step < 1 || n_step > n_total) throw DomainError("protocol needs 1 <= N_e <= N");
    if (box.dim() != model.n_p) throw DomainError("parameter box does not match the model");
    if (p_hat0.size() != 0 && p_hat0.size() != model.n_p) throw DomainError("initial estimate has wrong dimension");
    if (noise.dim() != model.n_y) throw DomainError("noise model does not match model outputs");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must be in (0, 1)");
    if (stop.rel_tol < 0.0 || stop.step_tol < 0.0) throw DomainError("stop tolerances must be non-negative");
    if (first_block) {
        if (first_block->empty() || first_block->size() > n_total || first_block->n_u() != model.n_u)
            throw DomainError("precomputed first block does not fit the protocol");
    }
    criterion.validate(model.n_p);
}

Vector ProtocolConfig::initial_estimate() const { return p_hat0.size() ? p_hat0 : box.midpoint(); }

Design ProtocolHistory::applied() const {
    Design out;
    std::vector<int> marks;
    for (const auto& s : steps) {
        out = out.append(s.block);
        marks.push_back(out.size());
    }
    if (!marks.empty()) marks.pop_back();
    out.stage_marks = std::move(marks);
    return out;
}

ProtocolEngine::ProtocolEngine(ModelSpec model, ProtocolConfig cfg) : model_(std::move(model)), cfg_(std::move(cfg)) {
    cfg_.validate(model_);
    p_hat_ = cfg_.initial_estimate();
    box_ = cfg_.box;
    data_.noise = cfg_.noise;
}

Design ProtocolEngine::plan_next() {
    const int remaining = cfg_.n_total - data_.size();
    const Design prior = data_.design();
    const bool first = data_.size() == 0;
    if (first && cfg_.first_block) return *cfg_.first_block;

    auto nominal = [&](int n) {
        return design_nominal(model_, p_hat_, n, cfg_.noise, cfg_.design_solver, cfg_.criterion, prior).design;
    };
    auto two_stage_shared = [&](const ScenarioSet& scenarios) {
        const int n_e = std::min(cfg_.n_step, remaining);
        StagedOutcome r = design_two_stage(model_, scenarios, remaining, n_e, cfg_.noise, cfg_.design_solver,
                                           cfg_.criterion, cfg_.two_stage, prior);
        return Design(r.design.blocks.front().controls);
    };

    switch (cfg_.kind) {
        case ProtocolKind::sequential:
            return nominal(std::min(cfg_.n_step, remaining));
        case ProtocolKind::two_stage_open_loop:
            if (first) return two_stage_shared(cfg_.scenarios ? *cfg_.scenarios
                                                              : sample_scenarios(box_, cfg_.scenario_mode));
            return nominal(remaining);
        case ProtocolKind::two_stage_closed_loop:
            if (first && cfg_.scenarios) return two_stage_shared(*cfg_.scenarios);
            if (remaining > cfg_.n_step)
                return two_stage_shared(merge_duplicates(sample_scenarios(box_, cfg_.scenario_mode)));
            return nominal(remaining);
    }
    return nominal(remaining);
}

const Design& ProtocolEngine::pending_block() {
    if (finished_) {
        pending_ = Design();
        return pending_;
    }
    if (!planned_) {
        pending_ = plan_next();
        pending_pos_ = 0;
        planned_ = true;
    }
    return pending_;
}

Vector ProtocolEngine::next_control() {
    const Design& block = pending_block();
    if (finished_ || block.empty()) throw DomainError("protocol has finished");
    return block.controls.row(pending_pos_).transpose();
}

void ProtocolEngine::submit(const Vector& y, const std::optional<Vector>& revealed) {
    const Vector u = next_control();
    if (y.size() != model_.n_y || !y.allFinite()) throw DomainError("measurement has wrong size or is not finite");
    data_.records.push_back({u, y});
    ++pending_pos_;
    if (pending_pos_ == pending_.size()) finish_block(revealed);
}

void ProtocolEngine::finish_block(const std::optional<Vector>& revealed) {
    ProtocolStep step;
    step.block = pending_;
    if (revealed) {
        step.estimate = estimate_at(model_, data_, *revealed, cfg_.alpha);
        step.revealed = true;
    } else {
        try {
            step.estimate = least_squares_estimate(model_, data_, cfg_.box, cfg_.estimation_solver, cfg_.alpha);
        } catch (const UnderdeterminedData&) {
            step.estimate = estimate_at(model_, data_, p_hat_, cfg_.alpha);
        }
    }
    step.criterion = a_criterion(step.estimate.fim_at_estimate, cfg_.criterion).value;
    step.data = data_;

    const Vector previous = p_hat_;
    const double prev_criterion = history_.steps.empty() ? 0.0 : history_.steps.back().criterion;
    p_hat_ = step.estimate.p_hat;
    if (cfg_.kind == ProtocolKind::two_stage_closed_loop) {
        if (step.revealed) {
            box_ = ParameterBox(p_hat_, p_hat_);
        } else if (step.estimate.ellipsoid) {
            const Vector hw = step.estimate.ellipsoid->half_widths();
            box_ = ParameterBox((p_hat_ - hw).cwiseMax(cfg_.box.lower()).cwiseMin(p_hat_),
                                (p_hat_ + hw).cwiseMin(cfg_.box.upper()).cwiseMax(p_hat_));
        }
    }
    history_.steps.push_back(std::move(step));
    planned_ = false;
    pending_ = Design();
    pending_pos_ = 0;

    const ProtocolStep& last = history_.steps.back();
    if (data_.size() >= cfg_.n_total) {
        finished_ = true;
        history_.stop_reason = "experiment budget exhausted";
    } else if (cfg_.stop.rel_tol > 0.0 && history_.steps.size() >= 2 &&
               (prev_criterion - last.criterion) < cfg_.stop.rel_tol * std::abs(prev_criterion)) {
        finished_ = true;
        history_.stop_reason = "criterion improvement below rel_tol";
    } else if (cfg_.stop.step_tol > 0.0 &&
               (p_hat_ - previous).cwiseAbs().maxCoeff() <
                   cfg_.stop.step_tol * std::max(1.0, previous.cwiseAbs().maxCoeff())) {
        finished_ = true;
        history_.stop_reason = "estimate update below step_tol";
    }
}

ProtocolHistory run_protocol(const ModelSpec& model, const ProtocolConfig& cfg, MeasurementSource& source) {
    ProtocolEngine engine(model, cfg);
    while (!engine.finished()) {
        const int size = engine.pending_block().size();
        for (int t = engine.pending_index(); t < size; ++t) {
            const Vector y = source.measure(engine.next_control());
            engine.submit(y, t + 1 == size ? source.revealed_parameters() : std::nullopt);
        }
    }
    return engine.history();
}

ProtocolHistory run_sequential(const ModelSpec& model, ProtocolConfig cfg, MeasurementSource& source) {
    cfg.kind = ProtocolKind::sequential;
    return run_protocol(model, cfg, source);
}

ProtocolHistory run_two_stage_protocol(const ModelSpec& model, ProtocolConfig cfg, MeasurementSource& source,
                                       bool closed_loop) {
    cfg.kind = closed_loop ? ProtocolKind::two_stage_closed_loop : ProtocolKind::two_stage_open_loop;
    return run_protocol(model, cfg, source);
}

}  // namespace rdoe
