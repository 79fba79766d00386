#include "rdoe/evaluation.hpp"

#include "rdoe/errors.hpp"
#include "rdoe/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rdoe {

std::string_view to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::nominal: return "nominal";
        case Strategy::sequential: return "sequential";
        case Strategy::minmax: return "minmax";
        case Strategy::scenario: return "scenario";
        case Strategy::two_stage: return "two_stage";
    }
    return "nominal";
}

Strategy strategy_from_string(std::string_view name) {
    for (Strategy s : all_strategies())
        if (to_string(s) == name) return s;
    if (name == "min-max" || name == "min_max") return Strategy::minmax;
    if (name == "two-stage") return Strategy::two_stage;
    throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

const std::vector<Strategy>& all_strategies() {
    static const std::vector<Strategy> list{Strategy::nominal, Strategy::sequential, Strategy::minmax,
                                            Strategy::scenario, Strategy::two_stage};
    return list;
}

std::string_view to_string(EvaluationMode mode) {
    return mode == EvaluationMode::revealed_truth ? "revealed_truth" : "noisy";
}

EvaluationMode evaluation_mode_from_string(std::string_view name) {
    if (name == "revealed_truth") return EvaluationMode::revealed_truth;
    if (name == "noisy") return EvaluationMode::noisy;
    throw ConfigError("unknown evaluation mode '" + std::string(name) + "'");
}

double evaluate_design(const ModelSpec& model, const Vector& p_true, const Design& design, const NoiseModel& noise,
                       const CriterionConfig& criterion) {
    if (p_true.size() != model.n_p) throw DomainError("true parameters have wrong dimension");
    return design_criterion(model, std::span<const double>(p_true.data(), static_cast<std::size_t>(p_true.size())),
                            design.controls, noise, criterion);
}

CrystalBall crystal_ball(const ModelSpec& model, const Vector& p_true, int n, const NoiseModel& noise,
                         const SolverConfig& solver, const CriterionConfig& criterion,
                         const std::vector<Design>& hints) {
    SolverConfig cfg = solver;
    for (const auto& h : hints) {
        if (h.size() != n || h.n_u() != model.n_u) continue;
        Vector x(h.controls.size());
        for (int t = 0; t < h.size(); ++t)
            for (int j = 0; j < model.n_u; ++j) x[t * model.n_u + j] = h.controls(t, j);
        cfg.extra_starts.push_back(std::move(x));
    }
    DesignOutcome r = design_nominal(model, p_true, n, noise, cfg, criterion);
    return {std::move(r.design), r.objective};
}

double interpolated_quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxSummary summarize(std::vector<double> values) {
    BoxSummary b;
    b.count = static_cast<int>(values.size());
    if (values.empty()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        b.mean = b.min = b.q1 = b.median = b.q3 = b.max = b.whisker_low = b.whisker_high = nan;
        return b;
    }
    std::sort(values.begin(), values.end());
    b.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    b.min = values.front();
    b.max = values.back();
    b.q1 = interpolated_quantile(values, 0.25);
    b.median = interpolated_quantile(values, 0.5);
    b.q3 = interpolated_quantile(values, 0.75);
    const double iqr = b.q3 - b.q1;
    const double lo_fence = b.q1 - 1.5 * iqr;
    const double hi_fence = b.q3 + 1.5 * iqr;
    b.whisker_low = b.max;
    b.whisker_high = b.min;
    for (double v : values) {
        if (v < lo_fence || v > hi_fence) {
            b.outliers.push_back(v);
        } else {
            b.whisker_low = std::min(b.whisker_low, v);
            b.whisker_high = std::max(b.whisker_high, v);
        }
    }
    return b;
}

void MonteCarloSetup::validate(const ModelSpec& model) const {
    if (n_trials < 1) throw DomainError("n_trials must be at least one");
    if (!truths.empty() && static_cast<int>(truths.size()) != n_trials)
        throw DomainError("explicit truths must list one parameter vector per trial");
    for (const auto& p : truths)
        if (p.size() != model.n_p) throw DomainError("explicit truth has wrong dimension");
    if (box.dim() != model.n_p) throw DomainError("parameter box does not match the model");
    if (n_total < 1 || n_e < 1 || n_e > n_total) throw DomainError("need 1 <= N_e <= N");
    if (strategies.empty()) throw DomainError("no strategies selected");
    if (noise.dim() != model.n_y) throw DomainError("noise model does not match model outputs");
    if (dominance.enabled && dominance.grid_points < 2) throw DomainError("dominance grid needs >= 2 points per axis");
    criterion.validate(model.n_p);
}

ScenarioSet MonteCarloSetup::resolved_scenarios() const {
    return scenarios ? *scenarios : sample_scenarios(box, scenario_mode);
}

namespace {

bool uses(const MonteCarloSetup& setup, Strategy s) {
    return std::find(setup.strategies.begin(), setup.strategies.end(), s) != setup.strategies.end() ||
           (setup.dominance.enabled && (setup.dominance.first == s || setup.dominance.second == s));
}

Vector initial_estimate(const MonteCarloSetup& setup) {
    return setup.p_hat0.size() ? setup.p_hat0 : setup.box.midpoint();
}

ProtocolConfig protocol_config(const MonteCarloSetup& setup, ProtocolKind kind, const Design& first_block) {
    ProtocolConfig cfg;
    cfg.kind = kind;
    cfg.n_total = setup.n_total;
    cfg.n_step = setup.n_e;
    cfg.box = setup.box;
    cfg.p_hat0 = initial_estimate(setup);
    cfg.noise = setup.noise;
    cfg.design_solver = setup.solver;
    cfg.design_solver.threads = 1;
    cfg.estimation_solver = setup.estimation_solver;
    cfg.estimation_solver.threads = 1;
    cfg.criterion = setup.criterion;
    cfg.two_stage = setup.two_stage;
    cfg.scenario_mode = setup.scenario_mode;
    cfg.scenarios = setup.resolved_scenarios();
    cfg.alpha = setup.alpha;
    cfg.first_block = first_block;
    return cfg;
}

}  // namespace

OneShotDesigns compute_one_shot_designs(const ModelSpec& model, const MonteCarloSetup& setup) {
    OneShotDesigns d;
    SolverConfig solver = setup.solver;
    solver.threads = setup.threads;
    const ScenarioSet scenarios = setup.resolved_scenarios();
    const Vector p0 = initial_estimate(setup);
    const int n = setup.n_total;
    if (uses(setup, Strategy::nominal))
        d.nominal = design_nominal(model, p0, n, setup.noise, solver, setup.criterion);
    if (uses(setup, Strategy::minmax))
        d.minmax = design_minmax(model, scenarios, n, setup.noise, solver, setup.criterion);
    if (uses(setup, Strategy::scenario))
        d.scenario = design_scenario(model, scenarios, n, setup.noise, solver, setup.criterion);
    if (uses(setup, Strategy::sequential))
        d.sequential_first = design_nominal(model, p0, setup.n_e, setup.noise, solver, setup.criterion);
    if (uses(setup, Strategy::two_stage))
        d.two_stage = design_two_stage(model, scenarios, n, setup.n_e, setup.noise, solver, setup.criterion,
                                       setup.two_stage);
    return d;
}

Vector trial_truth(const MonteCarloSetup& setup, int trial_id, Rng& rng) {
    rng = Rng(setup.base_seed + static_cast<std::uint64_t>(trial_id));
    if (!setup.truths.empty()) return setup.truths[static_cast<std::size_t>(trial_id)];
    Vector p(setup.box.dim());
    for (int i = 0; i < p.size(); ++i) p[i] = rng.uniform(setup.box.lower()[i], setup.box.upper()[i]);
    return p;
}

Design applied_design(const ModelSpec& model, const MonteCarloSetup& setup, const OneShotDesigns& designs,
                      Strategy strategy, const Vector& p_true, const Rng& noise_rng) {
    auto need = [](const auto& opt, Strategy s) -> const auto& {
        if (!opt) throw DomainError("design for strategy '" + std::string(to_string(s)) + "' was not computed");
        return *opt;
    };
    auto run = [&](ProtocolKind kind, const Design& first) {
        const ProtocolConfig cfg = protocol_config(setup, kind, first);
        if (setup.mode == EvaluationMode::revealed_truth) {
            RevealedTruthSource source(model, p_true, setup.noise, noise_rng);
            return run_protocol(model, cfg, source).applied();
        }
        SimulatedSource source(model, p_true, setup.noise, noise_rng);
        return run_protocol(model, cfg, source).applied();
    };
    switch (strategy) {
        case Strategy::nominal: return need(designs.nominal, strategy).design;
        case Strategy::minmax: return need(designs.minmax, strategy).design;
        case Strategy::scenario: return need(designs.scenario, strategy).design;
        case Strategy::sequential:
            return run(ProtocolKind::sequential, need(designs.sequential_first, strategy).design);
        case Strategy::two_stage:
            return run(ProtocolKind::two_stage_open_loop,
                       Design(need(designs.two_stage, strategy).design.blocks.front().controls));
    }
    throw DomainError("unknown strategy");
}

std::vector<StrategyStats> strategy_statistics(const std::vector<TrialRecord>& records,
                                               const std::vector<Strategy>& strategies) {
    std::vector<StrategyStats> out;
    for (Strategy s : strategies) {
        std::vector<double> losses;
        double pct_sum = 0.0;
        for (const auto& r : records) {
            if (r.strategy != s || r.excluded) continue;
            losses.push_back(r.loss);
            pct_sum += 100.0 * r.loss / r.phi_star;
        }
        StrategyStats st;
        st.strategy = s;
        st.mean_loss_pct = losses.empty() ? std::numeric_limits<double>::quiet_NaN()
                                          : pct_sum / static_cast<double>(losses.size());
        st.loss = summarize(std::move(losses));
        out.push_back(std::move(st));
    }
    double nominal_mean = std::numeric_limits<double>::quiet_NaN();
    for (const auto& st : out)
        if (st.strategy == Strategy::nominal) nominal_mean = st.loss.mean;
    for (auto& st : out) st.relative_pct = 100.0 * st.loss.mean / nominal_mean;
    return out;
}

namespace {

std::vector<Vector> dominance_grid(const ParameterBox& box, int points) {
    const int n = box.dim();
    std::vector<Vector> grid;
    long total = 1;
    for (int i = 0; i < n; ++i) total *= points;
    for (long k = 0; k < total; ++k) {
        Vector p(n);
        long rest = k;
        for (int i = n - 1; i >= 0; --i) {
            const long idx = rest % points;
            rest /= points;
            const double t = static_cast<double>(idx) / static_cast<double>(points - 1);
            p[i] = box.lower()[i] + t * (box.upper()[i] - box.lower()[i]);
        }
        grid.push_back(std::move(p));
    }
    return grid;
}

}  // namespace

MonteCarloResult monte_carlo_compare(const ModelSpec& model, const MonteCarloSetup& setup) {
    setup.validate(model);
    MonteCarloResult result;
    result.scenarios = setup.resolved_scenarios();
    result.designs = compute_one_shot_designs(model, setup);

    const auto& strategies = setup.strategies;
    const std::size_t n_s = strategies.size();
    result.records.resize(static_cast<std::size_t>(setup.n_trials) * n_s);
    SolverConfig crystal_solver = setup.solver;
    crystal_solver.threads = 1;

    parallel_for(setup.n_trials, setup.threads, [&](int t) {
        Rng rng;
        const Vector p_true = trial_truth(setup, t, rng);
        std::vector<Design> applied(n_s);
        std::vector<std::string> errors(n_s);
        for (std::size_t k = 0; k < n_s; ++k) {
            try {
                applied[k] = applied_design(model, setup, result.designs, strategies[k], p_true, rng);
            } catch (const Error& e) {
                errors[k] = e.what();
            }
        }
        double phi_star = std::numeric_limits<double>::quiet_NaN();
        std::string crystal_error;
        try {
            std::vector<Design> hints;
            for (std::size_t k = 0; k < n_s; ++k)
                if (errors[k].empty()) hints.push_back(applied[k]);
            phi_star = crystal_ball(model, p_true, setup.n_total, setup.noise, crystal_solver, setup.criterion, hints)
                           .phi_star;
        } catch (const Error& e) {
            crystal_error = std::string("crystal ball: ") + e.what();
        }
        bool failed = !crystal_error.empty();
        for (const auto& e : errors) failed = failed || !e.empty();
        for (std::size_t k = 0; k < n_s; ++k) {
            TrialRecord& r = result.records[static_cast<std::size_t>(t) * n_s + k];
            r.trial_id = t;
            r.seed = setup.base_seed + static_cast<std::uint64_t>(t);
            r.p_true = p_true;
            r.strategy = strategies[k];
            r.applied = applied[k];
            r.error = errors[k].empty() ? crystal_error : errors[k];
            r.excluded = failed;
            r.phi_star = phi_star;
            if (errors[k].empty()) {
                r.phi_applied = evaluate_design(model, p_true, applied[k], setup.noise, setup.criterion);
                r.loss = r.phi_applied - phi_star;
            } else {
                r.phi_applied = r.loss = std::numeric_limits<double>::quiet_NaN();
            }
        }
    });

    for (int t = 0; t < setup.n_trials; ++t)
        if (result.records[static_cast<std::size_t>(t) * n_s].excluded) result.excluded_trials.push_back(t);
    result.stats = strategy_statistics(result.records, strategies);

    if (!setup.dominance.enabled) return result;
    const Strategy a = setup.dominance.first;
    const Strategy b = setup.dominance.second;
    if (setup.dominance.sampler == DominanceConfig::Sampler::scatter || model.n_p > 2) {
        const std::size_t ia = static_cast<std::size_t>(std::find(strategies.begin(), strategies.end(), a) - strategies.begin());
        const std::size_t ib = static_cast<std::size_t>(std::find(strategies.begin(), strategies.end(), b) - strategies.begin());
        if (ia < n_s && ib < n_s) {
            for (int t = 0; t < setup.n_trials; ++t) {
                const auto& ra = result.records[static_cast<std::size_t>(t) * n_s + ia];
                const auto& rb = result.records[static_cast<std::size_t>(t) * n_s + ib];
                if (ra.excluded) continue;
                result.dominance.push_back({ra.p_true, ra.loss, rb.loss, ra.loss - rb.loss});
            }
        }
        return result;
    }
    const auto grid = dominance_grid(setup.box, setup.dominance.grid_points);
    std::vector<std::optional<DominancePoint>> points(grid.size());
    parallel_for(static_cast<int>(grid.size()), setup.threads, [&](int g) {
        const Vector& p = grid[static_cast<std::size_t>(g)];
        const Rng rng(setup.base_seed + static_cast<std::uint64_t>(setup.n_trials) + static_cast<std::uint64_t>(g));
        try {
            const Design da = applied_design(model, setup, result.designs, a, p, rng);
            const Design db = applied_design(model, setup, result.designs, b, p, rng);
            const double phi_star =
                crystal_ball(model, p, setup.n_total, setup.noise, crystal_solver, setup.criterion, {da, db}).phi_star;
            const double loss_a = evaluate_design(model, p, da, setup.noise, setup.criterion) - phi_star;
            const double loss_b = evaluate_design(model, p, db, setup.noise, setup.criterion) - phi_star;
            points[static_cast<std::size_t>(g)] = DominancePoint{p, loss_a, loss_b, loss_a - loss_b};
        } catch (const Error&) {
        }
    });
    for (auto& pt : points)
        if (pt) result.dominance.push_back(std::move(*pt));
    return result;
}

}  // namespace rdoe
