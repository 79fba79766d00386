#include "rdoe/design.hpp"

#include "rdoe/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace rdoe {

namespace {

Vector tile(const Vector& v, int times) {
    Vector out(v.size() * times);
    for (int t = 0; t < times; ++t) out.segment(t * v.size(), v.size()) = v;
    return out;
}

Matrix to_controls(const Vector& x, Eigen::Index offset, int rows, int n_u) {
    Matrix c(rows, n_u);
    for (int t = 0; t < rows; ++t)
        for (int j = 0; j < n_u; ++j) c(t, j) = x[offset + t * n_u + j];
    return c;
}

Vector to_decision(const Matrix& c) {
    Vector x(c.size());
    for (Eigen::Index t = 0; t < c.rows(); ++t)
        for (Eigen::Index j = 0; j < c.cols(); ++j) x[t * c.cols() + j] = c(t, j);
    return x;
}

std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

void check_common(const ModelSpec& model, const NoiseModel& noise, const CriterionConfig& criterion,
                  const Design& prior) {
    if (noise.dim() != model.n_y) throw DomainError("noise model does not match model outputs");
    criterion.validate(model.n_p);
    if (!prior.empty() && prior.n_u() != model.n_u) throw DomainError("prior design has wrong control dimension");
}

/// Information of `prior` at `p`: a 0x0 matrix without prior experiments,
/// nullopt when the prior touches an inadmissible point.
std::optional<Matrix> prior_information(const ModelSpec& model, const Vector& p, const Design& prior,
                                        const NoiseModel& noise) {
    if (prior.empty()) return Matrix();
    Matrix fim = Matrix::Zero(model.n_p, model.n_p);
    if (!accumulate_fim(model, as_span(p), prior.controls, noise, fim)) return std::nullopt;
    return fim;
}

/// Criterion terms sharing one block of controls.
struct Term {
    Vector p;
    double weight = 1.0;
    std::optional<Matrix> prior;
};

enum class Combine { sum, max };

double combine_terms(const ModelSpec& model, const std::vector<Term>& terms, const Matrix& controls,
                     const NoiseModel& noise, const CriterionConfig& criterion, Combine how) {
    double acc = how == Combine::max ? -std::numeric_limits<double>::infinity() : 0.0;
    for (const auto& term : terms) {
        const double phi = term.prior ? design_criterion(model, as_span(term.p), controls, noise, criterion,
                                                         term.prior->size() ? &*term.prior : nullptr)
                                      : criterion.penalty_value;
        if (how == Combine::max)
            acc = std::max(acc, phi);
        else
            acc += term.weight * phi;
    }
    return acc;
}

BoxProblem control_box(const ModelSpec& model, int rows) {
    BoxProblem problem;
    problem.lower = tile(model.u_lower, rows);
    problem.upper = tile(model.u_upper, rows);
    return problem;
}

/// Point-merge refinement: moves one experiment onto another and descends
/// again from there, keeping the best improvement, until no merge helps.
/// Optimal designs tend to replicate a few support points, and the simplex
/// rarely collapses two experiments on its own.
void merge_refine(const BoxProblem& problem, const SolverConfig& solver, int rows, int n_u, SolveReport& report) {
    if (rows < 2) return;
    const Eigen::ArrayXd width = (problem.upper - problem.lower).head(n_u).array();
    for (int round = 0; round < rows; ++round) {
        const Matrix base = to_controls(report.x_best, 0, rows, n_u);
        std::optional<LocalMinimum> best;
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < rows; ++j) {
                if (i == j) continue;
                if (((base.row(i) - base.row(j)).transpose().array().abs() / width).maxCoeff() <= 1e-4) continue;
                Matrix cand = base;
                cand.row(j) = base.row(i);
                LocalMinimum m = local_minimize(problem, solver, to_decision(cand), &report.n_evals);
                if (!std::isfinite(m.f)) continue;
                if (!best || m.f < best->f || (m.f == best->f && lexicographically_less(m.x, best->x))) best = m;
            }
        }
        const double threshold = report.f_best - solver.f_tol * std::abs(report.f_best);
        if (!best || !(best->f < threshold)) break;
        report.x_best = best->x;
        report.f_best = best->f;
        report.all_local_minima.push_back(*best);
    }
    report = dedupe_minima(std::move(report), 1e-6 * (problem.upper - problem.lower).maxCoeff());
}

/// Moves each control onto its nearer bound when that costs nothing within
/// f_tol. Where the criterion saturates (e.g. e^(-p u) below round-off) the
/// simplex stops anywhere on the plateau.
void snap_to_bounds(const BoxProblem& problem, const SolverConfig& solver, SolveReport& report) {
    Vector x = report.x_best;
    double f = report.f_best;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double lo = problem.lower[i], hi = problem.upper[i];
        const double target = x[i] - lo <= hi - x[i] ? lo : hi;
        if (x[i] == target) continue;
        Vector cand = x;
        cand[i] = target;
        const double fc = problem.objective(cand);
        ++report.n_evals;
        if (std::isfinite(fc) && fc <= f + solver.f_tol * std::abs(f)) {
            x = std::move(cand);
            f = fc;
        }
    }
    report.x_best = std::move(x);
    report.f_best = f;
}

/// Optimizes one block of `rows` experiments against the combined terms.
DesignOutcome solve_block(const ModelSpec& model, const std::vector<Term>& terms, int rows, const NoiseModel& noise,
                          const SolverConfig& solver, const CriterionConfig& criterion, Combine how,
                          bool refine = true) {
    BoxProblem problem = control_box(model, rows);
    problem.objective = [&](const Vector& x) {
        return combine_terms(model, terms, to_controls(x, 0, rows, model.n_u), noise, criterion, how);
    };
    DesignOutcome out;
    out.report = minimize_boxed(problem, solver);
    if (refine) {
        merge_refine(problem, solver, rows, model.n_u, out.report);
        snap_to_bounds(problem, solver, out.report);
    }
    out.design = Design(sorted_rows(to_controls(out.report.x_best, 0, rows, model.n_u)));
    out.objective = combine_terms(model, terms, out.design.controls, noise, criterion, how);
    return out;
}

std::vector<Term> scenario_terms(const ModelSpec& model, const ScenarioSet& scenarios, const Design& prior,
                                 const NoiseModel& noise) {
    scenarios.validate();
    std::vector<Term> terms;
    for (int s = 0; s < scenarios.size(); ++s) {
        const Vector& p = scenarios.realizations[static_cast<std::size_t>(s)];
        if (p.size() != model.n_p) throw DomainError("scenario realization has wrong dimension");
        terms.push_back({p, scenarios.weights[static_cast<std::size_t>(s)], prior_information(model, p, prior, noise)});
    }
    return terms;
}

void check_count(int n) {
    if (n < 1) throw DomainError("number of experiments must be at least one");
}

/// Sums evaluation counters of several solves into one report.
SolveReport merge_reports(const std::vector<SolveReport>& parts, Vector x_best, double f_best) {
    SolveReport out;
    out.x_best = std::move(x_best);
    out.f_best = f_best;
    for (const auto& r : parts) {
        out.n_evals += r.n_evals;
        out.starts_converged += r.starts_converged;
    }
    return out;
}

Vector staged_decision(const StagedDesign& sd) {
    Vector x(sd.decision_size());
    Eigen::Index at = 0;
    for (const auto& b : sd.blocks) {
        const Vector v = to_decision(b.controls);
        x.segment(at, v.size()) = v;
        at += v.size();
    }
    return x;
}

}  // namespace

DesignOutcome design_nominal(const ModelSpec& model, const Vector& p_hat, int n, const NoiseModel& noise,
                             const SolverConfig& solver, const CriterionConfig& criterion, const Design& prior) {
    check_count(n);
    check_common(model, noise, criterion, prior);
    if (p_hat.size() != model.n_p || !p_hat.allFinite()) throw DomainError("nominal parameters have wrong dimension");
    const Vector u_mid = 0.5 * (model.u_lower + model.u_upper);
    if (!is_admissible(model, as_span(p_hat), as_span(u_mid)))
        throw SingularModelPoint("model '" + model.id + "' is singular at the nominal parameters");
    auto info = prior_information(model, p_hat, prior, noise);
    if (!info) throw SingularModelPoint("prior experiments are inadmissible at the nominal parameters");
    return solve_block(model, {Term{p_hat, 1.0, std::move(info)}}, n, noise, solver, criterion, Combine::sum);
}

DesignOutcome design_minmax(const ModelSpec& model, const ScenarioSet& scenarios, int n, const NoiseModel& noise,
                            const SolverConfig& solver, const CriterionConfig& criterion, const Design& prior) {
    check_count(n);
    check_common(model, noise, criterion, prior);
    return solve_block(model, scenario_terms(model, scenarios, prior, noise), n, noise, solver, criterion,
                       Combine::max);
}

DesignOutcome design_scenario(const ModelSpec& model, const ScenarioSet& scenarios, int n, const NoiseModel& noise,
                              const SolverConfig& solver, const CriterionConfig& criterion, const Design& prior) {
    check_count(n);
    check_common(model, noise, criterion, prior);
    return solve_block(model, scenario_terms(model, scenarios, prior, noise), n, noise, solver, criterion,
                       Combine::sum);
}

StagedOutcome design_two_stage(const ModelSpec& model, const ScenarioSet& scenarios, int n, int n_e,
                               const NoiseModel& noise, const SolverConfig& solver, const CriterionConfig& criterion,
                               const TwoStageOptions& options, const Design& prior) {
    check_count(n);
    if (n_e < 0 || n_e > n) throw DomainError("two-stage design needs 0 <= N_e <= N");
    check_common(model, noise, criterion, prior);
    const auto terms = scenario_terms(model, scenarios, prior, noise);
    StagedOutcome out;
    out.design = StagedDesign::layout(ScenarioTree::two_stage(scenarios, n_e, n), model.n_u);
    auto& blocks = out.design.blocks;
    const int s_count = scenarios.size();
    const int n_r = n - n_e;

    if (n_r == 0) {
        DesignOutcome shared = solve_block(model, terms, n, noise, solver, criterion, Combine::sum);
        blocks[0].controls = shared.design.controls;
        out.objective = shared.objective;
        out.report = std::move(shared.report);
        return out;
    }

    SolverConfig inner = options.inner;
    inner.threads = 1;

    // Best recourse block for one scenario given the shared experiments.
    auto recourse = [&](int s, const Matrix& shared) {
        const Term& base = terms[static_cast<std::size_t>(s)];
        Term term = base;
        if (term.prior) {
            if (term.prior->size() == 0) term.prior = Matrix::Zero(model.n_p, model.n_p);
            if (!accumulate_fim(model, as_span(term.p), shared, noise, *term.prior)) term.prior.reset();
        }
        return solve_block(model, {term}, n_r, noise, inner, criterion, Combine::sum, false);
    };

    std::vector<SolveReport> parts;
    Matrix shared(0, model.n_u);
    if (n_e > 0) {
        BoxProblem outer = control_box(model, n_e);
        outer.objective = [&](const Vector& x) {
            const Matrix c = to_controls(x, 0, n_e, model.n_u);
            double total = 0.0;
            for (int s = 0; s < s_count; ++s)
                total += terms[static_cast<std::size_t>(s)].weight * recourse(s, c).objective;
            return total;
        };
        parts.push_back(minimize_boxed(outer, solver));
        shared = sorted_rows(to_controls(parts.back().x_best, 0, n_e, model.n_u));
        blocks[0].controls = shared;
    }
    std::vector<DesignOutcome> rec(static_cast<std::size_t>(s_count));
    for (int s = 0; s < s_count; ++s) {
        if (n_e > 0) {
            rec[static_cast<std::size_t>(s)] = recourse(s, shared);
        } else {
            rec[static_cast<std::size_t>(s)] =
                solve_block(model, {terms[static_cast<std::size_t>(s)]}, n, noise, solver, criterion, Combine::sum);
        }
        blocks[static_cast<std::size_t>(1 + s)].controls = rec[static_cast<std::size_t>(s)].design.controls;
        if (n_e == 0) parts.push_back(rec[static_cast<std::size_t>(s)].report);
    }
    out.objective = two_stage_objective(model, out.design, noise, criterion, prior);
    out.report = n_e > 0 ? parts.front() : merge_reports(parts, staged_decision(out.design), out.objective);
    if (n_e > 0) out.report.f_best = out.objective;
    return out;
}

double two_stage_objective(const ModelSpec& model, const StagedDesign& design, const NoiseModel& noise,
                           const CriterionConfig& criterion, const Design& prior) {
    const ScenarioTree& tree = design.tree;
    if (tree.robust_stages() != 1) throw DomainError("two-stage objective needs a single robust stage");
    double total = 0.0;
    for (int leaf : tree.leaves()) {
        const TreeNode& nd = tree.node(leaf);
        const auto info = prior_information(model, nd.p, prior, noise);
        const double phi = info ? design_criterion(model, as_span(nd.p), design.path_controls(leaf), noise, criterion,
                                                   info->size() ? &*info : nullptr)
                                : criterion.penalty_value;
        total += nd.weight * phi;
    }
    return total;
}

std::string_view to_string(StageAccounting accounting) {
    return accounting == StageAccounting::stagewise ? "stagewise" : "cumulative";
}

StageAccounting stage_accounting_from_string(std::string_view name) {
    if (name == "stagewise") return StageAccounting::stagewise;
    if (name == "cumulative") return StageAccounting::cumulative;
    throw ConfigError("unknown stage accounting '" + std::string(name) + "'");
}

double multi_stage_objective(const ModelSpec& model, const StagedDesign& design, const NoiseModel& noise,
                             const CriterionConfig& criterion, StageAccounting accounting) {
    const ScenarioTree& tree = design.tree;
    double total = 0.0;
    for (std::size_t k = 1; k < tree.nodes().size(); ++k) {
        const TreeNode& nd = tree.nodes()[k];
        const Matrix& controls =
            accounting == StageAccounting::stagewise
                ? design.blocks[static_cast<std::size_t>(design.node_block[k])].controls
                : design.path_controls(static_cast<int>(k));
        total += nd.weight * design_criterion(model, as_span(nd.p), controls, noise, criterion);
    }
    return total;
}

StagedOutcome design_multi_stage(const ModelSpec& model, const ScenarioTree& tree, const NoiseModel& noise,
                                 const SolverConfig& solver, const CriterionConfig& criterion,
                                 StageAccounting accounting) {
    check_common(model, noise, criterion, {});
    if (!tree.strictly_increasing())
        throw InconsistentTree("stage allocations must satisfy 0 < N_e^1 < ... < N_e^{n_r} < N");
    if (tree.node(0).p.size() != model.n_p) throw DomainError("tree realizations have wrong dimension");
    StagedOutcome out;
    out.design = StagedDesign::layout(tree, model.n_u);
    auto& blocks = out.design.blocks;

    if (accounting == StageAccounting::stagewise) {
        std::vector<SolveReport> parts;
        for (auto& block : blocks) {
            std::vector<Term> terms;
            for (int k : block.nodes) terms.push_back({tree.node(k).p, tree.node(k).weight, Matrix()});
            DesignOutcome r = solve_block(model, terms, static_cast<int>(block.controls.rows()), noise, solver,
                                          criterion, Combine::sum);
            block.controls = r.design.controls;
            parts.push_back(std::move(r.report));
        }
        out.objective = multi_stage_objective(model, out.design, noise, criterion, accounting);
        out.report = merge_reports(parts, staged_decision(out.design), out.objective);
        return out;
    }

    BoxProblem problem = control_box(model, out.design.decision_size() / model.n_u);
    problem.objective = [&](const Vector& x) {
        StagedDesign trial = out.design;
        Eigen::Index at = 0;
        for (auto& b : trial.blocks) {
            const int rows = static_cast<int>(b.controls.rows());
            b.controls = to_controls(x, at, rows, model.n_u);
            at += rows * model.n_u;
        }
        return multi_stage_objective(model, trial, noise, criterion, accounting);
    };
    out.report = minimize_boxed(problem, solver);
    Eigen::Index at = 0;
    for (auto& b : blocks) {
        const int rows = static_cast<int>(b.controls.rows());
        b.controls = sorted_rows(to_controls(out.report.x_best, at, rows, model.n_u));
        at += rows * model.n_u;
    }
    out.objective = multi_stage_objective(model, out.design, noise, criterion, accounting);
    return out;
}

std::vector<double> per_scenario_criteria(const ModelSpec& model, const ScenarioSet& scenarios, const Design& design,
                                          const NoiseModel& noise, const CriterionConfig& criterion,
                                          const Design& prior) {
    check_common(model, noise, criterion, prior);
    std::vector<double> out;
    for (const auto& term : scenario_terms(model, scenarios, prior, noise)) {
        out.push_back(term.prior ? design_criterion(model, as_span(term.p), design.controls, noise, criterion,
                                                    term.prior->size() ? &*term.prior : nullptr)
                                 : criterion.penalty_value);
    }
    return out;
}

}  // namespace rdoe
