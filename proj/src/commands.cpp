#include "rdoe/commands.hpp"

#include "json_util.hpp"
#include "rdoe/parallel.hpp"
#include "rdoe/serialize.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace rdoe {

using detail::json;

int exit_code_for(const Error& error) {
    if (dynamic_cast<const ConfigError*>(&error) || dynamic_cast<const DomainError*>(&error) ||
        dynamic_cast<const UnderdeterminedData*>(&error) || dynamic_cast<const InconsistentTree*>(&error))
        return kExitConfig;
    return kExitNumerical;
}

namespace {

std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (std::filesystem::path(cfg.output_dir) / name).string();
}

void write_meta(const RunConfig& cfg) { write_file(out_path(cfg, "meta.json"), config_to_json(cfg)); }

std::string row_text(const Vector& v) {
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_g9(v[i]);
    return s;
}

void print_rows(std::ostream& out, const Matrix& m, const std::string& indent = "  ") {
    for (Eigen::Index r = 0; r < m.rows(); ++r) out << indent << row_text(m.row(r).transpose()) << '\n';
}

SolverConfig design_solver(const RunConfig& cfg) {
    SolverConfig s = cfg.solver;
    s.threads = resolve_threads(cfg.threads);
    return s;
}

}  // namespace

void cmd_design(const RunConfig& cfg, std::ostream& out) {
    const ModelSpec model = find_model(cfg.model);
    cfg.validate(model);
    write_meta(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    const NoiseModel noise = cfg.noise();
    const SolverConfig solver = design_solver(cfg);
    DesignReport report;
    report.strategy = std::string(to_string(cfg.strategy));
    std::string design_text;
    auto one_shot = [&](const DesignOutcome& r, bool scenarios) {
        design_text = design_to_json(r.design);
        report.objective = r.objective;
        report.solve = r.report;
        if (scenarios)
            report.per_scenario =
                per_scenario_criteria(model, cfg.scenarios(), r.design, noise, cfg.criterion);
        out << to_string(cfg.strategy) << " design (objective " << format_g9(r.objective) << "):\n";
        print_rows(out, r.design.controls);
    };
    auto staged = [&](const StagedOutcome& r) {
        design_text = staged_design_to_json(r.design);
        report.objective = r.objective;
        report.solve = r.report;
        out << to_string(cfg.strategy) << " design (objective " << format_g9(r.objective) << "), shared block:\n";
        print_rows(out, r.design.blocks.front().controls);
    };
    switch (cfg.strategy) {
        case DesignStrategy::nominal:
            one_shot(design_nominal(model, cfg.p_hat, cfg.n_total, noise, solver, cfg.criterion), false);
            break;
        case DesignStrategy::sequential:
            if (cfg.n_e < 1) throw ConfigError("sequential design needs N_e >= 1");
            one_shot(design_nominal(model, cfg.p_hat, cfg.n_e, noise, solver, cfg.criterion), false);
            break;
        case DesignStrategy::minmax:
            one_shot(design_minmax(model, cfg.scenarios(), cfg.n_total, noise, solver, cfg.criterion), true);
            break;
        case DesignStrategy::scenario:
            one_shot(design_scenario(model, cfg.scenarios(), cfg.n_total, noise, solver, cfg.criterion), true);
            break;
        case DesignStrategy::two_stage:
            staged(design_two_stage(model, cfg.scenarios(), cfg.n_total, cfg.n_e, noise, solver, cfg.criterion,
                                    cfg.two_stage));
            break;
        case DesignStrategy::multi_stage:
            staged(design_multi_stage(model, cfg.tree(), noise, solver, cfg.criterion, cfg.accounting));
            break;
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_file(out_path(cfg, "design.json"), design_text);
    write_file(out_path(cfg, "design_report.json"), design_report_to_json(report));
}

int cmd_mc(const RunConfig& cfg, std::ostream& out) {
    const ModelSpec model = find_model(cfg.model);
    cfg.validate(model);
    write_meta(cfg);
    const MonteCarloResult result = monte_carlo_compare(model, cfg.monte_carlo_setup());
    write_file(out_path(cfg, "trials.csv"), trials_csv(result));
    write_file(out_path(cfg, "stats.json"), stats_to_json(result));
    write_file(out_path(cfg, "boxplot.csv"), boxplot_csv(result.stats));
    write_file(out_path(cfg, "dominance.csv"),
               dominance_csv(result.dominance, cfg.dominance.first, cfg.dominance.second));
    out << "strategy        mean loss   relative %   mean loss %\n";
    for (const auto& s : result.stats) {
        std::string name(to_string(s.strategy));
        name.resize(14, ' ');
        out << name << "  " << format_g9(s.loss.mean) << "   " << format_g9(s.relative_pct) << "   "
            << format_g9(s.mean_loss_pct) << '\n';
    }
    if (!result.excluded_trials.empty()) out << result.excluded_trials.size() << " trial(s) excluded\n";
    if (static_cast<int>(result.excluded_trials.size()) == cfg.n_trials) {
        out << "every trial failed\n";
        return kExitNumerical;
    }
    return kExitOk;
}

void cmd_estimate(const RunConfig& cfg, const std::string& dataset_path, std::ostream& out) {
    const ModelSpec model = find_model(cfg.model);
    cfg.validate(model);
    const Dataset data = read_dataset_csv(dataset_path, model, cfg.noise());
    write_meta(cfg);
    SolverConfig solver = cfg.estimation_solver;
    solver.threads = resolve_threads(cfg.threads);
    const Estimate e = least_squares_estimate(model, data, cfg.box, solver, cfg.alpha);
    write_file(out_path(cfg, "estimate.json"), estimate_to_json(e));
    if (model.n_p == 2 && e.ellipsoid) write_file(out_path(cfg, "ellipse.csv"), ellipse_csv(*e.ellipsoid));
    out << "p_hat = " << row_text(e.p_hat) << "\nsse = " << format_g9(e.sse) << '\n';
    if (e.ellipsoid) out << "half-widths = " << row_text(e.ellipsoid->half_widths()) << '\n';
}

std::string session_to_json(const SessionState& state, const ProtocolEngine& engine) {
    json j;
    j["schema"] = kConfigSchema;
    j["config"] = detail::config_json(state.config);
    json ms = json::array();
    for (const auto& m : state.measurements)
        ms.push_back({{"u", detail::vector_json(m.u)}, {"y", detail::vector_json(m.y)}});
    j["measurements"] = ms;
    const ProtocolHistory& h = engine.history();
    json steps = json::array();
    for (const auto& s : h.steps) {
        steps.push_back({{"block", detail::matrix_json(s.block.controls)},
                         {"p_hat", detail::vector_json(s.estimate.p_hat)},
                         {"sse", s.estimate.sse},
                         {"criterion", s.criterion}});
    }
    j["steps"] = steps;
    j["finished"] = engine.finished();
    j["stop_reason"] = h.stop_reason;
    return j.dump(2) + "\n";
}

SessionState session_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("session file: ") + e.what());
    }
    detail::ObjectReader r(j, "session");
    int schema = 0;
    r.read("schema", schema);
    if (schema != kConfigSchema) throw ConfigError("session file: unsupported schema");
    SessionState state;
    if (!r.has("config")) throw ConfigError("session file: missing config");
    detail::apply_config_json(r.raw("config"), state.config);
    const ModelSpec model = find_model(state.config.model);
    state.config.resolve(model);
    state.config.validate(model);
    if (r.has("measurements")) {
        const json& list = r.raw("measurements");
        if (!list.is_array()) throw ConfigError("session file: measurements must be an array");
        for (const auto& m : list) {
            detail::ObjectReader mr(m, "session.measurements");
            Measurement rec;
            mr.read("u", rec.u);
            mr.read("y", rec.y);
            mr.finish();
            state.measurements.push_back(std::move(rec));
        }
    }
    // Derived fields are recomputed by replay.
    for (const char* key : {"steps", "finished", "stop_reason"})
        if (r.has(key)) r.raw(key);
    r.finish();
    return state;
}

ProtocolEngine replay_session(const SessionState& state) {
    const ModelSpec model = find_model(state.config.model);
    ProtocolEngine engine(model, state.config.protocol_config());
    for (std::size_t k = 0; k < state.measurements.size(); ++k) {
        if (engine.finished()) throw ConfigError("session has more measurements than the protocol uses");
        const Vector u = engine.next_control();
        const Measurement& m = state.measurements[k];
        const double scale = std::max(1.0, u.cwiseAbs().maxCoeff());
        if (m.u.size() != u.size() || (m.u - u).cwiseAbs().maxCoeff() > 1e-9 * scale)
            throw ConfigError("session measurement " + std::to_string(k + 1) +
                              " was taken at a control the protocol no longer plans");
        engine.submit(m.y);
    }
    return engine;
}

namespace {

bool parse_measurement(const std::string& line, int n_y, Vector& y, std::string& why) {
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        if (b == std::string::npos) {
            why = "empty field";
            return false;
        }
        const std::string t = cell.substr(b, e - b + 1);
        char* end = nullptr;
        const double v = std::strtod(t.c_str(), &end);
        if (end != t.c_str() + t.size() || !std::isfinite(v)) {
            why = "'" + t + "' is not a finite number";
            return false;
        }
        values.push_back(v);
    }
    if (static_cast<int>(values.size()) != n_y) {
        why = "expected " + std::to_string(n_y) + " value(s), got " + std::to_string(values.size());
        return false;
    }
    y = Eigen::Map<const Vector>(values.data(), n_y);
    return true;
}

void print_step(std::ostream& out, const ProtocolStep& step) {
    out << "estimate p_hat = " << row_text(step.estimate.p_hat) << " (sse " << format_g9(step.estimate.sse)
        << ", criterion " << format_g9(step.criterion) << ")\n";
    if (step.estimate.ellipsoid) {
        out << "confidence box half-widths = " << row_text(step.estimate.ellipsoid->half_widths()) << '\n';
    } else {
        out << "information matrix is singular; no confidence ellipsoid yet\n";
    }
}

}  // namespace

void cmd_session(SessionState state, std::istream& in, std::ostream& out) {
    const ModelSpec model = find_model(state.config.model);
    state.config.validate(model);
    write_meta(state.config);
    ProtocolEngine engine = replay_session(state);
    const std::string session_path = out_path(state.config, "session.json");
    auto save = [&] { write_file(session_path, session_to_json(state, engine)); };
    save();
    if (!state.measurements.empty())
        out << "resumed after " << state.measurements.size() << " measurement(s)\n";

    std::size_t shown_steps = engine.history().steps.size();
    while (!engine.finished()) {
        const Design& block = engine.pending_block();
        if (engine.pending_index() == 0) {
            out << "next block of " << block.size() << " experiment(s):\n";
            print_rows(out, block.controls);
        }
        out << "experiment " << engine.experiments_used() + 1 << " of " << engine.config().n_total
            << ", u = " << row_text(engine.next_control()) << "; enter y: " << std::flush;
        std::string line;
        if (!std::getline(in, line)) {
            out << "\ninput ended; session saved to " << session_path << '\n';
            return;
        }
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') {
            out << '\n';
            continue;
        }
        Vector y;
        std::string why;
        if (!parse_measurement(line, model.n_y, y, why)) {
            out << "\nrejected measurement: " << why << "; try again\n";
            continue;
        }
        const Vector u = engine.next_control();
        engine.submit(y);
        state.measurements.push_back({u, y});
        out << '\n';
        if (engine.history().steps.size() > shown_steps) {
            shown_steps = engine.history().steps.size();
            print_step(out, engine.history().steps.back());
        }
        save();
    }
    out << "protocol finished: " << engine.history().stop_reason << '\n';
    save();
}

namespace {

struct CommonOptions {
    std::string config_path;
    std::string preset;
    std::string out_dir;
    int threads = -1;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("-c,--config", o.config_path, "JSON configuration file");
    cmd->add_option("-p,--preset", o.preset, "built-in case setup (case1, case1-wide, case2, case3, case4)");
    cmd->add_option("-o,--out", o.out_dir, "output directory (overrides output_dir)");
    cmd->add_option("-t,--threads", o.threads, "worker threads, 0 for all cores; RDOE_THREADS wins");
}

RunConfig resolve_config(const CommonOptions& o) {
    RunConfig cfg;
    if (!o.config_path.empty() && !o.preset.empty()) throw ConfigError("give either --config or --preset, not both");
    if (!o.config_path.empty()) {
        cfg = load_config(o.config_path);
    } else if (!o.preset.empty()) {
        cfg = preset_config(o.preset);
    } else {
        throw ConfigError("no configuration: use --config FILE or --preset NAME");
    }
    return cfg;
}

void finalize(RunConfig& cfg, const CommonOptions& o) {
    if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
    if (o.threads >= 0) cfg.threads = o.threads;
    if (const char* env = std::getenv("RDOE_THREADS"); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 0) throw ConfigError("RDOE_THREADS must be a non-negative integer");
        cfg.threads = static_cast<int>(v);
    }
    cfg.threads = resolve_threads(cfg.threads);
    const ModelSpec model = find_model(cfg.model);
    cfg.resolve(model);
    cfg.validate(model);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Robust model-based design of experiments", "rdoe"};
    app.require_subcommand(1);
    CommonOptions design_o, mc_o, est_o, sess_o;

    auto* design = app.add_subcommand("design", "compute one design and write design.json");
    add_common(design, design_o);
    std::string strategy;
    design->add_option("-s,--strategy", strategy,
                       "nominal, sequential, minmax, scenario, two_stage or multi_stage");

    auto* mc = app.add_subcommand("mc", "Monte-Carlo comparison of the strategies");
    add_common(mc, mc_o);

    auto* est = app.add_subcommand("estimate", "least-squares estimate from measured data");
    add_common(est, est_o);
    std::string data_path;
    est->add_option("-d,--data", data_path, "CSV rows u_1..u_nu,y_1..y_ny")->required();

    auto* sess = app.add_subcommand("session", "interactive design-measure-estimate loop");
    add_common(sess, sess_o);
    std::string measurements_path, resume_path;
    sess->add_option("-m,--measurements", measurements_path, "read measurements from a file instead of stdin");
    sess->add_option("-r,--resume", resume_path, "continue from a saved session.json");

    auto* presets = app.add_subcommand("presets", "list built-in case setups");
    auto* show = app.add_subcommand("show-config", "print the fully resolved configuration");
    CommonOptions show_o;
    add_common(show, show_o);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (presets->parsed()) {
            for (const auto& name : preset_names()) out << name << '\n';
            return kExitOk;
        }
        if (show->parsed()) {
            RunConfig cfg = resolve_config(show_o);
            finalize(cfg, show_o);
            out << config_to_json(cfg);
            return kExitOk;
        }
        if (design->parsed()) {
            RunConfig cfg = resolve_config(design_o);
            if (!strategy.empty()) cfg.strategy = design_strategy_from_string(strategy);
            finalize(cfg, design_o);
            cmd_design(cfg, out);
            return kExitOk;
        }
        if (mc->parsed()) {
            RunConfig cfg = resolve_config(mc_o);
            finalize(cfg, mc_o);
            return cmd_mc(cfg, out);
        }
        if (est->parsed()) {
            RunConfig cfg = resolve_config(est_o);
            finalize(cfg, est_o);
            cmd_estimate(cfg, data_path, out);
            return kExitOk;
        }
        if (sess->parsed()) {
            SessionState state;
            if (!resume_path.empty()) {
                state = session_from_json(read_file(resume_path));
                if (!sess_o.config_path.empty() || !sess_o.preset.empty())
                    throw ConfigError("--resume takes the configuration from the session file");
                if (sess_o.out_dir.empty())
                    sess_o.out_dir = std::filesystem::path(resume_path).parent_path().string();
            } else {
                state.config = resolve_config(sess_o);
            }
            finalize(state.config, sess_o);
            if (!measurements_path.empty()) {
                std::ifstream f(measurements_path);
                if (!f) throw ConfigError("cannot open measurements file '" + measurements_path + "'");
                cmd_session(std::move(state), f, out);
            } else {
                cmd_session(std::move(state), in, out);
            }
            return kExitOk;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitOk;
}

}  // namespace rdoe
