#include "rdoe/serialize.hpp"

#include "json_util.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace rdoe {

using detail::json;
using detail::matrix_json;
using detail::vector_json;

std::string format_g9(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

namespace {

json design_json(const Design& d) {
    json j;
    j["kind"] = "design";
    j["n_u"] = d.n_u();
    j["controls"] = matrix_json(d.controls);
    j["stage_marks"] = d.stage_marks;
    return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string design_to_json(const Design& design) { return dump(design_json(design)); }

std::string staged_design_to_json(const StagedDesign& design) {
    const ScenarioTree& tree = design.tree;
    json j;
    j["kind"] = "staged_design";
    j["total"] = tree.total_experiments();
    j["allocations"] = tree.allocations();
    json nodes = json::array();
    for (const auto& n : tree.nodes())
        nodes.push_back({{"stage", n.stage}, {"parent", n.parent}, {"p", vector_json(n.p)}, {"weight", n.weight}});
    j["nodes"] = nodes;
    json blocks = json::array();
    for (const auto& b : design.blocks)
        blocks.push_back({{"stage", b.stage}, {"nodes", b.nodes}, {"controls", matrix_json(b.controls)}});
    j["blocks"] = blocks;
    json leaves = json::array();
    for (int leaf : tree.leaves()) {
        const Design d = design.flatten(leaf);
        leaves.push_back({{"node", leaf}, {"controls", matrix_json(d.controls)}, {"stage_marks", d.stage_marks}});
    }
    j["leaf_designs"] = leaves;
    return dump(j);
}

Design design_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("design file: ") + e.what());
    }
    detail::ObjectReader r(j, "design");
    std::string kind;
    r.read("kind", kind);
    if (kind != "design") throw ConfigError("design file: expected kind \"design\"");
    int n_u = 0;
    r.read("n_u", n_u);
    Design d;
    d.controls = r.has("controls") ? detail::json_matrix(r.raw("controls"), "design.controls") : Matrix(0, n_u);
    if (d.controls.size() == 0) d.controls.resize(0, n_u);
    if (d.controls.cols() != n_u) throw ConfigError("design file: controls do not match n_u");
    r.read("stage_marks", d.stage_marks);
    r.finish();
    return d;
}

std::string design_report_to_json(const DesignReport& report) {
    json j;
    j["strategy"] = report.strategy;
    j["objective"] = report.objective;
    j["n_evals"] = report.solve.n_evals;
    j["starts_converged"] = report.solve.starts_converged;
    json minima = json::array();
    for (const auto& m : report.solve.all_local_minima) minima.push_back({{"x", vector_json(m.x)}, {"f", m.f}});
    j["local_minima"] = minima;
    j["per_scenario"] = report.per_scenario;
    j["timings"] = {{"wall_seconds", report.wall_seconds}};
    return dump(j);
}

namespace {

std::string controls_field(const Design& d) {
    std::string s;
    for (int t = 0; t < d.size(); ++t) {
        for (int j = 0; j < d.n_u(); ++j) {
            if (!s.empty()) s += j == 0 ? ";" : " ";
            s += format_g9(d.controls(t, j));
        }
    }
    return s;
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::string trials_csv(const MonteCarloResult& result) {
    std::ostringstream out;
    const Eigen::Index n_p = result.records.empty() ? 0 : result.records.front().p_true.size();
    out << "trial,seed,strategy";
    for (Eigen::Index i = 0; i < n_p; ++i) out << ",p" << (i + 1);
    out << ",phi_applied,phi_star,loss,loss_pct,excluded,applied,error\n";
    for (const auto& r : result.records) {
        out << r.trial_id << ',' << r.seed << ',' << to_string(r.strategy);
        for (Eigen::Index i = 0; i < n_p; ++i) out << ',' << format_g9(r.p_true[i]);
        out << ',' << format_g9(r.phi_applied) << ',' << format_g9(r.phi_star) << ',' << format_g9(r.loss) << ','
            << format_g9(100.0 * r.loss / r.phi_star) << ',' << (r.excluded ? 1 : 0) << ','
            << controls_field(r.applied) << ',' << csv_quote(r.error) << '\n';
    }
    return out.str();
}

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json box_json(const BoxSummary& b) {
    json outliers = json::array();
    for (double v : b.outliers) outliers.push_back(number_or_null(v));
    return {{"count", b.count},           {"mean", number_or_null(b.mean)},
            {"min", number_or_null(b.min)}, {"q1", number_or_null(b.q1)},
            {"median", number_or_null(b.median)}, {"q3", number_or_null(b.q3)},
            {"max", number_or_null(b.max)}, {"whisker_low", number_or_null(b.whisker_low)},
            {"whisker_high", number_or_null(b.whisker_high)}, {"outliers", outliers}};
}

}  // namespace

std::string stats_to_json(const MonteCarloResult& result) {
    json j;
    json strategies = json::array();
    for (const auto& s : result.stats) {
        strategies.push_back({{"strategy", std::string(to_string(s.strategy))},
                              {"loss", box_json(s.loss)},
                              {"relative_pct", number_or_null(s.relative_pct)},
                              {"mean_loss_pct", number_or_null(s.mean_loss_pct)}});
    }
    j["strategies"] = strategies;
    j["excluded_trials"] = result.excluded_trials;
    json scen = json::array();
    for (int s = 0; s < result.scenarios.size(); ++s)
        scen.push_back({{"p", vector_json(result.scenarios.realizations[static_cast<std::size_t>(s)])},
                        {"weight", result.scenarios.weights[static_cast<std::size_t>(s)]}});
    j["scenarios"] = scen;
    json designs;
    const auto& d = result.designs;
    if (d.nominal) designs["nominal"] = matrix_json(d.nominal->design.controls);
    if (d.minmax) designs["minmax"] = matrix_json(d.minmax->design.controls);
    if (d.scenario) designs["scenario"] = matrix_json(d.scenario->design.controls);
    if (d.sequential_first) designs["sequential_first_block"] = matrix_json(d.sequential_first->design.controls);
    if (d.two_stage) designs["two_stage_shared_block"] = matrix_json(d.two_stage->design.blocks.front().controls);
    j["one_shot_designs"] = designs.is_null() ? json::object() : designs;
    return dump(j);
}

std::string boxplot_csv(const std::vector<StrategyStats>& stats) {
    std::ostringstream out;
    out << "strategy,count,mean,min,whisker_low,q1,median,q3,whisker_high,max,outliers,relative_pct,mean_loss_pct\n";
    for (const auto& s : stats) {
        const BoxSummary& b = s.loss;
        out << to_string(s.strategy) << ',' << b.count << ',' << format_g9(b.mean) << ',' << format_g9(b.min) << ','
            << format_g9(b.whisker_low) << ',' << format_g9(b.q1) << ',' << format_g9(b.median) << ','
            << format_g9(b.q3) << ',' << format_g9(b.whisker_high) << ',' << format_g9(b.max) << ','
            << b.outliers.size() << ',' << format_g9(s.relative_pct) << ',' << format_g9(s.mean_loss_pct) << '\n';
    }
    return out.str();
}

std::string dominance_csv(const std::vector<DominancePoint>& points, Strategy first, Strategy second) {
    std::ostringstream out;
    const Eigen::Index n_p = points.empty() ? 0 : points.front().p_true.size();
    for (Eigen::Index i = 0; i < n_p; ++i) out << 'p' << (i + 1) << ',';
    out << to_string(first) << "_loss," << to_string(second) << "_loss,difference\n";
    for (const auto& pt : points) {
        for (Eigen::Index i = 0; i < n_p; ++i) out << format_g9(pt.p_true[i]) << ',';
        out << format_g9(pt.first_loss) << ',' << format_g9(pt.second_loss) << ',' << format_g9(pt.difference) << '\n';
    }
    return out.str();
}

std::string estimate_to_json(const Estimate& e) {
    json j;
    j["p_hat"] = vector_json(e.p_hat);
    j["sse"] = e.sse;
    j["n_obs"] = e.fim_at_estimate.n_obs;
    j["fim"] = matrix_json(e.fim_at_estimate.matrix);
    if (e.ellipsoid) {
        j["ellipsoid"] = {{"alpha", e.ellipsoid->alpha},
                          {"level", e.ellipsoid->level},
                          {"shape", matrix_json(e.ellipsoid->shape)},
                          {"semi_axes", vector_json(e.ellipsoid->semi_axes())},
                          {"half_widths", vector_json(e.ellipsoid->half_widths())}};
    } else {
        j["ellipsoid"] = nullptr;
    }
    j["n_evals"] = e.report.n_evals;
    return dump(j);
}

std::string ellipse_csv(const ConfidenceEllipsoid& ellipsoid, int points) {
    std::ostringstream out;
    out << "p1,p2\n";
    for (const auto& p : ellipsoid.boundary(points)) out << format_g9(p[0]) << ',' << format_g9(p[1]) << '\n';
    return out.str();
}

void write_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = fs::path(path + ".tmp");
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw ConfigError("cannot write '" + tmp.string() + "'");
        f << content;
        if (!f) throw ConfigError("cannot write '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace rdoe
