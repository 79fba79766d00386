#include "rdoe/config.hpp"

#include "json_util.hpp"
#include "rdoe/parallel.hpp"

#include <fstream>
#include <type_traits>
#include <sstream>

namespace rdoe {

namespace detail {

json vector_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_json(m.row(r).transpose()));
    return rows;
}

Vector json_vector(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ConfigError(where + ": expected an array of numbers");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

Matrix json_matrix(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array of rows");
    if (j.empty()) return Matrix(0, 0);
    std::vector<Vector> rows;
    for (const auto& r : j) rows.push_back(json_vector(r, where));
    Matrix m(static_cast<Eigen::Index>(rows.size()), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols()) throw ConfigError(where + ": rows have different lengths");
        m.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
    }
    return m;
}

ObjectReader::ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError((path_.empty() ? std::string("config") : path_) + ": expected an object");
}

const json& ObjectReader::raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
}

namespace {

template <typename T>
T number(const json& v, const std::string& where, const char* what) {
    if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError(where + ": expected " + what);
        return v.get<double>();
    } else {
        if (!v.is_number_integer()) throw ConfigError(where + ": expected " + what);
        if constexpr (std::is_unsigned_v<T>) {
            if (v.is_number_unsigned()) return v.get<T>();
            if (v.get<long long>() < 0) throw ConfigError(where + ": expected " + what);
            return static_cast<T>(v.get<long long>());
        } else {
            return v.get<T>();
        }
    }
}

}  // namespace

void ObjectReader::read(const char* key, int& out) {
    if (has(key)) out = number<int>(raw(key), where(key), "an integer");
}
void ObjectReader::read(const char* key, double& out) {
    if (has(key)) out = number<double>(raw(key), where(key), "a number");
}
void ObjectReader::read(const char* key, std::uint64_t& out) {
    if (has(key)) out = number<std::uint64_t>(raw(key), where(key), "a non-negative integer");
}
void ObjectReader::read(const char* key, bool& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(where(key) + ": expected true or false");
    out = v.get<bool>();
}
void ObjectReader::read(const char* key, std::string& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
    out = v.get<std::string>();
}
void ObjectReader::read(const char* key, Vector& out) {
    if (has(key)) out = json_vector(raw(key), where(key));
}
void ObjectReader::read(const char* key, std::vector<int>& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError(where(key) + ": expected an array of integers");
    out.clear();
    for (const auto& e : v) out.push_back(number<int>(e, where(key), "an array of integers"));
}
void ObjectReader::read(const char* key, std::vector<double>& out) {
    if (!has(key)) return;
    const Vector v = json_vector(raw(key), where(key));
    out.assign(v.data(), v.data() + v.size());
}
void ObjectReader::read(const char* key, std::vector<Vector>& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError(where(key) + ": expected an array of vectors");
    out.clear();
    for (const auto& e : v) out.push_back(json_vector(e, where(key)));
}

void ObjectReader::finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
        if (!seen_.count(it.key())) throw ConfigError("unknown key '" + where(it.key().c_str()) + "'");
    }
}

json solver_json(const SolverConfig& cfg) {
    json j;
    j["n_starts"] = cfg.n_starts;
    j["screen"] = cfg.screen;
    j["max_iters"] = cfg.max_iters;
    j["x_tol"] = cfg.x_tol;
    j["f_tol"] = cfg.f_tol;
    j["initial_step"] = cfg.initial_step;
    j["restarts"] = cfg.restarts;
    j["seed"] = cfg.seed;
    json extra = json::array();
    for (const auto& x : cfg.extra_starts) extra.push_back(vector_json(x));
    j["extra_starts"] = extra;
    return j;
}

namespace {

void read_solver(ObjectReader& parent, const char* key, SolverConfig& cfg) {
    if (!parent.has(key)) return;
    ObjectReader r(parent.raw(key), parent.where(key));
    r.read("n_starts", cfg.n_starts);
    r.read("screen", cfg.screen);
    r.read("max_iters", cfg.max_iters);
    r.read("x_tol", cfg.x_tol);
    r.read("f_tol", cfg.f_tol);
    r.read("initial_step", cfg.initial_step);
    r.read("restarts", cfg.restarts);
    r.read("seed", cfg.seed);
    r.read("extra_starts", cfg.extra_starts);
    r.finish();
}

std::string_view to_string(SingularPolicy p) { return p == SingularPolicy::penalty ? "penalty" : "ridge"; }

SingularPolicy singular_policy_from_string(const std::string& s) {
    if (s == "penalty") return SingularPolicy::penalty;
    if (s == "ridge") return SingularPolicy::ridge;
    throw ConfigError("unknown singular_policy '" + s + "'");
}

std::string_view to_string(DominanceConfig::Sampler s) {
    return s == DominanceConfig::Sampler::grid ? "grid" : "scatter";
}

DominanceConfig::Sampler sampler_from_string(const std::string& s) {
    if (s == "grid") return DominanceConfig::Sampler::grid;
    if (s == "scatter") return DominanceConfig::Sampler::scatter;
    throw ConfigError("unknown dominance sampler '" + s + "'");
}

}  // namespace

json config_json(const RunConfig& cfg) {
    json j;
    j["schema"] = kConfigSchema;
    j["preset"] = cfg.preset;
    j["model"] = cfg.model;
    j["box"] = {{"lower", vector_json(cfg.box.lower())}, {"upper", vector_json(cfg.box.upper())}};
    j["sigma"] = vector_json(cfg.sigma);
    j["N"] = cfg.n_total;
    j["N_e"] = cfg.n_e;
    j["allocations"] = cfg.allocations;
    j["p_hat"] = vector_json(cfg.p_hat);
    json sc;
    sc["mode"] = std::string(to_string(cfg.scenario_mode));
    sc["weights"] = cfg.scenario_weights ? json(*cfg.scenario_weights) : json(nullptr);
    json real = json::array();
    for (const auto& p : cfg.scenario_realizations) real.push_back(vector_json(p));
    sc["realizations"] = real;
    j["scenarios"] = sc;
    j["strategy"] = std::string(to_string(cfg.strategy));
    j["accounting"] = std::string(to_string(cfg.accounting));
    j["criterion"] = {{"scaling", vector_json(cfg.criterion.scaling)},
                      {"singular_policy", std::string(to_string(cfg.criterion.singular_policy))},
                      {"penalty_value", cfg.criterion.penalty_value},
                      {"ridge_epsilon", cfg.criterion.ridge_epsilon}};
    j["alpha"] = cfg.alpha;
    j["solver"] = solver_json(cfg.solver);
    j["estimation_solver"] = solver_json(cfg.estimation_solver);
    j["inner_solver"] = solver_json(cfg.two_stage.inner);
    json mc;
    mc["n_trials"] = cfg.n_trials;
    mc["base_seed"] = cfg.base_seed;
    mc["mode"] = std::string(to_string(cfg.mode));
    json strategies = json::array();
    for (Strategy s : cfg.strategies) strategies.push_back(std::string(to_string(s)));
    mc["strategies"] = strategies;
    json truths = json::array();
    for (const auto& p : cfg.truths) truths.push_back(vector_json(p));
    mc["truths"] = truths;
    mc["dominance"] = {{"enabled", cfg.dominance.enabled},
                       {"first", std::string(to_string(cfg.dominance.first))},
                       {"second", std::string(to_string(cfg.dominance.second))},
                       {"sampler", std::string(to_string(cfg.dominance.sampler))},
                       {"grid_points", cfg.dominance.grid_points}};
    j["monte_carlo"] = mc;
    j["protocol"] = {{"kind", std::string(to_string(cfg.protocol))},
                     {"n_step", cfg.n_step},
                     {"rel_tol", cfg.stop.rel_tol},
                     {"step_tol", cfg.stop.step_tol}};
    j["threads"] = cfg.threads;
    j["output_dir"] = cfg.output_dir;
    return j;
}

void apply_config_json(const json& j, RunConfig& cfg) {
    ObjectReader r(j, "");
    int schema = 0;
    if (!r.has("schema")) throw ConfigError("missing \"schema\": " + std::to_string(kConfigSchema));
    r.read("schema", schema);
    if (schema != kConfigSchema)
        throw ConfigError("unsupported schema " + std::to_string(schema) + " (expected " +
                          std::to_string(kConfigSchema) + ")");
    if (r.has("preset")) {
        std::string name;
        r.read("preset", name);
        if (!name.empty()) cfg = preset_config(name);
    }
    std::string s;
    r.read("model", cfg.model);
    if (r.has("box")) {
        ObjectReader b(r.raw("box"), "box");
        Vector lo = cfg.box.lower(), hi = cfg.box.upper();
        b.read("lower", lo);
        b.read("upper", hi);
        b.finish();
        try {
            cfg.box = ParameterBox(lo, hi);
        } catch (const DomainError& e) {
            throw ConfigError(std::string("box: ") + e.what());
        }
    }
    r.read("sigma", cfg.sigma);
    r.read("N", cfg.n_total);
    r.read("N_e", cfg.n_e);
    r.read("allocations", cfg.allocations);
    r.read("p_hat", cfg.p_hat);
    if (r.has("scenarios")) {
        ObjectReader sc(r.raw("scenarios"), "scenarios");
        if (sc.has("mode")) {
            sc.read("mode", s);
            cfg.scenario_mode = scenario_mode_from_string(s);
        }
        if (sc.has("weights")) {
            if (sc.raw("weights").is_null()) {
                cfg.scenario_weights.reset();
            } else {
                std::vector<double> w;
                sc.read("weights", w);
                cfg.scenario_weights = std::move(w);
            }
        }
        sc.read("realizations", cfg.scenario_realizations);
        sc.finish();
    }
    if (r.has("strategy")) {
        r.read("strategy", s);
        cfg.strategy = design_strategy_from_string(s);
    }
    if (r.has("accounting")) {
        r.read("accounting", s);
        try {
            cfg.accounting = stage_accounting_from_string(s);
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
    }
    if (r.has("criterion")) {
        ObjectReader c(r.raw("criterion"), "criterion");
        c.read("scaling", cfg.criterion.scaling);
        if (c.has("singular_policy")) {
            c.read("singular_policy", s);
            cfg.criterion.singular_policy = singular_policy_from_string(s);
        }
        c.read("penalty_value", cfg.criterion.penalty_value);
        c.read("ridge_epsilon", cfg.criterion.ridge_epsilon);
        c.finish();
    }
    r.read("alpha", cfg.alpha);
    read_solver(r, "solver", cfg.solver);
    read_solver(r, "estimation_solver", cfg.estimation_solver);
    read_solver(r, "inner_solver", cfg.two_stage.inner);
    if (r.has("monte_carlo")) {
        ObjectReader mc(r.raw("monte_carlo"), "monte_carlo");
        mc.read("n_trials", cfg.n_trials);
        mc.read("base_seed", cfg.base_seed);
        if (mc.has("mode")) {
            mc.read("mode", s);
            cfg.mode = evaluation_mode_from_string(s);
        }
        if (mc.has("strategies")) {
            const json& list = mc.raw("strategies");
            if (!list.is_array()) throw ConfigError("monte_carlo.strategies: expected an array of names");
            cfg.strategies.clear();
            for (const auto& e : list) {
                if (!e.is_string()) throw ConfigError("monte_carlo.strategies: expected an array of names");
                cfg.strategies.push_back(strategy_from_string(e.get<std::string>()));
            }
        }
        mc.read("truths", cfg.truths);
        if (mc.has("dominance")) {
            ObjectReader d(mc.raw("dominance"), "monte_carlo.dominance");
            d.read("enabled", cfg.dominance.enabled);
            if (d.has("first")) {
                d.read("first", s);
                cfg.dominance.first = strategy_from_string(s);
            }
            if (d.has("second")) {
                d.read("second", s);
                cfg.dominance.second = strategy_from_string(s);
            }
            if (d.has("sampler")) {
                d.read("sampler", s);
                cfg.dominance.sampler = sampler_from_string(s);
            }
            d.read("grid_points", cfg.dominance.grid_points);
            d.finish();
        }
        mc.finish();
    }
    if (r.has("protocol")) {
        ObjectReader p(r.raw("protocol"), "protocol");
        if (p.has("kind")) {
            p.read("kind", s);
            cfg.protocol = protocol_kind_from_string(s);
        }
        p.read("n_step", cfg.n_step);
        p.read("rel_tol", cfg.stop.rel_tol);
        p.read("step_tol", cfg.stop.step_tol);
        p.finish();
    }
    r.read("threads", cfg.threads);
    r.read("output_dir", cfg.output_dir);
    r.finish();
}

}  // namespace detail

std::string_view to_string(DesignStrategy strategy) {
    switch (strategy) {
        case DesignStrategy::nominal: return "nominal";
        case DesignStrategy::sequential: return "sequential";
        case DesignStrategy::minmax: return "minmax";
        case DesignStrategy::scenario: return "scenario";
        case DesignStrategy::two_stage: return "two_stage";
        case DesignStrategy::multi_stage: return "multi_stage";
    }
    return "nominal";
}

DesignStrategy design_strategy_from_string(std::string_view name) {
    if (name == "multi_stage" || name == "multi-stage") return DesignStrategy::multi_stage;
    switch (strategy_from_string(name)) {
        case Strategy::nominal: return DesignStrategy::nominal;
        case Strategy::sequential: return DesignStrategy::sequential;
        case Strategy::minmax: return DesignStrategy::minmax;
        case Strategy::scenario: return DesignStrategy::scenario;
        case Strategy::two_stage: return DesignStrategy::two_stage;
    }
    return DesignStrategy::nominal;
}

namespace {

Vector vec(std::initializer_list<double> values) {
    Vector v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v[i++] = x;
    return v;
}

RunConfig case1(double delta) {
    RunConfig c;
    c.model = "case1";
    c.box = ParameterBox(vec({1.0 - delta}), vec({1.0 + delta}));
    c.sigma = vec({0.1 / 3.0});
    c.n_total = 2;
    c.n_e = 1;
    return c;
}

}  // namespace

RunConfig preset_config(std::string_view name) {
    RunConfig c;
    if (name == "case1") {
        c = case1(0.5);
    } else if (name == "case1-wide") {
        c = case1(0.75);
    } else if (name == "case2") {
        c.model = "case2";
        c.box = ParameterBox(vec({0.5, 0.5}), vec({1.5, 1.5}));
        c.sigma = vec({0.1 / 3.0});
        c.n_total = 4;
        c.n_e = 2;
    } else if (name == "case3") {
        c.model = "case3";
        c.box = ParameterBox(vec({0.55, 0.1}), vec({0.9, 0.45}));
        c.sigma = vec({0.1 / 3.0});
        c.n_total = 4;
        c.n_e = 2;
    } else if (name == "case4") {
        c.model = "case4-ctm";
        c.box = ParameterBox(vec({1.0, 300.0, 283.0, 318.0}), vec({2.0, 320.0, 293.0, 328.0}));
        c.sigma = vec({0.1});
        c.n_total = 6;
        c.n_e = 4;
        c.criterion.scaling = vec({100.0, 1.0, 1.0, 1.0});
        c.n_trials = 1;
        c.truths = {vec({1.396, 313.25, 289.40, 320.23})};
        c.dominance.enabled = false;
        c.solver.screen = 128;
        c.solver.n_starts = 8;
        c.solver.restarts = 1;
    } else {
        throw ConfigError("unknown preset '" + std::string(name) + "'");
    }
    c.preset = std::string(name);
    return c;
}

std::vector<std::string> preset_names() { return {"case1", "case1-wide", "case2", "case3", "case4"}; }

void RunConfig::resolve(const ModelSpec& model) {
    if (criterion.scaling.size() == 0) criterion.scaling = Vector::Ones(model.n_p);
    if (p_hat.size() == 0 && box.dim() > 0) p_hat = box.midpoint();
    if (allocations.empty()) allocations = {n_e};
    if (n_step == 0) n_step = n_e;
}

void RunConfig::validate(const ModelSpec& model) const {
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (box.dim() != model.n_p)
        fail("box has dimension " + std::to_string(box.dim()) + " but model '" + model.id + "' has " +
             std::to_string(model.n_p) + " parameters");
    if (sigma.size() != model.n_y) fail("sigma must list one standard deviation per model output");
    try {
        NoiseModel check(sigma);
    } catch (const DomainError& e) {
        fail(std::string("sigma: ") + e.what());
    }
    if (n_total < 1) fail("N must be at least 1");
    if (n_e < 0 || n_e > n_total) fail("N_e must satisfy 0 <= N_e <= N");
    if (p_hat.size() != model.n_p || !p_hat.allFinite()) fail("p_hat must have one finite entry per parameter");
    if (strategy == DesignStrategy::multi_stage || allocations.size() > 1) {
        int prev = 0;
        for (int a : allocations) {
            if (a <= prev || a > n_total) fail("allocations must be strictly increasing within 1..N");
            prev = a;
        }
    }
    if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha must be in (0, 1)");
    if (n_trials < 1) fail("monte_carlo.n_trials must be at least 1");
    if (!truths.empty() && static_cast<int>(truths.size()) != n_trials)
        fail("monte_carlo.truths must list one vector per trial");
    for (const auto& p : truths)
        if (p.size() != model.n_p) fail("monte_carlo.truths entry has wrong dimension");
    if (strategies.empty()) fail("monte_carlo.strategies must not be empty");
    if (dominance.grid_points < 2) fail("monte_carlo.dominance.grid_points must be at least 2");
    if (n_step < 1 || n_step > n_total) fail("protocol.n_step must satisfy 1 <= n_step <= N");
    if (stop.rel_tol < 0.0 || stop.step_tol < 0.0) fail("protocol tolerances must be non-negative");
    if (threads < 0) fail("threads must be non-negative");
    for (const auto& p : scenario_realizations)
        if (p.size() != model.n_p) fail("scenario realization has wrong dimension");
    try {
        criterion.validate(model.n_p);
        solver.validate();
        estimation_solver.validate();
        two_stage.inner.validate();
        for (const auto& x : solver.extra_starts)
            if (x.size() % model.n_u != 0) fail("solver.extra_starts entry has wrong dimension");
        scenarios().validate();
    } catch (const DomainError& e) {
        fail(e.what());
    }
}

ScenarioSet RunConfig::scenarios() const {
    if (scenario_realizations.empty()) return sample_scenarios(box, scenario_mode, scenario_weights);
    ScenarioSet set = ScenarioSet::uniform(scenario_realizations);
    if (scenario_weights) {
        if (scenario_weights->size() != scenario_realizations.size())
            throw DomainError("scenario weights and realizations differ in length");
        set.weights = *scenario_weights;
    }
    return set;
}

ScenarioTree RunConfig::tree() const {
    const ScenarioSet set = scenarios();
    if (allocations.size() == 1) return ScenarioTree::two_stage(set, allocations.front(), n_total);
    return ScenarioTree::from_stage_sets(p_hat, std::vector<ScenarioSet>(allocations.size(), set), allocations,
                                         n_total);
}

MonteCarloSetup RunConfig::monte_carlo_setup() const {
    MonteCarloSetup s;
    s.box = box;
    s.noise = noise();
    s.n_total = n_total;
    s.n_e = n_e;
    s.scenarios = scenarios();
    s.scenario_mode = scenario_mode;
    s.strategies = strategies;
    s.n_trials = n_trials;
    s.base_seed = base_seed;
    s.mode = mode;
    s.solver = solver;
    s.estimation_solver = estimation_solver;
    s.criterion = criterion;
    s.two_stage = two_stage;
    s.p_hat0 = p_hat;
    s.truths = truths;
    s.dominance = dominance;
    s.threads = resolve_threads(threads);
    s.alpha = alpha;
    return s;
}

ProtocolConfig RunConfig::protocol_config() const {
    ProtocolConfig p;
    p.kind = protocol;
    p.n_total = n_total;
    p.n_step = n_step > 0 ? n_step : n_e;
    p.box = box;
    p.p_hat0 = p_hat;
    p.noise = noise();
    p.design_solver = solver;
    p.design_solver.threads = resolve_threads(threads);
    p.estimation_solver = estimation_solver;
    p.estimation_solver.threads = resolve_threads(threads);
    p.criterion = criterion;
    p.two_stage = two_stage;
    p.scenario_mode = scenario_mode;
    p.scenarios = scenarios();
    p.stop = stop;
    p.alpha = alpha;
    return p;
}

namespace {

std::string position(std::string_view text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min(byte > 0 ? byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return std::to_string(line) + ":" + std::to_string(col);
}

}  // namespace

RunConfig parse_config(std::string_view text, std::string_view origin) {
    detail::json j;
    try {
        j = detail::json::parse(text.begin(), text.end());
    } catch (const detail::json::parse_error& e) {
        std::string what = e.what();
        // Drop the library's "[json.exception.parse_error.101] parse error at line 1, column 2: " prefix.
        if (const auto colon = what.find(": "); colon != std::string::npos) what = what.substr(colon + 2);
        throw ConfigError(std::string(origin) + ":" + position(text, e.byte) + ": invalid JSON: " + what);
    }
    RunConfig cfg;
    try {
        detail::apply_config_json(j, cfg);
        const ModelSpec model = find_model(cfg.model);
        cfg.resolve(model);
        cfg.validate(model);
    } catch (const ConfigError& e) {
        throw ConfigError(std::string(origin) + ": " + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(std::string(origin) + ": " + e.what());
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

std::string config_to_json(const RunConfig& cfg) { return detail::config_json(cfg).dump(2) + "\n"; }

}  // namespace rdoe
