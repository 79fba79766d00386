#include "support.hpp"

#include "rdoe/config.hpp"
#include "rdoe/errors.hpp"

#include <string>

using namespace rdoe;
using rdoe::test::vec;

namespace {

std::string error_of(std::string_view text) {
    try {
        parse_config(text, "cfg.json");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("every preset resolves, validates and round-trips through JSON") {
    for (const auto& name : preset_names()) {
        CAPTURE(name);
        RunConfig c = preset_config(name);
        const ModelSpec m = find_model(c.model);
        c.resolve(m);
        CHECK_NOTHROW(c.validate(m));
        const std::string json = config_to_json(c);
        const RunConfig back = parse_config(json);
        CHECK(config_to_json(back) == json);
        CHECK(back.preset == name);
    }
}

TEST_CASE("preset contents") {
    const RunConfig c1 = preset_config("case1");
    CHECK(c1.box.lower()[0] == 0.5);
    CHECK(c1.box.upper()[0] == 1.5);
    CHECK(c1.n_total == 2);
    CHECK(c1.n_e == 1);
    CHECK(c1.sigma[0] == doctest::Approx(1.0 / 30.0));
    CHECK(preset_config("case1-wide").box.upper()[0] == 1.75);
    const RunConfig c3 = preset_config("case3");
    CHECK(c3.box.lower() == vec({0.55, 0.1}));
    CHECK(c3.box.upper() == vec({0.9, 0.45}));
    const RunConfig c4 = preset_config("case4");
    CHECK(c4.model == "case4-ctm");
    CHECK(c4.n_total == 6);
    CHECK(c4.n_e == 4);
    CHECK(c4.criterion.scaling == vec({100.0, 1.0, 1.0, 1.0}));
    CHECK_THROWS_AS(preset_config("case5"), ConfigError);
}

TEST_CASE("keys override the preset they name") {
    const RunConfig c = parse_config(R"({"schema": 1, "preset": "case2", "N": 6, "N_e": 3, "strategy": "two_stage"})");
    CHECK(c.model == "case2");
    CHECK(c.n_total == 6);
    CHECK(c.n_e == 3);
    CHECK(c.allocations == std::vector<int>{3});
    CHECK(c.strategy == DesignStrategy::two_stage);
    CHECK(c.p_hat == vec({1.0, 1.0}));
    CHECK(c.scenarios().size() == 9);
    CHECK(c.tree().robust_stages() == 1);
}

TEST_CASE("configuration from scratch") {
    const RunConfig c = parse_config(R"({
        "schema": 1, "model": "case1", "box": {"lower": [0.4], "upper": [1.2]}, "sigma": [0.05],
        "N": 3, "N_e": 1, "allocations": [1, 2],
        "scenarios": {"mode": "corners_center", "weights": [0.25, 0.25, 0.5]},
        "solver": {"n_starts": 3, "seed": 9}, "monte_carlo": {"n_trials": 4, "strategies": ["nominal", "sequential"]}
    })");
    CHECK(c.preset.empty());
    CHECK(c.tree().robust_stages() == 2);
    CHECK(c.scenarios().weights[2] == 0.5);
    CHECK(c.solver.n_starts == 3);
    CHECK(c.solver.seed == 9);
    CHECK(c.n_trials == 4);
    CHECK(c.strategies == std::vector<Strategy>{Strategy::nominal, Strategy::sequential});
    const MonteCarloSetup mc = c.monte_carlo_setup();
    CHECK(mc.n_trials == 4);
    CHECK(mc.n_total == 3);
}

TEST_CASE("configuration errors carry their origin") {
    const std::string syntax = error_of("{\n  \"schema\": 1,\n  \"N\": ,\n}");
    CHECK(syntax.rfind("cfg.json:3:", 0) == 0);
    CHECK(error_of(R"({"schema": 1, "preset": "case1", "bogus": 2})").find("bogus") != std::string::npos);
    CHECK_FALSE(error_of(R"({"preset": "case1"})").empty());
    CHECK_FALSE(error_of(R"({"schema": 2, "preset": "case1"})").empty());
    CHECK_FALSE(error_of(R"({"schema": 1, "preset": "case1", "N": 2, "N_e": 3})").empty());
    CHECK_FALSE(error_of(R"({"schema": 1, "preset": "case1", "sigma": [0.1, 0.2]})").empty());
    CHECK_FALSE(error_of(R"({"schema": 1, "preset": "case1", "N": "two"})").empty());
    CHECK_FALSE(error_of(R"({"schema": 1, "preset": "case1", "model": "case9"})").empty());
    CHECK_FALSE(error_of(R"({"schema": 1, "preset": "case1", "monte_carlo": {"n_trials": 0}})").empty());
    CHECK_FALSE(error_of(R"({"schema": 1, "preset": "case1", "allocations": [1, 1]})").empty());
    CHECK_THROWS_AS(load_config("/nonexistent/run.json"), ConfigError);
}
