#include "support.hpp"

#include "rdoe/commands.hpp"
#include "rdoe/protocols.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace rdoe;
using rdoe::test::vec;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};

CliResult run(std::vector<std::string> args, const std::string& input = "") {
    std::istringstream in(input);
    std::ostringstream out, err;
    CliResult r;
    r.code = run_cli(args, in, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("rdoe_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

/// Exit status of the installed binary.
int run_binary(const std::string& args) {
    const char* cli = std::getenv("RDOE_CLI");
    REQUIRE(cli != nullptr);
    const int status = std::system((std::string(cli) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmallMc = R"({"schema": 1, "preset": "case1", "monte_carlo": {"n_trials": 3, "base_seed": 11},
                           "solver": {"n_starts": 4}})";

}  // namespace

TEST_CASE("exit codes of the binary") {
    const fs::path dir = scratch("codes");
    CHECK(run_binary("presets") == 0);
    CHECK(run_binary("design -p case1 -o " + dir.string()) == 0);
    CHECK(run_binary("design -p nosuch -o " + dir.string()) == 2);
    CHECK(run_binary("design") == 2);
    CHECK(run_binary("frobnicate") == 2);
    spit(dir / "bad.json", R"({"schema": 1, "preset": "case1", "monte_carlo": {"n_trials": 0}})");
    CHECK(run_binary("mc -c " + (dir / "bad.json").string() + " -o " + dir.string()) == 2);
    spit(dir / "broken.json", "{\"schema\": 1,");
    CHECK(run_binary("design -c " + (dir / "broken.json").string()) == 2);
}

TEST_CASE("library errors map to exit codes") {
    CHECK(exit_code_for(ConfigError("x")) == 2);
    CHECK(exit_code_for(DomainError("x")) == 2);
    CHECK(exit_code_for(UnderdeterminedData("x")) == 2);
    CHECK(exit_code_for(InconsistentTree("x")) == 2);
    CHECK(exit_code_for(SingularFim("x")) == 3);
    CHECK(exit_code_for(AllStartsFailed("x")) == 3);
}

TEST_CASE("design writes its artifacts and meta.json reproduces it") {
    const fs::path dir = scratch("design");
    const CliResult r = run({"design", "-p", "case2", "-s", "two_stage", "-o", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("two_stage design") != std::string::npos);
    for (const char* f : {"design.json", "design_report.json", "meta.json"}) CHECK(fs::exists(dir / f));
    const auto design = nlohmann::json::parse(slurp(dir / "design.json"));
    CHECK(design["kind"] == "staged_design");
    CHECK(design["leaf_designs"].size() == 9);

    const fs::path again = scratch("design_again");
    REQUIRE(run({"design", "-c", (dir / "meta.json").string(), "-o", again.string()}).code == 0);
    CHECK(slurp(again / "design.json") == slurp(dir / "design.json"));
}

TEST_CASE("Monte-Carlo reruns are byte-identical") {
    const fs::path dir = scratch("mc");
    spit(dir / "mc.json", kSmallMc);
    REQUIRE(run({"mc", "-c", (dir / "mc.json").string(), "-o", (dir / "a").string()}).code == 0);
    REQUIRE(run({"mc", "-c", (dir / "mc.json").string(), "-o", (dir / "b").string(), "-t", "2"}).code == 0);
    const std::string a = slurp(dir / "a" / "trials.csv");
    CHECK(a.rfind("trial,seed,strategy,", 0) == 0);
    CHECK(a == slurp(dir / "b" / "trials.csv"));
    CHECK(slurp(dir / "a" / "boxplot.csv") == slurp(dir / "b" / "boxplot.csv"));
    for (const char* f : {"stats.json", "dominance.csv", "meta.json"}) CHECK(fs::exists(dir / "a" / f));
    // 3 trials of 5 strategies plus the header.
    CHECK(std::count(a.begin(), a.end(), '\n') == 16);
}

TEST_CASE("estimate from noiseless data and from too little data") {
    const fs::path dir = scratch("estimate");
    const ModelSpec m = make_case2_model();
    std::string csv = "u_1,y_1\n";
    for (double u : {0.3, 1.0, 2.0, 4.0}) {
        std::ostringstream row;
        row.precision(17);
        row << u << ',' << eval_model(m, vec({1.2, 0.8}), vec({u}))[0] << '\n';
        csv += row.str();
    }
    spit(dir / "data.csv", csv);
    REQUIRE(run({"estimate", "-p", "case2", "-d", (dir / "data.csv").string(), "-o", dir.string()}).code == 0);
    const auto est = nlohmann::json::parse(slurp(dir / "estimate.json"));
    CHECK(est["p_hat"][0].get<double>() == doctest::Approx(1.2).epsilon(1e-5));
    CHECK(est["p_hat"][1].get<double>() == doctest::Approx(0.8).epsilon(1e-5));
    CHECK(fs::exists(dir / "ellipse.csv"));

    spit(dir / "one.csv", "u_1,y_1\n1.0,0.5\n");
    const CliResult r = run({"estimate", "-p", "case2", "-d", (dir / "one.csv").string(), "-o", dir.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("error:") == 0);
}

TEST_CASE("piped session follows the sequential protocol") {
    const fs::path dir = scratch("session");
    const CliResult r = run({"session", "-p", "case1", "-o", dir.string()}, "0.55\n# comment\nnot-a-number\n0.6\n");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("rejected measurement") != std::string::npos);
    CHECK(r.out.find("protocol finished: experiment budget exhausted") != std::string::npos);

    RunConfig cfg = preset_config("case1");
    const ModelSpec model = find_model(cfg.model);
    cfg.resolve(model);
    ScriptedSource source({vec({0.55}), vec({0.6})});
    const ProtocolHistory h = run_protocol(model, cfg.protocol_config(), source);
    const SessionState state = session_from_json(slurp(dir / "session.json"));
    REQUIRE(state.measurements.size() == 2);
    CHECK(state.measurements[0].u == h.steps[0].block.controls.row(0).transpose());
    CHECK(state.measurements[1].u == h.steps[1].block.controls.row(0).transpose());
    CHECK(replay_session(state).current_estimate() == h.steps.back().estimate.p_hat);
}

TEST_CASE("an interrupted session resumes where it stopped") {
    const fs::path full = scratch("session_full");
    REQUIRE(run({"session", "-p", "case1", "-o", full.string()}, "0.55\n0.6\n").code == 0);

    const fs::path part = scratch("session_part");
    const CliResult first = run({"session", "-p", "case1", "-o", part.string()}, "0.55\n");
    REQUIRE(first.code == 0);
    CHECK(first.out.find("input ended") != std::string::npos);
    const CliResult second = run({"session", "--resume", (part / "session.json").string()}, "0.6\n");
    REQUIRE(second.code == 0);
    CHECK(second.out.find("resumed after 1 measurement(s)") != std::string::npos);
    const SessionState a = session_from_json(slurp(part / "session.json"));
    const SessionState b = session_from_json(slurp(full / "session.json"));
    REQUIRE(a.measurements.size() == b.measurements.size());
    for (std::size_t k = 0; k < a.measurements.size(); ++k) CHECK(a.measurements[k].u == b.measurements[k].u);
    CHECK(replay_session(a).current_estimate() == replay_session(b).current_estimate());
    CHECK(run({"session", "--resume", (part / "session.json").string(), "-p", "case1"}).code == 2);
}

TEST_CASE("session stops early on the criterion rule") {
    const fs::path dir = scratch("session_stop");
    spit(dir / "cfg.json", R"({"schema": 1, "preset": "case1", "N": 6, "protocol": {"rel_tol": 0.9}})");
    const CliResult r =
        run({"session", "-c", (dir / "cfg.json").string(), "-o", dir.string()}, "0.55\n0.6\n0.62\n0.6\n0.61\n0.6\n");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("protocol finished: criterion improvement below rel_tol") != std::string::npos);
    CHECK(session_from_json(slurp(dir / "session.json")).measurements.size() < 6);
}

TEST_CASE("show-config prints the resolved configuration") {
    const CliResult r = run({"show-config", "-p", "case3"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["model"] == "case3");
    CHECK(j["schema"] == 1);
}
