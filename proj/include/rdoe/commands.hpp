#pragma once

#include "rdoe/config.hpp"
#include "rdoe/errors.hpp"
#include "rdoe/estimation.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace rdoe {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3 };

/// Exit code for a library error: 2 for configuration and input problems,
/// 3 for numerical failures.
int exit_code_for(const Error& error);

/// Writes design.json, design_report.json and meta.json under cfg.output_dir.
void cmd_design(const RunConfig& cfg, std::ostream& out);

/// Writes trials.csv, stats.json, boxplot.csv, dominance.csv and meta.json.
/// Returns kExitNumerical when every trial failed.
int cmd_mc(const RunConfig& cfg, std::ostream& out);

/// Writes estimate.json, ellipse.csv (two parameters) and meta.json.
void cmd_estimate(const RunConfig& cfg, const std::string& dataset_path, std::ostream& out);

/// Persistent state of an interactive protocol run.
struct SessionState {
    RunConfig config;
    std::vector<Measurement> measurements;
};

std::string session_to_json(const SessionState& state, const ProtocolEngine& engine);
SessionState session_from_json(const std::string& text);

/// Rebuilds the engine by replaying the recorded measurements.
ProtocolEngine replay_session(const SessionState& state);

/// Prompt-driven protocol loop. Measurements (one CSV line of outputs per
/// experiment) are read from `in` until the protocol stops or input ends.
/// session.json is rewritten after every accepted measurement.
void cmd_session(SessionState state, std::istream& in, std::ostream& out);

/// Full command-line entry point; returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace rdoe
