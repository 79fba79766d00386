#pragma once

#include "rdoe/design.hpp"
#include "rdoe/estimation.hpp"
#include "rdoe/evaluation.hpp"
#include "rdoe/scenarios.hpp"

#include <string>
#include <vector>

namespace rdoe {

/// printf "%.9g"; used for every CSV number.
std::string format_g9(double value);

std::string design_to_json(const Design& design);
std::string staged_design_to_json(const StagedDesign& design);
/// Reads the output of design_to_json.
Design design_from_json(const std::string& text);

struct DesignReport {
    std::string strategy;
    double objective = 0.0;
    SolveReport solve;
    /// Criterion per scenario (one-shot designs); empty otherwise.
    std::vector<double> per_scenario;
    double wall_seconds = 0.0;
};

std::string design_report_to_json(const DesignReport& report);

/// One row per trial and strategy.
std::string trials_csv(const MonteCarloResult& result);
std::string stats_to_json(const MonteCarloResult& result);
std::string boxplot_csv(const std::vector<StrategyStats>& stats);
std::string dominance_csv(const std::vector<DominancePoint>& points, Strategy first, Strategy second);

std::string estimate_to_json(const Estimate& estimate);
/// x,y boundary samples of a two-parameter ellipsoid.
std::string ellipse_csv(const ConfidenceEllipsoid& ellipsoid, int points = 200);

/// Writes through a temporary file and renames it into place.
void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace rdoe
