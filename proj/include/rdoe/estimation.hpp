#pragma once

#include "rdoe/design_types.hpp"
#include "rdoe/models.hpp"
#include "rdoe/optimizer.hpp"
#include "rdoe/random.hpp"
#include "rdoe/statistics.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rdoe {

struct Measurement {
    Vector u;
    Vector y;
};

struct Dataset {
    std::vector<Measurement> records;
    NoiseModel noise;

    int size() const { return static_cast<int>(records.size()); }
    Design design() const;
    void validate(const ModelSpec& model) const;
};

struct Estimate {
    Vector p_hat;
    double sse = 0.0;
    Fim fim_at_estimate;
    /// Absent when the information matrix at the estimate is singular.
    std::optional<ConfidenceEllipsoid> ellipsoid;
    SolveReport report;
};

/// Weighted sum of squared residuals sum sigma_i^-2 (y_i - F_i(p, u))^2.
double weighted_sse(const ModelSpec& model, const Dataset& data, const Vector& p);

/// Weighted least-squares estimate confined to `box`.
Estimate least_squares_estimate(const ModelSpec& model, const Dataset& data, const ParameterBox& box,
                                const SolverConfig& cfg, double alpha = kTwoSigmaAlpha);

/// Estimate record for a known parameter vector (revealed-truth evaluation).
Estimate estimate_at(const ModelSpec& model, const Dataset& data, const Vector& p, double alpha = kTwoSigmaAlpha);

/// y = F(p_true, u) + eps with eps ~ N(0, diag(sigma^2)) drawn from Rng(seed).
Vector simulate_measurement(const ModelSpec& model, const Vector& p_true, const Vector& u, const NoiseModel& noise,
                            std::uint64_t rng_seed);

/// Noise-free output plus the next n_y normals of `rng`, scaled by sigma.
Vector simulate_measurement(const ModelSpec& model, const Vector& p_true, const Vector& u, const NoiseModel& noise,
                            Rng& rng);

/// Reads `u_1..u_nu,y_1..y_ny` CSV rows. Throws ConfigError on malformed input.
Dataset read_dataset_csv(const std::string& path, const ModelSpec& model, const NoiseModel& noise);

}  // namespace rdoe
