#pragma once

#include "rdoe/models.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace rdoe {

/// Minimize `objective` over the box lower <= x <= upper.
struct BoxProblem {
    std::function<double(const Vector&)> objective;
    Vector lower;
    Vector upper;

    int dim() const { return static_cast<int>(lower.size()); }
};

struct SolverConfig {
    int n_starts = 0;           ///< 0 selects the dimension-based default
    int max_iters = 2000;       ///< per start
    double x_tol = 1e-7;        ///< simplex diameter, relative to box width
    double f_tol = 1e-10;       ///< spread of simplex values, relative to |f|
    double initial_step = 0.1;  ///< initial simplex edge, relative to box width
    int restarts = 2;           ///< simplex rebuilds around a converged point
    /// When positive, this many sequence points are scored and the descents
    /// start from the n_starts best of them.
    int screen = 0;
    std::uint64_t seed = 0;
    int threads = 1;
    /// Additional user-supplied start points, tried after the regular starts.
    std::vector<Vector> extra_starts;

    int resolved_starts(int dim) const;
    void validate() const;
};

/// 16 starts up to dimension 4, 32 up to 12, 64 above.
int default_start_count(int dim);

struct LocalMinimum {
    Vector x;
    double f = 0.0;
};

struct SolveReport {
    Vector x_best;
    double f_best = 0.0;
    long n_evals = 0;
    int starts_converged = 0;
    std::vector<LocalMinimum> all_local_minima;
};

/// Multi-start Nelder-Mead with projection onto the box. The first start is
/// the box midpoint; the rest follow a seeded additive-recurrence sequence.
/// Deterministic for a fixed configuration regardless of `threads`.
SolveReport minimize_boxed(const BoxProblem& problem, const SolverConfig& cfg);

/// Single Nelder-Mead descent (with restarts) from `start`. Adds the
/// evaluation count to `n_evals` when given.
LocalMinimum local_minimize(const BoxProblem& problem, const SolverConfig& cfg, const Vector& start,
                            long* n_evals = nullptr);

/// Merges minima closer than `radius` (infinity norm), keeping the lowest f.
SolveReport dedupe_minima(SolveReport report, double radius);

/// Start points used by minimize_boxed (excluding extra_starts).
std::vector<Vector> start_points(const Vector& lower, const Vector& upper, int count, std::uint64_t seed);

/// Lexicographic comparison used for deterministic tie-breaking.
bool lexicographically_less(const Vector& a, const Vector& b);

}  // namespace rdoe
