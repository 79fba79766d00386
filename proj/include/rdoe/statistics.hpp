#pragma once

#include "rdoe/design_types.hpp"
#include "rdoe/models.hpp"

#include <vector>

namespace rdoe {

/// Fisher information matrix sum_tau Q^T diag(sigma)^-2 Q and the number of
/// measurements it aggregates.
struct Fim {
    Matrix matrix;
    int n_obs = 0;
};

enum class SingularPolicy { penalty, ridge };

struct CriterionConfig {
    Vector scaling;  ///< empty means unit weights
    SingularPolicy singular_policy = SingularPolicy::penalty;
    double penalty_value = 1e18;
    double ridge_epsilon = 1e-12;  ///< relative to trace(FIM)

    void validate(int n_p) const;
};

struct CriterionValue {
    double value = 0.0;
    bool singular = false;     ///< reciprocal condition below threshold
    bool regularized = false;  ///< ridge was applied
};

/// Exact 1-norm reciprocal condition number below which a FIM is treated
/// as singular. A FIM whose Cholesky factorization fails is singular too.
inline constexpr double kSingularRcond = 1e-12;

Fim assemble_fim(const ModelSpec& model, const Vector& p_hat, const Design& design, const NoiseModel& noise);

/// Adds the information of `controls` (row per experiment) evaluated at `p`
/// onto `fim`. Returns false if any control is inadmissible for the model.
bool accumulate_fim(const ModelSpec& model, std::span<const double> p, const Matrix& controls,
                    const NoiseModel& noise, Matrix& fim);

/// Sum_i scaling_i (FIM^-1)_ii with the configured singularity policy.
CriterionValue a_criterion(const Matrix& fim, const CriterionConfig& cfg);
inline CriterionValue a_criterion(const Fim& fim, const CriterionConfig& cfg) {
    return a_criterion(fim.matrix, cfg);
}

/// Criterion of the design at `p`, penalty-valued on inadmissible points.
double design_criterion(const ModelSpec& model, std::span<const double> p, const Matrix& controls,
                        const NoiseModel& noise, const CriterionConfig& cfg, const Matrix* prior_fim = nullptr);

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
double regularized_gamma_q(double a, double x);

/// Upper-alpha quantile of the chi-squared distribution with `dof` degrees
/// of freedom, by bisection on the incomplete gamma function.
double chi2_quantile(double alpha, int dof);

/// {p : (p - center)^T shape (p - center) <= level}
struct ConfidenceEllipsoid {
    Vector center;
    Matrix shape;
    double level = 0.0;
    double alpha = 0.0;

    bool contains(const Vector& p) const;
    /// Semi-axis lengths, ascending.
    Vector semi_axes() const;
    /// Half-widths of the axis-aligned bounding box.
    Vector half_widths() const;
    /// Boundary polyline for two-parameter ellipsoids; `points` samples,
    /// the first point is not repeated at the end.
    std::vector<Vector> boundary(int points) const;
};

/// Default upper-tail probability: the two-sided two-sigma tail for one dof.
inline constexpr double kTwoSigmaAlpha = 0.0455;

ConfidenceEllipsoid confidence_ellipsoid(const Fim& fim, const Vector& p_hat, double alpha);

}  // namespace rdoe
