#include "rdoe/statistics.hpp"

#include "rdoe/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace rdoe {

namespace {

template <int MaxN>
using SmallMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, MaxN, MaxN>;

// Inverse of a symmetric positive semi-definite matrix through Cholesky,
// with the exact 1-norm reciprocal condition number. Returns false when the
// factorization breaks down.
template <typename M>
bool spd_inverse(const M& a, M& inv, double& rcond) {
    const Eigen::Index n = a.rows();
    rcond = 0.0;
    Eigen::LLT<M> llt(a);
    if (llt.info() != Eigen::Success) return false;
    inv = llt.solve(M::Identity(n, n));
    if (!inv.allFinite()) return false;
    const double norm_a = a.cwiseAbs().colwise().sum().maxCoeff();
    const double norm_inv = inv.cwiseAbs().colwise().sum().maxCoeff();
    rcond = 1.0 / (norm_a * norm_inv);
    return std::isfinite(rcond);
}

template <typename M>
CriterionValue criterion_impl(const M& fim, const CriterionConfig& cfg) {
    const Eigen::Index n = fim.rows();
    auto weight = [&](Eigen::Index i) { return cfg.scaling.size() == 0 ? 1.0 : cfg.scaling[i]; };

    CriterionValue out;
    if (n == 0) return out;
    M inv(n, n);
    double rc = 0.0;
    if (spd_inverse(fim, inv, rc) && rc >= kSingularRcond) {
        for (Eigen::Index i = 0; i < n; ++i) out.value += weight(i) * inv(i, i);
        return out;
    }
    out.singular = true;
    if (cfg.singular_policy == SingularPolicy::penalty) {
        out.value = cfg.penalty_value;
        return out;
    }
    const double trace = fim.trace();
    const double eps = cfg.ridge_epsilon * (trace > 0.0 ? trace : 1.0);
    M ridged = fim;
    ridged.diagonal().array() += eps;
    if (!spd_inverse(ridged, inv, rc)) inv = Eigen::FullPivLU<M>(ridged).inverse();
    for (Eigen::Index i = 0; i < n; ++i) out.value += weight(i) * inv(i, i);
    out.regularized = true;
    return out;
}

template <typename M>
bool accumulate_impl(const ModelSpec& model, std::span<const double> p, const Matrix& controls,
                     const NoiseModel& noise, M& fim) {
    const int n_p = model.n_p;
    const int n_y = model.n_y;
    const int n_u = model.n_u;
    std::array<double, 64> q_small{};
    std::vector<double> q_large;
    std::span<double> q;
    if (n_p * n_y <= 64) {
        q = std::span<double>(q_small.data(), static_cast<std::size_t>(n_p * n_y));
    } else {
        q_large.resize(static_cast<std::size_t>(n_p * n_y));
        q = q_large;
    }
    std::array<double, 16> u_small{};
    std::vector<double> u_large;
    std::span<double> u;
    if (n_u <= 16) {
        u = std::span<double>(u_small.data(), static_cast<std::size_t>(n_u));
    } else {
        u_large.resize(static_cast<std::size_t>(n_u));
        u = u_large;
    }
    const Vector& sigma = noise.sigma();
    for (Eigen::Index t = 0; t < controls.rows(); ++t) {
        for (int k = 0; k < n_u; ++k) u[static_cast<std::size_t>(k)] = controls(t, k);
        if (!sensitivity_into(model, p, u, q)) return false;
        for (int i = 0; i < n_y; ++i) {
            const double w = 1.0 / (sigma[i] * sigma[i]);
            const double* row = q.data() + static_cast<std::ptrdiff_t>(i) * n_p;
            for (int a = 0; a < n_p; ++a) {
                const double wa = w * row[a];
                for (int b = a; b < n_p; ++b) fim(a, b) += wa * row[b];
            }
        }
    }
    for (int a = 0; a < n_p; ++a)
        for (int b = a + 1; b < n_p; ++b) fim(b, a) = fim(a, b);
    return true;
}

template <typename M>
double design_criterion_impl(const ModelSpec& model, std::span<const double> p, const Matrix& controls,
                             const NoiseModel& noise, const CriterionConfig& cfg, const Matrix* prior) {
    M fim(model.n_p, model.n_p);
    if (prior)
        fim = *prior;
    else
        fim.setZero();
    if (!accumulate_impl(model, p, controls, noise, fim)) return cfg.penalty_value;
    return criterion_impl(fim, cfg).value;
}

void check_noise(const ModelSpec& model, const NoiseModel& noise) {
    if (noise.dim() != model.n_y)
        throw DomainError("noise model has " + std::to_string(noise.dim()) + " outputs, model '" + model.id +
                          "' has " + std::to_string(model.n_y));
}

// Series expansion of the regularized lower incomplete gamma P(a, x).
double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 10000; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for Q(a, x), valid for x > a + 1.
double gamma_q_continued_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

void CriterionConfig::validate(int n_p) const {
    if (scaling.size() != 0) {
        if (scaling.size() != n_p)
            throw DomainError("criterion scaling has " + std::to_string(scaling.size()) + " entries, expected " +
                              std::to_string(n_p));
        for (Eigen::Index i = 0; i < scaling.size(); ++i)
            if (!(scaling[i] > 0.0)) throw DomainError("criterion scaling must be strictly positive");
    }
    if (!(penalty_value > 0.0)) throw DomainError("penalty value must be positive");
    if (!(ridge_epsilon > 0.0)) throw DomainError("ridge epsilon must be positive");
}

bool accumulate_fim(const ModelSpec& model, std::span<const double> p, const Matrix& controls,
                    const NoiseModel& noise, Matrix& fim) {
    return accumulate_impl(model, p, controls, noise, fim);
}

Fim assemble_fim(const ModelSpec& model, const Vector& p_hat, const Design& design, const NoiseModel& noise) {
    check_noise(model, noise);
    if (p_hat.size() != model.n_p) throw DomainError("parameter vector has wrong dimension");
    if (!design.empty() && design.n_u() != model.n_u) throw DomainError("design has wrong control dimension");
    Fim out{Matrix::Zero(model.n_p, model.n_p), design.size()};
    const std::span<const double> p(p_hat.data(), static_cast<std::size_t>(p_hat.size()));
    if (!accumulate_impl(model, p, design.controls, noise, out.matrix)) {
        // Re-evaluate row by row so the exception names the offending control.
        for (int t = 0; t < design.size(); ++t) eval_sensitivity(model, p_hat, design.controls.row(t).transpose());
        throw SingularModelPoint("model '" + model.id + "' is singular on the design");
    }
    return out;
}

CriterionValue a_criterion(const Matrix& fim, const CriterionConfig& cfg) {
    if (fim.rows() != fim.cols()) throw DomainError("information matrix must be square");
    if (cfg.scaling.size() != 0 && cfg.scaling.size() != fim.rows())
        throw DomainError("criterion scaling does not match the information matrix");
    if (fim.rows() <= 8) return criterion_impl(SmallMatrix<8>(fim), cfg);
    return criterion_impl(fim, cfg);
}

double design_criterion(const ModelSpec& model, std::span<const double> p, const Matrix& controls,
                        const NoiseModel& noise, const CriterionConfig& cfg, const Matrix* prior_fim) {
    if (model.n_p <= 8) return design_criterion_impl<SmallMatrix<8>>(model, p, controls, noise, cfg, prior_fim);
    return design_criterion_impl<Matrix>(model, p, controls, noise, cfg, prior_fim);
}

double regularized_gamma_q(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0)) throw DomainError("incomplete gamma requires a > 0 and x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_continued_fraction(a, x);
}

double chi2_quantile(double alpha, int dof) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("chi-squared quantile needs 0 < alpha < 1");
    if (dof < 1) throw DomainError("chi-squared quantile needs dof >= 1");
    const double a = 0.5 * dof;
    auto upper_tail = [&](double x) { return regularized_gamma_q(a, 0.5 * x); };
    double lo = 0.0;
    double hi = std::max(1.0, static_cast<double>(dof));
    while (upper_tail(hi) > alpha) {
        lo = hi;
        hi *= 2.0;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (upper_tail(mid) > alpha)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

bool ConfidenceEllipsoid::contains(const Vector& p) const {
    const Vector d = p - center;
    return d.dot(shape * d) <= level;
}

Vector ConfidenceEllipsoid::semi_axes() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(shape);
    const Vector& lambda = es.eigenvalues();  // ascending
    Vector axes(lambda.size());
    for (Eigen::Index i = 0; i < lambda.size(); ++i)
        axes[i] = std::sqrt(level / lambda[lambda.size() - 1 - i]);
    return axes;
}

Vector ConfidenceEllipsoid::half_widths() const {
    const Matrix cov = shape.llt().solve(Matrix::Identity(shape.rows(), shape.cols()));
    return (level * cov.diagonal().array()).sqrt().matrix();
}

std::vector<Vector> ConfidenceEllipsoid::boundary(int points) const {
    if (center.size() != 2) throw DomainError("boundary polyline is only defined for two parameters");
    if (points < 3) throw DomainError("boundary polyline needs at least three points");
    Eigen::SelfAdjointEigenSolver<Matrix> es(shape);
    const Vector& lambda = es.eigenvalues();
    const Matrix& vecs = es.eigenvectors();
    const double r0 = std::sqrt(level / lambda[0]);
    const double r1 = std::sqrt(level / lambda[1]);
    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(points));
    for (int k = 0; k < points; ++k) {
        const double t = 2.0 * std::numbers::pi * k / points;
        out.push_back(center + vecs.col(0) * (r0 * std::cos(t)) + vecs.col(1) * (r1 * std::sin(t)));
    }
    return out;
}

ConfidenceEllipsoid confidence_ellipsoid(const Fim& fim, const Vector& p_hat, double alpha) {
    const Matrix& m = fim.matrix;
    if (m.rows() != m.cols() || m.rows() != p_hat.size())
        throw DomainError("information matrix and estimate dimensions differ");
    Matrix inv(m.rows(), m.cols());
    double rc = 0.0;
    if (m.rows() == 0 || !spd_inverse(m, inv, rc) || !(rc >= kSingularRcond))
        throw SingularFim("information matrix is singular; no confidence ellipsoid");
    return {p_hat, m, chi2_quantile(alpha, static_cast<int>(p_hat.size())), alpha};
}

}  // namespace rdoe
