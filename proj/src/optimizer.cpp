#include "rdoe/optimizer.hpp"

#include "rdoe/errors.hpp"
#include "rdoe/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rdoe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Unique positive root of x^(d+1) = x + 1; d = 1 gives the golden ratio.
double generalized_golden_ratio(int d) {
    double x = 2.0;
    for (int i = 0; i < 64; ++i) {
        const double f = std::pow(x, d + 1) - x - 1.0;
        const double df = (d + 1) * std::pow(x, d) - 1.0;
        x -= f / df;
    }
    return x;
}

struct Vertex {
    Vector x;
    double f;
};

struct StartOutcome {
    LocalMinimum minimum;
    long evals = 0;
    bool converged = false;
};

class NelderMead {
public:
    NelderMead(const BoxProblem& problem, const SolverConfig& cfg)
        : problem_(problem), cfg_(cfg), width_(problem.upper - problem.lower) {
        const int n = problem.dim();
        if (n > 2) {
            // Dimension-adaptive coefficients keep the simplex from collapsing
            // in larger design spaces.
            expand_ = 1.0 + 2.0 / n;
            contract_ = 0.75 - 1.0 / (2.0 * n);
            shrink_ = 1.0 - 1.0 / n;
        }
    }

    StartOutcome run(const Vector& start) {
        StartOutcome out;
        Vertex best{project(start), 0.0};
        best.f = eval(best.x);
        int iters = 0;
        bool converged = false;
        for (int round = 0; round <= cfg_.restarts; ++round) {
            const double before = best.f;
            converged = false;
            best = descend(best, iters, converged);
            if (iters >= cfg_.max_iters) break;
            if (round > 0 && !(before - best.f > cfg_.f_tol * std::abs(best.f))) break;
        }
        out.minimum = {best.x, best.f};
        out.evals = evals_;
        out.converged = converged;
        return out;
    }

private:
    Vector project(Vector x) const {
        return x.cwiseMax(problem_.lower).cwiseMin(problem_.upper);
    }

    double eval(const Vector& x) {
        ++evals_;
        const double f = problem_.objective(x);
        return std::isnan(f) ? kInf : f;
    }

    static bool vertex_less(const Vertex& a, const Vertex& b) {
        if (a.f != b.f) return a.f < b.f;
        return lexicographically_less(a.x, b.x);
    }

    std::vector<Vertex> initial_simplex(const Vertex& origin) {
        const int n = problem_.dim();
        std::vector<Vertex> s;
        s.reserve(static_cast<std::size_t>(n + 1));
        s.push_back(origin);
        for (int i = 0; i < n; ++i) {
            Vector x = origin.x;
            const double step = cfg_.initial_step * width_[i];
            x[i] = x[i] + step <= problem_.upper[i] ? x[i] + step : x[i] - step;
            x = project(x);
            s.push_back({x, eval(x)});
        }
        return s;
    }

    double diameter(const std::vector<Vertex>& s) const {
        double d = 0.0;
        for (std::size_t k = 1; k < s.size(); ++k)
            d = std::max(d, ((s[k].x - s[0].x).array().abs() / width_.array()).maxCoeff());
        return d;
    }

    Vertex descend(const Vertex& origin, int& iters, bool& converged) {
        const int n = problem_.dim();
        auto s = initial_simplex(origin);
        Vector centroid(n);
        while (true) {
            std::stable_sort(s.begin(), s.end(), vertex_less);
            const double spread = s.back().f - s.front().f;
            if (diameter(s) < cfg_.x_tol || (std::isfinite(spread) && spread <= cfg_.f_tol * std::abs(s.front().f))) {
                converged = true;
                break;
            }
            if (iters >= cfg_.max_iters) break;
            ++iters;

            centroid.setZero();
            for (int k = 0; k < n; ++k) centroid += s[static_cast<std::size_t>(k)].x;
            centroid /= n;
            Vertex& worst = s.back();
            const Vertex& second = s[static_cast<std::size_t>(n - 1)];

            Vector xr = project(centroid + reflect_ * (centroid - worst.x));
            const double fr = eval(xr);
            if (fr < s.front().f) {
                Vector xe = project(centroid + expand_ * (xr - centroid));
                const double fe = eval(xe);
                if (fe < fr)
                    worst = {std::move(xe), fe};
                else
                    worst = {std::move(xr), fr};
                continue;
            }
            if (fr < second.f) {
                worst = {std::move(xr), fr};
                continue;
            }
            if (fr < worst.f) {
                Vector xc = project(centroid + contract_ * (xr - centroid));
                const double fc = eval(xc);
                if (fc <= fr) {
                    worst = {std::move(xc), fc};
                    continue;
                }
            } else {
                Vector xc = project(centroid + contract_ * (worst.x - centroid));
                const double fc = eval(xc);
                if (fc < worst.f) {
                    worst = {std::move(xc), fc};
                    continue;
                }
            }
            for (std::size_t k = 1; k < s.size(); ++k) {
                s[k].x = project(s[0].x + shrink_ * (s[k].x - s[0].x));
                s[k].f = eval(s[k].x);
            }
        }
        return *std::min_element(s.begin(), s.end(), vertex_less);
    }

    const BoxProblem& problem_;
    const SolverConfig& cfg_;
    Vector width_;
    long evals_ = 0;
    double reflect_ = 1.0;
    double expand_ = 2.0;
    double contract_ = 0.5;
    double shrink_ = 0.5;
};

}  // namespace

int default_start_count(int dim) {
    if (dim <= 4) return 16;
    if (dim <= 12) return 32;
    return 64;
}

int SolverConfig::resolved_starts(int dim) const { return n_starts > 0 ? n_starts : default_start_count(dim); }

void SolverConfig::validate() const {
    if (n_starts < 0) throw DomainError("n_starts must be >= 1 (or 0 for the default)");
    if (max_iters < 1) throw DomainError("max_iters must be positive");
    if (!(x_tol > 0.0) || !(f_tol > 0.0)) throw DomainError("solver tolerances must be positive");
    if (!(initial_step > 0.0) || initial_step > 1.0) throw DomainError("initial_step must be in (0, 1]");
    if (restarts < 0) throw DomainError("restarts must be non-negative");
    if (screen < 0) throw DomainError("screen must be non-negative");
}

bool lexicographically_less(const Vector& a, const Vector& b) {
    const Eigen::Index n = std::min(a.size(), b.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        if (a[i] != b[i]) return a[i] < b[i];
    }
    return a.size() < b.size();
}

std::vector<Vector> start_points(const Vector& lower, const Vector& upper, int count, std::uint64_t seed) {
    const auto d = static_cast<int>(lower.size());
    std::vector<Vector> pts;
    if (count <= 0) return pts;
    pts.push_back(0.5 * (lower + upper));
    const double g = generalized_golden_ratio(d);
    Vector alpha(d);
    Vector offset(d);
    for (int j = 0; j < d; ++j) {
        alpha[j] = std::fmod(1.0 / std::pow(g, j + 1), 1.0);
        offset[j] = static_cast<double>(splitmix64(seed * 0x100000001B3ULL + static_cast<std::uint64_t>(j)) >> 11) *
                    0x1.0p-53;
    }
    for (int k = 1; k < count; ++k) {
        Vector x(d);
        for (int j = 0; j < d; ++j) {
            const double t = std::fmod(offset[j] + k * alpha[j], 1.0);
            x[j] = lower[j] + t * (upper[j] - lower[j]);
        }
        pts.push_back(std::move(x));
    }
    return pts;
}

SolveReport dedupe_minima(SolveReport report, double radius) {
    auto& minima = report.all_local_minima;
    std::stable_sort(minima.begin(), minima.end(), [](const LocalMinimum& a, const LocalMinimum& b) {
        if (a.f != b.f) return a.f < b.f;
        return lexicographically_less(a.x, b.x);
    });
    std::vector<LocalMinimum> kept;
    for (auto& m : minima) {
        const bool near = std::any_of(kept.begin(), kept.end(), [&](const LocalMinimum& k) {
            return k.x.size() == m.x.size() && (k.x - m.x).cwiseAbs().maxCoeff() <= radius;
        });
        if (!near) kept.push_back(std::move(m));
    }
    minima = std::move(kept);
    return report;
}

namespace {

void check_problem(const BoxProblem& problem, const SolverConfig& cfg) {
    cfg.validate();
    const int n = problem.dim();
    if (n < 1 || problem.upper.size() != n) throw DomainError("box problem needs matching non-empty bounds");
    for (int i = 0; i < n; ++i) {
        if (!(problem.lower[i] < problem.upper[i])) throw DomainError("box problem requires lower < upper");
    }
    if (!problem.objective) throw DomainError("box problem has no objective");
}

}  // namespace

LocalMinimum local_minimize(const BoxProblem& problem, const SolverConfig& cfg, const Vector& start, long* n_evals) {
    check_problem(problem, cfg);
    if (start.size() != problem.dim()) throw DomainError("start point has wrong dimension");
    NelderMead nm(problem, cfg);
    StartOutcome o = nm.run(start);
    if (n_evals) *n_evals += o.evals;
    return o.minimum;
}

SolveReport minimize_boxed(const BoxProblem& problem, const SolverConfig& cfg) {
    check_problem(problem, cfg);
    const int n = problem.dim();

    std::vector<Vector> starts;
    long screen_evals = 0;
    if (cfg.screen > 0) {
        auto candidates = start_points(problem.lower, problem.upper, cfg.screen, cfg.seed);
        std::vector<double> f(candidates.size());
        parallel_for(static_cast<int>(candidates.size()), cfg.threads, [&](int i) {
            const double v = problem.objective(candidates[static_cast<std::size_t>(i)]);
            f[static_cast<std::size_t>(i)] = std::isnan(v) ? kInf : v;
        });
        screen_evals = static_cast<long>(candidates.size());
        std::vector<std::size_t> order(candidates.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
        const auto keep = std::min(order.size(), static_cast<std::size_t>(cfg.resolved_starts(n)));
        for (std::size_t k = 0; k < keep; ++k) starts.push_back(candidates[order[k]]);
    } else {
        starts = start_points(problem.lower, problem.upper, cfg.resolved_starts(n), cfg.seed);
    }
    for (const auto& x : cfg.extra_starts) {
        if (x.size() != n) throw DomainError("extra start has wrong dimension");
        starts.push_back(x.cwiseMax(problem.lower).cwiseMin(problem.upper));
    }

    std::vector<StartOutcome> outcomes(starts.size());
    parallel_for(static_cast<int>(starts.size()), cfg.threads, [&](int i) {
        NelderMead nm(problem, cfg);
        outcomes[static_cast<std::size_t>(i)] = nm.run(starts[static_cast<std::size_t>(i)]);
    });

    SolveReport report;
    report.n_evals = screen_evals;
    bool any_finite = false;
    for (auto& o : outcomes) {
        report.n_evals += o.evals;
        if (o.converged) ++report.starts_converged;
        if (!std::isfinite(o.minimum.f)) continue;
        const bool better = !any_finite || o.minimum.f < report.f_best ||
                            (o.minimum.f == report.f_best && lexicographically_less(o.minimum.x, report.x_best));
        if (better) {
            report.x_best = o.minimum.x;
            report.f_best = o.minimum.f;
        }
        any_finite = true;
        report.all_local_minima.push_back(o.minimum);
    }
    if (!any_finite) throw AllStartsFailed("every optimizer start returned a non-finite objective");
    return dedupe_minima(std::move(report), 1e-6 * (problem.upper - problem.lower).maxCoeff());
}

}  // namespace rdoe
