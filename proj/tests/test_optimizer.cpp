#include "support.hpp"

#include "rdoe/errors.hpp"
#include "rdoe/optimizer.hpp"

using namespace rdoe;
using rdoe::test::vec;

namespace {

BoxProblem rosenbrock() {
    return {[](const Vector& x) {
                const double a = 1.0 - x[0];
                const double b = x[1] - x[0] * x[0];
                return a * a + 100.0 * b * b;
            },
            vec({-2.0, -1.0}), vec({2.0, 3.0})};
}

}  // namespace

TEST_CASE("maximizer of u exp(-u) on [0.1, 5]") {
    const BoxProblem problem{[](const Vector& x) { return -x[0] * std::exp(-x[0]); }, vec({0.1}), vec({5.0})};
    const SolveReport r = minimize_boxed(problem, {});
    CHECK(r.x_best[0] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(r.f_best == doctest::Approx(-std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("Rosenbrock minimum at (1, 1)") {
    const SolveReport r = minimize_boxed(rosenbrock(), {});
    CHECK(std::abs(r.x_best[0] - 1.0) <= 1e-4);
    CHECK(std::abs(r.x_best[1] - 1.0) <= 1e-4);
    CHECK(r.f_best <= 1e-8);
    CHECK(r.starts_converged >= 1);
}

TEST_CASE("minimum on the box boundary") {
    const BoxProblem problem{[](const Vector& x) { return (x[0] - 3.0) * (x[0] - 3.0) + x[1] * x[1]; },
                             vec({0.0, -1.0}), vec({2.0, 1.0})};
    const SolveReport r = minimize_boxed(problem, {});
    CHECK(r.x_best[0] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(std::abs(r.x_best[1]) <= 1e-4);
    CHECK(r.x_best[0] <= 2.0);
}

TEST_CASE("multimodal objective: every local minimum lies inside the box") {
    const BoxProblem problem{[](const Vector& x) { return std::sin(3.0 * x[0]) + 0.1 * x[0] * x[0]; },
                             vec({-4.0}), vec({4.0})};
    SolverConfig cfg;
    cfg.n_starts = 24;
    const SolveReport r = minimize_boxed(problem, cfg);
    // Global minimizer from a dense test-side scan.
    double best_x = 0.0, best_f = 1e300;
    for (int i = 0; i <= 800000; ++i) {
        const double x = -4.0 + 8.0 * i / 800000.0;
        const double f = std::sin(3.0 * x) + 0.1 * x * x;
        if (f < best_f) best_f = f, best_x = x;
    }
    CHECK(r.x_best[0] == doctest::Approx(best_x).epsilon(1e-4));
    CHECK(r.f_best <= best_f + 1e-9);
    CHECK(r.all_local_minima.size() >= 2);
    for (const auto& m : r.all_local_minima) {
        CHECK(m.x[0] >= -4.0);
        CHECK(m.x[0] <= 4.0);
        CHECK(m.f >= r.f_best);
    }
}

TEST_CASE("solves are deterministic and independent of the thread count") {
    SolverConfig cfg;
    cfg.n_starts = 12;
    cfg.seed = 99;
    const SolveReport a = minimize_boxed(rosenbrock(), cfg);
    const SolveReport b = minimize_boxed(rosenbrock(), cfg);
    cfg.threads = 4;
    const SolveReport c = minimize_boxed(rosenbrock(), cfg);
    CHECK(a.x_best == b.x_best);
    CHECK(a.f_best == b.f_best);
    CHECK(a.n_evals == b.n_evals);
    CHECK(a.x_best == c.x_best);
    CHECK(a.f_best == c.f_best);
    CHECK(a.n_evals == c.n_evals);
}

TEST_CASE("start points are the midpoint followed by a seeded sequence inside the box") {
    const Vector lo = vec({0.0, 10.0, -1.0}), hi = vec({1.0, 20.0, 1.0});
    const auto pts = start_points(lo, hi, 50, 3);
    REQUIRE(pts.size() == 50);
    CHECK(pts[0].isApprox(0.5 * (lo + hi)));
    for (const auto& p : pts)
        for (int j = 0; j < 3; ++j) {
            CHECK(p[j] >= lo[j]);
            CHECK(p[j] <= hi[j]);
        }
    CHECK(start_points(lo, hi, 50, 3)[17] == pts[17]);
    CHECK(start_points(lo, hi, 50, 4)[17] != pts[17]);
}

TEST_CASE("screening scores sequence points and counts their evaluations") {
    long calls = 0;
    BoxProblem problem = rosenbrock();
    auto inner = problem.objective;
    problem.objective = [&calls, inner](const Vector& x) {
        ++calls;
        return inner(x);
    };
    SolverConfig cfg;
    cfg.n_starts = 2;
    cfg.screen = 40;
    const SolveReport r = minimize_boxed(problem, cfg);
    CHECK(r.n_evals == calls);
    CHECK(r.n_evals > 40);
    CHECK(std::abs(r.x_best[0] - 1.0) <= 1e-4);
    cfg.screen = -1;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
}

TEST_CASE("extra starts are honoured") {
    // Two basins; the midpoint start lands in the shallow one.
    const BoxProblem problem{[](const Vector& x) {
                                 const double a = x[0] - 0.9, b = x[0] - 0.5;
                                 return std::min(50.0 * a * a - 1.0, b * b - 0.5);
                             },
                             vec({0.0}), vec({1.0})};
    SolverConfig cfg;
    cfg.n_starts = 1;
    cfg.extra_starts = {vec({0.97})};
    const SolveReport r = minimize_boxed(problem, cfg);
    CHECK(r.x_best[0] == doctest::Approx(0.9).epsilon(1e-5));
    CHECK(r.f_best == doctest::Approx(-1.0).epsilon(1e-10));
}

TEST_CASE("dimension-based start counts and config validation") {
    CHECK(default_start_count(1) == 16);
    CHECK(default_start_count(4) == 16);
    CHECK(default_start_count(5) == 32);
    CHECK(default_start_count(12) == 32);
    CHECK(default_start_count(13) == 64);
    SolverConfig cfg;
    CHECK(cfg.resolved_starts(3) == 16);
    cfg.n_starts = 5;
    CHECK(cfg.resolved_starts(3) == 5);
    cfg.max_iters = 0;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
}

TEST_CASE("dedupe keeps the lowest value per cluster") {
    SolveReport r;
    r.all_local_minima = {{vec({0.0}), 2.0}, {vec({1e-9}), 1.0}, {vec({1.0}), 3.0}};
    r.x_best = vec({1e-9});
    r.f_best = 1.0;
    const SolveReport d = dedupe_minima(r, 1e-6);
    REQUIRE(d.all_local_minima.size() == 2);
    for (const auto& m : d.all_local_minima)
        if (std::abs(m.x[0]) < 1e-6) CHECK(m.f == 1.0);
}
