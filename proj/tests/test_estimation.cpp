#include "support.hpp"

#include "rdoe/errors.hpp"
#include "rdoe/estimation.hpp"

#include <filesystem>
#include <fstream>

using namespace rdoe;
using rdoe::test::vec;

namespace {

Dataset make_dataset(const ModelSpec& m, const Vector& p, const Matrix& controls, const NoiseModel& noise) {
    Dataset d;
    d.noise = noise;
    for (Eigen::Index t = 0; t < controls.rows(); ++t) {
        const Vector u = controls.row(t).transpose();
        d.records.push_back({u, eval_model(m, p, u)});
    }
    return d;
}

std::string temp_file(const std::string& name, const std::string& text) {
    const auto path = std::filesystem::temp_directory_path() / ("rdoe_test_" + name);
    std::ofstream(path) << text;
    return path.string();
}

}  // namespace

TEST_CASE("noiseless data recovers the true parameters (60 instances)") {
    Rng rng(5150);
    const auto cases = test::model_cases();
    int recovered = 0;
    for (int k = 0; k < 60; ++k) {
        const auto& mc = cases[static_cast<std::size_t>(k % 3)];  // the three smooth models
        const Vector p = test::uniform_in(rng, mc.p_lo, mc.p_hi);
        const Matrix controls = test::random_controls(rng, mc.model, mc.model.n_p + 3);
        const Dataset data = make_dataset(mc.model, p, controls, NoiseModel(vec({1.0 / 30.0})));
        const Estimate est = least_squares_estimate(mc.model, data, ParameterBox(mc.p_lo, mc.p_hi), {});
        const double err = (est.p_hat - p).cwiseAbs().maxCoeff();
        CHECK_MESSAGE(err <= 1e-4, "model " << mc.model.id << " instance " << k);
        CHECK(est.sse <= 1e-6);
        if (err <= 1e-4) ++recovered;
    }
    CHECK(recovered == 60);
}

TEST_CASE("cardinal model recovers its parameters from interior temperatures") {
    const ModelSpec m = make_case4_ctm_model();
    const Vector p = vec({1.396, 313.25, 289.40, 320.23});
    Matrix controls(8, 1);
    controls << 291.0, 295.0, 300.0, 305.0, 310.0, 314.0, 317.0, 319.5;
    const Dataset data = make_dataset(m, p, controls, NoiseModel(vec({0.1})));
    SolverConfig cfg;
    cfg.n_starts = 32;
    const Estimate est = least_squares_estimate(m, data, ParameterBox(vec({1.0, 300.0, 283.0, 318.0}),
                                                                      vec({2.0, 320.0, 293.0, 328.0})),
                                                cfg);
    CHECK(std::abs(est.p_hat[0] - p[0]) <= 1e-4);
    for (int j = 1; j < 4; ++j) CHECK(std::abs(est.p_hat[j] - p[j]) <= 1e-3);
}

TEST_CASE("case1 two-point fit against a fine grid") {
    const ModelSpec m = make_case1_model();
    const NoiseModel noise(vec({1.0 / 30.0}));
    Dataset data;
    data.noise = noise;
    data.records = {{vec({1.0}), vec({0.5})}, {vec({2.0}), vec({0.7})}};
    // Test-side grid search of the sum of squares with step 1e-5.
    double best_p = 0.0, best_s = 1e300;
    for (int i = 0; i <= 275000; ++i) {
        const double p = 0.25 + 1e-5 * i;
        const double r1 = 0.5 - (1.0 - std::exp(-p * 1.0));
        const double r2 = 0.7 - (1.0 - std::exp(-p * 2.0));
        const double s = r1 * r1 + r2 * r2;
        if (s < best_s) best_s = s, best_p = p;
    }
    const Estimate est = least_squares_estimate(m, data, ParameterBox(vec({0.25}), vec({3.0})), {});
    CHECK(std::abs(est.p_hat[0] - best_p) <= 1e-4);
    CHECK(est.p_hat[0] > 0.602);
    CHECK(est.p_hat[0] < 0.694);
    CHECK(est.sse == doctest::Approx(900.0 * best_s).epsilon(1e-6));
    REQUIRE(est.ellipsoid.has_value());
    CHECK(est.ellipsoid->alpha == kTwoSigmaAlpha);
    CHECK(est.ellipsoid->contains(est.p_hat));
}

TEST_CASE("too few observations are rejected") {
    const ModelSpec m = make_case2_model();
    Dataset data;
    data.noise = NoiseModel(vec({0.1}));
    data.records = {{vec({1.0}), vec({0.5})}};
    CHECK_THROWS_AS(least_squares_estimate(m, data, ParameterBox(vec({0.5, 0.5}), vec({1.5, 1.5})), {}),
                    UnderdeterminedData);
}

TEST_CASE("repeated controls give a singular information matrix and no ellipsoid") {
    const ModelSpec m = make_case2_model();
    const Dataset data = make_dataset(m, vec({1.0, 1.0}), Matrix::Constant(3, 1, 2.0), NoiseModel(vec({0.1})));
    const Estimate est = estimate_at(m, data, vec({1.0, 1.0}));
    CHECK_FALSE(est.ellipsoid.has_value());
    CHECK(est.sse == 0.0);
}

TEST_CASE("simulated noise has the configured mean and spread") {
    const ModelSpec m = make_case1_model();
    const NoiseModel noise(vec({1.0 / 30.0}));
    Rng rng(271828);
    const int n = 100000;
    const double y0 = eval_model(m, vec({1.0}), vec({1.0}))[0];
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double e = simulate_measurement(m, vec({1.0}), vec({1.0}), noise, rng)[0] - y0;
        sum += e;
        sum2 += e * e;
    }
    const double sigma = 1.0 / 30.0;
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) <= 5.0 * sigma / std::sqrt(n));
    // Standard error of the sample variance of a normal: sigma^2 sqrt(2 / n).
    CHECK(std::abs(var - sigma * sigma) <= 5.0 * sigma * sigma * std::sqrt(2.0 / n));
    CHECK(simulate_measurement(m, vec({1.0}), vec({1.0}), noise, std::uint64_t{9})[0] ==
          simulate_measurement(m, vec({1.0}), vec({1.0}), noise, std::uint64_t{9})[0]);
}

TEST_CASE("dataset CSV parsing") {
    const ModelSpec m = make_case1_model();
    const NoiseModel noise(vec({0.1}));
    const auto ok = temp_file("ok.csv", "# comment\nu_1,y_1\n1.0,0.5\n\n2.0, 0.7\n");
    const Dataset d = read_dataset_csv(ok, m, noise);
    REQUIRE(d.size() == 2);
    CHECK(d.records[1].u[0] == 2.0);
    CHECK(d.records[1].y[0] == 0.7);
    CHECK_THROWS_AS(read_dataset_csv(temp_file("hdr.csv", "x,y\n1,2\n"), m, noise), ConfigError);
    CHECK_THROWS_AS(read_dataset_csv(temp_file("cols.csv", "u_1,y_1\n1,2,3\n"), m, noise), ConfigError);
    CHECK_THROWS_AS(read_dataset_csv(temp_file("nan.csv", "u_1,y_1\n1,abc\n"), m, noise), ConfigError);
    CHECK_THROWS_AS(read_dataset_csv("/nonexistent/data.csv", m, noise), ConfigError);
}
