#include "support.hpp"

#include "rdoe/errors.hpp"
#include "rdoe/statistics.hpp"

#include <boost/math/special_functions/gamma.hpp>

using namespace rdoe;
using rdoe::test::vec;

namespace {

const NoiseModel kCase1Noise(vec({1.0 / 30.0}));

CriterionConfig unit_criterion() { return {}; }

}  // namespace

TEST_CASE("case1 information matrix of two experiments at u = 1") {
    const Fim fim = assemble_fim(make_case1_model(), vec({1.0}), Design::scalar({1.0, 1.0}), kCase1Noise);
    const double ref = 2.0 * 900.0 * std::exp(-2.0);  // two identical terms (e^-1)^2 / sigma^2
    CHECK(fim.n_obs == 2);
    CHECK(fim.matrix(0, 0) == doctest::Approx(ref).epsilon(1e-13));
    CHECK(fim.matrix(0, 0) == doctest::Approx(243.6035).epsilon(1e-6));
    const double phi = a_criterion(fim, unit_criterion()).value;
    CHECK(phi == doctest::Approx(1.0 / ref).epsilon(1e-13));
    CHECK(phi == doctest::Approx(4.105e-3).epsilon(1e-3));
}

TEST_CASE("information matrices are symmetric, PSD and additive (100 instances)") {
    Rng rng(7);
    int instances = 0;
    for (const auto& mc : test::model_cases()) {
        const NoiseModel noise(vec({0.05}));
        for (int k = 0; k < 25; ++k) {
            const Vector p = test::uniform_in(rng, mc.p_lo, mc.p_hi);
            const int na = 1 + static_cast<int>(rng.uniform() * 5);
            const int nb = 1 + static_cast<int>(rng.uniform() * 5);
            const Design a(test::random_controls(rng, mc.model, na));
            const Design b(test::random_controls(rng, mc.model, nb));
            const Matrix fa = assemble_fim(mc.model, p, a, noise).matrix;
            const Matrix fb = assemble_fim(mc.model, p, b, noise).matrix;
            const Matrix fab = assemble_fim(mc.model, p, a.append(b), noise).matrix;
            const double scale = std::max(1.0, fab.cwiseAbs().maxCoeff());
            CHECK((fab - fab.transpose()).cwiseAbs().maxCoeff() == 0.0);
            Eigen::SelfAdjointEigenSolver<Matrix> es(fab);
            CHECK(es.eigenvalues().minCoeff() >= -1e-10 * scale);
            CHECK((fab - fa - fb).cwiseAbs().maxCoeff() <= 1e-12 * scale);
            ++instances;
        }
    }
    CHECK(instances == 100);
}

TEST_CASE("appending experiments never increases the criterion (50 instances)") {
    Rng rng(11);
    int instances = 0;
    const auto cases = test::model_cases();
    while (instances < 50) {
        const auto& mc = cases[static_cast<std::size_t>(instances) % cases.size()];
        const NoiseModel noise(vec({0.1}));
        const Vector p = test::uniform_in(rng, mc.p_lo, mc.p_hi);
        const Design base(test::random_controls(rng, mc.model, mc.model.n_p + 1));
        const Design extra(test::random_controls(rng, mc.model, 1 + static_cast<int>(rng.uniform() * 3)));
        CriterionConfig cfg;
        cfg.scaling = Vector::Ones(mc.model.n_p);
        cfg.scaling[0] = 1.0 + 99.0 * rng.uniform();
        const double before = a_criterion(assemble_fim(mc.model, p, base, noise), cfg).value;
        const double after = a_criterion(assemble_fim(mc.model, p, base.append(extra), noise), cfg).value;
        CHECK(after <= before * (1.0 + 1e-10));
        ++instances;
    }
}

TEST_CASE("singular information: penalty and ridge policies") {
    Matrix rank1(2, 2);
    rank1 << 1.0, 2.0, 2.0, 4.0;
    CriterionConfig penalty;
    const CriterionValue v = a_criterion(rank1, penalty);
    CHECK(v.singular);
    CHECK(v.value == penalty.penalty_value);

    CriterionConfig ridge;
    ridge.singular_policy = SingularPolicy::ridge;
    const CriterionValue r = a_criterion(rank1, ridge);
    CHECK(r.singular);
    CHECK(r.regularized);
    CHECK(std::isfinite(r.value));
    CHECK(r.value > 1e6);

    // An ill-conditioned but regular matrix is not flagged.
    Matrix ok(2, 2);
    ok << 1.0, 0.0, 0.0, 1e-6;
    const CriterionValue o = a_criterion(ok, penalty);
    CHECK_FALSE(o.singular);
    CHECK(o.value == doctest::Approx(1.0 + 1e6));
}

TEST_CASE("criterion scaling weights the diagonal of the inverse") {
    Matrix fim(2, 2);
    fim << 4.0, 1.0, 1.0, 2.0;
    const Matrix inv = fim.inverse();
    CriterionConfig cfg;
    cfg.scaling = vec({100.0, 1.0});
    CHECK(a_criterion(fim, cfg).value == doctest::Approx(100.0 * inv(0, 0) + inv(1, 1)).epsilon(1e-14));
    cfg.scaling = vec({1.0, -1.0});
    CHECK_THROWS_AS(cfg.validate(2), DomainError);
}

TEST_CASE("chi-squared quantiles: closed forms") {
    CHECK(chi2_quantile(0.05, 2) == doctest::Approx(-2.0 * std::log(0.05)).epsilon(1e-12));
    CHECK(chi2_quantile(0.05, 2) == doctest::Approx(5.99146).epsilon(1e-6));
    CHECK(chi2_quantile(0.05, 1) == doctest::Approx(3.84146).epsilon(1e-6));
    CHECK(chi2_quantile(0.5, 2) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
    // Two-sided two-sigma tail for one degree of freedom: the quantile is 2^2.
    CHECK(chi2_quantile(0.0455, 1) == doctest::Approx(4.0).epsilon(1e-3));
    CHECK_THROWS_AS(chi2_quantile(0.0, 2), DomainError);
    CHECK_THROWS_AS(chi2_quantile(0.5, 0), DomainError);
}

TEST_CASE("chi-squared quantiles against an independent gamma inverse (20 pairs)") {
    const double alphas[] = {0.001, 0.01, 0.0455, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99};
    const int dofs[] = {1, 2, 3, 4, 7, 10, 15, 30};
    int pairs = 0;
    for (int k = 0; k < 20; ++k) {
        const double alpha = alphas[k % 10];
        const int dof = dofs[(k * 3) % 8];
        const double ref = 2.0 * boost::math::gamma_q_inv(0.5 * dof, alpha);
        CHECK(std::abs(chi2_quantile(alpha, dof) - ref) <= 1e-8 * std::max(1.0, ref));
        ++pairs;
    }
    CHECK(pairs == 20);
}

TEST_CASE("regularized upper incomplete gamma against boost") {
    for (double a : {0.5, 1.0, 2.5, 7.0, 20.0})
        for (double x : {0.01, 0.5, 1.0, 3.0, 10.0, 40.0})
            CHECK(regularized_gamma_q(a, x) == doctest::Approx(boost::math::gamma_q(a, x)).epsilon(1e-12));
}

TEST_CASE("confidence ellipsoid of the identity form is a circle") {
    const Fim fim{Matrix::Identity(2, 2), 2};
    const ConfidenceEllipsoid e = confidence_ellipsoid(fim, vec({0.0, 0.0}), 0.05);
    const double r = std::sqrt(chi2_quantile(0.05, 2));
    CHECK(r == doctest::Approx(std::sqrt(5.99146)).epsilon(1e-6));
    CHECK(e.semi_axes()[0] == doctest::Approx(r));
    CHECK(e.semi_axes()[1] == doctest::Approx(r));
    CHECK(e.half_widths()[0] == doctest::Approx(r));
    CHECK(e.contains(vec({0.99 * r, 0.0})));
    CHECK_FALSE(e.contains(vec({0.8 * r, 0.8 * r})));
    for (const auto& pt : e.boundary(16)) CHECK(pt.norm() == doctest::Approx(r).epsilon(1e-12));
}

TEST_CASE("case1 confidence interval half-width") {
    const Fim fim = assemble_fim(make_case1_model(), vec({1.0}), Design::scalar({1.0, 1.0}), kCase1Noise);
    const ConfidenceEllipsoid e = confidence_ellipsoid(fim, vec({1.0}), 0.05);
    const double ref = std::sqrt(chi2_quantile(0.05, 1) / (2.0 * 900.0 * std::exp(-2.0)));
    CHECK(e.half_widths()[0] == doctest::Approx(ref).epsilon(1e-12));
    CHECK(e.half_widths()[0] == doctest::Approx(0.1256).epsilon(1e-3));
}

TEST_CASE("ellipsoid of an anisotropic form") {
    Matrix m(2, 2);
    m << 4.0, 1.0, 1.0, 3.0;
    const ConfidenceEllipsoid e = confidence_ellipsoid(Fim{m, 3}, vec({1.0, -1.0}), 0.1);
    const Matrix cov = m.inverse();
    CHECK(e.half_widths()[0] == doctest::Approx(std::sqrt(e.level * cov(0, 0))).epsilon(1e-12));
    CHECK(e.half_widths()[1] == doctest::Approx(std::sqrt(e.level * cov(1, 1))).epsilon(1e-12));
    for (const auto& pt : e.boundary(40)) {
        const Vector d = pt - e.center;
        CHECK(d.dot(m * d) == doctest::Approx(e.level).epsilon(1e-10));
    }
    CHECK(e.semi_axes()[0] <= e.semi_axes()[1]);
}

TEST_CASE("singular information has no ellipsoid") {
    Matrix rank1(2, 2);
    rank1 << 1.0, 2.0, 2.0, 4.0;
    CHECK_THROWS_AS(confidence_ellipsoid(Fim{rank1, 1}, vec({0.0, 0.0}), 0.05), SingularFim);
}
