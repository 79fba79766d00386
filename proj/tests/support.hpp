#pragma once

#include "rdoe/models.hpp"
#include "rdoe/random.hpp"

#include <doctest.h>

#include <cmath>

namespace rdoe::test {

inline Vector vec(std::initializer_list<double> values) {
    Vector v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v[i++] = x;
    return v;
}

inline Vector uniform_in(Rng& rng, const Vector& lo, const Vector& hi) {
    Vector v(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) v[i] = rng.uniform(lo[i], hi[i]);
    return v;
}

/// Parameter ranges used by the property generators, per built-in model.
struct ModelCase {
    ModelSpec model;
    Vector p_lo;
    Vector p_hi;
};

inline std::vector<ModelCase> model_cases() {
    return {
        {make_case1_model(), vec({0.25}), vec({2.0})},
        {make_case2_model(), vec({0.5, 0.5}), vec({1.5, 1.5})},
        {make_case3_model(), vec({0.55, 0.1}), vec({0.9, 0.45})},
        {make_case4_ctm_model(), vec({1.0, 300.0, 283.0, 318.0}), vec({2.0, 320.0, 293.0, 328.0})},
    };
}

/// Random design of n experiments inside the model's control box.
inline Matrix random_controls(Rng& rng, const ModelSpec& m, int n) {
    Matrix c(n, m.n_u);
    for (int t = 0; t < n; ++t)
        for (int j = 0; j < m.n_u; ++j) c(t, j) = rng.uniform(m.u_lower[j], m.u_upper[j]);
    return c;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace rdoe::test
