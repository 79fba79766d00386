#pragma once

#include "rdoe/models.hpp"

#include <initializer_list>
#include <vector>

namespace rdoe {

/// Ordered experiments U_N, one row of `controls` per measurement index.
/// `stage_marks` optionally lists cumulative stage boundaries.
struct Design {
    Matrix controls;
    std::vector<int> stage_marks;

    Design() = default;
    explicit Design(Matrix c, std::vector<int> marks = {}) : controls(std::move(c)), stage_marks(std::move(marks)) {}

    int size() const { return static_cast<int>(controls.rows()); }
    int n_u() const { return static_cast<int>(controls.cols()); }
    bool empty() const { return controls.rows() == 0; }

    /// Single-control design from scalar values.
    static Design scalar(std::initializer_list<double> values);
    static Design scalar(const std::vector<double>& values);

    /// Concatenation (this ∥ other).
    Design append(const Design& other) const;
};

/// Sorts experiment rows lexicographically.
Matrix sorted_rows(const Matrix& controls);

/// Row-wise concatenation; either side may be empty.
Matrix stack_rows(const Matrix& top, const Matrix& bottom);

}  // namespace rdoe
