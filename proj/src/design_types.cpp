#include "rdoe/design_types.hpp"

#include "rdoe/errors.hpp"

#include <algorithm>
#include <numeric>

namespace rdoe {

Design Design::scalar(std::initializer_list<double> values) { return scalar(std::vector<double>(values)); }

Design Design::scalar(const std::vector<double>& values) {
    Matrix c(static_cast<Eigen::Index>(values.size()), 1);
    for (std::size_t i = 0; i < values.size(); ++i) c(static_cast<Eigen::Index>(i), 0) = values[i];
    return Design(std::move(c));
}

Design Design::append(const Design& other) const { return Design(stack_rows(controls, other.controls)); }

Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
    if (top.rows() == 0) return bottom;
    if (bottom.rows() == 0) return top;
    if (top.cols() != bottom.cols()) throw DomainError("cannot stack designs with different control counts");
    Matrix out(top.rows() + bottom.rows(), top.cols());
    out.topRows(top.rows()) = top;
    out.bottomRows(bottom.rows()) = bottom;
    return out;
}

Matrix sorted_rows(const Matrix& controls) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(controls.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index j = 0; j < controls.cols(); ++j) {
            if (controls(a, j) != controls(b, j)) return controls(a, j) < controls(b, j);
        }
        return false;
    });
    Matrix out(controls.rows(), controls.cols());
    for (std::size_t i = 0; i < order.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = controls.row(order[i]);
    return out;
}

}  // namespace rdoe
