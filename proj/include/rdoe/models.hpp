#pragma once

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rdoe {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Static explicit output map y = F(p, u) together with its parameter
/// sensitivity dF/dp.
///
/// Callbacks take raw spans so the information-matrix assembly can run
/// without allocating. `sens` writes a row-major n_y x n_p block. A model
/// without `sens` falls back to central finite differences. When
/// `admissible` is set and returns false the point is singular for the
/// closed form and evaluation raises SingularModelPoint.
struct ModelSpec {
    using EvalFn = std::function<void(std::span<const double> p, std::span<const double> u,
                                      std::span<double> y)>;
    using SensFn = std::function<void(std::span<const double> p, std::span<const double> u,
                                      std::span<double> q)>;
    using GuardFn = std::function<bool(std::span<const double> p, std::span<const double> u)>;

    std::string id;
    int n_p = 0;
    int n_u = 1;
    int n_y = 1;
    Vector u_lower;
    Vector u_upper;
    EvalFn eval;
    SensFn sens;
    GuardFn admissible;
    std::string description;

    bool has_analytic_sensitivity() const { return static_cast<bool>(sens); }
};

/// Axis-aligned uncertainty set for the parameters.
class ParameterBox {
public:
    ParameterBox() = default;
    ParameterBox(Vector lower, Vector upper);

    const Vector& lower() const { return lower_; }
    const Vector& upper() const { return upper_; }
    Vector midpoint() const { return 0.5 * (lower_ + upper_); }
    Vector width() const { return upper_ - lower_; }
    int dim() const { return static_cast<int>(lower_.size()); }
    bool contains(const Vector& p, double slack = 0.0) const;

private:
    Vector lower_;
    Vector upper_;
};

/// Known output standard deviations; all strictly positive.
class NoiseModel {
public:
    NoiseModel() = default;
    explicit NoiseModel(Vector sigma);

    const Vector& sigma() const { return sigma_; }
    int dim() const { return static_cast<int>(sigma_.size()); }

private:
    Vector sigma_;
};

Vector eval_model(const ModelSpec& model, const Vector& p, const Vector& u);
Matrix eval_sensitivity(const ModelSpec& model, const Vector& p, const Vector& u);

/// Central differences of `eval` with step 1e-6 * max(1, |p_i|).
Matrix finite_difference_sensitivity(const ModelSpec& model, const Vector& p, const Vector& u);

/// Non-throwing sensitivity kernel used in hot loops. Returns false when the
/// point is not admissible for the model.
bool sensitivity_into(const ModelSpec& model, std::span<const double> p,
                      std::span<const double> u, std::span<double> q);

bool is_admissible(const ModelSpec& model, std::span<const double> p, std::span<const double> u);

// Built-in case-study models.
ModelSpec make_case1_model();
ModelSpec make_case2_model();
ModelSpec make_case3_model();
ModelSpec make_case4_model();
ModelSpec make_case4_ctm_model();

/// Registers a compiled user model under `model.id`; replaces an existing
/// entry with the same id. Throws ConfigError if the model description is malformed.
void register_model(ModelSpec model);

/// Looks up a built-in or registered model. Throws ConfigError when unknown.
ModelSpec find_model(std::string_view id);

std::vector<std::string> registered_model_ids();

/// Throws ConfigError when callbacks or dimensions are inconsistent.
void validate_model(const ModelSpec& model);

}  // namespace rdoe
