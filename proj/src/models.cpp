#include "rdoe/models.hpp"

#include "rdoe/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

namespace rdoe {

namespace {

constexpr double kCase3Separation = 1e-6;
constexpr double kCase4Denominator = 1e-9;

std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

Vector scalar_bounds(double v) { return Vector::Constant(1, v); }

void require_dims(const ModelSpec& model, const Vector& p, const Vector& u) {
    if (p.size() != model.n_p || u.size() != model.n_u) {
        std::ostringstream os;
        os << "model '" << model.id << "' expects n_p=" << model.n_p << ", n_u=" << model.n_u
           << " but got " << p.size() << ", " << u.size();
        throw DomainError(os.str());
    }
}

[[noreturn]] void throw_singular(const ModelSpec& model, std::span<const double> p,
                                 std::span<const double> u) {
    std::ostringstream os;
    os.precision(9);
    os << "model '" << model.id << "' is singular at p=(";
    for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
    os << "), u=(";
    for (std::size_t i = 0; i < u.size(); ++i) os << (i ? ", " : "") << u[i];
    os << ")";
    throw SingularModelPoint(os.str());
}

void finite_difference_into(const ModelSpec& model, std::span<const double> p,
                            std::span<const double> u, std::span<double> q) {
    const auto n_p = static_cast<std::size_t>(model.n_p);
    const auto n_y = static_cast<std::size_t>(model.n_y);
    std::vector<double> work(p.begin(), p.end());
    std::vector<double> y_plus(n_y);
    std::vector<double> y_minus(n_y);
    for (std::size_t j = 0; j < n_p; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(p[j]));
        work[j] = p[j] + h;
        model.eval(work, u, y_plus);
        work[j] = p[j] - h;
        model.eval(work, u, y_minus);
        work[j] = p[j];
        for (std::size_t i = 0; i < n_y; ++i) q[i * n_p + j] = (y_plus[i] - y_minus[i]) / (2.0 * h);
    }
}

// y = p1 * B / D with B = (u - p3)(p4 - u), D = (u - p2)^2 + B. This is the
// cardinal temperature expression rearranged; D is affine in u.
struct CardinalTerms {
    double a;  // (u - p2)^2
    double b;  // (u - p3)(p4 - u)
    double d;
};

CardinalTerms cardinal_terms(std::span<const double> p, double u) {
    const double a = (u - p[1]) * (u - p[1]);
    const double b = (u - p[2]) * (p[3] - u);
    return {a, b, a + b};
}

void cardinal_eval(std::span<const double> p, double u, std::span<double> y) {
    const auto t = cardinal_terms(p, u);
    y[0] = p[0] * (1.0 - t.a / t.d);
}

void cardinal_sens(std::span<const double> p, double u, std::span<double> q) {
    const auto t = cardinal_terms(p, u);
    const double d2 = t.d * t.d;
    q[0] = t.b / t.d;
    q[1] = 2.0 * p[0] * t.b * (u - p[1]) / d2;
    q[2] = -p[0] * (p[3] - u) * t.a / d2;
    q[3] = p[0] * (u - p[2]) * t.a / d2;
}

bool inside_growth_range(std::span<const double> p, double u) { return u > p[2] && u < p[3]; }

struct Registry {
    std::mutex mutex;
    std::map<std::string, ModelSpec, std::less<>> models;

    Registry() {
        for (auto m : {make_case1_model(), make_case2_model(), make_case3_model(), make_case4_model(),
                       make_case4_ctm_model()})
            models.emplace(m.id, std::move(m));
    }
};

Registry& registry() {
    static Registry r;
    return r;
}

}  // namespace

ParameterBox::ParameterBox(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size() || lower_.size() == 0)
        throw DomainError("parameter box bounds must be non-empty and of equal length");
    for (Eigen::Index i = 0; i < lower_.size(); ++i) {
        if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]) || lower_[i] > upper_[i])
            throw DomainError("parameter box requires finite lower <= upper componentwise");
    }
}

bool ParameterBox::contains(const Vector& p, double slack) const {
    if (p.size() != lower_.size()) return false;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p[i] < lower_[i] - slack || p[i] > upper_[i] + slack) return false;
    }
    return true;
}

NoiseModel::NoiseModel(Vector sigma) : sigma_(std::move(sigma)) {
    if (sigma_.size() == 0) throw DomainError("noise model needs at least one output");
    for (Eigen::Index i = 0; i < sigma_.size(); ++i) {
        if (!(sigma_[i] > 0.0) || !std::isfinite(sigma_[i]))
            throw DomainError("noise standard deviations must be finite and strictly positive");
    }
}

bool is_admissible(const ModelSpec& model, std::span<const double> p, std::span<const double> u) {
    return !model.admissible || model.admissible(p, u);
}

Vector eval_model(const ModelSpec& model, const Vector& p, const Vector& u) {
    require_dims(model, p, u);
    if (!is_admissible(model, as_span(p), as_span(u))) throw_singular(model, as_span(p), as_span(u));
    Vector y(model.n_y);
    model.eval(as_span(p), as_span(u), {y.data(), static_cast<std::size_t>(y.size())});
    return y;
}

bool sensitivity_into(const ModelSpec& model, std::span<const double> p, std::span<const double> u,
                      std::span<double> q) {
    if (!is_admissible(model, p, u)) return false;
    if (model.sens)
        model.sens(p, u, q);
    else
        finite_difference_into(model, p, u, q);
    return true;
}

Matrix eval_sensitivity(const ModelSpec& model, const Vector& p, const Vector& u) {
    require_dims(model, p, u);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> q(model.n_y, model.n_p);
    if (!sensitivity_into(model, as_span(p), as_span(u), {q.data(), static_cast<std::size_t>(q.size())}))
        throw_singular(model, as_span(p), as_span(u));
    return q;
}

Matrix finite_difference_sensitivity(const ModelSpec& model, const Vector& p, const Vector& u) {
    require_dims(model, p, u);
    if (!is_admissible(model, as_span(p), as_span(u))) throw_singular(model, as_span(p), as_span(u));
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> q(model.n_y, model.n_p);
    finite_difference_into(model, as_span(p), as_span(u), {q.data(), static_cast<std::size_t>(q.size())});
    return q;
}

ModelSpec make_case1_model() {
    ModelSpec m;
    m.id = "case1";
    m.n_p = 1;
    m.description = "first-order step response y = 1 - exp(-p u)";
    // Only the analytic optimum is known for this case; the range matches case2.
    m.u_lower = scalar_bounds(0.0);
    m.u_upper = scalar_bounds(20.0);
    m.eval = [](std::span<const double> p, std::span<const double> u, std::span<double> y) {
        y[0] = 1.0 - std::exp(-p[0] * u[0]);
    };
    m.sens = [](std::span<const double> p, std::span<const double> u, std::span<double> q) {
        q[0] = u[0] * std::exp(-p[0] * u[0]);
    };
    return m;
}

ModelSpec make_case2_model() {
    ModelSpec m;
    m.id = "case2";
    m.n_p = 2;
    m.description = "gain and rate y = p1 (1 - exp(-p2 u))";
    m.u_lower = scalar_bounds(0.0);
    m.u_upper = scalar_bounds(20.0);
    m.eval = [](std::span<const double> p, std::span<const double> u, std::span<double> y) {
        y[0] = p[0] * (1.0 - std::exp(-p[1] * u[0]));
    };
    m.sens = [](std::span<const double> p, std::span<const double> u, std::span<double> q) {
        const double e = std::exp(-p[1] * u[0]);
        q[0] = 1.0 - e;
        q[1] = p[0] * u[0] * e;
    };
    return m;
}

ModelSpec make_case3_model() {
    ModelSpec m;
    m.id = "case3";
    m.n_p = 2;
    m.description = "consecutive reaction A->B->C, y = p1/(p1-p2) (exp(-p2 u) - exp(-p1 u))";
    m.u_lower = scalar_bounds(0.0);
    m.u_upper = scalar_bounds(20.0);
    m.admissible = [](std::span<const double> p, std::span<const double>) {
        return std::abs(p[0] - p[1]) >= kCase3Separation;
    };
    m.eval = [](std::span<const double> p, std::span<const double> u, std::span<double> y) {
        const double d = p[0] - p[1];
        y[0] = p[0] / d * (std::exp(-p[1] * u[0]) - std::exp(-p[0] * u[0]));
    };
    m.sens = [](std::span<const double> p, std::span<const double> u, std::span<double> q) {
        const double d = p[0] - p[1];
        const double e1 = std::exp(-p[0] * u[0]);
        const double e2 = std::exp(-p[1] * u[0]);
        const double g = e2 - e1;
        q[0] = -p[1] / (d * d) * g + p[0] / d * u[0] * e1;
        q[1] = p[0] / (d * d) * g - p[0] / d * u[0] * e2;
    };
    return m;
}

ModelSpec make_case4_model() {
    ModelSpec m;
    m.id = "case4";
    m.n_p = 4;
    m.description = "cardinal temperature model, closed form over the whole control range";
    m.u_lower = scalar_bounds(288.0);
    m.u_upper = scalar_bounds(333.0);
    m.admissible = [](std::span<const double> p, std::span<const double> u) {
        return std::abs(cardinal_terms(p, u[0]).d) >= kCase4Denominator;
    };
    m.eval = [](std::span<const double> p, std::span<const double> u, std::span<double> y) {
        cardinal_eval(p, u[0], y);
    };
    m.sens = [](std::span<const double> p, std::span<const double> u, std::span<double> q) {
        cardinal_sens(p, u[0], q);
    };
    return m;
}

ModelSpec make_case4_ctm_model() {
    ModelSpec m = make_case4_model();
    m.id = "case4-ctm";
    m.description = "cardinal temperature model with zero growth outside (p3, p4)";
    // Inside (p3, p4) the denominator is at least (u - p2)^2 + (u - p3)(p4 - u) > 0.
    m.admissible = [](std::span<const double> p, std::span<const double> u) {
        return !inside_growth_range(p, u[0]) || std::abs(cardinal_terms(p, u[0]).d) >= kCase4Denominator;
    };
    m.eval = [](std::span<const double> p, std::span<const double> u, std::span<double> y) {
        if (inside_growth_range(p, u[0]))
            cardinal_eval(p, u[0], y);
        else
            y[0] = 0.0;
    };
    m.sens = [](std::span<const double> p, std::span<const double> u, std::span<double> q) {
        if (inside_growth_range(p, u[0]))
            cardinal_sens(p, u[0], q);
        else
            std::fill(q.begin(), q.begin() + 4, 0.0);
    };
    return m;
}

void validate_model(const ModelSpec& model) {
    if (model.id.empty()) throw ConfigError("model id must not be empty");
    if (model.n_p < 1 || model.n_u < 1 || model.n_y < 1)
        throw ConfigError("model '" + model.id + "' needs positive n_p, n_u, n_y");
    if (!model.eval) throw ConfigError("model '" + model.id + "' has no evaluation callback");
    if (model.u_lower.size() != model.n_u || model.u_upper.size() != model.n_u)
        throw ConfigError("model '" + model.id + "' control bounds do not match n_u");
    for (int i = 0; i < model.n_u; ++i) {
        if (!(model.u_lower[i] < model.u_upper[i]))
            throw ConfigError("model '" + model.id + "' control bounds must satisfy lower < upper");
    }
}

void register_model(ModelSpec model) {
    validate_model(model);
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    auto id = model.id;
    r.models.insert_or_assign(std::move(id), std::move(model));
}

ModelSpec find_model(std::string_view id) {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    auto it = r.models.find(id);
    if (it == r.models.end()) throw ConfigError("unknown model '" + std::string(id) + "'");
    return it->second;
}

std::vector<std::string> registered_model_ids() {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    std::vector<std::string> ids;
    for (const auto& [id, m] : r.models) ids.push_back(id);
    return ids;
}

}  // namespace rdoe
