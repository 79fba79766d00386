#include "rdoe/estimation.hpp"

#include "rdoe/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rdoe {

namespace {

constexpr double kInadmissibleSse = 1e300;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& where) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v))
        throw ConfigError(where + ": '" + s + "' is not a finite number");
    return v;
}

}  // namespace

Design Dataset::design() const {
    if (records.empty()) return {};
    Matrix c(static_cast<Eigen::Index>(records.size()), records.front().u.size());
    for (std::size_t i = 0; i < records.size(); ++i) c.row(static_cast<Eigen::Index>(i)) = records[i].u.transpose();
    return Design(std::move(c));
}

void Dataset::validate(const ModelSpec& model) const {
    if (noise.dim() != model.n_y) throw DomainError("dataset noise model does not match model outputs");
    for (const auto& r : records) {
        if (r.u.size() != model.n_u || r.y.size() != model.n_y)
            throw DomainError("dataset record has wrong control or output dimension");
        if (!r.y.allFinite() || !r.u.allFinite()) throw DomainError("dataset contains non-finite values");
    }
}

double weighted_sse(const ModelSpec& model, const Dataset& data, const Vector& p) {
    const Vector& sigma = data.noise.sigma();
    double sse = 0.0;
    for (const auto& r : data.records) {
        const Vector y = eval_model(model, p, r.u);
        sse += ((r.y - y).array() / sigma.array()).square().sum();
    }
    return sse;
}

Estimate estimate_at(const ModelSpec& model, const Dataset& data, const Vector& p, double alpha) {
    Estimate est;
    est.p_hat = p;
    est.sse = weighted_sse(model, data, p);
    est.fim_at_estimate = assemble_fim(model, p, data.design(), data.noise);
    try {
        est.ellipsoid = confidence_ellipsoid(est.fim_at_estimate, p, alpha);
    } catch (const SingularFim&) {
        est.ellipsoid.reset();
    }
    return est;
}

Estimate least_squares_estimate(const ModelSpec& model, const Dataset& data, const ParameterBox& box,
                                const SolverConfig& cfg, double alpha) {
    data.validate(model);
    if (box.dim() != model.n_p) throw DomainError("parameter box does not match the model");
    if (static_cast<long>(data.size()) * model.n_y < model.n_p)
        throw UnderdeterminedData("dataset has " + std::to_string(data.size() * model.n_y) +
                                  " scalar observations for " + std::to_string(model.n_p) + " parameters");

    const Vector& sigma = data.noise.sigma();
    BoxProblem problem;
    problem.lower = box.lower();
    problem.upper = box.upper();
    problem.objective = [&](const Vector& p) {
        const std::span<const double> ps(p.data(), static_cast<std::size_t>(p.size()));
        std::vector<double> out(static_cast<std::size_t>(model.n_y));
        double sse = 0.0;
        for (const auto& r : data.records) {
            const std::span<const double> us(r.u.data(), static_cast<std::size_t>(r.u.size()));
            if (!is_admissible(model, ps, us)) return kInadmissibleSse;
            model.eval(ps, us, out);
            for (int i = 0; i < model.n_y; ++i) {
                const double res = (r.y[i] - out[static_cast<std::size_t>(i)]) / sigma[i];
                sse += res * res;
            }
        }
        return sse;
    };
    SolveReport report = minimize_boxed(problem, cfg);
    Estimate est = estimate_at(model, data, report.x_best, alpha);
    est.report = std::move(report);
    return est;
}

Vector simulate_measurement(const ModelSpec& model, const Vector& p_true, const Vector& u, const NoiseModel& noise,
                            Rng& rng) {
    if (noise.dim() != model.n_y) throw DomainError("noise model does not match model outputs");
    Vector y = eval_model(model, p_true, u);
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += noise.sigma()[i] * rng.normal();
    return y;
}

Vector simulate_measurement(const ModelSpec& model, const Vector& p_true, const Vector& u, const NoiseModel& noise,
                            std::uint64_t rng_seed) {
    Rng rng(rng_seed);
    return simulate_measurement(model, p_true, u, noise, rng);
}

Dataset read_dataset_csv(const std::string& path, const ModelSpec& model, const NoiseModel& noise) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset '" + path + "'");
    Dataset data;
    data.noise = noise;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    const auto expected = static_cast<std::size_t>(model.n_u + model.n_y);
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto cells = split_csv(t);
        const std::string where = path + ":" + std::to_string(line_no);
        if (!header_seen) {
            header_seen = true;
            if (cells.size() != expected)
                throw ConfigError(where + ": header needs " + std::to_string(expected) + " columns");
            for (int k = 0; k < model.n_u; ++k)
                if (cells[static_cast<std::size_t>(k)] != "u_" + std::to_string(k + 1))
                    throw ConfigError(where + ": expected column 'u_" + std::to_string(k + 1) + "'");
            for (int k = 0; k < model.n_y; ++k)
                if (cells[static_cast<std::size_t>(model.n_u + k)] != "y_" + std::to_string(k + 1))
                    throw ConfigError(where + ": expected column 'y_" + std::to_string(k + 1) + "'");
            continue;
        }
        if (cells.size() != expected)
            throw ConfigError(where + ": expected " + std::to_string(expected) + " values, got " +
                              std::to_string(cells.size()));
        Measurement m{Vector(model.n_u), Vector(model.n_y)};
        for (int k = 0; k < model.n_u; ++k) m.u[k] = parse_double(cells[static_cast<std::size_t>(k)], where);
        for (int k = 0; k < model.n_y; ++k)
            m.y[k] = parse_double(cells[static_cast<std::size_t>(model.n_u + k)], where);
        data.records.push_back(std::move(m));
    }
    if (!header_seen) throw ConfigError(path + ": missing header line");
    return data;
}

}  // namespace rdoe
