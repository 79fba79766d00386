#include "rdoe/commands.hpp"
#include "rdoe/config.hpp"
#include "rdoe/design.hpp"
#include "rdoe/estimation.hpp"
#include "rdoe/statistics.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace rdoe;

namespace {

CriterionConfig criterion_for(const ModelSpec& m, const std::optional<Vector>& scaling) {
    CriterionConfig c;
    c.scaling = scaling ? *scaling : Vector::Ones(m.n_p);
    c.validate(m.n_p);
    return c;
}

SolverConfig solver_for(int n_starts, std::uint64_t seed) {
    SolverConfig s;
    s.n_starts = n_starts;
    s.seed = seed;
    return s;
}

ScenarioSet scenario_set(const std::vector<Vector>& realizations, const std::optional<std::vector<double>>& weights) {
    ScenarioSet s = ScenarioSet::uniform(realizations);
    if (weights) s.weights = *weights;
    s.validate();
    return s;
}

py::dict outcome_dict(const DesignOutcome& d) {
    py::dict out;
    out["controls"] = d.design.controls;
    out["objective"] = d.objective;
    out["n_evals"] = d.report.n_evals;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Robust model-based design of experiments";

    // Translators run newest first, so the base class goes first.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<UnderdeterminedData>(m, "UnderdeterminedData", PyExc_ValueError);

    m.def("models", &registered_model_ids);
    m.def("presets", &preset_names);

    m.def(
        "evaluate",
        [](const std::string& model, const Vector& p, const Vector& u) { return eval_model(find_model(model), p, u); },
        py::arg("model"), py::arg("p"), py::arg("u"));
    m.def(
        "sensitivity",
        [](const std::string& model, const Vector& p, const Vector& u) {
            return eval_sensitivity(find_model(model), p, u);
        },
        py::arg("model"), py::arg("p"), py::arg("u"));

    m.def(
        "fim",
        [](const std::string& model, const Vector& p, const Matrix& controls, const Vector& sigma) {
            return assemble_fim(find_model(model), p, Design(controls), NoiseModel(sigma)).matrix;
        },
        py::arg("model"), py::arg("p"), py::arg("controls"), py::arg("sigma"));
    m.def(
        "a_criterion",
        [](const Matrix& fim, const std::optional<Vector>& scaling) {
            CriterionConfig c;
            if (scaling) c.scaling = *scaling;
            return a_criterion(fim, c).value;
        },
        py::arg("fim"), py::arg("scaling") = std::nullopt);
    m.def("chi2_quantile", &chi2_quantile, py::arg("alpha"), py::arg("dof"));

    m.def(
        "design_nominal",
        [](const std::string& model, const Vector& p_hat, int n, const Vector& sigma,
           const std::optional<Vector>& scaling, int n_starts, std::uint64_t seed) {
            const ModelSpec ms = find_model(model);
            py::gil_scoped_release release;
            const DesignOutcome d = design_nominal(ms, p_hat, n, NoiseModel(sigma), solver_for(n_starts, seed),
                                                   criterion_for(ms, scaling));
            py::gil_scoped_acquire acquire;
            return outcome_dict(d);
        },
        py::arg("model"), py::arg("p_hat"), py::arg("n"), py::arg("sigma"), py::arg("scaling") = std::nullopt,
        py::arg("n_starts") = 0, py::arg("seed") = 0);

    m.def(
        "design_robust",
        [](const std::string& model, const std::string& kind, const std::vector<Vector>& realizations, int n,
           const Vector& sigma, const std::optional<std::vector<double>>& weights,
           const std::optional<Vector>& scaling, int n_starts, std::uint64_t seed) {
            const ModelSpec ms = find_model(model);
            const ScenarioSet s = scenario_set(realizations, weights);
            if (kind != "minmax" && kind != "scenario") throw ConfigError("kind must be 'minmax' or 'scenario'");
            py::gil_scoped_release release;
            const auto solver = solver_for(n_starts, seed);
            const auto crit = criterion_for(ms, scaling);
            const DesignOutcome d = kind == "minmax" ? design_minmax(ms, s, n, NoiseModel(sigma), solver, crit)
                                                     : design_scenario(ms, s, n, NoiseModel(sigma), solver, crit);
            py::gil_scoped_acquire acquire;
            return outcome_dict(d);
        },
        py::arg("model"), py::arg("kind"), py::arg("realizations"), py::arg("n"), py::arg("sigma"),
        py::arg("weights") = std::nullopt, py::arg("scaling") = std::nullopt, py::arg("n_starts") = 0,
        py::arg("seed") = 0);

    m.def(
        "design_two_stage",
        [](const std::string& model, const std::vector<Vector>& realizations, int n, int n_e, const Vector& sigma,
           const std::optional<std::vector<double>>& weights, const std::optional<Vector>& scaling, int n_starts,
           std::uint64_t seed) {
            const ModelSpec ms = find_model(model);
            const ScenarioSet s = scenario_set(realizations, weights);
            py::gil_scoped_release release;
            const StagedOutcome r = design_two_stage(ms, s, n, n_e, NoiseModel(sigma), solver_for(n_starts, seed),
                                                     criterion_for(ms, scaling));
            py::gil_scoped_acquire acquire;
            py::dict out;
            out["shared"] = r.design.blocks.front().controls;
            py::list recourse;
            for (std::size_t k = 1; k < r.design.blocks.size(); ++k) recourse.append(r.design.blocks[k].controls);
            out["recourse"] = recourse;
            out["objective"] = r.objective;
            return out;
        },
        py::arg("model"), py::arg("realizations"), py::arg("n"), py::arg("n_e"), py::arg("sigma"),
        py::arg("weights") = std::nullopt, py::arg("scaling") = std::nullopt, py::arg("n_starts") = 0,
        py::arg("seed") = 0);

    m.def(
        "estimate",
        [](const std::string& model, const Matrix& controls, const Matrix& outputs, const Vector& sigma,
           const Vector& lower, const Vector& upper, double alpha) {
            const ModelSpec ms = find_model(model);
            if (controls.rows() != outputs.rows()) throw DomainError("controls and outputs need the same row count");
            Dataset data;
            data.noise = NoiseModel(sigma);
            for (Eigen::Index t = 0; t < controls.rows(); ++t)
                data.records.push_back({controls.row(t).transpose(), outputs.row(t).transpose()});
            const Estimate e = least_squares_estimate(ms, data, ParameterBox(lower, upper), {}, alpha);
            py::dict out;
            out["p_hat"] = e.p_hat;
            out["sse"] = e.sse;
            out["fim"] = e.fim_at_estimate.matrix;
            if (e.ellipsoid)
                out["half_widths"] = e.ellipsoid->half_widths();
            else
                out["half_widths"] = py::none();
            return out;
        },
        py::arg("model"), py::arg("controls"), py::arg("outputs"), py::arg("sigma"), py::arg("lower"),
        py::arg("upper"), py::arg("alpha") = kTwoSigmaAlpha);

    m.def(
        "preset_config", [](const std::string& name) {
            RunConfig c = preset_config(name);
            c.resolve(find_model(c.model));
            return config_to_json(c);
        },
        py::arg("name"));

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args, const std::string& input) {
            std::istringstream in(input);
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = run_cli(args, in, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), py::arg("input") = "");
}
