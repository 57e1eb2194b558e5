// Python bindings for the core routines.
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wflevy/easg.hpp"
#include "wflevy/environment.hpp"
#include "wflevy/fixation.hpp"
#include "wflevy/odes.hpp"
#include "wflevy/sde.hpp"
#include "wflevy/stationary.hpp"
#include "wflevy/validation.hpp"

namespace py = pybind11;
using namespace wflevy;

namespace {

Environment make_env(double sigma, const std::vector<std::pair<double, double>>& atoms) {
    std::vector<Atom> parsed;
    for (const auto& [z, w] : atoms) parsed.push_back({z, w});
    return Environment(sigma, parsed);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Fixation probabilities of Wright-Fisher diffusions in a compound Poisson environment";

    py::register_exception<CutoffTooSmall>(m, "CutoffTooSmall", PyExc_ValueError);
    py::register_exception<NoStabilization>(m, "NoStabilization", PyExc_RuntimeError);

    py::class_<Environment>(m, "Environment")
        .def(py::init(&make_env), py::arg("sigma"), py::arg("atoms") = std::vector<std::pair<double, double>>{},
             "Drift sigma and jump atoms as (z, w) pairs.")
        .def_property_readonly("sigma", &Environment::sigma)
        .def_property_readonly("total_mass", &Environment::total_mass)
        .def_property_readonly("atoms",
                               [](const Environment& e) {
                                   std::vector<std::pair<double, double>> out;
                                   for (const auto& a : e.atoms()) out.emplace_back(a.z, a.w);
                                   return out;
                               })
        .def("moment", &Environment::moment, py::arg("p"))
        .def("tau", &Environment::tau, py::arg("i"), py::arg("j"))
        .def("__repr__", [](const Environment& e) { return "Environment(" + e.describe() + ")"; });

    py::class_<Bracket>(m, "Bracket")
        .def_readonly("lower", &Bracket::lower)
        .def_readonly("upper", &Bracket::upper)
        .def_property_readonly("width", &Bracket::width);

    py::class_<StationaryDistribution>(m, "StationaryDistribution")
        .def_readonly("cutoff", &StationaryDistribution::cutoff)
        .def_readonly("pi", &StationaryDistribution::pi)
        .def_readonly("tail_upper", &StationaryDistribution::tail_upper)
        .def_readonly("pi1_bracket", &StationaryDistribution::pi1_bracket)
        .def("__call__", &StationaryDistribution::operator(), py::arg("k"))
        .def("tail_from", &StationaryDistribution::tail_from, py::arg("k"));

    m.def("unnormalized_ratios", &unnormalized_ratios, py::arg("env"), py::arg("K"));
    m.def("tail_bound", &tail_bound, py::arg("env"), py::arg("k"));
    m.def("compute_pi", &compute_pi, py::arg("env"), py::arg("K"));
    m.def("compute_pi_auto", &compute_pi_auto, py::arg("env"), py::arg("target_tail") = 1e-14);

    py::class_<CoefficientGrid>(m, "CoefficientGrid")
        .def_readonly("K", &CoefficientGrid::K)
        .def_readonly("t", &CoefficientGrid::t)
        .def_readonly("values", &CoefficientGrid::values)
        .def("__call__", &CoefficientGrid::operator(), py::arg("k"), py::arg("j"))
        .def("row_sum", &CoefficientGrid::row_sum, py::arg("k"))
        .def("total", &CoefficientGrid::total)
        .def("polynomial", &CoefficientGrid::polynomial, py::arg("x"));

    m.def(
        "integrate_r",
        [](const Environment& env, int K, double T, int m_lines, int i, double max_dt) {
            return integrate_r(env, K, T, StepPolicy{max_dt}, m_lines, i);
        },
        py::arg("env"), py::arg("K"), py::arg("T"), py::arg("m") = 1, py::arg("i") = 1, py::arg("max_dt") = 0.01);
    m.def(
        "integrate_q",
        [](const Environment& env, int J, double T, int i) { return integrate_q(env, J, T, {}, i).values; },
        py::arg("env"), py::arg("J"), py::arg("T"), py::arg("i") = 1);
    m.def(
        "extract_a", [](const Environment& env, int K) { return extract_a(env, K).a; }, py::arg("env"),
        py::arg("K"));
    m.def(
        "extract_b_ode", [](const Environment& env, int J) { return extract_b_ode(env, J).b; }, py::arg("env"),
        py::arg("J"));
    m.def("b_ratios", &b_ratios, py::arg("env"), py::arg("J"));

    m.def(
        "normalize_b",
        [](const std::vector<double>& ratios, int j_max) -> py::object {
            const auto n = normalize_b(ratios, j_max);
            if (!n.ok) return py::none();
            return py::cast(n.coeffs.b);
        },
        py::arg("ratios"), py::arg("j_max") = 60, "Normalized coefficients, or None when the ratios do not decay.");

    py::class_<SeriesRepresentation>(m, "Series")
        .def_readonly("K", &SeriesRepresentation::K)
        .def_readonly("pi_tail", &SeriesRepresentation::pi_tail)
        .def(
            "h",
            [](const SeriesRepresentation& s, double x) {
                const auto v = h_series(x, s);
                return py::make_tuple(v.value, v.error_bound);
            },
            py::arg("x"), "(value, error bound) of the fixation probability at x.");
    m.def(
        "make_series", [](const Environment& env, int K) { return make_series(env, K); }, py::arg("env"),
        py::arg("K") = 64);
    m.def("closed_form_no_env", &closed_form_no_env, py::arg("x"), py::arg("sigma"));

    py::class_<FixationEstimate>(m, "FixationEstimate")
        .def_readonly("h", &FixationEstimate::h)
        .def_readonly("std_error", &FixationEstimate::std_error)
        .def_readonly("undecided_fraction", &FixationEstimate::undecided_fraction)
        .def_readonly("paths", &FixationEstimate::paths);

    m.def(
        "estimate_fixation",
        [](const Environment& env, double x0, std::int64_t n, double dt, double T_max, std::uint64_t seed,
           int threads) {
            PathConfig cfg;
            cfg.x0 = x0;
            cfg.dt = dt;
            cfg.T_max = T_max;
            cfg.seed = seed;
            py::gil_scoped_release release;
            return estimate_fixation(env, n, cfg, threads);
        },
        py::arg("env"), py::arg("x0"), py::arg("n_paths"), py::arg("dt") = 1e-3, py::arg("T_max") = 200.0,
        py::arg("seed") = 1, py::arg("threads") = 1);
    m.def(
        "estimate_moment",
        [](const Environment& env, double x0, int l, double T, std::int64_t n, double dt, std::uint64_t seed,
           int threads) {
            PathConfig cfg;
            cfg.x0 = x0;
            cfg.dt = dt;
            cfg.T_max = std::max(cfg.T_max, T);
            cfg.seed = seed;
            py::gil_scoped_release release;
            const auto e = estimate_moment(env, l, T, n, cfg, threads);
            return std::make_pair(e.value, e.std_error);
        },
        py::arg("env"), py::arg("x0"), py::arg("l"), py::arg("T"), py::arg("n_paths"), py::arg("dt") = 1e-3,
        py::arg("seed") = 1, py::arg("threads") = 1, "(mean, standard error) of X(T)^l.");
    m.def(
        "estimate_duality_coeffs",
        [](const Environment& env, int m_lines, int i, double T, std::int64_t n, std::uint64_t seed, int threads,
           int cap) {
            DualityEstimate d;
            {
                py::gil_scoped_release release;
                d = estimate_duality_coeffs(env, m_lines, i, T, n, seed, threads, cap);
            }
            py::dict R, Q;
            for (int k = 1; k <= d.cap; ++k)
                for (int j = 1; j <= k; ++j)
                    if (d.r(k, j).value != 0.0)
                        R[py::make_tuple(k, j)] = py::make_tuple(d.r(k, j).value, d.r(k, j).std_error);
            for (int j = 1; j <= d.cap; ++j)
                if (d.q(j).value != 0.0) Q[py::int_(j)] = py::make_tuple(d.q(j).value, d.q(j).std_error);
            py::dict out;
            out["R"] = R;
            out["Q"] = Q;
            out["overflow_fraction"] = d.overflow_fraction();
            return out;
        },
        py::arg("env"), py::arg("m"), py::arg("i"), py::arg("T"), py::arg("n_samples"), py::arg("seed") = 1,
        py::arg("threads") = 1, py::arg("cap") = 20);

    py::class_<CriterionResult>(m, "CriterionResult")
        .def_readonly("id", &CriterionResult::id)
        .def_readonly("title", &CriterionResult::title)
        .def_readonly("passed", &CriterionResult::passed)
        .def_readonly("measured", &CriterionResult::measured)
        .def_readonly("seconds", &CriterionResult::seconds)
        .def("__str__", &format_result);
    m.def(
        "run_validation",
        [](const std::vector<int>& only, bool quick, int threads) {
            ValidationOptions opts;
            opts.quick = quick;
            opts.threads = threads;
            py::gil_scoped_release release;
            return run_validation(opts, only);
        },
        py::arg("only") = std::vector<int>{}, py::arg("quick") = false, py::arg("threads") = 1);
}
