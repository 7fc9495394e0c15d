#include <algorithm>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "microlaser/coefficients.hpp"
#include "microlaser/errors.hpp"
#include "microlaser/lindblad_oracle.hpp"
#include "microlaser/params.hpp"
#include "microlaser/steady_state.hpp"
#include "microlaser/sweep.hpp"

namespace py = pybind11;
using namespace microlaser;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
    py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

std::vector<double> from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 1) throw py::value_error("expected a one-dimensional array");
    return {a.data(), a.data() + a.size()};
}

OracleConfig oracle_config(int n_atoms, int burn_in, int n_trajectories, int n_fock, std::uint64_t seed,
                           const std::string& gap_law, const std::string& sampling, bool lossless_flight,
                           int workers) {
    OracleConfig c;
    c.n_atoms = n_atoms;
    c.burn_in = burn_in;
    c.n_trajectories = n_trajectories;
    c.n_fock = n_fock;
    c.seed = seed;
    c.lossless_flight = lossless_flight;
    c.workers = workers;
    if (gap_law == "poisson_after_exit") c.gap_law = GapLaw::poisson_after_exit;
    else if (gap_law == "dead_time_corrected") c.gap_law = GapLaw::dead_time_corrected;
    else throw py::value_error("gap_law must be poisson_after_exit or dead_time_corrected");
    if (sampling == "pre_injection") c.sampling = SamplingMode::pre_injection;
    else if (sampling == "time_averaged") c.sampling = SamplingMode::time_averaged;
    else throw py::value_error("sampling must be pre_injection or time_averaged");
    return c;
}

py::dict moments_dict(const FieldMoments& m) {
    py::dict d;
    d["mean_n"] = m.mean_n;
    d["second_moment"] = m.second_moment;
    d["v"] = m.variance_ratio_v ? py::object(py::float_(*m.variance_ratio_v)) : py::none();
    d["classification"] = std::string(to_string(m.classification));
    return d;
}

TruncationPolicy policy(double rel_tol, int hard_cap) {
    TruncationPolicy p;
    p.rel_tol = rel_tol;
    p.hard_cap = hard_cap;
    return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Continued-fraction steady state and master-equation oracle for the one-atom microlaser";
    m.attr("__version__") = "0.1.0";

    // Python side: InvalidParameter and ConfigError are ValueErrors,
    // NumericalError an ArithmeticError. pybind11 tries the newest translator
    // first, so bases are registered before their subclasses.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    auto& invalid = py::register_exception<InvalidParameter>(m, "InvalidParameter", PyExc_ValueError);
    py::register_exception<SingleAtomRegimeViolation>(m, "SingleAtomRegimeViolation", invalid.ptr());
    auto& numerical = py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<TruncationLeak>(m, "TruncationLeak", numerical.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<MicrolaserParams>(m, "Params")
        .def(py::init([](double g, double kappa, double gamma, double R, double tau) {
                 return MicrolaserParams{g, kappa, gamma, R, tau};
             }),
             py::kw_only(), py::arg("g") = 1.0, py::arg("kappa"), py::arg("gamma"), py::arg("R"), py::arg("tau"))
        .def_readwrite("g", &MicrolaserParams::g)
        .def_readwrite("kappa", &MicrolaserParams::kappa)
        .def_readwrite("gamma", &MicrolaserParams::gamma)
        .def_readwrite("R", &MicrolaserParams::R)
        .def_readwrite("tau", &MicrolaserParams::tau)
        .def_property_readonly("N", &MicrolaserParams::atoms_per_lifetime)
        .def_property_readonly("D", [](const MicrolaserParams& p) { return pump_parameter(p); })
        .def("__repr__", [](const MicrolaserParams& p) {
            return "Params(g=" + format_csv_number(p.g) + ", kappa=" + format_csv_number(p.kappa) +
                   ", gamma=" + format_csv_number(p.gamma) + ", R=" + format_csv_number(p.R) +
                   ", tau=" + format_csv_number(p.tau) + ")";
        });

    m.def(
        "from_dimensionless",
        [](double N, double kappa_over_g, double gamma_over_g, double g_tau) {
            return from_dimensionless(N, kappa_over_g, gamma_over_g, g_tau);
        },
        py::arg("N"), py::arg("kappa_over_g"), py::arg("gamma_over_g"), py::arg("g_tau"));
    m.def(
        "validate", [](const MicrolaserParams& p) {
            std::vector<std::string> out;
            for (const auto& v : validate(p)) out.push_back(v.message());
            return out;
        },
        "Messages for every broken parameter bound (empty when valid).");

    m.def("coeff_X", &coeff_X, py::arg("n"), py::arg("params"));
    m.def("coeff_Y", &coeff_Y, py::arg("n"), py::arg("params"));
    m.def("coeff_Z", &coeff_Z, py::arg("n"), py::arg("params"));
    m.def("coeff_F", &coeff_F, py::arg("i"), py::arg("n"), py::arg("params"));
    m.def(
        "fraction_terms",
        [](int n, const MicrolaserParams& p) {
            const FractionTerms t = fraction_terms(n, p);
            return py::make_tuple(t.f1, t.f2, t.f3);
        },
        py::arg("n"), py::arg("params"), "(f1, f2, f3) of the continued fraction at n.");

    m.def(
        "photon_distribution",
        [](const MicrolaserParams& p, double rel_tol, int hard_cap) {
            return to_array(photon_distribution(p, policy(rel_tol, hard_cap)).probabilities());
        },
        py::arg("params"), py::arg("rel_tol") = 1e-10, py::arg("hard_cap") = 20000,
        "Steady-state P_n, n = 0..n_max.");
    m.def(
        "lossless_baseline",
        [](const MicrolaserParams& p) { return to_array(lossless_baseline(p).probabilities()); },
        py::arg("params"), "P_n with no losses during the flight.");
    m.def(
        "moments", [](const py::array_t<double>& p) { return moments_dict(moments(distribution_from_weights(from_array(p)))); },
        py::arg("p"));
    m.def(
        "solve",
        [](const MicrolaserParams& p) {
            const Solution s = solve(p);
            py::dict d = moments_dict(s.moments);
            d["D"] = s.D;
            d["n_max"] = s.distribution.n_max;
            d["tail_mass_bound"] = s.distribution.tail_mass_bound;
            d["negative_weights"] = s.distribution.negative_weights;
            d["p"] = to_array(s.distribution.probabilities());
            return d;
        },
        py::arg("params"));
    m.def(
        "total_variation",
        [](const py::array_t<double>& a, const py::array_t<double>& b) {
            return total_variation_distance(from_array(a), from_array(b));
        },
        py::arg("a"), py::arg("b"));

    m.def(
        "simulate_steady_state",
        [](const MicrolaserParams& p, int n_atoms, int burn_in, int n_trajectories, int n_fock, std::uint64_t seed,
           const std::string& gap_law, const std::string& sampling, bool lossless_flight, int workers) {
            const OracleConfig cfg =
                oracle_config(n_atoms, burn_in, n_trajectories, n_fock, seed, gap_law, sampling, lossless_flight, workers);
            OracleEstimate est;
            {
                py::gil_scoped_release release;
                est = simulate_steady_state(p, cfg);
            }
            py::dict d;
            d["p"] = to_array(est.p_hat);
            d["stderr"] = to_array(est.standard_error);
            d["n_atoms_used"] = est.n_atoms_used;
            d["n_trajectories"] = est.n_trajectories;
            d["seed"] = est.seed;
            return d;
        },
        py::arg("params"), py::kw_only(), py::arg("n_atoms") = 2200, py::arg("burn_in") = 200,
        py::arg("n_trajectories") = 10, py::arg("n_fock") = 40, py::arg("seed") = 1,
        py::arg("gap_law") = "poisson_after_exit", py::arg("sampling") = "pre_injection",
        py::arg("lossless_flight") = false, py::arg("workers") = 0,
        "Monte-Carlo master-equation estimate of P_n (n_atoms includes burn-in).");

    m.def(
        "validate_point",
        [](const MicrolaserParams& p, int n_atoms, int burn_in, int n_trajectories, int n_fock, std::uint64_t seed,
           bool lossless_flight, int workers) {
            const OracleConfig cfg = oracle_config(n_atoms, burn_in, n_trajectories, n_fock, seed, "poisson_after_exit",
                                                   "pre_injection", lossless_flight, workers);
            ValidationReport r;
            {
                py::gil_scoped_release release;
                r = validate_point(p, cfg);
            }
            py::dict d;
            d["total_variation"] = r.total_variation;
            d["summed_standard_error"] = r.summed_standard_error;
            d["threshold"] = r.threshold;
            d["pass"] = r.pass;
            d["z_scores"] = to_array(r.z_scores);
            d["oracle"] = to_array(r.estimate.p_hat);
            d["reference"] = to_array(r.reference);
            return d;
        },
        py::arg("params"), py::kw_only(), py::arg("n_atoms") = 2200, py::arg("burn_in") = 200,
        py::arg("n_trajectories") = 10, py::arg("n_fock") = 40, py::arg("seed") = 1,
        py::arg("lossless_flight") = false, py::arg("workers") = 0);

    m.def(
        "sweep_csv",
        [](const std::string& config_text, int workers) {
            const SweepSpec spec = parse_config(config_text);
            std::ostringstream out;
            {
                py::gil_scoped_release release;
                emit_csv(run_sweep(spec, workers), spec.outputs, out);
            }
            return out.str();
        },
        py::arg("config_text"), py::arg("workers") = 0, "Run a sweep config and return the CSV text.");
}
