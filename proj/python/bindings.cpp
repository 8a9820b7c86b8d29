#include "mqnmr/analysis.hpp"
#include "mqnmr/coherence.hpp"
#include "mqnmr/errors.hpp"
#include "mqnmr/oracle.hpp"
#include "mqnmr/runner.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <map>
#include <sstream>

namespace py = pybind11;
using namespace mqnmr;

namespace {

template <typename T>
py::array_t<T> to_array(const std::vector<T>& v) {
    py::array_t<T> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::dict spectrum_dict(const CoherenceSpectrum& s) {
    py::dict d;
    d["orders"] = to_array(s.orders());
    d["intensities"] = to_array(s.intensities);
    d["normalization"] = s.normalization;
    return d;
}

// values[point][k + N] as a (points, 2N + 1) array.
py::array_t<double> series_matrix(const IntensitySeries& s) {
    const auto rows = static_cast<py::ssize_t>(s.values.size());
    const auto cols = static_cast<py::ssize_t>(2 * s.max_order + 1);
    py::array_t<double> out({rows, cols});
    auto m = out.mutable_unchecked<2>();
    for (py::ssize_t i = 0; i < rows; ++i) {
        for (py::ssize_t j = 0; j < cols; ++j) {
            m(i, j) = s.values[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    return out;
}

DecayCurve curve_from(const std::vector<double>& x, const std::vector<double>& y, ExperimentKind kind) {
    DecayCurve c;
    c.abscissa = x;
    c.values = y;
    c.experiment = kind;
    return c;
}

py::object decay_result(const DecayTime& d) {
    py::dict out;
    out["status"] = std::string(to_string(d.status));
    out["value"] = d.status == DecayStatus::ok ? py::cast(d.value) : py::none();
    return out;
}

py::dict fit_dict(const FitResult& f) {
    py::dict d;
    d["model"] = std::string(to_string(f.model));
    d["parameters"] = f.parameters;
    d["residual"] = f.residual;
    d["converged"] = f.converged;
    d["cost_history"] = f.cost_history;
    return d;
}

std::vector<FitPoint> fit_points(const std::vector<double>& k, const std::vector<double>& v) {
    if (k.size() != v.size()) {
        throw ConfigError("orders and values must have the same length");
    }
    std::vector<FitPoint> pts;
    for (std::size_t i = 0; i < k.size(); ++i) {
        pts.push_back({k[i], v[i]});
    }
    return pts;
}

SimulationOptions options(double cutoff, int workers) { return {cutoff, workers}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Multiple-quantum NMR coherence simulator for equivalent dipolar spins";
    m.attr("__version__") = MQNMR_VERSION;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

    m.def(
        "sectors",
        [](int n) {
            py::list out;
            for (const auto& s : enumerate_sectors(SpinSystem(n))) {
                py::dict d;
                d["spin"] = s.spin();
                d["dim"] = s.dim;
                // Degeneracies overflow 64 bits for large N; hand over the exact integer.
                d["degeneracy"] = py::module_::import("builtins").attr("int")(s.degeneracy.str());
                out.append(d);
            }
            return out;
        },
        py::arg("n_spins"), "Total-spin sectors with exact degeneracies, largest S first.");

    m.def(
        "intensities_a",
        [](int n, double tau, double t, double coupling, double cutoff) {
            return spectrum_dict(intensities_experiment_A(SpinSystem(n, coupling), tau, t, options(cutoff, 1)));
        },
        py::arg("n_spins"), py::arg("tau"), py::arg("t") = 0.0, py::arg("coupling") = 1.0,
        py::arg("sector_cutoff") = 1e-15, "Standard experiment J_k(tau, t).");

    m.def(
        "intensities_b",
        [](int n, double p, double tau, const std::string& mixing, double coupling, double cutoff) {
            return spectrum_dict(intensities_experiment_B(SpinSystem(n, coupling), p, tau, parse_mixing(mixing),
                                                          options(cutoff, 1)));
        },
        py::arg("n_spins"), py::arg("p"), py::arg("tau"), py::arg("mixing") = "ideal_mq",
        py::arg("coupling") = 1.0, py::arg("sector_cutoff") = 1e-15, "Perturbed preparation J_k(tau, p).");

    m.def(
        "oracle_a",
        [](int n, double tau, double t) { return spectrum_dict(oracle::intensities_standard(SpinSystem(n), tau, t)); },
        py::arg("n_spins"), py::arg("tau"), py::arg("t") = 0.0, "Full 2^N reference for the standard experiment.");

    m.def(
        "oracle_b",
        [](int n, double p, double tau, const std::string& mixing) {
            return spectrum_dict(oracle::intensities_perturbed(SpinSystem(n), p, tau, parse_mixing(mixing)));
        },
        py::arg("n_spins"), py::arg("p"), py::arg("tau"), py::arg("mixing") = "ideal_mq",
        "Full 2^N reference for the perturbed experiment.");

    m.def(
        "averaged_a",
        [](int n, const std::vector<double>& t_grid, double tau0, double periods, int steps, int workers) {
            const auto avg = averaged_intensities(SpinSystem(n), t_grid, AveragingWindow{tau0, periods, steps},
                                                  options(1e-15, workers));
            return series_matrix(avg.series);
        },
        py::arg("n_spins"), py::arg("t_grid"), py::arg("tau0") = 31.0, py::arg("periods") = 2.0,
        py::arg("steps") = 2000, py::arg("workers") = 1,
        "Window-averaged intensities, shape (len(t_grid), 2N + 1), column k + N.");

    m.def(
        "series_b",
        [](int n, double p, const std::vector<double>& tau_grid, const std::string& mixing, int workers) {
            return series_matrix(
                PerturbedExperiment(SpinSystem(n), p, parse_mixing(mixing), options(1e-15, workers)).series(tau_grid));
        },
        py::arg("n_spins"), py::arg("p"), py::arg("tau_grid"), py::arg("mixing") = "ideal_mq",
        py::arg("workers") = 1, "Perturbed intensities on a tau grid, shape (len(tau_grid), 2N + 1).");

    m.def(
        "fourier_areas",
        [](int n, double tau, double t_ev, int samples) {
            const auto a = fourier_area_check(SpinSystem(n), tau, t_ev, samples);
            py::dict d;
            d["orders"] = a.orders;
            d["analytic"] = to_array(a.analytic);
            d["numeric"] = to_array(a.numeric);
            d["analytic_sum"] = a.analytic_sum;
            d["numeric_sum"] = a.numeric_sum;
            return d;
        },
        py::arg("n_spins"), py::arg("tau"), py::arg("t_ev") = 1.0, py::arg("samples") = 4096);

    m.def(
        "decay_time_e",
        [](const std::vector<double>& t, const std::vector<double>& values) {
            return decay_result(decay_time_e(curve_from(t, values, ExperimentKind::standard)));
        },
        py::arg("t"), py::arg("values"));

    m.def(
        "decay_time_envelope",
        [](const std::vector<double>& tau, const std::vector<double>& values) {
            return decay_result(decay_time_perturbed(curve_from(tau, values, ExperimentKind::perturbed)));
        },
        py::arg("tau"), py::arg("values"));

    m.def(
        "fit_coth",
        [](const std::vector<double>& k, const std::vector<double>& v) { return fit_dict(fit_coth(fit_points(k, v))); },
        py::arg("orders"), py::arg("values"), "a1 coth(a2 k + a3)");

    m.def(
        "fit_tanh",
        [](const std::vector<double>& k, const std::vector<double>& v) { return fit_dict(fit_tanh(fit_points(k, v))); },
        py::arg("orders"), py::arg("values"), "a + b tanh(d - c k), parameters (a, b, c, d)");

    m.def(
        "second_order",
        [](int n, double tau) {
            const auto c = perturbation_second_order(SpinSystem(n), tau);
            return py::make_tuple(c.numeric, c.closed_form);
        },
        py::arg("n_spins"), py::arg("tau"), "(numeric, closed form) coefficient of p^2 in the intensity deficit.");

    m.def(
        "run",
        [](const std::map<std::string, std::string>& settings) {
            RunConfig config;
            for (const auto& [key, value] : settings) {
                apply_setting(config, key, value);
            }
            std::ostringstream log, err;
            const int code = run(config, log, err);
            return py::make_tuple(code, log.str(), err.str());
        },
        py::arg("settings"),
        "Runs the command-line pipeline from {flag: value} strings; returns (exit code, log, errors).");
}
