#include "mqnmr/analysis.hpp"

#include "levenberg_marquardt.hpp"
#include "mqnmr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace mqnmr {

namespace {

std::optional<double> linear_root(double x0, double y0, double x1, double y1) {
    if (y1 == 0.0) {
        return x1;
    }
    if ((y0 < 0.0) == (y1 < 0.0) || y0 == 0.0) {
        return std::nullopt;
    }
    return x0 + (0.0 - y0) * (x1 - x0) / (y1 - y0);
}

// Zeros of the sampled curve: exact zero samples and sign changes between
// neighbours, linearly interpolated.
std::vector<double> raw_zeros(const DecayCurve& curve) {
    std::vector<double> zeros;
    const auto& x = curve.abscissa;
    const auto& y = curve.values;
    if (!y.empty() && y.front() == 0.0) {
        zeros.push_back(x.front());
    }
    for (std::size_t i = 0; i + 1 < y.size(); ++i) {
        if (auto root = linear_root(x[i], y[i], x[i + 1], y[i + 1])) {
            zeros.push_back(*root);
        }
    }
    return zeros;
}

// Linear parameters of a + b g(k) by least squares (b only when with_offset
// is false).
Eigen::VectorXd linear_coefficients(std::span<const FitPoint> points, const std::vector<double>& g,
                                    bool with_offset) {
    const Eigen::Index n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd a(n, with_offset ? 2 : 1);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (with_offset) {
            a(i, 0) = 1.0;
            a(i, 1) = g[i];
        } else {
            a(i, 0) = g[i];
        }
        y(i) = points[i].value;
    }
    return a.colPivHouseholderQr().solve(y);
}

void check_fit_input(std::span<const FitPoint> points, std::size_t min_points) {
    if (points.size() < min_points) {
        throw ConfigError("fit needs at least " + std::to_string(min_points) + " points, got " +
                          std::to_string(points.size()));
    }
    for (const auto& pt : points) {
        if (!(pt.k > 0.0) || !std::isfinite(pt.value)) {
            throw ConfigError("fit points need k > 0 and finite values");
        }
    }
}

// Points sorted by k so that the objective's summation order does not depend
// on the caller's ordering.
std::vector<FitPoint> canonical(std::span<const FitPoint> points) {
    std::vector<FitPoint> sorted(points.begin(), points.end());
    std::sort(sorted.begin(), sorted.end(), [](const FitPoint& a, const FitPoint& b) {
        return a.k < b.k || (a.k == b.k && a.value < b.value);
    });
    return sorted;
}

FitResult best_of(FitModel model, const std::vector<Eigen::VectorXd>& starts,
                  const detail::ResidualFn& fn) {
    FitResult best;
    best.model = model;
    best.residual = std::numeric_limits<double>::infinity();
    for (const auto& start : starts) {
        const auto outcome = detail::levenberg_marquardt(fn, start);
        if (outcome.cost < best.residual) {
            best.parameters.assign(outcome.params.data(),
                                   outcome.params.data() + outcome.params.size());
            best.residual = outcome.cost;
            best.converged = outcome.converged && outcome.params.allFinite();
            best.cost_history = outcome.history;
        }
    }
    if (!std::isfinite(best.residual)) {
        best.converged = false;
    }
    return best;
}

}  // namespace

void DecayCurve::validate() const {
    if (abscissa.size() != values.size()) {
        throw ConfigError("decay curve abscissa and values differ in length");
    }
    for (std::size_t i = 1; i < abscissa.size(); ++i) {
        if (!(abscissa[i] > abscissa[i - 1])) {
            throw ConfigError("decay curve abscissa must be strictly increasing");
        }
    }
}

DecayCurve make_curve(const IntensitySeries& series, int k, int n_spins, double p,
                      ExperimentKind experiment) {
    DecayCurve curve;
    curve.abscissa = series.abscissa;
    curve.values = series.order_curve(k);
    curve.order = k;
    curve.n_spins = n_spins;
    curve.p = p;
    curve.experiment = experiment;
    return curve;
}

std::string_view to_string(DecayStatus status) {
    switch (status) {
        case DecayStatus::ok:
            return "ok";
        case DecayStatus::not_reached:
            return "not_reached";
        case DecayStatus::no_crossings:
            return "no_crossings";
    }
    return "unknown";
}

DecayTime decay_time_e(const DecayCurve& curve) {
    curve.validate();
    if (curve.values.empty() || !(curve.values.front() > 0.0)) {
        throw ConfigError("e-fold decay time needs a positive initial intensity");
    }
    const double threshold = curve.values.front() / std::numbers::e;
    const auto& x = curve.abscissa;
    const auto& y = curve.values;
    for (std::size_t i = 1; i < y.size(); ++i) {
        if (y[i] <= threshold) {
            const double frac = (threshold - y[i - 1]) / (y[i] - y[i - 1]);
            return {DecayStatus::ok, x[i - 1] + frac * (x[i] - x[i - 1])};
        }
    }
    return {DecayStatus::not_reached, 0.0};
}

double Envelope::operator()(double at) const {
    if (x.empty()) {
        return 0.0;
    }
    if (at <= x.front()) {
        return y.front();
    }
    if (at >= x.back()) {
        return y.back();
    }
    const auto it = std::upper_bound(x.begin(), x.end(), at);
    const std::size_t i = static_cast<std::size_t>(it - x.begin());
    const double frac = (at - x[i - 1]) / (x[i] - x[i - 1]);
    return y[i - 1] + frac * (y[i] - y[i - 1]);
}

std::optional<double> Envelope::first_zero_after(double after) const {
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        if (x[i + 1] <= after) {
            continue;
        }
        double x0 = x[i];
        double y0 = y[i];
        if (x0 < after) {
            y0 = (*this)(after);
            x0 = after;
        }
        if (auto root = linear_root(x0, y0, x[i + 1], y[i + 1]); root && *root > after) {
            return root;
        }
    }
    return std::nullopt;
}

std::optional<Envelopes> envelopes(const DecayCurve& curve) {
    curve.validate();
    Envelopes env;
    const auto& x = curve.abscissa;
    const auto& y = curve.values;
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        if (y[i] > y[i - 1] && y[i] > y[i + 1]) {
            env.upper.x.push_back(x[i]);
            env.upper.y.push_back(y[i]);
        } else if (y[i] < y[i - 1] && y[i] < y[i + 1]) {
            env.lower.x.push_back(x[i]);
            env.lower.y.push_back(y[i]);
        }
    }
    if (env.upper.x.size() < 2 || env.lower.x.size() < 2) {
        return std::nullopt;
    }
    return env;
}

DecayTime decay_time_perturbed(const DecayCurve& curve) {
    const auto env = envelopes(curve);
    if (!env) {
        return {DecayStatus::not_reached, 0.0};
    }
    const auto peak = std::max_element(env->upper.y.begin(), env->upper.y.end());
    const double peak_at = env->upper.x[static_cast<std::size_t>(peak - env->upper.y.begin())];
    auto upper_zero = env->upper.first_zero_after(peak_at);
    auto lower_zero = env->lower.first_zero_after(peak_at);
    if (!upper_zero || !lower_zero) {
        return {DecayStatus::not_reached, 0.0};
    }
    double from = *lower_zero;
    double to = *upper_zero;
    if (from > to) {
        std::swap(from, to);
    }
    double sum = 0.0;
    int count = 0;
    for (double z : raw_zeros(curve)) {
        if (z > from && z <= to) {
            sum += z;
            ++count;
        }
    }
    if (count == 0) {
        return {DecayStatus::no_crossings, 0.0};
    }
    return {DecayStatus::ok, sum / count};
}

std::string_view to_string(FitModel model) {
    return model == FitModel::coth ? "coth" : "tanh";
}

double FitResult::evaluate(double k) const {
    if (model == FitModel::coth) {
        return parameters.at(0) / std::tanh(parameters.at(1) * k + parameters.at(2));
    }
    return parameters.at(0) + parameters.at(1) * std::tanh(parameters.at(3) - parameters.at(2) * k);
}

FitResult fit_coth(std::span<const FitPoint> input) {
    check_fit_input(input, 4);
    const auto points = canonical(input);
    const Eigen::Index n = static_cast<Eigen::Index>(points.size());
    const detail::ResidualFn fn = [&points, n](const Eigen::VectorXd& q, Eigen::VectorXd& r,
                                               Eigen::MatrixXd* jac) {
        r.resize(n);
        if (jac) {
            jac->resize(n, 3);
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            const double u = q(1) * points[i].k + q(2);
            const double th = std::tanh(u);
            if (std::abs(th) < 1e-300) {
                return false;
            }
            r(i) = q(0) / th - points[i].value;
            if (jac) {
                const double sh = std::sinh(u);
                const double dcoth = -1.0 / (sh * sh);
                (*jac)(i, 0) = 1.0 / th;
                (*jac)(i, 1) = q(0) * dcoth * points[i].k;
                (*jac)(i, 2) = q(0) * dcoth;
            }
        }
        return true;
    };

    // 3 slopes x 3 offsets x 3 amplitude scales.
    const double k_min = points.front().k;
    const double k_max = points.back().k;
    std::vector<Eigen::VectorXd> starts;
    for (double slope_scale : {1.0, 3.0, 10.0}) {
        const double a2 = slope_scale / k_max;
        for (double offset : {-0.5, 0.0, 0.5}) {
            const double a3 = offset * a2 * k_min;
            std::vector<double> g;
            for (const auto& pt : points) {
                g.push_back(1.0 / std::tanh(a2 * pt.k + a3));
            }
            const double a1 = linear_coefficients(points, g, false)(0);
            for (double amp : {0.5, 1.0, 2.0}) {
                starts.push_back(Eigen::Vector3d(amp * a1, a2, a3));
            }
        }
    }
    return best_of(FitModel::coth, starts, fn);
}

FitResult fit_tanh(std::span<const FitPoint> input) {
    check_fit_input(input, 4);
    const auto points = canonical(input);
    const Eigen::Index n = static_cast<Eigen::Index>(points.size());
    const detail::ResidualFn fn = [&points, n](const Eigen::VectorXd& q, Eigen::VectorXd& r,
                                               Eigen::MatrixXd* jac) {
        r.resize(n);
        if (jac) {
            jac->resize(n, 4);
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            const double v = q(3) - q(2) * points[i].k;
            const double th = std::tanh(v);
            r(i) = q(0) + q(1) * th - points[i].value;
            if (jac) {
                const double sech2 = 1.0 - th * th;
                (*jac)(i, 0) = 1.0;
                (*jac)(i, 1) = th;
                (*jac)(i, 2) = -q(1) * sech2 * points[i].k;
                (*jac)(i, 3) = q(1) * sech2;
            }
        }
        return true;
    };

    // 3 rates x 3 centres x 3 amplitude scales; (a, b) from linear least squares.
    const double k_max = points.back().k;
    std::vector<Eigen::VectorXd> starts;
    for (double rate_scale : {1.0, 3.0, 10.0}) {
        const double c = rate_scale / k_max;
        for (double d : {0.5, 1.5, 3.0}) {
            std::vector<double> g;
            for (const auto& pt : points) {
                g.push_back(std::tanh(d - c * pt.k));
            }
            const Eigen::VectorXd ab = linear_coefficients(points, g, true);
            for (double amp : {0.5, 1.0, 2.0}) {
                Eigen::VectorXd start(4);
                start << ab(0), amp * ab(1), c, d;
                starts.push_back(start);
            }
        }
    }
    return best_of(FitModel::tanh, starts, fn);
}

ClusterCount cluster_size(const CoherenceSpectrum& spectrum, double j_min) {
    if (!(j_min > 0.0)) {
        throw ConfigError("cluster threshold j_min must be > 0");
    }
    ClusterCount count;
    for (int k = -spectrum.max_order; k <= spectrum.max_order; ++k) {
        if (spectrum.at(k) >= j_min) {
            ++count.all;
            if (k >= 0) {
                ++count.nonneg;
            }
        }
    }
    return count;
}

ClusterTrace cluster_trace_standard(const IntensitySeries& series, double j_min) {
    ClusterTrace trace;
    trace.abscissa = series.abscissa;
    trace.j_min = j_min;
    for (std::size_t i = 0; i < series.values.size(); ++i) {
        trace.counts.push_back(cluster_size(series.spectrum(i), j_min));
    }
    return trace;
}

ClusterTrace cluster_trace_perturbed(const IntensitySeries& series, double j_min) {
    if (!(j_min > 0.0)) {
        throw ConfigError("cluster threshold j_min must be > 0");
    }
    const int n = series.max_order;
    ClusterTrace trace;
    trace.abscissa = series.abscissa;
    trace.j_min = j_min;
    trace.counts.assign(series.abscissa.size(), ClusterCount{});
    for (int k = -n; k <= n; ++k) {
        DecayCurve curve;
        curve.abscissa = series.abscissa;
        curve.values = series.order_curve(k);
        const auto env = envelopes(curve);
        for (std::size_t i = 0; i < curve.abscissa.size(); ++i) {
            const double x = curve.abscissa[i];
            const double value = (env && env->upper.covers(x)) ? env->upper(x) : curve.values[i];
            if (value >= j_min) {
                ++trace.counts[i].all;
                if (k >= 0) {
                    ++trace.counts[i].nonneg;
                }
            }
        }
    }
    return trace;
}

double intensity_deficit(const SpinSystem& system, double p, double tau,
                         const SimulationOptions& options) {
    const double reference = PerturbedExperiment(system, 0.0, Mixing::ideal_mq, options)
                                 .spectrum(tau)
                                 .sum();
    const double perturbed =
        PerturbedExperiment(system, p, Mixing::ideal_mq, options).spectrum(tau).sum();
    return reference - perturbed;
}

SecondOrderCoefficient perturbation_second_order(const SpinSystem& system, double tau,
                                                 const SimulationOptions& options) {
    if (!(tau >= 0.0)) {
        throw ConfigError("tau must be >= 0");
    }
    // deficit / p^2 = A + B p + O(p^2); halving p eliminates B.
    constexpr double p_coarse = 1e-3;
    constexpr double p_fine = 5e-4;
    const double coarse = intensity_deficit(system, p_coarse, tau, options) / (p_coarse * p_coarse);
    const double fine = intensity_deficit(system, p_fine, tau, options) / (p_fine * p_fine);

    SecondOrderCoefficient out;
    out.numeric = 2.0 * fine - coarse;

    const StandardExperiment standard(system, options);
    // rho at the midpoint of the preparation period.
    const BlockOperator rho = standard.density(0.5 * tau);
    const BlockOperator hmq = build_hmq(system, standard.sectors());
    const BlockOperator hdz = build_hdz(system, standard.sectors());
    double trace = 0.0;
    for (std::size_t s = 0; s < rho.size(); ++s) {
        const Eigen::MatrixXcd x = hdz.blocks[s] - hmq.blocks[s];
        const Eigen::MatrixXcd c = rho.blocks[s] * x - x * rho.blocks[s];
        trace += standard.weights()[s] * (c * c).trace().real();
    }
    out.closed_form = -0.5 * tau * tau * trace;
    return out;
}

}  // namespace mqnmr
