#pragma once

// Decay-time extraction, envelope processing, model fitting and
// coherence-cluster counting on top of the intensity spectra.

#include "mqnmr/coherence.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace mqnmr {

enum class ExperimentKind { standard, perturbed };

// One coherence order's intensity sampled on a strictly increasing grid
// (t for the standard experiment, tau for the perturbed one).
struct DecayCurve {
    std::vector<double> abscissa;
    std::vector<double> values;
    int order = 0;
    int n_spins = 0;
    double p = 0.0;
    ExperimentKind experiment = ExperimentKind::standard;

    // Throws ConfigError when the grid is not strictly increasing or the
    // sizes differ.
    void validate() const;
};

DecayCurve make_curve(const IntensitySeries& series, int k, int n_spins, double p,
                      ExperimentKind experiment);

enum class DecayStatus { ok, not_reached, no_crossings };

std::string_view to_string(DecayStatus status);

struct DecayTime {
    DecayStatus status = DecayStatus::not_reached;
    double value = 0.0;  // meaningful only when status == ok
};

// Smallest abscissa at which values.front() / value reaches e, linearly
// interpolated between the bracketing samples. values.front() must be > 0.
DecayTime decay_time_e(const DecayCurve& curve);

// Piecewise-linear function through (x, y) knots; constant beyond the ends.
struct Envelope {
    std::vector<double> x;
    std::vector<double> y;

    double operator()(double at) const;
    bool covers(double at) const { return !x.empty() && at >= x.front() && at <= x.back(); }
    // First abscissa > after where the envelope reaches zero.
    std::optional<double> first_zero_after(double after) const;
};

struct Envelopes {
    Envelope upper;  // through local maxima
    Envelope lower;  // through local minima
};

// nullopt when the curve has fewer than two local maxima or two local minima.
std::optional<Envelopes> envelopes(const DecayCurve& curve);

// Mean of the raw-curve zeros lying between the first envelope zeros after
// the peak of the upper envelope.
DecayTime decay_time_perturbed(const DecayCurve& curve);

struct FitPoint {
    double k;
    double value;
};

enum class FitModel { coth, tanh };

std::string_view to_string(FitModel model);

struct FitResult {
    FitModel model = FitModel::coth;
    // coth: a1 coth(a2 k + a3). tanh: a + b tanh(d - c k), stored (a, b, c, d).
    std::vector<double> parameters;
    double residual = 0.0;  // sum of squared residuals
    bool converged = false;
    // Objective after every accepted iteration of the winning start.
    std::vector<double> cost_history;

    double evaluate(double k) const;
};

FitResult fit_coth(std::span<const FitPoint> points);
FitResult fit_tanh(std::span<const FitPoint> points);

struct ClusterCount {
    int all = 0;      // orders k in [-N, N]
    int nonneg = 0;   // orders k in [0, N]
};

// Orders whose intensity is >= j_min.
ClusterCount cluster_size(const CoherenceSpectrum& spectrum, double j_min);

struct ClusterTrace {
    std::vector<double> abscissa;
    std::vector<ClusterCount> counts;
    double j_min = 0.0;
};

// Standard experiment: count J_k(t) >= j_min at every t.
ClusterTrace cluster_trace_standard(const IntensitySeries& series, double j_min);

// Perturbed experiment: count upper envelopes >= j_min at every tau. Where
// an order has no envelope (outside its knot span, or too little
// oscillation) the raw sample is used.
ClusterTrace cluster_trace_perturbed(const IntensitySeries& series, double j_min);

struct SecondOrderCoefficient {
    double numeric = 0.0;      // Richardson-extrapolated deficit / p^2
    double closed_form = 0.0;  // -(tau^2 / 2) Tr{[rho(tau / 2), H_dz - H_MQ]^2}
};

// Both quantities are normalized by Tr{I_z^2}, like the intensities.
SecondOrderCoefficient perturbation_second_order(const SpinSystem& system, double tau,
                                                 const SimulationOptions& options = {});

// sum_k J_k(tau, 0) - sum_k J_k(tau, p), ideal_mq mixing.
double intensity_deficit(const SpinSystem& system, double p, double tau,
                         const SimulationOptions& options = {});

}  // namespace mqnmr
