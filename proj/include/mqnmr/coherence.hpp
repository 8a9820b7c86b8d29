#pragma once

// Multiple-quantum coherence decomposition and intensity spectra for the
// standard experiment (decay under H_dz during evolution) and the perturbed
// preparation experiment (decay under H_eff(p) during preparation).

#include "mqnmr/propagator.hpp"
#include "mqnmr/spin_core.hpp"

#include <numbers>
#include <optional>
#include <string_view>
#include <vector>

namespace mqnmr {

// Intensities J_k for k = -N..N.
struct CoherenceSpectrum {
    int max_order = 0;
    std::vector<double> intensities;  // index k + max_order
    double normalization = 1.0;       // Tr{I_z^2} of the full 2^N space

    double at(int k) const { return intensities.at(static_cast<std::size_t>(k + max_order)); }
    std::vector<int> orders() const;
    double sum() const;
};

// Intensities of every order sampled along one time axis.
struct IntensitySeries {
    int max_order = 0;
    std::vector<double> abscissa;
    std::vector<std::vector<double>> values;  // [point][k + max_order]

    double at(std::size_t point, int k) const {
        return values.at(point).at(static_cast<std::size_t>(k + max_order));
    }
    std::vector<double> order_curve(int k) const;
    CoherenceSpectrum spectrum(std::size_t point) const;
};

// tau window [tau0, tau0 + periods * T], T = 2 pi / sqrt(3), integrated by
// the composite trapezoid rule with `steps` intervals.
struct AveragingWindow {
    double tau0 = 31.0;
    double periods = 2.0;
    int steps = 2000;

    static constexpr double period() { return 2.0 * std::numbers::pi / std::numbers::sqrt3; }
    double length() const { return periods * period(); }
    double step() const { return length() / steps; }
    // Throws ConfigError for a grid coarser than T / 100.
    void validate() const;
};

struct AveragedSpectrum {
    AveragingWindow window;
    IntensitySeries series;  // abscissa is t
};

enum class Mixing { ideal_mq, matched_heff };

std::string_view to_string(Mixing mixing);
Mixing parse_mixing(std::string_view text);

struct SimulationOptions {
    // Largest-S sectors are skipped while their combined share of Tr{I_z^2}
    // stays below this bound; every J_k moves by at most the same amount.
    double sector_cutoff = 1e-15;
    int workers = 1;
};

// Elements with M_row - M_col = k, everything else zeroed.
BlockOperator coherence_component(const BlockOperator& rho, int k);

// Standard experiment: rho(tau) from H_MQ, each rho_k dephased by H_dz for t.
class StandardExperiment {
public:
    explicit StandardExperiment(const SpinSystem& system, const SimulationOptions& options = {});

    const SpinSystem& system() const { return system_; }
    const std::vector<SpinSector>& sectors() const { return sectors_; }
    // n_N(S) / Tr{I_z^2} for each retained sector.
    const std::vector<double>& weights() const { return weights_; }
    double normalization() const { return normalization_; }

    CoherenceSpectrum spectrum(double tau, double t) const;
    // J_k(tau, t) for every t in t_grid at one tau.
    IntensitySeries evolution_series(double tau, const std::vector<double>& t_grid) const;
    // Window-averaged intensities at every t.
    AveragedSpectrum averaged(const std::vector<double>& t_grid,
                              const AveragingWindow& window = {}) const;
    // rho(tau) restricted to the retained sectors.
    BlockOperator density(double tau) const;

private:
    SpinSystem system_;
    SimulationOptions options_;
    std::vector<SpinSector> sectors_;
    std::vector<double> weights_;
    double normalization_ = 1.0;
    std::vector<Eigen::VectorXd> hdz_diagonal_;
    PreparationEvolution ideal_;
};

// Perturbed preparation: J_k(tau, p) = Tr{rho~_k(tau, p) rho_{-k}}, the
// partner being rho(tau) under H_MQ (ideal_mq) or rho~ itself (matched_heff).
class PerturbedExperiment {
public:
    PerturbedExperiment(const SpinSystem& system, double p, Mixing mixing = Mixing::ideal_mq,
                        const SimulationOptions& options = {});

    double p() const { return p_; }
    Mixing mixing() const { return mixing_; }
    double normalization() const { return normalization_; }

    CoherenceSpectrum spectrum(double tau) const;
    IntensitySeries series(const std::vector<double>& tau_grid) const;

private:
    std::vector<double> spectrum_row(double tau) const;

    SpinSystem system_;
    double p_;
    Mixing mixing_;
    SimulationOptions options_;
    std::vector<SpinSector> sectors_;
    std::vector<double> weights_;
    double normalization_ = 1.0;
    PreparationEvolution perturbed_;
    std::optional<PreparationEvolution> ideal_;
};

CoherenceSpectrum intensities_experiment_A(const SpinSystem& system, double tau, double t,
                                           const SimulationOptions& options = {});

CoherenceSpectrum intensities_experiment_B(const SpinSystem& system, double p, double tau,
                                           Mixing mixing = Mixing::ideal_mq,
                                           const SimulationOptions& options = {});

AveragedSpectrum averaged_intensities(const SpinSystem& system, const std::vector<double>& t_grid,
                                      const AveragingWindow& window = {},
                                      const SimulationOptions& options = {});

// Frequency-domain areas A_k of J_k(tau, t), t in [0, t_ev]: analytically
// J_k(tau, 0) / 2, and numerically from a DFT of the sampled signal
// followed by quadrature over the full frequency band.
struct FourierAreas {
    std::vector<int> orders;
    std::vector<double> analytic;
    std::vector<double> numeric;
    double analytic_sum = 0.0;
    double numeric_sum = 0.0;
};

FourierAreas fourier_area_check(const SpinSystem& system, double tau, double t_ev, int n_samples,
                                const SimulationOptions& options = {});

}  // namespace mqnmr
