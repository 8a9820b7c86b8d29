#include "mqnmr/coherence.hpp"

#include "mqnmr/errors.hpp"
#include "mqnmr/parallel.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <fftw3.h>

#include <cmath>
#include <string>

namespace mqnmr {

namespace {

struct RetainedSectors {
    std::vector<SpinSector> sectors;
    std::vector<double> weights;  // n_N(S) / Tr{I_z^2}
    double normalization = 1.0;   // Tr{I_z^2}
};

RetainedSectors retain_sectors(const SpinSystem& system, double cutoff) {
    const auto all = enumerate_sectors(system);
    RetainedSectors out;
    out.sectors = significant_sectors(all, cutoff);
    const auto weights = intensity_weights(all);
    out.weights.assign(weights.end() - static_cast<std::ptrdiff_t>(out.sectors.size()),
                       weights.end());
    using WideFloat = boost::multiprecision::cpp_bin_float_50;
    out.normalization = (WideFloat(iz_square_trace_times12(all)) / 12).convert_to<double>();
    return out;
}

// row[k + max_order] += weight * Re sum_i x(i, i+k) y(i+k, i), i.e. the
// sector's share of Tr{x_k y_{-k}}.
void accumulate_orders(const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& y, double weight,
                       int max_order, std::vector<double>& row) {
    const Eigen::Index dim = x.rows();
    for (Eigen::Index k = -(dim - 1); k < dim; ++k) {
        Complex sum = 0.0;
        const Eigen::Index first = std::max<Eigen::Index>(0, -k);
        const Eigen::Index last = std::min<Eigen::Index>(dim, dim - k);
        for (Eigen::Index i = first; i < last; ++i) {
            sum += x(i, i + k) * y(i + k, i);
        }
        row[static_cast<std::size_t>(k + max_order)] += weight * sum.real();
    }
}

void check_time(double value, const char* name) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
        throw ConfigError(std::string(name) + " must be a finite value >= 0");
    }
}

constexpr std::size_t kSeriesChunk = 8;

}  // namespace

std::vector<int> CoherenceSpectrum::orders() const {
    std::vector<int> out;
    for (int k = -max_order; k <= max_order; ++k) {
        out.push_back(k);
    }
    return out;
}

double CoherenceSpectrum::sum() const {
    double total = 0.0;
    for (double v : intensities) {
        total += v;
    }
    return total;
}

std::vector<double> IntensitySeries::order_curve(int k) const {
    std::vector<double> out;
    out.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        out.push_back(at(i, k));
    }
    return out;
}

CoherenceSpectrum IntensitySeries::spectrum(std::size_t point) const {
    return {max_order, values.at(point), 1.0};
}

void AveragingWindow::validate() const {
    if (!std::isfinite(tau0) || tau0 < 0.0) {
        throw ConfigError("averaging window start tau0 must be >= 0");
    }
    if (!(periods > 0.0)) {
        throw ConfigError("averaging window must span a positive number of periods");
    }
    if (steps < 1 || step() > period() / 100.0) {
        throw ConfigError("averaging grid too coarse: step " + std::to_string(step()) +
                          " exceeds T/100 = " + std::to_string(period() / 100.0));
    }
}

std::string_view to_string(Mixing mixing) {
    return mixing == Mixing::ideal_mq ? "ideal_mq" : "matched_heff";
}

Mixing parse_mixing(std::string_view text) {
    if (text == "ideal_mq") {
        return Mixing::ideal_mq;
    }
    if (text == "matched_heff") {
        return Mixing::matched_heff;
    }
    throw ConfigError("mixing must be ideal_mq or matched_heff, got '" + std::string(text) + "'");
}

BlockOperator coherence_component(const BlockOperator& rho, int k) {
    BlockOperator out;
    out.sectors = rho.sectors;
    out.blocks.reserve(rho.blocks.size());
    for (const auto& block : rho.blocks) {
        const Eigen::Index dim = block.rows();
        Eigen::MatrixXcd part = Eigen::MatrixXcd::Zero(dim, dim);
        // M_row - M_col = col - row in descending-M order.
        for (Eigen::Index r = 0; r < dim; ++r) {
            const Eigen::Index c = r + k;
            if (c >= 0 && c < dim) {
                part(r, c) = block(r, c);
            }
        }
        out.blocks.push_back(std::move(part));
    }
    return out;
}

StandardExperiment::StandardExperiment(const SpinSystem& system, const SimulationOptions& options)
    : system_(system),
      options_(options),
      ideal_([&] {
          auto kept = retain_sectors(system, options.sector_cutoff);
          sectors_ = std::move(kept.sectors);
          weights_ = std::move(kept.weights);
          normalization_ = kept.normalization;
          return PreparationEvolution(system, 0.0, sectors_, options.workers);
      }()) {
    for (const auto& sector : sectors_) {
        hdz_diagonal_.push_back(hdz_diagonal(system_, sector));
    }
}

BlockOperator StandardExperiment::density(double tau) const {
    check_time(tau, "tau");
    return ideal_.density_at(tau);
}

CoherenceSpectrum StandardExperiment::spectrum(double tau, double t) const {
    return evolution_series(tau, {t}).spectrum(0);
}

IntensitySeries StandardExperiment::evolution_series(double tau,
                                                     const std::vector<double>& t_grid) const {
    check_time(tau, "tau");
    for (double t : t_grid) {
        check_time(t, "t");
    }
    const int n = system_.n_spins;
    IntensitySeries out;
    out.max_order = n;
    out.abscissa = t_grid;
    out.values.assign(t_grid.size(), std::vector<double>(2 * n + 1, 0.0));
    for (std::size_t s = 0; s < sectors_.size(); ++s) {
        const Eigen::MatrixXcd rho = ideal_.sector_density_at(s, tau);
        const Eigen::VectorXd& e = hdz_diagonal_[s];
        for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
            const double t = t_grid[ti];
            Eigen::MatrixXcd dephased(rho.rows(), rho.cols());
            for (Eigen::Index c = 0; c < rho.cols(); ++c) {
                for (Eigen::Index r = 0; r < rho.rows(); ++r) {
                    dephased(r, c) = rho(r, c) * std::polar(1.0, -(e(r) - e(c)) * t);
                }
            }
            accumulate_orders(dephased, rho, weights_[s], n, out.values[ti]);
        }
    }
    return out;
}

AveragedSpectrum StandardExperiment::averaged(const std::vector<double>& t_grid,
                                              const AveragingWindow& window) const {
    window.validate();
    for (double t : t_grid) {
        check_time(t, "t");
    }
    const double h = window.step();
    const double scale = 1.0 / window.length();

    // Window mean of |rho_{MM'}(tau)|^2 per sector. J_k(tau, t) is linear in
    // these products, so the whole t dependence follows from them.
    std::vector<Eigen::MatrixXd> mean_square(sectors_.size());
    parallel_for(sectors_.size(), options_.workers, [&](std::size_t s) {
        const Eigen::Index dim = sectors_[s].dim;
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(dim, dim);
        for (int i = 0; i <= window.steps; ++i) {
            const double tau = window.tau0 + h * i;
            const double w = (i == 0 || i == window.steps) ? 0.5 * h : h;
            acc += w * ideal_.sector_density_at(s, tau).cwiseAbs2();
        }
        mean_square[s] = scale * acc;
    });

    const int n = system_.n_spins;
    AveragedSpectrum out;
    out.window = window;
    out.series.max_order = n;
    out.series.abscissa = t_grid;
    out.series.values.assign(t_grid.size(), std::vector<double>(2 * n + 1, 0.0));
    for (std::size_t s = 0; s < sectors_.size(); ++s) {
        const Eigen::MatrixXd& pm = mean_square[s];
        const Eigen::VectorXd& e = hdz_diagonal_[s];
        const Eigen::Index dim = pm.rows();
        for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
            auto& row = out.series.values[ti];
            for (Eigen::Index k = -(dim - 1); k < dim; ++k) {
                double sum = 0.0;
                for (Eigen::Index i = std::max<Eigen::Index>(0, -k);
                     i < std::min<Eigen::Index>(dim, dim - k); ++i) {
                    const double p = pm(i, i + k);
                    if (p != 0.0) {
                        sum += p * std::cos((e(i) - e(i + k)) * t_grid[ti]);
                    }
                }
                row[static_cast<std::size_t>(k + n)] += weights_[s] * sum;
            }
        }
    }
    return out;
}

PerturbedExperiment::PerturbedExperiment(const SpinSystem& system, double p, Mixing mixing,
                                         const SimulationOptions& options)
    : system_(system),
      p_(p),
      mixing_(mixing),
      options_(options),
      perturbed_([&] {
          if (!(p >= 0.0 && p <= 1.0)) {
              throw ConfigError("perturbation strength p must lie in [0, 1]");
          }
          auto kept = retain_sectors(system, options.sector_cutoff);
          sectors_ = std::move(kept.sectors);
          weights_ = std::move(kept.weights);
          normalization_ = kept.normalization;
          return PreparationEvolution(system, p, sectors_, options.workers);
      }()) {
    if (mixing_ == Mixing::ideal_mq && p_ > 0.0) {
        ideal_.emplace(system_, 0.0, sectors_, options_.workers);
    }
}

std::vector<double> PerturbedExperiment::spectrum_row(double tau) const {
    const int n = system_.n_spins;
    std::vector<double> row(2 * n + 1, 0.0);
    for (std::size_t s = 0; s < sectors_.size(); ++s) {
        const Eigen::MatrixXcd rho_p = perturbed_.sector_density_at(s, tau);
        if (ideal_) {
            accumulate_orders(rho_p, ideal_->sector_density_at(s, tau), weights_[s], n, row);
        } else {
            accumulate_orders(rho_p, rho_p, weights_[s], n, row);
        }
    }
    return row;
}

CoherenceSpectrum PerturbedExperiment::spectrum(double tau) const {
    check_time(tau, "tau");
    return {system_.n_spins, spectrum_row(tau), normalization_};
}

IntensitySeries PerturbedExperiment::series(const std::vector<double>& tau_grid) const {
    for (double tau : tau_grid) {
        check_time(tau, "tau");
    }
    IntensitySeries out;
    out.max_order = system_.n_spins;
    out.abscissa = tau_grid;
    out.values.resize(tau_grid.size());
    const std::size_t chunks = (tau_grid.size() + kSeriesChunk - 1) / kSeriesChunk;
    parallel_for(chunks, options_.workers, [&](std::size_t c) {
        const std::size_t end = std::min(tau_grid.size(), (c + 1) * kSeriesChunk);
        for (std::size_t i = c * kSeriesChunk; i < end; ++i) {
            out.values[i] = spectrum_row(tau_grid[i]);
        }
    });
    return out;
}

CoherenceSpectrum intensities_experiment_A(const SpinSystem& system, double tau, double t,
                                           const SimulationOptions& options) {
    const StandardExperiment experiment(system, options);
    auto spectrum = experiment.spectrum(tau, t);
    spectrum.normalization = experiment.normalization();
    return spectrum;
}

CoherenceSpectrum intensities_experiment_B(const SpinSystem& system, double p, double tau,
                                           Mixing mixing, const SimulationOptions& options) {
    return PerturbedExperiment(system, p, mixing, options).spectrum(tau);
}

AveragedSpectrum averaged_intensities(const SpinSystem& system, const std::vector<double>& t_grid,
                                      const AveragingWindow& window,
                                      const SimulationOptions& options) {
    window.validate();
    return StandardExperiment(system, options).averaged(t_grid, window);
}

FourierAreas fourier_area_check(const SpinSystem& system, double tau, double t_ev, int n_samples,
                                const SimulationOptions& options) {
    if (!(t_ev > 0.0)) {
        throw ConfigError("evolution period T_ev must be > 0");
    }
    if (n_samples < 2) {
        throw ConfigError("fourier area check needs at least 2 samples");
    }
    const StandardExperiment experiment(system, options);
    const double h = t_ev / (n_samples - 1);
    std::vector<double> t_grid(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        t_grid[i] = h * i;
    }
    const IntensitySeries series = experiment.evolution_series(tau, t_grid);
    const CoherenceSpectrum at_zero = experiment.spectrum(tau, 0.0);

    FourierAreas out;
    const int n = system.n_spins;
    fftw_complex* buffer = fftw_alloc_complex(static_cast<std::size_t>(n_samples));
    fftw_plan plan = fftw_plan_dft_1d(n_samples, buffer, buffer, FFTW_FORWARD, FFTW_ESTIMATE);
    const double d_omega = 2.0 * std::numbers::pi / (n_samples * h);
    for (int k = -n; k <= n; ++k) {
        // Trapezoid-weighted samples: F(omega_m) ~ int_0^T J(t) e^{-i omega_m t} dt.
        for (int i = 0; i < n_samples; ++i) {
            const double w = (i == 0 || i == n_samples - 1) ? 0.5 * h : h;
            buffer[i][0] = w * series.at(static_cast<std::size_t>(i), k);
            buffer[i][1] = 0.0;
        }
        fftw_execute(plan);
        // Spectrum J(omega) = F / 2 pi; area = sum over the band of J(omega) d_omega.
        double area = 0.0;
        for (int m = 0; m < n_samples; ++m) {
            area += buffer[m][0] / (2.0 * std::numbers::pi) * d_omega;
        }
        out.orders.push_back(k);
        out.analytic.push_back(0.5 * at_zero.at(k));
        out.numeric.push_back(area);
        out.analytic_sum += out.analytic.back();
        out.numeric_sum += area;
    }
    fftw_destroy_plan(plan);
    fftw_free(buffer);
    return out;
}

}  // namespace mqnmr
