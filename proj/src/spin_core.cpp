#include "mqnmr/spin_core.hpp"

#include "mqnmr/errors.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <string>

namespace mqnmr {

namespace {

using WideFloat = boost::multiprecision::cpp_bin_float_50;

BigInt binomial(int n, int k) {
    BigInt result = 1;
    for (int i = 1; i <= k; ++i) {
        result *= n - k + i;
        result /= i;
    }
    return result;
}

// Tr_S{I_z^2} * 12 = 2S (2S+1) (2S+2).
BigInt sector_iz_square_times12(const SpinSector& sector) {
    const BigInt s2 = sector.total_spin.twice;
    return s2 * (s2 + 1) * (s2 + 2);
}

template <typename Fill>
BlockOperator build_blocks(const std::vector<SpinSector>& sectors, Fill fill) {
    BlockOperator op;
    op.sectors = sectors;
    op.blocks.reserve(sectors.size());
    for (const auto& sector : sectors) {
        Eigen::MatrixXcd block = Eigen::MatrixXcd::Zero(sector.dim, sector.dim);
        fill(sector, block);
        op.blocks.push_back(std::move(block));
    }
    return op;
}

}  // namespace

SpinSystem::SpinSystem(int n, double d) : n_spins(n), coupling(d) {
    if (n_spins < 1) {
        throw ConfigError("n_spins must be >= 1, got " + std::to_string(n_spins));
    }
    if (!(coupling > 0.0) || !std::isfinite(coupling)) {
        throw ConfigError("coupling must be a positive finite number");
    }
}

BigInt sector_degeneracy(int n_spins, HalfInt total_spin) {
    const int j = (n_spins - total_spin.twice) / 2;
    if (total_spin.twice < 0 || (n_spins - total_spin.twice) % 2 != 0 || j < 0) {
        throw ConfigError("total spin " + std::to_string(total_spin.twice) +
                          "/2 is not allowed for N = " + std::to_string(n_spins));
    }
    // n_N(S) = C(N, j) (N - 2j + 1) / (N - j + 1) with j = N/2 - S.
    BigInt n = binomial(n_spins, j) * (n_spins - 2 * j + 1);
    return n / (n_spins - j + 1);
}

std::vector<SpinSector> enumerate_sectors(const SpinSystem& system) {
    const int n = system.n_spins;
    std::vector<SpinSector> sectors;
    sectors.reserve(n / 2 + 1);
    for (int twice_s = n; twice_s >= 0; twice_s -= 2) {
        SpinSector sector;
        sector.total_spin = HalfInt{twice_s};
        sector.dim = twice_s + 1;
        sector.degeneracy = sector_degeneracy(n, sector.total_spin);
        sector.m_values.reserve(sector.dim);
        for (int twice_m = twice_s; twice_m >= -twice_s; twice_m -= 2) {
            sector.m_values.push_back(HalfInt{twice_m});
        }
        sectors.push_back(std::move(sector));
    }
    return sectors;
}

BigInt iz_square_trace_times12(const std::vector<SpinSector>& sectors) {
    BigInt total = 0;
    for (const auto& sector : sectors) {
        total += sector.degeneracy * sector_iz_square_times12(sector);
    }
    return total;
}

std::vector<double> intensity_weights(const std::vector<SpinSector>& sectors) {
    const WideFloat denominator(iz_square_trace_times12(sectors));
    std::vector<double> weights;
    weights.reserve(sectors.size());
    for (const auto& sector : sectors) {
        const WideFloat w = WideFloat(sector.degeneracy) * 12 / denominator;
        weights.push_back(w.convert_to<double>());
    }
    return weights;
}

std::vector<SpinSector> significant_sectors(const std::vector<SpinSector>& sectors,
                                            double tolerance) {
    if (tolerance <= 0.0 || sectors.empty()) {
        return sectors;
    }
    const WideFloat total(iz_square_trace_times12(sectors));
    WideFloat dropped = 0;
    std::size_t first = 0;
    while (first + 1 < sectors.size()) {
        const auto& s = sectors[first];
        const WideFloat share =
            WideFloat(s.degeneracy * sector_iz_square_times12(s)) / total;
        if ((dropped + share).convert_to<double>() > tolerance) {
            break;
        }
        dropped += share;
        ++first;
    }
    return {sectors.begin() + static_cast<std::ptrdiff_t>(first), sectors.end()};
}

std::vector<LadderElement> ladder_elements(HalfInt total_spin, Ladder direction) {
    if (total_spin.twice < 0) {
        throw ConfigError("total spin must be non-negative");
    }
    const double s = total_spin.value();
    const int step = direction == Ladder::raising ? 2 : -2;
    std::vector<LadderElement> out;
    for (int twice_m = -total_spin.twice; twice_m <= total_spin.twice; twice_m += 2) {
        const int twice_to = twice_m + step;
        if (std::abs(twice_to) > total_spin.twice) {
            continue;
        }
        const double m = 0.5 * twice_m;
        const double m_to = 0.5 * twice_to;
        const double amp = std::sqrt(s * (s + 1.0) - m * m_to);
        out.push_back({HalfInt{twice_m}, HalfInt{twice_to}, amp});
    }
    return out;
}

bool BlockOperator::same_structure(const BlockOperator& other) const {
    if (sectors.size() != other.sectors.size() || blocks.size() != other.blocks.size()) {
        return false;
    }
    for (std::size_t i = 0; i < sectors.size(); ++i) {
        if (sectors[i].total_spin != other.sectors[i].total_spin) {
            return false;
        }
    }
    return true;
}

Complex BlockOperator::weighted_trace(const std::vector<double>& weights) const {
    Complex total = 0.0;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        total += weights.at(i) * blocks[i].trace();
    }
    return total;
}

BlockOperator build_hmq(const SpinSystem& system) {
    return build_hmq(system, enumerate_sectors(system));
}

BlockOperator build_hmq(const SpinSystem& system, const std::vector<SpinSector>& sectors) {
    const double d = system.coupling;
    return build_blocks(sectors, [d](const SpinSector& sector, Eigen::MatrixXcd& block) {
        const double s = sector.spin();
        auto raise = [s](double m) { return std::sqrt(s * (s + 1.0) - m * (m + 1.0)); };
        // Row index i holds M = S - i, so M + 2 sits at column index - 2.
        for (int col = 2; col < sector.dim; ++col) {
            const double m = s - col;
            const double value = -0.25 * d * raise(m) * raise(m + 1.0);
            block(col - 2, col) = value;
            block(col, col - 2) = value;
        }
    });
}

Eigen::VectorXd hdz_diagonal(const SpinSystem& system, const SpinSector& sector) {
    const double s = sector.spin();
    Eigen::VectorXd diag(sector.dim);
    for (int i = 0; i < sector.dim; ++i) {
        const double m = s - i;
        diag(i) = 0.5 * system.coupling * (3.0 * m * m - s * (s + 1.0));
    }
    return diag;
}

BlockOperator build_hdz(const SpinSystem& system) {
    return build_hdz(system, enumerate_sectors(system));
}

BlockOperator build_hdz(const SpinSystem& system, const std::vector<SpinSector>& sectors) {
    return build_blocks(sectors, [&system](const SpinSector& sector, Eigen::MatrixXcd& block) {
        block.diagonal() = hdz_diagonal(system, sector).cast<Complex>();
    });
}

BlockOperator build_heff(const SpinSystem& system, double p) {
    return build_heff(system, p, enumerate_sectors(system));
}

BlockOperator build_heff(const SpinSystem& system, double p,
                         const std::vector<SpinSector>& sectors) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ConfigError("perturbation strength p must lie in [0, 1]");
    }
    BlockOperator heff = build_hmq(system, sectors);
    for (std::size_t i = 0; i < sectors.size(); ++i) {
        heff.blocks[i] *= (1.0 - p);
        heff.blocks[i].diagonal() += p * hdz_diagonal(system, sectors[i]).cast<Complex>();
    }
    return heff;
}

BlockOperator initial_density(const SpinSystem& system) {
    return initial_density(enumerate_sectors(system));
}

BlockOperator initial_density(const std::vector<SpinSector>& sectors) {
    return build_blocks(sectors, [](const SpinSector& sector, Eigen::MatrixXcd& block) {
        for (int i = 0; i < sector.dim; ++i) {
            block(i, i) = sector.m_values[i].value();
        }
    });
}

bool is_hermitian(const Eigen::MatrixXcd& m, double tol) {
    if (m.rows() != m.cols()) {
        return false;
    }
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace mqnmr
