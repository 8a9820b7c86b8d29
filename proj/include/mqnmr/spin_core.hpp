#pragma once

// Total-spin sector basis for N equivalent spins-1/2, collective operator
// blocks and sector degeneracies.

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace mqnmr {

using BigInt = boost::multiprecision::cpp_int;
using Complex = std::complex<double>;

// A half-integer stored as twice its value (S = 3/2 is {3}).
struct HalfInt {
    int twice = 0;

    constexpr double value() const { return 0.5 * twice; }
    constexpr bool operator==(const HalfInt&) const = default;
    constexpr auto operator<=>(const HalfInt&) const = default;
};

struct SpinSystem {
    int n_spins = 1;
    // Dipolar constant D. With D = 1 every time in the program is the
    // dimensionless D*tau / D*t.
    double coupling = 1.0;

    SpinSystem() = default;
    SpinSystem(int n, double d = 1.0);
};

struct SpinSector {
    HalfInt total_spin;
    int dim = 0;
    BigInt degeneracy;
    std::vector<HalfInt> m_values;  // S, S-1, ..., -S

    double spin() const { return total_spin.value(); }
};

// n_N(S) = N! (2S+1) / ((N/2 + S + 1)! (N/2 - S)!), exact.
BigInt sector_degeneracy(int n_spins, HalfInt total_spin);

// Sectors S = N/2, N/2 - 1, ..., N/2 - floor(N/2).
std::vector<SpinSector> enumerate_sectors(const SpinSystem& system);

// Tr{I_z^2} over the full 2^N space, as the exact rational numerator / 12.
BigInt iz_square_trace_times12(const std::vector<SpinSector>& sectors);

// n_N(S) / Tr{I_z^2} for every sector, in sector order. The division is done
// in extended precision so that N in the hundreds cannot overflow.
std::vector<double> intensity_weights(const std::vector<SpinSector>& sectors);

// Keeps the leading (largest S) sectors removed only while the dropped share
// of Tr{I_z^2} stays <= tolerance. Every intensity J_k, and the sum over k of
// |J_k|, changes by at most that share. tolerance = 0 keeps everything.
std::vector<SpinSector> significant_sectors(const std::vector<SpinSector>& sectors,
                                            double tolerance);

enum class Ladder { raising, lowering };

struct LadderElement {
    HalfInt m_from;
    HalfInt m_to;
    double amplitude;
};

// <S, M +- 1| I^{+-} |S, M> = sqrt(S(S+1) - M(M +- 1)).
std::vector<LadderElement> ladder_elements(HalfInt total_spin, Ladder direction);

// A Hermitian operator that is block diagonal in total spin: one dense
// (2S+1)x(2S+1) block per sector, rows and columns in descending M.
struct BlockOperator {
    std::vector<SpinSector> sectors;
    std::vector<Eigen::MatrixXcd> blocks;

    std::size_t size() const { return blocks.size(); }
    bool same_structure(const BlockOperator& other) const;
    // Tr over the full space: sum of degeneracy-weighted block traces.
    Complex weighted_trace(const std::vector<double>& weights) const;
};

// -D/4 ((I+)^2 + (I-)^2)
BlockOperator build_hmq(const SpinSystem& system);
BlockOperator build_hmq(const SpinSystem& system, const std::vector<SpinSector>& sectors);

// D/2 (3 I_z^2 - I^2)
BlockOperator build_hdz(const SpinSystem& system);
BlockOperator build_hdz(const SpinSystem& system, const std::vector<SpinSector>& sectors);

// (1 - p) H_MQ + p H_dz, p in [0, 1].
BlockOperator build_heff(const SpinSystem& system, double p);
BlockOperator build_heff(const SpinSystem& system, double p,
                         const std::vector<SpinSector>& sectors);

// rho(0) = I_z, unnormalized.
BlockOperator initial_density(const SpinSystem& system);
BlockOperator initial_density(const std::vector<SpinSector>& sectors);

// Diagonal of H_dz in one sector, descending M.
Eigen::VectorXd hdz_diagonal(const SpinSystem& system, const SpinSector& sector);

bool is_hermitian(const Eigen::MatrixXcd& m, double tol = 1e-12);

}  // namespace mqnmr
