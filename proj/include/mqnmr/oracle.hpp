#pragma once

// Brute-force reference in the full 2^N product basis. Uses nothing from the
// sector machinery: operators are assembled from single-spin matrices.

#include "mqnmr/coherence.hpp"
#include "mqnmr/spin_core.hpp"

namespace mqnmr::oracle {

inline constexpr int kMaxSpins = 12;

struct ProductOperator {
    int n_spins = 0;
    Eigen::MatrixXcd matrix;
};

enum class Kind { hmq, hdz, heff, iz };

// `p` is only read for Kind::heff. Throws ConfigError for N > kMaxSpins.
ProductOperator build_full(const SpinSystem& system, Kind which, double p = 0.0);

// Standard experiment, J_k(tau, t).
CoherenceSpectrum intensities_standard(const SpinSystem& system, double tau, double t);

// Perturbed preparation, J_k(tau, p).
CoherenceSpectrum intensities_perturbed(const SpinSystem& system, double p, double tau,
                                        Mixing mixing = Mixing::ideal_mq);

// Ascending eigenvalues of a full operator.
Eigen::VectorXd spectrum(const ProductOperator& op);

}  // namespace mqnmr::oracle
