#pragma once

// Spectral factorization of sector blocks and exact unitary evolution
// rho -> U rho U^dagger, U = exp(-i H t), applied through eigenvalue phases.

#include "mqnmr/spin_core.hpp"

#include <memory>
#include <vector>

namespace mqnmr {

// Eigen-decomposition of one connected component of a block's sparsity
// graph. H_MQ splits into the two M-parity classes, H_dz into 1x1 pieces.
struct EigenComponent {
    std::vector<int> indices;  // rows of the sector block covered by this component
    Eigen::VectorXd values;    // ascending
    bool is_real = true;
    Eigen::MatrixXd real_vectors;
    Eigen::MatrixXcd complex_vectors;

    Eigen::MatrixXcd vectors() const;
};

struct SectorEigensystem {
    int dim = 0;
    std::vector<EigenComponent> components;

    // Ascending eigenvalues of the whole block.
    Eigen::VectorXd eigenvalues() const;
    // Unitary whose columns are the eigenvectors matching eigenvalues().
    Eigen::MatrixXcd eigenvectors() const;
};

struct Eigensystem {
    std::vector<SpinSector> sectors;
    std::vector<SectorEigensystem> blocks;
};

// Throws NumericalError when the eigensolver fails to converge.
SectorEigensystem diagonalize_block(const Eigen::MatrixXcd& block);

// Per-sector factorization, sectors processed largest-first on `workers`
// threads; output order always follows op.sectors.
Eigensystem diagonalize(const BlockOperator& op, int workers = 1);

// Evolution of a fixed initial block under a fixed sector Hamiltonian.
// The initial density is rotated into the eigenbasis once; each call to
// at() then costs a few dense products. The eigensystem must outlive
// this object.
class SectorTrajectory {
public:
    SectorTrajectory(const SectorEigensystem& eig, const Eigen::MatrixXcd& rho0);

    Eigen::MatrixXcd at(double time) const;

private:
    struct Piece {
        std::size_t row_component;
        std::size_t col_component;
        Eigen::MatrixXcd rotated;  // V_I^dagger rho0_IJ V_J
    };

    const SectorEigensystem* eig_;
    std::vector<Piece> pieces_;
};

// rho' = V e^{-i lambda t} V^dagger rho V e^{i lambda t} V^dagger, per sector.
BlockOperator evolve(const BlockOperator& rho, const Eigensystem& eig, double duration);

// rho~(tau, p) = exp(-i tau H_eff(p)) I_z exp(i tau H_eff(p)). Diagonalizes
// H_eff once; density_at() may then be called for any number of tau.
class PreparationEvolution {
public:
    PreparationEvolution(const SpinSystem& system, double p,
                         const std::vector<SpinSector>& sectors, int workers = 1);

    const std::vector<SpinSector>& sectors() const { return eig_->sectors; }
    const Eigensystem& eigensystem() const { return *eig_; }

    BlockOperator density_at(double tau) const;
    // One sector of density_at(tau).
    Eigen::MatrixXcd sector_density_at(std::size_t sector, double tau) const;

private:
    std::shared_ptr<const Eigensystem> eig_;
    std::vector<SectorTrajectory> trajectories_;
};

BlockOperator evolve_hamiltonian_pair(const SpinSystem& system, double p, double tau);

}  // namespace mqnmr
