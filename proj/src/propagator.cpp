#include "mqnmr/propagator.hpp"

#include "mqnmr/errors.hpp"
#include "mqnmr/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mqnmr {

namespace {

// Connected components of the nonzero pattern, each list ascending.
std::vector<std::vector<int>> block_components(const Eigen::MatrixXcd& block) {
    const int n = static_cast<int>(block.rows());
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&parent](int i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    };
    for (int c = 0; c < n; ++c) {
        for (int r = 0; r < c; ++r) {
            if (block(r, c) != Complex(0.0) || block(c, r) != Complex(0.0)) {
                const int a = find(r);
                const int b = find(c);
                if (a != b) {
                    parent[std::max(a, b)] = std::min(a, b);
                }
            }
        }
    }
    std::vector<std::vector<int>> groups;
    std::vector<int> group_of(n, -1);
    for (int i = 0; i < n; ++i) {
        const int root = find(i);
        if (group_of[root] < 0) {
            group_of[root] = static_cast<int>(groups.size());
            groups.emplace_back();
        }
        groups[group_of[root]].push_back(i);
    }
    return groups;
}

void check_solver(Eigen::ComputationInfo info, Eigen::Index dim) {
    if (info != Eigen::Success) {
        throw NumericalError("Hermitian eigensolver did not converge for a block of dimension " +
                             std::to_string(dim));
    }
}

Eigen::VectorXcd phases(const Eigen::VectorXd& values, double sign_time) {
    Eigen::VectorXcd out(values.size());
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        out(i) = std::polar(1.0, sign_time * values(i));
    }
    return out;
}

}  // namespace

Eigen::MatrixXcd EigenComponent::vectors() const {
    return is_real ? Eigen::MatrixXcd(real_vectors.cast<Complex>()) : complex_vectors;
}

Eigen::VectorXd SectorEigensystem::eigenvalues() const {
    std::vector<double> all;
    all.reserve(dim);
    for (const auto& c : components) {
        all.insert(all.end(), c.values.data(), c.values.data() + c.values.size());
    }
    std::sort(all.begin(), all.end());
    return Eigen::Map<const Eigen::VectorXd>(all.data(), static_cast<Eigen::Index>(all.size()));
}

Eigen::MatrixXcd SectorEigensystem::eigenvectors() const {
    struct Column {
        double value;
        std::size_t component;
        Eigen::Index column;
    };
    std::vector<Column> columns;
    columns.reserve(dim);
    for (std::size_t ci = 0; ci < components.size(); ++ci) {
        for (Eigen::Index j = 0; j < components[ci].values.size(); ++j) {
            columns.push_back({components[ci].values(j), ci, j});
        }
    }
    std::stable_sort(columns.begin(), columns.end(),
                     [](const Column& a, const Column& b) { return a.value < b.value; });
    Eigen::MatrixXcd v = Eigen::MatrixXcd::Zero(dim, dim);
    for (std::size_t out = 0; out < columns.size(); ++out) {
        const auto& comp = components[columns[out].component];
        const Eigen::MatrixXcd vecs = comp.vectors();
        for (std::size_t r = 0; r < comp.indices.size(); ++r) {
            v(comp.indices[r], static_cast<Eigen::Index>(out)) =
                vecs(static_cast<Eigen::Index>(r), columns[out].column);
        }
    }
    return v;
}

SectorEigensystem diagonalize_block(const Eigen::MatrixXcd& block) {
    if (block.rows() != block.cols()) {
        throw ConfigError("cannot diagonalize a non-square block");
    }
    SectorEigensystem out;
    out.dim = static_cast<int>(block.rows());
    for (auto& indices : block_components(block)) {
        EigenComponent comp;
        const Eigen::MatrixXcd sub = block(indices, indices);
        comp.indices = std::move(indices);
        comp.is_real = sub.imag().cwiseAbs().maxCoeff() == 0.0;
        if (sub.rows() == 1) {
            comp.values = sub.real();
            comp.real_vectors = Eigen::MatrixXd::Ones(1, 1);
            comp.is_real = true;
        } else if (comp.is_real) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sub.real());
            check_solver(solver.info(), sub.rows());
            comp.values = solver.eigenvalues();
            comp.real_vectors = solver.eigenvectors();
        } else {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(sub);
            check_solver(solver.info(), sub.rows());
            comp.values = solver.eigenvalues();
            comp.complex_vectors = solver.eigenvectors();
        }
        out.components.push_back(std::move(comp));
    }
    return out;
}

Eigensystem diagonalize(const BlockOperator& op, int workers) {
    Eigensystem eig;
    eig.sectors = op.sectors;
    eig.blocks.resize(op.blocks.size());
    // Largest blocks first for load balance; sectors are stored descending in S.
    parallel_for(op.blocks.size(), workers,
                 [&](std::size_t i) { eig.blocks[i] = diagonalize_block(op.blocks[i]); });
    return eig;
}

SectorTrajectory::SectorTrajectory(const SectorEigensystem& eig, const Eigen::MatrixXcd& rho0)
    : eig_(&eig) {
    if (rho0.rows() != eig.dim || rho0.cols() != eig.dim) {
        throw ConfigError("density block does not match the Hamiltonian block dimension");
    }
    const auto& comps = eig.components;
    for (std::size_t i = 0; i < comps.size(); ++i) {
        for (std::size_t j = 0; j < comps.size(); ++j) {
            const Eigen::MatrixXcd sub = rho0(comps[i].indices, comps[j].indices);
            if (sub.cwiseAbs().maxCoeff() == 0.0) {
                continue;
            }
            Piece piece{i, j, {}};
            if (comps[i].is_real && comps[j].is_real) {
                piece.rotated = comps[i].real_vectors.transpose() * sub * comps[j].real_vectors;
            } else {
                piece.rotated = comps[i].vectors().adjoint() * sub * comps[j].vectors();
            }
            pieces_.push_back(std::move(piece));
        }
    }
}

Eigen::MatrixXcd SectorTrajectory::at(double time) const {
    const auto& comps = eig_->components;
    Eigen::MatrixXcd result = Eigen::MatrixXcd::Zero(eig_->dim, eig_->dim);
    std::vector<Eigen::VectorXcd> left(comps.size());
    std::vector<Eigen::VectorXcd> right(comps.size());
    for (const auto& piece : pieces_) {
        auto& l = left[piece.row_component];
        auto& r = right[piece.col_component];
        if (l.size() == 0) {
            l = phases(comps[piece.row_component].values, -time);
        }
        if (r.size() == 0) {
            r = phases(comps[piece.col_component].values, time);
        }
        const Eigen::MatrixXcd a = l.asDiagonal() * piece.rotated * r.asDiagonal();
        const auto& ci = comps[piece.row_component];
        const auto& cj = comps[piece.col_component];
        if (ci.is_real && cj.is_real) {
            const Eigen::MatrixXd re = ci.real_vectors * a.real() * cj.real_vectors.transpose();
            const Eigen::MatrixXd im = ci.real_vectors * a.imag() * cj.real_vectors.transpose();
            for (std::size_t c = 0; c < cj.indices.size(); ++c) {
                for (std::size_t r2 = 0; r2 < ci.indices.size(); ++r2) {
                    const auto ri = static_cast<Eigen::Index>(r2);
                    const auto cc = static_cast<Eigen::Index>(c);
                    result(ci.indices[r2], cj.indices[c]) = Complex(re(ri, cc), im(ri, cc));
                }
            }
        } else {
            result(ci.indices, cj.indices) = ci.vectors() * a * cj.vectors().adjoint();
        }
    }
    return result;
}

BlockOperator evolve(const BlockOperator& rho, const Eigensystem& eig, double duration) {
    if (rho.sectors.size() != eig.sectors.size() || rho.blocks.size() != eig.blocks.size()) {
        throw ConfigError("density and eigensystem have different sector structures");
    }
    BlockOperator out;
    out.sectors = rho.sectors;
    out.blocks.reserve(rho.blocks.size());
    for (std::size_t i = 0; i < rho.blocks.size(); ++i) {
        if (rho.sectors[i].total_spin != eig.sectors[i].total_spin) {
            throw ConfigError("density and eigensystem have different sector structures");
        }
        out.blocks.push_back(SectorTrajectory(eig.blocks[i], rho.blocks[i]).at(duration));
    }
    return out;
}

PreparationEvolution::PreparationEvolution(const SpinSystem& system, double p,
                                           const std::vector<SpinSector>& sectors, int workers)
    : eig_(std::make_shared<const Eigensystem>(
          diagonalize(build_heff(system, p, sectors), workers))) {
    const BlockOperator rho0 = initial_density(sectors);
    trajectories_.reserve(sectors.size());
    for (std::size_t i = 0; i < sectors.size(); ++i) {
        trajectories_.emplace_back(eig_->blocks[i], rho0.blocks[i]);
    }
}

BlockOperator PreparationEvolution::density_at(double tau) const {
    BlockOperator out;
    out.sectors = eig_->sectors;
    out.blocks.reserve(trajectories_.size());
    for (const auto& t : trajectories_) {
        out.blocks.push_back(t.at(tau));
    }
    return out;
}

Eigen::MatrixXcd PreparationEvolution::sector_density_at(std::size_t sector, double tau) const {
    return trajectories_.at(sector).at(tau);
}

BlockOperator evolve_hamiltonian_pair(const SpinSystem& system, double p, double tau) {
    if (!(tau >= 0.0)) {
        throw ConfigError("tau must be >= 0");
    }
    return PreparationEvolution(system, p, enumerate_sectors(system)).density_at(tau);
}

}  // namespace mqnmr
