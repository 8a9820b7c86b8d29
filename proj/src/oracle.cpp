#include "mqnmr/oracle.hpp"

#include "mqnmr/errors.hpp"

#include <string>

namespace mqnmr::oracle {

namespace {

using Matrix = Eigen::MatrixXcd;

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

// sum_j 1 x ... x single_j x ... x 1
Matrix collective(const Matrix& single, int n) {
    const Eigen::Index dim = Eigen::Index{1} << n;
    Matrix total = Matrix::Zero(dim, dim);
    for (int site = 0; site < n; ++site) {
        Matrix term = Matrix::Identity(1, 1);
        for (int j = 0; j < n; ++j) {
            term = kron(term, j == site ? single : Matrix(Matrix::Identity(2, 2)));
        }
        total += term;
    }
    return total;
}

struct Collective {
    Matrix ix, iy, iz;
};

Collective collective_spin(int n) {
    const Complex i(0.0, 1.0);
    Matrix sx(2, 2), sy(2, 2), sz(2, 2);
    sx << 0.0, 0.5, 0.5, 0.0;
    sy << 0.0, -0.5 * i, 0.5 * i, 0.0;
    sz << 0.5, 0.0, 0.0, -0.5;
    return {collective(sx, n), collective(sy, n), collective(sz, n)};
}

void check_size(const SpinSystem& system) {
    if (system.n_spins > kMaxSpins) {
        throw ConfigError("full-space oracle supports at most " + std::to_string(kMaxSpins) +
                          " spins, got " + std::to_string(system.n_spins));
    }
}

Matrix propagator(const Matrix& h, double time) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("oracle eigensolver did not converge");
    }
    Eigen::VectorXcd phase(solver.eigenvalues().size());
    for (Eigen::Index a = 0; a < phase.size(); ++a) {
        phase(a) = std::polar(1.0, -solver.eigenvalues()(a) * time);
    }
    return solver.eigenvectors() * phase.asDiagonal() * solver.eigenvectors().adjoint();
}

// Twice the I_z eigenvalue of each product state: (#up - #down).
std::vector<int> twice_magnetization(int n) {
    std::vector<int> m(std::size_t{1} << n);
    for (std::size_t state = 0; state < m.size(); ++state) {
        int up = 0;
        for (int bit = 0; bit < n; ++bit) {
            // A zero bit is spin up, matching sz = diag(+1/2, -1/2).
            up += ((state >> bit) & 1U) == 0 ? 1 : 0;
        }
        m[state] = 2 * up - n;
    }
    return m;
}

// J_k = sum over (a, b) with m_a - m_b = k of x_ab y_ba, divided by Tr{I_z^2}.
CoherenceSpectrum bin_by_order(const Matrix& x, const Matrix& y, const Matrix& iz, int n) {
    const auto m2 = twice_magnetization(n);
    std::vector<Complex> sums(2 * n + 1, 0.0);
    for (Eigen::Index a = 0; a < x.rows(); ++a) {
        for (Eigen::Index b = 0; b < x.cols(); ++b) {
            const int k = (m2[a] - m2[b]) / 2;
            sums[static_cast<std::size_t>(k + n)] += x(a, b) * y(b, a);
        }
    }
    CoherenceSpectrum out;
    out.max_order = n;
    out.normalization = (iz * iz).trace().real();
    for (const auto& s : sums) {
        out.intensities.push_back(s.real() / out.normalization);
    }
    return out;
}

}  // namespace

ProductOperator build_full(const SpinSystem& system, Kind which, double p) {
    check_size(system);
    const int n = system.n_spins;
    const double d = system.coupling;
    const Complex i(0.0, 1.0);
    const auto [ix, iy, iz] = collective_spin(n);
    ProductOperator op{n, {}};
    const Matrix plus = ix + i * iy;
    const Matrix minus = ix - i * iy;
    const Matrix hmq = -0.25 * d * (plus * plus + minus * minus);
    const Matrix hdz = 0.5 * d * (3.0 * iz * iz - (ix * ix + iy * iy + iz * iz));
    switch (which) {
        case Kind::hmq:
            op.matrix = hmq;
            break;
        case Kind::hdz:
            op.matrix = hdz;
            break;
        case Kind::heff:
            if (!(p >= 0.0 && p <= 1.0)) {
                throw ConfigError("perturbation strength p must lie in [0, 1]");
            }
            op.matrix = (1.0 - p) * hmq + p * hdz;
            break;
        case Kind::iz:
            op.matrix = iz;
            break;
    }
    return op;
}

Eigen::VectorXd spectrum(const ProductOperator& op) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(op.matrix, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("oracle eigensolver did not converge");
    }
    return solver.eigenvalues();
}

CoherenceSpectrum intensities_standard(const SpinSystem& system, double tau, double t) {
    check_size(system);
    const int n = system.n_spins;
    const Matrix iz = build_full(system, Kind::iz).matrix;
    const Matrix u = propagator(build_full(system, Kind::hmq).matrix, tau);
    const Matrix rho = u * iz * u.adjoint();
    const Matrix v = propagator(build_full(system, Kind::hdz).matrix, t);
    const Matrix dephased = v * rho * v.adjoint();
    return bin_by_order(dephased, rho, iz, n);
}

CoherenceSpectrum intensities_perturbed(const SpinSystem& system, double p, double tau,
                                        Mixing mixing) {
    check_size(system);
    const int n = system.n_spins;
    const Matrix iz = build_full(system, Kind::iz).matrix;
    const Matrix u_p = propagator(build_full(system, Kind::heff, p).matrix, tau);
    const Matrix rho_p = u_p * iz * u_p.adjoint();
    if (mixing == Mixing::matched_heff) {
        return bin_by_order(rho_p, rho_p, iz, n);
    }
    const Matrix u = propagator(build_full(system, Kind::hmq).matrix, tau);
    const Matrix rho = u * iz * u.adjoint();
    return bin_by_order(rho_p, rho, iz, n);
}

}  // namespace mqnmr::oracle
