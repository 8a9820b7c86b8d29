#include "levenberg_marquardt.hpp"

#include <cmath>
#include <limits>

namespace mqnmr::detail {

LmOutcome levenberg_marquardt(const ResidualFn& fn, Eigen::VectorXd start, int max_iterations) {
    LmOutcome out;
    out.params = std::move(start);
    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    if (!fn(out.params, r, &jac) || !r.allFinite() || !jac.allFinite()) {
        out.cost = std::numeric_limits<double>::infinity();
        return out;
    }
    out.cost = r.squaredNorm();
    out.history.push_back(out.cost);

    double lambda = 1e-3;
    Eigen::VectorXd trial_r;
    for (int iter = 0; iter < max_iterations; ++iter) {
        if (out.cost <= 1e-30) {
            out.converged = true;
            return out;
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * r;
        if (g.cwiseAbs().maxCoeff() <= 1e-15 * std::max(1.0, out.cost)) {
            out.converged = true;
            return out;
        }
        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd a = jtj;
            a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
            const Eigen::VectorXd step = a.ldlt().solve(-g);
            const Eigen::VectorXd trial = out.params + step;
            if (step.norm() <= 1e-14 * (out.params.norm() + 1e-14)) {
                out.converged = true;
                return out;
            }
            if (fn(trial, trial_r, nullptr) && trial_r.allFinite() &&
                trial_r.squaredNorm() < out.cost) {
                const double previous = out.cost;
                out.params = trial;
                out.cost = trial_r.squaredNorm();
                out.history.push_back(out.cost);
                fn(out.params, r, &jac);
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                if (previous - out.cost <= 1e-15 * previous) {
                    out.converged = true;
                    return out;
                }
            } else {
                lambda *= 4.0;
                if (lambda > 1e16) {
                    // No descent direction left at this resolution: a minimum.
                    out.converged = true;
                    return out;
                }
            }
        }
    }
    return out;
}

}  // namespace mqnmr::detail
