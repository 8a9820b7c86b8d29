#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace mqnmr::detail {

// Fills residuals (and the Jacobian when non-null) at the given parameters.
// Returning false marks the point as outside the model's domain.
using ResidualFn =
    std::function<bool(const Eigen::VectorXd& params, Eigen::VectorXd& residuals,
                       Eigen::MatrixXd* jacobian)>;

struct LmOutcome {
    Eigen::VectorXd params;
    double cost = 0.0;  // sum of squared residuals
    bool converged = false;
    std::vector<double> history;  // cost after each accepted step, starting point first
};

// Marquardt-scaled damped Gauss-Newton. Only steps that lower the cost are
// accepted, so `history` is non-increasing.
LmOutcome levenberg_marquardt(const ResidualFn& fn, Eigen::VectorXd start, int max_iterations = 500);

}  // namespace mqnmr::detail
