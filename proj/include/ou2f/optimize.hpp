#pragma once

#include <Eigen/Core>

#include <functional>

namespace ou2f {

using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;

struct MinimizeOptions {
    int max_iterations = 2000;
    double f_tol = 1e-7;  ///< absolute tolerance on the objective
};

struct MinimizeResult {
    Eigen::VectorXd x;
    double f = 0.0;
    int iterations = 0;
    long evaluations = 0;
    bool converged = false;
};

/// Downhill-simplex minimizer. +infinity objective values are treated as
/// ordinary (worst) vertices, so evaluation failures act as rejections.
MinimizeResult nelder_mead(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                           const MinimizeOptions& options = {});

/// Quasi-Newton polish with central-difference gradients and Armijo
/// backtracking. Meant to refine a point already near a minimum.
MinimizeResult bfgs_polish(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                           const MinimizeOptions& options = {});

Eigen::VectorXd central_difference_gradient(const ObjectiveFn& f, const Eigen::VectorXd& x);

Eigen::MatrixXd central_difference_hessian(const ObjectiveFn& f, const Eigen::VectorXd& x);

}  // namespace ou2f
