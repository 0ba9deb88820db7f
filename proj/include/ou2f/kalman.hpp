#pragma once

#include <Eigen/Core>

#include <vector>

#include "ou2f/model.hpp"
#include "ou2f/panel.hpp"

namespace ou2f {

struct FilterOptions {
    /// Contract column whose measurement-error variance is s1^2.
    Eigen::Index front_contract = 0;
};

/// Forward-pass results. Dates with missing cells follow the observed
/// sub-vector convention: innovations[t] and innovation_covs[t] hold only the
/// observed entries (in contract order), and the likelihood constant counts
/// the actual observations per date.
struct FilterOutput {
    std::vector<StateDistribution> predicted;  ///< x_{t|t-1}
    std::vector<StateDistribution> filtered;   ///< x_{t|t}
    std::vector<Eigen::VectorXd> innovations;
    std::vector<Eigen::MatrixXd> innovation_covs;  ///< includes jitter if applied
    double loglik = 0.0;
};

struct SmootherOutput {
    std::vector<StateDistribution> smoothed;  ///< x_{t|n_T}
};

/// Stationary distribution of the transition: mean (0, mu_xi/gamma),
/// covariance equal to the dt->inf limit of W.
StateDistribution init_state(const ModelParams& theta);

/// Stationary mean with covariance inflated by 1e6, for a diffuse prior.
StateDistribution diffuse_state(const ModelParams& theta);

/// Linear-Gaussian Kalman filter over the panel with the prediction-error
/// log-likelihood. Innovation covariances are factorized by Cholesky; on a
/// failure, a jitter of 1e-10 * mean(diag) is added once, then NumericalError
/// carrying the time index is thrown. Covariance updates use the Joseph form
/// and are re-symmetrized every step.
FilterOutput run_filter(const FuturesPanel& panel, const ModelParams& theta,
                        const StateDistribution& init, const FilterOptions& options = {});

/// init_state + run_filter, returning only the log-likelihood. Numerical
/// failures (Cholesky breakdown, parameter overflow in the closed forms) are
/// mapped to -infinity so optimizers can treat them as rejections; argument
/// errors still throw.
double log_likelihood(const FuturesPanel& panel, const ModelParams& theta,
                      const FilterOptions& options = {});

/// Fixed-interval (Rauch-Tung-Striebel) smoother on a completed filter pass.
/// `filt` must come from the same panel and theta.
SmootherOutput run_smoother(const FuturesPanel& panel, const ModelParams& theta,
                            const FilterOutput& filt);

}  // namespace ou2f
