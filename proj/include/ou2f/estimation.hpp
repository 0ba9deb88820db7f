#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ou2f/panel.hpp"
#include "ou2f/params.hpp"

namespace ou2f {

/// Per-parameter box used for grid placement, in ModelParams units.
/// The local optimizer itself runs unconstrained; the box only seeds it.
struct ParamBounds {
    ParamVector lower;
    ParamVector upper;

    /// kappa, gamma in [1e-3, 10]; sigmas in [1e-3, 2]; rho in [-0.95, 0.95];
    /// mu_xi and lambdas in [-1, 1]; s1, s2 in [1e-4, 0.5]. Covers annualized
    /// energy-market magnitudes.
    static ParamBounds defaults();

    void validate() const;
};

struct FitConfig {
    ParamBounds bounds = ParamBounds::defaults();
    int grid_points = 3;      ///< grid points per parameter, >= 1
    int budget = 2000;        ///< max grid evaluations before uniform subsampling
    int top_k = 5;            ///< starts handed to the local optimizer
    int max_iterations = 2000;///< simplex iteration cap per start
    double tol = 1e-7;        ///< absolute convergence tolerance on loglik
    std::uint64_t seed = 0;
    unsigned n_threads = 0;   ///< 0 = hardware concurrency

    void validate() const;
};

struct GridPoint {
    ModelParams theta;
    double loglik = 0.0;
};

struct StartTrace {
    ModelParams start;
    double final_loglik = 0.0;
};

struct FitResult {
    ModelParams theta_hat;
    double loglik = 0.0;
    std::optional<ParamVector> std_errors;  ///< absent on Hessian failure
    bool converged = false;
    int n_starts = 0;
    std::vector<StartTrace> start_trace;
    std::vector<std::string> warnings;
};

/// Componentwise bijection onto R^10: log for kappa, gamma, sigma_chi,
/// sigma_xi, s1, s2; atanh for rho; identity for mu_xi and the lambdas.
ParamVector to_unconstrained(const ModelParams& theta);
ModelParams from_unconstrained(const ParamVector& v);

/// Evaluates the likelihood on the Cartesian grid spanned by config.bounds
/// (grid coordinates equispaced in unconstrained space; a single point sits
/// at the midpoint). Grids larger than the budget are subsampled uniformly
/// at random from the seed. Points are canonicalized (kappa > gamma) before
/// evaluation and returned ranked by loglik, best first, at most top_k
/// distinct points. Throws EstimationError when every point fails.
std::vector<GridPoint> grid_search(const FuturesPanel& panel, const FitConfig& config);

/// Multi-start maximum likelihood: grid_search seeds a simplex search plus
/// quasi-Newton polish per start, the winner is canonicalized, and standard
/// errors come from the inverse central-difference Hessian in unconstrained
/// space, delta-method-mapped back to parameter units. Deterministic for a
/// fixed (panel, config) including the seed, regardless of thread count.
FitResult fit_mle(const FuturesPanel& panel, const FitConfig& config);

}  // namespace ou2f
