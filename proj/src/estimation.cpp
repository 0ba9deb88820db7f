#include "ou2f/estimation.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "ou2f/detail/parallel.hpp"
#include "ou2f/errors.hpp"
#include "ou2f/kalman.hpp"
#include "ou2f/optimize.hpp"
#include "ou2f/rng.hpp"

namespace ou2f {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kBfgsIterations = 150;

// Slots holding strictly positive parameters (log-transformed).
constexpr bool kLogSlot[kNumParams] = {true, true, false, true, true,
                                       false, false, false, true, true};
constexpr int kRhoSlot = 5;

double slot_to_u(int slot, double v) {
    if (kLogSlot[slot]) return std::log(v);
    if (slot == kRhoSlot) return std::atanh(v);
    return v;
}

/// Saturates at the representable boundary of the open domain so that every
/// finite u maps to a valid parameter (tanh reaches +-1.0 in doubles, exp
/// under/overflows).
double slot_from_u(int slot, double u) {
    if (kLogSlot[slot]) {
        const double v = std::exp(u);
        if (v <= 0.0) return 1e-300;
        if (std::isinf(v)) return 1e300;
        return v;
    }
    if (slot == kRhoSlot) {
        const double r = std::tanh(u);
        if (r >= 1.0) return 1.0 - 1e-12;
        if (r <= -1.0) return -1.0 + 1e-12;
        return r;
    }
    return u;
}

/// d(theta)/d(u) of slot_from_u at theta, for the delta method.
double slot_jacobian(int slot, double theta_value) {
    if (kLogSlot[slot]) return theta_value;
    if (slot == kRhoSlot) return 1.0 - theta_value * theta_value;
    return 1.0;
}

}  // namespace

ParamBounds ParamBounds::defaults() {
    ParamBounds b;
    //          kappa  gamma  mu_xi sigma_chi sigma_xi  rho  l_chi l_xi    s1    s2
    b.lower << 1e-3,  1e-3,  -1.0,  1e-3,     1e-3,  -0.95, -1.0, -1.0, 1e-4, 1e-4;
    b.upper << 10.0,  10.0,   1.0,   2.0,      2.0,   0.95,  1.0,  1.0,  0.5,  0.5;
    return b;
}

void ParamBounds::validate() const {
    if (!lower.allFinite() || !upper.allFinite())
        throw ArgumentError("ParamBounds: bounds must be finite");
    for (int i = 0; i < kNumParams; ++i) {
        if (!(lower[i] < upper[i]))
            throw ArgumentError("ParamBounds: lower must be < upper for " +
                                ModelParams::names()[i]);
        if (kLogSlot[i] && lower[i] <= 0.0)
            throw ArgumentError("ParamBounds: " + ModelParams::names()[i] + " bound must be > 0");
    }
    if (lower[kRhoSlot] <= -1.0 || upper[kRhoSlot] >= 1.0)
        throw ArgumentError("ParamBounds: rho bounds must lie inside (-1, 1)");
}

void FitConfig::validate() const {
    bounds.validate();
    if (grid_points < 1) throw ArgumentError("FitConfig: grid_points must be >= 1");
    if (budget < 1) throw ArgumentError("FitConfig: budget must be >= 1");
    if (top_k < 1) throw ArgumentError("FitConfig: top_k must be >= 1");
    if (max_iterations < 1) throw ArgumentError("FitConfig: max_iterations must be >= 1");
    if (!(tol > 0.0)) throw ArgumentError("FitConfig: tol must be > 0");
}

ParamVector to_unconstrained(const ModelParams& theta) {
    theta.validate();
    const ParamVector v = theta.to_vector();
    ParamVector u;
    for (int i = 0; i < kNumParams; ++i) u[i] = slot_to_u(i, v[i]);
    return u;
}

ModelParams from_unconstrained(const ParamVector& u) {
    if (!u.allFinite()) throw ArgumentError("from_unconstrained: non-finite component");
    ParamVector v;
    for (int i = 0; i < kNumParams; ++i) v[i] = slot_from_u(i, u[i]);
    return ModelParams::from_vector(v);
}

std::vector<GridPoint> grid_search(const FuturesPanel& panel, const FitConfig& config) {
    config.validate();
    panel.validate();

    // Grid coordinates per slot, equispaced in unconstrained space.
    const int g = config.grid_points;
    Eigen::MatrixXd coords(kNumParams, g);
    for (int i = 0; i < kNumParams; ++i) {
        const double lo = slot_to_u(i, config.bounds.lower[i]);
        const double hi = slot_to_u(i, config.bounds.upper[i]);
        if (g == 1) {
            coords(i, 0) = 0.5 * (lo + hi);
        } else {
            for (int j = 0; j < g; ++j)
                coords(i, j) = lo + (hi - lo) * static_cast<double>(j) / (g - 1);
        }
    }

    const double full_size = std::pow(static_cast<double>(g), kNumParams);
    const bool enumerate = full_size <= static_cast<double>(config.budget);
    const std::size_t count =
        enumerate ? static_cast<std::size_t>(full_size) : static_cast<std::size_t>(config.budget);

    std::vector<ModelParams> candidates(count);
    if (enumerate) {
        std::array<int, kNumParams> idx{};
        for (std::size_t k = 0; k < count; ++k) {
            ParamVector u;
            for (int i = 0; i < kNumParams; ++i) u[i] = coords(i, idx[i]);
            candidates[k] = from_unconstrained(u).canonicalized();
            for (int i = kNumParams - 1; i >= 0; --i) {
                if (++idx[i] < g) break;
                idx[i] = 0;
            }
        }
    } else {
        Rng rng(Rng::derive(config.seed, 0x6e1d));
        for (std::size_t k = 0; k < count; ++k) {
            ParamVector u;
            for (int i = 0; i < kNumParams; ++i)
                u[i] = coords(i, static_cast<int>(rng.below(static_cast<std::uint64_t>(g))));
            candidates[k] = from_unconstrained(u).canonicalized();
        }
    }

    std::vector<double> loglik(count);
    detail::parallel_for(count, config.n_threads, [&](std::size_t k) {
        loglik[k] = log_likelihood(panel, candidates[k]);
    });

    std::vector<std::size_t> order(count);
    for (std::size_t k = 0; k < count; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (loglik[a] != loglik[b]) return loglik[a] > loglik[b];
        return a < b;
    });

    std::vector<GridPoint> top;
    for (std::size_t k = 0; k < count && top.size() < static_cast<std::size_t>(config.top_k);
         ++k) {
        const std::size_t j = order[k];
        if (loglik[j] == -kInf) break;  // ranked; everything after is failed too
        const ModelParams& theta = candidates[j];
        const bool duplicate = std::any_of(top.begin(), top.end(), [&](const GridPoint& p) {
            return p.theta == theta;
        });
        if (!duplicate) top.push_back({theta, loglik[j]});
    }
    if (top.empty())
        throw EstimationError("grid_search: every grid point failed to evaluate");
    return top;
}

namespace {

struct StartResult {
    ModelParams theta;
    double loglik = -kInf;
    bool converged = false;
};

/// Simplex search + BFGS polish from one canonical start, repeated until the
/// objective stalls, with the kappa>gamma convention restored (and
/// re-polished) if the optimizer crossed labels.
StartResult optimize_from(const FuturesPanel& panel, const FitConfig& config,
                          const ModelParams& start, const ObjectiveFn& objective) {
    const MinimizeOptions nm_opts{config.max_iterations, config.tol};
    const MinimizeOptions nm_restart{std::min(config.max_iterations, 400), config.tol};
    const MinimizeOptions polish_opts{kBfgsIterations, config.tol};

    Eigen::VectorXd u = to_unconstrained(start);
    MinimizeResult best;
    bool converged = false;
    double f_prev = std::numeric_limits<double>::infinity();
    for (int round = 0; round < 3; ++round) {
        const MinimizeResult nm = nelder_mead(objective, u, round == 0 ? nm_opts : nm_restart);
        best = bfgs_polish(objective, nm.x, polish_opts);
        converged = nm.converged || best.converged;
        u = best.x;
        if (f_prev - best.f <= 10.0 * config.tol) break;
        f_prev = best.f;
    }

    ModelParams theta = from_unconstrained(best.x);
    if (!theta.is_canonical()) {
        const MinimizeResult swapped =
            bfgs_polish(objective, to_unconstrained(theta.canonicalized()), polish_opts);
        theta = from_unconstrained(swapped.x);
        converged = swapped.converged;
        if (!theta.is_canonical()) theta = theta.canonicalized();
    }

    StartResult out;
    out.theta = theta;
    out.loglik = log_likelihood(panel, theta);
    out.converged = converged;
    return out;
}

}  // namespace

FitResult fit_mle(const FuturesPanel& panel, const FitConfig& config) {
    config.validate();
    panel.validate();
    if (panel.n_dates() < 2 || panel.n_contracts() < 2)
        throw ArgumentError("fit_mle: panel needs at least 2 dates and 2 contracts");

    const std::vector<GridPoint> starts = grid_search(panel, config);

    const ObjectiveFn objective = [&](const Eigen::VectorXd& u) {
        return -log_likelihood(panel, from_unconstrained(u));
    };

    std::vector<StartResult> results(starts.size());
    detail::parallel_for(starts.size(), config.n_threads, [&](std::size_t k) {
        results[k] = optimize_from(panel, config, starts[k].theta, objective);
    });

    std::size_t win = 0;
    for (std::size_t k = 1; k < results.size(); ++k)
        if (results[k].loglik > results[win].loglik) win = k;
    if (results[win].loglik == -kInf) {
        std::string diag = "fit_mle: every start failed;";
        for (std::size_t k = 0; k < results.size(); ++k)
            diag += " start " + std::to_string(k) + " loglik " +
                    std::to_string(results[k].loglik) + ";";
        throw EstimationError(diag);
    }

    FitResult fit;
    fit.theta_hat = results[win].theta;
    fit.loglik = results[win].loglik;
    fit.converged = results[win].converged;
    fit.n_starts = static_cast<int>(starts.size());
    for (std::size_t k = 0; k < starts.size(); ++k)
        fit.start_trace.push_back({starts[k].theta, results[k].loglik});

    // Standard errors: inverse central-difference Hessian of -loglik in
    // unconstrained space, mapped back through the slot Jacobians.
    const ParamVector u_hat = to_unconstrained(fit.theta_hat);
    const Eigen::MatrixXd hessian = central_difference_hessian(objective, u_hat);
    bool have_se = hessian.allFinite();
    if (have_se) {
        const Eigen::LLT<Eigen::MatrixXd> llt(hessian);
        if (llt.info() == Eigen::Success) {
            const Eigen::MatrixXd cov_u =
                llt.solve(Eigen::MatrixXd::Identity(kNumParams, kNumParams));
            const ParamVector v = fit.theta_hat.to_vector();
            ParamVector se;
            for (int i = 0; i < kNumParams; ++i)
                se[i] = std::abs(slot_jacobian(i, v[i])) * std::sqrt(cov_u(i, i));
            if (se.allFinite())
                fit.std_errors = se;
            else
                have_se = false;
        } else {
            have_se = false;
        }
    }
    if (!have_se)
        fit.warnings.push_back(
            "standard errors unavailable: Hessian of the negative log-likelihood is not "
            "positive definite at the optimum");

    if (fit.std_errors) {
        const ParamVector v = fit.theta_hat.to_vector();
        for (int i : {6, 7}) {  // lambda_chi, lambda_xi
            if ((*fit.std_errors)[i] > 10.0 * std::abs(v[i]))
                fit.warnings.push_back(
                    ModelParams::names()[i] +
                    " is weakly identified: std error exceeds 10x the point estimate");
        }
    }
    return fit;
}

}  // namespace ou2f
