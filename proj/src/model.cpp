#include "ou2f/model.hpp"

#include <cmath>
#include <string>

#include "ou2f/errors.hpp"

namespace ou2f {

double compute_A(const ModelParams& theta, double t) {
    if (!(t >= 0.0)) throw ArgumentError("compute_A: maturity must be >= 0");
    theta.validate();

    const double premium_chi = -theta.lambda_chi * decay_weight(theta.kappa, t);
    const double drift_xi = (theta.mu_xi - theta.lambda_xi) * decay_weight(theta.gamma, t);
    const double var_chi = decay_weight(2.0 * theta.kappa, t) * theta.sigma_chi * theta.sigma_chi;
    const double var_xi = decay_weight(2.0 * theta.gamma, t) * theta.sigma_xi * theta.sigma_xi;
    const double covar = 2.0 * decay_weight(theta.kappa + theta.gamma, t) * theta.sigma_chi *
                         theta.sigma_xi * theta.rho;

    const double a = premium_chi + drift_xi + 0.5 * (var_chi + var_xi + covar);
    if (!std::isfinite(a))
        throw DomainError("compute_A: non-finite result at t=" + std::to_string(t));
    return a;
}

double log_futures_price(const ModelParams& theta, double chi0, double xi0, double T) {
    if (!(T >= 0.0)) throw ArgumentError("log_futures_price: maturity must be >= 0");
    return std::exp(-theta.kappa * T) * chi0 + std::exp(-theta.gamma * T) * xi0 +
           compute_A(theta, T);
}

TransitionModel build_transition(const ModelParams& theta, double dt) {
    if (!(dt > 0.0)) throw ArgumentError("build_transition: dt must be > 0");
    theta.validate();

    TransitionModel m;
    m.dt = dt;
    m.c << 0.0, theta.mu_xi * decay_weight(theta.gamma, dt);
    m.G << std::exp(-theta.kappa * dt), 0.0, 0.0, std::exp(-theta.gamma * dt);

    const double w11 = decay_weight(2.0 * theta.kappa, dt) * theta.sigma_chi * theta.sigma_chi;
    const double w22 = decay_weight(2.0 * theta.gamma, dt) * theta.sigma_xi * theta.sigma_xi;
    const double w12 = decay_weight(theta.kappa + theta.gamma, dt) * theta.sigma_chi *
                       theta.sigma_xi * theta.rho;
    m.W << w11, w12, w12, w22;
    return m;
}

MeasurementModel build_measurement(const ModelParams& theta, const Eigen::VectorXd& maturities,
                                   Eigen::Index front_contract) {
    const Eigen::Index n = maturities.size();
    if (n < 1) throw ArgumentError("build_measurement: need at least one maturity");
    theta.validate();

    MeasurementModel m;
    m.d.resize(n);
    m.F.resize(2, n);
    m.noise_var.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double T = maturities[i];
        if (!(T >= 0.0))
            throw ArgumentError("build_measurement: negative maturity at index " +
                                std::to_string(i));
        m.d[i] = compute_A(theta, T);
        m.F.col(i) << std::exp(-theta.kappa * T), std::exp(-theta.gamma * T);
        m.noise_var[i] = (i == front_contract) ? theta.s1 * theta.s1 : theta.s2 * theta.s2;
    }
    return m;
}

}  // namespace ou2f
