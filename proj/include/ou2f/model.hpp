#pragma once

#include <Eigen/Core>

#include <cmath>

#include "ou2f/params.hpp"

namespace ou2f {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Latent state (chi, xi), both in log-price units.
struct StateVec {
    double chi = 0.0;
    double xi = 0.0;

    Vec2 vector() const { return Vec2(chi, xi); }
};

/// Gaussian belief over the state: mean and symmetric PSD covariance.
struct StateDistribution {
    Vec2 mean = Vec2::Zero();
    Mat2 cov = Mat2::Zero();
};

/// Exact one-step AR(1) transition x_t = c + G x_{t-1} + w_t, w_t ~ N(0, W).
struct TransitionModel {
    Vec2 c = Vec2::Zero();   ///< drift; first entry is always 0
    Mat2 G = Mat2::Zero();   ///< diag(exp(-kappa dt), exp(-gamma dt))
    Mat2 W = Mat2::Zero();   ///< symmetric PD innovation covariance
    double dt = 0.0;         ///< step in years, > 0
};

/// Measurement y_t = d + F' x_t + v_t, v_t ~ N(0, diag(noise_var)).
struct MeasurementModel {
    Eigen::VectorXd d;          ///< A(T_i), length n
    Eigen::Matrix2Xd F;         ///< column i = (exp(-kappa T_i), exp(-gamma T_i))
    Eigen::VectorXd noise_var;  ///< diagonal of V: s1^2 for the front contract, s2^2 elsewhere

    Eigen::Index size() const { return d.size(); }
    Eigen::MatrixXd V() const { return noise_var.asDiagonal(); }
};

/// (1 - exp(-a t)) / a, evaluated through expm1 so small a*t does not cancel.
/// Tends to t as a -> 0.
template <class Scalar>
Scalar decay_weight(Scalar a, Scalar t) {
    if (a == Scalar(0)) return t;
    return -std::expm1(-a * t) / a;
}

/// Deterministic maturity adjustment A(t) of the log futures price: risk
/// premia, xi drift, and the accumulated risk-neutral variance of log S_t.
/// A(0) = 0 exactly. Throws DomainError if the result is not finite.
double compute_A(const ModelParams& theta, double t);

/// log F(0,T) = exp(-kappa T) chi0 + exp(-gamma T) xi0 + A(T).
double log_futures_price(const ModelParams& theta, double chi0, double xi0, double T);

/// Exact discretization of the OU pair over a step dt > 0.
TransitionModel build_transition(const ModelParams& theta, double dt);

/// Measurement system for the given maturities (years, all >= 0).
/// `front_contract` names the column whose error variance is s1^2; every
/// other column gets s2^2. Rolling panels can move the front contract away
/// from column 0.
MeasurementModel build_measurement(const ModelParams& theta, const Eigen::VectorXd& maturities,
                                   Eigen::Index front_contract = 0);

}  // namespace ou2f
