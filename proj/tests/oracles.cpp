#include "oracles.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ou2f/detail/parallel.hpp"
#include "ou2f/rng.hpp"

namespace ou2f::test {

long double compute_A_oracle(const ModelParams& theta, long double t) {
    const long double kappa = theta.kappa, gamma = theta.gamma;
    const long double term1 = -(theta.lambda_chi / kappa) * (-std::expm1l(-kappa * t));
    const long double term2 =
        ((theta.mu_xi - theta.lambda_xi) / gamma) * (-std::expm1l(-gamma * t));
    const long double term3 =
        (-std::expm1l(-2.0L * kappa * t)) / (2.0L * kappa) * theta.sigma_chi * theta.sigma_chi;
    const long double term4 =
        (-std::expm1l(-2.0L * gamma * t)) / (2.0L * gamma) * theta.sigma_xi * theta.sigma_xi;
    const long double term5 = 2.0L * (-std::expm1l(-(kappa + gamma) * t)) / (kappa + gamma) *
                              theta.sigma_chi * theta.sigma_xi * theta.rho;
    return term1 + term2 + 0.5L * (term3 + term4 + term5);
}

double JointGaussian::loglik() const {
    const Eigen::Index n = y.size();
    const Eigen::LLT<Eigen::MatrixXd> llt(cov_y);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("oracle: cov_y not positive definite");
    const Eigen::VectorXd r = y - mean_y;
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const double quad = r.dot(llt.solve(r));
    return -0.5 * (static_cast<double>(n) * std::log(2.0 * M_PI) + logdet + quad);
}

void JointGaussian::conditional(Eigen::VectorXd& mean, Eigen::MatrixXd& cov) const {
    const Eigen::LLT<Eigen::MatrixXd> llt(cov_y);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("oracle: cov_y not positive definite");
    const Eigen::MatrixXd gain = llt.solve(cov_xy.transpose()).transpose();  // 2T x N
    mean = mean_x + gain * (y - mean_y);
    cov = cov_x - gain * cov_xy.transpose();
}

StateDistribution JointGaussian::conditional_state(Eigen::Index t) const {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    conditional(mean, cov);
    StateDistribution s;
    s.mean = mean.segment<2>(2 * t);
    s.cov = cov.block<2, 2>(2 * t, 2 * t);
    s.cov = 0.5 * (s.cov + s.cov.transpose());
    return s;
}

JointGaussian joint_gaussian(const FuturesPanel& panel, const ModelParams& theta,
                             const StateDistribution& init) {
    const Eigen::Index n_T = panel.n_dates();
    const Eigen::Index n = panel.n_contracts();
    if (!panel.log_prices.allFinite())
        throw std::runtime_error("oracle: panel must be complete");

    const TransitionModel trans = build_transition(theta, panel.dt);

    JointGaussian jg;
    jg.mean_x.resize(2 * n_T);
    jg.cov_x.setZero(2 * n_T, 2 * n_T);

    // Marginal means and same-time covariances by forward recursion.
    Vec2 m = init.mean;
    Mat2 p = init.cov;
    for (Eigen::Index t = 0; t < n_T; ++t) {
        m = trans.c + trans.G * m;
        p = trans.G * p * trans.G.transpose() + trans.W;
        p = 0.5 * (p + p.transpose());
        jg.mean_x.segment<2>(2 * t) = m;
        jg.cov_x.block<2, 2>(2 * t, 2 * t) = p;
    }
    // Cross-time blocks: Cov(x_s, x_t) = Cov(x_s) (G^{t-s})' for s < t.
    for (Eigen::Index s = 0; s < n_T; ++s) {
        Mat2 block = jg.cov_x.block<2, 2>(2 * s, 2 * s);
        for (Eigen::Index t = s + 1; t < n_T; ++t) {
            block = block * trans.G.transpose();
            jg.cov_x.block<2, 2>(2 * s, 2 * t) = block;
            jg.cov_x.block<2, 2>(2 * t, 2 * s) = block.transpose();
        }
    }

    // Observation stack through the measurement builders.
    const Eigen::Index N = n_T * n;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(N, 2 * n_T);
    Eigen::VectorXd d(N), noise(N);
    jg.y.resize(N);
    for (Eigen::Index t = 0; t < n_T; ++t) {
        const MeasurementModel meas =
            build_measurement(theta, panel.maturities.row(t).transpose(), 0);
        H.block(t * n, 2 * t, n, 2) = meas.F.transpose();
        d.segment(t * n, n) = meas.d;
        noise.segment(t * n, n) = meas.noise_var;
        jg.y.segment(t * n, n) = panel.log_prices.row(t).transpose();
    }

    jg.mean_y = d + H * jg.mean_x;
    jg.cov_y = H * jg.cov_x * H.transpose();
    jg.cov_y.diagonal() += noise;
    jg.cov_y = 0.5 * (jg.cov_y + jg.cov_y.transpose());
    jg.cov_xy = jg.cov_x * H.transpose();
    return jg;
}

Mat2 euler_step_covariance(const ModelParams& theta, double dt, std::int64_t n_paths,
                           int substeps, std::uint64_t seed) {
    const double h = dt / substeps;
    const double sqrt_h = std::sqrt(h);
    const double rho_c = std::sqrt(1.0 - theta.rho * theta.rho);
    const Vec2 x0(0.1, 3.0);

    constexpr std::int64_t chunk = 1 << 14;
    const std::int64_t n_chunks = (n_paths + chunk - 1) / chunk;
    std::vector<Eigen::Vector4d> sums(static_cast<std::size_t>(n_chunks), Eigen::Vector4d::Zero());
    std::vector<Mat2> sq(static_cast<std::size_t>(n_chunks), Mat2::Zero());

    detail::parallel_for(static_cast<std::size_t>(n_chunks), 0, [&](std::size_t ci) {
        Rng rng(Rng::derive(seed, ci));
        const std::int64_t lo = static_cast<std::int64_t>(ci) * chunk;
        const std::int64_t hi = std::min<std::int64_t>(lo + chunk, n_paths);
        Eigen::Vector4d local_sum = Eigen::Vector4d::Zero();
        Mat2 local_sq = Mat2::Zero();
        for (std::int64_t p = lo; p < hi; ++p) {
            double chi = x0[0], xi = x0[1];
            for (int s = 0; s < substeps; ++s) {
                const double z1 = rng.normal();
                const double z2 = rng.normal();
                const double d_chi = (-theta.kappa * chi - theta.lambda_chi) * h +
                                     theta.sigma_chi * sqrt_h * z1;
                const double d_xi = (theta.mu_xi - theta.gamma * xi - theta.lambda_xi) * h +
                                    theta.sigma_xi * sqrt_h * (theta.rho * z1 + rho_c * z2);
                chi += d_chi;
                xi += d_xi;
            }
            local_sum += Eigen::Vector4d(chi, xi, 0, 0);
            local_sq(0, 0) += chi * chi;
            local_sq(0, 1) += chi * xi;
            local_sq(1, 1) += xi * xi;
        }
        sums[ci] = local_sum;
        sq[ci] = local_sq;
    });

    Eigen::Vector2d total = Eigen::Vector2d::Zero();
    Mat2 total_sq = Mat2::Zero();
    for (std::size_t ci = 0; ci < sums.size(); ++ci) {
        total += sums[ci].head<2>();
        total_sq += sq[ci];
    }
    const double inv_n = 1.0 / static_cast<double>(n_paths);
    const Eigen::Vector2d mean = total * inv_n;
    Mat2 cov;
    cov(0, 0) = total_sq(0, 0) * inv_n - mean[0] * mean[0];
    cov(1, 1) = total_sq(1, 1) * inv_n - mean[1] * mean[1];
    cov(0, 1) = cov(1, 0) = total_sq(0, 1) * inv_n - mean[0] * mean[1];
    return cov;
}

}  // namespace ou2f::test
