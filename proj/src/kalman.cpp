#include "ou2f/kalman.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

#include "ou2f/errors.hpp"

namespace ou2f {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

Mat2 symmetrized(const Mat2& m) { return 0.5 * (m + m.transpose()); }

bool rows_equal(const Eigen::MatrixXd& m, Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index i = 0; i < m.cols(); ++i) {
        const double x = m(a, i), y = m(b, i);
        const bool xn = std::isnan(x), yn = std::isnan(y);
        if (xn != yn) return false;
        if (!xn && x != y) return false;
    }
    return true;
}

/// Cholesky with the one-shot jitter rule. Throws NumericalError on failure.
Eigen::LLT<Eigen::MatrixXd> factor_innovation_cov(Eigen::MatrixXd& L, std::size_t t) {
    if (!L.allFinite())
        throw NumericalError("innovation covariance has non-finite entries", t);
    Eigen::LLT<Eigen::MatrixXd> llt(L);
    if (llt.info() == Eigen::Success) return llt;
    const double jitter = 1e-10 * L.diagonal().mean();
    L.diagonal().array() += jitter;
    llt.compute(L);
    if (llt.info() != Eigen::Success)
        throw NumericalError("innovation covariance not positive definite", t);
    return llt;
}

/// The filter needs shapes, masks, and a step; contract ordering within rows
/// is a data-module concern (relabeling contracts must not change loglik).
void check_panel_for_filter(const FuturesPanel& panel) {
    const Eigen::Index n_T = panel.n_dates();
    if (n_T < 1) throw ArgumentError("run_filter: panel is empty");
    if (static_cast<Eigen::Index>(panel.dates.size()) != n_T ||
        panel.maturities.rows() != n_T || panel.maturities.cols() != panel.n_contracts())
        throw ArgumentError("run_filter: panel shape mismatch");
    if (!(panel.dt > 0.0)) throw ArgumentError("run_filter: panel dt must be > 0");
    for (Eigen::Index t = 0; t < n_T; ++t)
        for (Eigen::Index i = 0; i < panel.n_contracts(); ++i)
            if (std::isfinite(panel.log_prices(t, i)) != std::isfinite(panel.maturities(t, i)))
                throw ArgumentError("run_filter: price/maturity masks differ");
}

FilterOutput filter_impl(const FuturesPanel& panel, const ModelParams& theta,
                         const StateDistribution& init, const FilterOptions& options,
                         bool store) {
    check_panel_for_filter(panel);
    theta.validate();
    const Eigen::Index n_T = panel.n_dates();
    if (!init.mean.allFinite() || !init.cov.allFinite())
        throw ArgumentError("run_filter: invalid initial state");

    const TransitionModel trans = build_transition(theta, panel.dt);

    FilterOutput out;
    if (store) {
        out.predicted.reserve(n_T);
        out.filtered.reserve(n_T);
        out.innovations.reserve(n_T);
        out.innovation_covs.reserve(n_T);
    }

    // Per-date measurement, rebuilt only when the maturity row changes.
    std::vector<Eigen::Index> obs;
    MeasurementModel meas;
    Eigen::Index cached_row = -1;

    Vec2 mean = init.mean;
    Mat2 cov = init.cov;
    double loglik = 0.0;

    for (Eigen::Index t = 0; t < n_T; ++t) {
        // Predict.
        Vec2 mean_p = trans.c + trans.G * mean;
        Mat2 cov_p = symmetrized(trans.G * cov * trans.G.transpose() + trans.W);

        if (cached_row < 0 || !rows_equal(panel.maturities, cached_row, t)) {
            obs = panel.observed_at(t);
            if (!obs.empty()) {
                Eigen::VectorXd mats(static_cast<Eigen::Index>(obs.size()));
                Eigen::Index front_pos = -1;
                for (std::size_t k = 0; k < obs.size(); ++k) {
                    mats[static_cast<Eigen::Index>(k)] = panel.maturities(t, obs[k]);
                    if (obs[k] == options.front_contract)
                        front_pos = static_cast<Eigen::Index>(k);
                }
                meas = build_measurement(theta, mats, front_pos);
            }
            cached_row = t;
        }

        Vec2 mean_f = mean_p;
        Mat2 cov_f = cov_p;
        Eigen::VectorXd e;
        Eigen::MatrixXd L;

        if (!obs.empty()) {
            const Eigen::Index m = static_cast<Eigen::Index>(obs.size());
            Eigen::VectorXd y(m);
            for (Eigen::Index k = 0; k < m; ++k)
                y[k] = panel.log_prices(t, obs[static_cast<std::size_t>(k)]);

            e = y - meas.d - meas.F.transpose() * mean_p;
            L = meas.F.transpose() * cov_p * meas.F;
            L.diagonal() += meas.noise_var;
            L = 0.5 * (L + L.transpose());
            if (!e.allFinite())
                throw NumericalError("innovation has non-finite entries",
                                     static_cast<std::size_t>(t));

            const auto llt = factor_innovation_cov(L, static_cast<std::size_t>(t));
            const double logdet =
                2.0 * llt.matrixLLT().diagonal().array().log().sum();
            const double quad = e.dot(llt.solve(e));
            loglik -= 0.5 * (static_cast<double>(m) * kLog2Pi + logdet + quad);

            const Eigen::Matrix<double, 2, Eigen::Dynamic> K =
                llt.solve(meas.F.transpose() * cov_p).transpose();
            mean_f = mean_p + K * e;
            const Mat2 J = Mat2::Identity() - K * meas.F.transpose();
            cov_f = symmetrized(J * cov_p * J.transpose() +
                                K * meas.noise_var.asDiagonal() * K.transpose());
        }

        if (!mean_f.allFinite() || !cov_f.allFinite())
            throw NumericalError("filtered state has non-finite entries",
                                 static_cast<std::size_t>(t));

        if (store) {
            out.predicted.push_back({mean_p, cov_p});
            out.filtered.push_back({mean_f, cov_f});
            out.innovations.push_back(std::move(e));
            out.innovation_covs.push_back(std::move(L));
        }
        mean = mean_f;
        cov = cov_f;
    }

    if (!std::isfinite(loglik))
        throw NumericalError("log-likelihood is not finite", static_cast<std::size_t>(n_T - 1));
    out.loglik = loglik;
    return out;
}

}  // namespace

StateDistribution init_state(const ModelParams& theta) {
    theta.validate();
    StateDistribution s;
    s.mean << 0.0, theta.mu_xi / theta.gamma;
    const double v11 = theta.sigma_chi * theta.sigma_chi / (2.0 * theta.kappa);
    const double v22 = theta.sigma_xi * theta.sigma_xi / (2.0 * theta.gamma);
    const double v12 = theta.sigma_chi * theta.sigma_xi * theta.rho / (theta.kappa + theta.gamma);
    s.cov << v11, v12, v12, v22;
    if (!s.mean.allFinite() || !s.cov.allFinite())
        throw DomainError("init_state: non-finite stationary moments (parameter overflow)");
    return s;
}

StateDistribution diffuse_state(const ModelParams& theta) {
    StateDistribution s = init_state(theta);
    s.cov *= 1e6;
    return s;
}

FilterOutput run_filter(const FuturesPanel& panel, const ModelParams& theta,
                        const StateDistribution& init, const FilterOptions& options) {
    return filter_impl(panel, theta, init, options, /*store=*/true);
}

double log_likelihood(const FuturesPanel& panel, const ModelParams& theta,
                      const FilterOptions& options) {
    constexpr double sentinel = -std::numeric_limits<double>::infinity();
    try {
        return filter_impl(panel, theta, init_state(theta), options, /*store=*/false).loglik;
    } catch (const NumericalError&) {
        return sentinel;
    } catch (const DomainError&) {
        return sentinel;
    }
}

SmootherOutput run_smoother(const FuturesPanel& panel, const ModelParams& theta,
                            const FilterOutput& filt) {
    check_panel_for_filter(panel);
    theta.validate();
    const Eigen::Index n_T = panel.n_dates();
    if (filt.filtered.size() != static_cast<std::size_t>(n_T) ||
        filt.predicted.size() != static_cast<std::size_t>(n_T))
        throw ArgumentError("run_smoother: filter output does not match panel");

    const TransitionModel trans = build_transition(theta, panel.dt);

    SmootherOutput out;
    out.smoothed.resize(static_cast<std::size_t>(n_T));
    out.smoothed.back() = filt.filtered.back();

    for (Eigen::Index t = n_T - 2; t >= 0; --t) {
        const auto& f = filt.filtered[static_cast<std::size_t>(t)];
        const auto& p = filt.predicted[static_cast<std::size_t>(t + 1)];
        const auto& s_next = out.smoothed[static_cast<std::size_t>(t + 1)];

        Eigen::LLT<Mat2> llt(p.cov);
        if (llt.info() != Eigen::Success)
            throw NumericalError("predicted covariance is singular",
                                 static_cast<std::size_t>(t + 1));
        // C = P_{t|t} G' P_{t+1|t}^{-1}
        const Mat2 C = llt.solve(trans.G * f.cov).transpose();

        StateDistribution s;
        s.mean = f.mean + C * (s_next.mean - p.mean);
        s.cov = symmetrized(f.cov + C * (s_next.cov - p.cov) * C.transpose());
        if (!s.mean.allFinite() || !s.cov.allFinite())
            throw NumericalError("smoothed state has non-finite entries",
                                 static_cast<std::size_t>(t));
        out.smoothed[static_cast<std::size_t>(t)] = s;
    }
    return out;
}

}  // namespace ou2f
