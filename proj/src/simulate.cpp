#include "ou2f/simulate.hpp"

#include <Eigen/Cholesky>

#include <cstdio>
#include <fstream>

#include "ou2f/errors.hpp"
#include "ou2f/kalman.hpp"
#include "ou2f/rng.hpp"

namespace ou2f {

Eigen::MatrixXd maturity_schedule(MaturityMode mode, Eigen::Index n_T, Eigen::Index n,
                                  double dt) {
    if (n_T < 1 || n < 1) throw ArgumentError("maturity_schedule: need n_T >= 1 and n >= 1");
    if (!(dt > 0.0)) throw ArgumentError("maturity_schedule: dt must be > 0");
    constexpr Eigen::Index days_per_month = 21;  // 252 / 12

    Eigen::MatrixXd m(n_T, n);
    for (Eigen::Index t = 0; t < n_T; ++t) {
        const double offset =
            mode == MaturityMode::Rolling ? static_cast<double>(t % days_per_month) * dt : 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            m(t, i) = static_cast<double>(i + 1) / 12.0 - offset;
    }
    return m;
}

SimOutput simulate(const ModelParams& theta, Eigen::Index n_T, double dt,
                   const Eigen::MatrixXd& maturities, std::uint64_t seed,
                   const Date& start_date) {
    theta.validate();
    if (n_T < 1) throw ArgumentError("simulate: n_T must be >= 1");
    if (!(dt > 0.0)) throw ArgumentError("simulate: dt must be > 0");
    if (maturities.rows() != n_T || maturities.cols() < 1)
        throw ArgumentError("simulate: maturities must be n_T x n with n >= 1");
    if (!maturities.allFinite() || (maturities.array() < 0.0).any())
        throw ArgumentError("simulate: maturities must be finite and >= 0");

    const Eigen::Index n = maturities.cols();
    const TransitionModel trans = build_transition(theta, dt);
    const StateDistribution prior = init_state(theta);

    Eigen::LLT<Mat2> chol_prior(prior.cov);
    Eigen::LLT<Mat2> chol_w(trans.W);
    if (chol_prior.info() != Eigen::Success || chol_w.info() != Eigen::Success)
        throw NumericalError("state covariance is not positive definite", 0);
    const Mat2 prior_l = chol_prior.matrixL();
    const Mat2 w_l = chol_w.matrixL();

    Rng rng(seed);

    SimOutput out;
    out.theta = theta;
    out.seed = seed;
    out.true_states.reserve(static_cast<std::size_t>(n_T));

    Vec2 x = prior.mean + prior_l * Vec2(rng.normal(), rng.normal());

    FuturesPanel& panel = out.panel;
    panel.dt = dt;
    panel.maturities = maturities;
    panel.log_prices.resize(n_T, n);
    panel.dates.reserve(static_cast<std::size_t>(n_T));

    Date date = start_date;
    MeasurementModel meas;
    Eigen::Index cached_row = -1;
    for (Eigen::Index t = 0; t < n_T; ++t) {
        x = trans.c + trans.G * x + w_l * Vec2(rng.normal(), rng.normal());
        out.true_states.push_back({x[0], x[1]});

        if (cached_row < 0 || maturities.row(t) != maturities.row(cached_row)) {
            meas = build_measurement(theta, maturities.row(t).transpose(), 0);
            cached_row = t;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            const double sd = i == 0 ? theta.s1 : theta.s2;
            panel.log_prices(t, i) =
                meas.d[i] + meas.F.col(i).dot(x) + sd * rng.normal();
        }

        panel.dates.push_back(date);
        date = date.next_trading_day();
    }
    panel.validate();
    return out;
}

void save_true_states(const std::vector<Date>& dates, const std::vector<StateVec>& states,
                      const std::filesystem::path& path, const std::string& header_comment) {
    if (dates.size() != states.size())
        throw ArgumentError("save_true_states: dates/states length mismatch");
    std::ofstream out(path);
    if (!out) throw ParseError(ParseError::Kind::Io, "cannot write '" + path.string() + "'");
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    out << "date,chi,xi\n";
    char buf[80];
    for (std::size_t t = 0; t < dates.size(); ++t) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g", dates[t].iso().c_str(), states[t].chi,
                      states[t].xi);
        out << buf << "\n";
    }
}

}  // namespace ou2f
