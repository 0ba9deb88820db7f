#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <limits>

#include "ou2f/errors.hpp"
#include "ou2f/kalman.hpp"
#include "ou2f/simulate.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace ou2f;
using test::fixture_theta;
using test::random_theta;

namespace {

FuturesPanel small_panel(const ModelParams& theta, Eigen::Index n_T, Eigen::Index n,
                         std::uint64_t seed) {
    const Eigen::MatrixXd mats =
        maturity_schedule(MaturityMode::Constant, n_T, n, 1.0 / 252.0);
    return simulate(theta, n_T, 1.0 / 252.0, mats, seed).panel;
}

}  // namespace

TEST_CASE("init_state is the stationary law") {
    Rng rng(21);
    for (int i = 0; i < 20; ++i) {
        const ModelParams th = random_theta(rng);
        const StateDistribution s = init_state(th);
        CHECK(s.mean[0] == 0.0);
        CHECK(s.mean[1] == doctest::Approx(th.mu_xi / th.gamma).epsilon(1e-14));

        // Cross-module: the dt -> inf transition covariance is the same law.
        const TransitionModel m = build_transition(th, 1e3);
        CHECK((s.cov - m.W).cwiseAbs().maxCoeff() < 1e-9);
    }

    ModelParams th = fixture_theta();
    th.rho = 0.0;
    const StateDistribution s = init_state(th);
    CHECK(s.cov(0, 1) == 0.0);
    CHECK(s.cov(1, 0) == 0.0);

    const StateDistribution d = diffuse_state(th);
    CHECK(d.mean == s.mean);
    CHECK(d.cov == (s.cov * 1e6).eval());
}

TEST_CASE("filter recovers exact states from noiseless observations") {
    ModelParams th = fixture_theta();
    th.s1 = th.s2 = 1e-8;
    const Eigen::Index n_T = 50, n = 3;
    const Eigen::MatrixXd mats = maturity_schedule(MaturityMode::Constant, n_T, n, 1.0 / 252.0);
    const SimOutput sim = simulate(th, n_T, 1.0 / 252.0, mats, 5150);

    const FilterOutput out = run_filter(sim.panel, th, init_state(th));
    for (Eigen::Index t = 1; t < n_T; ++t) {
        const auto& f = out.filtered[static_cast<std::size_t>(t)];
        CHECK(std::abs(f.mean[0] - sim.true_states[static_cast<std::size_t>(t)].chi) < 1e-6);
        CHECK(std::abs(f.mean[1] - sim.true_states[static_cast<std::size_t>(t)].xi) < 1e-6);
    }
}

TEST_CASE("filter loglik equals the stacked joint-Gaussian oracle") {
    Rng rng(22);
    for (int rep = 0; rep < 10; ++rep) {
        const ModelParams th = random_theta(rng);
        const Eigen::Index n_T = 1 + static_cast<Eigen::Index>(rng.below(5));
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(3));
        const FuturesPanel panel = small_panel(th, n_T, n, 1000 + rep);

        const StateDistribution init = init_state(th);
        const FilterOutput filt = run_filter(panel, th, init);
        const double oracle = test::joint_gaussian(panel, th, init).loglik();
        CHECK(std::abs(filt.loglik - oracle) < 1e-8);
    }
}

TEST_CASE("loglik decomposition recomputes from stored innovations") {
    const ModelParams th = fixture_theta();
    FuturesPanel panel = small_panel(th, 40, 4, 91);
    // A hole exercises the observed-subvector convention.
    panel.log_prices(7, 2) = std::numeric_limits<double>::quiet_NaN();
    panel.maturities(7, 2) = std::numeric_limits<double>::quiet_NaN();

    const FilterOutput out = run_filter(panel, th, init_state(th));
    REQUIRE(out.innovations.size() == static_cast<std::size_t>(panel.n_dates()));

    double recomputed = 0.0;
    for (std::size_t t = 0; t < out.innovations.size(); ++t) {
        const auto& e = out.innovations[t];
        const auto& L = out.innovation_covs[t];
        REQUIRE(L.rows() == e.size());
        if (e.size() == 0) continue;
        const Eigen::LLT<Eigen::MatrixXd> llt(L);
        REQUIRE(llt.info() == Eigen::Success);
        const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
        recomputed -= 0.5 * (static_cast<double>(e.size()) * std::log(2.0 * M_PI) + logdet +
                             e.dot(llt.solve(e)));
    }
    CHECK(std::abs(recomputed - out.loglik) < 1e-10);

    // Sequence lengths agree everywhere.
    CHECK(out.predicted.size() == out.filtered.size());
    CHECK(out.innovation_covs.size() == out.innovations.size());
    CHECK(out.innovations[7].size() == 3);
}

TEST_CASE("a fully missing date contributes nothing and skips the update") {
    const ModelParams th = fixture_theta();
    FuturesPanel panel = small_panel(th, 10, 3, 98);
    panel.log_prices.row(4).setConstant(std::numeric_limits<double>::quiet_NaN());
    panel.maturities.row(4).setConstant(std::numeric_limits<double>::quiet_NaN());

    const FilterOutput out = run_filter(panel, th, init_state(th));
    CHECK(out.innovations[4].size() == 0);
    CHECK(out.filtered[4].mean == out.predicted[4].mean);
    CHECK(out.filtered[4].cov == out.predicted[4].cov);

    // The smoother still bridges across the gap.
    const SmootherOutput smth = run_smoother(panel, th, out);
    CHECK(smth.smoothed[4].mean.allFinite());
}

TEST_CASE("permuting contract order leaves loglik unchanged") {
    const ModelParams th = fixture_theta();
    const FuturesPanel panel = small_panel(th, 30, 3, 92);

    // Swap contracts 0 and 2 on every date; s1 follows the original front
    // contract, now sitting in column 2.
    FuturesPanel permuted = panel;
    permuted.log_prices.col(0).swap(permuted.log_prices.col(2));
    permuted.maturities.col(0).swap(permuted.maturities.col(2));

    FilterOptions options;
    options.front_contract = 2;
    const double base = run_filter(panel, th, init_state(th)).loglik;
    const double perm = run_filter(permuted, th, init_state(th), options).loglik;
    CHECK(std::abs(base - perm) < 1e-10);
}

TEST_CASE("log_likelihood wrapper and sentinel") {
    const ModelParams th = fixture_theta();
    const FuturesPanel panel = small_panel(th, 25, 3, 93);
    CHECK(log_likelihood(panel, th) == run_filter(panel, th, init_state(th)).loglik);

    // Inflating s2 by 1e6 on a well-fitting panel must cost likelihood.
    ModelParams worse = th;
    worse.s2 = th.s2 * 1e6;
    CHECK(log_likelihood(panel, worse) < log_likelihood(panel, th));

    // dt-preserving date relabeling is irrelevant.
    FuturesPanel relabeled = panel;
    for (auto& d : relabeled.dates) d.year += 7;
    CHECK(log_likelihood(relabeled, th) == log_likelihood(panel, th));

    // Parameter overflow maps to the -inf sentinel instead of throwing.
    ModelParams huge = th;
    huge.sigma_chi = 1e200;
    CHECK(log_likelihood(panel, huge) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("smoother matches the conditional-Gaussian oracle") {
    Rng rng(23);
    for (int rep = 0; rep < 6; ++rep) {
        const ModelParams th = random_theta(rng);
        const Eigen::Index n_T = 3, n = 2;
        const FuturesPanel panel = small_panel(th, n_T, n, 2000 + rep);

        const StateDistribution init = init_state(th);
        const FilterOutput filt = run_filter(panel, th, init);
        const SmootherOutput smth = run_smoother(panel, th, filt);
        const test::JointGaussian jg = test::joint_gaussian(panel, th, init);

        for (Eigen::Index t = 0; t < n_T; ++t) {
            const StateDistribution oracle = jg.conditional_state(t);
            const auto& s = smth.smoothed[static_cast<std::size_t>(t)];
            CHECK((s.mean - oracle.mean).cwiseAbs().maxCoeff() < 1e-8);
            CHECK((s.cov - oracle.cov).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("smoother terminal identity and variance reduction") {
    const ModelParams th = fixture_theta();
    const FuturesPanel panel = small_panel(th, 60, 3, 94);
    const FilterOutput filt = run_filter(panel, th, init_state(th));
    const SmootherOutput smth = run_smoother(panel, th, filt);

    const auto& last_f = filt.filtered.back();
    const auto& last_s = smth.smoothed.back();
    CHECK((last_f.mean - last_s.mean).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((last_f.cov - last_s.cov).cwiseAbs().maxCoeff() < 1e-10);

    for (std::size_t t = 0; t < smth.smoothed.size(); ++t)
        CHECK(smth.smoothed[t].cov.trace() <= filt.filtered[t].cov.trace() + 1e-10);
}

TEST_CASE("smoothed means follow deterministic dynamics when W -> 0") {
    ModelParams th = fixture_theta();
    th.sigma_chi = th.sigma_xi = 1e-8;
    const FuturesPanel panel = small_panel(th, 20, 3, 95);
    const FilterOutput filt = run_filter(panel, th, init_state(th));
    const SmootherOutput smth = run_smoother(panel, th, filt);

    const TransitionModel trans = build_transition(th, panel.dt);
    for (std::size_t t = 0; t + 1 < smth.smoothed.size(); ++t) {
        const Vec2 propagated = trans.c + trans.G * smth.smoothed[t].mean;
        CHECK((smth.smoothed[t + 1].mean - propagated).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("smoother reports the offending index on a singular predicted covariance") {
    const ModelParams th = fixture_theta();
    const FuturesPanel panel = small_panel(th, 5, 2, 96);
    FilterOutput filt = run_filter(panel, th, init_state(th));
    filt.predicted[3].cov = Mat2::Zero();
    filt.predicted[3].cov(0, 0) = -1.0;  // not PSD
    try {
        run_smoother(panel, th, filt);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(e.time_index() == 3);
    }
}

TEST_CASE("all covariances stay symmetric PSD through the recursion") {
    const ModelParams th = fixture_theta();
    const FuturesPanel panel = small_panel(th, 80, 5, 97);
    const FilterOutput filt = run_filter(panel, th, init_state(th));
    const SmootherOutput smth = run_smoother(panel, th, filt);
    for (std::size_t t = 0; t < filt.filtered.size(); ++t) {
        for (const Mat2& c : {filt.predicted[t].cov, filt.filtered[t].cov,
                              smth.smoothed[t].cov}) {
            CHECK(c == c.transpose());
            Eigen::SelfAdjointEigenSolver<Mat2> es(c);
            CHECK(es.eigenvalues().minCoeff() >= -1e-10);
        }
    }
}
