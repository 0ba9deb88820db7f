#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ou2f/errors.hpp"
#include "ou2f/evaluation.hpp"
#include "ou2f/simulate.hpp"
#include "test_support.hpp"

using namespace ou2f;
using test::fixture_theta;

namespace {

struct EvalSetup {
    FuturesPanel panel;
    FilterOutput filt;
    SmootherOutput smth;
};

EvalSetup make_setup(const ModelParams& theta, Eigen::Index n_T, Eigen::Index n,
                     std::uint64_t seed) {
    EvalSetup s;
    const Eigen::MatrixXd mats = maturity_schedule(MaturityMode::Constant, n_T, n, 1.0 / 252.0);
    s.panel = simulate(theta, n_T, 1.0 / 252.0, mats, seed).panel;
    s.filt = run_filter(s.panel, theta, init_state(theta));
    s.smth = run_smoother(s.panel, theta, s.filt);
    return s;
}

ContractSplit all_in_split(Eigen::Index n) {
    ContractSplit split;
    for (Eigen::Index i = 0; i < n; ++i) split.in_sample.push_back(i);
    return split;
}

}  // namespace

TEST_CASE("fitted_log_prices is d + F' state") {
    const ModelParams theta = fixture_theta();
    Eigen::VectorXd mats(5);
    mats << 1.0 / 12, 3.0 / 12, 6.0 / 12, 1.0, 1.5;

    const MeasurementModel m = build_measurement(theta, mats);
    const Eigen::VectorXd at_zero = fitted_log_prices(Vec2::Zero(), theta, mats);
    CHECK((at_zero - m.d).cwiseAbs().maxCoeff() == 0.0);

    const Vec2 state(0.12, 3.4);
    const Eigen::VectorXd fit = fitted_log_prices(state, theta, mats);
    for (Eigen::Index i = 0; i < mats.size(); ++i)
        CHECK(fit[i] ==
              doctest::Approx(log_futures_price(theta, state[0], state[1], mats[i]))
                  .epsilon(1e-14));
}

TEST_CASE("fitted values reproduce a noise-free panel from the true states") {
    ModelParams theta = fixture_theta();
    theta.s1 = theta.s2 = 1e-12;
    const Eigen::Index n_T = 25, n = 4;
    const Eigen::MatrixXd mats = maturity_schedule(MaturityMode::Constant, n_T, n, 1.0 / 252.0);
    const SimOutput sim = simulate(theta, n_T, 1.0 / 252.0, mats, 61);
    for (Eigen::Index t = 0; t < n_T; ++t) {
        const Eigen::VectorXd fit = fitted_log_prices(
            sim.true_states[static_cast<std::size_t>(t)].vector(), theta,
            mats.row(t).transpose());
        CHECK((fit - sim.panel.log_prices.row(t).transpose()).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("rmse arithmetic: exact fits give zero, offsets give their magnitude") {
    const ModelParams theta = fixture_theta();
    EvalSetup s = make_setup(theta, 12, 3, 62);
    const ContractSplit split = all_in_split(3);

    // Rewrite the observations to equal the fitted values exactly; the fits
    // depend only on states and maturities, so they do not move.
    const FittedMatrices fits = fitted_matrices(s.panel, theta, s.filt, s.smth, split);
    s.panel.log_prices = fits.filter_fit;

    RmseReport report = rmse_report(s.panel, theta, s.filt, s.smth, split);
    for (const auto& r : report.filter_rmse) {
        REQUIRE(r.has_value());
        CHECK(*r == 0.0);
    }

    const double delta = 0.037;
    s.panel.log_prices.col(1).array() += delta;
    report = rmse_report(s.panel, theta, s.filt, s.smth, split);
    CHECK(*report.filter_rmse[0] == 0.0);
    CHECK(*report.filter_rmse[1] == doctest::Approx(delta).epsilon(1e-12));
    CHECK(*report.filter_rmse[2] == 0.0);
}

TEST_CASE("rmse is invariant under reordering rows together with the fits") {
    const ModelParams theta = fixture_theta();
    const EvalSetup s = make_setup(theta, 15, 3, 63);
    const ContractSplit split = all_in_split(3);
    const RmseReport base = rmse_report(s.panel, theta, s.filt, s.smth, split);

    EvalSetup r = s;  // reverse the data rows and the state sequences in step
    const Eigen::Index n_T = s.panel.n_dates();
    for (Eigen::Index t = 0; t < n_T; ++t) {
        r.panel.log_prices.row(t) = s.panel.log_prices.row(n_T - 1 - t);
        r.panel.maturities.row(t) = s.panel.maturities.row(n_T - 1 - t);
        r.filt.filtered[static_cast<std::size_t>(t)] =
            s.filt.filtered[static_cast<std::size_t>(n_T - 1 - t)];
        r.smth.smoothed[static_cast<std::size_t>(t)] =
            s.smth.smoothed[static_cast<std::size_t>(n_T - 1 - t)];
    }
    const RmseReport reordered = rmse_report(r.panel, theta, r.filt, r.smth, split);
    for (std::size_t i = 0; i < base.filter_rmse.size(); ++i) {
        CHECK(*reordered.filter_rmse[i] == doctest::Approx(*base.filter_rmse[i]).epsilon(1e-14));
        CHECK(*reordered.smoother_rmse[i] ==
              doctest::Approx(*base.smoother_rmse[i]).epsilon(1e-14));
    }
}

TEST_CASE("out-of-sample fits never see out-of-sample observations") {
    const ModelParams theta = fixture_theta();
    const EvalSetup s = make_setup(theta, 30, 5, 64);
    ContractSplit split;
    split.in_sample = {0, 1, 2};
    split.out_of_sample = {3, 4};

    const FittedMatrices base = fitted_matrices(s.panel, theta, s.filt, s.smth, split);

    EvalSetup z = s;
    z.panel.log_prices.col(3).setZero();
    z.panel.log_prices.col(4).setZero();
    const FittedMatrices zeroed = fitted_matrices(z.panel, theta, z.filt, z.smth, split);

    for (Eigen::Index t = 0; t < s.panel.n_dates(); ++t)
        for (Eigen::Index i : split.out_of_sample) {
            CHECK(zeroed.filter_fit(t, i) == base.filter_fit(t, i));
            CHECK(zeroed.smoother_fit(t, i) == base.smoother_fit(t, i));
        }
}

TEST_CASE("empty contract columns are reported absent") {
    const ModelParams theta = fixture_theta();
    EvalSetup s = make_setup(theta, 10, 3, 65);
    s.panel.log_prices.col(2).setConstant(std::numeric_limits<double>::quiet_NaN());
    s.panel.maturities.col(2).setConstant(std::numeric_limits<double>::quiet_NaN());
    const RmseReport report =
        rmse_report(s.panel, theta, s.filt, s.smth, all_in_split(3));
    CHECK(report.filter_rmse[0].has_value());
    CHECK(!report.filter_rmse[2].has_value());
    CHECK(!report.smoother_rmse[2].has_value());
}

TEST_CASE("cross sections recompute and vanish on noise-free data") {
    ModelParams theta = fixture_theta();
    theta.s1 = theta.s2 = 1e-12;
    const EvalSetup s = make_setup(theta, 30, 4, 66);

    const Date last = s.panel.dates.back();
    const CrossSection cs = cross_section(s.panel, theta, s.filt, s.smth, last);

    // Recompute the sums from the emitted vectors.
    double sf = 0.0, ss = 0.0;
    for (Eigen::Index i = 0; i < cs.observed.size(); ++i) {
        sf += std::pow(cs.observed[i] - cs.filter_fit[i], 2);
        ss += std::pow(cs.observed[i] - cs.smoother_fit[i], 2);
    }
    CHECK(std::abs(sf - cs.s_filter) < 1e-12);
    CHECK(std::abs(ss - cs.s_smoother) < 1e-12);

    // Noise-free panel: the fits sit on the observations.
    CHECK(cs.s_filter < 1e-10);
    CHECK(cs.s_smoother < 1e-10);

    // Terminal date: smoother equals filter exactly.
    CHECK(cs.s_filter == cs.s_smoother);

    CHECK_THROWS_AS(cross_section(s.panel, theta, s.filt, s.smth, Date{1999, 1, 1}),
                    ArgumentError);
}

TEST_CASE("term-structure classification follows the footnote definition") {
    Eigen::VectorXd v(3);
    v << 4.0, 3.9, 3.8;
    CHECK(classify_term_structure(v) == TermStructure::Backwardation);
    v << 3.8, 3.9, 4.0;
    CHECK(classify_term_structure(v) == TermStructure::Contango);
    v << 3.8, 4.0, 3.9;
    CHECK(classify_term_structure(v) == TermStructure::Mixed);
    v << 4.0, 4.0, 4.0;
    CHECK(classify_term_structure(v) == TermStructure::Mixed);

    Eigen::VectorXd flat_then_down(4);
    flat_then_down << 4.0, 4.0, 3.9, 3.8;
    CHECK(classify_term_structure(flat_then_down) == TermStructure::Backwardation);

    Eigen::VectorXd one(1);
    one << 4.0;
    CHECK_THROWS_AS(classify_term_structure(one), ArgumentError);

    CHECK(to_string(TermStructure::Contango) == "contango");
}

TEST_CASE("report writers emit the documented layouts") {
    const ModelParams theta = fixture_theta();
    const EvalSetup s = make_setup(theta, 20, 15, 67);
    const ContractSplit split = ContractSplit::table1_default(15);
    CHECK(split.in_sample.size() == 13);
    CHECK(split.out_of_sample.size() == 2);

    const RmseReport report = rmse_report(s.panel, theta, s.filt, s.smth, split);
    const auto dir = test::scratch_dir("evaluation");
    write_rmse_csv(report, dir / "rmse.csv", "provenance");

    std::ifstream in(dir / "rmse.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "# provenance");
    std::getline(in, line);
    CHECK(line == "contract,split,filter_rmse,smoother_rmse");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 15);

    const std::string table = format_rmse_table(report);
    CHECK(table.find("In-Sample") != std::string::npos);
    CHECK(table.find("Out-of-Sample") != std::string::npos);
    CHECK(table.find("C14") != std::string::npos);
    CHECK(table.find("mean") != std::string::npos);

    const CrossSection cs =
        cross_section(s.panel, theta, s.filt, s.smth, s.panel.dates[5]);
    write_cross_section_csv(cs, dir / "cs.csv", "provenance");
    std::ifstream in2(dir / "cs.csv");
    std::getline(in2, line);
    CHECK(line == "# provenance");
    std::getline(in2, line);
    CHECK(line.find("S_F=") != std::string::npos);
    std::getline(in2, line);
    CHECK(line == "contract,observed,filter_fit,smoother_fit");
}
