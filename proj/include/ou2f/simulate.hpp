#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ou2f/model.hpp"
#include "ou2f/panel.hpp"

namespace ou2f {

/// Maturity schedule of the synthetic contract grid.
///   Constant: T_i = i/12 on every date (constant-maturity reading).
///   Rolling:  T_i = i/12 minus the day offset within a 21-trading-day month,
///             resetting at each month boundary (rolled-contract reading).
enum class MaturityMode { Constant, Rolling };

Eigen::MatrixXd maturity_schedule(MaturityMode mode, Eigen::Index n_T, Eigen::Index n, double dt);

struct SimOutput {
    FuturesPanel panel;
    std::vector<StateVec> true_states;
    ModelParams theta;
    std::uint64_t seed = 0;
};

/// Draws x_0 from the stationary law, iterates the exact AR(1) transition
/// (Cholesky of W times standard-normal pairs), and emits observations with
/// diagonal measurement noise (s1 on the first contract, s2 elsewhere).
/// Bit-reproducible from the seed; the draw order is x_0, then per date the
/// two state innovations followed by the n measurement errors.
SimOutput simulate(const ModelParams& theta, Eigen::Index n_T, double dt,
                   const Eigen::MatrixXd& maturities, std::uint64_t seed,
                   const Date& start_date = Date{2014, 1, 2});

/// Sidecar CSV `date,chi,xi` matching the panel's dates.
void save_true_states(const std::vector<Date>& dates, const std::vector<StateVec>& states,
                      const std::filesystem::path& path, const std::string& header_comment = "");

}  // namespace ou2f
