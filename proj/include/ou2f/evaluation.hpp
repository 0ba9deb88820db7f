#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ou2f/kalman.hpp"
#include "ou2f/panel.hpp"
#include "ou2f/params.hpp"

namespace ou2f {

enum class TermStructure { Backwardation, Contango, Mixed };

/// Contract-index split: in-sample columns estimate the states, out-of-sample
/// columns are priced from those states.
struct ContractSplit {
    std::vector<Eigen::Index> in_sample;
    std::vector<Eigen::Index> out_of_sample;

    /// Contracts 1..13 in-sample and 14..20 out-of-sample (0-based indices),
    /// clipped to the panel width.
    static ContractSplit table1_default(Eigen::Index n_contracts);

    void validate(Eigen::Index n_contracts) const;
};

struct RmseReport {
    std::vector<std::optional<double>> filter_rmse;    ///< per contract; absent if column empty
    std::vector<std::optional<double>> smoother_rmse;
    ContractSplit split;
    Date first_date;
    Date last_date;
};

struct CrossSection {
    Date date;
    Eigen::VectorXd observed;      ///< NaN where missing
    Eigen::VectorXd filter_fit;    ///< d + F' x_{t|t}
    Eigen::VectorXd smoother_fit;  ///< d + F' x_{t|n_T}
    double s_filter = 0.0;         ///< sum of squared filter errors over observed cells
    double s_smoother = 0.0;
};

/// d + F' mean for the given maturities (Eq.-style fit without noise).
Eigen::VectorXd fitted_log_prices(const Vec2& state_mean, const ModelParams& theta,
                                  const Eigen::VectorXd& maturities);

/// Full n_T x n fitted matrices (NaN where the panel is missing). In-sample
/// columns are priced from the supplied filter/smoother states; out-of-sample
/// columns from a filter/smoother re-run on the panel restricted to the
/// in-sample columns, so their fits never see out-of-sample observations.
struct FittedMatrices {
    Eigen::MatrixXd filter_fit;
    Eigen::MatrixXd smoother_fit;
};
FittedMatrices fitted_matrices(const FuturesPanel& panel, const ModelParams& theta,
                               const FilterOutput& filt, const SmootherOutput& smth,
                               const ContractSplit& split);

/// Per-contract RMSE over observed cells for both estimators.
RmseReport rmse_report(const FuturesPanel& panel, const ModelParams& theta,
                       const FilterOutput& filt, const SmootherOutput& smth,
                       const ContractSplit& split);

/// Mean RMSE over the given contract group, skipping absent columns.
std::optional<double> mean_rmse(const std::vector<std::optional<double>>& rmse,
                                const std::vector<Eigen::Index>& group);

/// Observed curve and both fitted curves at one panel date.
CrossSection cross_section(const FuturesPanel& panel, const ModelParams& theta,
                           const FilterOutput& filt, const SmootherOutput& smth,
                           const Date& date);

/// Backwardation if non-increasing with a strict decrease, contango if
/// non-decreasing with a strict increase, otherwise mixed.
TermStructure classify_term_structure(const Eigen::VectorXd& observed_log_prices);

std::string to_string(TermStructure shape);

void write_rmse_csv(const RmseReport& report, const std::filesystem::path& path,
                    const std::string& header_comment = "");

/// Aligned plain-text table: contracts grouped in-/out-of-sample, filter and
/// smoother columns, group means at the bottom.
std::string format_rmse_table(const RmseReport& report);

void write_cross_section_csv(const CrossSection& cs, const std::filesystem::path& path,
                             const std::string& header_comment = "");

}  // namespace ou2f
