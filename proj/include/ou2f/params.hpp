#pragma once

#include <Eigen/Core>

#include <array>
#include <string>

namespace ou2f {

inline constexpr int kNumParams = 10;

using ParamVector = Eigen::Matrix<double, kNumParams, 1>;

/// Parameter set of the bivariate OU futures model.
///
/// chi is the short-term factor (mean-reverts to 0 at speed kappa), xi the
/// long-term factor (mean-reverts to mu_xi/gamma at speed gamma). lambda_chi
/// and lambda_xi adjust for the market price of risk and enter futures prices
/// only through A(t); the state transition keeps the physical-measure drift.
struct ModelParams {
    double kappa = 1.0;        ///< mean-reversion speed of chi, 1/year, > 0
    double gamma = 0.5;        ///< mean-reversion speed of xi, 1/year, > 0
    double mu_xi = 0.0;        ///< drift level of xi, 1/year
    double sigma_chi = 0.1;    ///< volatility of chi, 1/sqrt(year), > 0
    double sigma_xi = 0.1;     ///< volatility of xi, 1/sqrt(year), > 0
    double rho = 0.0;          ///< instantaneous correlation, in (-1, 1)
    double lambda_chi = 0.0;   ///< risk-premium adjustment of chi, 1/year
    double lambda_xi = 0.0;    ///< risk-premium adjustment of xi, 1/year
    double s1 = 0.01;          ///< measurement-error sd, first contract, > 0
    double s2 = 0.01;          ///< measurement-error sd, remaining contracts, > 0

    /// Component names in the canonical vector order.
    static const std::array<std::string, kNumParams>& names();

    /// true iff all positivity/range invariants hold and every field is finite.
    bool is_valid() const noexcept;

    /// Throws ArgumentError naming the first violated invariant.
    void validate() const;

    /// Label-ordering convention: the short-term factor mean-reverts faster.
    /// If kappa <= gamma, returns a copy with (kappa, sigma_chi, lambda_chi)
    /// and (gamma, sigma_xi, lambda_xi) exchanged; mu_xi, rho, s1, s2 are
    /// untouched. Note this is not a likelihood-preserving symmetry whenever
    /// mu_xi != 0 -- it is a reporting convention only.
    ModelParams canonicalized() const;

    bool is_canonical() const noexcept { return kappa > gamma; }

    ParamVector to_vector() const;
    static ModelParams from_vector(const ParamVector& v);
};

bool operator==(const ModelParams& a, const ModelParams& b);

}  // namespace ou2f
