#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <tuple>
#include <vector>

namespace ou2f {

/// Calendar date, ISO-8601 in files.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    std::string iso() const;
    static Date parse(const std::string& s);  ///< strict YYYY-MM-DD, throws ParseError
    bool is_valid() const;

    /// Next Mon-Fri calendar day (weekend-skipping; no holiday calendar).
    Date next_trading_day() const;

    friend bool operator==(const Date& a, const Date& b) {
        return std::tie(a.year, a.month, a.day) == std::tie(b.year, b.month, b.day);
    }
    friend bool operator<(const Date& a, const Date& b) {
        return std::tie(a.year, a.month, a.day) < std::tie(b.year, b.month, b.day);
    }
};

/// Dated panel of log futures prices with per-observation maturities.
///
/// Missing observations are NaN, with identical masks on log_prices and
/// maturities. dt follows the trading-day convention (1/252 by default)
/// regardless of calendar gaps between rows.
struct FuturesPanel {
    std::vector<Date> dates;     ///< strictly increasing
    Eigen::MatrixXd log_prices;  ///< n_T x n, NaN = missing
    Eigen::MatrixXd maturities;  ///< n_T x n years-to-maturity, >= 0, NaN = missing
    double dt = 1.0 / 252.0;     ///< step in years

    Eigen::Index n_dates() const { return log_prices.rows(); }
    Eigen::Index n_contracts() const { return log_prices.cols(); }

    bool is_observed(Eigen::Index t, Eigen::Index i) const {
        return std::isfinite(log_prices(t, i));
    }

    /// Observed column indices at date t, in contract order.
    std::vector<Eigen::Index> observed_at(Eigen::Index t) const;

    /// Throws ArgumentError on the first violated invariant.
    void validate() const;
};

/// Whether CSV price cells are price levels or already log prices.
enum class PriceScale { Level, Log };

struct PanelIoConfig {
    PriceScale scale = PriceScale::Level;  ///< levels are log-transformed on load
    double dt = 1.0 / 252.0;
};

/// Reads the documented CSV layout: header `date,price_1..price_n,mat_1..mat_n`,
/// ISO dates, empty cell = missing. Leading '#' comment lines are skipped.
/// Throws ParseError naming the offending line/column.
FuturesPanel load_panel(const std::filesystem::path& path, const PanelIoConfig& config = {});

/// Writes the same layout; load_panel(save_panel(p)) == p to 1e-12 on numeric
/// fields, exactly on dates and masks. `header_comment`, if nonempty, is
/// written first as a '#' line.
void save_panel(const FuturesPanel& panel, const std::filesystem::path& path,
                const PanelIoConfig& config = {}, const std::string& header_comment = "");

/// Panel restricted to the given contract columns (indices into 0..n-1, kept
/// in the given order).
FuturesPanel contract_subset(const FuturesPanel& panel, const std::vector<Eigen::Index>& columns);

}  // namespace ou2f
