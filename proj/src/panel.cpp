#include "ou2f/panel.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "ou2f/errors.hpp"

namespace ou2f {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

double parse_cell(const std::string& s, long line_no, long col) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ParseError(ParseError::Kind::BadCell, "unparsable numeric cell '" + s + "'",
                         line_no, col);
    }
    if (pos != s.size())
        throw ParseError(ParseError::Kind::BadCell, "trailing characters in cell '" + s + "'",
                         line_no, col);
    return v;
}

}  // namespace

std::string Date::iso() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
}

bool Date::is_valid() const {
    using namespace std::chrono;
    if (year < 1 || month < 1 || month > 12 || day < 1) return false;
    return year_month_day(std::chrono::year(year), std::chrono::month(unsigned(month)),
                          std::chrono::day(unsigned(day)))
        .ok();
}

Date Date::parse(const std::string& s) {
    Date d;
    char extra;
    if (std::sscanf(s.c_str(), "%4d-%2d-%2d%c", &d.year, &d.month, &d.day, &extra) != 3 ||
        s.size() != 10 || !d.is_valid())
        throw ParseError(ParseError::Kind::BadCell, "invalid ISO date '" + s + "'");
    return d;
}

Date Date::next_trading_day() const {
    using namespace std::chrono;
    sys_days sd = sys_days(year_month_day(std::chrono::year(year),
                                          std::chrono::month(unsigned(month)),
                                          std::chrono::day(unsigned(day))));
    do {
        sd += days(1);
    } while (weekday(sd) == Saturday || weekday(sd) == Sunday);
    const year_month_day ymd(sd);
    return Date{int(ymd.year()), int(unsigned(ymd.month())), int(unsigned(ymd.day()))};
}

std::vector<Eigen::Index> FuturesPanel::observed_at(Eigen::Index t) const {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < n_contracts(); ++i)
        if (is_observed(t, i)) idx.push_back(i);
    return idx;
}

void FuturesPanel::validate() const {
    const Eigen::Index n_T = n_dates();
    const Eigen::Index n = n_contracts();
    if (static_cast<Eigen::Index>(dates.size()) != n_T)
        throw ArgumentError("FuturesPanel: dates/log_prices length mismatch");
    if (maturities.rows() != n_T || maturities.cols() != n)
        throw ArgumentError("FuturesPanel: maturities shape mismatch");
    if (!(dt > 0.0)) throw ArgumentError("FuturesPanel: dt must be > 0");

    for (Eigen::Index t = 0; t + 1 < n_T; ++t)
        if (!(dates[t] < dates[t + 1]))
            throw ArgumentError("FuturesPanel: dates not strictly increasing at row " +
                                std::to_string(t + 1));

    for (Eigen::Index t = 0; t < n_T; ++t) {
        double prev = -std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool has_price = std::isfinite(log_prices(t, i));
            const bool has_mat = std::isfinite(maturities(t, i));
            if (has_price != has_mat)
                throw ArgumentError("FuturesPanel: price/maturity masks differ at (" +
                                    std::to_string(t) + ", " + std::to_string(i) + ")");
            if (!has_mat) continue;
            const double T = maturities(t, i);
            if (T < 0.0)
                throw ArgumentError("FuturesPanel: negative maturity at (" + std::to_string(t) +
                                    ", " + std::to_string(i) + ")");
            if (T <= prev)
                throw ArgumentError(
                    "FuturesPanel: maturities not strictly increasing within row " +
                    std::to_string(t));
            prev = T;
        }
    }
}

FuturesPanel load_panel(const std::filesystem::path& path, const PanelIoConfig& config) {
    std::ifstream in(path);
    if (!in)
        throw ParseError(ParseError::Kind::Io, "cannot open '" + path.string() + "'");

    std::string line;
    long line_no = 0;

    // Header (after any leading comment lines).
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        header = split_csv(line);
        break;
    }
    if (header.empty())
        throw ParseError(ParseError::Kind::BadHeader, "missing header row");
    if (header.size() < 3 || header.size() % 2 == 0 || header[0] != "date")
        throw ParseError(ParseError::Kind::BadHeader,
                         "header must be date,price_1..price_n,mat_1..mat_n", line_no);
    const Eigen::Index n = static_cast<Eigen::Index>((header.size() - 1) / 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (header[1 + i] != "price_" + std::to_string(i + 1))
            throw ParseError(ParseError::Kind::BadHeader,
                             "expected column 'price_" + std::to_string(i + 1) + "'", line_no,
                             2 + i);
        if (header[1 + n + i] != "mat_" + std::to_string(i + 1))
            throw ParseError(ParseError::Kind::BadHeader,
                             "expected column 'mat_" + std::to_string(i + 1) + "'", line_no,
                             2 + n + i);
    }

    std::vector<Date> dates;
    std::vector<double> prices, mats;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const std::vector<std::string> cells = split_csv(line);
        if (cells.size() != header.size())
            throw ParseError(ParseError::Kind::BadCell,
                             "expected " + std::to_string(header.size()) + " cells, got " +
                                 std::to_string(cells.size()),
                             line_no);

        Date d;
        try {
            d = Date::parse(cells[0]);
        } catch (const ParseError& e) {
            throw ParseError(ParseError::Kind::BadCell, e.what(), line_no, 1);
        }
        if (!dates.empty() && !(dates.back() < d))
            throw ParseError(ParseError::Kind::NonIncreasingDates,
                             "dates not strictly increasing", line_no, 1);
        dates.push_back(d);

        for (Eigen::Index i = 0; i < n; ++i) {
            const std::string& pc = cells[1 + i];
            const std::string& mc = cells[1 + n + i];
            const long pcol = 2 + static_cast<long>(i);
            const long mcol = 2 + static_cast<long>(n + i);
            const bool has_price = !pc.empty();
            const bool has_mat = !mc.empty();
            if (has_price != has_mat)
                throw ParseError(ParseError::Kind::MaskMismatch,
                                 "price and maturity must be missing together", line_no,
                                 has_price ? mcol : pcol);
            if (!has_price) {
                prices.push_back(kNaN);
                mats.push_back(kNaN);
                continue;
            }
            double p = parse_cell(pc, line_no, pcol);
            if (config.scale == PriceScale::Level) {
                if (p <= 0.0)
                    throw ParseError(ParseError::Kind::NegativePrice,
                                     "price level must be > 0 for log transform", line_no, pcol);
                p = std::log(p);
            }
            const double T = parse_cell(mc, line_no, mcol);
            if (T < 0.0)
                throw ParseError(ParseError::Kind::NegativeMaturity, "maturity must be >= 0",
                                 line_no, mcol);
            prices.push_back(p);
            mats.push_back(T);
        }

        // Maturities strictly increasing across observed contracts in the row.
        double prev = -std::numeric_limits<double>::infinity();
        const std::size_t row0 = mats.size() - static_cast<std::size_t>(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double T = mats[row0 + static_cast<std::size_t>(i)];
            if (!std::isfinite(T)) continue;
            if (T <= prev)
                throw ParseError(ParseError::Kind::NonIncreasingMaturities,
                                 "maturities not strictly increasing within row", line_no,
                                 2 + static_cast<long>(n + i));
            prev = T;
        }
    }

    const Eigen::Index n_T = static_cast<Eigen::Index>(dates.size());
    FuturesPanel panel;
    panel.dates = std::move(dates);
    panel.dt = config.dt;
    panel.log_prices.resize(n_T, n);
    panel.maturities.resize(n_T, n);
    for (Eigen::Index t = 0; t < n_T; ++t)
        for (Eigen::Index i = 0; i < n; ++i) {
            panel.log_prices(t, i) = prices[static_cast<std::size_t>(t * n + i)];
            panel.maturities(t, i) = mats[static_cast<std::size_t>(t * n + i)];
        }
    panel.validate();
    return panel;
}

void save_panel(const FuturesPanel& panel, const std::filesystem::path& path,
                const PanelIoConfig& config, const std::string& header_comment) {
    panel.validate();
    std::ofstream out(path);
    if (!out)
        throw ParseError(ParseError::Kind::Io, "cannot write '" + path.string() + "'");

    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    out << "date";
    const Eigen::Index n = panel.n_contracts();
    for (Eigen::Index i = 0; i < n; ++i) out << ",price_" << (i + 1);
    for (Eigen::Index i = 0; i < n; ++i) out << ",mat_" << (i + 1);
    out << "\n";

    char buf[40];
    for (Eigen::Index t = 0; t < panel.n_dates(); ++t) {
        out << panel.dates[t].iso();
        for (Eigen::Index i = 0; i < n; ++i) {
            out << ',';
            if (!panel.is_observed(t, i)) continue;
            const double lp = panel.log_prices(t, i);
            const double v = config.scale == PriceScale::Level ? std::exp(lp) : lp;
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << buf;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            out << ',';
            if (!panel.is_observed(t, i)) continue;
            std::snprintf(buf, sizeof(buf), "%.17g", panel.maturities(t, i));
            out << buf;
        }
        out << "\n";
    }
    if (!out)
        throw ParseError(ParseError::Kind::Io, "write failure on '" + path.string() + "'");
}

FuturesPanel contract_subset(const FuturesPanel& panel, const std::vector<Eigen::Index>& columns) {
    FuturesPanel out;
    out.dates = panel.dates;
    out.dt = panel.dt;
    const Eigen::Index n_T = panel.n_dates();
    const Eigen::Index m = static_cast<Eigen::Index>(columns.size());
    out.log_prices.resize(n_T, m);
    out.maturities.resize(n_T, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const Eigen::Index c = columns[static_cast<std::size_t>(j)];
        if (c < 0 || c >= panel.n_contracts())
            throw ArgumentError("contract_subset: column index out of range");
        out.log_prices.col(j) = panel.log_prices.col(c);
        out.maturities.col(j) = panel.maturities.col(c);
    }
    return out;
}

}  // namespace ou2f
