#include "ou2f/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "ou2f/errors.hpp"

namespace ou2f {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace

ContractSplit ContractSplit::table1_default(Eigen::Index n_contracts) {
    ContractSplit s;
    for (Eigen::Index i = 0; i < n_contracts; ++i)
        (i < 13 ? s.in_sample : s.out_of_sample).push_back(i);
    return s;
}

void ContractSplit::validate(Eigen::Index n_contracts) const {
    if (in_sample.empty()) throw ArgumentError("ContractSplit: in_sample is empty");
    std::vector<bool> seen(static_cast<std::size_t>(n_contracts), false);
    for (const auto& group : {in_sample, out_of_sample}) {
        for (Eigen::Index i : group) {
            if (i < 0 || i >= n_contracts)
                throw ArgumentError("ContractSplit: contract index out of range");
            if (seen[static_cast<std::size_t>(i)])
                throw ArgumentError("ContractSplit: duplicate contract index");
            seen[static_cast<std::size_t>(i)] = true;
        }
    }
}

Eigen::VectorXd fitted_log_prices(const Vec2& state_mean, const ModelParams& theta,
                                  const Eigen::VectorXd& maturities) {
    const MeasurementModel m = build_measurement(theta, maturities);
    return m.d + m.F.transpose() * state_mean;
}

namespace {

/// Scatters d + F' mean over the observed cells of one panel row.
void fill_row(const FuturesPanel& panel, const ModelParams& theta, Eigen::Index t,
              const std::vector<Eigen::Index>& columns, const Vec2& mean,
              Eigen::MatrixXd& out) {
    std::vector<Eigen::Index> present;
    for (Eigen::Index i : columns)
        if (panel.is_observed(t, i)) present.push_back(i);
    if (present.empty()) return;
    Eigen::VectorXd mats(static_cast<Eigen::Index>(present.size()));
    for (std::size_t k = 0; k < present.size(); ++k)
        mats[static_cast<Eigen::Index>(k)] = panel.maturities(t, present[k]);
    const Eigen::VectorXd fit = fitted_log_prices(mean, theta, mats);
    for (std::size_t k = 0; k < present.size(); ++k)
        out(t, present[k]) = fit[static_cast<Eigen::Index>(k)];
}

}  // namespace

FittedMatrices fitted_matrices(const FuturesPanel& panel, const ModelParams& theta,
                               const FilterOutput& filt, const SmootherOutput& smth,
                               const ContractSplit& split) {
    panel.validate();
    split.validate(panel.n_contracts());
    const Eigen::Index n_T = panel.n_dates();
    if (filt.filtered.size() != static_cast<std::size_t>(n_T) ||
        smth.smoothed.size() != static_cast<std::size_t>(n_T))
        throw ArgumentError("fitted_matrices: filter/smoother output does not match panel");

    FittedMatrices out;
    out.filter_fit = Eigen::MatrixXd::Constant(n_T, panel.n_contracts(), kNaN);
    out.smoother_fit = out.filter_fit;

    for (Eigen::Index t = 0; t < n_T; ++t) {
        fill_row(panel, theta, t, split.in_sample, filt.filtered[static_cast<std::size_t>(t)].mean,
                 out.filter_fit);
        fill_row(panel, theta, t, split.in_sample, smth.smoothed[static_cast<std::size_t>(t)].mean,
                 out.smoother_fit);
    }

    if (!split.out_of_sample.empty()) {
        // States re-estimated from the in-sample columns only.
        const FuturesPanel sub = contract_subset(panel, split.in_sample);
        const FilterOutput sub_filt = run_filter(sub, theta, init_state(theta));
        const SmootherOutput sub_smth = run_smoother(sub, theta, sub_filt);
        for (Eigen::Index t = 0; t < n_T; ++t) {
            fill_row(panel, theta, t, split.out_of_sample,
                     sub_filt.filtered[static_cast<std::size_t>(t)].mean, out.filter_fit);
            fill_row(panel, theta, t, split.out_of_sample,
                     sub_smth.smoothed[static_cast<std::size_t>(t)].mean, out.smoother_fit);
        }
    }
    return out;
}

namespace {

std::optional<double> column_rmse(const Eigen::MatrixXd& observed, const Eigen::MatrixXd& fitted,
                                  Eigen::Index col) {
    double ss = 0.0;
    Eigen::Index count = 0;
    for (Eigen::Index t = 0; t < observed.rows(); ++t) {
        if (!std::isfinite(observed(t, col))) continue;
        const double e = observed(t, col) - fitted(t, col);
        ss += e * e;
        ++count;
    }
    if (count == 0) return std::nullopt;
    return std::sqrt(ss / static_cast<double>(count));
}

}  // namespace

RmseReport rmse_report(const FuturesPanel& panel, const ModelParams& theta,
                       const FilterOutput& filt, const SmootherOutput& smth,
                       const ContractSplit& split) {
    const FittedMatrices fits = fitted_matrices(panel, theta, filt, smth, split);

    RmseReport report;
    report.split = split;
    report.first_date = panel.dates.front();
    report.last_date = panel.dates.back();
    report.filter_rmse.resize(static_cast<std::size_t>(panel.n_contracts()));
    report.smoother_rmse.resize(static_cast<std::size_t>(panel.n_contracts()));
    for (Eigen::Index i = 0; i < panel.n_contracts(); ++i) {
        report.filter_rmse[static_cast<std::size_t>(i)] =
            column_rmse(panel.log_prices, fits.filter_fit, i);
        report.smoother_rmse[static_cast<std::size_t>(i)] =
            column_rmse(panel.log_prices, fits.smoother_fit, i);
    }
    return report;
}

std::optional<double> mean_rmse(const std::vector<std::optional<double>>& rmse,
                                const std::vector<Eigen::Index>& group) {
    double sum = 0.0;
    int count = 0;
    for (Eigen::Index i : group) {
        if (i < 0 || i >= static_cast<Eigen::Index>(rmse.size())) continue;
        const auto& v = rmse[static_cast<std::size_t>(i)];
        if (!v) continue;
        sum += *v;
        ++count;
    }
    if (count == 0) return std::nullopt;
    return sum / count;
}

CrossSection cross_section(const FuturesPanel& panel, const ModelParams& theta,
                           const FilterOutput& filt, const SmootherOutput& smth,
                           const Date& date) {
    panel.validate();
    const auto it = std::find(panel.dates.begin(), panel.dates.end(), date);
    if (it == panel.dates.end())
        throw ArgumentError("cross_section: date " + date.iso() + " not in panel");
    const Eigen::Index t = it - panel.dates.begin();
    if (filt.filtered.size() != static_cast<std::size_t>(panel.n_dates()) ||
        smth.smoothed.size() != static_cast<std::size_t>(panel.n_dates()))
        throw ArgumentError("cross_section: filter/smoother output does not match panel");

    CrossSection cs;
    cs.date = date;
    cs.observed = panel.log_prices.row(t).transpose();
    cs.filter_fit = Eigen::VectorXd::Constant(panel.n_contracts(), kNaN);
    cs.smoother_fit = cs.filter_fit;

    Eigen::MatrixXd ffit = Eigen::MatrixXd::Constant(1, panel.n_contracts(), kNaN);
    Eigen::MatrixXd sfit = ffit;
    std::vector<Eigen::Index> all(static_cast<std::size_t>(panel.n_contracts()));
    for (Eigen::Index i = 0; i < panel.n_contracts(); ++i) all[static_cast<std::size_t>(i)] = i;

    FuturesPanel row;
    row.dates = {date};
    row.log_prices = panel.log_prices.row(t);
    row.maturities = panel.maturities.row(t);
    row.dt = panel.dt;
    fill_row(row, theta, 0, all, filt.filtered[static_cast<std::size_t>(t)].mean, ffit);
    fill_row(row, theta, 0, all, smth.smoothed[static_cast<std::size_t>(t)].mean, sfit);
    cs.filter_fit = ffit.row(0).transpose();
    cs.smoother_fit = sfit.row(0).transpose();

    for (Eigen::Index i = 0; i < panel.n_contracts(); ++i) {
        if (!std::isfinite(cs.observed[i])) continue;
        const double ef = cs.observed[i] - cs.filter_fit[i];
        const double es = cs.observed[i] - cs.smoother_fit[i];
        cs.s_filter += ef * ef;
        cs.s_smoother += es * es;
    }
    return cs;
}

TermStructure classify_term_structure(const Eigen::VectorXd& observed_log_prices) {
    const Eigen::Index n = observed_log_prices.size();
    if (n < 2) throw ArgumentError("classify_term_structure: need at least 2 prices");
    if (!observed_log_prices.allFinite())
        throw ArgumentError("classify_term_structure: prices must be finite");

    bool decrease = false, increase = false;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double diff = observed_log_prices[i + 1] - observed_log_prices[i];
        if (diff < 0.0) decrease = true;
        if (diff > 0.0) increase = true;
    }
    if (decrease && !increase) return TermStructure::Backwardation;
    if (increase && !decrease) return TermStructure::Contango;
    return TermStructure::Mixed;
}

std::string to_string(TermStructure shape) {
    switch (shape) {
        case TermStructure::Backwardation: return "backwardation";
        case TermStructure::Contango: return "contango";
        case TermStructure::Mixed: return "mixed";
    }
    return "mixed";
}

void write_rmse_csv(const RmseReport& report, const std::filesystem::path& path,
                    const std::string& header_comment) {
    std::ofstream out(path);
    if (!out) throw ParseError(ParseError::Kind::Io, "cannot write '" + path.string() + "'");
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    out << "contract,split,filter_rmse,smoother_rmse\n";

    const auto group_of = [&](Eigen::Index i) -> std::string {
        if (std::find(report.split.in_sample.begin(), report.split.in_sample.end(), i) !=
            report.split.in_sample.end())
            return "in_sample";
        if (std::find(report.split.out_of_sample.begin(), report.split.out_of_sample.end(), i) !=
            report.split.out_of_sample.end())
            return "out_of_sample";
        return "unsplit";
    };

    for (std::size_t i = 0; i < report.filter_rmse.size(); ++i) {
        out << "C" << (i + 1) << "," << group_of(static_cast<Eigen::Index>(i)) << ",";
        if (report.filter_rmse[i]) out << fmt(*report.filter_rmse[i]);
        out << ",";
        if (report.smoother_rmse[i]) out << fmt(*report.smoother_rmse[i]);
        out << "\n";
    }
}

std::string format_rmse_table(const RmseReport& report) {
    std::ostringstream os;
    os << "RMSE " << report.first_date.iso() << " .. " << report.last_date.iso() << "\n";
    char line[128];
    std::snprintf(line, sizeof(line), "%-14s %-10s %14s %14s\n", "Group", "Contract", "Filter",
                  "Smoother");
    os << line;

    const auto emit = [&](const std::string& label, const std::vector<Eigen::Index>& group) {
        for (Eigen::Index i : group) {
            const auto& f = report.filter_rmse[static_cast<std::size_t>(i)];
            const auto& s = report.smoother_rmse[static_cast<std::size_t>(i)];
            std::snprintf(line, sizeof(line), "%-14s C%-9ld %14s %14s\n", label.c_str(),
                          static_cast<long>(i + 1), f ? fmt(*f).c_str() : "absent",
                          s ? fmt(*s).c_str() : "absent");
            os << line;
        }
        const auto mf = mean_rmse(report.filter_rmse, group);
        const auto ms = mean_rmse(report.smoother_rmse, group);
        std::snprintf(line, sizeof(line), "%-14s %-10s %14s %14s\n", label.c_str(), "mean",
                      mf ? fmt(*mf).c_str() : "absent", ms ? fmt(*ms).c_str() : "absent");
        os << line;
    };
    emit("In-Sample", report.split.in_sample);
    if (!report.split.out_of_sample.empty()) emit("Out-of-Sample", report.split.out_of_sample);
    return os.str();
}

void write_cross_section_csv(const CrossSection& cs, const std::filesystem::path& path,
                             const std::string& header_comment) {
    std::ofstream out(path);
    if (!out) throw ParseError(ParseError::Kind::Io, "cannot write '" + path.string() + "'");
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    out << "# date=" << cs.date.iso() << " S_F=" << fmt(cs.s_filter)
        << " S_S=" << fmt(cs.s_smoother) << "\n";
    out << "contract,observed,filter_fit,smoother_fit\n";
    for (Eigen::Index i = 0; i < cs.observed.size(); ++i) {
        out << "C" << (i + 1) << ",";
        if (std::isfinite(cs.observed[i])) out << fmt(cs.observed[i]);
        out << ",";
        if (std::isfinite(cs.filter_fit[i])) out << fmt(cs.filter_fit[i]);
        out << ",";
        if (std::isfinite(cs.smoother_fit[i])) out << fmt(cs.smoother_fit[i]);
        out << "\n";
    }
}

}  // namespace ou2f
