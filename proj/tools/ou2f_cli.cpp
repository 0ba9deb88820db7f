// Command-line front end: simulate / fit / filter / smooth / evaluate /
// forecast over the documented CSV formats. Outputs are deterministic for a
// fixed argv + inputs + seed and carry a provenance header line.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ou2f/errors.hpp"
#include "ou2f/estimation.hpp"
#include "ou2f/evaluation.hpp"
#include "ou2f/kalman.hpp"
#include "ou2f/panel.hpp"
#include "ou2f/simulate.hpp"
#include "ou2f/version.hpp"

namespace fs = std::filesystem;
using namespace ou2f;

namespace {

// Exit codes, documented in the README.
constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitIo = 5;

std::string fmt10(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t theta_hash(const ModelParams& theta) {
    const ParamVector v = theta.to_vector();
    std::string s;
    for (int i = 0; i < kNumParams; ++i) s += fmt17(v[i]) + ",";
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a 64
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string provenance(std::uint64_t seed, const ModelParams& theta) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "ou2f %s seed=%llu theta_hash=%016llx", kVersion,
                  static_cast<unsigned long long>(seed),
                  static_cast<unsigned long long>(theta_hash(theta)));
    return buf;
}

ModelParams load_theta(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(ParseError::Kind::Io, "cannot open '" + path.string() + "'");
    std::map<std::string, double> kv;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string stripped = line;
        stripped.erase(0, stripped.find_first_not_of(" \t"));
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ParseError(ParseError::Kind::BadCell, "expected key = value", line_no);
        std::string key = stripped.substr(0, eq);
        std::string value = stripped.substr(eq + 1);
        key.erase(key.find_last_not_of(" \t") + 1);
        value.erase(0, value.find_first_not_of(" \t"));
        value.erase(value.find_last_not_of(" \t") + 1);
        try {
            kv[key] = std::stod(value);
        } catch (const std::exception&) {
            throw ParseError(ParseError::Kind::BadCell, "unparsable value for '" + key + "'",
                             line_no);
        }
    }
    ModelParams theta;
    ParamVector v;
    for (int i = 0; i < kNumParams; ++i) {
        const auto it = kv.find(ModelParams::names()[i]);
        if (it == kv.end())
            throw ParseError(ParseError::Kind::BadCell,
                             "theta file missing '" + ModelParams::names()[i] + "'");
        v[i] = it->second;
    }
    theta = ModelParams::from_vector(v);
    theta.validate();
    return theta;
}

std::vector<Eigen::Index> parse_range(const std::string& spec) {
    const auto dots = spec.find("..");
    std::vector<Eigen::Index> out;
    const long a = std::stol(spec.substr(0, dots));
    const long b = dots == std::string::npos ? a : std::stol(spec.substr(dots + 2));
    for (long i = a; i <= b; ++i) out.push_back(i - 1);  // 1-based contracts on the CLI
    return out;
}

ContractSplit parse_split(const std::string& text, Eigen::Index n_contracts) {
    if (text.empty()) return ContractSplit::table1_default(n_contracts);
    ContractSplit split;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        const auto eq = part.find('=');
        if (eq == std::string::npos)
            throw ArgumentError("--split expects in=A..B,out=C..D, got '" + text + "'");
        const std::string key = part.substr(0, eq);
        std::vector<Eigen::Index> range;
        try {
            range = parse_range(part.substr(eq + 1));
        } catch (const std::exception&) {
            throw ArgumentError("--split has an unparsable range in '" + part + "'");
        }
        if (key == "in")
            split.in_sample = range;
        else if (key == "out")
            split.out_of_sample = range;
        else
            throw ArgumentError("--split groups must be 'in' or 'out', got '" + key + "'");
    }
    split.validate(n_contracts);
    return split;
}

Eigen::VectorXd parse_double_list(const std::string& text) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) vals.push_back(std::stod(part));
    return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

void write_text(const fs::path& path, const std::string& contents) {
    std::ofstream out(path);
    if (!out) throw ParseError(ParseError::Kind::Io, "cannot write '" + path.string() + "'");
    out << contents;
    if (!out) throw ParseError(ParseError::Kind::Io, "write failure on '" + path.string() + "'");
}

void write_states_csv(const fs::path& path, const std::string& comment,
                      const std::vector<Date>& dates,
                      const std::vector<StateDistribution>& states, const std::string& prefix,
                      double loglik) {
    std::ostringstream os;
    os << "# " << comment << "\n";
    os << "# loglik=" << fmt10(loglik) << "\n";
    os << "date," << prefix << "_chi," << prefix << "_xi," << prefix << "_P11," << prefix
       << "_P12," << prefix << "_P22\n";
    for (std::size_t t = 0; t < dates.size(); ++t) {
        const auto& s = states[t];
        os << dates[t].iso() << "," << fmt10(s.mean[0]) << "," << fmt10(s.mean[1]) << ","
           << fmt10(s.cov(0, 0)) << "," << fmt10(s.cov(0, 1)) << "," << fmt10(s.cov(1, 1))
           << "\n";
    }
    write_text(path, os.str());
}

struct CommonArgs {
    std::string input;
    std::string theta_file;
    std::string output_dir;
    std::string scale = "level";
    double dt = 1.0 / 252.0;
    std::uint64_t seed = 0;
    std::string init = "stationary";
};

PanelIoConfig io_config(const CommonArgs& args) {
    PanelIoConfig cfg;
    cfg.scale = args.scale == "log" ? PriceScale::Log : PriceScale::Level;
    cfg.dt = args.dt;
    return cfg;
}

StateDistribution make_init(const std::string& mode, const ModelParams& theta) {
    return mode == "diffuse" ? diffuse_state(theta) : init_state(theta);
}

int run(int argc, char** argv) {
    CLI::App app{"Bivariate OU two-factor model for futures term structures"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("ou2f ") + kVersion);

    CommonArgs args;
    Eigen::Index n_dates = 1000, n_contracts = 20;
    std::string maturity_mode = "constant";
    std::string start_date = "2014-01-02";
    std::string split_text;
    std::string dates_text;
    std::string maturities_text;
    double chi0 = 0.0, xi0 = 0.0;
    FitConfig fit_config;

    const auto add_common = [&](CLI::App* cmd, bool needs_input, bool needs_theta) {
        if (needs_input) cmd->add_option("--input", args.input, "panel CSV")->required();
        if (needs_theta)
            cmd->add_option("--theta", args.theta_file, "theta key=value file")->required();
        cmd->add_option("--output-dir", args.output_dir, "output directory")->required();
        cmd->add_option("--scale", args.scale, "price cells: level|log")
            ->check(CLI::IsMember({"level", "log"}));
        cmd->add_option("--dt", args.dt, "time step in years (default 1/252)");
        cmd->add_option("--seed", args.seed, "random seed");
    };

    CLI::App* sim = app.add_subcommand("simulate", "draw a synthetic panel from the model");
    add_common(sim, false, true);
    sim->add_option("--n-dates", n_dates, "number of dates");
    sim->add_option("--n-contracts", n_contracts, "number of contracts");
    sim->add_option("--maturity-mode", maturity_mode, "constant|rolling")
        ->check(CLI::IsMember({"constant", "rolling"}));
    sim->add_option("--start-date", start_date, "first panel date (ISO)");

    CLI::App* fit = app.add_subcommand("fit", "maximum-likelihood fit of theta");
    add_common(fit, true, false);
    fit->add_option("--grid-points", fit_config.grid_points, "grid points per parameter");
    fit->add_option("--budget", fit_config.budget, "max grid evaluations");
    fit->add_option("--top-k", fit_config.top_k, "starts handed to the local optimizer");
    fit->add_option("--max-iters", fit_config.max_iterations, "simplex iteration cap");
    fit->add_option("--tol", fit_config.tol, "loglik convergence tolerance");
    fit->add_option("--threads", fit_config.n_threads, "0 = hardware concurrency");

    CLI::App* filt = app.add_subcommand("filter", "Kalman filter states and loglik");
    add_common(filt, true, true);
    filt->add_option("--init", args.init, "stationary|diffuse")
        ->check(CLI::IsMember({"stationary", "diffuse"}));

    CLI::App* smth = app.add_subcommand("smooth", "fixed-interval smoother states");
    add_common(smth, true, true);
    smth->add_option("--init", args.init, "stationary|diffuse")
        ->check(CLI::IsMember({"stationary", "diffuse"}));

    CLI::App* eval = app.add_subcommand("evaluate", "RMSE report and cross-sections");
    add_common(eval, true, true);
    eval->add_option("--split", split_text, "contract split, e.g. in=1..13,out=14..20");
    eval->add_option("--dates", dates_text, "comma-separated cross-section dates");

    CLI::App* fc = app.add_subcommand("forecast", "log-price curve from a given state");
    add_common(fc, false, true);
    fc->add_option("--chi", chi0, "short-term factor")->required();
    fc->add_option("--xi", xi0, "long-term factor")->required();
    fc->add_option("--maturities", maturities_text, "comma-separated years");
    fc->add_option("--n-contracts", n_contracts, "monthly grid size if no --maturities");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        std::cerr << "error: usage: " << e.what() << "\n";
        return kExitUsage;
    }

    fs::create_directories(args.output_dir);
    const fs::path out_dir = args.output_dir;

    if (*sim) {
        const ModelParams theta = load_theta(args.theta_file);
        const MaturityMode mode =
            maturity_mode == "rolling" ? MaturityMode::Rolling : MaturityMode::Constant;
        const Eigen::MatrixXd mats = maturity_schedule(mode, n_dates, n_contracts, args.dt);
        const SimOutput sim_out =
            simulate(theta, n_dates, args.dt, mats, args.seed, Date::parse(start_date));
        const std::string header = provenance(args.seed, theta);
        save_panel(sim_out.panel, out_dir / "panel.csv", io_config(args), header);
        save_true_states(sim_out.panel.dates, sim_out.true_states, out_dir / "true_states.csv",
                         header);
        std::cout << "wrote " << (out_dir / "panel.csv").string() << " and "
                  << (out_dir / "true_states.csv").string() << "\n";
        return kExitOk;
    }

    if (*fit) {
        const FuturesPanel panel = load_panel(args.input, io_config(args));
        fit_config.seed = args.seed;
        const FitResult res = fit_mle(panel, fit_config);

        const std::string header = provenance(args.seed, res.theta_hat);
        std::ostringstream os;
        os << "# " << header << "\n";
        // theta at full precision: fit.txt doubles as a --theta input.
        const ParamVector v = res.theta_hat.to_vector();
        for (int i = 0; i < kNumParams; ++i)
            os << ModelParams::names()[i] << " = " << fmt17(v[i]) << "\n";
        os << "loglik = " << fmt10(res.loglik) << "\n";
        os << "converged = " << (res.converged ? 1 : 0) << "\n";
        os << "n_starts = " << res.n_starts << "\n";
        if (res.std_errors) {
            for (int i = 0; i < kNumParams; ++i)
                os << "se_" << ModelParams::names()[i] << " = " << fmt10((*res.std_errors)[i])
                   << "\n";
        }
        for (const auto& w : res.warnings) os << "# warning: " << w << "\n";
        write_text(out_dir / "fit.txt", os.str());

        nlohmann::json j;
        j["version"] = kVersion;
        j["seed"] = args.seed;
        for (int i = 0; i < kNumParams; ++i) j["theta"][ModelParams::names()[i]] = v[i];
        j["loglik"] = res.loglik;
        j["converged"] = res.converged;
        j["n_starts"] = res.n_starts;
        if (res.std_errors) {
            for (int i = 0; i < kNumParams; ++i)
                j["std_errors"][ModelParams::names()[i]] = (*res.std_errors)[i];
        }
        j["warnings"] = res.warnings;
        auto& trace = j["start_trace"];
        for (const auto& s : res.start_trace) {
            nlohmann::json entry;
            const ParamVector sv = s.start.to_vector();
            for (int i = 0; i < kNumParams; ++i) entry["start"][ModelParams::names()[i]] = sv[i];
            entry["final_loglik"] = s.final_loglik;
            trace.push_back(entry);
        }
        write_text(out_dir / "fit.json", j.dump(2) + "\n");

        std::cout << "loglik = " << fmt10(res.loglik) << "\n";
        for (const auto& w : res.warnings) std::cout << "warning: " << w << "\n";
        return kExitOk;
    }

    if (*filt || *smth) {
        const ModelParams theta = load_theta(args.theta_file);
        const FuturesPanel panel = load_panel(args.input, io_config(args));
        const FilterOutput out = run_filter(panel, theta, make_init(args.init, theta));
        const std::string header = provenance(args.seed, theta);
        if (*filt) {
            write_states_csv(out_dir / "filtered_states.csv", header, panel.dates, out.filtered,
                             "filtered", out.loglik);
            std::ostringstream os;
            os << "# " << header << "\n";
            os << "date,predicted_chi,predicted_xi,predicted_P11,predicted_P12,predicted_P22\n";
            for (std::size_t t = 0; t < panel.dates.size(); ++t) {
                const auto& s = out.predicted[t];
                os << panel.dates[t].iso() << "," << fmt10(s.mean[0]) << "," << fmt10(s.mean[1])
                   << "," << fmt10(s.cov(0, 0)) << "," << fmt10(s.cov(0, 1)) << ","
                   << fmt10(s.cov(1, 1)) << "\n";
            }
            write_text(out_dir / "predicted_states.csv", os.str());
        } else {
            const SmootherOutput sm = run_smoother(panel, theta, out);
            write_states_csv(out_dir / "smoothed_states.csv", header, panel.dates, sm.smoothed,
                             "smoothed", out.loglik);
        }
        std::cout << "loglik = " << fmt10(out.loglik) << "\n";
        return kExitOk;
    }

    if (*eval) {
        const ModelParams theta = load_theta(args.theta_file);
        const FuturesPanel panel = load_panel(args.input, io_config(args));
        const ContractSplit split = parse_split(split_text, panel.n_contracts());
        const FilterOutput fo = run_filter(panel, theta, init_state(theta));
        const SmootherOutput so = run_smoother(panel, theta, fo);
        const RmseReport report = rmse_report(panel, theta, fo, so, split);
        const std::string header = provenance(args.seed, theta);
        write_rmse_csv(report, out_dir / "rmse.csv", header);
        const std::string table = format_rmse_table(report);
        write_text(out_dir / "rmse.txt", "# " + header + "\n" + table);
        std::cout << table;

        if (!dates_text.empty()) {
            std::stringstream ss(dates_text);
            std::string token;
            while (std::getline(ss, token, ',')) {
                const Date date = Date::parse(token);
                const CrossSection cs = cross_section(panel, theta, fo, so, date);
                write_cross_section_csv(cs, out_dir / ("cross_section_" + date.iso() + ".csv"),
                                        header);
                const auto observed = panel.observed_at(
                    std::find(panel.dates.begin(), panel.dates.end(), date) -
                    panel.dates.begin());
                Eigen::VectorXd curve(static_cast<Eigen::Index>(observed.size()));
                for (std::size_t k = 0; k < observed.size(); ++k)
                    curve[static_cast<Eigen::Index>(k)] = cs.observed[observed[k]];
                std::cout << date.iso() << ": S_F=" << fmt10(cs.s_filter)
                          << " S_S=" << fmt10(cs.s_smoother) << " shape="
                          << to_string(classify_term_structure(curve)) << "\n";
            }
        }
        return kExitOk;
    }

    if (*fc) {
        const ModelParams theta = load_theta(args.theta_file);
        Eigen::VectorXd mats;
        if (!maturities_text.empty()) {
            mats = parse_double_list(maturities_text);
        } else {
            mats.resize(n_contracts);
            for (Eigen::Index i = 0; i < n_contracts; ++i)
                mats[i] = static_cast<double>(i + 1) / 12.0;
        }
        const Eigen::VectorXd curve = fitted_log_prices(Vec2(chi0, xi0), theta, mats);
        std::ostringstream os;
        os << "# " << provenance(args.seed, theta) << "\n";
        os << "contract,maturity,log_price,price\n";
        for (Eigen::Index i = 0; i < mats.size(); ++i)
            os << "C" << (i + 1) << "," << fmt10(mats[i]) << "," << fmt10(curve[i]) << ","
               << fmt10(std::exp(curve[i])) << "\n";
        write_text(out_dir / "forecast.csv", os.str());
        std::cout << "wrote " << (out_dir / "forecast.csv").string() << "\n";
        return kExitOk;
    }

    return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ParseError& e) {
        if (e.kind() == ParseError::Kind::Io) {
            std::cerr << "error: io: " << e.what() << "\n";
            return kExitIo;
        }
        std::cerr << "error: parse: " << e.what() << "\n";
        return kExitData;
    } catch (const ArgumentError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericalError& e) {
        std::cerr << "error: numerical: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const DomainError& e) {
        std::cerr << "error: numerical: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const EstimationError& e) {
        std::cerr << "error: numerical: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return kExitInternal;
    }
}
