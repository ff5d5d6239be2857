// geomrec: tail-index estimation from geometric records.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "geomrec/distributions.hpp"
#include "geomrec/errors.hpp"
#include "geomrec/estimators.hpp"
#include "geomrec/finance.hpp"
#include "geomrec/format.hpp"
#include "geomrec/geomrec_core.hpp"
#include "geomrec/montecarlo.hpp"

namespace {

using namespace geomrec;

enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 1,
    exit_no_activation = 2,
    exit_mle_nonexistent = 3,
    exit_io = 4,
    exit_parse = 5,
    exit_other = 6,
};

struct NoActivation : Error {
    using Error::Error;
};

struct Globals {
    std::uint64_t seed = 20250101;
    std::string out;
    std::string format;
    unsigned threads = 0;
};

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    return in;
}

void emit(const Globals& g, const std::string& text) {
    if (g.out.empty() || g.out == "-") {
        std::cout << text;
        std::cout.flush();
        if (!std::cout) {
            throw IoError("failed writing to stdout");
        }
        return;
    }
    std::ofstream out(g.out, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + g.out + "'");
    }
    out << text;
    if (!out) {
        throw IoError("failed writing '" + g.out + "'");
    }
}

std::string format_or(const Globals& g, const std::string& fallback) {
    return g.format.empty() ? fallback : g.format;
}

/// z_abs values: a price CSV when `prices` is set, otherwise one value per line.
std::vector<double> load_values(const std::string& path, bool prices) {
    auto in = open_input(path);
    if (!prices) {
        return read_observations(in);
    }
    const auto series = read_price_csv(in);
    if (series.skipped_rows > 0) {
        std::cerr << "warning: skipped " << series.skipped_rows << " rows with unparsable close\n";
    }
    return prices_to_returns(series.closes, series.dates).z_abs;
}

// --- estimate -----------------------------------------------------------------

struct EstimateOpts {
    std::string input;
    double delta = 0.5;
    int m = 5;
    double threshold = 0.0;
    std::string variant = "practical";
    std::optional<double> alpha;
};

void run_estimate(const Globals& g, const EstimateOpts& o) {
    const GeomRecordParams params(o.delta, o.m, o.threshold);
    const auto variant = parse_variant(o.variant);
    Extractor extractor(params);
    auto in = open_input(o.input);
    for_each_observation(in, [&](double x) {
        if (x > 0.0) {
            extractor.push(x);
        } else {
            extractor.skip_below_threshold(1);
        }
    });
    if (!extractor.activated()) {
        throw NoActivation("no observation exceeds A = " + format_double(o.threshold));
    }
    const auto sample = extractor.finalize();
    EstimateReport report;
    try {
        report = variant == MleVariant::complete ? mle_complete(sample) : mle_practical(sample);
    } catch (const EmptySampleError& e) {
        throw MleNonexistenceError(std::string("MLE does not exist: ") + e.what());
    }
    report = with_confidence_interval(report, params, o.alpha.value_or(0.05));
    if (!o.alpha) {
        report.alpha = 0.05;
    }
    if (format_or(g, "json") == "csv") {
        std::ostringstream out;
        out << "gamma_hat,sigma_hat,ci_low,ci_high,alpha,n_blocks,ess,variant\n"
            << format_double(report.gamma_hat) << ',' << format_optional(report.sigma_hat) << ','
            << format_double(report.ci->low) << ',' << format_double(report.ci->high) << ','
            << format_optional(report.alpha) << ',' << report.n_blocks << ',' << report.effective_sampling_size
            << ',' << to_string(report.variant) << '\n';
        emit(g, out.str());
    } else {
        emit(g, report_to_json(report, 2) + "\n");
    }
}

// --- simulate-table -------------------------------------------------------------

struct TableOpts {
    std::string dist;
    std::optional<double> gamma;
    std::string deltas = "0.8,0.6,0.5,0.4,0.2";
    std::string ks = "5,10,15,20,30";
    std::string ells = "3,4,5,6,7";
    int m = 5;
    double threshold = 5.0;
    int n_records = 10;
    std::uint64_t reps = 10000;
    std::uint64_t max_obs = 100'000'000;
    bool naive = false;
};

std::string summary_to_json(const SimulationSummary& s) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : s.rows) {
        nlohmann::ordered_json j;
        j["dist"] = s.dist;
        j["gamma"] = s.gamma_true;
        j["estimator"] = r.estimator;
        j["param"] = r.param;
        j["mean"] = r.mean;
        j["mse"] = r.mse;
        j["median_ess"] = r.median_ess ? nlohmann::ordered_json(*r.median_ess) : nullptr;
        j["reps"] = r.reps;
        j["failures"] = r.failures;
        rows.push_back(std::move(j));
    }
    return rows.dump(2) + "\n";
}

void run_table(const Globals& g, const TableOpts& o) {
    TrialConfig config;
    config.dist = ParentDistribution::parse(o.dist);
    config.gamma_true = o.gamma.value_or(config.dist.tail_index());
    config.deltas = parse_grid(o.deltas);
    config.hill_ks = o.ks.empty() ? std::vector<int>{} : parse_int_list(o.ks);
    config.berred_ells = o.ells.empty() ? std::vector<int>{} : parse_int_list(o.ells);
    config.m = o.m;
    config.threshold = o.threshold;
    config.n_records = o.n_records;
    config.max_materialized = o.max_obs;
    config.mode = o.naive ? StreamMode::naive : StreamMode::skip;
    const auto summary = replicate(config, o.reps, g.seed, resolve_threads(g.threads));
    emit(g, format_or(g, "csv") == "json" ? summary_to_json(summary) : summary_to_csv(summary));
}

// --- simulate-clt ------------------------------------------------------------------

struct CltOpts {
    double gamma = 2.0;
    double delta = 0.5;
    int m = 5;
    std::uint64_t n_blocks = 500;
    std::uint64_t reps = 2000;
    double alpha = 0.05;
};

void run_clt(const Globals& g, const CltOpts& o) {
    const auto r = clt_study(o.gamma, o.delta, o.m, o.n_blocks, o.reps, g.seed, o.alpha, resolve_threads(g.threads));
    if (format_or(g, "json") == "csv") {
        emit(g, "gamma,delta,m,n_blocks,reps,alpha,empirical_sd,sigma,coverage,mean\n" + format_double(o.gamma) + "," +
                    format_double(o.delta) + "," + std::to_string(o.m) + "," + std::to_string(o.n_blocks) + "," +
                    std::to_string(o.reps) + "," + format_double(o.alpha) + "," + format_double(r.empirical_sd) +
                    "," + format_double(r.sigma) + "," + format_double(r.coverage) + "," +
                    format_double(r.mean_estimate) + "\n");
        return;
    }
    nlohmann::ordered_json j;
    j["gamma"] = o.gamma;
    j["delta"] = o.delta;
    j["m"] = o.m;
    j["n_blocks"] = o.n_blocks;
    j["reps"] = o.reps;
    j["alpha"] = o.alpha;
    j["empirical_sd"] = r.empirical_sd;
    j["sigma"] = r.sigma;
    j["coverage"] = r.coverage;
    j["mean"] = r.mean_estimate;
    emit(g, j.dump(2) + "\n");
}

// --- trace -----------------------------------------------------------------------

struct TraceOpts {
    std::string dist;
    std::uint64_t n = 10000;
    double delta = 0.5;
    int m = 5;
    double threshold = 0.0;
    int k = 2;
};

void run_trace(const Globals& g, const TraceOpts& o) {
    const auto dist = ParentDistribution::parse(o.dist);
    const auto traces = trace_paths(dist, o.n, GeomRecordParams(o.delta, o.m, o.threshold), o.k, g.seed);
    if (format_or(g, "csv") == "json") {
        nlohmann::ordered_json j;
        for (const auto* name : {"geometric", "hill"}) {
            const auto& path = std::string(name) == "geometric" ? traces.geometric : traces.hill;
            nlohmann::ordered_json arr = nlohmann::ordered_json::array();
            for (const auto& p : path) {
                arr.push_back({{"ess", p.effective_index}, {"estimate", p.estimate}});
            }
            j[name] = std::move(arr);
        }
        emit(g, j.dump(2) + "\n");
        return;
    }
    emit(g, traces_to_csv(traces));
}

// --- returns / esf / delta-scan ------------------------------------------------------

void run_returns(const Globals& g, const std::string& input) {
    auto in = open_input(input);
    const auto series = read_price_csv(in);
    if (series.skipped_rows > 0) {
        std::cerr << "warning: skipped " << series.skipped_rows << " rows with unparsable close\n";
    }
    const auto r = prices_to_returns(series.closes, series.dates);
    if (format_or(g, "csv") == "json") {
        nlohmann::ordered_json j;
        j["mean"] = r.mean;
        j["sd"] = r.sd;
        j["date"] = r.labels;
        j["y"] = r.y;
        j["z_abs"] = r.z_abs;
        emit(g, j.dump(2) + "\n");
        return;
    }
    std::ostringstream out;
    out << "date,y,z_abs\n";
    for (std::size_t i = 0; i < r.y.size(); ++i) {
        out << csv_field(r.labels[i]) << ',' << format_double(r.y[i]) << ',' << format_double(r.z_abs[i]) << '\n';
    }
    emit(g, out.str());
}

struct EsfOpts {
    std::string input;
    bool prices = false;
    double threshold = 1.5;
    std::string points;
};

void run_esf(const Globals& g, const EsfOpts& o) {
    const auto values = load_values(o.input, o.prices);
    const auto fit = esf_fit(values, o.threshold);
    if (!o.points.empty()) {
        emit(Globals{g.seed, o.points, "csv", g.threads}, esf_points_to_csv(fit.points));
    }
    if (format_or(g, "json") == "csv") {
        emit(g, esf_points_to_csv(fit.points));
    } else {
        emit(g, esf_fit_to_json(fit, 2) + "\n");
    }
}

struct ScanOpts {
    std::string input;
    bool prices = false;
    std::string deltas = "0.2:0.8:0.01";
    int m = 5;
    double threshold = 1.5;
    double alpha = 0.05;
};

void run_scan(const Globals& g, const ScanOpts& o) {
    const auto values = load_values(o.input, o.prices);
    const auto grid = parse_grid(o.deltas);
    const auto rows = delta_scan(values, grid, o.m, o.threshold, o.alpha, resolve_threads(g.threads));
    if (format_or(g, "csv") == "json") {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& r : rows) {
            nlohmann::ordered_json j;
            j["delta"] = r.delta;
            j["gamma_hat"] = r.report ? nlohmann::ordered_json(r.report->gamma_hat) : nullptr;
            j["ci"] = r.report ? nlohmann::ordered_json({r.report->ci->low, r.report->ci->high}) : nullptr;
            j["n_blocks"] = r.n_blocks;
            arr.push_back(std::move(j));
        }
        emit(g, arr.dump(2) + "\n");
        return;
    }
    emit(g, scan_to_csv(rows));
}

int report(const char* kind, const std::exception& e, int code) {
    std::cerr << "geomrec: " << kind << ": " << e.what() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tail-index estimation from geometric records"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Master seed for every random stream")->capture_default_str();
    app.add_option("--out", g.out, "Output file (default: stdout)");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--threads", g.threads, "Worker threads (0: available parallelism; GEOMREC_THREADS overrides)");

    EstimateOpts est;
    auto* estimate = app.add_subcommand("estimate", "Estimate gamma from a file of observations");
    estimate->add_option("--input", est.input, "One observation per line")->required();
    estimate->add_option("--delta", est.delta)->capture_default_str();
    estimate->add_option("--m", est.m)->capture_default_str();
    estimate->add_option("--A", est.threshold, "Activation threshold")->capture_default_str();
    estimate->add_option("--variant", est.variant)->check(CLI::IsMember({"complete", "practical"}))->capture_default_str();
    estimate->add_option("--alpha", est.alpha, "CI level is 1 - alpha (default 0.05)");

    TableOpts tab;
    auto* table = app.add_subcommand("simulate-table", "Monte Carlo mean/MSE/ESS table");
    table->add_option("--dist", tab.dist, "e.g. pareto:2,1 frechet:3 loglogistic:3 burr12:2,0.5")->required();
    table->add_option("--gamma", tab.gamma, "True tail index (default: from --dist)");
    table->add_option("--deltas", tab.deltas)->capture_default_str();
    table->add_option("--ks", tab.ks, "Hill k values")->capture_default_str();
    table->add_option("--ells", tab.ells, "Berred ell values")->capture_default_str();
    table->add_option("--m", tab.m)->capture_default_str();
    table->add_option("--A", tab.threshold)->capture_default_str();
    table->add_option("--n-records", tab.n_records)->capture_default_str();
    table->add_option("--reps", tab.reps)->check(CLI::PositiveNumber)->capture_default_str();
    table->add_option("--max-obs", tab.max_obs, "Per-trial cap on drawn observations")->capture_default_str();
    table->add_flag("--naive", tab.naive, "Draw every observation instead of skipping irrelevant ones");

    CltOpts clt;
    auto* cltc = app.add_subcommand("simulate-clt", "Asymptotic normality and CI coverage study");
    cltc->add_option("--gamma", clt.gamma)->capture_default_str();
    cltc->add_option("--delta", clt.delta)->capture_default_str();
    cltc->add_option("--m", clt.m)->capture_default_str();
    cltc->add_option("--n-blocks", clt.n_blocks)->check(CLI::PositiveNumber)->capture_default_str();
    cltc->add_option("--reps", clt.reps)->check(CLI::Range(std::uint64_t{2}, std::uint64_t{1} << 40))->capture_default_str();
    cltc->add_option("--alpha", clt.alpha)->capture_default_str();

    TraceOpts tr;
    auto* trace = app.add_subcommand("trace", "Sample paths of the geometric and Hill estimators");
    trace->add_option("--dist", tr.dist)->required();
    trace->add_option("--n", tr.n, "Raw observations")->check(CLI::PositiveNumber)->capture_default_str();
    trace->add_option("--delta", tr.delta)->capture_default_str();
    trace->add_option("--m", tr.m)->capture_default_str();
    trace->add_option("--A", tr.threshold)->capture_default_str();
    trace->add_option("--k", tr.k, "Hill k")->check(CLI::PositiveNumber)->capture_default_str();

    std::string returns_input;
    auto* returns = app.add_subcommand("returns", "Log-returns and standardized absolute returns from a date,close CSV");
    returns->add_option("--input", returns_input)->required();

    EsfOpts esf;
    auto* esfc = app.add_subcommand("esf", "Empirical survival function and log-log regression");
    esfc->add_option("--input", esf.input)->required();
    esfc->add_flag("--prices", esf.prices, "Input is a date,close CSV; use its standardized absolute returns");
    esfc->add_option("--threshold", esf.threshold)->capture_default_str();
    esfc->add_option("--points", esf.points, "Also write the log_x,log_esf points CSV here");

    ScanOpts scan;
    auto* scanc = app.add_subcommand("delta-scan", "Practical MLE and CI over a delta grid");
    scanc->add_option("--input", scan.input)->required();
    scanc->add_flag("--prices", scan.prices, "Input is a date,close CSV; use its standardized absolute returns");
    scanc->add_option("--deltas", scan.deltas, "start:end:step or comma list")->capture_default_str();
    scanc->add_option("--m", scan.m)->capture_default_str();
    scanc->add_option("--A", scan.threshold)->capture_default_str();
    scanc->add_option("--alpha", scan.alpha)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*estimate) {
            run_estimate(g, est);
        } else if (*table) {
            run_table(g, tab);
        } else if (*cltc) {
            run_clt(g, clt);
        } else if (*trace) {
            run_trace(g, tr);
        } else if (*returns) {
            run_returns(g, returns_input);
        } else if (*esfc) {
            run_esf(g, esf);
        } else if (*scanc) {
            run_scan(g, scan);
        }
    } catch (const NoActivation& e) {
        return report("no activation", e, exit_no_activation);
    } catch (const MleNonexistenceError& e) {
        return report("MLE does not exist", e, exit_mle_nonexistent);
    } catch (const IoError& e) {
        return report("I/O error", e, exit_io);
    } catch (const ParseError& e) {
        return report("parse error", e, exit_parse);
    } catch (const ParameterError& e) {
        return report("invalid parameter", e, exit_usage);
    } catch (const std::exception& e) {
        return report("error", e, exit_other);
    }
    return exit_ok;
}
