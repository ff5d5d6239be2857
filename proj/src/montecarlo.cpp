#include "geomrec/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "geomrec/errors.hpp"
#include "geomrec/estimators.hpp"
#include "geomrec/format.hpp"

namespace geomrec {

void TrialConfig::validate() const {
    if (!(gamma_true > 0.0)) {
        throw ParameterError("gamma_true must be positive");
    }
    for (double d : deltas) {
        (void)GeomRecordParams(d, m, threshold);
    }
    (void)GeomRecordParams(0.5, m, threshold);
    if (n_records < 1) {
        throw ParameterError("n_records must be >= 1");
    }
    for (int k : hill_ks) {
        if (k < 1) {
            throw ParameterError("Hill k must be >= 1");
        }
    }
    for (int ell : berred_ells) {
        if (ell < 1) {
            throw ParameterError("Berred ell must be >= 1");
        }
        if (n_records <= ell) {
            throw ParameterError("n_records must exceed every Berred ell");
        }
    }
    if (max_materialized == 0) {
        throw ParameterError("max_materialized must be positive");
    }
}

namespace {

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
    return a > std::numeric_limits<std::uint64_t>::max() - b ? std::numeric_limits<std::uint64_t>::max() : a + b;
}

template <class F>
std::optional<double> guarded(F&& f) {
    try {
        return f();
    } catch (const Error&) {
        return std::nullopt;
    }
}

}  // namespace

TrialResult run_trial(const TrialConfig& config, std::uint64_t master_seed, std::uint64_t rep_index) {
    Rng rng(master_seed, rep_index);
    const auto& dist = config.dist;
    const double threshold = config.threshold;
    const bool skipping = config.mode == StreamMode::skip;

    std::vector<Extractor> extractors;
    extractors.reserve(config.deltas.size());
    for (double d : config.deltas) {
        extractors.emplace_back(GeomRecordParams(d, config.m, threshold));
    }
    const double delta_min =
        config.deltas.empty() ? 1.0 : *std::min_element(config.deltas.begin(), config.deltas.end());
    std::optional<HillTracker> hill;
    if (!config.hill_ks.empty()) {
        hill.emplace(config.hill_ks);
    }

    TrialResult result;
    auto materialize = [&] {
        if (++result.materialized > config.max_materialized) {
            throw TrialAbortError("trial " + std::to_string(rep_index) + " exceeded " +
                                  std::to_string(config.max_materialized) + " observations");
        }
    };
    auto feed = [&](double x) {
        for (auto& e : extractors) {
            e.push(x);
        }
        if (hill) {
            hill->push(x);
        }
        ++result.raw_count;
    };

    double x = 0.0;
    if (skipping && threshold > 0.0) {
        // Observations at or below A are discarded uncounted; only the first one above matters.
        x = dist.sample_above(threshold, rng);
        materialize();
    } else {
        do {
            x = dist.sample(rng);
            materialize();
        } while (x <= threshold);
    }
    double current_max = x;
    result.records.push_back(x);
    feed(x);

    const auto n = static_cast<std::size_t>(config.n_records);
    for (;;) {
        double level = 0.0;
        if (skipping) {
            level = config.deltas.empty() ? current_max : delta_min * current_max;
            if (hill) {
                const auto entry = hill->entry_level();
                level = entry ? std::min(level, *entry) : 0.0;
            }
        }
        if (level > 0.0) {
            const std::uint64_t gap = geom_star(dist.survival(level), rng);
            for (auto& e : extractors) {
                e.skip_below_threshold(gap);
            }
            result.raw_count = saturating_add(result.raw_count, gap);
            x = dist.sample_above(level, rng);
        } else {
            x = dist.sample(rng);
        }
        materialize();
        if (x > current_max) {
            current_max = x;
            if (result.records.size() == n) {
                for (auto& e : extractors) {
                    e.push(x);
                }
                if (hill) {
                    hill->push(x);
                }
                break;
            }
            result.records.push_back(x);
        }
        feed(x);
    }

    for (const auto& e : extractors) {
        const auto& sample = e.sample();
        result.geometric.push_back(guarded([&] { return mle_complete(sample).gamma_hat; }));
        result.geometric_ess.push_back(totals_of(sample.complete_blocks()).geometric_records());
    }
    for (std::size_t i = 0; i < config.hill_ks.size(); ++i) {
        result.hill.push_back(hill->ready(i) ? guarded([&] { return hill->estimate(i); }) : std::nullopt);
        result.hill_ess.push_back(hill->ess(i));
    }
    const std::span<const double> records(result.records);
    for (int ell : config.berred_ells) {
        result.berred_b1.push_back(guarded([&] { return berred_b1(records, ell, config.n_records); }));
        result.berred_b2.push_back(guarded([&] {
            return berred_b2(records.subspan(n - static_cast<std::size_t>(ell)), ell, config.n_records);
        }));
    }
    return result;
}

unsigned resolve_threads(unsigned requested) {
    if (const char* env = std::getenv("GEOMREC_THREADS")) {
        const auto parsed = parse_double(env);
        if (parsed && *parsed >= 1.0 && *parsed == std::floor(*parsed) && *parsed < 4096.0) {
            return static_cast<unsigned>(*parsed);
        }
        throw ParameterError(std::string("GEOMREC_THREADS must be a positive integer, got '") + env + "'");
    }
    if (requested > 0) {
        return requested;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex error_mutex;
    std::size_t error_index = count;
    std::exception_ptr error;

    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count || stop.load()) {
                return;
            }
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (i < error_index) {
                    error_index = i;
                    error = std::current_exception();
                }
                stop = true;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back(work);
    }
    for (auto& t : pool) {
        t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

std::vector<TrialResult> replicate_trials(const TrialConfig& config, std::uint64_t reps, std::uint64_t master_seed,
                                          unsigned threads) {
    config.validate();
    std::vector<TrialResult> results(static_cast<std::size_t>(reps));
    parallel_for(results.size(), threads, [&](std::size_t i) {
        try {
            results[i] = run_trial(config, master_seed, i);
        } catch (const TrialAbortError&) {
            results[i] = TrialResult{};
            results[i].aborted = true;
            results[i].materialized = config.max_materialized;
        }
    });
    return results;
}

const SummaryRow& SimulationSummary::row(const std::string& estimator, double param) const {
    for (const auto& r : rows) {
        if (r.estimator == estimator && r.param == param) {
            return r;
        }
    }
    throw ParameterError("no summary row for " + estimator + " " + format_double(param));
}

std::uint64_t lower_median(std::vector<std::uint64_t> values) {
    if (values.empty()) {
        throw EmptySampleError("median of an empty list");
    }
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
    std::nth_element(values.begin(), mid, values.end());
    return *mid;
}

namespace {

SummaryRow make_row(std::string estimator, double param, double gamma_true, const std::vector<TrialResult>& trials,
                    const std::function<std::optional<double>(const TrialResult&)>& estimate_of,
                    const std::function<std::optional<std::uint64_t>(const TrialResult&)>& ess_of) {
    SummaryRow row;
    row.estimator = std::move(estimator);
    row.param = param;
    std::vector<std::uint64_t> ess;
    for (const auto& t : trials) {
        const auto e = t.aborted ? std::nullopt : estimate_of(t);
        if (!e || !std::isfinite(*e)) {
            ++row.failures;
            continue;
        }
        row.estimates.push_back(*e);
        if (const auto s = ess_of(t)) {
            ess.push_back(*s);
        }
    }
    if (row.estimates.empty()) {
        throw AggregationError("every trial failed for " + row.estimator + " " + format_double(param));
    }
    row.reps = row.estimates.size();
    double sum = 0.0;
    double sq = 0.0;
    for (double e : row.estimates) {
        sum += e;
        sq += (e - gamma_true) * (e - gamma_true);
    }
    row.mean = sum / static_cast<double>(row.reps);
    row.mse = sq / static_cast<double>(row.reps);
    if (!ess.empty()) {
        row.median_ess = lower_median(std::move(ess));
    }
    return row;
}

}  // namespace

SimulationSummary summarize(const TrialConfig& config, const std::vector<TrialResult>& trials) {
    if (trials.empty()) {
        throw AggregationError("no trials to summarize");
    }
    SimulationSummary summary;
    summary.dist = config.dist.name();
    summary.gamma_true = config.gamma_true;
    const double g = config.gamma_true;
    auto none = [](const TrialResult&) { return std::optional<std::uint64_t>{}; };
    for (std::size_t i = 0; i < config.deltas.size(); ++i) {
        summary.rows.push_back(make_row(
            "geometric", config.deltas[i], g, trials, [i](const TrialResult& t) { return t.geometric[i]; },
            [i](const TrialResult& t) { return std::optional<std::uint64_t>(t.geometric_ess[i]); }));
    }
    for (std::size_t i = 0; i < config.hill_ks.size(); ++i) {
        summary.rows.push_back(make_row(
            "hill", config.hill_ks[i], g, trials, [i](const TrialResult& t) { return t.hill[i]; },
            [i](const TrialResult& t) { return std::optional<std::uint64_t>(t.hill_ess[i]); }));
    }
    for (std::size_t i = 0; i < config.berred_ells.size(); ++i) {
        summary.rows.push_back(make_row("berred_b1", config.berred_ells[i], g, trials,
                                        [i](const TrialResult& t) { return t.berred_b1[i]; }, none));
    }
    for (std::size_t i = 0; i < config.berred_ells.size(); ++i) {
        summary.rows.push_back(make_row("berred_b2", config.berred_ells[i], g, trials,
                                        [i](const TrialResult& t) { return t.berred_b2[i]; }, none));
    }
    return summary;
}

SimulationSummary replicate(const TrialConfig& config, std::uint64_t reps, std::uint64_t master_seed,
                            unsigned threads) {
    if (reps == 0) {
        throw ParameterError("reps must be >= 1");
    }
    return summarize(config, replicate_trials(config, reps, master_seed, threads));
}

std::string summary_to_csv(const SimulationSummary& summary) {
    std::ostringstream out;
    out << "dist,gamma,estimator,param,mean,mse,median_ess,reps,failures\n";
    for (const auto& r : summary.rows) {
        out << csv_field(summary.dist) << ',' << format_double(summary.gamma_true) << ',' << r.estimator << ','
            << format_double(r.param) << ',' << format_double(r.mean) << ',' << format_double(r.mse) << ','
            << (r.median_ess ? std::to_string(*r.median_ess) : "") << ',' << r.reps << ',' << r.failures << '\n';
    }
    return out.str();
}

CltResult clt_study(double gamma, double delta, int m, std::uint64_t n_blocks, std::uint64_t reps,
                    std::uint64_t master_seed, double alpha, unsigned threads) {
    if (reps < 2 || n_blocks == 0) {
        throw ParameterError("clt_study needs reps >= 2 and n_blocks >= 1");
    }
    const GeomRecordParams params(delta, m, 1.0);
    CltResult out;
    out.sigma = asymptotic_sd(gamma, delta, m);
    out.estimates.resize(static_cast<std::size_t>(reps));
    std::vector<char> covered(out.estimates.size(), 0);
    parallel_for(out.estimates.size(), threads, [&](std::size_t i) {
        Rng rng(master_seed, i);
        const auto sample = direct_generate_sample(gamma, params, n_blocks, rng);
        const double est = mle_complete(sample).gamma_hat;
        const auto ci = confidence_interval(est, delta, m, n_blocks, alpha);
        out.estimates[i] = est;
        covered[i] = ci.low <= gamma && gamma <= ci.high;
    });
    const double root_n = std::sqrt(static_cast<double>(n_blocks));
    double sum = 0.0;
    for (double e : out.estimates) {
        sum += e;
    }
    out.mean_estimate = sum / static_cast<double>(reps);
    double ss = 0.0;
    for (double e : out.estimates) {
        const double d = root_n * (e - out.mean_estimate);
        ss += d * d;
    }
    out.empirical_sd = std::sqrt(ss / static_cast<double>(reps - 1));
    out.coverage = static_cast<double>(std::count(covered.begin(), covered.end(), 1)) / static_cast<double>(reps);
    return out;
}

Traces trace_paths(const ParentDistribution& dist, std::uint64_t n_raw, const GeomRecordParams& params, int hill_k,
                   std::uint64_t master_seed) {
    if (n_raw == 0) {
        throw ParameterError("trace needs at least one observation");
    }
    Rng rng(master_seed, 0);
    Extractor extractor(params);
    HillTracker hill({hill_k});
    Traces traces;
    for (std::uint64_t i = 0; i < n_raw; ++i) {
        const double x = dist.sample(rng);
        const auto event = extractor.push(x);
        if (event.kind == EventKind::ignored) {
            continue;
        }
        if (event.kind != EventKind::below_geometric_threshold) {
            const auto& totals = extractor.running_totals();
            try {
                const double beta = beta_hat_practical(totals, params.m());
                traces.geometric.push_back(
                    {totals.geometric_records(), gamma_from_beta(beta, params.delta(), params.m())});
            } catch (const MleNonexistenceError&) {
            }
        }
        const auto before = hill.ess(0);
        hill.push(x);
        if (hill.ess(0) != before && hill.ready(0)) {
            try {
                traces.hill.push_back({hill.ess(0), hill.estimate(0)});
            } catch (const DegenerateSampleError&) {
            }
        }
    }
    return traces;
}

double roughness(const std::vector<TracePoint>& trace) {
    if (trace.size() < 2) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double total = 0.0;
    for (std::size_t i = 1; i < trace.size(); ++i) {
        total += std::fabs(trace[i].estimate - trace[i - 1].estimate);
    }
    return total / static_cast<double>(trace.size() - 1);
}

std::string traces_to_csv(const Traces& traces) {
    std::ostringstream out;
    out << "estimator,ess,estimate\n";
    for (const auto& p : traces.geometric) {
        out << "geometric," << p.effective_index << ',' << format_double(p.estimate) << '\n';
    }
    for (const auto& p : traces.hill) {
        out << "hill," << p.effective_index << ',' << format_double(p.estimate) << '\n';
    }
    return out.str();
}

}  // namespace geomrec
