#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "geomrec/distributions.hpp"
#include "geomrec/geomrec_core.hpp"

namespace geomrec {

/// How run_trial produces the raw stream.
enum class StreamMode {
    /// Draw only the observations that can change some estimator; the number of
    /// skipped ones is drawn from its exact geometric law.
    skip,
    /// Draw every observation.
    naive,
};

struct TrialConfig {
    ParentDistribution dist{DistKind::pareto, 1.0, 1.0};
    double gamma_true = 1.0;
    std::vector<double> deltas{0.8, 0.6, 0.5, 0.4, 0.2};
    int m = 5;
    double threshold = 5.0;
    int n_records = 10;
    std::vector<int> hill_ks{5, 10, 15, 20, 30};
    std::vector<int> berred_ells{3, 4, 5, 6, 7};
    /// Observations actually drawn from the parent before the trial aborts.
    std::uint64_t max_materialized = 100'000'000;
    StreamMode mode = StreamMode::skip;

    /// Throws ParameterError on empty/invalid lists or n_records <= max(ell).
    void validate() const;
};

struct TrialResult {
    std::vector<std::optional<double>> geometric;     ///< per delta
    std::vector<std::uint64_t> geometric_ess;         ///< per delta
    std::vector<std::optional<double>> hill;          ///< per k
    std::vector<std::uint64_t> hill_ess;              ///< per k
    std::vector<std::optional<double>> berred_b1;     ///< per ell
    std::vector<std::optional<double>> berred_b2;     ///< per ell
    std::vector<double> records;                      ///< R_1..R_n after activation
    std::uint64_t raw_count = 0;                      ///< post-activation observations before the closing record
    std::uint64_t materialized = 0;
    bool aborted = false;
};

/**
 * @brief One replication: stream until the (n_records+1)-th record after activation.
 *
 * The geometric estimator is the complete-block MLE over the first n_records
 * blocks. Hill runs over every post-activation observation, the closing record
 * included; Berred uses R_1..R_n. Throws TrialAbortError when more than
 * max_materialized observations are drawn.
 */
[[nodiscard]] TrialResult run_trial(const TrialConfig& config, std::uint64_t master_seed, std::uint64_t rep_index);

/// Threads to use: GEOMREC_THREADS if set, else `requested`, else hardware concurrency.
[[nodiscard]] unsigned resolve_threads(unsigned requested);

/// Calls body(i) for i in [0, count) on `threads` workers. Exceptions are rethrown
/// (first by index) after all workers stop.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

/// Trials 0..reps-1; aborted trials come back with aborted = true.
[[nodiscard]] std::vector<TrialResult> replicate_trials(const TrialConfig& config, std::uint64_t reps,
                                                        std::uint64_t master_seed, unsigned threads = 1);

struct SummaryRow {
    std::string estimator;  ///< geometric, hill, berred_b1, berred_b2
    double param = 0.0;     ///< delta, k or ell
    double mean = 0.0;
    double mse = 0.0;
    std::optional<std::uint64_t> median_ess;
    std::uint64_t reps = 0;  ///< successful trials used
    std::uint64_t failures = 0;
    std::vector<double> estimates;  ///< successful per-trial values in replication order
};

struct SimulationSummary {
    std::string dist;
    double gamma_true = 0.0;
    std::vector<SummaryRow> rows;

    [[nodiscard]] const SummaryRow& row(const std::string& estimator, double param) const;
};

/// Lower median (element (n-1)/2 of the sorted values). Throws EmptySampleError.
[[nodiscard]] std::uint64_t lower_median(std::vector<std::uint64_t> values);

/// Throws AggregationError when a cell has no successful trial.
[[nodiscard]] SimulationSummary summarize(const TrialConfig& config, const std::vector<TrialResult>& trials);

/// replicate_trials + summarize. Throws ParameterError for reps = 0.
[[nodiscard]] SimulationSummary replicate(const TrialConfig& config, std::uint64_t reps, std::uint64_t master_seed,
                                          unsigned threads = 1);

/// dist,gamma,estimator,param,mean,mse,median_ess,reps,failures
[[nodiscard]] std::string summary_to_csv(const SimulationSummary& summary);

struct CltResult {
    double empirical_sd = 0.0;  ///< sd of sqrt(n)(gamma_hat - gamma)
    double sigma = 0.0;         ///< asymptotic sd at the true gamma
    double coverage = 0.0;      ///< fraction of intervals containing gamma
    double mean_estimate = 0.0;
    std::vector<double> estimates;
};

/// Direct-generation study of the complete MLE over n_blocks blocks.
[[nodiscard]] CltResult clt_study(double gamma, double delta, int m, std::uint64_t n_blocks, std::uint64_t reps,
                                  std::uint64_t master_seed, double alpha = 0.05, unsigned threads = 1);

struct TracePoint {
    std::uint64_t effective_index = 0;
    double estimate = 0.0;
};

struct Traces {
    std::vector<TracePoint> geometric;
    std::vector<TracePoint> hill;
};

/**
 * @brief Sample paths of the practical MLE and of Hill over one stream of n_raw draws.
 *
 * A geometric point is emitted after each geometric record once the MLE exists;
 * a Hill point after each observation entering the running top-(k+1), once k+1
 * observations are available. Both start at activation.
 */
[[nodiscard]] Traces trace_paths(const ParentDistribution& dist, std::uint64_t n_raw, const GeomRecordParams& params,
                                 int hill_k, std::uint64_t master_seed);

/// Mean absolute successive difference of the estimates; NaN with fewer than 2 points.
[[nodiscard]] double roughness(const std::vector<TracePoint>& trace);

/// estimator,ess,estimate
[[nodiscard]] std::string traces_to_csv(const Traces& traces);

}  // namespace geomrec
