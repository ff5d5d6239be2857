#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geomrec/geomrec_core.hpp"

namespace geomrec {

/// Which likelihood the MLE maximises: all blocks closed, or last block possibly open.
enum class MleVariant { complete, practical };

[[nodiscard]] std::string to_string(MleVariant variant);
/// "complete" | "practical"; throws ParameterError otherwise.
[[nodiscard]] MleVariant parse_variant(std::string_view text);

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

struct EstimateReport {
    double gamma_hat = 0.0;
    std::optional<double> sigma_hat;
    std::optional<Interval> ci;
    std::optional<double> alpha;
    std::uint64_t n_blocks = 0;
    std::uint64_t effective_sampling_size = 0;
    MleVariant variant = MleVariant::complete;
};

/// {gamma_hat, sigma_hat, ci:[low,high], alpha, n_blocks, ess, variant}
[[nodiscard]] std::string report_to_json(const EstimateReport& report, int indent = -1);

// --- geometric-record MLE -------------------------------------------------

/// beta_hat from totals of n closed blocks. Throws EmptySampleError for n = 0.
[[nodiscard]] double beta_hat_complete(const BlockTotals& totals, int m);

/// beta_hat when the last of the n blocks may still be open. Throws
/// EmptySampleError for n = 0 and MleNonexistenceError when n = 1 and V-sum + K_1 = 0.
[[nodiscard]] double beta_hat_practical(const BlockTotals& totals, int m);

/// gamma = m log_delta(beta).
[[nodiscard]] double gamma_from_beta(double beta, double delta, int m);

/// MLE over the complete blocks of `sample`; a trailing open block is dropped.
[[nodiscard]] EstimateReport mle_complete(const GeometricRecordSample& sample);

/// MLE over every block of `sample`, treating the last one as possibly open.
[[nodiscard]] EstimateReport mle_practical(const GeometricRecordSample& sample);

/// Asymptotic sd of sqrt(n)(gamma_hat - gamma). Throws DomainError for gamma <= 0.
[[nodiscard]] double asymptotic_sd(double gamma, double delta, int m);

// --- normal distribution ---------------------------------------------------

[[nodiscard]] double normal_cdf(double x);

/// Standard normal quantile; rational approximation refined by one Halley step.
/// Throws DomainError unless 0 < p < 1.
[[nodiscard]] double normal_quantile(double p);

/// gamma_hat -/+ z_{1-alpha/2} sigma(gamma_hat)/sqrt(n). Throws ParameterError
/// unless 0 < alpha < 1, EmptySampleError for n = 0.
[[nodiscard]] Interval confidence_interval(double gamma_hat, double delta, int m, std::uint64_t n_blocks,
                                           double alpha);

/// Copy of `report` with ci and alpha filled in (sigma_hat recomputed).
[[nodiscard]] EstimateReport with_confidence_interval(EstimateReport report, const GeomRecordParams& params,
                                                      double alpha);

// --- baselines --------------------------------------------------------------

/**
 * @brief Hill's estimator from the k+1 largest observations.
 *
 * `top_values` must hold exactly k+1 positive values in non-increasing order
 * (ParameterError otherwise). Throws DegenerateSampleError when every top value
 * equals the (k+1)-th, i.e. the log-sum is zero.
 */
[[nodiscard]] double hill(std::span<const double> top_values, int k);

/// Berred's B1 from the record list R_1..R_N (N >= n): ell / ln(R_n / R_{n-ell}).
[[nodiscard]] double berred_b1(std::span<const double> records, int ell, int n);

/// Berred's B2 from the last ell records R_{n-ell+1}..R_n (in increasing index order).
[[nodiscard]] double berred_b2(std::span<const double> last_records, int ell, int n);

/**
 * @brief The running k+1 largest values of a stream.
 *
 * Holds up to `capacity` values in non-increasing order. push() reports the
 * rank (0-based) the value took on arrival, or nullopt when it fell outside
 * the kept range. Ties with the smallest kept value do not enter.
 */
class TopValues {
public:
    explicit TopValues(std::size_t capacity);

    std::optional<std::size_t> push(double x);

    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
    [[nodiscard]] bool full() const noexcept { return values_.size() == capacity_; }
    /// Smallest kept value once full; values at or below it can never enter.
    [[nodiscard]] std::optional<double> entry_level() const noexcept;

private:
    std::size_t capacity_;
    std::vector<double> values_;
};

/**
 * @brief Hill estimates and Hill effective sampling sizes for several k at once.
 *
 * The effective sampling size for k counts the observations that ranked within
 * the running top-(k+1) when they arrived; the first k+1 always count.
 */
class HillTracker {
public:
    explicit HillTracker(std::vector<int> ks);

    void push(double x);

    [[nodiscard]] const std::vector<int>& ks() const noexcept { return ks_; }
    [[nodiscard]] std::uint64_t seen() const noexcept { return seen_; }
    [[nodiscard]] std::uint64_t ess(std::size_t which) const { return ess_.at(which); }
    [[nodiscard]] bool ready(std::size_t which) const;
    /// Hill estimate for ks()[which]; throws EmptySampleError before k+1 values.
    [[nodiscard]] double estimate(std::size_t which) const;
    /// Level at or below which no future value can change any estimate or ESS.
    [[nodiscard]] std::optional<double> entry_level() const noexcept { return top_.entry_level(); }

private:
    std::vector<int> ks_;
    TopValues top_;
    std::vector<std::uint64_t> ess_;
    std::uint64_t seen_ = 0;
};

}  // namespace geomrec
