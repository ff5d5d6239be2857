#include "geomrec/estimators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>

#include <json.hpp>

#include "geomrec/errors.hpp"
#include "geomrec/format.hpp"

namespace geomrec {

std::string to_string(MleVariant variant) {
    return variant == MleVariant::complete ? "complete" : "practical";
}

MleVariant parse_variant(std::string_view text) {
    if (text == "complete") {
        return MleVariant::complete;
    }
    if (text == "practical") {
        return MleVariant::practical;
    }
    throw ParameterError("variant must be 'complete' or 'practical', got '" + std::string(text) + "'");
}

std::string report_to_json(const EstimateReport& report, int indent) {
    nlohmann::ordered_json j;
    j["gamma_hat"] = report.gamma_hat;
    j["sigma_hat"] = report.sigma_hat ? nlohmann::ordered_json(*report.sigma_hat) : nullptr;
    if (report.ci) {
        j["ci"] = {report.ci->low, report.ci->high};
    } else {
        j["ci"] = nullptr;
    }
    j["alpha"] = report.alpha ? nlohmann::ordered_json(*report.alpha) : nullptr;
    j["n_blocks"] = report.n_blocks;
    j["ess"] = report.effective_sampling_size;
    j["variant"] = to_string(report.variant);
    return j.dump(indent);
}

double beta_hat_complete(const BlockTotals& t, int m) {
    if (t.n == 0) {
        throw EmptySampleError("complete-block MLE needs at least one closed block");
    }
    const double md = static_cast<double>(m);
    const double n = static_cast<double>(t.n);
    const double shared = static_cast<double>(t.sum_v) + static_cast<double>(t.sum_k);
    const double num = md * n + shared;
    const double den = (md + 1.0) * n + shared + static_cast<double>(t.sum_s);
    return num / den;
}

double beta_hat_practical(const BlockTotals& t, int m) {
    if (t.n == 0) {
        throw EmptySampleError("practical MLE needs at least one block");
    }
    if (t.n == 1 && t.sum_v + t.sum_k == 0) {
        throw MleNonexistenceError("MLE does not exist: single block with V-sum + K_1 = 0");
    }
    const double md = static_cast<double>(m);
    const double n = static_cast<double>(t.n);
    const double shared = static_cast<double>(t.sum_v) + static_cast<double>(t.sum_k);
    const double num = md * (n - 1.0) + shared;
    const double den = (md + 1.0) * n - md + shared + static_cast<double>(t.sum_s);
    return num / den;
}

double gamma_from_beta(double beta, double delta, int m) {
    return static_cast<double>(m) * std::log(beta) / std::log(delta);
}

namespace {

EstimateReport make_report(double beta, const BlockTotals& t, const GeomRecordParams& p, MleVariant variant) {
    EstimateReport r;
    r.gamma_hat = gamma_from_beta(beta, p.delta(), p.m());
    r.sigma_hat = asymptotic_sd(r.gamma_hat, p.delta(), p.m());
    r.n_blocks = t.n;
    r.effective_sampling_size = t.geometric_records();
    r.variant = variant;
    return r;
}

}  // namespace

EstimateReport mle_complete(const GeometricRecordSample& sample) {
    const auto t = totals_of(sample.complete_blocks());
    return make_report(beta_hat_complete(t, sample.params.m()), t, sample.params, MleVariant::complete);
}

EstimateReport mle_practical(const GeometricRecordSample& sample) {
    const auto t = totals_of(sample.blocks);
    return make_report(beta_hat_practical(t, sample.params.m()), t, sample.params, MleVariant::practical);
}

double asymptotic_sd(double gamma, double delta, int m) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw DomainError("asymptotic_sd needs gamma > 0, got " + format_double(gamma));
    }
    if (!(delta > 0.0 && delta < 1.0) || m < 2) {
        throw ParameterError("asymptotic_sd needs 0 < delta < 1 and m >= 2");
    }
    const double md = static_cast<double>(m);
    const double log_delta = std::log(delta);
    // 1 - delta^(gamma/m) via expm1 for accuracy when gamma/m is small.
    const double one_minus_beta = -std::expm1(gamma / md * log_delta);
    const double tail = std::exp(0.5 * gamma * (1.0 - 1.0 / md) * log_delta);
    return md * one_minus_beta * tail / (-log_delta);
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("normal_quantile needs 0 < p < 1, got " + format_double(p));
    }
    // Acklam's rational approximation (relative error ~1.2e-9) ...
    static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02,
                                             -2.759285104469687e+02, 1.383577518672690e+02,
                                             -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02,
                                             -1.556989798598866e+02, 6.680131188771972e+01,
                                             -1.328068155288572e+01};
    static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01,
                                             -2.400758277161838e+00, -2.549732539343734e+00,
                                             4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01,
                                             2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x = 0.0;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // ... refined by one Halley step on the erfc-based CDF.
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

Interval confidence_interval(double gamma_hat, double delta, int m, std::uint64_t n_blocks, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ParameterError("alpha must lie in (0,1), got " + format_double(alpha));
    }
    if (n_blocks == 0) {
        throw EmptySampleError("confidence interval needs n_blocks >= 1");
    }
    const double z = normal_quantile(1.0 - 0.5 * alpha);
    const double half = z * asymptotic_sd(gamma_hat, delta, m) / std::sqrt(static_cast<double>(n_blocks));
    return {gamma_hat - half, gamma_hat + half};
}

EstimateReport with_confidence_interval(EstimateReport report, const GeomRecordParams& params, double alpha) {
    report.ci = confidence_interval(report.gamma_hat, params.delta(), params.m(), report.n_blocks, alpha);
    report.sigma_hat = asymptotic_sd(report.gamma_hat, params.delta(), params.m());
    report.alpha = alpha;
    return report;
}

double hill(std::span<const double> top_values, int k) {
    if (k < 1) {
        throw ParameterError("Hill needs k >= 1");
    }
    if (top_values.size() != static_cast<std::size_t>(k) + 1) {
        throw ParameterError("Hill needs exactly k+1 = " + std::to_string(k + 1) + " top values, got " +
                             std::to_string(top_values.size()));
    }
    for (std::size_t i = 0; i < top_values.size(); ++i) {
        if (!(top_values[i] > 0.0)) {
            throw DomainError("Hill top values must be positive");
        }
        if (i > 0 && top_values[i] > top_values[i - 1]) {
            throw ParameterError("Hill top values must be non-increasing");
        }
    }
    const double base = std::log(top_values[static_cast<std::size_t>(k)]);
    double log_sum = 0.0;
    for (int i = 0; i < k; ++i) {
        log_sum += std::log(top_values[static_cast<std::size_t>(i)]) - base;
    }
    if (!(log_sum > 0.0)) {
        throw DegenerateSampleError("Hill log-sum is zero: all top values equal X_(k+1)");
    }
    return static_cast<double>(k) / log_sum;
}

double berred_b1(std::span<const double> records, int ell, int n) {
    if (ell < 1 || n <= ell) {
        throw ParameterError("Berred B1 needs n > ell >= 1");
    }
    if (records.size() < static_cast<std::size_t>(n)) {
        throw ParameterError("Berred B1 needs at least n = " + std::to_string(n) + " records");
    }
    const double newest = records[static_cast<std::size_t>(n - 1)];
    const double oldest = records[static_cast<std::size_t>(n - ell - 1)];
    if (!(newest > oldest) || !(oldest > 0.0)) {
        throw OrderingError("Berred B1 needs R_n > R_{n-ell} > 0");
    }
    return static_cast<double>(ell) / std::log(newest / oldest);
}

double berred_b2(std::span<const double> last_records, int ell, int n) {
    if (ell < 1 || n < ell) {
        throw ParameterError("Berred B2 needs n >= ell >= 1");
    }
    if (last_records.size() != static_cast<std::size_t>(ell)) {
        throw ParameterError("Berred B2 needs exactly the last ell = " + std::to_string(ell) + " records");
    }
    double log_sum = 0.0;
    for (double r : last_records) {
        if (!(r > 0.0)) {
            throw DomainError("record values must be positive");
        }
        log_sum += std::log(r);
    }
    if (!(log_sum > 0.0)) {
        throw DegenerateSampleError("Berred B2 needs a positive sum of log-records");
    }
    const double ld = static_cast<double>(ell);
    const double coefficient = static_cast<double>(n) * ld - 0.5 * ld * (ld - 1.0);
    return coefficient / log_sum;
}

TopValues::TopValues(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) {
        throw ParameterError("TopValues capacity must be positive");
    }
    values_.reserve(capacity + 1);
}

std::optional<std::size_t> TopValues::push(double x) {
    const auto pos = std::upper_bound(values_.begin(), values_.end(), x, std::greater<>{});
    const auto rank = static_cast<std::size_t>(pos - values_.begin());
    if (rank >= capacity_) {
        return std::nullopt;
    }
    values_.insert(pos, x);
    if (values_.size() > capacity_) {
        values_.pop_back();
    }
    return rank;
}

std::optional<double> TopValues::entry_level() const noexcept {
    if (!full()) {
        return std::nullopt;
    }
    return values_.back();
}

namespace {
std::size_t top_capacity(const std::vector<int>& ks) {
    if (ks.empty()) {
        throw ParameterError("HillTracker needs at least one k");
    }
    const int kmax = *std::max_element(ks.begin(), ks.end());
    if (*std::min_element(ks.begin(), ks.end()) < 1) {
        throw ParameterError("Hill k must be >= 1");
    }
    return static_cast<std::size_t>(kmax) + 1;
}
}  // namespace

HillTracker::HillTracker(std::vector<int> ks)
    : ks_(std::move(ks)), top_(top_capacity(ks_)), ess_(ks_.size(), 0) {}

void HillTracker::push(double x) {
    ++seen_;
    const auto rank = top_.push(x);
    if (!rank) {
        return;
    }
    for (std::size_t i = 0; i < ks_.size(); ++i) {
        if (*rank <= static_cast<std::size_t>(ks_[i])) {
            ++ess_[i];
        }
    }
}

bool HillTracker::ready(std::size_t which) const {
    return top_.size() >= static_cast<std::size_t>(ks_.at(which)) + 1;
}

double HillTracker::estimate(std::size_t which) const {
    const int k = ks_.at(which);
    if (!ready(which)) {
        throw EmptySampleError("Hill needs k+1 = " + std::to_string(k + 1) + " observations");
    }
    return hill(top_.values().first(static_cast<std::size_t>(k) + 1), k);
}

}  // namespace geomrec
