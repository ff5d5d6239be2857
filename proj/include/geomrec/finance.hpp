#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geomrec/estimators.hpp"

namespace geomrec {

struct PriceSeries {
    std::vector<std::string> dates;
    std::vector<double> closes;
    std::size_t skipped_rows = 0;  ///< rows whose close did not parse
};

/// CSV with a header naming `date` and `close` columns (any order, extra columns
/// ignored). Throws ParseError when the header lacks either column.
[[nodiscard]] PriceSeries read_price_csv(std::istream& in);

struct ReturnSeries {
    std::vector<std::string> labels;  ///< date of the later price of each pair
    std::vector<double> y;            ///< log-returns
    std::vector<double> z_abs;        ///< |(y - mean) / sd|
    double mean = 0.0;
    double sd = 0.0;                  ///< n-1 denominator
};

/// (x - mean) / sd with the n-1 sample sd. Throws DegenerateSampleError for sd = 0.
[[nodiscard]] std::vector<double> standardize(std::span<const double> values);

/// Throws ParameterError for fewer than 3 prices, DomainError for a non-positive
/// price, DegenerateSampleError for constant returns.
[[nodiscard]] ReturnSeries prices_to_returns(std::span<const double> prices,
                                             std::span<const std::string> dates = {});

struct EsfPoint {
    double x = 0.0;
    double log_x = 0.0;
    double log_esf = 0.0;
};

/// (x_(i), ln x_(i), ln ESF(x_(i))) with ESF(x) = #{values > x}/n, in increasing
/// x. Points with ESF = 0 or x <= 0 are dropped.
[[nodiscard]] std::vector<EsfPoint> esf_points(std::span<const double> values);

struct EsfFit {
    std::vector<EsfPoint> points;
    double threshold = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
    std::size_t used = 0;  ///< points in the regression
};

/// OLS of ln ESF on ln x over the points with x >= threshold. Throws
/// InsufficientDataError when fewer than 10 points qualify.
[[nodiscard]] EsfFit esf_fit(std::span<const double> values, double threshold);

struct ScanRow {
    double delta = 0.0;
    std::optional<EstimateReport> report;  ///< absent when the MLE does not exist
    std::uint64_t n_blocks = 0;
};

/**
 * @brief Practical MLE with confidence interval for each delta of a grid.
 *
 * Values <= 0 are below every geometric threshold and only counted.
 */
[[nodiscard]] std::vector<ScanRow> delta_scan(std::span<const double> values, std::span<const double> delta_grid,
                                              int m, double threshold, double alpha, unsigned threads = 1);

/// log_x,log_esf
[[nodiscard]] std::string esf_points_to_csv(const std::vector<EsfPoint>& points);
/// {threshold, slope, intercept}
[[nodiscard]] std::string esf_fit_to_json(const EsfFit& fit, int indent = -1);
/// delta,gamma_hat,ci_low,ci_high,n_blocks
[[nodiscard]] std::string scan_to_csv(const std::vector<ScanRow>& rows);

}  // namespace geomrec
