#include "geomrec/finance.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <sstream>

#include <json.hpp>

#include "geomrec/errors.hpp"
#include "geomrec/format.hpp"
#include "geomrec/montecarlo.hpp"

namespace geomrec {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

std::string lowercase_trimmed(std::string s) {
    const auto first = s.find_first_not_of(" \t");
    const auto last = s.find_last_not_of(" \t");
    s = first == std::string::npos ? std::string() : s.substr(first, last - first + 1);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

PriceSeries read_price_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError("price CSV is empty");
    }
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
    }
    const auto header = split_csv_line(line);
    std::optional<std::size_t> date_col;
    std::optional<std::size_t> close_col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const auto name = lowercase_trimmed(header[i]);
        if (name == "date" && !date_col) {
            date_col = i;
        } else if (name == "close" && !close_col) {
            close_col = i;
        }
    }
    if (!date_col || !close_col) {
        throw ParseError("price CSV header must contain 'date' and 'close' columns");
    }
    PriceSeries series;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto fields = split_csv_line(line);
        const auto close = *close_col < fields.size() ? parse_double(lowercase_trimmed(fields[*close_col]))
                                                      : std::nullopt;
        if (!close || !std::isfinite(*close)) {
            ++series.skipped_rows;
            continue;
        }
        series.dates.push_back(*date_col < fields.size() ? fields[*date_col] : std::string());
        series.closes.push_back(*close);
    }
    return series;
}

std::vector<double> standardize(std::span<const double> values) {
    if (values.size() < 2) {
        throw InsufficientDataError("standardization needs at least 2 values");
    }
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mean) * (v - mean);
    }
    const double sd = std::sqrt(ss / (n - 1.0));
    if (!(sd > 0.0)) {
        throw DegenerateSampleError("constant series has zero standard deviation");
    }
    std::vector<double> out;
    out.reserve(values.size());
    for (double v : values) {
        out.push_back((v - mean) / sd);
    }
    return out;
}

ReturnSeries prices_to_returns(std::span<const double> prices, std::span<const std::string> dates) {
    if (prices.size() < 3) {
        throw ParameterError("need at least 3 prices, got " + std::to_string(prices.size()));
    }
    for (double p : prices) {
        if (!(p > 0.0) || !std::isfinite(p)) {
            throw DomainError("prices must be positive and finite, got " + format_double(p));
        }
    }
    ReturnSeries out;
    out.y.reserve(prices.size() - 1);
    for (std::size_t i = 1; i < prices.size(); ++i) {
        out.y.push_back(std::log(prices[i]) - std::log(prices[i - 1]));
        if (dates.size() == prices.size()) {
            out.labels.push_back(dates[i]);
        }
    }
    const double n = static_cast<double>(out.y.size());
    double sum = 0.0;
    for (double v : out.y) {
        sum += v;
    }
    out.mean = sum / n;
    double ss = 0.0;
    for (double v : out.y) {
        ss += (v - out.mean) * (v - out.mean);
    }
    out.sd = std::sqrt(ss / (n - 1.0));
    const auto z = standardize(out.y);
    out.z_abs.reserve(z.size());
    for (double v : z) {
        out.z_abs.push_back(std::fabs(v));
    }
    return out;
}

std::vector<EsfPoint> esf_points(std::span<const double> values) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    std::vector<EsfPoint> points;
    points.reserve(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double x = sorted[i];
        const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), x);
        if (above == 0 || !(x > 0.0)) {
            continue;
        }
        points.push_back({x, std::log(x), std::log(static_cast<double>(above) / n)});
    }
    return points;
}

EsfFit esf_fit(std::span<const double> values, double threshold) {
    EsfFit fit;
    fit.threshold = threshold;
    fit.points = esf_points(values);
    double sx = 0.0;
    double sy = 0.0;
    std::size_t used = 0;
    for (const auto& p : fit.points) {
        if (p.x >= threshold) {
            sx += p.log_x;
            sy += p.log_esf;
            ++used;
        }
    }
    if (used < 10) {
        throw InsufficientDataError("ESF fit needs at least 10 points at or above the threshold, got " +
                                    std::to_string(used));
    }
    const double mx = sx / static_cast<double>(used);
    const double my = sy / static_cast<double>(used);
    double sxx = 0.0;
    double sxy = 0.0;
    for (const auto& p : fit.points) {
        if (p.x >= threshold) {
            sxx += (p.log_x - mx) * (p.log_x - mx);
            sxy += (p.log_x - mx) * (p.log_esf - my);
        }
    }
    if (!(sxx > 0.0)) {
        throw DegenerateSampleError("all ESF points above the threshold share one x");
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.used = used;
    return fit;
}

std::vector<ScanRow> delta_scan(std::span<const double> values, std::span<const double> delta_grid, int m,
                                double threshold, double alpha, unsigned threads) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ParameterError("alpha must lie in (0,1)");
    }
    std::vector<GeomRecordParams> params;
    params.reserve(delta_grid.size());
    for (double d : delta_grid) {
        params.emplace_back(d, m, threshold);
    }
    std::vector<ScanRow> rows(delta_grid.size());
    parallel_for(rows.size(), threads, [&](std::size_t i) {
        Extractor extractor(params[i]);
        for (double x : values) {
            if (x > 0.0) {
                extractor.push(x);
            } else if (std::isnan(x)) {
                throw DomainError("NaN in delta-scan input");
            } else {
                extractor.skip_below_threshold(1);
            }
        }
        rows[i].delta = delta_grid[i];
        rows[i].n_blocks = extractor.running_totals().n;
        try {
            rows[i].report = with_confidence_interval(mle_practical(extractor.sample()), params[i], alpha);
        } catch (const MleNonexistenceError&) {
        } catch (const EmptySampleError&) {
        }
    });
    return rows;
}

std::string esf_points_to_csv(const std::vector<EsfPoint>& points) {
    std::ostringstream out;
    out << "log_x,log_esf\n";
    for (const auto& p : points) {
        out << format_double(p.log_x) << ',' << format_double(p.log_esf) << '\n';
    }
    return out.str();
}

std::string esf_fit_to_json(const EsfFit& fit, int indent) {
    nlohmann::ordered_json j;
    j["threshold"] = fit.threshold;
    j["slope"] = fit.slope;
    j["intercept"] = fit.intercept;
    return j.dump(indent);
}

std::string scan_to_csv(const std::vector<ScanRow>& rows) {
    std::ostringstream out;
    out << "delta,gamma_hat,ci_low,ci_high,n_blocks\n";
    for (const auto& r : rows) {
        out << format_double(r.delta) << ',';
        if (r.report) {
            out << format_double(r.report->gamma_hat) << ',' << format_double(r.report->ci->low) << ','
                << format_double(r.report->ci->high);
        } else {
            out << ",,";
        }
        out << ',' << r.n_blocks << '\n';
    }
    return out.str();
}

}  // namespace geomrec
