#include "geomrec/geomrec_core.hpp"

#include <cassert>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <string>

#include <json.hpp>

#include "geomrec/errors.hpp"
#include "geomrec/format.hpp"

namespace geomrec {

namespace {
constexpr long kCachedPowers = 256;
}

GeomRecordParams::GeomRecordParams(double delta, int m, double threshold)
    : delta_(delta), m_(m), threshold_(threshold), ratio_(0.0), log_ratio_(0.0) {
    if (!(delta > 0.0 && delta < 1.0)) {
        throw ParameterError("delta must lie in (0,1), got " + format_double(delta));
    }
    if (m < 2) {
        throw ParameterError("m must be >= 2, got " + std::to_string(m));
    }
    if (!(threshold >= 0.0) || !std::isfinite(threshold)) {
        throw ParameterError("threshold A must be finite and >= 0, got " + format_double(threshold));
    }
    log_ratio_ = -std::log(delta) / static_cast<double>(m);
    ratio_ = std::pow(delta, -1.0 / static_cast<double>(m));
    powers_.reserve(kCachedPowers);
    for (long j = 0; j < kCachedPowers; ++j) {
        powers_.push_back(std::pow(ratio_, static_cast<double>(j)));
    }
}

double GeomRecordParams::ratio_power(long j) const {
    if (j >= 0 && j < kCachedPowers) {
        return powers_[static_cast<std::size_t>(j)];
    }
    return std::pow(ratio_, static_cast<double>(j));
}

long GeomRecordParams::bin_index(double r) const {
    if (!(r > 1.0)) {
        return 0;
    }
    if (std::isinf(r)) {
        return std::numeric_limits<long>::max() / 2;
    }
    long j = static_cast<long>(std::ceil(std::log(r) / log_ratio_)) - 1;
    if (j < 0) {
        j = 0;
    }
    // The logarithm can land on the wrong side of a bin edge; settle against the edges themselves.
    while (j > 0 && r <= ratio_power(j)) {
        --j;
    }
    while (r > ratio_power(j + 1)) {
        ++j;
    }
    return j;
}

long RecordBlock::v_sum() const noexcept {
    return std::accumulate(v_indices.begin(), v_indices.end(), 0L);
}

void BlockTotals::add(const RecordBlock& block) {
    n += 1;
    sum_k += static_cast<std::uint64_t>(block.k_index);
    sum_s += block.near_record_count();
    sum_v += static_cast<std::uint64_t>(block.v_sum());
}

BlockTotals& BlockTotals::operator+=(const BlockTotals& other) {
    n += other.n;
    sum_k += other.sum_k;
    sum_s += other.sum_s;
    sum_v += other.sum_v;
    return *this;
}

BlockTotals totals_of(std::span<const RecordBlock> blocks) {
    BlockTotals t;
    for (const auto& b : blocks) {
        t.add(b);
    }
    return t;
}

std::size_t GeometricRecordSample::complete_block_count() const noexcept {
    std::size_t count = 0;
    while (count < blocks.size() && blocks[count].complete) {
        ++count;
    }
    return count;
}

std::span<const RecordBlock> GeometricRecordSample::complete_blocks() const noexcept {
    return std::span<const RecordBlock>(blocks).first(complete_block_count());
}

std::uint64_t GeometricRecordSample::effective_sampling_size() const noexcept {
    return totals_of(blocks).geometric_records();
}

std::vector<double> GeometricRecordSample::record_values() const {
    std::vector<double> values;
    values.reserve(blocks.size());
    for (const auto& b : blocks) {
        values.push_back(b.record_value);
    }
    return values;
}

std::string to_string(EventKind kind) {
    switch (kind) {
        case EventKind::ignored: return "ignored";
        case EventKind::activated: return "activated";
        case EventKind::new_record: return "new_record";
        case EventKind::near_record: return "near_record";
        case EventKind::below_geometric_threshold: return "below_geometric_threshold";
    }
    return "unknown";
}

Extractor::Extractor(GeomRecordParams params) : sample_{std::move(params), {}, 0, false} {}

PushEvent Extractor::push(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw DomainError("observations must be positive and finite, got " + format_double(x));
    }
    const auto& p = sample_.params;

    if (!sample_.activated) {
        if (!(x > p.threshold())) {
            return {EventKind::ignored, 0};
        }
        // R_0 := A; with A = 0 the first jump carries no information and K_1 := 0.
        const long k = p.threshold() > 0.0 ? p.bin_index(x / p.threshold()) : 0;
        sample_.activated = true;
        sample_.raw_count = 1;
        sample_.blocks.push_back(RecordBlock{x, k, {}, false});
        totals_.add(sample_.blocks.back());
        current_max_ = x;
        return {EventKind::activated, k};
    }

    sample_.raw_count += 1;
    const double record = *current_max_;
    if (x > record) {
        const long k = p.bin_index(x / record);
        sample_.blocks.back().complete = true;
        sample_.blocks.push_back(RecordBlock{x, k, {}, false});
        totals_.n += 1;
        totals_.sum_k += static_cast<std::uint64_t>(k);
        current_max_ = x;
        return {EventKind::new_record, k};
    }

    const double lower = p.delta() * record;
    if (x <= lower) {
        return {EventKind::below_geometric_threshold, 0};
    }
    long v = p.bin_index(x / lower);
    if (v > p.m() - 1) {
        v = p.m() - 1;
    }
    // Reconstruction bound: the observation lies in its subinterval (up to rounding).
    assert(x > p.ratio_power(v) * lower * (1.0 - 1e-12));
    assert(x <= p.ratio_power(v + 1) * lower * (1.0 + 1e-12));
    sample_.blocks.back().v_indices.push_back(static_cast<int>(v));
    totals_.sum_s += 1;
    totals_.sum_v += static_cast<std::uint64_t>(v);
    return {EventKind::near_record, v};
}

void Extractor::skip_below_threshold(std::uint64_t count) noexcept {
    if (sample_.activated) {
        sample_.raw_count += count;
    }
}

GeometricRecordSample Extractor::finalize() const {
    if (!sample_.activated) {
        throw EmptySampleError("no observation exceeded the threshold A = " +
                               format_double(sample_.params.threshold()));
    }
    return sample_;
}

void for_each_observation(std::istream& in, const std::function<void(double)>& sink) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view(line);
        while (!view.empty() && (view.front() == ' ' || view.front() == '\t')) {
            view.remove_prefix(1);
        }
        if (view.empty() || view.front() == '#' || view == "\r") {
            continue;
        }
        const auto value = parse_double(view);
        if (!value) {
            throw ParseError("line " + std::to_string(line_no) + ": not a number: '" + line + "'");
        }
        sink(*value);
    }
    if (in.bad()) {
        throw IoError("read failure after line " + std::to_string(line_no));
    }
}

std::vector<double> read_observations(std::istream& in) {
    std::vector<double> values;
    for_each_observation(in, [&](double x) { values.push_back(x); });
    return values;
}

std::string sample_to_json(const GeometricRecordSample& sample, int indent) {
    nlohmann::ordered_json j;
    j["delta"] = sample.params.delta();
    j["m"] = sample.params.m();
    j["A"] = sample.params.threshold();
    auto blocks = nlohmann::ordered_json::array();
    for (const auto& b : sample.blocks) {
        nlohmann::ordered_json jb;
        jb["r"] = b.record_value;
        jb["k"] = b.k_index;
        jb["s"] = b.near_record_count();
        jb["v"] = b.v_indices;
        jb["complete"] = b.complete;
        blocks.push_back(std::move(jb));
    }
    j["blocks"] = std::move(blocks);
    j["raw_count"] = sample.raw_count;
    return j.dump(indent);
}

}  // namespace geomrec
