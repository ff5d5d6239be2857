#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace geomrec {

/**
 * @brief Validated extraction parameters (delta, m, A) and the derived ratio a = delta^(-1/m).
 *
 * The interval (delta R, R] below a record R is split into m geometric
 * subintervals (a^v delta R, a^(v+1) delta R], v = 0..m-1, and the jump to the
 * next record is binned into (a^k R, a^(k+1) R], k >= 0.
 */
class GeomRecordParams {
public:
    /// Throws ParameterError unless 0 < delta < 1, m >= 2 and threshold >= 0.
    GeomRecordParams(double delta, int m, double threshold);

    [[nodiscard]] double delta() const noexcept { return delta_; }
    [[nodiscard]] int m() const noexcept { return m_; }
    [[nodiscard]] double threshold() const noexcept { return threshold_; }
    /// a = delta^(-1/m) > 1.
    [[nodiscard]] double ratio() const noexcept { return ratio_; }
    [[nodiscard]] double log_ratio() const noexcept { return log_ratio_; }

    /// a^j for j >= 0, cached for small j.
    [[nodiscard]] double ratio_power(long j) const;

    /**
     * Index j >= 0 of the half-open bin (a^j, a^(j+1)] holding r, i.e.
     * ceil(log_a r) - 1 clamped at 0. Exact boundary hits resolve to the lower
     * bin. r <= 1 maps to 0.
     */
    [[nodiscard]] long bin_index(double r) const;

    bool operator==(const GeomRecordParams&) const = default;

private:
    double delta_;
    int m_;
    double threshold_;
    double ratio_;
    double log_ratio_;
    std::vector<double> powers_;
};

/// A record together with its discretized jump index and its near-records.
struct RecordBlock {
    double record_value = 0.0;
    long k_index = 0;                   ///< K_i, bin of R_i / R_{i-1}
    std::vector<int> v_indices;         ///< V_i^1..V_i^{S_i}, each in [0, m-1]
    bool complete = false;              ///< true once the next record closed the block

    [[nodiscard]] std::size_t near_record_count() const noexcept { return v_indices.size(); }
    [[nodiscard]] long v_sum() const noexcept;
};

/// Sufficient statistics of a set of blocks.
struct BlockTotals {
    std::uint64_t n = 0;       ///< blocks
    std::uint64_t sum_k = 0;
    std::uint64_t sum_s = 0;
    std::uint64_t sum_v = 0;

    void add(const RecordBlock& block);
    BlockTotals& operator+=(const BlockTotals& other);
    /// Geometric records represented: n + sum S.
    [[nodiscard]] std::uint64_t geometric_records() const noexcept { return n + sum_s; }
};

[[nodiscard]] BlockTotals totals_of(std::span<const RecordBlock> blocks);

/// The discretized geometric-record sample (K, S, V) organised per record block.
struct GeometricRecordSample {
    GeomRecordParams params;
    std::vector<RecordBlock> blocks;
    std::uint64_t raw_count = 0;  ///< observations consumed since activation (activating one included)
    bool activated = false;

    [[nodiscard]] std::size_t complete_block_count() const noexcept;
    /// Blocks closed by a later record (a prefix of `blocks`).
    [[nodiscard]] std::span<const RecordBlock> complete_blocks() const noexcept;
    /// n + sum S over all blocks: geometric records seen after activation.
    [[nodiscard]] std::uint64_t effective_sampling_size() const noexcept;
    [[nodiscard]] std::vector<double> record_values() const;
};

enum class EventKind { ignored, activated, new_record, near_record, below_geometric_threshold };

struct PushEvent {
    EventKind kind = EventKind::ignored;
    long index = 0;  ///< K for activated/new_record, V for near_record, 0 otherwise

    bool operator==(const PushEvent&) const = default;
};

[[nodiscard]] std::string to_string(EventKind kind);

/**
 * @brief Streaming extractor turning observations into a GeometricRecordSample.
 *
 * Single-writer state machine. Before activation every observation <= A is
 * discarded without being counted; the first observation > A opens block 1
 * with K_1 computed against R_0 := A. Afterwards each observation is a new
 * record (x > R), a geometric near-record (delta R < x <= R) or falls below the
 * geometric threshold (x <= delta R).
 */
class Extractor {
public:
    explicit Extractor(GeomRecordParams params);

    /// Throws DomainError for x <= 0 (or non-finite x).
    PushEvent push(double x);

    /**
     * Account for `count` post-activation observations the caller knows to be
     * at or below delta * current_max. Only raw_count changes. No-op before
     * activation (those observations are discarded anyway).
     */
    void skip_below_threshold(std::uint64_t count) noexcept;

    [[nodiscard]] bool activated() const noexcept { return sample_.activated; }
    [[nodiscard]] std::optional<double> current_max() const noexcept { return current_max_; }
    [[nodiscard]] const GeomRecordParams& params() const noexcept { return sample_.params; }
    /// Sample in progress; the last block is still open.
    [[nodiscard]] const GeometricRecordSample& sample() const noexcept { return sample_; }
    /// Running totals over every block, open one included.
    [[nodiscard]] const BlockTotals& running_totals() const noexcept { return totals_; }

    /// Snapshot of the sample. Throws EmptySampleError before activation.
    [[nodiscard]] GeometricRecordSample finalize() const;

private:
    GeometricRecordSample sample_;
    std::optional<double> current_max_;
    BlockTotals totals_;
};

/// Feed every observation of a text stream (one positive decimal per line,
/// blank lines and '#' comments skipped) to `sink`. Throws ParseError with the
/// line number on malformed lines.
void for_each_observation(std::istream& in, const std::function<void(double)>& sink);

[[nodiscard]] std::vector<double> read_observations(std::istream& in);

/// {delta, m, A, blocks:[{r,k,s,v:[...]}], raw_count}
[[nodiscard]] std::string sample_to_json(const GeometricRecordSample& sample, int indent = -1);

}  // namespace geomrec
