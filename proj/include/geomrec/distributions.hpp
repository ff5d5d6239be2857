#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "geomrec/geomrec_core.hpp"

namespace geomrec {

/**
 * @brief Seedable random stream.
 *
 * Every (master_seed, stream) pair yields its own reproducible sequence, so a
 * replication can be rerun in isolation or on any thread.
 */
class Rng {
public:
    Rng(std::uint64_t master_seed, std::uint64_t stream);

    /// Uniform on the open interval (0, 1).
    double uniform();
    /// Standard normal (Box-Muller, second variate cached).
    double normal();
    /// Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 by the u^(1/shape) boost.
    double gamma(double shape);
    std::uint64_t bits() { return engine_(); }

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_normal_;
};

enum class DistKind { pareto, frechet, loglogistic, burr12, dagum, abs_student_t };

/**
 * @brief Parent distribution with a regularly varying upper tail of index gamma.
 *
 * Survival functions:
 *   pareto(g, D)      (x/D)^-g for x >= D
 *   frechet(g)        1 - exp(-x^-g)
 *   loglogistic(g)    1 / (1 + x^g)
 *   burr12(g, c)      (1 + x^(g/c))^-c
 *   dagum(g, p)       1 - (1 + x^-g)^-p
 *   abs_student_t(g)  |T| with T Student-t on g degrees of freedom
 */
class ParentDistribution {
public:
    /// Throws ParameterError unless every parameter is positive and finite.
    ParentDistribution(DistKind kind, double gamma, double second = 1.0);

    /// "pareto:2,1", "frechet:3", "loglogistic:2", "burr12:2,0.5", "dagum:3,2",
    /// "student:3". Throws ParseError/ParameterError.
    static ParentDistribution parse(std::string_view text);

    [[nodiscard]] DistKind kind() const noexcept { return kind_; }
    [[nodiscard]] double tail_index() const noexcept { return gamma_; }
    [[nodiscard]] double second_parameter() const noexcept { return second_; }
    [[nodiscard]] std::string name() const;

    [[nodiscard]] double survival(double x) const;
    [[nodiscard]] double cdf(double x) const;
    /// x with survival(x) = s, for s in (0, 1].
    [[nodiscard]] double inverse_survival(double s) const;

    [[nodiscard]] double sample(Rng& rng) const;
    /// Draw conditional on X > level.
    [[nodiscard]] double sample_above(double level, Rng& rng) const;

private:
    DistKind kind_;
    double gamma_;
    double second_;
};

/// Geom*(p): failures before the first success, on {0, 1, 2, ...}. Saturates
/// at UINT64_MAX when p underflows.
[[nodiscard]] std::uint64_t geom_star(double p, Rng& rng);

/// Geometric with success p truncated to {0, ..., n}.
struct TruncatedGeometric {
    double p;
    int n;
};

/// Throws ParameterError unless 0 < p < 1 and n >= 0.
void validate(const TruncatedGeometric& law);
[[nodiscard]] double trunc_geom_pmf(const TruncatedGeometric& law, int k);
/// Inversion on the truncated CDF.
[[nodiscard]] int trunc_geom(const TruncatedGeometric& law, Rng& rng);

struct Moments {
    double mean;
    double variance;
};

[[nodiscard]] Moments trunc_geom_moments(const TruncatedGeometric& law);

/// Per-block expectations under a Pareto(gamma) parent.
struct BlockMoments {
    double e_s;
    double e_k;
    double e_sum_v;
    /// Variance of U = sum V - (beta/(1-beta)) S + K, beta = delta^(gamma/m).
    double var_u;
};

[[nodiscard]] BlockMoments theoretical_moments(double gamma, double delta, int m);

/**
 * @brief One block drawn from its exact law under a Pareto(gamma) parent.
 *
 * K ~ Geom*(1 - beta), S ~ Geom*(delta^gamma), V iid truncated geometric on
 * {0..m-1} with success 1 - beta. The record value is previous_record times a
 * ratio drawn from the Pareto jump law restricted to bin K.
 */
[[nodiscard]] RecordBlock direct_generate_block(double gamma, const GeomRecordParams& params, Rng& rng,
                                                double previous_record = 1.0);

/// n_blocks complete blocks starting from R_0 = A (1 when A = 0). raw_count is
/// left at 0: the observations between geometric records are not simulated.
[[nodiscard]] GeometricRecordSample direct_generate_sample(double gamma, const GeomRecordParams& params,
                                                           std::uint64_t n_blocks, Rng& rng);

}  // namespace geomrec
