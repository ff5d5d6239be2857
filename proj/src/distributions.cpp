#include "geomrec/distributions.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "geomrec/errors.hpp"
#include "geomrec/format.hpp"

namespace geomrec {

namespace {

std::uint32_t low32(std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); }
std::uint32_t high32(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

std::mt19937_64 seeded_engine(std::uint64_t master_seed, std::uint64_t stream) {
    std::seed_seq seq{low32(master_seed), high32(master_seed), low32(stream), high32(stream), 0x9e3779b9u};
    return std::mt19937_64(seq);
}

}  // namespace

Rng::Rng(std::uint64_t master_seed, std::uint64_t stream) : engine_(seeded_engine(master_seed, stream)) {}

double Rng::uniform() {
    // 53 random bits, shifted by half an ulp so neither 0 nor 1 can occur.
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
    if (spare_normal_) {
        const double z = *spare_normal_;
        spare_normal_.reset();
        return z;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_normal_ = radius * std::sin(angle);
    return radius * std::cos(angle);
}

double Rng::gamma(double shape) {
    if (!(shape > 0.0)) {
        throw ParameterError("gamma shape must be positive");
    }
    if (shape < 1.0) {
        return gamma(shape + 1.0) * std::pow(uniform(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        const double x = normal();
        const double t = 1.0 + c * x;
        if (t <= 0.0) {
            continue;
        }
        const double v = t * t * t;
        if (std::log(uniform()) < 0.5 * x * x + d - d * v + d * std::log(v)) {
            return d * v;
        }
    }
}

ParentDistribution::ParentDistribution(DistKind kind, double gamma, double second)
    : kind_(kind), gamma_(gamma), second_(second) {
    if (!(gamma > 0.0) || !std::isfinite(gamma) || !(second > 0.0) || !std::isfinite(second)) {
        throw ParameterError("distribution parameters must be positive and finite");
    }
}

ParentDistribution ParentDistribution::parse(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) {
        throw ParseError("distribution must look like kind:params, got '" + std::string(text) + "'");
    }
    const std::string_view kind = text.substr(0, colon);
    std::vector<double> args;
    try {
        args = parse_grid(text.substr(colon + 1));
    } catch (const ParseError&) {
        throw ParseError("bad distribution parameters in '" + std::string(text) + "'");
    }
    auto need = [&](std::size_t lo, std::size_t hi) {
        if (args.size() < lo || args.size() > hi) {
            throw ParseError("wrong number of parameters for '" + std::string(kind) + "'");
        }
    };
    if (kind == "pareto") {
        need(1, 2);
        return {DistKind::pareto, args[0], args.size() == 2 ? args[1] : 1.0};
    }
    if (kind == "frechet") {
        need(1, 1);
        return {DistKind::frechet, args[0]};
    }
    if (kind == "loglogistic" || kind == "log-logistic") {
        need(1, 1);
        return {DistKind::loglogistic, args[0]};
    }
    if (kind == "burr12" || kind == "burr") {
        need(2, 2);
        return {DistKind::burr12, args[0], args[1]};
    }
    if (kind == "dagum") {
        need(2, 2);
        return {DistKind::dagum, args[0], args[1]};
    }
    if (kind == "student" || kind == "abs_student_t" || kind == "t") {
        need(1, 1);
        return {DistKind::abs_student_t, args[0]};
    }
    throw ParseError("unknown distribution kind '" + std::string(kind) + "'");
}

std::string ParentDistribution::name() const {
    const std::string g = format_double(gamma_);
    switch (kind_) {
        case DistKind::pareto: return "pareto:" + g + "," + format_double(second_);
        case DistKind::frechet: return "frechet:" + g;
        case DistKind::loglogistic: return "loglogistic:" + g;
        case DistKind::burr12: return "burr12:" + g + "," + format_double(second_);
        case DistKind::dagum: return "dagum:" + g + "," + format_double(second_);
        case DistKind::abs_student_t: return "student:" + g;
    }
    return "unknown";
}

double ParentDistribution::survival(double x) const {
    if (std::isnan(x)) {
        throw DomainError("survival of NaN");
    }
    if (x <= 0.0) {
        return 1.0;
    }
    switch (kind_) {
        case DistKind::pareto:
            return x <= second_ ? 1.0 : std::pow(x / second_, -gamma_);
        case DistKind::frechet:
            return -std::expm1(-std::pow(x, -gamma_));
        case DistKind::loglogistic:
            return 1.0 / (1.0 + std::pow(x, gamma_));
        case DistKind::burr12:
            return std::exp(-second_ * std::log1p(std::pow(x, gamma_ / second_)));
        case DistKind::dagum:
            return -std::expm1(-second_ * std::log1p(std::pow(x, -gamma_)));
        case DistKind::abs_student_t: {
            const boost::math::students_t_distribution<double> t(gamma_);
            return 2.0 * boost::math::cdf(boost::math::complement(t, x));
        }
    }
    return 1.0;
}

double ParentDistribution::cdf(double x) const {
    if (x <= 0.0) {
        return 0.0;
    }
    switch (kind_) {
        case DistKind::frechet:
            return std::exp(-std::pow(x, -gamma_));
        case DistKind::loglogistic:
            return 1.0 / (1.0 + std::pow(x, -gamma_));
        case DistKind::dagum:
            return std::exp(-second_ * std::log1p(std::pow(x, -gamma_)));
        case DistKind::abs_student_t: {
            const boost::math::students_t_distribution<double> t(gamma_);
            return 1.0 - 2.0 * boost::math::cdf(boost::math::complement(t, x));
        }
        default:
            return 1.0 - survival(x);
    }
}

double ParentDistribution::inverse_survival(double s) const {
    if (!(s > 0.0 && s <= 1.0)) {
        throw DomainError("inverse_survival needs s in (0,1], got " + format_double(s));
    }
    switch (kind_) {
        case DistKind::pareto:
            return second_ * std::pow(s, -1.0 / gamma_);
        case DistKind::frechet:
            return std::pow(-std::log1p(-s), -1.0 / gamma_);
        case DistKind::loglogistic:
            return std::pow((1.0 - s) / s, 1.0 / gamma_);
        case DistKind::burr12:
            return std::pow(std::expm1(-std::log(s) / second_), second_ / gamma_);
        case DistKind::dagum:
            return std::pow(std::expm1(-std::log1p(-s) / second_), -1.0 / gamma_);
        case DistKind::abs_student_t: {
            const boost::math::students_t_distribution<double> t(gamma_);
            return boost::math::quantile(boost::math::complement(t, 0.5 * s));
        }
    }
    return 0.0;
}

double ParentDistribution::sample(Rng& rng) const {
    if (kind_ == DistKind::abs_student_t) {
        const double z = rng.normal();
        const double chi2 = 2.0 * rng.gamma(0.5 * gamma_);
        return std::fabs(z / std::sqrt(chi2 / gamma_));
    }
    return inverse_survival(rng.uniform());
}

double ParentDistribution::sample_above(double level, Rng& rng) const {
    const double tail = survival(level);
    if (tail >= 1.0) {
        return sample(rng);
    }
    if (!(tail > 0.0)) {
        throw DomainError("survival underflows at level " + format_double(level));
    }
    const double x = inverse_survival(rng.uniform() * tail);
    // Rounding in the inversion can land a hair below the level.
    return x > level ? x : std::nextafter(level, std::numeric_limits<double>::infinity());
}

std::uint64_t geom_star(double p, Rng& rng) {
    if (!(p > 0.0 && p <= 1.0)) {
        throw ParameterError("Geom* needs 0 < p <= 1, got " + format_double(p));
    }
    if (p == 1.0) {
        return 0;
    }
    const double draw = std::floor(std::log(rng.uniform()) / std::log1p(-p));
    if (!(draw < 1.8e19)) {
        return std::numeric_limits<std::uint64_t>::max();
    }
    return static_cast<std::uint64_t>(draw);
}

void validate(const TruncatedGeometric& law) {
    if (!(law.p > 0.0 && law.p < 1.0) || law.n < 0) {
        throw ParameterError("truncated geometric needs 0 < p < 1 and n >= 0");
    }
}

double trunc_geom_pmf(const TruncatedGeometric& law, int k) {
    validate(law);
    if (k < 0 || k > law.n) {
        return 0.0;
    }
    const double log_q = std::log1p(-law.p);
    const double mass = -std::expm1((law.n + 1) * log_q);
    return law.p * std::exp(k * log_q) / mass;
}

int trunc_geom(const TruncatedGeometric& law, Rng& rng) {
    validate(law);
    if (law.n == 0) {
        return 0;
    }
    const double log_q = std::log1p(-law.p);
    const double mass = -std::expm1((law.n + 1) * log_q);
    // P(X <= k) = (1 - q^(k+1)) / mass; solve for the smallest k reaching u.
    const double u = rng.uniform();
    const double k = std::ceil(std::log1p(-u * mass) / log_q) - 1.0;
    if (k <= 0.0) {
        return 0;
    }
    return k >= law.n ? law.n : static_cast<int>(k);
}

Moments trunc_geom_moments(const TruncatedGeometric& law) {
    validate(law);
    if (law.n == 0) {
        return {0.0, 0.0};
    }
    const double p = law.p;
    const double np1 = static_cast<double>(law.n) + 1.0;
    const double q_n1 = std::exp(np1 * std::log1p(-p));
    const double mass = -std::expm1(np1 * std::log1p(-p));
    const double mean = (1.0 - p) / p - np1 * q_n1 / mass;
    const double variance = (1.0 - p) / (p * p) - np1 * np1 * q_n1 / (mass * mass);
    return {mean, variance};
}

BlockMoments theoretical_moments(double gamma, double delta, int m) {
    if (!(gamma > 0.0)) {
        throw DomainError("theoretical moments need gamma > 0");
    }
    const GeomRecordParams check(delta, m, 0.0);
    const double md = static_cast<double>(m);
    const double delta_g = std::pow(delta, gamma);
    const double beta = std::pow(delta, gamma / md);
    const double one_minus_beta = -std::expm1(gamma / md * std::log(delta));
    const double tail = std::pow(delta, gamma * (1.0 - 1.0 / md));
    BlockMoments out{};
    out.e_s = (1.0 - delta_g) / delta_g;
    out.e_k = beta / one_minus_beta;
    out.e_sum_v = (1.0 - delta_g) / (one_minus_beta * tail) - md;
    out.var_u = 1.0 / (one_minus_beta * one_minus_beta * tail);
    return out;
}

RecordBlock direct_generate_block(double gamma, const GeomRecordParams& params, Rng& rng, double previous_record) {
    if (!(gamma > 0.0)) {
        throw ParameterError("direct generation needs gamma > 0");
    }
    const double md = static_cast<double>(params.m());
    const double log_delta = std::log(params.delta());
    const double success = -std::expm1(gamma / md * log_delta);
    const double delta_g = std::exp(gamma * log_delta);

    RecordBlock block;
    block.k_index = static_cast<long>(geom_star(success, rng));
    const auto s = geom_star(delta_g, rng);
    const TruncatedGeometric v_law{success, params.m() - 1};
    block.v_indices.reserve(static_cast<std::size_t>(s));
    for (std::uint64_t i = 0; i < s; ++i) {
        block.v_indices.push_back(trunc_geom(v_law, rng));
    }
    // Ratio within (a^K, a^(K+1)]: Pareto(gamma) on (1, a] after scaling.
    const double a_neg_g = std::exp(-gamma * params.log_ratio());
    const double t = std::pow(a_neg_g + rng.uniform() * (1.0 - a_neg_g), -1.0 / gamma);
    block.record_value = previous_record * std::exp(static_cast<double>(block.k_index) * params.log_ratio()) * t;
    block.complete = true;
    return block;
}

GeometricRecordSample direct_generate_sample(double gamma, const GeomRecordParams& params, std::uint64_t n_blocks,
                                             Rng& rng) {
    GeometricRecordSample sample{params, {}, 0, n_blocks > 0};
    sample.blocks.reserve(static_cast<std::size_t>(n_blocks));
    double previous = params.threshold() > 0.0 ? params.threshold() : 1.0;
    for (std::uint64_t i = 0; i < n_blocks; ++i) {
        sample.blocks.push_back(direct_generate_block(gamma, params, rng, previous));
        previous = sample.blocks.back().record_value;
    }
    return sample;
}

}  // namespace geomrec
