#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "geomrec/distributions.hpp"
#include "geomrec/errors.hpp"
#include "oracles.hpp"

using namespace geomrec;

namespace {

double empirical_survival(const ParentDistribution& dist, double x, int draws, Rng& rng) {
    int above = 0;
    for (int i = 0; i < draws; ++i) above += dist.sample(rng) > x;
    return static_cast<double>(above) / draws;
}

std::vector<double> geom_probs(double p, std::size_t cells) {
    std::vector<double> probs;
    double rest = 1.0;
    for (std::size_t k = 0; k + 1 < cells; ++k) {
        probs.push_back(rest * p);
        rest *= 1 - p;
    }
    probs.push_back(rest);
    return probs;
}

}  // namespace

TEST_CASE("rng streams are reproducible and distinct") {
    Rng a(1, 2), b(1, 2), c(1, 3), d(2, 2);
    for (int i = 0; i < 100; ++i) {
        const double x = a.uniform();
        CHECK(x == b.uniform());
        CHECK(x > 0.0);
        CHECK(x < 1.0);
    }
    Rng a2(1, 2);
    CHECK(a2.bits() != c.bits());
    Rng a3(1, 2);
    CHECK(a3.bits() != d.bits());
}

TEST_CASE("rng normal and gamma moments") {
    Rng rng(8, 8);
    std::vector<double> z(200000), g(200000), h(200000);
    for (auto& x : z) x = rng.normal();
    for (auto& x : g) x = rng.gamma(3.0);
    for (auto& x : h) x = rng.gamma(0.5);
    CHECK(std::fabs(oracle::mean(z)) < 0.01);
    CHECK(oracle::variance(z) == doctest::Approx(1.0).epsilon(0.01));
    CHECK(oracle::mean(g) == doctest::Approx(3.0).epsilon(0.01));
    CHECK(oracle::variance(g) == doctest::Approx(3.0).epsilon(0.02));
    CHECK(oracle::mean(h) == doctest::Approx(0.5).epsilon(0.02));
    CHECK(oracle::variance(h) == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("parse and name") {
    CHECK(ParentDistribution::parse("pareto:2,1").name() == "pareto:2,1");
    CHECK(ParentDistribution::parse("pareto:2").name() == "pareto:2,1");
    CHECK(ParentDistribution::parse("frechet:3").kind() == DistKind::frechet);
    CHECK(ParentDistribution::parse("loglogistic:2").tail_index() == 2.0);
    CHECK(ParentDistribution::parse("burr12:2,0.5").second_parameter() == 0.5);
    CHECK(ParentDistribution::parse("dagum:2,3").kind() == DistKind::dagum);
    CHECK(ParentDistribution::parse("student:3").kind() == DistKind::abs_student_t);
    CHECK_THROWS_AS(ParentDistribution::parse("normal:1"), ParseError);
    CHECK_THROWS_AS(ParentDistribution::parse("pareto"), ParseError);
    CHECK_THROWS_AS(ParentDistribution::parse("pareto:x"), ParseError);
    CHECK_THROWS_AS(ParentDistribution::parse("frechet:1,2"), ParseError);
    CHECK_THROWS_AS(ParentDistribution::parse("pareto:-1"), ParameterError);
}

TEST_CASE("closed-form survival functions") {
    CHECK(ParentDistribution(DistKind::pareto, 2.0, 3.0).survival(6.0) == doctest::Approx(0.25));
    CHECK(ParentDistribution(DistKind::pareto, 2.0, 3.0).survival(1.0) == 1.0);
    CHECK(ParentDistribution(DistKind::frechet, 1.0).survival(10.0) == doctest::Approx(1 - std::exp(-0.1)));
    CHECK(ParentDistribution(DistKind::loglogistic, 3.0).survival(2.0) == doctest::Approx(1.0 / 9.0));
    CHECK(ParentDistribution(DistKind::burr12, 2.0, 0.5).survival(4.0) == doctest::Approx(std::pow(1 + 256.0, -0.5)));
    CHECK(ParentDistribution(DistKind::dagum, 2.0, 3.0).survival(2.0) ==
          doctest::Approx(1 - std::pow(1 + 0.25, -3.0)));
    const boost::math::students_t t3(3.0);
    CHECK(ParentDistribution(DistKind::abs_student_t, 3.0).survival(2.5) ==
          doctest::Approx(2 * boost::math::cdf(boost::math::complement(t3, 2.5))));
}

TEST_CASE("inverse survival round-trips") {
    for (const char* text : {"pareto:2,1", "frechet:1", "loglogistic:3", "burr12:2,0.5", "dagum:2,3", "student:3"}) {
        const auto dist = ParentDistribution::parse(text);
        for (double s : {0.9, 0.5, 0.1, 1e-3, 1e-8}) {
            CHECK(dist.survival(dist.inverse_survival(s)) == doctest::Approx(s).epsilon(1e-7));
        }
    }
    CHECK(ParentDistribution(DistKind::pareto, 2.0, 1.5).inverse_survival(1.0) == 1.5);
    CHECK_THROWS_AS((void)ParentDistribution(DistKind::pareto, 2.0).inverse_survival(0.0), DomainError);
}

TEST_CASE("empirical survival at x = 10") {
    Rng rng(123, 0);
    CHECK(std::fabs(empirical_survival(ParentDistribution(DistKind::pareto, 2.0), 10.0, 1000000, rng) - 0.01) <
          0.0005);
    CHECK(std::fabs(empirical_survival(ParentDistribution(DistKind::frechet, 1.0), 10.0, 1000000, rng) -
                    (1 - std::exp(-0.1))) < 0.001);
}

TEST_CASE("every sampler stays inside DKW bands at five quantiles") {
    const std::size_t n = 100000;
    const double eps = oracle::dkw_epsilon(n, 0.001);
    std::uint64_t stream = 0;
    for (const char* text : {"pareto:2,1", "pareto:0.5,3", "frechet:1", "loglogistic:3", "burr12:2,0.5",
                             "dagum:2,3", "student:3"}) {
        const auto dist = ParentDistribution::parse(text);
        Rng rng(555, stream++);
        std::vector<double> xs(n);
        for (double& x : xs) x = dist.sample(rng);
        std::sort(xs.begin(), xs.end());
        for (double q : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            const double x = dist.inverse_survival(1 - q);
            const double f = static_cast<double>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) / n;
            INFO(text << " q=" << q);
            CHECK(std::fabs(f - dist.cdf(x)) < eps);
        }
    }
}

TEST_CASE("sample_above follows the conditional law") {
    const ParentDistribution dist(DistKind::loglogistic, 3.0);
    const double level = 4.0;
    Rng rng(6, 6);
    const std::size_t n = 100000;
    std::vector<double> xs(n);
    for (double& x : xs) {
        x = dist.sample_above(level, rng);
        REQUIRE(x > level);
    }
    std::sort(xs.begin(), xs.end());
    const double s0 = dist.survival(level);
    for (double mult : {1.1, 1.5, 2.0, 4.0}) {
        const double x = level * mult;
        const double f = static_cast<double>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) / n;
        CHECK(std::fabs(f - (1 - dist.survival(x) / s0)) < oracle::dkw_epsilon(n, 0.001));
    }
    CHECK(ParentDistribution(DistKind::pareto, 2.0).sample_above(1e100, rng) > 1e100);
}

TEST_CASE("Geom* law") {
    Rng rng(9, 9);
    const double p = 0.3;
    std::vector<double> counts(12, 0.0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) counts[std::min<std::uint64_t>(geom_star(p, rng), 11)] += 1;
    auto probs = geom_probs(p, 12);
    for (auto& e : probs) e *= n;
    CHECK(oracle::chi2_gof_pvalue(counts, probs) > 0.01);
    CHECK(geom_star(1.0, rng) == 0);
    CHECK_THROWS_AS((void)geom_star(0.0, rng), ParameterError);
}

TEST_CASE("truncated geometric moments against brute force") {
    CHECK(trunc_geom_moments({0.3, 0}).mean == 0.0);
    CHECK(trunc_geom_moments({0.3, 0}).variance == 0.0);
    const auto small = trunc_geom_moments({0.3, 4});
    const auto brute = oracle::brute_trunc_geom(0.3L, 4);
    CHECK(std::fabs(small.mean - static_cast<double>(brute.mean)) < 1e-12);
    CHECK(std::fabs(small.variance - static_cast<double>(brute.variance)) < 1e-12);
    CHECK(std::fabs(trunc_geom_moments({0.3, 200}).mean - 0.7 / 0.3) < 1e-10);

    for (int pi = 1; pi <= 19; ++pi) {
        const double p = pi * 0.05;
        for (int n = 0; n <= 50; ++n) {
            const auto got = trunc_geom_moments({p, n});
            const auto want = oracle::brute_trunc_geom(p, n);
            const auto rel = [](double a, long double b) {
                return b == 0 ? std::fabs(a) : static_cast<double>(std::fabs(a - b) / std::fabs(b));
            };
            INFO("p=" << p << " n=" << n);
            CHECK(rel(got.mean, want.mean) < 1e-10);
            CHECK(rel(got.variance, want.variance) < 1e-10);
        }
    }
    CHECK_THROWS_AS(validate({0.0, 3}), ParameterError);
    CHECK_THROWS_AS(validate({0.5, -1}), ParameterError);
}

TEST_CASE("truncated geometric sampler") {
    const TruncatedGeometric law{0.35, 6};
    Rng rng(12, 0);
    std::vector<double> counts(7, 0.0), expected(7);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const int k = trunc_geom(law, rng);
        REQUIRE(k >= 0);
        REQUIRE(k <= 6);
        counts[k] += 1;
    }
    double total = 0;
    for (int k = 0; k <= 6; ++k) {
        expected[k] = trunc_geom_pmf(law, k) * n;
        total += trunc_geom_pmf(law, k);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(oracle::chi2_gof_pvalue(counts, expected) > 0.01);
}

TEST_CASE("theoretical moments formulas") {
    const double g = 2.0, d = 0.5;
    const int m = 5;
    const auto mo = theoretical_moments(g, d, m);
    const double beta = std::pow(d, g / m);
    CHECK(mo.e_s == doctest::Approx((1 - std::pow(d, g)) / std::pow(d, g)));
    CHECK(mo.e_k == doctest::Approx(beta / (1 - beta)));
    // E sumV = E S * E V with V truncated geometric on {0..m-1}
    CHECK(mo.e_sum_v == doctest::Approx(mo.e_s * trunc_geom_moments({1 - beta, m - 1}).mean).epsilon(1e-12));

    for (int big : {100, 1000, 10000}) {
        const auto t = theoretical_moments(1.0, 0.5, big);
        const long double b = std::pow(0.5L, 1.0L / big);
        const long double direct = 0.5L / ((1 - b) * std::pow(0.5L, 1.0L - 1.0L / big));
        CHECK(t.e_sum_v + big == doctest::Approx(static_cast<double>(direct)).epsilon(1e-9));
    }
}

TEST_CASE("direct-generated blocks match the theoretical moments") {
    const double g = 2.0, d = 0.5;
    const int m = 5;
    const GeomRecordParams params(d, m, 1.0);
    const auto mo = theoretical_moments(g, d, m);
    const double c = std::pow(d, g / m) / (1 - std::pow(d, g / m));
    Rng rng(31, 0);
    const int n = 1000000;
    std::vector<double> s(n), k(n), v(n), u(n);
    int s_zero = 0;
    for (int i = 0; i < n; ++i) {
        const auto b = direct_generate_block(g, params, rng);
        s[i] = static_cast<double>(b.near_record_count());
        k[i] = static_cast<double>(b.k_index);
        v[i] = static_cast<double>(b.v_sum());
        u[i] = v[i] - c * s[i] + k[i];
        s_zero += b.near_record_count() == 0;
        for (int vi : b.v_indices) REQUIRE((vi >= 0 && vi < m));
    }
    const auto se = [n](const std::vector<double>& x) { return std::sqrt(oracle::variance(x) / n); };
    CHECK(std::fabs(oracle::mean(s) - mo.e_s) < 3 * se(s));
    CHECK(std::fabs(oracle::mean(k) - mo.e_k) < 3 * se(k));
    CHECK(std::fabs(oracle::mean(v) - mo.e_sum_v) < 3 * se(v));
    CHECK(oracle::variance(u) == doctest::Approx(mo.var_u).epsilon(0.01));

    const double p0 = std::pow(d, g);
    CHECK(std::fabs(static_cast<double>(s_zero) / n - p0) < 3 * std::sqrt(p0 * (1 - p0) / n));
}

TEST_CASE("near-records vanish as delta^gamma tends to 1") {
    const GeomRecordParams params(0.9, 5, 1.0);
    Rng rng(1, 1);
    const int n = 100000;
    for (double gamma : {0.05, 50.0}) {
        int with_near = 0;
        for (int i = 0; i < n; ++i) with_near += direct_generate_block(gamma, params, rng).near_record_count() > 0;
        const double p = 1 - std::pow(0.9, gamma);
        CHECK(std::fabs(static_cast<double>(with_near) / n - p) < 3 * std::sqrt(p * (1 - p) / n) + 1e-9);
        if (gamma < 1) CHECK(static_cast<double>(with_near) / n < 0.01);
    }
}

TEST_CASE("direct-generated record values respect the bin of K") {
    const GeomRecordParams params(0.4, 5, 1.0);
    Rng rng(2, 2);
    for (int i = 0; i < 10000; ++i) {
        const auto b = direct_generate_block(1.5, params, rng, 3.0);
        CHECK(params.bin_index(b.record_value / 3.0) == b.k_index);
    }
    const auto s = direct_generate_sample(1.5, GeomRecordParams(0.4, 5, 2.0), 20, rng);
    CHECK(s.blocks.size() == 20);
    CHECK(s.complete_block_count() == 20);
    for (std::size_t i = 1; i < s.blocks.size(); ++i) CHECK(s.blocks[i].record_value > s.blocks[i - 1].record_value);
}
