#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "geomrec/distributions.hpp"
#include "geomrec/errors.hpp"
#include "geomrec/estimators.hpp"
#include "geomrec/montecarlo.hpp"
#include "oracles.hpp"

using namespace geomrec;

namespace {

TrialConfig pareto_config(double gamma) {
    TrialConfig c;
    c.dist = ParentDistribution(DistKind::pareto, gamma);
    c.gamma_true = gamma;
    return c;
}

bool same(const TrialResult& a, const TrialResult& b) {
    return a.geometric == b.geometric && a.geometric_ess == b.geometric_ess && a.hill == b.hill &&
           a.hill_ess == b.hill_ess && a.berred_b1 == b.berred_b1 && a.berred_b2 == b.berred_b2 &&
           a.records == b.records && a.raw_count == b.raw_count && a.aborted == b.aborted;
}

}  // namespace

TEST_CASE("single trial") {
    auto config = pareto_config(1.0);
    config.deltas = {0.5};
    const auto t = run_trial(config, 1, 0);
    REQUIRE(t.geometric[0].has_value());
    CHECK(std::isfinite(*t.geometric[0]));
    CHECK(*t.geometric[0] > 0.0);
    CHECK(t.records.size() == 10);
    CHECK(t.records.front() > 5.0);
    CHECK(std::is_sorted(t.records.begin(), t.records.end()));
    CHECK(t.geometric_ess[0] >= 10);
    CHECK(t.hill_ess.size() == 5);
    // every record enters the Hill top list, the closing one included
    CHECK(t.hill_ess[0] >= 11);
    CHECK(t.raw_count >= 10);
}

TEST_CASE("deterministic replay") {
    const auto config = pareto_config(2.0);
    for (std::uint64_t rep : {0u, 7u, 12345u}) {
        CHECK(same(run_trial(config, 42, rep), run_trial(config, 42, rep)));
    }
    CHECK_FALSE(same(run_trial(config, 42, 0), run_trial(config, 42, 1)));
    CHECK_FALSE(same(run_trial(config, 42, 0), run_trial(config, 43, 0)));
}

TEST_CASE("thread count does not change results") {
    const auto config = pareto_config(1.0);
    const auto serial = replicate(config, 300, 9, 1);
    const auto parallel = replicate(config, 300, 9, 4);
    CHECK(summary_to_csv(serial) == summary_to_csv(parallel));
}

TEST_CASE("GEOMREC_THREADS overrides the requested count") {
    ::setenv("GEOMREC_THREADS", "3", 1);
    CHECK(resolve_threads(8) == 3);
    ::unsetenv("GEOMREC_THREADS");
    CHECK(resolve_threads(5) == 5);
    CHECK(resolve_threads(0) >= 1);
}

TEST_CASE("parallel_for covers every index and rethrows") {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    CHECK_THROWS_AS(parallel_for(100, 4,
                                 [](std::size_t i) {
                                     if (i == 50) throw DomainError("boom");
                                 }),
                    DomainError);
}

TEST_CASE("summary statistics") {
    const auto config = pareto_config(2.0);
    const auto summary = replicate(config, 500, 3, 2);
    CHECK(summary.rows.size() == 20);
    CHECK(summary.dist == "pareto:2,1");
    for (const auto& row : summary.rows) {
        REQUIRE(row.estimates.size() == row.reps);
        CHECK(row.reps + row.failures == 500);
        const double mu = oracle::mean(row.estimates);
        double pop_var = 0;
        for (double e : row.estimates) pop_var += (e - mu) * (e - mu);
        pop_var /= static_cast<double>(row.estimates.size());
        CHECK(row.mean == doctest::Approx(mu).epsilon(1e-12));
        CHECK(row.mse == doctest::Approx(pop_var + (mu - 2.0) * (mu - 2.0)).epsilon(1e-10));
        CHECK(row.median_ess.has_value() == (row.estimator == "geometric" || row.estimator == "hill"));
    }
    CHECK(summary.row("hill", 30).param == 30);
    CHECK_THROWS((void)summary.row("hill", 31));

    const auto csv = summary_to_csv(summary);
    CHECK(csv.rfind("dist,gamma,estimator,param,mean,mse,median_ess,reps,failures\n", 0) == 0);
    CHECK(csv.find("\"pareto:2,1\",2,geometric,0.8,") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 21);
}

TEST_CASE("lower median") {
    CHECK(lower_median({5, 1, 3}) == 3);
    CHECK(lower_median({4, 1, 3, 2}) == 2);
    CHECK_THROWS((void)lower_median({}));
}

TEST_CASE("trial cap aborts and counts failures") {
    auto config = pareto_config(1.0);
    config.max_materialized = 3;
    config.mode = StreamMode::naive;
    CHECK_THROWS_AS((void)run_trial(config, 1, 0), TrialAbortError);
    const auto trials = replicate_trials(config, 20, 1, 2);
    CHECK(std::all_of(trials.begin(), trials.end(), [](const TrialResult& t) { return t.aborted; }));
    CHECK_THROWS_AS((void)summarize(config, trials), AggregationError);
    CHECK_THROWS_AS((void)replicate(config, 0, 1), ParameterError);
}

TEST_CASE("config validation") {
    auto config = pareto_config(1.0);
    config.hill_ks = {0};
    CHECK_THROWS_AS(config.validate(), ParameterError);
    config = pareto_config(1.0);
    config.berred_ells = {10};
    CHECK_THROWS_AS(config.validate(), ParameterError);
    config = pareto_config(1.0);
    config.deltas = {1.5};
    CHECK_THROWS_AS(config.validate(), ParameterError);
}

TEST_CASE("raw streams and direct generation give the same estimator law") {
    auto config = pareto_config(1.0);
    config.deltas = {0.5};
    config.hill_ks = {5};
    config.berred_ells = {3};
    const std::uint64_t reps = 10000;
    const auto trials = replicate_trials(config, reps, 2718, 4);
    std::vector<double> raw, direct;
    for (const auto& t : trials) raw.push_back(*t.geometric[0]);
    const GeomRecordParams params(0.5, 5, 5.0);
    Rng rng(2718, 1u << 30);
    for (std::uint64_t i = 0; i < reps; ++i) {
        direct.push_back(mle_complete(direct_generate_sample(1.0, params, 10, rng)).gamma_hat);
    }
    const auto ks = oracle::ks_two_sample(raw, direct);
    INFO("D=" << ks.statistic);
    CHECK(ks.pvalue > 0.01);
}

TEST_CASE("skip mode matches naive streaming") {
    auto config = pareto_config(2.0);
    config.deltas = {0.8, 0.4};
    config.hill_ks = {5};
    config.berred_ells = {3};
    config.n_records = 5;
    auto naive = config;
    naive.mode = StreamMode::naive;
    const auto a = replicate_trials(config, 2000, 5, 4);
    const auto b = replicate_trials(naive, 2000, 6, 4);
    std::vector<double> ga, gb, ha, hb, ea, eb;
    for (const auto& t : a) {
        ga.push_back(*t.geometric[1]);
        ha.push_back(*t.hill[0]);
        ea.push_back(static_cast<double>(t.hill_ess[0]));
    }
    for (const auto& t : b) {
        if (t.aborted) continue;
        gb.push_back(*t.geometric[1]);
        hb.push_back(*t.hill[0]);
        eb.push_back(static_cast<double>(t.hill_ess[0]));
    }
    CHECK(gb.size() > 1990);
    CHECK(oracle::ks_two_sample(ga, gb).pvalue > 0.01);
    CHECK(oracle::ks_two_sample(ha, hb).pvalue > 0.01);
    CHECK(oracle::ks_two_sample(ea, eb).pvalue > 0.01);
}

TEST_CASE("CLT study at reduced scale") {
    const auto r = clt_study(2.0, 0.5, 5, 500, 400, 17, 0.05, 4);
    CHECK(r.estimates.size() == 400);
    CHECK(r.sigma == doctest::Approx(asymptotic_sd(2.0, 0.5, 5)));
    CHECK(r.empirical_sd == doctest::Approx(r.sigma).epsilon(0.12));
    CHECK(r.coverage > 0.90);
    CHECK(r.coverage < 0.99);
    CHECK(r.mean_estimate == doctest::Approx(2.0).epsilon(0.02));
    CHECK(summary_to_csv(replicate(pareto_config(1.0), 5, 1)).size() > 0);
}

TEST_CASE("trace paths") {
    const auto dist = ParentDistribution::parse("loglogistic:3");
    const GeomRecordParams params(0.5, 5, 3.0);
    const auto t = trace_paths(dist, 10000, params, 2, 1);
    REQUIRE(t.geometric.size() > 1);
    REQUIRE(t.hill.size() > 1);
    for (const auto* trace : {&t.geometric, &t.hill}) {
        for (std::size_t i = 1; i < trace->size(); ++i) {
            CHECK((*trace)[i].effective_index > (*trace)[i - 1].effective_index);
        }
        for (const auto& p : *trace) CHECK(p.estimate > 0.0);
    }
    CHECK(t.hill.front().effective_index == 3);
    const auto again = trace_paths(dist, 10000, params, 2, 1);
    CHECK(traces_to_csv(t) == traces_to_csv(again));
    const auto csv = traces_to_csv(t);
    CHECK(csv.rfind("estimator,ess,estimate\n", 0) == 0);
    CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) ==
          1 + t.geometric.size() + t.hill.size());
}

TEST_CASE("trace point counts bracket a reference realization") {
    const auto dist = ParentDistribution::parse("loglogistic:3");
    const GeomRecordParams params(0.5, 5, 3.0);
    std::vector<std::size_t> geo, hill;
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
        const auto t = trace_paths(dist, 10000, params, 2, seed);
        geo.push_back(t.geometric.size());
        hill.push_back(t.hill.size());
    }
    std::sort(geo.begin(), geo.end());
    std::sort(hill.begin(), hill.end());
    // 26 geometric records and 24 Hill observations in one reference run
    CHECK(geo[50] <= 26);
    CHECK(26 <= geo[450]);
    CHECK(hill[50] <= 24);
    CHECK(24 <= hill[450]);
}

TEST_CASE("roughness") {
    CHECK(std::isnan(roughness({})));
    CHECK(std::isnan(roughness({{1, 2.0}})));
    CHECK(roughness({{1, 1.0}, {2, 3.0}, {3, 2.0}}) == doctest::Approx(1.5));
}
