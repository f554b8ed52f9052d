#include <cmath>
#include <random>
#include <sstream>

#include "alaam/diagnostics.hpp"
#include "alaam/stats.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace alaam;

namespace {

EffectSpec kind(EffectKind k) {
    EffectSpec e;
    e.kind = k;
    return e;
}

}  // namespace

TEST_CASE("default suite follows directionality and covariate types") {
    std::mt19937_64 rng(1);
    const auto d = testing::random_graph(10, 0.2, true, rng);
    CHECK(default_gof_suite(d, CovariateTable(10)).size() == 23);
    const auto u = testing::random_graph(10, 0.2, false, rng);
    CHECK(default_gof_suite(u, CovariateTable(10)).size() == 4);
    const auto w = testing::random_covariates(10, rng);
    // age -> covariate effect; class and flag -> three match kinds each
    CHECK(default_gof_suite(d, w).size() == 23 + 1 + 6);
}

TEST_CASE("density-only fit at the MLE has small t-ratio") {
    std::mt19937_64 rng(2);
    const auto g = testing::random_graph(300, 0.01, false, rng);
    const auto y = testing::random_outcome(300, 0.3, rng);
    const Model m({kind(EffectKind::Density)}, {logit(static_cast<double>(y.count_ones()) / 300)});
    const auto r = gof(m, g, CovariateTable(300), y, {kind(EffectKind::Density)}, diagnostic_sampler(y, 1000, 4));
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].in_model);
    CHECK(std::abs(r.rows[0].t) < 0.1);
}

TEST_CASE("t-ratios are recomputable from the stored batch") {
    std::mt19937_64 rng(3);
    const auto g = testing::random_graph(40, 0.1, true, rng);
    const auto y = testing::random_outcome(40, 0.4, rng);
    const Model m({kind(EffectKind::Density), kind(EffectKind::Contagion)}, {-0.4, 0.2});
    const auto suite = default_gof_suite(g, CovariateTable(40));
    const auto r = gof(m, g, CovariateTable(40), y, suite, diagnostic_sampler(y, 200, 9));
    CHECK(r.rows.size() == suite.size());
    for (std::size_t k = 0; k < r.rows.size(); ++k) {
        const auto c = r.batch.z.col(static_cast<Eigen::Index>(k));
        const std::vector<double> col(c.begin(), c.end());
        if (r.rows[k].zero_variance) continue;
        CHECK(r.rows[k].t == (mean(col) - r.rows[k].observed) / sd(col));
    }
    std::ostringstream out;
    write_csv(out, r);
    CHECK(out.str().starts_with("effect,in_model,observed,sim_mean,sim_sd,t_ratio,zero_variance,good_fit\n"));
}

TEST_CASE("fixed outcome gives zero-variance rows") {
    std::mt19937_64 rng(4);
    const auto g = testing::random_graph(20, 0.2, false, rng);
    auto y = testing::random_outcome(20, 0.5, rng);
    for (NodeId i = 0; i < 20; ++i) y.set_fixed(i, true);
    const Model m({kind(EffectKind::Density), kind(EffectKind::Contagion)}, {0.1, 0.1});
    const auto d = degeneracy_check(m, g, CovariateTable(20), y, diagnostic_sampler(y, 100, 1));
    for (const auto& row : d.rows) {
        CHECK(row.zero_variance);
        CHECK(row.pass);
    }
    const auto r = gof(m, g, CovariateTable(20), y, {}, diagnostic_sampler(y, 50, 1));
    for (const auto& row : r.rows) {
        CHECK(row.zero_variance);
        CHECK(std::isnan(row.t));
    }
}

TEST_CASE("degeneracy verdicts") {
    std::mt19937_64 rng(5);
    const auto g = testing::random_graph(200, 0.02, false, rng);
    const auto y = testing::random_outcome(200, 0.3, rng);
    const CovariateTable w(200);
    SUBCASE("fitted density model is central and stays so under a wider band") {
        const Model m({kind(EffectKind::Density)}, {logit(static_cast<double>(y.count_ones()) / 200)});
        const auto d95 = degeneracy_check(m, g, w, y, diagnostic_sampler(y, 100, 2), 0.95);
        const auto d99 = degeneracy_check(m, g, w, y, diagnostic_sampler(y, 100, 2), 0.99);
        CHECK(d95.pass());
        CHECK(d99.pass());
        CHECK(d99.rows[0].lower <= d95.rows[0].lower);
        std::size_t total = 0;
        for (const auto& b : d95.rows[0].histogram) total += b.count;
        CHECK(total == 100);
    }
    SUBCASE("parameters far from the data fail") {
        const Model m({kind(EffectKind::Density), kind(EffectKind::Activity)}, {-1.0, 1.5});
        const auto d = degeneracy_check(m, g, w, y, diagnostic_sampler(y, 100, 2));
        CHECK_FALSE(d.pass());
    }
    SUBCASE("csv outputs") {
        const Model m({kind(EffectKind::Density)}, {-0.8});
        const auto d = degeneracy_check(m, g, w, y, diagnostic_sampler(y, 10, 2));
        std::ostringstream s, t, h;
        write_summary_csv(s, d);
        write_trace_csv(t, d);
        write_histogram_csv(h, d);
        CHECK(s.str().starts_with("effect,observed,mean,sd,lower,upper,zero_variance,verdict\nDensity,"));
        const std::string trace = t.str();
        CHECK(std::count(trace.begin(), trace.end(), '\n') == 11);
        CHECK(h.str().starts_with("effect,bin_lo,bin_hi,count,observed,mean,lower,upper\n"));
    }
}

TEST_CASE("attribute degree comparison against the Bernoulli baseline") {
    std::mt19937_64 rng(6);
    const auto g = testing::random_graph(300, 0.03, true, rng);
    const auto y = testing::random_outcome(300, 0.3, rng);
    const CovariateTable w(300);
    SUBCASE("density-only model is indistinguishable from its baseline") {
        const Model m({kind(EffectKind::Density), kind(EffectKind::GWSender)}, {-0.8, 0.0});
        const auto r = attribute_degree_gof(m, g, w, y, diagnostic_sampler(y, 100, 3));
        CHECK(std::abs(r.baseline_density - r.alaam_density) < 3 * std::sqrt(r.alaam_density * (1 - r.alaam_density) / (300.0 * 100)));
        REQUIRE(r.comparisons.size() == 2);
        for (const auto& c : r.comparisons) CHECK(c.test.p_value > 0.01);
        for (const auto& d : r.distributions) {
            double total = 0;
            for (double f : d.fraction) total += f;
            CHECK(total == doctest::Approx(1.0));
        }
    }
    SUBCASE("positive GWSender favours low out-degree attribute nodes") {
        const Model m({kind(EffectKind::Density), kind(EffectKind::GWSender)}, {-1.5, 4.0});
        const auto r = attribute_degree_gof(m, g, w, y, diagnostic_sampler(y, 100, 3));
        const auto& out = r.comparisons[1];
        CHECK(out.direction == "out");
        CHECK(out.alaam_mean < out.baseline_mean);
        CHECK(out.test.p_value < 0.01);
        std::ostringstream a, b;
        write_distribution_csv(a, r);
        write_means_csv(b, r);
        CHECK(a.str().starts_with("source,direction,degree,fraction\nalaam,in,0,"));
        CHECK(b.str().find("\nout,") != std::string::npos);
    }
}
