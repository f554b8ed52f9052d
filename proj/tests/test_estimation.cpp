#include <cmath>
#include <random>
#include <sstream>

#include "alaam/error.hpp"
#include "alaam/estimation.hpp"
#include "alaam/oracle.hpp"
#include "alaam/sampler.hpp"
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

// Small directed fixture with an outcome drawn from the model itself.
struct Fixture {
    Graph g;
    CovariateTable w;
    Model m;
    OutcomeVector y;
};

Fixture oracle_fixture(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Fixture f{testing::random_graph(16, 0.15, true, rng), CovariateTable(16), {}, {}};
    f.m = Model({kind(EffectKind::Density), kind(EffectKind::GWSender), kind(EffectKind::Contagion)}, {-0.5, 0.5, 0.3});
    SamplerConfig cfg;
    cfg.burn_in = 5000;
    cfg.n_samples = 1;
    cfg.seed = seed;
    cfg.keep_y = true;
    f.y = simulate(f.m, f.g, f.w, OutcomeVector(16), cfg).y[0];
    return f;
}

}  // namespace

TEST_CASE("default starting values") {
    const Model m({kind(EffectKind::Density), kind(EffectKind::Contagion)}, {0, 0});
    OutcomeVector y(10);
    for (NodeId i = 0; i < 3; ++i) y.set(i, true);
    const auto t = default_theta0(m, y);
    CHECK(t[0] == doctest::Approx(logit(0.3)));
    CHECK(t[1] == 0.0);
}

TEST_CASE("all-ones outcome has no MLE") {
    std::mt19937_64 rng(1);
    const auto g = testing::random_graph(30, 0.1, false, rng);
    const Model m({kind(EffectKind::Density), kind(EffectKind::Contagion)}, {0, 0});
    const OutcomeVector ones(std::vector<std::uint8_t>(30, 1));
    CHECK_THROWS_AS(estimate_sa(m, g, CovariateTable(30), ones), NonExistenceError);
    CHECK_THROWS_AS(estimate_ee(m, g, CovariateTable(30), ones), NonExistenceError);
}

TEST_CASE("singular covariance names the collinear effects") {
    Eigen::MatrixXd c(3, 3);
    c << 1, 2, 0, 2, 4, 0, 0, 0, 1;
    try {
        standard_errors(c, {"Density", "Activity", "Contagion"});
        FAIL("expected SingularCovarianceError");
    } catch (const SingularCovarianceError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("Density") != std::string::npos);
        CHECK(msg.find("Activity") != std::string::npos);
        CHECK(msg.find("Contagion") == std::string::npos);
    }
    Eigen::MatrixXd d(2, 2);
    d << 4, 0, 0, 0.25;
    const auto se = standard_errors(d, {"a", "b"});
    CHECK(se[0] == doctest::Approx(0.5));
    CHECK(se[1] == doctest::Approx(2.0));
}

TEST_CASE("density-only stochastic approximation recovers the logit") {
    std::mt19937_64 rng(4);
    const std::size_t n = 1000;
    const auto g = testing::random_graph(n, 0.005, false, rng);
    const auto y = testing::random_outcome(n, 0.4029851, rng);
    Model m({kind(EffectKind::Density)}, {0.0});
    m.set_theta(default_theta0(m, y));
    m.set_theta({0.5});  // start away from the answer
    const auto r = estimate_sa(m, g, CovariateTable(n), y);
    const double exact = logit(static_cast<double>(y.count_ones()) / n);
    CHECK_FALSE(r.diverged);
    CHECK(std::abs(r.theta_hat[0] - exact) < 3 * r.std_err[0]);
    CHECK(std::abs(r.theta_hat[0] - exact) < 0.02);
}

TEST_CASE("stochastic approximation matches the exact MLE on an oracle fixture") {
    const auto f = oracle_fixture(11);
    const EffectSet set(f.m.effects(), f.g, f.w);
    const auto z = set.statistics(f.y);
    const auto exact = exact_mle(z, set, OutcomeVector(16));
    Model m0 = f.m;
    m0.set_theta(default_theta0(f.m, f.y));
    SaConfig cfg;
    cfg.seed = 5;
    const auto r = estimate_sa(m0, f.g, f.w, f.y, cfg);
    REQUIRE_FALSE(r.diverged);
    for (std::size_t k = 0; k < 3; ++k) {
        INFO(r.effect_names[k]);
        CHECK(std::abs(r.theta_hat[k] - exact.theta[k]) < 3 * r.std_err[k]);
    }
}

TEST_CASE("equilibrium expectation matches the exact MLE on an oracle fixture") {
    const auto f = oracle_fixture(11);
    const EffectSet set(f.m.effects(), f.g, f.w);
    const auto exact = exact_mle(set.statistics(f.y), set, OutcomeVector(16));
    Model m0 = f.m;
    m0.set_theta(default_theta0(f.m, f.y));
    EeConfig cfg;
    cfg.seed = 6;
    const auto r = estimate_ee(m0, f.g, f.w, f.y, cfg);
    REQUIRE_FALSE(r.diverged);
    for (std::size_t k = 0; k < 3; ++k) {
        INFO(r.effect_names[k]);
        CHECK(std::abs(r.theta_hat[k] - exact.theta[k]) < 3 * r.std_err[k]);
    }
}

TEST_CASE("phase 2 trajectory is seed-deterministic") {
    const auto f = oracle_fixture(3);
    Model m0 = f.m;
    m0.set_theta(default_theta0(f.m, f.y));
    SaConfig cfg;
    cfg.keep_trajectory = true;
    cfg.max_runs = 1;
    cfg.phase3_samples = 100;
    const auto a = estimate_sa(m0, f.g, f.w, f.y, cfg);
    const auto b = estimate_sa(m0, f.g, f.w, f.y, cfg);
    CHECK(a.trajectory == b.trajectory);
    CHECK(a.theta_hat == b.theta_hat);
    std::ostringstream out;
    write_trajectory_csv(out, a);
    CHECK(out.str().starts_with("update,Density,GWSender,Contagion\n0,"));
}

TEST_CASE("threaded equilibrium expectation is identical to sequential") {
    const auto f = oracle_fixture(5);
    Model m0 = f.m;
    m0.set_theta(default_theta0(f.m, f.y));
    EeConfig cfg;
    cfg.replicates = 4;
    cfg.updates = 300;
    cfg.final_samples = 100;
    const auto a = estimate_ee(m0, f.g, f.w, f.y, cfg);
    cfg.threads = 3;
    const auto b = estimate_ee(m0, f.g, f.w, f.y, cfg);
    CHECK(a.theta_hat == b.theta_hat);
    CHECK(a.std_err == b.std_err);
}

TEST_CASE("estimates CSV layout") {
    EstimationResult r;
    r.effect_names = {"Density", "Contagion"};
    r.theta_hat = {-1.0, 0.1};
    r.std_err = {0.2, 0.1};
    r.convergence_t = {0.01, -0.02};
    std::ostringstream out;
    write_estimates_csv(out, r);
    CHECK(out.str() == "effect,estimate,std_err,t_ratio,significant\nDensity,-1,0.2,0.01,true\n"
                       "Contagion,0.1,0.1,-0.02,false\n");
}
