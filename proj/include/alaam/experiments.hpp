#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "alaam/effects.hpp"
#include "alaam/graph.hpp"
#include "alaam/sampler.hpp"

namespace alaam {

struct Grid {
    double lo = -1.0;
    double hi = 1.0;
    double step = 0.01;

    // lo, lo + step, ... up to hi inclusive (within step/1e6).
    std::vector<double> values() const;
};

struct SweepConfig {
    EffectSpec varied;
    Grid grid;
    // burn_in and interval of 0 mean 100 n and 10 n over free nodes. The
    // seed of grid point k is derive_seed(sampler.seed, k).
    SamplerConfig sampler = [] {
        SamplerConfig c;
        c.interval = 0;
        c.n_samples = 100;
        return c;
    }();
    unsigned threads = 1;
};

struct SweepPoint {
    double theta = 0;
    SampleBatch batch;
    double mean = 0;       // of the varied effect's statistic
    double variance = 0;
    double mean_degree_y1 = 0;  // averaged over samples with at least one y=1
};

struct SweepTable {
    std::vector<std::string> effect_names;
    std::size_t varied_index = 0;
    bool directed = false;
    std::vector<SweepPoint> points;  // ordered by theta
};

// Runs one fresh chain per grid value with the varied effect's parameter set
// to that value and every other parameter as in `m` (the varied effect is
// appended when absent).
SweepTable sweep(const SweepConfig& cfg, const Model& m, const Graph& g, const CovariateTable& w,
                 const OutcomeVector& y_obs);

// theta,sample,<effects>,mean_degree_y1[,mean_indegree_y1,mean_outdegree_y1]
void write_sweep_csv(std::ostream& out, const SweepTable& t);
// theta,mean,variance,mean_degree_y1
void write_sweep_summary_csv(std::ostream& out, const SweepTable& t);

struct TransitionThresholds {
    double peak_ratio = 10.0;
    double jump = 0.25;
};

struct TransitionReport {
    double peak_theta = 0;
    double peak_variance = 0;
    double peak_ratio = 1;      // peak variance / median variance
    double max_jump = 0;        // largest adjacent change of the mean over the range of means
    double jump_theta = 0;      // grid value at the left end of that jump
    double spearman_mean = 0;   // Spearman(theta, mean)
    double spearman_degree = 0; // Spearman(theta, mean degree of y=1 nodes)
    bool near_degenerate = false;
};

// Needs at least 20 grid points.
TransitionReport detect_transition(const std::vector<double>& theta, const std::vector<double>& mean,
                                   const std::vector<double>& variance, const std::vector<double>& mean_degree,
                                   const TransitionThresholds& th = {});
TransitionReport detect_transition(const SweepTable& t, const TransitionThresholds& th = {});

void write_key_value(std::ostream& out, const TransitionReport& r);

// Preferential-attachment graph with heavy-tailed attachment counts: starts
// from a clique, then each new node links to m distinct existing nodes
// chosen with probability proportional to degree, where m is Pareto
// distributed with tail exponent `tail` (P(m >= x) ~ x^-(tail-1)), floored
// and capped.
struct HeavyTailedConfig {
    std::size_t n = 5000;
    std::size_t clique = 10;
    double tail = 1.9;
    int m_cap = 200;
    std::uint64_t seed = 20240501;
};

Graph heavy_tailed_graph(const HeavyTailedConfig& cfg);

}  // namespace alaam
