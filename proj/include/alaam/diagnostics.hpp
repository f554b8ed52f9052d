#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "alaam/effects.hpp"
#include "alaam/graph.hpp"
#include "alaam/sampler.hpp"
#include "alaam/stats.hpp"

namespace alaam {

// Every effect applicable to the graph's directionality; covariate effects
// are added for each continuous column (ContinuousCovariate) and each
// binary or categorical column (the match kinds).
std::vector<EffectSpec> default_gof_suite(const Graph& g, const CovariateTable& w);

// Sampler settings for a diagnostic run: observed start, burn-in 100 n,
// interval 10 n over free nodes.
SamplerConfig diagnostic_sampler(const OutcomeVector& y_obs, std::size_t n_samples, std::uint64_t seed);

struct GofRow {
    std::string name;
    bool in_model = false;
    double observed = 0;
    double sim_mean = 0;
    double sim_sd = 0;
    double t = 0;               // NaN when zero_variance
    bool zero_variance = false;
    bool good_fit = false;      // |t| < 1
};

struct GofReport {
    std::vector<GofRow> rows;
    SampleBatch batch;  // columns in row order
};

// Simulates at the model's theta and compares every suite statistic. Model
// effects missing from the suite are prepended.
GofReport gof(const Model& m, const Graph& g, const CovariateTable& w, const OutcomeVector& y_obs,
              std::vector<EffectSpec> suite, const SamplerConfig& cfg);

void write_csv(std::ostream& out, const GofReport& r);

struct HistogramBin {
    double lo = 0, hi = 0;
    std::size_t count = 0;
};

struct DegeneracyRow {
    std::string name;
    std::vector<double> trace;
    std::vector<HistogramBin> histogram;
    double observed = 0;
    double mean = 0;
    double sd = 0;
    double lower = 0, upper = 0;  // central band of the simulated values
    bool zero_variance = false;
    bool pass = false;  // observed inside [lower, upper]
};

struct DegeneracyCheck {
    double band = 0.95;
    std::vector<DegeneracyRow> rows;
    bool pass() const;
};

DegeneracyCheck degeneracy_check(const Model& m, const Graph& g, const CovariateTable& w, const OutcomeVector& y_obs,
                                 const SamplerConfig& cfg, double band = 0.95, std::size_t bins = 20);

// effect,observed,mean,sd,lower,upper,zero_variance,verdict
void write_summary_csv(std::ostream& out, const DegeneracyCheck& d);
// effect,sample,value,observed
void write_trace_csv(std::ostream& out, const DegeneracyCheck& d);
// effect,bin_lo,bin_hi,count,observed,mean,lower,upper
void write_histogram_csv(std::ostream& out, const DegeneracyCheck& d);

struct DegreeDistribution {
    std::string source;     // alaam, baseline, observed
    std::string direction;  // all (undirected), in, out
    std::vector<double> fraction;  // by degree 0..cap; the last bin holds every larger degree
    double mean = 0;               // mean degree of y=1 nodes
};

struct DegreeComparison {
    std::string direction;
    double alaam_mean = 0, baseline_mean = 0, observed_mean = 0;
    WelchTest test;  // per-sample mean degrees, ALAAM vs baseline
};

struct AttributeDegreeReport {
    double alaam_density = 0;     // mean over samples of sum(y)/N
    double baseline_density = 0;  // realized
    int cap = 0;
    std::vector<DegreeDistribution> distributions;
    std::vector<DegreeComparison> comparisons;
};

// ALAAM batch against an independent Bernoulli baseline with the ALAAM
// batch's mean density, as distributions of degrees of y=1 nodes.
AttributeDegreeReport attribute_degree_gof(const Model& m, const Graph& g, const CovariateTable& w,
                                           const OutcomeVector& y_obs, const SamplerConfig& cfg);

// source,direction,degree,fraction
void write_distribution_csv(std::ostream& out, const AttributeDegreeReport& r);
// direction,alaam_mean,baseline_mean,observed_mean,alaam_density,baseline_density,
// welch_t,welch_df,p_value
void write_means_csv(std::ostream& out, const AttributeDegreeReport& r);

}  // namespace alaam
