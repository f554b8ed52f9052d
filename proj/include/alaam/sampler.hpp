#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "alaam/effects.hpp"
#include "alaam/graph.hpp"

namespace alaam {

using Rng = std::mt19937_64;

// Independent stream seed for worker `index` (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Starting outcome vector for a chain. Fixed nodes always keep their value.
struct InitialState {
    enum class Kind { Observed, Random, Zero };
    Kind kind = Kind::Random;
    double p = -1.0;  // Random only; negative means the observed density of free nodes

    // "observed", "zero", "random" or "random(0.3)".
    static InitialState parse(std::string_view text);
    std::string to_string() const;
};

struct SamplerConfig {
    std::uint64_t burn_in = 0;
    std::uint64_t interval = 1;
    std::size_t n_samples = 1;
    std::uint64_t seed = 1;
    InitialState initial;
    std::size_t resync_every = 100;  // retained samples between closed-form recounts
    bool keep_y = false;

    void validate() const;
};

struct SampleBatch {
    std::vector<std::string> effect_names;
    Eigen::MatrixXd z;  // n_samples x effects
    // Mean degree over y=1 nodes per sample; NaN when no node has y=1.
    std::vector<double> mean_degree_y1, mean_indegree_y1, mean_outdegree_y1;
    std::vector<double> density;  // fraction of nodes with y=1 per sample
    std::vector<OutcomeVector> y;  // filled when keep_y
    std::uint64_t proposals = 0;
    std::uint64_t accepted = 0;

    std::size_t size() const { return static_cast<std::size_t>(z.rows()); }
    Eigen::VectorXd mean() const;
    Eigen::MatrixXd covariance() const;  // divisor n-1
};

// Outcome of one Metropolis proposal.
struct StepResult {
    NodeId node = -1;
    bool accepted = false;
    bool turned_on = false;  // direction of the flip when accepted
};

// One single-flip Metropolis proposal over the listed free nodes. `delta`
// receives the change statistics at the proposed node (size = set.size()).
// On acceptance y is flipped and z moves by +delta (0->1) or -delta (1->0).
StepResult mcmc_step(const EffectSet& set, std::span<const double> theta, std::span<const NodeId> free_nodes,
                     OutcomeVector& y, Rng& rng, std::span<double> delta);

// Single chain with incrementally maintained statistics and degree sums.
class Chain {
public:
    Chain(const EffectSet& set, std::vector<double> theta, OutcomeVector y, std::uint64_t seed);

    // Runs `steps` proposals; returns the number accepted.
    std::uint64_t run(std::uint64_t steps);

    // Recomputes z from closed forms; throws KernelInconsistencyError when the
    // incremental values drifted by more than 1e-6 * max(1, |z|).
    void resync();

    const OutcomeVector& y() const { return y_; }
    const std::vector<double>& z() const { return z_; }
    const std::vector<double>& theta() const { return theta_; }
    void set_theta(std::vector<double> theta);
    Rng& rng() { return rng_; }
    const EffectSet& effects() const { return *set_; }
    bool has_free_nodes() const { return !free_.empty(); }
    std::size_t num_free() const { return free_.size(); }

    std::size_t ones() const { return ones_; }
    double mean_degree_y1() const;
    double mean_indegree_y1() const;
    double mean_outdegree_y1() const;

    std::uint64_t proposals() const { return proposals_; }
    std::uint64_t accepted() const { return accepted_; }

private:
    const EffectSet* set_;
    std::vector<double> theta_;
    OutcomeVector y_;
    std::vector<NodeId> free_;
    std::vector<double> z_;
    std::vector<double> delta_;
    Rng rng_;
    std::size_t ones_ = 0;
    long long deg_sum_ = 0, in_sum_ = 0, out_sum_ = 0;
    std::uint64_t proposals_ = 0, accepted_ = 0;
};

// Starting vector for a chain from `observed` according to the config.
OutcomeVector initial_outcome(const OutcomeVector& observed, const InitialState& init, Rng& rng);

// Advances an existing chain by burn_in proposals, then retains n_samples
// statistic vectors spaced by interval.
SampleBatch collect(Chain& chain, std::uint64_t burn_in, std::uint64_t interval, std::size_t n_samples,
                    std::size_t resync_every = 100, bool keep_y = false);

// Burn-in, then n_samples retained statistic vectors spaced by interval.
SampleBatch simulate(const EffectSet& set, std::span<const double> theta, const OutcomeVector& observed,
                     const SamplerConfig& cfg);
SampleBatch simulate(const Model& m, const Graph& g, const CovariateTable& w, const OutcomeVector& observed,
                     const SamplerConfig& cfg);

// CSV with columns [leading...,] sample, <effects>, mean_degree_y1,
// mean_indegree_y1, mean_outdegree_y1.
void write_batch_header(std::ostream& out, const SampleBatch& b, std::span<const std::string> leading = {});
void write_batch_rows(std::ostream& out, const SampleBatch& b, std::span<const std::string> leading = {});
void write_csv(std::ostream& out, const SampleBatch& b);

}  // namespace alaam
