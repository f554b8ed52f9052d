#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "alaam/effects.hpp"
#include "alaam/graph.hpp"

namespace alaam {

inline constexpr std::size_t kEnumerationCap = 22;
inline constexpr std::size_t kExactMleCap = 18;

// The ALAAM distribution over all assignments of the free nodes; fixed nodes
// keep the values of `base`. Bit b of a table index is y at free_nodes[b].
struct ExactDistribution {
    std::vector<std::string> effect_names;
    std::vector<NodeId> free_nodes;
    OutcomeVector base;
    double log_kappa = 0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    std::vector<double> probabilities;  // empty unless requested

    std::size_t index_of(const OutcomeVector& y) const;
    double probability(const OutcomeVector& y) const;
};

struct OracleOptions {
    bool keep_table = false;
    unsigned threads = 1;
};

// Exact log normalizing constant, E[z] and Cov(z) by Gray-code enumeration.
// Refuses more than kEnumerationCap free nodes.
ExactDistribution enumerate(const EffectSet& set, std::span<const double> theta, const OutcomeVector& base,
                            const OracleOptions& opts = {});
ExactDistribution enumerate(const Model& m, const Graph& g, const CovariateTable& w, const OutcomeVector& base,
                            const OracleOptions& opts = {});

struct ExactMle {
    std::vector<double> theta;
    int iterations = 0;
    double gradient_norm = 0;  // infinity norm at the solution
};

// Exact maximum-likelihood estimate by damped Newton ascent. Throws
// NonExistenceError when z_obs is on the boundary of the attainable range or
// the ascent runs off to infinity.
ExactMle exact_mle(std::span<const double> z_obs, const EffectSet& set, const OutcomeVector& base,
                   std::vector<double> theta0 = {}, const OracleOptions& opts = {});

}  // namespace alaam
