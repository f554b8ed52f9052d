#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "alaam/effects.hpp"
#include "alaam/graph.hpp"

namespace alaam {

struct EstimationResult {
    std::vector<std::string> effect_names;
    std::vector<double> z_obs;
    std::vector<double> theta_hat;
    std::vector<double> std_err;
    std::vector<double> convergence_t;
    int runs_used = 0;
    bool converged = false;
    bool diverged = false;
    bool unstable = false;  // equilibrium expectation replicates disagree
    std::string message;
    std::vector<std::vector<double>> trajectory;  // theta after each update, when kept
    Eigen::MatrixXd covariance;  // of the statistics at theta_hat
};

// Density = logit(fraction of free nodes with y=1), every other effect 0.
std::vector<double> default_theta0(const Model& m, const OutcomeVector& y_obs);

// Throws NonExistenceError when an observed statistic sits on the boundary
// of its attainable range.
void check_existence(const EffectSet& set, const OutcomeVector& y_obs, const std::vector<double>& z_obs);

// sqrt(diag(cov^-1)); throws SingularCovarianceError naming the effects that
// span the near-null direction.
std::vector<double> standard_errors(const Eigen::MatrixXd& cov, const std::vector<std::string>& names);

// Stochastic approximation (Robbins-Monro, three phases). Zero-valued
// counts are replaced by defaults scaled to the number of free nodes.
struct SaConfig {
    std::uint64_t seed = 1;
    std::size_t phase1_samples = 100;
    std::uint64_t interval = 0;         // proposals between retained samples; 0 = 10 * free nodes
    std::uint64_t burn_in = 0;          // 0 = 100 * free nodes
    std::uint64_t steps_per_update = 0; // phase 2 chain length between updates; 0 = 10 * free nodes
    int subphases = 5;
    double a0 = 0.1;
    std::size_t phase3_samples = 1000;
    double divergence_bound = 100.0;
    double t_threshold = 0.1;
    int max_runs = 5;
    bool keep_trajectory = false;
};

EstimationResult estimate_sa(const Model& m0, const Graph& g, const CovariateTable& w, const OutcomeVector& y_obs,
                             const SaConfig& cfg = {});

// Equilibrium expectation with per-parameter adaptive gain, run as
// independent replicates.
struct EeConfig {
    std::uint64_t seed = 1;
    std::size_t replicates = 20;
    std::uint64_t steps_per_update = 0;  // 0 = clamp(free nodes / 10, 1, 1e5)
    std::size_t updates = 0;             // 0 = max(2000, ceil(500 * free nodes / steps_per_update))
    std::size_t pilot_updates = 50;
    double c1 = 1e-2;
    double epsilon = 1e-6;
    double ewma_half_life = 100.0;
    std::size_t final_samples = 1000;
    std::uint64_t interval = 0;  // final simulation spacing; 0 = 10 * free nodes
    double divergence_bound = 100.0;
    double unstable_ratio = 5.0;
    double t_threshold = 0.3;
    unsigned threads = 1;
    bool keep_trajectory = false;  // first replicate only
};

EstimationResult estimate_ee(const Model& m0, const Graph& g, const CovariateTable& w, const OutcomeVector& y_obs,
                             const EeConfig& cfg = {});

// effect, estimate, std_err, t_ratio, significant
void write_estimates_csv(std::ostream& out, const EstimationResult& r);
void write_trajectory_csv(std::ostream& out, const EstimationResult& r);

}  // namespace alaam
