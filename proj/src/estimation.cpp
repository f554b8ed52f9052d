#include "alaam/estimation.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include "alaam/error.hpp"
#include "alaam/io.hpp"
#include "alaam/sampler.hpp"
#include "alaam/stats.hpp"

namespace alaam {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t or_default(std::uint64_t v, std::uint64_t fallback) { return v ? v : std::max<std::uint64_t>(1, fallback); }

bool exceeds(const std::vector<double>& theta, double bound) {
    for (double t : theta)
        if (!std::isfinite(t) || std::abs(t) > bound) return true;
    return false;
}

std::string format_vector(const std::vector<double>& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
    return s + ")";
}

EstimationResult start_result(const EffectSet& set, const std::vector<double>& z_obs) {
    EstimationResult r;
    for (const auto& e : set.specs()) r.effect_names.push_back(e.name());
    r.z_obs = z_obs;
    return r;
}

void mark_diverged(EstimationResult& r, const std::vector<double>& theta, double bound) {
    r.diverged = true;
    r.converged = false;
    r.theta_hat = theta;
    r.std_err.assign(theta.size(), kNaN);
    r.convergence_t.assign(theta.size(), kNaN);
    r.message = "diverged: |theta| exceeded " + format_double(bound) + " at theta = " + format_vector(theta) +
                " (model is near-degenerate)";
}

// t-ratios of the observed statistics against a simulated batch.
std::vector<double> t_ratios(const SampleBatch& b, const std::vector<double>& z_obs) {
    const Eigen::VectorXd m = b.mean();
    const Eigen::MatrixXd c = b.covariance();
    std::vector<double> t(z_obs.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        const double s = std::sqrt(c(i, i));
        t[k] = s > 0 ? (m[i] - z_obs[k]) / s : kNaN;
    }
    return t;
}

bool all_below(const std::vector<double>& t, double threshold) {
    for (double v : t)
        if (!(std::abs(v) < threshold)) return false;
    return true;
}

}  // namespace

std::vector<double> default_theta0(const Model& m, const OutcomeVector& y_obs) {
    std::vector<double> theta(m.size(), 0.0);
    const auto free = y_obs.free_nodes();
    std::size_t ones = 0;
    for (NodeId i : free) ones += y_obs[i];
    if (free.empty() || ones == 0 || ones == free.size()) return theta;
    const double p = static_cast<double>(ones) / static_cast<double>(free.size());
    for (std::size_t k = 0; k < m.size(); ++k)
        if (m.effects()[k].kind == EffectKind::Density) theta[k] = logit(p);
    return theta;
}

void check_existence(const EffectSet& set, const OutcomeVector& y_obs, const std::vector<double>& z_obs) {
    const auto ranges = set.attainable_range(y_obs);
    for (std::size_t k = 0; k < set.size(); ++k) {
        const auto [lo, hi] = ranges[k];
        const double tol = 1e-9 * std::max(1.0, std::abs(z_obs[k]));
        if (z_obs[k] <= lo + tol || z_obs[k] >= hi - tol)
            throw NonExistenceError("MLE does not exist: observed " + set.specs()[k].name() + " = " +
                                    format_double(z_obs[k]) + " is on the boundary of its attainable range [" +
                                    format_double(lo) + ", " + format_double(hi) + "]");
    }
}

std::vector<double> standard_errors(const Eigen::MatrixXd& cov, const std::vector<std::string>& names) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const auto& ev = eig.eigenvalues();
    const double top = ev.cwiseAbs().maxCoeff();
    if (!(top > 0) || ev.minCoeff() <= 1e-10 * top) {
        Eigen::Index j = 0;
        ev.minCoeff(&j);
        const Eigen::VectorXd v = eig.eigenvectors().col(j);
        std::string involved;
        for (Eigen::Index k = 0; k < v.size(); ++k)
            if (std::abs(v[k]) > 0.1) involved += (involved.empty() ? "" : ", ") + names[static_cast<std::size_t>(k)];
        throw SingularCovarianceError("statistic covariance is singular; constant or collinear effects: " + involved);
    }
    const Eigen::MatrixXd inv = cov.ldlt().solve(Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
    std::vector<double> se(static_cast<std::size_t>(cov.rows()));
    for (std::size_t k = 0; k < se.size(); ++k) se[k] = std::sqrt(inv(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)));
    return se;
}

EstimationResult estimate_sa(const Model& m0, const Graph& g, const CovariateTable& w, const OutcomeVector& y_obs,
                             const SaConfig& cfg) {
    const EffectSet set(m0.effects(), g, w);
    const auto z_obs = set.statistics(y_obs);
    check_existence(set, y_obs, z_obs);
    const std::size_t nfree = y_obs.free_nodes().size();
    const std::size_t p = set.size();
    const std::uint64_t interval = or_default(cfg.interval, 10 * nfree);
    const std::uint64_t burn_in = or_default(cfg.burn_in, 100 * nfree);
    const std::uint64_t steps = or_default(cfg.steps_per_update, 10 * nfree);

    auto r = start_result(set, z_obs);
    std::vector<double> theta = m0.theta();
    Chain chain(set, theta, y_obs, cfg.seed);

    for (int run = 1; run <= cfg.max_runs; ++run) {
        r.runs_used = run;
        // Phase 1: scaling from the statistic variances at the current theta.
        chain.set_theta(theta);
        const auto b1 = collect(chain, burn_in, interval, cfg.phase1_samples);
        const Eigen::MatrixXd c1 = b1.covariance();
        std::vector<double> d(p);
        for (std::size_t k = 0; k < p; ++k) {
            d[k] = c1(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
            if (!(d[k] > 0))
                throw SingularCovarianceError("statistic " + r.effect_names[k] +
                                              " did not vary in phase 1; it is constant under the model");
        }

        // Phase 2: Robbins-Monro updates with halving gain, averaged per subphase.
        for (int k = 0; k < cfg.subphases; ++k) {
            const double gain = cfg.a0 * std::pow(2.0, -k);
            const auto len = static_cast<std::size_t>(
                std::ceil(std::pow(2.0, 4.0 * k / 3.0) * (7.0 + static_cast<double>(p))) + 200);
            std::vector<double> avg(p, 0.0);
            for (std::size_t u = 0; u < len; ++u) {
                chain.run(steps);
                for (std::size_t i = 0; i < p; ++i) theta[i] -= gain * (chain.z()[i] - z_obs[i]) / d[i];
                if (exceeds(theta, cfg.divergence_bound)) {
                    if (cfg.keep_trajectory) r.trajectory.push_back(theta);
                    mark_diverged(r, theta, cfg.divergence_bound);
                    return r;
                }
                chain.set_theta(theta);
                if (cfg.keep_trajectory) r.trajectory.push_back(theta);
                for (std::size_t i = 0; i < p; ++i) avg[i] += theta[i];
            }
            for (std::size_t i = 0; i < p; ++i) theta[i] = avg[i] / static_cast<double>(len);
            chain.set_theta(theta);
        }

        // Phase 3: convergence t-ratios and standard errors at the estimate.
        const auto b3 = collect(chain, burn_in, interval, cfg.phase3_samples);
        r.theta_hat = theta;
        r.covariance = b3.covariance();
        r.convergence_t = t_ratios(b3, z_obs);
        r.std_err = standard_errors(r.covariance, r.effect_names);
        r.converged = all_below(r.convergence_t, cfg.t_threshold);
        if (r.converged) break;
    }
    r.message = r.converged ? "converged" : "not converged: some |t| >= " + format_double(cfg.t_threshold) +
                                                " after " + std::to_string(r.runs_used) + " runs";
    return r;
}

EstimationResult estimate_ee(const Model& m0, const Graph& g, const CovariateTable& w, const OutcomeVector& y_obs,
                             const EeConfig& cfg) {
    const EffectSet set(m0.effects(), g, w);
    const auto z_obs = set.statistics(y_obs);
    check_existence(set, y_obs, z_obs);
    const std::size_t nfree = y_obs.free_nodes().size();
    const std::size_t p = set.size();
    const std::uint64_t steps =
        cfg.steps_per_update ? cfg.steps_per_update : std::clamp<std::uint64_t>(nfree / 10, 1, 100000);
    const std::size_t updates =
        cfg.updates ? cfg.updates
                    : std::max<std::size_t>(2000, static_cast<std::size_t>(std::ceil(500.0 * nfree / steps)));
    const std::uint64_t interval = or_default(cfg.interval, 10 * nfree);
    const double lambda = 1.0 - std::pow(2.0, -1.0 / cfg.ewma_half_life);
    if (cfg.replicates < 2) throw ModelError("equilibrium expectation needs at least 2 replicates");

    struct Replicate {
        std::vector<double> estimate;
        std::vector<double> within_var;  // batch-means variance of the estimate
        std::vector<std::vector<double>> trajectory;
        bool diverged = false;
        std::vector<double> last;
    };
    std::vector<Replicate> reps(cfg.replicates);

    auto run_replicate = [&](std::size_t rep) {
        auto& out = reps[rep];
        std::vector<double> theta = m0.theta();
        Chain chain(set, theta, y_obs, derive_seed(cfg.seed, rep + 1));
        std::vector<double> v(p, 0.0);
        for (std::size_t u = 0; u < cfg.pilot_updates; ++u) {
            chain.run(steps);
            for (std::size_t i = 0; i < p; ++i) {
                const double dz = chain.z()[i] - z_obs[i];
                v[i] += dz * dz / static_cast<double>(cfg.pilot_updates);
            }
        }
        std::vector<std::vector<double>> second_half(p);
        for (std::size_t u = 0; u < updates; ++u) {
            chain.run(steps);
            for (std::size_t i = 0; i < p; ++i) {
                const double dz = chain.z()[i] - z_obs[i];
                v[i] = (1.0 - lambda) * v[i] + lambda * dz * dz;
                theta[i] -= cfg.c1 / (cfg.epsilon + v[i]) * dz;
            }
            if (cfg.keep_trajectory && rep == 0) out.trajectory.push_back(theta);
            if (exceeds(theta, cfg.divergence_bound)) {
                out.diverged = true;
                out.last = theta;
                return;
            }
            chain.set_theta(theta);
            if (u >= updates / 2)
                for (std::size_t i = 0; i < p; ++i) second_half[i].push_back(theta[i]);
        }
        chain.resync();
        for (std::size_t i = 0; i < p; ++i) {
            out.estimate.push_back(mean(second_half[i]));
            const double se = batch_means_se(second_half[i], 20);
            out.within_var.push_back(se * se);
        }
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(cfg.replicates)));
    if (workers == 1) {
        for (std::size_t rep = 0; rep < cfg.replicates; ++rep) run_replicate(rep);
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::exception_ptr failure;
        {
            std::vector<std::jthread> pool;
            for (unsigned t = 0; t < workers; ++t)
                pool.emplace_back([&] {
                    for (std::size_t rep; !failed && (rep = next.fetch_add(1)) < cfg.replicates;) {
                        try {
                            run_replicate(rep);
                        } catch (...) {
                            if (!failed.exchange(true)) failure = std::current_exception();
                        }
                    }
                });
        }
        if (failure) std::rethrow_exception(failure);
    }

    auto r = start_result(set, z_obs);
    r.runs_used = static_cast<int>(cfg.replicates);
    r.trajectory = std::move(reps[0].trajectory);
    for (const auto& rep : reps)
        if (rep.diverged) {
            mark_diverged(r, rep.last, cfg.divergence_bound);
            return r;
        }

    r.theta_hat.assign(p, 0.0);
    std::vector<double> between(p), within(p);
    for (std::size_t i = 0; i < p; ++i) {
        std::vector<double> est, wv;
        for (const auto& rep : reps) {
            est.push_back(rep.estimate[i]);
            wv.push_back(rep.within_var[i]);
        }
        r.theta_hat[i] = mean(est);
        between[i] = variance(est);
        within[i] = mean(wv);
        if (std::sqrt(between[i]) > cfg.unstable_ratio * std::sqrt(within[i])) r.unstable = true;
    }

    Chain final_chain(set, r.theta_hat, y_obs, derive_seed(cfg.seed, 0));
    const auto b = collect(final_chain, 100 * std::max<std::size_t>(1, nfree), interval, cfg.final_samples);
    r.covariance = b.covariance();
    r.convergence_t = t_ratios(b, z_obs);
    const auto stat_se = standard_errors(r.covariance, r.effect_names);
    r.std_err.resize(p);
    for (std::size_t i = 0; i < p; ++i)
        r.std_err[i] = std::sqrt(stat_se[i] * stat_se[i] + between[i] / static_cast<double>(cfg.replicates));
    r.converged = all_below(r.convergence_t, cfg.t_threshold);
    r.message = r.converged ? "converged" : "not converged: some |t| >= " + format_double(cfg.t_threshold);
    if (r.unstable) r.message += "; replicates disagree (between-replicate sd > " + format_double(cfg.unstable_ratio) +
                                 " x within-replicate sd)";
    return r;
}

void write_estimates_csv(std::ostream& out, const EstimationResult& r) {
    out << "effect,estimate,std_err,t_ratio,significant\n";
    for (std::size_t k = 0; k < r.effect_names.size(); ++k) {
        const double est = r.theta_hat[k], se = r.std_err[k];
        const bool sig = std::isfinite(se) && std::abs(est) > 1.96 * se;
        out << r.effect_names[k] << ',' << format_double(est) << ',' << format_double(se) << ','
            << format_double(r.convergence_t[k]) << ',' << (sig ? "true" : "false") << '\n';
    }
}

void write_trajectory_csv(std::ostream& out, const EstimationResult& r) {
    out << "update";
    for (const auto& n : r.effect_names) out << ',' << n;
    out << '\n';
    for (std::size_t u = 0; u < r.trajectory.size(); ++u) {
        out << u;
        for (double t : r.trajectory[u]) out << ',' << format_double(t);
        out << '\n';
    }
}

}  // namespace alaam
