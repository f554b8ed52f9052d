#include "alaam/oracle.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <limits>
#include <thread>

#include "alaam/error.hpp"
#include "alaam/io.hpp"

namespace alaam {

namespace {

constexpr std::uint64_t kRecountPeriod = 1u << 12;

// Streaming log-sum-exp accumulator for sum w, sum w d, sum w d d^T with
// weights w = exp(l - max_l).
struct Accumulator {
    double max_l = -std::numeric_limits<double>::infinity();
    double s0 = 0;
    Eigen::VectorXd s1;
    Eigen::MatrixXd s2;

    explicit Accumulator(Eigen::Index p) : s1(Eigen::VectorXd::Zero(p)), s2(Eigen::MatrixXd::Zero(p, p)) {}

    void rescale(double new_max) {
        const double f = std::exp(max_l - new_max);
        s0 *= f;
        s1 *= f;
        s2 *= f;
        max_l = new_max;
    }

    void add(double l, const Eigen::VectorXd& d) {
        if (l > max_l) rescale(l);
        const double w = std::exp(l - max_l);
        s0 += w;
        s1.noalias() += w * d;
        s2.selfadjointView<Eigen::Lower>().rankUpdate(d, w);
    }

    void merge(const Accumulator& o) {
        if (o.s0 == 0) return;
        if (o.max_l > max_l) rescale(o.max_l);
        const double f = std::exp(o.max_l - max_l);
        s0 += f * o.s0;
        s1 += f * o.s1;
        s2 += f * o.s2;
    }
};

void check_recount(const EffectSet& set, const OutcomeVector& y, std::vector<double>& z) {
    const auto exact = set.statistics(y);
    for (std::size_t k = 0; k < z.size(); ++k) {
        if (std::abs(exact[k] - z[k]) > 1e-9 * std::max(1.0, std::abs(exact[k])))
            throw KernelInconsistencyError("enumeration: incremental " + set.specs()[k].name() + " = " +
                                           format_double(z[k]) + ", recount " + format_double(exact[k]));
    }
    z = exact;
}

}  // namespace

std::size_t ExactDistribution::index_of(const OutcomeVector& y) const {
    std::size_t idx = 0;
    for (std::size_t b = 0; b < free_nodes.size(); ++b)
        if (y[free_nodes[b]]) idx |= std::size_t{1} << b;
    return idx;
}

double ExactDistribution::probability(const OutcomeVector& y) const {
    if (probabilities.empty()) throw ModelError("probability table was not kept");
    for (NodeId i = 0; i < static_cast<NodeId>(base.size()); ++i)
        if (base.fixed(i) && y[i] != base[i]) return 0.0;
    return probabilities[index_of(y)];
}

ExactDistribution enumerate(const EffectSet& set, std::span<const double> theta, const OutcomeVector& base,
                            const OracleOptions& opts) {
    if (theta.size() != set.size()) throw ModelError("theta length does not match the effect list");
    ExactDistribution out;
    out.free_nodes = base.free_nodes();
    const std::size_t nf = out.free_nodes.size();
    if (nf > kEnumerationCap)
        throw ModelError("exact enumeration refused: " + std::to_string(nf) + " free nodes exceeds the cap of " +
                         std::to_string(kEnumerationCap));
    for (const auto& e : set.specs()) out.effect_names.push_back(e.name());
    out.base = base;

    const auto p = static_cast<Eigen::Index>(set.size());
    const Eigen::Map<const Eigen::VectorXd> th(theta.data(), p);
    OutcomeVector zero_state = base;
    for (NodeId i : out.free_nodes) zero_state.set(i, false);
    const auto shift_v = set.statistics(zero_state);
    const Eigen::Map<const Eigen::VectorXd> shift(shift_v.data(), p);

    // Leading bits split the space into partitions with private accumulators,
    // merged in fixed order so the result does not depend on the thread count.
    const std::size_t lead = std::min<std::size_t>(4, nf);
    const std::size_t low = nf - lead;
    const std::size_t n_parts = std::size_t{1} << lead;
    const std::uint64_t part_size = std::uint64_t{1} << low;
    std::vector<double> log_weights;
    if (opts.keep_table) log_weights.resize(std::size_t{1} << nf);
    std::vector<Accumulator> parts(n_parts, Accumulator(p));

    auto run_part = [&](std::size_t part) {
        OutcomeVector y = zero_state;
        for (std::size_t b = 0; b < lead; ++b)
            if (part >> b & 1) y.set(out.free_nodes[low + b], true);
        std::vector<double> z = set.statistics(y);
        std::vector<double> delta(set.size());
        Eigen::VectorXd d(p);
        auto& acc = parts[part];
        const std::size_t base_index = part << low;
        for (std::uint64_t t = 0; t < part_size; ++t) {
            if (t > 0) {
                const int bit = std::countr_zero(t);
                const NodeId node = out.free_nodes[static_cast<std::size_t>(bit)];
                set.change_stats(y, node, delta);
                const double sign = y[node] ? -1.0 : 1.0;
                for (std::size_t k = 0; k < z.size(); ++k) z[k] += sign * delta[k];
                y.flip(node);
                if (t % kRecountPeriod == 0) check_recount(set, y, z);
            }
            for (Eigen::Index k = 0; k < p; ++k) d[k] = z[static_cast<std::size_t>(k)] - shift[k];
            const double l = th.dot(d);
            acc.add(l, d);
            if (opts.keep_table) log_weights[base_index | (t ^ (t >> 1))] = l;
        }
        if (part_size > 1) check_recount(set, y, z);
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(n_parts)));
    if (workers == 1) {
        for (std::size_t part = 0; part < n_parts; ++part) run_part(part);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::atomic<bool> failed{false};
        {
            std::vector<std::jthread> pool;
            for (unsigned w = 0; w < workers; ++w)
                pool.emplace_back([&] {
                    for (std::size_t part; (part = next.fetch_add(1)) < n_parts && !failed;) {
                        try {
                            run_part(part);
                        } catch (...) {
                            if (!failed.exchange(true)) failure = std::current_exception();
                        }
                    }
                });
        }
        if (failure) std::rethrow_exception(failure);
    }

    Accumulator total(p);
    for (const auto& a : parts) total.merge(a);
    const Eigen::VectorXd ed = total.s1 / total.s0;
    Eigen::MatrixXd edd = total.s2 / total.s0;
    edd = edd.selfadjointView<Eigen::Lower>();
    // log kappa is taken against the unshifted statistics
    out.log_kappa = total.max_l + std::log(total.s0) + th.dot(shift);
    out.mean = shift + ed;
    out.cov = edd - ed * ed.transpose();
    if (opts.keep_table) {
        const double lk = total.max_l + std::log(total.s0);
        out.probabilities.resize(log_weights.size());
        for (std::size_t i = 0; i < log_weights.size(); ++i) out.probabilities[i] = std::exp(log_weights[i] - lk);
    }
    return out;
}

ExactDistribution enumerate(const Model& m, const Graph& g, const CovariateTable& w, const OutcomeVector& base,
                            const OracleOptions& opts) {
    const EffectSet set(m.effects(), g, w);
    return enumerate(set, m.theta(), base, opts);
}

ExactMle exact_mle(std::span<const double> z_obs, const EffectSet& set, const OutcomeVector& base,
                   std::vector<double> theta0, const OracleOptions& opts) {
    const auto p = static_cast<Eigen::Index>(set.size());
    if (z_obs.size() != set.size()) throw ModelError("observed statistic length does not match the effect list");
    const std::size_t nf = base.free_nodes().size();
    if (nf > kExactMleCap)
        throw ModelError("exact MLE refused: " + std::to_string(nf) + " free nodes exceeds the cap of " +
                         std::to_string(kExactMleCap));
    const auto ranges = set.attainable_range(base);
    for (std::size_t k = 0; k < set.size(); ++k) {
        const auto [lo, hi] = ranges[k];
        const double tol = 1e-9 * std::max(1.0, std::abs(z_obs[k]));
        if (z_obs[k] <= lo + tol || z_obs[k] >= hi - tol)
            throw NonExistenceError("MLE does not exist: observed " + set.specs()[k].name() + " = " +
                                    format_double(z_obs[k]) + " is on the boundary of its attainable range [" +
                                    format_double(lo) + ", " + format_double(hi) + "]");
    }

    if (theta0.empty()) theta0.assign(set.size(), 0.0);
    Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(theta0.data(), p);
    const Eigen::Map<const Eigen::VectorXd> zo(z_obs.data(), p);
    auto eval = [&](const Eigen::VectorXd& t) {
        return enumerate(set, std::span<const double>(t.data(), static_cast<std::size_t>(p)), base, opts);
    };
    auto loglik = [&](const Eigen::VectorXd& t, const ExactDistribution& d) { return t.dot(zo) - d.log_kappa; };

    constexpr int kMaxIterations = 200;
    constexpr double kDivergence = 1e3;
    ExactDistribution dist = eval(theta);
    for (int it = 0; it <= kMaxIterations; ++it) {
        const Eigen::VectorXd grad = zo - dist.mean;
        const double gnorm = grad.lpNorm<Eigen::Infinity>();
        if (gnorm < 1e-8) return {{theta.data(), theta.data() + p}, it, gnorm};
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(dist.cov);
        if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 1e-14 * dist.cov.diagonal().maxCoeff())
            throw SingularCovarianceError("exact covariance of the statistics is singular");
        Eigen::VectorXd step = ldlt.solve(grad);
        const double smax = step.lpNorm<Eigen::Infinity>();
        if (smax > 5.0) step *= 5.0 / smax;
        const double l0 = loglik(theta, dist);
        double t = 1.0;
        bool moved = false;
        for (int half = 0; half < 50; ++half, t *= 0.5) {
            const Eigen::VectorXd cand = theta + t * step;
            auto cd = eval(cand);
            if (loglik(cand, cd) >= l0 - 1e-12 * std::max(1.0, std::abs(l0))) {
                theta = cand;
                dist = std::move(cd);
                moved = true;
                break;
            }
        }
        if (!moved) break;
        if (theta.lpNorm<Eigen::Infinity>() > kDivergence)
            throw NonExistenceError("MLE does not exist: Newton ascent diverged (|theta| > 1000)");
    }
    throw NonExistenceError("MLE not found: Newton ascent did not converge (gradient stayed above 1e-8)");
}

}  // namespace alaam
