#include "alaam/sampler.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "alaam/error.hpp"
#include "alaam/io.hpp"

namespace alaam {

InitialState InitialState::parse(std::string_view text) {
    text = trim(text);
    if (text == "observed") return {Kind::Observed, -1.0};
    if (text == "zero" || text == "all-zero") return {Kind::Zero, -1.0};
    if (text == "random") return {Kind::Random, -1.0};
    if (text.starts_with("random(") && text.ends_with(")")) {
        const auto p = parse_double(text.substr(7, text.size() - 8));
        if (p && *p >= 0.0 && *p <= 1.0) return {Kind::Random, *p};
    }
    throw ModelError("invalid initial state '" + std::string(text) +
                     "' (expected observed, zero, random or random(p) with 0 <= p <= 1)");
}

std::string InitialState::to_string() const {
    switch (kind) {
        case Kind::Observed: return "observed";
        case Kind::Zero: return "zero";
        case Kind::Random: return p < 0 ? "random" : "random(" + format_double(p) + ")";
    }
    return {};
}

void SamplerConfig::validate() const {
    if (interval < 1) throw ModelError("sampler interval must be at least 1");
    if (n_samples < 1) throw ModelError("sampler n_samples must be at least 1");
    if (resync_every < 1) throw ModelError("sampler resync interval must be at least 1");
}

Eigen::VectorXd SampleBatch::mean() const { return z.colwise().mean().transpose(); }

Eigen::MatrixXd SampleBatch::covariance() const {
    const Eigen::MatrixXd c = z.rowwise() - z.colwise().mean();
    if (z.rows() < 2) return Eigen::MatrixXd::Zero(z.cols(), z.cols());
    return (c.transpose() * c) / static_cast<double>(z.rows() - 1);
}

StepResult mcmc_step(const EffectSet& set, std::span<const double> theta, std::span<const NodeId> free_nodes,
                     OutcomeVector& y, Rng& rng, std::span<double> delta) {
    StepResult r;
    if (free_nodes.empty()) return r;
    std::uniform_int_distribution<std::size_t> pick(0, free_nodes.size() - 1);
    r.node = free_nodes[pick(rng)];
    set.change_stats(y, r.node, delta);
    double lr = 0.0;
    for (std::size_t k = 0; k < delta.size(); ++k) lr += theta[k] * delta[k];
    r.turned_on = !y[r.node];
    if (!r.turned_on) lr = -lr;
    if (lr >= 0.0) {
        r.accepted = true;
    } else {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        r.accepted = unif(rng) < std::exp(lr);
    }
    if (r.accepted) y.flip(r.node);
    return r;
}

namespace {

OutcomeVector checked_length(OutcomeVector y, const Graph& g) {
    if (y.size() != g.num_nodes()) throw ModelError("outcome vector length does not match the graph");
    return y;
}

}  // namespace

Chain::Chain(const EffectSet& set, std::vector<double> theta, OutcomeVector y, std::uint64_t seed)
    : set_(&set), y_(checked_length(std::move(y), set.graph())), free_(y_.free_nodes()), z_(set.statistics(y_)), delta_(set.size()), rng_(seed) {
    set_theta(std::move(theta));
    const auto& g = set.graph();
    for (NodeId i = 0; i < static_cast<NodeId>(y_.size()); ++i) {
        if (!y_[i]) continue;
        ++ones_;
        deg_sum_ += g.degree(i);
        in_sum_ += g.in_degree(i);
        out_sum_ += g.out_degree(i);
    }
}

void Chain::set_theta(std::vector<double> theta) {
    if (theta.size() != set_->size()) throw ModelError("theta length does not match the effect list");
    theta_ = std::move(theta);
}

std::uint64_t Chain::run(std::uint64_t steps) {
    const auto& g = set_->graph();
    std::uint64_t acc = 0;
    for (std::uint64_t s = 0; s < steps; ++s) {
        const auto r = mcmc_step(*set_, theta_, free_, y_, rng_, delta_);
        if (!r.accepted) continue;
        ++acc;
        const double sign = r.turned_on ? 1.0 : -1.0;
        for (std::size_t k = 0; k < z_.size(); ++k) z_[k] += sign * delta_[k];
        const int s1 = r.turned_on ? 1 : -1;
        ones_ += s1;
        deg_sum_ += s1 * g.degree(r.node);
        in_sum_ += s1 * g.in_degree(r.node);
        out_sum_ += s1 * g.out_degree(r.node);
    }
    proposals_ += free_.empty() ? 0 : steps;
    accepted_ += acc;
    return acc;
}

void Chain::resync() {
    const auto exact = set_->statistics(y_);
    for (std::size_t k = 0; k < exact.size(); ++k) {
        const double tol = 1e-6 * std::max(1.0, std::abs(exact[k]));
        if (std::abs(exact[k] - z_[k]) > tol)
            throw KernelInconsistencyError("incremental statistic " + set_->specs()[k].name() + " = " +
                                           format_double(z_[k]) + " but recount gives " + format_double(exact[k]));
    }
    z_ = exact;
}

double Chain::mean_degree_y1() const {
    return ones_ ? static_cast<double>(deg_sum_) / ones_ : std::numeric_limits<double>::quiet_NaN();
}
double Chain::mean_indegree_y1() const {
    return ones_ ? static_cast<double>(in_sum_) / ones_ : std::numeric_limits<double>::quiet_NaN();
}
double Chain::mean_outdegree_y1() const {
    return ones_ ? static_cast<double>(out_sum_) / ones_ : std::numeric_limits<double>::quiet_NaN();
}

OutcomeVector initial_outcome(const OutcomeVector& observed, const InitialState& init, Rng& rng) {
    OutcomeVector y = observed;
    if (init.kind == InitialState::Kind::Observed) return y;
    const auto free = observed.free_nodes();
    double p = init.p;
    if (init.kind == InitialState::Kind::Random && p < 0) {
        std::size_t ones = 0;
        for (NodeId i : free) ones += observed[i];
        p = free.empty() ? 0.0 : static_cast<double>(ones) / free.size();
    }
    std::bernoulli_distribution coin(init.kind == InitialState::Kind::Zero ? 0.0 : p);
    for (NodeId i : free) y.set(i, coin(rng));
    return y;
}

SampleBatch collect(Chain& chain, std::uint64_t burn_in, std::uint64_t interval, std::size_t n_samples,
                    std::size_t resync_every, bool keep_y) {
    const auto& set = chain.effects();
    SampleBatch b;
    for (const auto& e : set.specs()) b.effect_names.push_back(e.name());
    b.z.resize(static_cast<Eigen::Index>(n_samples), static_cast<Eigen::Index>(set.size()));
    b.mean_degree_y1.reserve(n_samples);
    b.mean_indegree_y1.reserve(n_samples);
    b.mean_outdegree_y1.reserve(n_samples);
    b.density.reserve(n_samples);
    const double n = static_cast<double>(std::max<std::size_t>(1, chain.y().size()));
    const auto p0 = chain.proposals();
    const auto a0 = chain.accepted();

    chain.run(burn_in);
    for (std::size_t s = 0; s < n_samples; ++s) {
        chain.run(interval);
        if ((s + 1) % resync_every == 0 || s + 1 == n_samples) chain.resync();
        for (std::size_t k = 0; k < set.size(); ++k)
            b.z(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(k)) = chain.z()[k];
        b.mean_degree_y1.push_back(chain.mean_degree_y1());
        b.mean_indegree_y1.push_back(chain.mean_indegree_y1());
        b.mean_outdegree_y1.push_back(chain.mean_outdegree_y1());
        b.density.push_back(static_cast<double>(chain.ones()) / n);
        if (keep_y) b.y.push_back(chain.y());
    }
    b.proposals = chain.proposals() - p0;
    b.accepted = chain.accepted() - a0;
    return b;
}

SampleBatch simulate(const EffectSet& set, std::span<const double> theta, const OutcomeVector& observed,
                     const SamplerConfig& cfg) {
    cfg.validate();
    Rng init_rng(derive_seed(cfg.seed, 0));
    Chain chain(set, {theta.begin(), theta.end()}, initial_outcome(observed, cfg.initial, init_rng), cfg.seed);
    return collect(chain, cfg.burn_in, cfg.interval, cfg.n_samples, cfg.resync_every, cfg.keep_y);
}

SampleBatch simulate(const Model& m, const Graph& g, const CovariateTable& w, const OutcomeVector& observed,
                     const SamplerConfig& cfg) {
    const EffectSet set(m.effects(), g, w);
    return simulate(set, m.theta(), observed, cfg);
}

void write_batch_header(std::ostream& out, const SampleBatch& b, std::span<const std::string> leading) {
    for (const auto& l : leading) out << l << ',';
    out << "sample";
    for (const auto& name : b.effect_names) out << ',' << name;
    out << ",mean_degree_y1,mean_indegree_y1,mean_outdegree_y1\n";
}

void write_batch_rows(std::ostream& out, const SampleBatch& b, std::span<const std::string> leading) {
    for (std::size_t s = 0; s < b.size(); ++s) {
        for (const auto& l : leading) out << l << ',';
        out << s;
        for (Eigen::Index k = 0; k < b.z.cols(); ++k) out << ',' << format_double(b.z(static_cast<Eigen::Index>(s), k));
        out << ',' << format_double(b.mean_degree_y1[s]) << ',' << format_double(b.mean_indegree_y1[s]) << ','
            << format_double(b.mean_outdegree_y1[s]) << '\n';
    }
}

void write_csv(std::ostream& out, const SampleBatch& b) {
    write_batch_header(out, b);
    write_batch_rows(out, b);
}

}  // namespace alaam
