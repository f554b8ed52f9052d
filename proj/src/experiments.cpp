#include "alaam/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include "alaam/error.hpp"
#include "alaam/io.hpp"
#include "alaam/stats.hpp"

namespace alaam {

std::vector<double> Grid::values() const {
    if (!(step > 0)) throw ModelError("sweep grid step must be positive");
    if (hi < lo) throw ModelError("sweep grid is empty (hi < lo)");
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-6)) + 1;
    std::vector<double> v(count);
    for (std::size_t i = 0; i < count; ++i) v[i] = lo + static_cast<double>(i) * step;
    return v;
}

SweepTable sweep(const SweepConfig& cfg, const Model& m, const Graph& g, const CovariateTable& w,
                 const OutcomeVector& y_obs) {
    Model model = m;
    auto idx = model.index_of(cfg.varied);
    if (!idx) {
        model.add(cfg.varied, 0.0);
        idx = model.size() - 1;
    }
    const EffectSet set(model.effects(), g, w);
    const auto grid = cfg.grid.values();
    SamplerConfig base = cfg.sampler;
    const std::uint64_t nf = std::max<std::size_t>(1, y_obs.free_nodes().size());
    if (base.burn_in == 0) base.burn_in = 100 * nf;
    if (base.interval == 0) base.interval = 10 * nf;
    base.validate();

    SweepTable t;
    t.effect_names = model.names();
    t.varied_index = *idx;
    t.directed = g.directed();
    t.points.resize(grid.size());

    auto run_point = [&](std::size_t k) {
        auto theta = model.theta();
        theta[*idx] = grid[k];
        SamplerConfig sc = base;
        sc.seed = derive_seed(cfg.sampler.seed, k);
        auto& pt = t.points[k];
        pt.theta = grid[k];
        pt.batch = simulate(set, theta, y_obs, sc);
        const auto c = pt.batch.z.col(static_cast<Eigen::Index>(*idx));
        const std::vector<double> col(c.begin(), c.end());
        pt.mean = mean(col);
        pt.variance = variance(col);
        std::vector<double> deg;
        for (double d : pt.batch.mean_degree_y1)
            if (!std::isnan(d)) deg.push_back(d);
        pt.mean_degree_y1 = deg.empty() ? std::numeric_limits<double>::quiet_NaN() : mean(deg);
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(grid.size())));
    if (workers == 1) {
        for (std::size_t k = 0; k < grid.size(); ++k) run_point(k);
        return t;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr failure;
    {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < workers; ++i)
            pool.emplace_back([&] {
                for (std::size_t k; !failed && (k = next.fetch_add(1)) < grid.size();) {
                    try {
                        run_point(k);
                    } catch (...) {
                        if (!failed.exchange(true)) failure = std::current_exception();
                    }
                }
            });
    }
    if (failure) std::rethrow_exception(failure);
    return t;
}

void write_sweep_csv(std::ostream& out, const SweepTable& t) {
    out << "theta,sample";
    for (const auto& n : t.effect_names) out << ',' << n;
    out << ",mean_degree_y1";
    if (t.directed) out << ",mean_indegree_y1,mean_outdegree_y1";
    out << '\n';
    for (const auto& pt : t.points) {
        const std::string th = format_double(pt.theta);
        const auto& b = pt.batch;
        for (std::size_t s = 0; s < b.size(); ++s) {
            out << th << ',' << s;
            for (Eigen::Index k = 0; k < b.z.cols(); ++k) out << ',' << format_double(b.z(static_cast<Eigen::Index>(s), k));
            out << ',' << format_double(b.mean_degree_y1[s]);
            if (t.directed) out << ',' << format_double(b.mean_indegree_y1[s]) << ',' << format_double(b.mean_outdegree_y1[s]);
            out << '\n';
        }
    }
}

void write_sweep_summary_csv(std::ostream& out, const SweepTable& t) {
    out << "theta,mean,variance,mean_degree_y1\n";
    for (const auto& pt : t.points)
        out << format_double(pt.theta) << ',' << format_double(pt.mean) << ',' << format_double(pt.variance) << ','
            << format_double(pt.mean_degree_y1) << '\n';
}

TransitionReport detect_transition(const std::vector<double>& theta, const std::vector<double>& mean_v,
                                   const std::vector<double>& variance_v, const std::vector<double>& mean_degree,
                                   const TransitionThresholds& th) {
    const std::size_t n = theta.size();
    if (n < 20) throw ModelError("transition detection needs at least 20 grid points");
    if (mean_v.size() != n || variance_v.size() != n || mean_degree.size() != n)
        throw ModelError("transition detection: column lengths differ");
    TransitionReport r;
    const auto peak = std::max_element(variance_v.begin(), variance_v.end());
    const auto pi = static_cast<std::size_t>(peak - variance_v.begin());
    r.peak_theta = theta[pi];
    r.peak_variance = *peak;
    const double med = quantile(variance_v, 0.5);
    if (med > 0)
        r.peak_ratio = *peak / med;
    else
        r.peak_ratio = *peak > 0 ? std::numeric_limits<double>::infinity() : 1.0;

    const auto [mn, mx] = std::minmax_element(mean_v.begin(), mean_v.end());
    const double range = *mx - *mn;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double jump = range > 0 ? std::abs(mean_v[i + 1] - mean_v[i]) / range : 0.0;
        if (jump > r.max_jump) {
            r.max_jump = jump;
            r.jump_theta = theta[i];
        }
    }
    r.spearman_mean = spearman(theta, mean_v);
    r.spearman_degree = spearman(theta, mean_degree);
    r.near_degenerate = r.peak_ratio > th.peak_ratio && r.max_jump > th.jump;
    return r;
}

TransitionReport detect_transition(const SweepTable& t, const TransitionThresholds& th) {
    std::vector<double> theta, m, v, d;
    for (const auto& pt : t.points) {
        theta.push_back(pt.theta);
        m.push_back(pt.mean);
        v.push_back(pt.variance);
        d.push_back(pt.mean_degree_y1);
    }
    return detect_transition(theta, m, v, d, th);
}

void write_key_value(std::ostream& out, const TransitionReport& r) {
    out << "classification=" << (r.near_degenerate ? "near-degenerate" : "smooth") << '\n'
        << "peak_theta=" << format_double(r.peak_theta) << '\n'
        << "peak_variance=" << format_double(r.peak_variance) << '\n'
        << "peak_ratio=" << format_double(r.peak_ratio) << '\n'
        << "max_normalized_jump=" << format_double(r.max_jump) << '\n'
        << "jump_theta=" << format_double(r.jump_theta) << '\n'
        << "spearman_theta_mean=" << format_double(r.spearman_mean) << '\n'
        << "spearman_theta_mean_degree_y1=" << format_double(r.spearman_degree) << '\n';
}

Graph heavy_tailed_graph(const HeavyTailedConfig& cfg) {
    if (cfg.clique < 2 || cfg.n < cfg.clique) throw ModelError("heavy-tailed graph: need n >= clique >= 2");
    if (!(cfg.tail > 1.0)) throw ModelError("heavy-tailed graph: tail exponent must exceed 1");
    Rng rng(cfg.seed);
    std::vector<std::pair<NodeId, NodeId>> edges;
    std::vector<NodeId> endpoints;  // each node repeated once per incident edge
    for (std::size_t i = 0; i < cfg.clique; ++i)
        for (std::size_t j = i + 1; j < cfg.clique; ++j) {
            edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
            endpoints.push_back(static_cast<NodeId>(i));
            endpoints.push_back(static_cast<NodeId>(j));
        }
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<NodeId> targets;
    std::vector<char> taken(cfg.n, 0);
    for (std::size_t v = cfg.clique; v < cfg.n; ++v) {
        const double u = 1.0 - unif(rng);  // (0, 1]
        const double draw = std::floor(std::pow(u, -1.0 / (cfg.tail - 1.0)));
        const auto m = static_cast<std::size_t>(std::min<double>({draw, static_cast<double>(cfg.m_cap), static_cast<double>(v)}));
        targets.clear();
        std::uniform_int_distribution<std::size_t> pick(0, endpoints.size() - 1);
        while (targets.size() < m) {
            const NodeId t = endpoints[pick(rng)];
            if (taken[static_cast<std::size_t>(t)]) continue;
            taken[static_cast<std::size_t>(t)] = 1;
            targets.push_back(t);
        }
        for (NodeId t : targets) {
            taken[static_cast<std::size_t>(t)] = 0;
            edges.emplace_back(t, static_cast<NodeId>(v));
            endpoints.push_back(t);
            endpoints.push_back(static_cast<NodeId>(v));
        }
    }
    return Graph::from_arcs(cfg.n, false, std::move(edges));
}

}  // namespace alaam
