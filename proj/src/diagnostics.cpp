#include "alaam/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "alaam/io.hpp"

namespace alaam {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> column(const SampleBatch& b, std::size_t k) {
    const auto c = b.z.col(static_cast<Eigen::Index>(k));
    return {c.begin(), c.end()};
}

}  // namespace

std::vector<EffectSpec> default_gof_suite(const Graph& g, const CovariateTable& w) {
    std::vector<EffectSpec> out;
    for (auto k : all_kinds()) {
        const auto d = directionality(k);
        if ((d == Directionality::DirectedOnly && !g.directed()) || (d == Directionality::UndirectedOnly && g.directed()))
            continue;
        if (!uses_column(k)) {
            out.push_back({k, kDefaultDecay, {}});
            continue;
        }
        for (const auto& c : w.columns()) {
            const bool continuous = c.kind == ColumnKind::Continuous;
            if ((k == EffectKind::ContinuousCovariate) == continuous) out.push_back({k, kDefaultDecay, c.name});
        }
    }
    return out;
}

SamplerConfig diagnostic_sampler(const OutcomeVector& y_obs, std::size_t n_samples, std::uint64_t seed) {
    const std::uint64_t nf = std::max<std::size_t>(1, y_obs.free_nodes().size());
    SamplerConfig cfg;
    cfg.burn_in = 100 * nf;
    cfg.interval = 10 * nf;
    cfg.n_samples = n_samples;
    cfg.seed = seed;
    cfg.initial = {InitialState::Kind::Observed, -1.0};
    return cfg;
}

GofReport gof(const Model& m, const Graph& g, const CovariateTable& w, const OutcomeVector& y_obs,
              std::vector<EffectSpec> suite, const SamplerConfig& cfg) {
    std::vector<EffectSpec> effects;
    std::vector<double> theta;
    for (std::size_t k = 0; k < m.size(); ++k) {
        if (std::find(suite.begin(), suite.end(), m.effects()[k]) == suite.end()) {
            effects.push_back(m.effects()[k]);
            theta.push_back(m.theta()[k]);
        }
    }
    for (const auto& e : suite) {
        const auto idx = m.index_of(e);
        effects.push_back(e);
        theta.push_back(idx ? m.theta()[*idx] : 0.0);
    }
    const EffectSet set(effects, g, w);
    GofReport r;
    r.batch = simulate(set, theta, y_obs, cfg);
    const auto z_obs = set.statistics(y_obs);
    for (std::size_t k = 0; k < effects.size(); ++k) {
        GofRow row;
        row.name = effects[k].name();
        row.in_model = m.index_of(effects[k]).has_value();
        row.observed = z_obs[k];
        const auto col = column(r.batch, k);
        row.sim_mean = mean(col);
        row.sim_sd = sd(col);
        row.zero_variance = !(row.sim_sd > 0);
        row.t = row.zero_variance ? kNaN : (row.sim_mean - row.observed) / row.sim_sd;
        row.good_fit = !row.zero_variance && std::abs(row.t) < 1.0;
        r.rows.push_back(row);
    }
    return r;
}

void write_csv(std::ostream& out, const GofReport& r) {
    out << "effect,in_model,observed,sim_mean,sim_sd,t_ratio,zero_variance,good_fit\n";
    for (const auto& row : r.rows)
        out << row.name << ',' << (row.in_model ? "true" : "false") << ',' << format_double(row.observed) << ','
            << format_double(row.sim_mean) << ',' << format_double(row.sim_sd) << ',' << format_double(row.t) << ','
            << (row.zero_variance ? "true" : "false") << ',' << (row.good_fit ? "true" : "false") << '\n';
}

bool DegeneracyCheck::pass() const {
    return std::all_of(rows.begin(), rows.end(), [](const DegeneracyRow& r) { return r.pass; });
}

DegeneracyCheck degeneracy_check(const Model& m, const Graph& g, const CovariateTable& w, const OutcomeVector& y_obs,
                                 const SamplerConfig& cfg, double band, std::size_t bins) {
    const EffectSet set(m.effects(), g, w);
    const auto batch = simulate(set, m.theta(), y_obs, cfg);
    const auto z_obs = set.statistics(y_obs);
    DegeneracyCheck d;
    d.band = band;
    const double tail = (1.0 - band) / 2.0;
    for (std::size_t k = 0; k < set.size(); ++k) {
        DegeneracyRow row;
        row.name = set.specs()[k].name();
        row.trace = column(batch, k);
        row.observed = z_obs[k];
        row.mean = mean(row.trace);
        row.sd = sd(row.trace);
        row.zero_variance = !(row.sd > 0);
        row.lower = quantile(row.trace, tail);
        row.upper = quantile(row.trace, 1.0 - tail);
        row.pass = row.observed >= row.lower && row.observed <= row.upper;
        const auto [mn, mx] = std::minmax_element(row.trace.begin(), row.trace.end());
        const std::size_t nb = *mx > *mn ? bins : 1;
        const double width = nb > 1 ? (*mx - *mn) / static_cast<double>(nb) : 0.0;
        for (std::size_t b = 0; b < nb; ++b)
            row.histogram.push_back({*mn + width * b, b + 1 == nb ? *mx : *mn + width * (b + 1), 0});
        for (double v : row.trace) {
            std::size_t b = width > 0 ? static_cast<std::size_t>((v - *mn) / width) : 0;
            ++row.histogram[std::min(b, nb - 1)].count;
        }
        d.rows.push_back(std::move(row));
    }
    return d;
}

void write_summary_csv(std::ostream& out, const DegeneracyCheck& d) {
    out << "effect,observed,mean,sd,lower,upper,zero_variance,verdict\n";
    for (const auto& r : d.rows)
        out << r.name << ',' << format_double(r.observed) << ',' << format_double(r.mean) << ',' << format_double(r.sd)
            << ',' << format_double(r.lower) << ',' << format_double(r.upper) << ','
            << (r.zero_variance ? "true" : "false") << ',' << (r.pass ? "pass" : "fail") << '\n';
}

void write_trace_csv(std::ostream& out, const DegeneracyCheck& d) {
    out << "effect,sample,value,observed\n";
    for (const auto& r : d.rows)
        for (std::size_t s = 0; s < r.trace.size(); ++s)
            out << r.name << ',' << s << ',' << format_double(r.trace[s]) << ',' << format_double(r.observed) << '\n';
}

void write_histogram_csv(std::ostream& out, const DegeneracyCheck& d) {
    out << "effect,bin_lo,bin_hi,count,observed,mean,lower,upper\n";
    for (const auto& r : d.rows)
        for (const auto& b : r.histogram)
            out << r.name << ',' << format_double(b.lo) << ',' << format_double(b.hi) << ',' << b.count << ','
                << format_double(r.observed) << ',' << format_double(r.mean) << ',' << format_double(r.lower) << ','
                << format_double(r.upper) << '\n';
}

namespace {

struct DegreeSeries {
    std::vector<double> counts;        // pooled histogram over samples
    std::vector<double> sample_means;  // mean degree of y=1 nodes per sample
    double total = 0, sum = 0;
};

void accumulate(DegreeSeries& s, const Graph& g, const OutcomeVector& y, int cap, char dir) {
    double n1 = 0, sum = 0;
    for (NodeId i = 0; i < static_cast<NodeId>(y.size()); ++i) {
        if (!y[i]) continue;
        const int d = dir == 'i' ? g.in_degree(i) : dir == 'o' ? g.out_degree(i) : g.degree(i);
        s.counts[static_cast<std::size_t>(std::min(d, cap))] += 1;
        n1 += 1;
        sum += d;
    }
    s.total += n1;
    s.sum += sum;
    if (n1 > 0) s.sample_means.push_back(sum / n1);
}

}  // namespace

AttributeDegreeReport attribute_degree_gof(const Model& m, const Graph& g, const CovariateTable& w,
                                           const OutcomeVector& y_obs, const SamplerConfig& cfg) {
    SamplerConfig c = cfg;
    c.keep_y = true;
    const auto batch = simulate(m, g, w, y_obs, c);

    AttributeDegreeReport r;
    r.alaam_density = mean(batch.density);

    // Baseline: free nodes independently 1 with the ALAAM mean density.
    Rng rng(derive_seed(cfg.seed, 7));
    std::vector<OutcomeVector> baseline;
    std::vector<double> base_density;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        baseline.push_back(initial_outcome(y_obs, {InitialState::Kind::Random, r.alaam_density}, rng));
        base_density.push_back(static_cast<double>(baseline.back().count_ones()) / static_cast<double>(y_obs.size()));
    }
    r.baseline_density = mean(base_density);

    int max_deg = 0;
    for (NodeId i = 0; i < static_cast<NodeId>(g.num_nodes()); ++i)
        max_deg = std::max({max_deg, g.degree(i), g.in_degree(i), g.out_degree(i)});
    r.cap = static_cast<int>(std::ceil(max_deg * 1.1));

    const std::vector<std::pair<std::string, char>> dirs =
        g.directed() ? std::vector<std::pair<std::string, char>>{{"in", 'i'}, {"out", 'o'}}
                     : std::vector<std::pair<std::string, char>>{{"all", 'a'}};
    for (const auto& [name, dir] : dirs) {
        DegreeSeries a, b, o;
        for (auto* s : {&a, &b, &o}) s->counts.assign(static_cast<std::size_t>(r.cap) + 1, 0.0);
        for (const auto& y : batch.y) accumulate(a, g, y, r.cap, dir);
        for (const auto& y : baseline) accumulate(b, g, y, r.cap, dir);
        accumulate(o, g, y_obs, r.cap, dir);
        DegreeComparison cmp;
        cmp.direction = name;
        for (auto [src, s] : {std::pair{"alaam", &a}, std::pair{"baseline", &b}, std::pair{"observed", &o}}) {
            DegreeDistribution dd;
            dd.source = src;
            dd.direction = name;
            dd.mean = s->total > 0 ? s->sum / s->total : kNaN;
            for (double c2 : s->counts) dd.fraction.push_back(s->total > 0 ? c2 / s->total : 0.0);
            r.distributions.push_back(std::move(dd));
        }
        cmp.alaam_mean = a.total > 0 ? a.sum / a.total : kNaN;
        cmp.baseline_mean = b.total > 0 ? b.sum / b.total : kNaN;
        cmp.observed_mean = o.total > 0 ? o.sum / o.total : kNaN;
        cmp.test = welch_t_test(a.sample_means, b.sample_means);
        r.comparisons.push_back(cmp);
    }
    return r;
}

void write_distribution_csv(std::ostream& out, const AttributeDegreeReport& r) {
    out << "source,direction,degree,fraction\n";
    for (const auto& d : r.distributions)
        for (std::size_t k = 0; k < d.fraction.size(); ++k)
            out << d.source << ',' << d.direction << ',' << k << ',' << format_double(d.fraction[k]) << '\n';
}

void write_means_csv(std::ostream& out, const AttributeDegreeReport& r) {
    out << "direction,alaam_mean,baseline_mean,observed_mean,alaam_density,baseline_density,welch_t,welch_df,p_value\n";
    for (const auto& c : r.comparisons)
        out << c.direction << ',' << format_double(c.alaam_mean) << ',' << format_double(c.baseline_mean) << ','
            << format_double(c.observed_mean) << ',' << format_double(r.alaam_density) << ','
            << format_double(r.baseline_density) << ',' << format_double(c.test.t) << ','
            << format_double(c.test.df) << ',' << format_double(c.test.p_value) << '\n';
}

}  // namespace alaam
