#include "alaam/effects.hpp"

#include <algorithm>
#include <array>

#include "alaam/error.hpp"
#include "alaam/io.hpp"

namespace alaam {

namespace {

constexpr std::array kAllKinds = {
    EffectKind::Density,
    EffectKind::Activity,
    EffectKind::Contagion,
    EffectKind::ContinuousCovariate,
    EffectKind::GWActivity,
    EffectKind::Sender,
    EffectKind::Receiver,
    EffectKind::GWSender,
    EffectKind::GWReceiver,
    EffectKind::Reciprocity,
    EffectKind::ContagionReciprocity,
    EffectKind::EgoInTwoStar,
    EffectKind::EgoOutTwoStar,
    EffectKind::EgoInThreeStar,
    EffectKind::EgoOutThreeStar,
    EffectKind::MixedTwoStar,
    EffectKind::MixedTwoStarSource,
    EffectKind::MixedTwoStarSink,
    EffectKind::TransitiveTriangleT1,
    EffectKind::TransitiveTriangleT3,
    EffectKind::TransitiveTriangleD1,
    EffectKind::TransitiveTriangleU1,
    EffectKind::CyclicTriangleC1,
    EffectKind::CyclicTriangleC3,
    EffectKind::AlterInTwoStar2,
    EffectKind::AlterOutTwoStar2,
    EffectKind::SenderMatch,
    EffectKind::ReceiverMatch,
    EffectKind::ReciprocityMatch,
};

double choose2(double d) { return d * (d - 1) / 2; }
double choose3(double d) { return d * (d - 1) * (d - 2) / 6; }

// |a ∩ b| over sorted lists, optionally counting only members with y = 1.
template <bool kOnlyOnes>
int intersect(std::span<const NodeId> a, std::span<const NodeId> b, const OutcomeVector& y) {
    int count = 0;
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            if (!kOnlyOnes || y[*i]) ++count;
            ++i;
            ++j;
        }
    }
    return count;
}

int count_ones(std::span<const NodeId> nodes, const OutcomeVector& y) {
    int c = 0;
    for (NodeId v : nodes) c += y[v] ? 1 : 0;
    return c;
}

std::string valid_names() {
    std::string s;
    for (auto k : kAllKinds) {
        if (!s.empty()) s += ", ";
        s += kind_name(k);
        if (uses_column(k)) s += k == EffectKind::ContinuousCovariate ? " (as oOc:column)" : ":column";
    }
    return s;
}

}  // namespace

std::string_view kind_name(EffectKind kind) {
    switch (kind) {
        case EffectKind::Density: return "Density";
        case EffectKind::Activity: return "Activity";
        case EffectKind::Contagion: return "Contagion";
        case EffectKind::ContinuousCovariate: return "ContinuousCovariate";
        case EffectKind::GWActivity: return "GWActivity";
        case EffectKind::Sender: return "Sender";
        case EffectKind::Receiver: return "Receiver";
        case EffectKind::GWSender: return "GWSender";
        case EffectKind::GWReceiver: return "GWReceiver";
        case EffectKind::Reciprocity: return "Reciprocity";
        case EffectKind::ContagionReciprocity: return "ContagionReciprocity";
        case EffectKind::EgoInTwoStar: return "EgoInTwoStar";
        case EffectKind::EgoOutTwoStar: return "EgoOutTwoStar";
        case EffectKind::EgoInThreeStar: return "EgoInThreeStar";
        case EffectKind::EgoOutThreeStar: return "EgoOutThreeStar";
        case EffectKind::MixedTwoStar: return "MixedTwoStar";
        case EffectKind::MixedTwoStarSource: return "MixedTwoStarSource";
        case EffectKind::MixedTwoStarSink: return "MixedTwoStarSink";
        case EffectKind::TransitiveTriangleT1: return "TransitiveTriangleT1";
        case EffectKind::TransitiveTriangleT3: return "TransitiveTriangleT3";
        case EffectKind::TransitiveTriangleD1: return "TransitiveTriangleD1";
        case EffectKind::TransitiveTriangleU1: return "TransitiveTriangleU1";
        case EffectKind::CyclicTriangleC1: return "CyclicTriangleC1";
        case EffectKind::CyclicTriangleC3: return "CyclicTriangleC3";
        case EffectKind::AlterInTwoStar2: return "AlterInTwoStar2";
        case EffectKind::AlterOutTwoStar2: return "AlterOutTwoStar2";
        case EffectKind::SenderMatch: return "SenderMatch";
        case EffectKind::ReceiverMatch: return "ReceiverMatch";
        case EffectKind::ReciprocityMatch: return "ReciprocityMatch";
    }
    return "?";
}

Directionality directionality(EffectKind kind) {
    switch (kind) {
        case EffectKind::Density:
        case EffectKind::Contagion:
        case EffectKind::ContinuousCovariate: return Directionality::Any;
        case EffectKind::Activity:
        case EffectKind::GWActivity: return Directionality::UndirectedOnly;
        default: return Directionality::DirectedOnly;
    }
}

bool uses_decay(EffectKind kind) {
    return kind == EffectKind::GWActivity || kind == EffectKind::GWSender || kind == EffectKind::GWReceiver;
}

bool uses_column(EffectKind kind) {
    return kind == EffectKind::ContinuousCovariate || kind == EffectKind::SenderMatch ||
           kind == EffectKind::ReceiverMatch || kind == EffectKind::ReciprocityMatch;
}

std::span<const EffectKind> all_kinds() { return kAllKinds; }

std::string EffectSpec::name() const {
    if (kind == EffectKind::ContinuousCovariate) return "oOc:" + column;
    std::string s(kind_name(kind));
    if (uses_decay(kind) && alpha != kDefaultDecay) s += "(" + format_double(alpha) + ")";
    if (uses_column(kind)) s += ":" + column;
    return s;
}

EffectSpec parse_effect(std::string_view text, const CovariateTable* w) {
    const auto t = trim(text);
    auto fail = [&]() -> EffectSpec {
        throw ModelError("unknown effect '" + std::string(t) + "'; valid effects: " + valid_names());
    };
    auto lookup = [&](std::string_view name) -> std::optional<EffectKind> {
        for (auto k : kAllKinds)
            if (kind_name(k) == name) return k;
        return std::nullopt;
    };

    EffectSpec e;
    if (const auto colon = t.find(':'); colon != std::string_view::npos) {
        const auto head = trim(t.substr(0, colon));
        const auto col = trim(t.substr(colon + 1));
        if (col.empty()) fail();
        if (head == "oOc") {
            e.kind = EffectKind::ContinuousCovariate;
        } else if (auto k = lookup(head); k && uses_column(*k)) {
            e.kind = *k;
        } else {
            fail();
        }
        e.column = std::string(col);
        return e;
    }
    if (t.ends_with("_oOc") && t.size() > 4) {
        e.kind = EffectKind::ContinuousCovariate;
        e.column = std::string(t.substr(0, t.size() - 4));
        return e;
    }
    if (const auto paren = t.find('('); paren != std::string_view::npos) {
        if (!t.ends_with(")")) fail();
        const auto k = lookup(trim(t.substr(0, paren)));
        if (!k || !uses_decay(*k)) fail();
        auto arg = trim(t.substr(paren + 1, t.size() - paren - 2));
        if (arg.starts_with("alpha=")) arg.remove_prefix(6);
        const auto a = parse_double(arg);
        if (!a || !(*a > 0)) throw ModelError("effect '" + std::string(t) + "': decay must be a positive number");
        e.kind = *k;
        e.alpha = *a;
        return e;
    }
    if (const auto k = lookup(t)) {
        if (uses_column(*k)) throw ModelError("effect '" + std::string(t) + "' needs a column, e.g. " +
                                              std::string(t) + ":name");
        e.kind = *k;
        return e;
    }
    if (w) {
        if (const auto* c = w->find(t); c && c->kind != ColumnKind::Categorical) {
            e.kind = EffectKind::ContinuousCovariate;
            e.column = std::string(t);
            return e;
        }
    }
    return fail();
}

void validate(const EffectSpec& e, const Graph& g, const CovariateTable& w) {
    const auto dir = directionality(e.kind);
    if (dir == Directionality::DirectedOnly && !g.directed())
        throw ModelError("effect " + e.name() + " requires a directed network");
    if (dir == Directionality::UndirectedOnly && g.directed())
        throw ModelError("effect " + e.name() + " requires an undirected network");
    if (uses_decay(e.kind) && !(e.alpha > 0)) throw ModelError("effect " + e.name() + ": decay must be positive");
    if (uses_column(e.kind)) {
        const auto* c = w.find(e.column);
        if (!c) throw ModelError("effect " + e.name() + ": no covariate column '" + e.column + "'");
        if (e.kind == EffectKind::ContinuousCovariate && c->kind == ColumnKind::Categorical)
            throw ModelError("effect " + e.name() + ": column '" + e.column + "' is categorical");
        if (e.kind != EffectKind::ContinuousCovariate && c->kind == ColumnKind::Continuous)
            throw ModelError("effect " + e.name() + ": column '" + e.column + "' must be categorical or binary");
        if (c->values.size() != g.num_nodes())
            throw ModelError("effect " + e.name() + ": column length does not match the network");
    }
}

Model::Model(std::vector<EffectSpec> effects, std::vector<double> theta) {
    if (effects.size() != theta.size()) throw ModelError("model has different numbers of effects and parameters");
    for (std::size_t k = 0; k < effects.size(); ++k) add(std::move(effects[k]), theta[k]);
}

void Model::add(EffectSpec e, double theta) {
    if (index_of(e)) throw ModelError("duplicate effect " + e.name() + " in model");
    effects_.push_back(std::move(e));
    theta_.push_back(theta);
}

void Model::set_theta(std::vector<double> theta) {
    if (theta.size() != effects_.size()) throw ModelError("parameter vector length does not match the model");
    theta_ = std::move(theta);
}

std::vector<std::string> Model::names() const {
    std::vector<std::string> out;
    for (const auto& e : effects_) out.push_back(e.name());
    return out;
}

std::optional<std::size_t> Model::index_of(const EffectSpec& e) const {
    for (std::size_t k = 0; k < effects_.size(); ++k)
        if (effects_[k] == e) return k;
    return std::nullopt;
}

EffectSet::EffectSet(std::span<const EffectSpec> effects, const Graph& g, const CovariateTable& w)
    : g_(&g), specs_(effects.begin(), effects.end()) {
    for (const auto& e : specs_) {
        validate(e, g, w);
        bound_.push_back({e.kind, e.alpha, uses_column(e.kind) ? w.find(e.column) : nullptr});
    }
}

double EffectSet::delta(const Bound& b, const Graph& g, const OutcomeVector& y, NodeId i) {
    switch (b.kind) {
        case EffectKind::Density: return 1.0;
        case EffectKind::Activity: return g.degree(i);
        case EffectKind::GWActivity: return std::exp(-b.alpha * g.degree(i));
        case EffectKind::Sender: return g.out_degree(i);
        case EffectKind::Receiver: return g.in_degree(i);
        case EffectKind::GWSender: return std::exp(-b.alpha * g.out_degree(i));
        case EffectKind::GWReceiver: return std::exp(-b.alpha * g.in_degree(i));
        case EffectKind::Contagion: {
            int c = count_ones(g.out_neighbors(i), y);
            if (g.directed()) c += count_ones(g.in_neighbors(i), y);
            return c;
        }
        case EffectKind::Reciprocity: return g.mutual_degree(i);
        case EffectKind::ContagionReciprocity: return intersect<true>(g.out_neighbors(i), g.in_neighbors(i), y);
        case EffectKind::EgoInTwoStar: return choose2(g.in_degree(i));
        case EffectKind::EgoOutTwoStar: return choose2(g.out_degree(i));
        case EffectKind::EgoInThreeStar: return choose3(g.in_degree(i));
        case EffectKind::EgoOutThreeStar: return choose3(g.out_degree(i));
        case EffectKind::MixedTwoStar:
            return static_cast<double>(g.in_degree(i)) * g.out_degree(i) - g.mutual_degree(i);
        case EffectKind::MixedTwoStarSource: {
            double s = 0;
            for (NodeId v : g.out_neighbors(i)) s += g.out_degree(v) - (g.has_arc(v, i) ? 1 : 0);
            return s;
        }
        case EffectKind::MixedTwoStarSink: {
            double s = 0;
            for (NodeId v : g.in_neighbors(i)) s += g.in_degree(v) - (g.has_arc(i, v) ? 1 : 0);
            return s;
        }
        case EffectKind::TransitiveTriangleT1: {
            double s = 0;
            const auto out_i = g.out_neighbors(i);
            for (NodeId j : g.in_neighbors(i)) s += intersect<false>(g.out_neighbors(j), out_i, y);
            return s;
        }
        case EffectKind::TransitiveTriangleD1: {
            double s = 0;
            const auto out_i = g.out_neighbors(i);
            for (NodeId j : out_i) s += intersect<false>(g.out_neighbors(j), out_i, y);
            return s;
        }
        case EffectKind::TransitiveTriangleU1: {
            double s = 0;
            const auto in_i = g.in_neighbors(i);
            for (NodeId j : in_i) s += intersect<false>(g.out_neighbors(j), in_i, y);
            return s;
        }
        case EffectKind::CyclicTriangleC1: {
            double s = 0;
            const auto in_i = g.in_neighbors(i);
            for (NodeId j : g.out_neighbors(i)) s += intersect<false>(g.out_neighbors(j), in_i, y);
            return s;
        }
        case EffectKind::TransitiveTriangleT3: {
            double s = 0;
            const auto out_i = g.out_neighbors(i);
            const auto in_i = g.in_neighbors(i);
            for (NodeId b : out_i)  // i -> b -> c, i -> c
                if (y[b]) s += intersect<true>(out_i, g.out_neighbors(b), y);
            for (NodeId a : in_i) {
                if (!y[a]) continue;
                s += intersect<true>(out_i, g.out_neighbors(a), y);  // a -> i -> c, a -> c
                s += intersect<true>(g.out_neighbors(a), in_i, y);   // a -> b -> i, a -> i
            }
            return s;
        }
        case EffectKind::CyclicTriangleC3: {
            double s = 0;
            const auto in_i = g.in_neighbors(i);
            for (NodeId j : g.out_neighbors(i))
                if (y[j]) s += intersect<true>(g.out_neighbors(j), in_i, y);
            return s;
        }
        case EffectKind::AlterInTwoStar2: {
            double s = 0;
            for (NodeId v : g.out_neighbors(i)) s += count_ones(g.in_neighbors(v), y) - (y[i] ? 1 : 0);
            return s;
        }
        case EffectKind::AlterOutTwoStar2: {
            double s = 0;
            for (NodeId v : g.in_neighbors(i)) s += count_ones(g.out_neighbors(v), y) - (y[i] ? 1 : 0);
            return s;
        }
        case EffectKind::ContinuousCovariate: return b.column->values[i];
        case EffectKind::SenderMatch: {
            const int c = b.column->code(i);
            int s = 0;
            for (NodeId j : g.out_neighbors(i)) s += b.column->code(j) == c ? 1 : 0;
            return s;
        }
        case EffectKind::ReceiverMatch: {
            const int c = b.column->code(i);
            int s = 0;
            for (NodeId j : g.in_neighbors(i)) s += b.column->code(j) == c ? 1 : 0;
            return s;
        }
        case EffectKind::ReciprocityMatch: {
            const int c = b.column->code(i);
            int s = 0;
            const auto in_i = g.in_neighbors(i);
            for (NodeId j : g.out_neighbors(i))
                if (b.column->code(j) == c && std::binary_search(in_i.begin(), in_i.end(), j)) ++s;
            return s;
        }
    }
    return 0.0;
}

// Closed forms: each written directly from the definition of z, without
// going through the per-node kernels above.
double EffectSet::closed_form(const Bound& b, const Graph& g, const OutcomeVector& y) {
    const auto n = static_cast<NodeId>(g.num_nodes());
    double z = 0;
    auto over_ones = [&](auto&& f) {
        for (NodeId i = 0; i < n; ++i)
            if (y[i]) z += f(i);
    };
    switch (b.kind) {
        case EffectKind::Density: over_ones([](NodeId) { return 1.0; }); break;
        case EffectKind::Activity: over_ones([&](NodeId i) { return double(g.degree(i)); }); break;
        case EffectKind::GWActivity: over_ones([&](NodeId i) { return std::exp(-b.alpha * g.degree(i)); }); break;
        case EffectKind::Sender: over_ones([&](NodeId i) { return double(g.out_degree(i)); }); break;
        case EffectKind::Receiver: over_ones([&](NodeId i) { return double(g.in_degree(i)); }); break;
        case EffectKind::GWSender: over_ones([&](NodeId i) { return std::exp(-b.alpha * g.out_degree(i)); }); break;
        case EffectKind::GWReceiver: over_ones([&](NodeId i) { return std::exp(-b.alpha * g.in_degree(i)); }); break;
        case EffectKind::Contagion:
            for (const auto& [i, j] : g.arcs()) z += (y[i] && y[j]) ? 1 : 0;
            break;
        case EffectKind::Reciprocity: over_ones([&](NodeId i) { return double(g.mutual_degree(i)); }); break;
        case EffectKind::ContagionReciprocity:
            for (const auto& [i, j] : g.arcs())
                if (i < j && y[i] && y[j] && g.has_arc(j, i)) z += 1;
            break;
        case EffectKind::EgoInTwoStar: over_ones([&](NodeId i) { return choose2(g.in_degree(i)); }); break;
        case EffectKind::EgoOutTwoStar: over_ones([&](NodeId i) { return choose2(g.out_degree(i)); }); break;
        case EffectKind::EgoInThreeStar: over_ones([&](NodeId i) { return choose3(g.in_degree(i)); }); break;
        case EffectKind::EgoOutThreeStar: over_ones([&](NodeId i) { return choose3(g.out_degree(i)); }); break;
        case EffectKind::MixedTwoStar:
            over_ones([&](NodeId i) {
                double c = 0;
                for (NodeId j : g.in_neighbors(i))
                    for (NodeId k : g.out_neighbors(i)) c += j != k ? 1 : 0;
                return c;
            });
            break;
        case EffectKind::MixedTwoStarSource:
            over_ones([&](NodeId i) {
                double c = 0;
                for (NodeId v : g.out_neighbors(i))
                    for (NodeId k : g.out_neighbors(v)) c += k != i ? 1 : 0;
                return c;
            });
            break;
        case EffectKind::MixedTwoStarSink:
            over_ones([&](NodeId i) {
                double c = 0;
                for (NodeId v : g.in_neighbors(i))
                    for (NodeId k : g.in_neighbors(v)) c += k != i ? 1 : 0;
                return c;
            });
            break;
        case EffectKind::TransitiveTriangleT1:
            over_ones([&](NodeId i) {
                double c = 0;
                for (NodeId j : g.in_neighbors(i))
                    for (NodeId k : g.out_neighbors(i)) c += g.has_arc(j, k) ? 1 : 0;
                return c;
            });
            break;
        case EffectKind::TransitiveTriangleD1:
            over_ones([&](NodeId i) {
                double c = 0;
                for (NodeId j : g.out_neighbors(i))
                    for (NodeId k : g.out_neighbors(i)) c += g.has_arc(j, k) ? 1 : 0;
                return c;
            });
            break;
        case EffectKind::TransitiveTriangleU1:
            over_ones([&](NodeId i) {
                double c = 0;
                for (NodeId j : g.in_neighbors(i))
                    for (NodeId k : g.in_neighbors(i)) c += g.has_arc(j, k) ? 1 : 0;
                return c;
            });
            break;
        case EffectKind::CyclicTriangleC1:
            over_ones([&](NodeId i) {
                double c = 0;
                for (NodeId j : g.out_neighbors(i))
                    for (NodeId k : g.out_neighbors(j)) c += g.has_arc(k, i) ? 1 : 0;
                return c;
            });
            break;
        case EffectKind::TransitiveTriangleT3:
            // ordered (a, b, c) with a->b, b->c, a->c, all with the attribute
            for (const auto& [a, bb] : g.arcs()) {
                if (!y[a] || !y[bb]) continue;
                for (NodeId c : g.out_neighbors(bb))
                    if (y[c] && g.has_arc(a, c)) z += 1;
            }
            break;
        case EffectKind::CyclicTriangleC3: {
            double ordered = 0;
            for (const auto& [a, bb] : g.arcs()) {
                if (!y[a] || !y[bb]) continue;
                for (NodeId c : g.out_neighbors(bb))
                    if (y[c] && g.has_arc(c, a)) ordered += 1;
            }
            z = ordered / 3;  // each cycle appears once per rotation
            break;
        }
        case EffectKind::AlterInTwoStar2:
            for (NodeId v = 0; v < n; ++v) z += choose2(count_ones(g.in_neighbors(v), y));
            break;
        case EffectKind::AlterOutTwoStar2:
            for (NodeId v = 0; v < n; ++v) z += choose2(count_ones(g.out_neighbors(v), y));
            break;
        case EffectKind::ContinuousCovariate: over_ones([&](NodeId i) { return b.column->values[i]; }); break;
        case EffectKind::SenderMatch:
            for (const auto& [i, j] : g.arcs())
                if (y[i] && b.column->code(i) == b.column->code(j)) z += 1;
            break;
        case EffectKind::ReceiverMatch:
            for (const auto& [i, j] : g.arcs())
                if (y[j] && b.column->code(i) == b.column->code(j)) z += 1;
            break;
        case EffectKind::ReciprocityMatch:
            for (const auto& [i, j] : g.arcs())
                if (y[i] && b.column->code(i) == b.column->code(j) && g.has_arc(j, i)) z += 1;
            break;
    }
    return z;
}

double EffectSet::change_stat(std::size_t k, const OutcomeVector& y, NodeId i) const {
    return delta(bound_[k], *g_, y, i);
}

void EffectSet::change_stats(const OutcomeVector& y, NodeId i, std::span<double> out) const {
    for (std::size_t k = 0; k < bound_.size(); ++k) out[k] = delta(bound_[k], *g_, y, i);
}

std::vector<double> EffectSet::statistics(const OutcomeVector& y) const {
    std::vector<double> z(bound_.size());
    for (std::size_t k = 0; k < bound_.size(); ++k) z[k] = closed_form(bound_[k], *g_, y);
    return z;
}

std::vector<double> EffectSet::build_up(const OutcomeVector& y) const {
    OutcomeVector partial(y.size());
    std::vector<double> z(bound_.size(), 0.0), d(bound_.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const auto v = static_cast<NodeId>(i);
        if (!y[v]) continue;
        change_stats(partial, v, d);
        for (std::size_t k = 0; k < z.size(); ++k) z[k] += d[k];
        partial.set(v, true);
    }
    return z;
}

std::vector<std::pair<double, double>> EffectSet::attainable_range(const OutcomeVector& y) const {
    OutcomeVector lo = y, hi = y;
    for (NodeId v : y.free_nodes()) {
        lo.set(v, false);
        hi.set(v, true);
    }
    const auto zlo = statistics(lo);
    const auto zhi = statistics(hi);
    std::vector<std::pair<double, double>> out(bound_.size());
    for (std::size_t k = 0; k < bound_.size(); ++k) {
        if (bound_[k].kind == EffectKind::ContinuousCovariate) {
            double base = 0, neg = 0, pos = 0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                const auto v = static_cast<NodeId>(i);
                const double x = bound_[k].column->values[i];
                if (y.fixed(v)) {
                    if (y[v]) base += x;
                } else {
                    (x < 0 ? neg : pos) += x;
                }
            }
            out[k] = {base + neg, base + pos};
        } else {
            out[k] = {zlo[k], zhi[k]};
        }
    }
    return out;
}

double change_stat(const EffectSpec& e, const Graph& g, const CovariateTable& w, const OutcomeVector& y, NodeId i) {
    const EffectSet set(std::span<const EffectSpec>(&e, 1), g, w);
    return set.change_stat(0, y, i);
}

double statistic(const EffectSpec& e, const Graph& g, const CovariateTable& w, const OutcomeVector& y) {
    const EffectSet set(std::span<const EffectSpec>(&e, 1), g, w);
    return set.statistics(y)[0];
}

std::vector<double> statistic_vector(const Model& m, const Graph& g, const CovariateTable& w, const OutcomeVector& y) {
    return EffectSet(m.effects(), g, w).build_up(y);
}

}  // namespace alaam
