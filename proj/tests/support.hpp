#pragma once

// Test-only helpers: random instances and a dense-matrix brute-force
// evaluator of every statistic written straight from its definition.

#include <cmath>
#include <random>
#include <vector>

#include "alaam/effects.hpp"
#include "alaam/graph.hpp"

namespace alaam::testing {

inline Graph random_graph(std::size_t n, double p, bool directed, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(p);
    std::vector<std::pair<NodeId, NodeId>> arcs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = directed ? 0 : i + 1; j < n; ++j)
            if (i != j && coin(rng)) arcs.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
    return Graph::from_arcs(n, directed, std::move(arcs));
}

inline OutcomeVector random_outcome(std::size_t n, double p, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(p);
    std::vector<std::uint8_t> y(n);
    for (auto& v : y) v = coin(rng) ? 1 : 0;
    return OutcomeVector(std::move(y));
}

// Covariates "age" (continuous), "class" (categorical 0..3), "flag" (binary).
inline CovariateTable random_covariates(std::size_t n, std::mt19937_64& rng) {
    CovariateTable w(n);
    std::normal_distribution<double> norm(0.0, 2.0);
    std::uniform_int_distribution<int> cat(0, 3);
    std::bernoulli_distribution coin(0.5);
    Column age{"age", ColumnKind::Continuous, {}}, cls{"class", ColumnKind::Categorical, {}},
        flag{"flag", ColumnKind::Binary, {}};
    for (std::size_t i = 0; i < n; ++i) {
        age.values.push_back(norm(rng));
        cls.values.push_back(cat(rng));
        flag.values.push_back(coin(rng) ? 1 : 0);
    }
    w.add(age);
    w.add(cls);
    w.add(flag);
    return w;
}

// All effect specs applicable to the given directionality, covariate
// effects bound to the columns of random_covariates().
inline std::vector<EffectSpec> applicable_effects(bool directed) {
    std::vector<EffectSpec> out;
    for (auto k : all_kinds()) {
        const auto d = directionality(k);
        if ((d == Directionality::DirectedOnly && !directed) || (d == Directionality::UndirectedOnly && directed))
            continue;
        EffectSpec e;
        e.kind = k;
        if (k == EffectKind::ContinuousCovariate) e.column = "age";
        if (uses_column(k) && k != EffectKind::ContinuousCovariate) e.column = "class";
        out.push_back(e);
        if (uses_decay(k)) {
            e.alpha = 0.3;
            out.push_back(e);
        }
    }
    return out;
}

class BruteForce {
public:
    explicit BruteForce(const Graph& g) : n_(static_cast<int>(g.num_nodes())), directed_(g.directed()) {
        a_.assign(n_ * n_, 0);
        for (const auto& [i, j] : g.arcs()) {
            a_[i * n_ + j] = 1;
            if (!directed_) a_[j * n_ + i] = 1;
        }
    }

    int x(int i, int j) const { return a_[i * n_ + j]; }

    double statistic(const EffectSpec& e, const CovariateTable& w, const OutcomeVector& yv) const {
        const int n = n_;
        auto y = [&](int i) { return yv[i] ? 1 : 0; };
        auto outdeg = [&](int i) { int d = 0; for (int j = 0; j < n; ++j) d += x(i, j); return d; };
        auto indeg = [&](int i) { int d = 0; for (int j = 0; j < n; ++j) d += x(j, i); return d; };
        auto choose = [](double d, int k) { return k == 2 ? d * (d - 1) / 2 : d * (d - 1) * (d - 2) / 6; };
        const Column* col = uses_column(e.kind) ? w.find(e.column) : nullptr;
        double z = 0;
        switch (e.kind) {
            case EffectKind::Density: for (int i = 0; i < n; ++i) z += y(i); break;
            case EffectKind::Activity: for (int i = 0; i < n; ++i) z += y(i) * outdeg(i); break;
            case EffectKind::GWActivity: for (int i = 0; i < n; ++i) z += y(i) * std::exp(-e.alpha * outdeg(i)); break;
            case EffectKind::Sender: for (int i = 0; i < n; ++i) z += y(i) * outdeg(i); break;
            case EffectKind::Receiver: for (int i = 0; i < n; ++i) z += y(i) * indeg(i); break;
            case EffectKind::GWSender: for (int i = 0; i < n; ++i) z += y(i) * std::exp(-e.alpha * outdeg(i)); break;
            case EffectKind::GWReceiver: for (int i = 0; i < n; ++i) z += y(i) * std::exp(-e.alpha * indeg(i)); break;
            case EffectKind::Contagion:
                for (int i = 0; i < n; ++i)
                    for (int j = directed_ ? 0 : i + 1; j < n; ++j)
                        if (i != j) z += x(i, j) * y(i) * y(j);
                break;
            case EffectKind::Reciprocity:
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) z += y(i) * x(i, j) * x(j, i);
                break;
            case EffectKind::ContagionReciprocity:
                for (int i = 0; i < n; ++i)
                    for (int j = i + 1; j < n; ++j) z += x(i, j) * x(j, i) * y(i) * y(j);
                break;
            case EffectKind::EgoInTwoStar: for (int i = 0; i < n; ++i) z += y(i) * choose(indeg(i), 2); break;
            case EffectKind::EgoOutTwoStar: for (int i = 0; i < n; ++i) z += y(i) * choose(outdeg(i), 2); break;
            case EffectKind::EgoInThreeStar: for (int i = 0; i < n; ++i) z += y(i) * choose(indeg(i), 3); break;
            case EffectKind::EgoOutThreeStar: for (int i = 0; i < n; ++i) z += y(i) * choose(outdeg(i), 3); break;
            case EffectKind::MixedTwoStar:
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        for (int k = 0; k < n; ++k)
                            if (j != k) z += y(i) * x(j, i) * x(i, k);
                break;
            case EffectKind::MixedTwoStarSource:
                for (int i = 0; i < n; ++i)
                    for (int v = 0; v < n; ++v)
                        for (int k = 0; k < n; ++k)
                            if (k != i) z += y(i) * x(i, v) * x(v, k);
                break;
            case EffectKind::MixedTwoStarSink:
                for (int i = 0; i < n; ++i)
                    for (int v = 0; v < n; ++v)
                        for (int k = 0; k < n; ++k)
                            if (k != i) z += y(i) * x(k, v) * x(v, i);
                break;
            case EffectKind::TransitiveTriangleT1:
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        for (int k = 0; k < n; ++k) z += y(i) * x(j, i) * x(i, k) * x(j, k);
                break;
            case EffectKind::TransitiveTriangleD1:
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        for (int k = 0; k < n; ++k) z += y(i) * x(i, j) * x(i, k) * x(j, k);
                break;
            case EffectKind::TransitiveTriangleU1:
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        for (int k = 0; k < n; ++k) z += y(i) * x(j, i) * x(k, i) * x(j, k);
                break;
            case EffectKind::TransitiveTriangleT3:
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b)
                        for (int c = 0; c < n; ++c) z += x(a, b) * x(b, c) * x(a, c) * y(a) * y(b) * y(c);
                break;
            case EffectKind::CyclicTriangleC1:
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        for (int k = 0; k < n; ++k) z += y(i) * x(i, j) * x(j, k) * x(k, i);
                break;
            case EffectKind::CyclicTriangleC3:
                // unordered: count each cycle at its smallest node
                for (int a = 0; a < n; ++a)
                    for (int b = a + 1; b < n; ++b)
                        for (int c = a + 1; c < n; ++c)
                            z += x(a, b) * x(b, c) * x(c, a) * y(a) * y(b) * y(c);
                break;
            case EffectKind::AlterInTwoStar2:
                for (int v = 0; v < n; ++v)
                    for (int j = 0; j < n; ++j)
                        for (int k = j + 1; k < n; ++k) z += x(j, v) * x(k, v) * y(j) * y(k);
                break;
            case EffectKind::AlterOutTwoStar2:
                for (int v = 0; v < n; ++v)
                    for (int j = 0; j < n; ++j)
                        for (int k = j + 1; k < n; ++k) z += x(v, j) * x(v, k) * y(j) * y(k);
                break;
            case EffectKind::ContinuousCovariate:
                for (int i = 0; i < n; ++i) z += y(i) * col->values[i];
                break;
            case EffectKind::SenderMatch:
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) z += y(i) * x(i, j) * (col->code(i) == col->code(j));
                break;
            case EffectKind::ReceiverMatch:
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) z += y(i) * x(j, i) * (col->code(i) == col->code(j));
                break;
            case EffectKind::ReciprocityMatch:
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) z += y(i) * x(i, j) * x(j, i) * (col->code(i) == col->code(j));
                break;
        }
        return z;
    }

private:
    int n_;
    bool directed_;
    std::vector<int> a_;
};

}  // namespace alaam::testing
