#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alaam/graph.hpp"

namespace alaam {

enum class EffectKind {
    Density,
    Activity,
    Contagion,
    ContinuousCovariate,
    GWActivity,
    Sender,
    Receiver,
    GWSender,
    GWReceiver,
    Reciprocity,
    ContagionReciprocity,
    EgoInTwoStar,
    EgoOutTwoStar,
    EgoInThreeStar,
    EgoOutThreeStar,
    MixedTwoStar,
    MixedTwoStarSource,
    MixedTwoStarSink,
    TransitiveTriangleT1,
    TransitiveTriangleT3,
    TransitiveTriangleD1,
    TransitiveTriangleU1,
    CyclicTriangleC1,
    CyclicTriangleC3,
    AlterInTwoStar2,
    AlterOutTwoStar2,
    SenderMatch,
    ReceiverMatch,
    ReciprocityMatch,
};

enum class Directionality { Any, UndirectedOnly, DirectedOnly };

inline constexpr double kDefaultDecay = std::numbers::ln2;

std::string_view kind_name(EffectKind kind);
Directionality directionality(EffectKind kind);
bool uses_decay(EffectKind kind);
bool uses_column(EffectKind kind);
// Every kind in declaration order.
std::span<const EffectKind> all_kinds();

struct EffectSpec {
    EffectKind kind = EffectKind::Density;
    double alpha = kDefaultDecay;
    std::string column;

    // Canonical name: "Density", "GWSender", "GWActivity(0.5)", "SenderMatch:class", "oOc:age".
    std::string name() const;

    friend bool operator==(const EffectSpec&, const EffectSpec&) = default;
};

// Parses an effect name. Accepts "Kind", "Kind(alpha)" for the geometrically
// weighted kinds, "Kind:column" for the match kinds, and "oOc:col",
// "col_oOc" or a bare continuous column name (when `w` is given) for the
// covariate effect. Throws ModelError listing valid names.
EffectSpec parse_effect(std::string_view text, const CovariateTable* w = nullptr);

// Throws ModelError when the effect does not apply to this graph/covariates.
void validate(const EffectSpec& e, const Graph& g, const CovariateTable& w);

class Model {
public:
    Model() = default;
    Model(std::vector<EffectSpec> effects, std::vector<double> theta);

    void add(EffectSpec e, double theta = 0.0);

    std::size_t size() const { return effects_.size(); }
    const std::vector<EffectSpec>& effects() const { return effects_; }
    const std::vector<double>& theta() const { return theta_; }
    void set_theta(std::vector<double> theta);
    std::vector<std::string> names() const;
    std::optional<std::size_t> index_of(const EffectSpec& e) const;

private:
    std::vector<EffectSpec> effects_;
    std::vector<double> theta_;
};

// Change statistic for flipping y_i from 0 to 1, with y_i itself treated as 0.
double change_stat(const EffectSpec& e, const Graph& g, const CovariateTable& w, const OutcomeVector& y, NodeId i);

// Closed-form statistic z(y).
double statistic(const EffectSpec& e, const Graph& g, const CovariateTable& w, const OutcomeVector& y);

// Statistic vector by build-up over the attribute nodes using change_stat.
std::vector<double> statistic_vector(const Model& m, const Graph& g, const CovariateTable& w, const OutcomeVector& y);

// A list of effects validated and bound to one graph and covariate table.
// The graph and table must outlive the set.
class EffectSet {
public:
    EffectSet(std::span<const EffectSpec> effects, const Graph& g, const CovariateTable& w);

    std::size_t size() const { return bound_.size(); }
    const Graph& graph() const { return *g_; }
    const std::vector<EffectSpec>& specs() const { return specs_; }

    double change_stat(std::size_t k, const OutcomeVector& y, NodeId i) const;
    void change_stats(const OutcomeVector& y, NodeId i, std::span<double> out) const;

    std::vector<double> statistics(const OutcomeVector& y) const;  // closed forms
    std::vector<double> build_up(const OutcomeVector& y) const;    // sum of deltas

    // Attainable [min, max] per effect when only free nodes vary. Every
    // statistic here is non-decreasing in each y_i except the continuous
    // covariate, whose extremes follow the covariate signs.
    std::vector<std::pair<double, double>> attainable_range(const OutcomeVector& y) const;

private:
    struct Bound {
        EffectKind kind;
        double alpha;
        const Column* column;
    };
    static double delta(const Bound& b, const Graph& g, const OutcomeVector& y, NodeId i);
    static double closed_form(const Bound& b, const Graph& g, const OutcomeVector& y);

    const Graph* g_;
    std::vector<EffectSpec> specs_;
    std::vector<Bound> bound_;
};

}  // namespace alaam
