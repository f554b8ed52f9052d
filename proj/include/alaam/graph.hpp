#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace alaam {

using NodeId = std::int32_t;

// Immutable network with CSR adjacency. For undirected graphs the in- and
// out-neighbour lists are the same storage.
class Graph {
public:
    struct BuildInfo {
        std::size_t self_loops_dropped = 0;
        std::size_t duplicates_collapsed = 0;
    };

    Graph() = default;

    // Builds from an arc list over nodes 0..n-1. Self-loops are dropped and
    // duplicate edges collapsed; counts are reported through `info`.
    static Graph from_arcs(std::size_t n, bool directed,
                           std::vector<std::pair<NodeId, NodeId>> arcs,
                           BuildInfo* info = nullptr);

    std::size_t num_nodes() const { return n_; }
    bool directed() const { return directed_; }

    // Arc count for directed graphs, edge count for undirected graphs.
    std::size_t num_edges() const { return num_edges_; }

    std::span<const NodeId> out_neighbors(NodeId i) const {
        return {out_targets_.data() + out_offsets_[i], out_targets_.data() + out_offsets_[i + 1]};
    }
    std::span<const NodeId> in_neighbors(NodeId i) const {
        const auto& off = directed_ ? in_offsets_ : out_offsets_;
        const auto& tgt = directed_ ? in_targets_ : out_targets_;
        return {tgt.data() + off[i], tgt.data() + off[i + 1]};
    }
    std::span<const NodeId> neighbors(NodeId i) const { return out_neighbors(i); }

    int out_degree(NodeId i) const { return static_cast<int>(out_offsets_[i + 1] - out_offsets_[i]); }
    int in_degree(NodeId i) const {
        const auto& off = directed_ ? in_offsets_ : out_offsets_;
        return static_cast<int>(off[i + 1] - off[i]);
    }
    // Undirected: number of neighbours. Directed: in-degree + out-degree.
    int degree(NodeId i) const { return directed_ ? in_degree(i) + out_degree(i) : out_degree(i); }
    // Number of j with x_ij = x_ji = 1 (equals degree for undirected graphs).
    int mutual_degree(NodeId i) const { return mutual_[i]; }

    // x_ij present? O(log d_out(i)).
    bool has_arc(NodeId i, NodeId j) const;

    int max_in_degree() const;
    int max_out_degree() const;

    // Every arc (i, j) once; for undirected graphs each edge once with i < j.
    std::vector<std::pair<NodeId, NodeId>> arcs() const;

    // Stable content hash of the structure (FNV-1a over the CSR arrays).
    std::string digest() const;

private:
    std::size_t n_ = 0;
    bool directed_ = false;
    std::size_t num_edges_ = 0;
    std::vector<std::size_t> out_offsets_{0};
    std::vector<NodeId> out_targets_;
    std::vector<std::size_t> in_offsets_;
    std::vector<NodeId> in_targets_;
    std::vector<int> mutual_;
};

enum class ColumnKind { Continuous, Binary, Categorical };

std::string to_string(ColumnKind kind);

struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::Continuous;
    // Binary and categorical values are stored as exact integers.
    std::vector<double> values;

    int code(NodeId i) const { return static_cast<int>(values[i]); }
};

class CovariateTable {
public:
    CovariateTable() = default;
    explicit CovariateTable(std::size_t n) : n_(n) {}

    std::size_t num_nodes() const { return n_; }
    std::size_t num_columns() const { return columns_.size(); }

    // Throws ModelError when the column length differs from n, the name is
    // taken, or binary/categorical values are not valid codes.
    void add(Column column);

    const Column* find(std::string_view name) const;
    const Column& at(std::string_view name) const;
    const std::vector<Column>& columns() const { return columns_; }

private:
    std::size_t n_ = 0;
    std::vector<Column> columns_;
};

// Binary outcome vector y with an optional fixed mask. Fixed nodes are never
// proposed by the sampler.
class OutcomeVector {
public:
    OutcomeVector() = default;
    explicit OutcomeVector(std::size_t n) : y_(n, 0), fixed_(n, 0) {}
    explicit OutcomeVector(std::vector<std::uint8_t> y);

    std::size_t size() const { return y_.size(); }
    bool operator[](NodeId i) const { return y_[i] != 0; }
    void set(NodeId i, bool v) { y_[i] = v ? 1 : 0; }
    void flip(NodeId i) { y_[i] ^= 1; }

    bool fixed(NodeId i) const { return fixed_[i] != 0; }
    void set_fixed(NodeId i, bool f) { fixed_[i] = f ? 1 : 0; }

    std::vector<NodeId> free_nodes() const;
    std::size_t count_ones() const;
    std::span<const std::uint8_t> values() const { return y_; }

    friend bool operator==(const OutcomeVector& a, const OutcomeVector& b) { return a.y_ == b.y_; }

private:
    std::vector<std::uint8_t> y_;
    std::vector<std::uint8_t> fixed_;
};

struct LoadedGraph {
    Graph graph;
    // ids[k] is the original identifier of dense node k.
    std::vector<std::string> ids;
    Graph::BuildInfo info;
};

// Reads a whitespace-separated edge list ('#' comments). Throws InputError
// naming the line on malformed input and on an empty graph.
LoadedGraph load_graph(const std::filesystem::path& edge_file, bool directed);
LoadedGraph parse_edge_list(std::istream& in, bool directed, const std::string& source = "<stream>");

// Writes the graph as an edge list using the given identifiers (dense
// indices when ids is empty).
void write_edge_list(std::ostream& out, const Graph& g, const std::vector<std::string>& ids = {});

// Column schema: name -> kind. The pseudo-kind "id" marks a column holding
// the node identifier; rows are then matched through the id map instead of
// by position.
struct AttributeSchema {
    std::vector<std::pair<std::string, std::string>> entries;

    // Parses "name:kind,name:kind". Kinds: continuous, binary, categorical, id.
    static AttributeSchema parse(std::string_view text);
    std::optional<std::string> kind_of(std::string_view name) const;
};

CovariateTable load_covariates(const std::filesystem::path& attr_file, const std::vector<std::string>& node_ids,
                               const AttributeSchema& schema);
CovariateTable parse_covariates(std::istream& in, const std::vector<std::string>& node_ids,
                                const AttributeSchema& schema, const std::string& source = "<stream>");

// Outcome vector taken from a binary column.
OutcomeVector outcome_from_column(const CovariateTable& w, std::string_view column);

struct GraphStats {
    std::size_t nodes = 0;
    std::size_t giant_component = 0;
    double mean_degree = 0;
    int max_in_degree = 0;
    int max_out_degree = 0;
    double density = 0;
    double clustering = 0;
};

GraphStats descriptive_stats(const Graph& g);

struct OutcomeDegreeStats {
    double percent_ones = 0;
    std::optional<double> mean_in_degree0, mean_out_degree0;
    std::optional<double> mean_in_degree1, mean_out_degree1;
};

OutcomeDegreeStats outcome_degree_stats(const Graph& g, const OutcomeVector& y);

void write_key_value(std::ostream& out, const GraphStats& s);
void write_key_value(std::ostream& out, const OutcomeDegreeStats& s);
void write_csv(std::ostream& out, const GraphStats& s);
void write_csv(std::ostream& out, const OutcomeDegreeStats& s);

}  // namespace alaam
