#include "alaam/graph.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "alaam/error.hpp"
#include "alaam/io.hpp"

namespace alaam {

namespace {

void build_csr(std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& arcs, bool by_source,
               std::vector<std::size_t>& offsets, std::vector<NodeId>& targets) {
    offsets.assign(n + 1, 0);
    for (const auto& [a, b] : arcs) ++offsets[(by_source ? a : b) + 1];
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    targets.resize(arcs.size());
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (const auto& [a, b] : arcs) {
        if (by_source)
            targets[cursor[a]++] = b;
        else
            targets[cursor[b]++] = a;
    }
    for (std::size_t i = 0; i < n; ++i)
        std::sort(targets.begin() + static_cast<std::ptrdiff_t>(offsets[i]),
                  targets.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]));
}

std::size_t sorted_intersection_size(std::span<const NodeId> a, std::span<const NodeId> b) {
    std::size_t count = 0;
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i < *j)
            ++i;
        else if (*j < *i)
            ++j;
        else {
            ++count;
            ++i;
            ++j;
        }
    }
    return count;
}

}  // namespace

Graph Graph::from_arcs(std::size_t n, bool directed, std::vector<std::pair<NodeId, NodeId>> arcs,
                       BuildInfo* info) {
    BuildInfo local;
    std::vector<std::pair<NodeId, NodeId>> clean;
    clean.reserve(directed ? arcs.size() : 2 * arcs.size());
    for (const auto& [a, b] : arcs) {
        if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= n || static_cast<std::size_t>(b) >= n)
            throw ModelError("arc (" + std::to_string(a) + ", " + std::to_string(b) + ") outside node range");
        if (a == b) {
            ++local.self_loops_dropped;
            continue;
        }
        if (directed) {
            clean.emplace_back(a, b);
        } else {
            clean.emplace_back(std::min(a, b), std::max(a, b));
        }
    }
    std::sort(clean.begin(), clean.end());
    const auto before = clean.size();
    clean.erase(std::unique(clean.begin(), clean.end()), clean.end());
    local.duplicates_collapsed = before - clean.size();

    Graph g;
    g.n_ = n;
    g.directed_ = directed;
    g.num_edges_ = clean.size();
    if (!directed) {
        const auto m = clean.size();
        clean.reserve(2 * m);
        for (std::size_t k = 0; k < m; ++k) clean.emplace_back(clean[k].second, clean[k].first);
    }
    build_csr(n, clean, true, g.out_offsets_, g.out_targets_);
    if (directed) build_csr(n, clean, false, g.in_offsets_, g.in_targets_);

    g.mutual_.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = static_cast<NodeId>(i);
        g.mutual_[i] = directed ? static_cast<int>(sorted_intersection_size(g.out_neighbors(v), g.in_neighbors(v)))
                                : g.out_degree(v);
    }
    if (info) *info = local;
    return g;
}

bool Graph::has_arc(NodeId i, NodeId j) const {
    const auto nb = out_neighbors(i);
    return std::binary_search(nb.begin(), nb.end(), j);
}

int Graph::max_in_degree() const {
    int m = 0;
    for (std::size_t i = 0; i < n_; ++i) m = std::max(m, in_degree(static_cast<NodeId>(i)));
    return m;
}

int Graph::max_out_degree() const {
    int m = 0;
    for (std::size_t i = 0; i < n_; ++i) m = std::max(m, out_degree(static_cast<NodeId>(i)));
    return m;
}

std::vector<std::pair<NodeId, NodeId>> Graph::arcs() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    out.reserve(num_edges_);
    for (std::size_t i = 0; i < n_; ++i) {
        const auto v = static_cast<NodeId>(i);
        for (NodeId j : out_neighbors(v))
            if (directed_ || v < j) out.emplace_back(v, j);
    }
    return out;
}

std::string Graph::digest() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xffU;
            h *= 1099511628211ULL;
        }
    };
    mix(n_);
    mix(directed_ ? 1 : 0);
    for (auto o : out_offsets_) mix(o);
    for (auto t : out_targets_) mix(static_cast<std::uint64_t>(t));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string to_string(ColumnKind kind) {
    switch (kind) {
        case ColumnKind::Continuous: return "continuous";
        case ColumnKind::Binary: return "binary";
        case ColumnKind::Categorical: return "categorical";
    }
    return "?";
}

void CovariateTable::add(Column column) {
    if (column.values.size() != n_)
        throw ModelError("column '" + column.name + "' has " + std::to_string(column.values.size()) +
                         " entries, expected " + std::to_string(n_));
    if (find(column.name)) throw ModelError("duplicate column '" + column.name + "'");
    for (std::size_t i = 0; i < column.values.size(); ++i) {
        const double v = column.values[i];
        const bool ok = column.kind == ColumnKind::Continuous ||
                        (column.kind == ColumnKind::Binary && (v == 0.0 || v == 1.0)) ||
                        (column.kind == ColumnKind::Categorical && v >= 0 && v == static_cast<double>(static_cast<long long>(v)));
        if (!ok)
            throw ModelError("column '" + column.name + "' row " + std::to_string(i) + ": invalid " +
                             to_string(column.kind) + " value " + format_double(v));
    }
    columns_.push_back(std::move(column));
}

const Column* CovariateTable::find(std::string_view name) const {
    for (const auto& c : columns_)
        if (c.name == name) return &c;
    return nullptr;
}

const Column& CovariateTable::at(std::string_view name) const {
    if (const auto* c = find(name)) return *c;
    throw ModelError("no covariate column named '" + std::string(name) + "'");
}

OutcomeVector::OutcomeVector(std::vector<std::uint8_t> y) : y_(std::move(y)), fixed_(y_.size(), 0) {
    for (auto& v : y_)
        if (v > 1) throw ModelError("outcome values must be 0 or 1");
}

std::vector<NodeId> OutcomeVector::free_nodes() const {
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < y_.size(); ++i)
        if (!fixed_[i]) out.push_back(static_cast<NodeId>(i));
    return out;
}

std::size_t OutcomeVector::count_ones() const {
    return static_cast<std::size_t>(std::count(y_.begin(), y_.end(), std::uint8_t{1}));
}

LoadedGraph parse_edge_list(std::istream& in, bool directed, const std::string& source) {
    LoadedGraph out;
    std::unordered_map<std::string, NodeId> index;
    std::vector<std::pair<NodeId, NodeId>> arcs;
    auto id_of = [&](const std::string& token) {
        auto [it, inserted] = index.try_emplace(token, static_cast<NodeId>(out.ids.size()));
        if (inserted) out.ids.push_back(token);
        return it->second;
    };
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto view = std::string_view(line);
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        const auto fields = split_whitespace(view);
        if (fields.empty()) continue;
        if (fields.size() != 2)
            throw InputError(source + ":" + std::to_string(line_no) + ": expected two node identifiers, found " +
                             std::to_string(fields.size()) + " fields");
        const NodeId a = id_of(fields[0]);
        const NodeId b = id_of(fields[1]);
        arcs.emplace_back(a, b);
    }
    if (out.ids.empty()) throw InputError(source + ": graph has no edges");
    out.graph = Graph::from_arcs(out.ids.size(), directed, std::move(arcs), &out.info);
    if (out.info.self_loops_dropped > 0)
        std::cerr << "warning: " << source << ": dropped " << out.info.self_loops_dropped << " self-loop(s)\n";
    return out;
}

LoadedGraph load_graph(const std::filesystem::path& edge_file, bool directed) {
    std::ifstream in(edge_file);
    if (!in) throw InputError("cannot open edge list '" + edge_file.string() + "'");
    return parse_edge_list(in, directed, edge_file.string());
}

void write_edge_list(std::ostream& out, const Graph& g, const std::vector<std::string>& ids) {
    for (const auto& [a, b] : g.arcs()) {
        if (ids.empty())
            out << a << ' ' << b << '\n';
        else
            out << ids[a] << ' ' << ids[b] << '\n';
    }
}

AttributeSchema AttributeSchema::parse(std::string_view text) {
    AttributeSchema s;
    for (const auto& item : split_fields(text, ',')) {
        if (item.empty()) continue;
        const auto colon = item.rfind(':');
        if (colon == std::string::npos) throw ModelError("attribute type '" + item + "' is not of the form name:kind");
        std::string name(trim(std::string_view(item).substr(0, colon)));
        std::string kind(trim(std::string_view(item).substr(colon + 1)));
        if (kind != "continuous" && kind != "binary" && kind != "categorical" && kind != "id")
            throw ModelError("unknown attribute kind '" + kind + "' for '" + name +
                             "' (expected continuous, binary, categorical or id)");
        s.entries.emplace_back(std::move(name), std::move(kind));
    }
    return s;
}

std::optional<std::string> AttributeSchema::kind_of(std::string_view name) const {
    for (const auto& [n, k] : entries)
        if (n == name) return k;
    return std::nullopt;
}

CovariateTable parse_covariates(std::istream& in, const std::vector<std::string>& node_ids,
                                const AttributeSchema& cli_schema, const std::string& source) {
    AttributeSchema schema = cli_schema;
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    char delim = ' ';
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty()) continue;
        if (t.starts_with("#")) {
            auto body = trim(t.substr(1));
            if (body.starts_with("types:")) {
                // flags override the file's schema line
                for (auto& entry : AttributeSchema::parse(body.substr(6)).entries)
                    if (!schema.kind_of(entry.first)) schema.entries.push_back(std::move(entry));
            }
            continue;
        }
        delim = t.find(',') != std::string_view::npos ? ',' : (t.find('\t') != std::string_view::npos ? '\t' : ' ');
        header = delim == ' ' ? split_whitespace(t) : split_fields(t, delim);
        break;
    }
    if (header.empty()) throw InputError(source + ": missing header row");

    for (const auto& [name, kind] : schema.entries)
        if (std::find(header.begin(), header.end(), name) == header.end())
            throw InputError(source + ": declared column '" + name + "' not in header");

    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> row_lines;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty() || t.starts_with("#")) continue;
        auto fields = delim == ' ' ? split_whitespace(t) : split_fields(t, delim);
        if (fields.size() != header.size())
            throw InputError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                             " fields, found " + std::to_string(fields.size()));
        rows.push_back(std::move(fields));
        row_lines.push_back(line_no);
    }

    const std::size_t n = node_ids.size();
    std::vector<std::size_t> row_of_node(n, static_cast<std::size_t>(-1));
    std::optional<std::size_t> id_col;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (schema.kind_of(header[c]) == "id") id_col = c;
    if (id_col) {
        std::unordered_map<std::string, NodeId> index;
        for (std::size_t k = 0; k < n; ++k) index.emplace(node_ids[k], static_cast<NodeId>(k));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            auto it = index.find(rows[r][*id_col]);
            if (it == index.end()) continue;  // identifier absent from the network
            row_of_node[it->second] = r;
        }
        for (std::size_t k = 0; k < n; ++k)
            if (row_of_node[k] == static_cast<std::size_t>(-1))
                throw InputError(source + ": no attribute row for node '" + node_ids[k] + "'");
    } else {
        if (rows.size() != n)
            throw InputError(source + ": " + std::to_string(rows.size()) + " data rows but the network has " +
                             std::to_string(n) + " nodes");
        std::iota(row_of_node.begin(), row_of_node.end(), std::size_t{0});
    }

    CovariateTable table(n);
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto kind = schema.kind_of(header[c]);
        if (!kind || *kind == "id") continue;
        Column col;
        col.name = header[c];
        col.kind = *kind == "continuous" ? ColumnKind::Continuous
                   : *kind == "binary"   ? ColumnKind::Binary
                                         : ColumnKind::Categorical;
        col.values.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            const auto r = row_of_node[k];
            const auto& cell = rows[r][c];
            const auto where = source + ":" + std::to_string(row_lines[r]) + ": column '" + col.name + "'";
            if (col.kind == ColumnKind::Continuous) {
                const auto v = parse_double(cell);
                if (!v) throw InputError(where + ": non-numeric value '" + cell + "'");
                col.values[k] = *v;
            } else {
                const auto v = parse_integer(cell);
                if (!v) throw InputError(where + ": non-integer value '" + cell + "'");
                if (*v < 0 || (col.kind == ColumnKind::Binary && *v > 1))
                    throw InputError(where + ": invalid " + to_string(col.kind) + " value '" + cell + "'");
                col.values[k] = static_cast<double>(*v);
            }
        }
        table.add(std::move(col));
    }
    return table;
}

CovariateTable load_covariates(const std::filesystem::path& attr_file, const std::vector<std::string>& node_ids,
                               const AttributeSchema& schema) {
    std::ifstream in(attr_file);
    if (!in) throw InputError("cannot open attribute file '" + attr_file.string() + "'");
    return parse_covariates(in, node_ids, schema, attr_file.string());
}

OutcomeVector outcome_from_column(const CovariateTable& w, std::string_view column) {
    const auto& c = w.at(column);
    if (c.kind != ColumnKind::Binary) throw ModelError("outcome column '" + c.name + "' must be binary");
    std::vector<std::uint8_t> y(c.values.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = c.values[i] != 0.0 ? 1 : 0;
    return OutcomeVector(std::move(y));
}

GraphStats descriptive_stats(const Graph& g) {
    GraphStats s;
    const auto n = g.num_nodes();
    s.nodes = n;
    s.max_in_degree = g.max_in_degree();
    s.max_out_degree = g.max_out_degree();
    const double m = static_cast<double>(g.num_edges());
    s.mean_degree = g.directed() ? m / n : 2.0 * m / n;
    s.density = n > 1 ? (g.directed() ? m : 2.0 * m) / (static_cast<double>(n) * (n - 1)) : 0.0;

    // Undirected skeleton.
    std::vector<std::vector<NodeId>> skel(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = static_cast<NodeId>(i);
        auto& nb = skel[i];
        const auto out = g.out_neighbors(v);
        nb.assign(out.begin(), out.end());
        if (g.directed()) {
            const auto in = g.in_neighbors(v);
            nb.insert(nb.end(), in.begin(), in.end());
            std::sort(nb.begin(), nb.end());
            nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
        }
    }

    // Weak components.
    std::vector<int> comp(n, -1);
    std::vector<NodeId> stack;
    std::size_t best = 0;
    int label = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (comp[i] >= 0) continue;
        std::size_t size = 0;
        comp[i] = label;
        stack.push_back(static_cast<NodeId>(i));
        while (!stack.empty()) {
            const auto v = stack.back();
            stack.pop_back();
            ++size;
            for (NodeId u : skel[v])
                if (comp[u] < 0) {
                    comp[u] = label;
                    stack.push_back(u);
                }
        }
        best = std::max(best, size);
        ++label;
    }
    s.giant_component = best;

    double triangles = 0, triples = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& nb = skel[i];
        const double d = static_cast<double>(nb.size());
        triples += d * (d - 1) / 2;
        for (NodeId j : nb) {
            if (j <= static_cast<NodeId>(i)) continue;
            // k > j common to both
            const auto& nj = skel[j];
            auto a = std::upper_bound(nb.begin(), nb.end(), j);
            auto b = std::upper_bound(nj.begin(), nj.end(), j);
            triangles += static_cast<double>(
                sorted_intersection_size(std::span<const NodeId>(a, nb.end()), std::span<const NodeId>(b, nj.end())));
        }
    }
    s.clustering = triples > 0 ? 3.0 * triangles / triples : 0.0;
    return s;
}

OutcomeDegreeStats outcome_degree_stats(const Graph& g, const OutcomeVector& y) {
    OutcomeDegreeStats s;
    const auto n = g.num_nodes();
    double in_sum[2] = {0, 0}, out_sum[2] = {0, 0}, count[2] = {0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = static_cast<NodeId>(i);
        const int k = y[v] ? 1 : 0;
        count[k] += 1;
        in_sum[k] += g.in_degree(v);
        out_sum[k] += g.out_degree(v);
    }
    s.percent_ones = n > 0 ? 100.0 * count[1] / n : 0.0;
    if (count[0] > 0) {
        s.mean_in_degree0 = in_sum[0] / count[0];
        s.mean_out_degree0 = out_sum[0] / count[0];
    }
    if (count[1] > 0) {
        s.mean_in_degree1 = in_sum[1] / count[1];
        s.mean_out_degree1 = out_sum[1] / count[1];
    }
    return s;
}

void write_key_value(std::ostream& out, const GraphStats& s) {
    out << "nodes " << s.nodes << '\n'
        << "giant_component " << s.giant_component << '\n'
        << "mean_degree " << format_double(s.mean_degree) << '\n'
        << "max_in_degree " << s.max_in_degree << '\n'
        << "max_out_degree " << s.max_out_degree << '\n'
        << "density " << format_double(s.density) << '\n'
        << "clustering " << format_double(s.clustering) << '\n';
}

void write_key_value(std::ostream& out, const OutcomeDegreeStats& s) {
    out << "percent_y1 " << format_double(s.percent_ones) << '\n'
        << "mean_in_degree_y0 " << format_optional(s.mean_in_degree0) << '\n'
        << "mean_out_degree_y0 " << format_optional(s.mean_out_degree0) << '\n'
        << "mean_in_degree_y1 " << format_optional(s.mean_in_degree1) << '\n'
        << "mean_out_degree_y1 " << format_optional(s.mean_out_degree1) << '\n';
}

void write_csv(std::ostream& out, const GraphStats& s) {
    out << "nodes,giant_component,mean_degree,max_in_degree,max_out_degree,density,clustering\n"
        << s.nodes << ',' << s.giant_component << ',' << format_double(s.mean_degree) << ',' << s.max_in_degree
        << ',' << s.max_out_degree << ',' << format_double(s.density) << ',' << format_double(s.clustering) << '\n';
}

void write_csv(std::ostream& out, const OutcomeDegreeStats& s) {
    out << "percent_y1,mean_in_degree_y0,mean_out_degree_y0,mean_in_degree_y1,mean_out_degree_y1\n"
        << format_double(s.percent_ones) << ',' << format_optional(s.mean_in_degree0) << ','
        << format_optional(s.mean_out_degree0) << ',' << format_optional(s.mean_in_degree1) << ','
        << format_optional(s.mean_out_degree1) << '\n';
}

}  // namespace alaam
