// Writes the seeded heavy-tailed test network as an edge list and, when
// effects are given, an outcome simulated on it as an attribute table.
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "alaam/error.hpp"
#include "alaam/experiments.hpp"
#include "alaam/io.hpp"

int main(int argc, char** argv) {
    using namespace alaam;
    HeavyTailedConfig hc;
    std::string out = ".";
    std::string name = "fixture";
    std::vector<std::string> effects;
    SamplerConfig sc;
    sc.burn_in = 500000;
    sc.interval = 50000;
    sc.n_samples = 20;
    sc.seed = 99;
    std::string initial = "random(0.3)";

    CLI::App app{"Generate the heavy-tailed fixture network"};
    app.add_option("--n", hc.n, "Nodes")->capture_default_str();
    app.add_option("--clique", hc.clique, "Size of the seed clique")->capture_default_str();
    app.add_option("--tail", hc.tail, "Tail exponent of the attachment count")->capture_default_str();
    app.add_option("--m-cap", hc.m_cap, "Largest attachment count")->capture_default_str();
    app.add_option("--seed", hc.seed, "Graph seed")->capture_default_str();
    app.add_option("--out", out, "Output directory")->capture_default_str();
    app.add_option("--name", name, "File stem")->capture_default_str();
    app.add_option("--effect", effects, "Outcome model effect NAME=THETA (repeatable); enables outcome simulation");
    app.add_option("--outcome-seed", sc.seed, "Outcome simulation seed")->capture_default_str();
    app.add_option("--burn-in", sc.burn_in)->capture_default_str();
    app.add_option("--interval", sc.interval)->capture_default_str();
    app.add_option("--samples", sc.n_samples, "The last sample is written")->capture_default_str();
    app.add_option("--initial", initial)->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    try {
        const Graph g = heavy_tailed_graph(hc);
        std::filesystem::create_directories(out);
        const auto edges = std::filesystem::path(out) / (name + ".edges");
        std::ofstream ef(edges);
        ef << "# heavy-tailed fixture n=" << hc.n << " clique=" << hc.clique << " tail=" << format_double(hc.tail)
           << " m_cap=" << hc.m_cap << " seed=" << hc.seed << '\n';
        write_edge_list(ef, g);
        if (!ef) throw InputError("cannot write " + edges.string());
        std::cerr << "wrote " << edges.string() << " (" << g.num_edges() << " edges)\n";

        if (!effects.empty()) {
            Model m;
            for (const auto& text : effects) {
                const auto eq = text.find('=');
                if (eq == std::string::npos) throw ModelError("effect needs NAME=THETA: '" + text + "'");
                const auto theta = parse_double(trim(text.substr(eq + 1)));
                if (!theta) throw ModelError("bad parameter in '" + text + "'");
                m.add(parse_effect(trim(text.substr(0, eq))), *theta);
            }
            sc.initial = InitialState::parse(initial);
            sc.keep_y = true;
            const CovariateTable w(g.num_nodes());
            const OutcomeVector start(std::vector<std::uint8_t>(g.num_nodes(), 0));
            const auto batch = simulate(m, g, w, start, sc);
            const auto& y = batch.y.back();
            const auto attrs = std::filesystem::path(out) / (name + "_attributes.csv");
            std::ofstream af(attrs);
            af << "id,y\n";
            for (std::size_t i = 0; i < y.size(); ++i) af << i << ',' << (y[static_cast<NodeId>(i)] ? 1 : 0) << '\n';
            if (!af) throw InputError("cannot write " + attrs.string());
            std::cerr << "wrote " << attrs.string() << " (" << y.count_ones() << " ones; schema id:id,y:binary)\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
