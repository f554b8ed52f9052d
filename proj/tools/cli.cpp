#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "alaam/diagnostics.hpp"
#include "alaam/error.hpp"
#include "alaam/estimation.hpp"
#include "alaam/experiments.hpp"
#include "alaam/io.hpp"
#include "alaam/oracle.hpp"

#ifndef ALAAM_VERSION
#define ALAAM_VERSION "0.0.0"
#endif

namespace alaam::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr const char* kManifestName = "manifest.json";

struct Options {
    // global
    std::uint64_t seed = 1;
    std::string out = ".";
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    std::string attr_types;
    std::string config;
    std::string from_manifest;
    bool force = false;
    // data
    std::string graph;
    bool directed = false;
    std::string attributes;
    std::string outcome;
    std::string fixed;
    // model
    std::vector<std::string> effects;
    // sampler
    std::size_t samples = 0;
    std::uint64_t burn_in = 0;
    std::uint64_t interval = 0;
    std::string initial;
    std::size_t resync_every = 100;
    // sweep
    std::string vary;
    double grid_lo = -1.0, grid_hi = 1.0, grid_step = 0.01;
    double peak_ratio = 10.0, jump = 0.25;
    // estimation
    int max_runs = 5;
    int subphases = 5;
    double a0 = 0.1;
    std::size_t phase1_samples = 100;
    std::size_t phase3_samples = 1000;
    double t_threshold = 0;
    std::size_t replicates = 20;
    std::size_t updates = 0;
    std::uint64_t steps_per_update = 0;
    double c1 = 1e-2;
    std::size_t final_samples = 1000;
    // diagnostics
    std::vector<std::string> suite;
    double band = 0.95;
    std::size_t bins = 20;
    // enumerate
    bool mle = false;
};

// Options whose value is a file read by the run; recorded with digests.
const std::vector<std::string> kInputOptions = {"graph", "attributes"};

class UsageError : public Error {
public:
    using Error::Error;
};

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read '" + path.string() + "'");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    std::ostringstream hex;
    for (unsigned i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return hex.str();
}

// key = value lines; "effect = Name theta" may repeat. '#' starts a comment.
// Relative input paths are taken relative to the config file.
std::vector<std::string> config_args(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read config file '" + path.string() + "'");
    std::vector<std::string> args;
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string text(trim(line));
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key(trim(text.substr(0, eq)));
        const std::string value(trim(text.substr(eq + 1)));
        if (key.empty()) throw UsageError(path.string() + ":" + std::to_string(lineno) + ": empty key");
        std::string resolved = value;
        if (std::find(kInputOptions.begin(), kInputOptions.end(), key) != kInputOptions.end() &&
            fs::path(value).is_relative())
            resolved = (path.parent_path() / value).string();
        args.push_back("--" + key + "=" + resolved);
    }
    return args;
}

// "Name", "Name=theta" or "Name theta".
std::pair<std::string, std::optional<double>> split_effect(const std::string& text) {
    std::string t(trim(text));
    std::size_t cut = t.find('=');
    if (cut == std::string::npos) {
        const auto sp = t.find_last_of(" \t");
        if (sp != std::string::npos) cut = sp;
    }
    if (cut == std::string::npos) return {t, std::nullopt};
    const std::string name(trim(t.substr(0, cut)));
    const std::string value(trim(t.substr(cut + 1)));
    const auto theta = parse_double(value);
    if (!theta) throw UsageError("bad parameter value '" + value + "' for effect '" + name + "'");
    return {name, *theta};
}

struct Data {
    LoadedGraph lg;
    CovariateTable w;
    OutcomeVector y;
    bool has_outcome = false;
};

Data load_data(const Options& o) {
    if (o.graph.empty()) throw UsageError("--graph is required");
    Data d;
    d.lg = load_graph(o.graph, o.directed);
    const std::size_t n = d.lg.graph.num_nodes();
    if (o.attributes.empty()) {
        d.w = CovariateTable(n);
    } else {
        d.w = load_covariates(o.attributes, d.lg.ids, AttributeSchema::parse(o.attr_types));
    }
    d.y = OutcomeVector(std::vector<std::uint8_t>(n, 0));
    if (!o.outcome.empty()) {
        d.y = outcome_from_column(d.w, o.outcome);
        d.has_outcome = true;
    }
    if (!o.fixed.empty()) {
        const Column& c = d.w.at(o.fixed);
        for (std::size_t i = 0; i < n; ++i)
            if (c.values[i] != 0) d.y.set_fixed(static_cast<NodeId>(i), true);
    }
    return d;
}

struct ParsedModel {
    Model model;
    std::vector<bool> explicit_theta;
};

ParsedModel parse_model(const std::vector<std::string>& effects, const Data& d, bool required = true) {
    if (effects.empty() && required) throw UsageError("no effects given (use --effect NAME[=THETA])");
    ParsedModel pm;
    for (const auto& text : effects) {
        const auto [name, theta] = split_effect(text);
        EffectSpec e = parse_effect(name, &d.w);
        validate(e, d.lg.graph, d.w);
        if (pm.model.index_of(e)) throw UsageError("effect '" + name + "' given twice");
        pm.model.add(e, theta.value_or(0.0));
        pm.explicit_theta.push_back(theta.has_value());
    }
    return pm;
}

SamplerConfig sampler_config(const Options& o, const Data& d, std::size_t default_samples) {
    SamplerConfig c;
    const std::uint64_t nf = std::max<std::size_t>(1, d.y.free_nodes().size());
    c.n_samples = o.samples ? o.samples : default_samples;
    c.burn_in = o.burn_in ? o.burn_in : 100 * nf;
    c.interval = o.interval ? o.interval : 10 * nf;
    c.seed = o.seed;
    c.resync_every = o.resync_every;
    if (!o.initial.empty()) {
        c.initial = InitialState::parse(o.initial);
    } else {
        c.initial = d.has_outcome ? InitialState::parse("observed") : InitialState::parse("zero");
    }
    if (!d.has_outcome && c.initial.kind == InitialState::Kind::Random && c.initial.p < 0)
        throw UsageError("--initial random needs --outcome (or an explicit probability, e.g. random(0.3))");
    return c;
}

class Output {
public:
    explicit Output(fs::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw InputError("cannot create output directory '" + dir_.string() + "': " + ec.message());
    }

    void write(const std::string& name, const std::function<void(std::ostream&)>& fn) {
        const fs::path p = dir_ / name;
        std::ofstream f(p, std::ios::binary);
        if (!f) throw InputError("cannot write '" + p.string() + "'");
        fn(f);
        f.flush();
        if (!f) throw InputError("write failed for '" + p.string() + "'");
        files_.push_back(name);
    }

    const fs::path& dir() const { return dir_; }
    const std::vector<std::string>& files() const { return files_; }

private:
    fs::path dir_;
    std::vector<std::string> files_;
};

// ---- subcommands ----------------------------------------------------------

int cmd_stats(const Options& o, Output& out, std::ostream& log) {
    const Data d = load_data(o);
    const auto s = descriptive_stats(d.lg.graph);
    write_key_value(log, s);
    out.write("stats.txt", [&](std::ostream& f) { write_key_value(f, s); });
    out.write("stats.csv", [&](std::ostream& f) { write_csv(f, s); });
    if (d.has_outcome) {
        const auto os = outcome_degree_stats(d.lg.graph, d.y);
        write_key_value(log, os);
        out.write("outcome_stats.txt", [&](std::ostream& f) { write_key_value(f, os); });
        out.write("outcome_stats.csv", [&](std::ostream& f) { write_csv(f, os); });
    }
    return kOk;
}

int cmd_simulate(const Options& o, Output& out, std::ostream& log) {
    const Data d = load_data(o);
    const auto pm = parse_model(o.effects, d);
    const auto cfg = sampler_config(o, d, 100);
    const auto batch = simulate(pm.model, d.lg.graph, d.w, d.y, cfg);
    out.write("samples.csv", [&](std::ostream& f) { write_csv(f, batch); });
    const auto m = batch.mean();
    for (std::size_t k = 0; k < batch.effect_names.size(); ++k)
        log << batch.effect_names[k] << " mean=" << format_double(m(static_cast<Eigen::Index>(k))) << '\n';
    log << "acceptance_rate=" << format_double(double(batch.accepted) / double(std::max<std::uint64_t>(1, batch.proposals)))
        << '\n';
    return kOk;
}

int cmd_sweep(const Options& o, Output& out, std::ostream& log) {
    const Data d = load_data(o);
    if (o.vary.empty()) throw UsageError("--vary EFFECT is required");
    const auto pm = parse_model(o.effects, d, false);
    SweepConfig sc;
    sc.varied = parse_effect(o.vary, &d.w);
    validate(sc.varied, d.lg.graph, d.w);
    sc.grid = Grid{o.grid_lo, o.grid_hi, o.grid_step};
    if (!d.has_outcome && o.initial.empty())
        throw UsageError("sweep needs --outcome or an explicit --initial state");
    sc.sampler = sampler_config(o, d, 100);
    sc.threads = o.threads;
    const auto table = sweep(sc, pm.model, d.lg.graph, d.w, d.y);
    out.write("sweep.csv", [&](std::ostream& f) { write_sweep_csv(f, table); });
    out.write("sweep_summary.csv", [&](std::ostream& f) { write_sweep_summary_csv(f, table); });
    if (table.points.size() >= 20) {
        const auto r = detect_transition(table, TransitionThresholds{o.peak_ratio, o.jump});
        write_key_value(log, r);
        out.write("transition.txt", [&](std::ostream& f) { write_key_value(f, r); });
    } else {
        log << "fewer than 20 grid points: transition classification skipped\n";
    }
    return kOk;
}

Model estimation_model(const ParsedModel& pm, const Data& d) {
    Model m = pm.model;
    auto theta = default_theta0(m, d.y);
    for (std::size_t k = 0; k < m.size(); ++k)
        if (pm.explicit_theta[k]) theta[k] = m.theta()[k];
    m.set_theta(theta);
    return m;
}

int report_estimation(const EstimationResult& r, const std::string& method, Output& out, std::ostream& log) {
    out.write("estimates.csv", [&](std::ostream& f) { write_estimates_csv(f, r); });
    if (!r.trajectory.empty()) out.write("trajectory.csv", [&](std::ostream& f) { write_trajectory_csv(f, r); });
    auto kv = [&](std::ostream& f) {
        f << "method=" << method << '\n'
          << "converged=" << (r.converged ? "true" : "false") << '\n'
          << "diverged=" << (r.diverged ? "true" : "false") << '\n'
          << "unstable=" << (r.unstable ? "true" : "false") << '\n'
          << "runs_used=" << r.runs_used << '\n';
        for (std::size_t k = 0; k < r.effect_names.size(); ++k)
            f << "observed." << r.effect_names[k] << '=' << format_double(r.z_obs[k]) << '\n'
              << "convergence_t." << r.effect_names[k] << '=' << format_double(r.convergence_t[k]) << '\n';
        if (!r.message.empty()) f << "message=" << r.message << '\n';
    };
    out.write("estimation.txt", kv);
    std::ostringstream table;
    write_estimates_csv(table, r);
    log << table.str();
    if (!r.message.empty()) log << r.message << '\n';
    if (r.diverged) return kDegenerate;
    if (!r.converged) log << "warning: not converged (some |t| above threshold)\n";
    return kOk;
}

int cmd_estimate_sa(const Options& o, Output& out, std::ostream& log) {
    const Data d = load_data(o);
    if (!d.has_outcome) throw UsageError("--outcome is required for estimation");
    const auto pm = parse_model(o.effects, d);
    SaConfig c;
    c.seed = o.seed;
    c.phase1_samples = o.phase1_samples;
    c.interval = o.interval;
    c.burn_in = o.burn_in;
    c.steps_per_update = o.steps_per_update;
    c.subphases = o.subphases;
    c.a0 = o.a0;
    c.phase3_samples = o.phase3_samples;
    if (o.t_threshold > 0) c.t_threshold = o.t_threshold;
    c.max_runs = o.max_runs;
    c.keep_trajectory = true;
    const auto r = estimate_sa(estimation_model(pm, d), d.lg.graph, d.w, d.y, c);
    return report_estimation(r, "sa", out, log);
}

int cmd_estimate_ee(const Options& o, Output& out, std::ostream& log) {
    const Data d = load_data(o);
    if (!d.has_outcome) throw UsageError("--outcome is required for estimation");
    const auto pm = parse_model(o.effects, d);
    EeConfig c;
    c.seed = o.seed;
    c.replicates = o.replicates;
    c.steps_per_update = o.steps_per_update;
    c.updates = o.updates;
    c.c1 = o.c1;
    c.final_samples = o.final_samples;
    c.interval = o.interval;
    if (o.t_threshold > 0) c.t_threshold = o.t_threshold;
    c.threads = o.threads;
    c.keep_trajectory = true;
    const auto r = estimate_ee(estimation_model(pm, d), d.lg.graph, d.w, d.y, c);
    return report_estimation(r, "ee", out, log);
}

int cmd_gof(const Options& o, Output& out, std::ostream& log) {
    const Data d = load_data(o);
    if (!d.has_outcome) throw UsageError("--outcome is required for goodness of fit");
    const auto pm = parse_model(o.effects, d);
    std::vector<EffectSpec> suite;
    if (o.suite.empty()) {
        suite = default_gof_suite(d.lg.graph, d.w);
    } else {
        for (const auto& s : o.suite) {
            suite.push_back(parse_effect(s, &d.w));
            validate(suite.back(), d.lg.graph, d.w);
        }
    }
    auto cfg = sampler_config(o, d, 1000);
    const auto r = gof(pm.model, d.lg.graph, d.w, d.y, suite, cfg);
    out.write("gof.csv", [&](std::ostream& f) { write_csv(f, r); });
    out.write("gof_samples.csv", [&](std::ostream& f) { write_csv(f, r.batch); });
    write_csv(log, r);
    return kOk;
}

int cmd_degen_check(const Options& o, Output& out, std::ostream& log) {
    const Data d = load_data(o);
    if (!d.has_outcome) throw UsageError("--outcome is required for the degeneracy check");
    const auto pm = parse_model(o.effects, d);
    const auto cfg = sampler_config(o, d, 100);
    const auto dc = degeneracy_check(pm.model, d.lg.graph, d.w, d.y, cfg, o.band, o.bins);
    out.write("degeneracy_summary.csv", [&](std::ostream& f) { write_summary_csv(f, dc); });
    out.write("degeneracy_trace.csv", [&](std::ostream& f) { write_trace_csv(f, dc); });
    out.write("degeneracy_histogram.csv", [&](std::ostream& f) { write_histogram_csv(f, dc); });
    const auto ad = attribute_degree_gof(pm.model, d.lg.graph, d.w, d.y, cfg);
    out.write("degree_distribution.csv", [&](std::ostream& f) { write_distribution_csv(f, ad); });
    out.write("degree_means.csv", [&](std::ostream& f) { write_means_csv(f, ad); });
    write_summary_csv(log, dc);
    log << "verdict=" << (dc.pass() ? "pass" : "fail") << '\n';
    return kOk;
}

int cmd_enumerate(const Options& o, Output& out, std::ostream& log) {
    const Data d = load_data(o);
    const auto pm = parse_model(o.effects, d);
    OracleOptions opts;
    opts.threads = o.threads;
    const EffectSet set(pm.model.effects(), d.lg.graph, d.w);
    const auto ex = enumerate(set, pm.model.theta(), d.y, opts);
    const auto names = pm.model.names();
    out.write("enumerate.csv", [&](std::ostream& f) {
        f << "effect,expectation";
        for (const auto& n : names) f << ",cov_" << n;
        f << '\n';
        for (std::size_t a = 0; a < names.size(); ++a) {
            f << names[a] << ',' << format_double(ex.mean(static_cast<Eigen::Index>(a)));
            for (std::size_t b = 0; b < names.size(); ++b)
                f << ',' << format_double(ex.cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
            f << '\n';
        }
    });
    json j;
    j["effects"] = names;
    j["theta"] = pm.model.theta();
    j["free_nodes"] = ex.free_nodes.size();
    j["log_kappa"] = ex.log_kappa;
    j["expectation"] = std::vector<double>(ex.mean.begin(), ex.mean.end());
    json cov = json::array();
    for (Eigen::Index a = 0; a < ex.cov.rows(); ++a) {
        std::vector<double> row(ex.cov.row(a).begin(), ex.cov.row(a).end());
        cov.push_back(row);
    }
    j["covariance"] = cov;
    log << "log_kappa=" << format_double(ex.log_kappa) << '\n';

    if (o.mle) {
        if (!d.has_outcome) throw UsageError("--mle needs --outcome");
        const auto z = set.statistics(d.y);
        const auto r = exact_mle(z, set, d.y, {}, opts);
        j["mle"] = r.theta;
        out.write("mle.csv", [&](std::ostream& f) {
            f << "effect,estimate\n";
            for (std::size_t k = 0; k < names.size(); ++k) f << names[k] << ',' << format_double(r.theta[k]) << '\n';
        });
        for (std::size_t k = 0; k < names.size(); ++k) log << "mle." << names[k] << '=' << format_double(r.theta[k]) << '\n';
    }
    out.write("enumerate.json", [&](std::ostream& f) { f << j.dump(2) << '\n'; });
    return kOk;
}

// ---- parser ---------------------------------------------------------------

struct Command {
    const char* name;
    const char* help;
    int (*run)(const Options&, Output&, std::ostream&);
    enum Flags { kSampler = 1, kModel = 2, kSweep = 4, kSa = 8, kEe = 16, kGof = 32, kDegen = 64, kEnum = 128 };
    int flags;
};

const std::vector<Command>& commands() {
    static const std::vector<Command> c = {
        {"stats", "Descriptive network and outcome statistics", cmd_stats, 0},
        {"simulate", "Sample outcome statistics at fixed parameters", cmd_simulate, Command::kSampler | Command::kModel},
        {"sweep", "Vary one parameter over a grid and classify the response", cmd_sweep,
         Command::kSampler | Command::kModel | Command::kSweep},
        {"estimate-sa", "Stochastic-approximation estimation", cmd_estimate_sa,
         Command::kModel | Command::kSa | Command::kSampler},
        {"estimate-ee", "Equilibrium-expectation estimation", cmd_estimate_ee, Command::kModel | Command::kEe},
        {"gof", "Goodness of fit over a suite of statistics", cmd_gof, Command::kSampler | Command::kModel | Command::kGof},
        {"degen-check", "Degeneracy check and attribute-degree comparison", cmd_degen_check,
         Command::kSampler | Command::kModel | Command::kDegen},
        {"enumerate", "Exact moments by enumeration (small graphs)", cmd_enumerate, Command::kModel | Command::kEnum},
    };
    return c;
}

void add_options(CLI::App& sub, Options& o, int flags) {
    sub.add_option("--graph", o.graph, "Edge list file");
    sub.add_flag("--directed,!--undirected", o.directed, "Treat edges as arcs");
    sub.add_option("--attributes", o.attributes, "Attribute table (CSV with header)");
    sub.add_option("--outcome", o.outcome, "Binary attribute column holding y");
    sub.add_option("--fixed", o.fixed, "Binary attribute column marking nodes whose y is held fixed");
    if (flags & Command::kModel)
        sub.add_option("--effect", o.effects, "Model effect NAME[=THETA] (repeatable)")
            ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    if (flags & Command::kSampler) {
        sub.add_option("--samples", o.samples, "Retained samples (0 = command default)");
        sub.add_option("--burn-in", o.burn_in, "Burn-in proposals (0 = 100 x free nodes)");
        sub.add_option("--interval", o.interval, "Proposals between samples (0 = 10 x free nodes)");
        sub.add_option("--initial", o.initial, "Initial outcome: observed, zero, random or random(p)");
        sub.add_option("--resync-every", o.resync_every, "Recount statistics every R samples");
    }
    if (flags & Command::kSweep) {
        sub.add_option("--vary", o.vary, "Effect whose parameter is swept");
        sub.add_option("--grid-lo", o.grid_lo, "Grid start");
        sub.add_option("--grid-hi", o.grid_hi, "Grid end");
        sub.add_option("--grid-step", o.grid_step, "Grid step");
        sub.add_option("--peak-ratio", o.peak_ratio, "Variance peak ratio threshold");
        sub.add_option("--jump", o.jump, "Normalized jump threshold");
    }
    if (flags & (Command::kSa | Command::kEe))
        sub.add_option("--t-threshold", o.t_threshold, "Convergence |t| threshold (0 = method default)");
    if (flags & Command::kSa) {
        sub.add_option("--max-runs", o.max_runs, "Restarts until converged");
        sub.add_option("--subphases", o.subphases, "Phase 2 subphases");
        sub.add_option("--a0", o.a0, "Initial gain");
        sub.add_option("--phase1-samples", o.phase1_samples);
        sub.add_option("--phase3-samples", o.phase3_samples);
        sub.add_option("--steps-per-update", o.steps_per_update, "Proposals between updates (0 = 10 x free nodes)");
    }
    if (flags & Command::kEe) {
        sub.add_option("--replicates", o.replicates);
        sub.add_option("--updates", o.updates, "Updates per replicate (0 = automatic)");
        sub.add_option("--steps-per-update", o.steps_per_update, "Proposals between updates (0 = automatic)");
        sub.add_option("--c1", o.c1, "Gain constant");
        sub.add_option("--final-samples", o.final_samples);
        sub.add_option("--interval", o.interval, "Final simulation spacing (0 = 10 x free nodes)");
    }
    if (flags & Command::kGof)
        sub.add_option("--suite", o.suite, "Statistics to compare (default: every applicable effect)")
            ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    if (flags & Command::kDegen) {
        sub.add_option("--band", o.band, "Central band probability");
        sub.add_option("--bins", o.bins, "Histogram bins");
    }
    if (flags & Command::kEnum) sub.add_flag("--mle", o.mle, "Also compute the exact MLE for the observed outcome");
}

std::string iso_time_utc() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
}

// Value that follows `--name` or `--name=` in args; empty when absent.
std::optional<std::string> find_value(const std::vector<std::string>& args, const std::string& name) {
    std::optional<std::string> v;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == name && i + 1 < args.size()) v = args[i + 1];
        if (args[i].rfind(name + "=", 0) == 0) v = args[i].substr(name.size() + 1);
    }
    return v;
}

// Drops `--name VALUE`, `--name=VALUE` (or a bare flag) from args.
std::vector<std::string> drop_option(const std::vector<std::string>& args, const std::string& name, bool takes_value) {
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == name) {
            if (takes_value) ++i;
            continue;
        }
        if (args[i].rfind(name + "=", 0) == 0) continue;
        kept.push_back(args[i]);
    }
    return kept;
}

// Expands --config FILE into flags; also returns the config path.
std::pair<std::vector<std::string>, std::optional<std::string>> with_config(const std::vector<std::string>& args) {
    const auto cfg = find_value(args, "--config");
    if (!cfg) return {args, std::nullopt};
    auto rest = drop_option(args, "--config", true);
    auto extra = config_args(*cfg);
    const bool cli_effects = std::any_of(rest.begin(), rest.end(), [](const std::string& a) {
        return a == "--effect" || a.rfind("--effect=", 0) == 0;
    });
    if (cli_effects)
        std::erase_if(extra, [](const std::string& a) { return a.rfind("--effect=", 0) == 0; });
    // Config values go right after the subcommand so later command-line flags win.
    auto pos = std::find_if(rest.begin(), rest.end(), [](const std::string& a) {
        return std::any_of(commands().begin(), commands().end(), [&](const Command& c) { return a == c.name; });
    });
    if (pos == rest.end()) throw UsageError("--config needs a subcommand");
    rest.insert(pos + 1, extra.begin(), extra.end());
    return {rest, cfg};
}

json input_digests(const Options& o) {
    json inputs = json::object();
    const std::map<std::string, std::string> paths = {{"graph", o.graph}, {"attributes", o.attributes}};
    for (const auto& [key, path] : paths) {
        if (path.empty()) continue;
        inputs[key] = {{"path", path}, {"sha256", sha256_file(path)}};
    }
    return inputs;
}

// Makes input paths absolute so a manifest can be replayed from anywhere.
std::vector<std::string> absolutize_inputs(std::vector<std::string> args) {
    for (const auto& key : kInputOptions) {
        const std::string flag = "--" + key;
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (args[i] == flag && i + 1 < args.size()) {
                args[i + 1] = fs::absolute(args[i + 1]).lexically_normal().string();
            } else if (args[i].rfind(flag + "=", 0) == 0) {
                args[i] = flag + "=" + fs::absolute(args[i].substr(flag.size() + 1)).lexically_normal().string();
            }
        }
    }
    return args;
}

int run_parsed(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err, json* replay) {
    auto [expanded, config_path] = with_config(raw_args);
    const auto args = absolutize_inputs(std::move(expanded));

    Options o;
    CLI::App app{"ALAAM estimation, simulation and diagnostics"};
    app.set_version_flag("--version", ALAAM_VERSION);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
    app.fallthrough();
    app.require_subcommand(1);
    app.add_option("--seed", o.seed, "Random seed");
    app.add_option("--out", o.out, "Output directory");
    app.add_option("--threads", o.threads, "Worker threads");
    app.add_option("--attr-types", o.attr_types, "Attribute schema name:kind,...");
    app.add_option("--config", o.config, "Config file (key = value lines, repeatable 'effect = NAME THETA')");
    app.add_option("--from-manifest", o.from_manifest, "Rerun the command recorded in a manifest");
    app.add_flag("--force", o.force, "Rerun from a manifest even if inputs changed");
    std::map<const CLI::App*, const Command*> by_app;
    for (const auto& c : commands()) {
        auto* sub = app.add_subcommand(c.name, c.help);
        add_options(*sub, o, c.flags);
        by_app[sub] = &c;
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << ALAAM_VERSION << '\n';
        return kOk;
    } catch (const CLI::ParseError& e) {
        // Subcommand help is raised through the same path.
        if (e.get_exit_code() == 0) {
            std::ostringstream s;
            app.exit(e, s, s);
            out << s.str();
            return kOk;
        }
        throw UsageError(e.what());
    }
    if (o.threads == 0) throw UsageError("--threads must be positive");
    const Command* cmd = nullptr;
    for (const auto* sub : app.get_subcommands()) cmd = by_app.at(sub);

    const auto t0 = std::chrono::steady_clock::now();
    const std::string started = iso_time_utc();
    json manifest;
    manifest["tool"] = "alaam";
    manifest["version"] = ALAAM_VERSION;
    manifest["subcommand"] = cmd->name;
    manifest["args"] = drop_option(args, "--out", true);
    manifest["seed"] = o.seed;
    manifest["threads"] = o.threads;
    json snapshot = json::object();
    auto record = [&](const CLI::App& a) {
        for (const auto* opt : a.get_options()) {
            const std::string key = opt->get_single_name();
            if (key.empty() || key == "help" || key == "version") continue;
            if (opt->count() == 0) {
                snapshot[key] = opt->get_expected_min() == 0 ? "false" : opt->get_default_str();
            } else if (opt->get_multi_option_policy() == CLI::MultiOptionPolicy::TakeAll) {
                snapshot[key] = opt->results();
            } else {
                snapshot[key] = opt->results().back();
            }
        }
    };
    record(app);
    for (const auto* sub : app.get_subcommands()) record(*sub);
    manifest["config_snapshot"] = snapshot;
    if (config_path)
        manifest["config_file"] = {{"path", fs::absolute(*config_path).lexically_normal().string()},
                                   {"sha256", sha256_file(*config_path)}};
    manifest["inputs"] = input_digests(o);
    manifest["started_utc"] = started;
    if (replay) manifest["replayed_from"] = *replay;

    Output output(o.out);
    const int code = cmd->run(o, output, out);
    manifest["exit_code"] = code;
    manifest["outputs"] = output.files();
    manifest["wall_time_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    output.write(kManifestName, [&](std::ostream& f) { f << manifest.dump(2) << '\n'; });
    err << "wrote " << output.files().size() << " files to " << output.dir().string() << '\n';
    return code;
}

int replay_manifest(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    const std::string path = *find_value(args, "--from-manifest");
    const bool force = std::find(args.begin(), args.end(), "--force") != args.end();
    std::ifstream in(path);
    if (!in) throw InputError("cannot read manifest '" + path + "'");
    json m;
    try {
        in >> m;
    } catch (const json::exception& e) {
        throw InputError("malformed manifest '" + path + "': " + e.what());
    }
    if (!m.contains("args") || !m.contains("inputs")) throw InputError("manifest '" + path + "' lacks args or inputs");
    for (const auto& [key, entry] : m["inputs"].items()) {
        const std::string file = entry.at("path");
        const std::string expected = entry.at("sha256");
        std::string actual;
        try {
            actual = sha256_file(file);
        } catch (const InputError&) {
            actual = "<missing>";
        }
        if (actual != expected) {
            if (!force) throw InputError("input drift: " + key + " file '" + file + "' no longer matches the manifest digest"
                                                                                  " (use --force to rerun anyway)");
            err << "warning: " << key << " file '" << file << "' changed since the manifest was written\n";
        }
    }
    auto replay_args = m["args"].get<std::vector<std::string>>();
    if (const auto o = find_value(args, "--out")) {
        replay_args.insert(replay_args.begin(), {"--out", *o});
    } else {
        replay_args.insert(replay_args.begin(), {"--out", fs::path(path).parent_path().string()});
    }
    json source = {{"path", path}, {"forced", force}};
    return run_parsed(replay_args, out, err, &source);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        if (find_value(args, "--from-manifest")) return replay_manifest(args, out, err);
        return run_parsed(args, out, err, nullptr);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\nrun with --help for usage\n";
        return kUsage;
    } catch (const ModelError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << '\n';
        return kInput;
    } catch (const NonExistenceError& e) {
        err << "non-existence: " << e.what() << '\n';
        return kDegenerate;
    } catch (const SingularCovarianceError& e) {
        err << "singular covariance: " << e.what() << '\n';
        return kDegenerate;
    } catch (const KernelInconsistencyError& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    } catch (const fs::filesystem_error& e) {
        err << "input error: " << e.what() << '\n';
        return kInput;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
}

}  // namespace alaam::cli
