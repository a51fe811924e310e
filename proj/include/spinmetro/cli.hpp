#pragma once

// Command-line front end: flag and config-file parsing into an
// ExperimentSpec, validation, dispatch, and result writing.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "spinmetro/io.hpp"

namespace spinmetro::cli {

using io::json;

enum class KeyType { Int, Double, String, Range, IntList };

struct KeySpec {
    std::string name;
    KeyType type;
    std::string help;
    std::vector<std::string> commands; // empty = every command
};

inline const std::vector<std::string> &commands() {
    static const std::vector<std::string> c = {"evolve",  "landscape", "total-time", "scaling",
                                               "noise",   "tact",      "magnify",    "husimi"};
    return c;
}

inline const std::vector<KeySpec> &keys() {
    static const std::vector<KeySpec> k = {
        {"model", KeyType::String, "tnt or tact",
         {"evolve", "landscape", "total-time", "scaling", "noise", "husimi"}},
        {"n", KeyType::Int, "particle number N",
         {"evolve", "landscape", "total-time", "noise", "tact", "magnify", "husimi"}},
        {"chi", KeyType::Double, "interaction strength chi", {}},
        {"lambda", KeyType::Double, "TNT Lambda = chi N / Omega", {}},
        {"k", KeyType::Int, "observable order (1-3)", {"landscape", "total-time", "tact"}},
        {"t", KeyType::Double, "final evolution time", {"evolve", "husimi"}},
        {"dt", KeyType::Double, "time step of the trace", {"evolve"}},
        {"t1", KeyType::Double, "probe preparation time", {"magnify"}},
        {"t2", KeyType::Double, "recombining time (default: refocusing)", {"magnify"}},
        {"phi", KeyType::Double, "phase used for slope extraction", {"magnify"}},
        {"sigmas", KeyType::Range, "detection noise widths", {"noise"}},
        {"t1-grid", KeyType::Range, "t1 grid a:b:n | a:b:logn | list", {"landscape", "tact"}},
        {"t2-grid", KeyType::Range, "t2 grid", {"landscape", "tact"}},
        {"tau-grid", KeyType::Range, "total-time grid", {"total-time"}},
        {"t1-max", KeyType::Double, "upper bound on t1 along each tau line", {"total-time"}},
        {"t1-step", KeyType::Double, "t1 step along each tau line", {"total-time"}},
        {"n-list", KeyType::IntList, "comma-separated particle numbers", {"scaling"}},
        {"t-cap", KeyType::Double, "time cap in units of the quasi-period", {"scaling"}},
        {"n-t1", KeyType::Int, "t1 grid points", {"scaling", "noise"}},
        {"n-t2", KeyType::Int, "t2 grid points", {"scaling", "noise"}},
        {"threshold", KeyType::Double, "region threshold in dB", {"tact"}},
        {"min-peak", KeyType::Double, "minimum region peak in dB", {"tact"}},
        {"track-fidelity", KeyType::String, "initial | opposite | both-poles", {"evolve"}},
        {"n-theta", KeyType::Int, "theta grid points", {"husimi"}},
        {"n-phi", KeyType::Int, "phi grid points", {"husimi"}},
        {"out", KeyType::String, "output CSV (stdout when omitted)", {}},
        {"threads", KeyType::Int, "worker threads (0 = hardware)", {}},
    };
    return k;
}

inline bool allowed(const KeySpec &k, const std::string &command) {
    return k.commands.empty() ||
           std::find(k.commands.begin(), k.commands.end(), command) != k.commands.end();
}

inline const KeySpec *find_key(const std::string &name) {
    for (const auto &k : keys()) {
        if (k.name == name) {
            return &k;
        }
    }
    return nullptr;
}

struct ExperimentSpec {
    std::string command;
    /// Only keys that were set explicitly; defaults are filled by resolve().
    json params = json::object();
};

/// "a:b:n" linear, "a:b:logn" logarithmic, otherwise a comma list.
inline std::vector<double> parse_range(const std::string &key, const std::string &text) {
    try {
        const auto parts = io::split(text, ':');
        if (parts.size() == 3) {
            const double a = io::parse_double(parts[0]);
            const double b = io::parse_double(parts[1]);
            const bool log = parts[2].rfind("log", 0) == 0;
            const std::string count = log ? parts[2].substr(3) : parts[2];
            const double nd = io::parse_double(count);
            if (nd < 1 || nd != std::floor(nd)) {
                throw std::invalid_argument("point count must be a positive integer");
            }
            const int n = static_cast<int>(nd);
            if (!log) {
                return linspace(a, b, n);
            }
            if (!(a > 0.0) || !(b > 0.0)) {
                throw std::invalid_argument("logarithmic range needs positive bounds");
            }
            auto v = linspace(std::log(a), std::log(b), n);
            for (double &x : v) {
                x = std::exp(x);
            }
            v.front() = a;
            v.back() = b;
            return v;
        }
        if (parts.size() != 1) {
            throw std::invalid_argument("expected a:b:n, a:b:logn or a comma list");
        }
        std::vector<double> out;
        for (const auto &cell : io::split(text, ',')) {
            out.push_back(io::parse_double(cell));
        }
        if (out.empty()) {
            throw std::invalid_argument("empty list");
        }
        return out;
    } catch (const std::invalid_argument &e) {
        throw ConfigError("--" + key + ": malformed value '" + text + "' (" + e.what() + ")");
    }
}

/// Typed JSON value from a flag string.
inline json convert_flag(const KeySpec &k, const std::string &text) {
    try {
        switch (k.type) {
        case KeyType::Int: {
            const double v = io::parse_double(text);
            if (v != std::floor(v) || std::abs(v) > 1e9) {
                throw std::invalid_argument("not an integer");
            }
            return static_cast<long>(v);
        }
        case KeyType::Double:
            return io::parse_double(text);
        case KeyType::String:
            return text;
        case KeyType::Range:
            return parse_range(k.name, text);
        case KeyType::IntList: {
            std::vector<long> out;
            for (const auto &cell : io::split(text, ',')) {
                const double v = io::parse_double(cell);
                if (v != std::floor(v)) {
                    throw std::invalid_argument("not an integer: " + cell);
                }
                out.push_back(static_cast<long>(v));
            }
            return out;
        }
        }
    } catch (const ConfigError &) {
        throw;
    } catch (const std::invalid_argument &e) {
        throw ConfigError("--" + k.name + ": malformed value '" + text + "' (" + e.what() + ")");
    }
    return {};
}

/// Checks the JSON type of a config-file value, accepting range strings.
inline json convert_file_value(const KeySpec &k, const json &v) {
    auto bad = [&]() {
        return ConfigError("config key '" + k.name + "': unexpected value " + v.dump());
    };
    switch (k.type) {
    case KeyType::Int:
        if (v.is_number_integer() || (v.is_number() && v.get<double>() == std::floor(v.get<double>()))) {
            return static_cast<long>(v.get<double>());
        }
        throw bad();
    case KeyType::Double:
        if (v.is_number()) {
            return v.get<double>();
        }
        throw bad();
    case KeyType::String:
        if (v.is_string()) {
            return v;
        }
        throw bad();
    case KeyType::Range:
        if (v.is_string()) {
            return parse_range(k.name, v.get<std::string>());
        }
        if (v.is_array() && !v.empty() &&
            std::all_of(v.begin(), v.end(), [](const json &e) { return e.is_number(); })) {
            return v.get<std::vector<double>>();
        }
        throw bad();
    case KeyType::IntList:
        if (v.is_string()) {
            return convert_flag(k, v.get<std::string>());
        }
        if (v.is_array() && !v.empty() &&
            std::all_of(v.begin(), v.end(), [](const json &e) { return e.is_number_integer(); })) {
            return v;
        }
        throw bad();
    }
    throw bad();
}

inline void check_command(const std::string &command) {
    if (std::find(commands().begin(), commands().end(), command) == commands().end()) {
        throw ConfigError("unknown command '" + command + "'");
    }
}

inline void merge_file(ExperimentSpec &spec, const std::string &path) {
    json doc = io::read_json(path);
    if (!doc.is_object()) {
        throw ConfigError("config '" + path + "' must hold a JSON object");
    }
    // A sidecar manifest carries the command and the resolved config.
    if (doc.contains("config") && doc.contains("command")) {
        const json cmd = doc["command"];
        doc = doc["config"];
        doc["command"] = cmd;
    }
    if (doc.contains("command")) {
        if (!doc["command"].is_string()) {
            throw ConfigError("config key 'command' must be a string");
        }
        const auto cmd = doc["command"].get<std::string>();
        check_command(cmd);
        if (!spec.command.empty() && spec.command != cmd) {
            throw ConfigError("config '" + path + "' is for command '" + cmd + "', not '" +
                              spec.command + "'");
        }
        spec.command = cmd;
        doc.erase("command");
    }
    if (spec.command.empty()) {
        throw ConfigError("no command given and config '" + path + "' does not name one");
    }
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const KeySpec *k = find_key(it.key());
        if (!k || !allowed(*k, spec.command)) {
            throw ConfigError("unknown key '" + it.key() + "' for command '" + spec.command + "'");
        }
        spec.params[it.key()] = convert_file_value(*k, it.value());
    }
}

struct ParseOutcome {
    std::optional<ExperimentSpec> spec; // empty when help or version was printed
    int exit_code = 0;
};

/// Flags override values from --config. Throws ConfigError on bad input.
inline ParseOutcome parse_cli(int argc, const char *const *argv, std::ostream &out) {
    CLI::App app{"Interaction-based readout simulator for twisted spin ensembles", "spinmetro"};
    app.require_subcommand(0, 1);
    app.set_version_flag("--version", io::kVersion);
    std::string top_config;
    std::string top_out;
    std::string top_threads;
    app.add_option("--config", top_config, "JSON config or sidecar manifest");
    app.add_option("--out", top_out, "override the output path of --config");
    app.add_option("--threads", top_threads, "override the thread count of --config");

    std::map<std::string, std::map<std::string, std::string>> values;
    std::map<std::string, std::string> sub_config;
    std::map<std::string, CLI::App *> subs;
    for (const auto &cmd : commands()) {
        CLI::App *sub = app.add_subcommand(cmd, "run the " + cmd + " experiment");
        subs[cmd] = sub;
        sub->add_option("--config", sub_config[cmd], "JSON config or sidecar manifest");
        for (const auto &k : keys()) {
            if (allowed(k, cmd)) {
                sub->add_option("--" + k.name, values[cmd][k.name], k.help);
            }
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        out << app.help();
        return {std::nullopt, 0};
    } catch (const CLI::CallForVersion &) {
        out << io::kVersion << '\n';
        return {std::nullopt, 0};
    } catch (const CLI::ParseError &e) {
        throw ConfigError(e.what());
    }

    ExperimentSpec spec;
    std::string config_path = top_config;
    for (const auto &[cmd, sub] : subs) {
        if (sub->parsed()) {
            spec.command = cmd;
            if (!sub_config[cmd].empty()) {
                config_path = sub_config[cmd];
            }
        }
    }
    if (!config_path.empty()) {
        merge_file(spec, config_path);
    }
    if (spec.command.empty()) {
        throw ConfigError("missing command (one of evolve, landscape, total-time, scaling, noise, "
                          "tact, magnify, husimi)");
    }
    if (app.count("--out") > 0) {
        spec.params["out"] = top_out;
    }
    if (app.count("--threads") > 0) {
        spec.params["threads"] = convert_flag(*find_key("threads"), top_threads);
    }
    CLI::App *sub = subs.at(spec.command);
    for (const auto &k : keys()) {
        if (allowed(k, spec.command) && sub->count("--" + k.name) > 0) {
            spec.params[k.name] = convert_flag(k, values[spec.command][k.name]);
        }
    }
    return {spec, 0};
}

// ---------------------------------------------------------------------------
// Resolution and validation

inline std::string default_model(const std::string &command) {
    return command == "tact" ? "tact" : "tnt";
}

/// Complete config for the command: explicit values plus defaults. The
/// result is what the manifest records.
inline json resolve(const ExperimentSpec &spec) {
    const std::string &c = spec.command;
    check_command(c);
    json cfg = spec.params;
    auto def = [&](const std::string &key, json value) {
        if (!cfg.contains(key)) {
            cfg[key] = std::move(value);
        }
    };
    if (c != "tact" && c != "magnify") {
        def("model", default_model(c));
    }
    if (c != "scaling") {
        def("n", 100);
    }
    def("chi", 1.0);
    def("lambda", 2.0);
    def("threads", 0);
    def("out", "");
    const std::string model = c == "tact" ? "tact" : c == "magnify" ? "tnt" : cfg["model"].get<std::string>();
    if (model != "tnt" && model != "tact") {
        throw ConfigError("--model: expected tnt or tact, got '" + model + "'");
    }
    if (c == "evolve") {
        if (!cfg.contains("t")) {
            throw ConfigError("evolve: missing required key 't'");
        }
        def("dt", 5e-4);
        def("track-fidelity", model == "tact" ? "both-poles" : "initial");
    } else if (c == "landscape" || c == "tact") {
        const auto d = default_landscape(parse_model(model));
        def("k", 1);
        def("t1-grid", d.t1_grid);
        def("t2-grid", d.t2_grid);
        if (c == "tact") {
            def("threshold", 3.0);
            def("min-peak", 10.0);
        }
    } else if (c == "total-time") {
        def("k", 1);
        def("tau-grid", linspace(0.002, 0.3, 150));
        def("t1-max", model == "tact" ? 0.16 : 0.15);
        def("t1-step", 0.002);
    } else if (c == "scaling") {
        const ScalingSpec d;
        def("n-list", d.particles);
        def("t-cap", d.time_cap_factor);
        def("n-t1", d.n_t1);
        def("n-t2", d.n_t2);
    } else if (c == "noise") {
        const NoiseSpec d;
        def("sigmas", parse_range("sigmas", "0.1:100:log25"));
        def("n-t1", d.n_t1);
        def("n-t2", d.n_t2);
    } else if (c == "magnify") {
        const MagnifySpec d;
        def("t1", d.t1);
        def("phi", d.phi_extract);
    } else if (c == "husimi") {
        def("t", 0.0);
        def("n-theta", 181);
        def("n-phi", 361);
    }
    return cfg;
}

inline void validate(const std::string &command, const json &cfg) {
    auto positive = [&](const char *key) {
        if (cfg.contains(key) && !(cfg[key].get<double>() > 0.0)) {
            throw ConfigError(std::string("--") + key + " must be > 0");
        }
    };
    auto non_negative = [&](const char *key) {
        if (cfg.contains(key) && !(cfg[key].get<double>() >= 0.0)) {
            throw ConfigError(std::string("--") + key + " must be >= 0");
        }
    };
    auto at_least = [&](const char *key, long lo) {
        if (cfg.contains(key) && cfg[key].get<long>() < lo) {
            throw ConfigError(std::string("--") + key + " must be >= " + std::to_string(lo));
        }
    };
    auto increasing = [&](const char *key) {
        if (cfg.contains(key)) {
            const auto g = cfg[key].get<std::vector<double>>();
            for (std::size_t i = 1; i < g.size(); ++i) {
                if (!(g[i] > g[i - 1])) {
                    throw ConfigError(std::string("--") + key + " must be strictly increasing");
                }
            }
        }
    };
    at_least("n", 1);
    positive("chi");
    positive("lambda");
    at_least("threads", 0);
    positive("dt");
    non_negative("t");
    non_negative("t1");
    positive("phi");
    positive("t1-step");
    non_negative("t1-max");
    positive("t-cap");
    at_least("n-t1", 2);
    at_least("n-t2", 2);
    at_least("n-theta", 2);
    at_least("n-phi", 2);
    increasing("t1-grid");
    increasing("t2-grid");
    increasing("tau-grid");
    if (cfg.contains("k")) {
        const long k = cfg["k"].get<long>();
        if (k < 1 || k > 3) {
            throw ConfigError("--k must be 1, 2 or 3");
        }
    }
    if (cfg.contains("sigmas")) {
        for (double s : cfg["sigmas"].get<std::vector<double>>()) {
            if (!(s >= 0.0)) {
                throw ConfigError("--sigmas must all be >= 0");
            }
        }
    }
    if (cfg.contains("n-list")) {
        const auto ns = cfg["n-list"].get<std::vector<long>>();
        if (ns.size() < 3) {
            throw ConfigError("--n-list needs at least 3 particle numbers for a fit");
        }
        for (std::size_t i = 0; i < ns.size(); ++i) {
            if (ns[i] < 10 || (i > 0 && ns[i] <= ns[i - 1])) {
                throw ConfigError("--n-list must be ascending with every N >= 10");
            }
        }
    }
    if (cfg.contains("track-fidelity")) {
        const auto tf = cfg["track-fidelity"].get<std::string>();
        if (tf != "initial" && tf != "opposite" && tf != "both-poles") {
            throw ConfigError("--track-fidelity: expected initial, opposite or both-poles");
        }
    }
    if (command == "magnify" && cfg.contains("t2")) {
        non_negative("t2");
    }
}

// ---------------------------------------------------------------------------
// Dispatch

struct RunOutput {
    io::CsvTable table;
    json summary = json::object();
};

inline json region_json(const GainRegion &r) {
    return {{"peak_db", r.peak_db}, {"t1", r.t1}, {"t2", r.t2}, {"cells", r.cells}};
}

inline RunOutput execute(const std::string &c, const json &cfg) {
    const int threads = cfg["threads"].get<int>();
    const double chi = cfg["chi"].get<double>();
    const double lambda = cfg["lambda"].get<double>();
    const Model model = c == "tact" ? Model::TACT
                        : c == "magnify" ? Model::TNT
                                         : parse_model(cfg["model"].get<std::string>());
    RunOutput out;

    if (c == "evolve") {
        const int n = cfg["n"].get<int>();
        const SpinEnsemble ens(n);
        const Hamiltonian h = make_hamiltonian(model, ens, chi, lambda);
        const StateVector psi0 = initial_state(ens);
        const auto ops = build_spin_operators(ens);
        const FidelityTrace f_init(h, psi0, psi0);
        const FidelityTrace f_opp(h, psi0, opposite_state(ens));
        const double t_end = cfg["t"].get<double>();
        const double dt = cfg["dt"].get<double>();
        const auto steps = static_cast<std::size_t>(std::floor(t_end / dt + 1e-9));
        std::vector<io::EvolveSample> trace(steps + 1);
        parallel_for(
            trace.size(),
            [&](std::size_t i) {
                const double t = static_cast<double>(i) * dt;
                trace[i] = {t, f_init(t), f_opp(t),
                            qfi_max(evolve(psi0, h, t), ops).fisher / n};
            },
            threads);
        const auto tf = cfg["track-fidelity"].get<std::string>();
        out.table = io::evolve_table(trace, tf != "opposite", tf != "initial");
        auto best = std::max_element(trace.begin(), trace.end(),
                                     [](const auto &a, const auto &b) { return a.qfi_norm < b.qfi_norm; });
        out.summary["qfi_max_db"] = 10.0 * std::log10(best->qfi_norm);
        out.summary["t_qfi_max"] = best->t;
        const RevivalOptions ro{t_end, dt, 0.3};
        auto revival = [&](const FidelityTrace &f) -> json {
            if (auto hit = first_revival(f, ro)) {
                return {{"t", hit->first}, {"fidelity", hit->second}};
            }
            return nullptr;
        };
        out.summary["revival_initial"] = revival(f_init);
        out.summary["revival_opposite"] = revival(f_opp);
        return out;
    }
    if (c == "landscape" || c == "tact") {
        LandscapeSpec s{model,
                        cfg["n"].get<int>(),
                        chi,
                        lambda,
                        cfg["t1-grid"].get<std::vector<double>>(),
                        cfg["t2-grid"].get<std::vector<double>>(),
                        cfg["k"].get<int>(),
                        threads};
        const auto r = gain_landscape(s);
        out.summary["best"] = {{"t1", r.best.t1}, {"t2", r.best.t2}, {"gain_db", r.best.gain_db}};
        if (c == "tact") {
            RegionOptions ro;
            ro.threshold_db = cfg["threshold"].get<double>();
            ro.min_peak_db = cfg["min-peak"].get<double>();
            std::vector<int> labels;
            const auto regions = gain_regions(r, ro, &labels);
            out.summary["regions"] = json::array();
            for (const auto &reg : regions) {
                out.summary["regions"].push_back(region_json(reg));
            }
            out.table = io::landscape_table(r, &labels);
        } else {
            out.table = io::landscape_table(r);
        }
        return out;
    }
    if (c == "total-time") {
        TotalTimeSpec s{model,
                        cfg["n"].get<int>(),
                        chi,
                        lambda,
                        cfg["tau-grid"].get<std::vector<double>>(),
                        cfg["t1-max"].get<double>(),
                        cfg["t1-step"].get<double>(),
                        cfg["k"].get<int>(),
                        threads};
        const auto curve = gain_vs_total_time(s);
        const auto onset = positive_onset(curve, 0.05);
        out.summary["nongaussian_onset"] = onset ? json(*onset) : json(nullptr);
        out.table = io::total_time_table(curve);
        return out;
    }
    if (c == "scaling") {
        ScalingSpec s;
        s.model = model;
        s.chi = chi;
        s.lambda = lambda;
        s.particles = cfg["n-list"].get<std::vector<int>>();
        s.time_cap_factor = cfg["t-cap"].get<double>();
        s.n_t1 = cfg["n-t1"].get<int>();
        s.n_t2 = cfg["n-t2"].get<int>();
        s.threads = threads;
        const auto r = scaling_study(s);
        out.summary["cyclic_exponent"] = r.cyclic_fit.exponent;
        out.summary["cyclic_stderr"] = r.cyclic_fit.stderr_exponent;
        out.summary["linear_exponent"] = r.linear_fit.exponent;
        out.summary["linear_stderr"] = r.linear_fit.stderr_exponent;
        out.summary["mean_deficit_db"] = r.mean_deficit_db;
        out.table = io::scaling_table(r);
        return out;
    }
    if (c == "noise") {
        NoiseSpec s;
        s.model = model;
        s.particles = cfg["n"].get<int>();
        s.chi = chi;
        s.lambda = lambda;
        s.sigmas = cfg["sigmas"].get<std::vector<double>>();
        s.n_t1 = cfg["n-t1"].get<int>();
        s.n_t2 = cfg["n-t2"].get<int>();
        s.threads = threads;
        const auto r = noise_robustness(s);
        out.summary["quasi_period"] = r.quasi_period;
        out.table = io::noise_table(r);
        return out;
    }
    if (c == "magnify") {
        MagnifySpec s;
        s.particles = cfg["n"].get<int>();
        s.chi = chi;
        s.lambda = lambda;
        s.t1 = cfg["t1"].get<double>();
        if (cfg.contains("t2")) {
            s.t2 = cfg["t2"].get<double>();
        }
        s.phi_extract = cfg["phi"].get<double>();
        const auto r = magnification_check(s);
        out.summary["probe_fisher"] = r.probe_fisher;
        out.summary["t2"] = r.t2;
        out.table = io::magnify_table(r, s.particles);
        return out;
    }
    if (c == "husimi") {
        const SpinEnsemble ens(cfg["n"].get<int>());
        const Hamiltonian h = make_hamiltonian(model, ens, chi, lambda);
        const StateVector state = evolve(initial_state(ens), h, cfg["t"].get<double>());
        const auto g = husimi_grid(state, cfg["n-theta"].get<int>(), cfg["n-phi"].get<int>());
        out.summary["integral"] = io::husimi_integral(g);
        out.table = io::husimi_table(g, model, ens, chi, h.omega());
        return out;
    }
    throw ConfigError("unknown command '" + c + "'");
}

/// Runs a parsed spec: CSV to --out (plus the sidecar manifest) or to `out`.
inline json run(const ExperimentSpec &spec, std::ostream &out) {
    const json cfg = resolve(spec);
    validate(spec.command, cfg);
    const auto start = std::chrono::steady_clock::now();
    RunOutput result = execute(spec.command, cfg);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const json doc = io::manifest(spec.command, cfg, wall, result.summary);
    const auto path = cfg["out"].get<std::string>();
    if (path.empty()) {
        io::write_csv(out, result.table);
    } else {
        io::write_csv(path, result.table);
        io::write_json(io::manifest_path(path), doc);
    }
    return doc;
}

/// Exit codes: 0 success, 2 configuration, 3 numerical failure, 4 I/O.
inline int main(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    try {
        const ParseOutcome parsed = parse_cli(argc, argv, out);
        if (!parsed.spec) {
            return parsed.exit_code;
        }
        const json doc = run(*parsed.spec, out);
        if (!doc["config"]["out"].get<std::string>().empty()) {
            out << doc["summary"].dump() << '\n';
        }
        return 0;
    } catch (const IoError &e) {
        err << "error: " << e.what() << '\n';
        return 4;
    } catch (const NumericError &e) {
        err << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::invalid_argument &e) {
        err << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const json::exception &e) {
        err << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace spinmetro::cli
