#pragma once

// CSV tables with shortest round-trip floats, the JSON sidecar manifest, and
// serializers from experiment results to tables.

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "spinmetro/protocols.hpp"

namespace spinmetro::io {

using json = nlohmann::json;

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc()) {
        throw IoError("format_double: conversion failed");
    }
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string &s) {
    double v = 0.0;
    const char *first = s.data();
    const char *last = s.data() + s.size();
    if (!s.empty() && *first == '+') {
        ++first;
    }
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || first == last) {
        throw std::invalid_argument("not a number: '" + s + "'");
    }
    return v;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row) {
        if (row.size() != header.size()) {
            throw std::logic_error("CsvTable: row width does not match header");
        }
        rows.push_back(std::move(row));
    }

    std::size_t column(const std::string &name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                return i;
            }
        }
        throw IoError("CSV has no column '" + name + "'");
    }

    double number(std::size_t row, const std::string &name) const {
        return parse_double(rows.at(row).at(column(name)));
    }
};

inline void write_csv(std::ostream &os, const CsvTable &t) {
    auto line = [&](const std::vector<std::string> &cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) {
                os << ',';
            }
            os << cells[i];
        }
        os << '\n';
    };
    line(t.header);
    for (const auto &r : t.rows) {
        line(r);
    }
}

inline void write_csv(const std::string &path, const CsvTable &t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    write_csv(os, t);
    os.flush();
    if (!os) {
        throw IoError("write to '" + path + "' failed");
    }
}

inline std::vector<std::string> split(const std::string &s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) {
        out.push_back(cur);
    }
    if (!s.empty() && s.back() == sep) {
        out.emplace_back();
    }
    return out;
}

inline CsvTable read_csv(const std::string &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot open '" + path + "' for reading");
    }
    CsvTable t;
    std::string line;
    if (!std::getline(is, line)) {
        throw IoError("'" + path + "' is empty");
    }
    t.header = split(line, ',');
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        auto cells = split(line, ',');
        if (cells.size() != t.header.size()) {
            throw IoError("'" + path + "' line " + std::to_string(lineno) + ": expected " +
                          std::to_string(t.header.size()) + " fields");
        }
        t.rows.push_back(std::move(cells));
    }
    return t;
}

inline json read_json(const std::string &path) {
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot open '" + path + "' for reading");
    }
    try {
        return json::parse(is);
    } catch (const json::parse_error &e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline void write_json(const std::string &path, const json &j) {
    std::ofstream os(path);
    if (!os) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    os << j.dump(2) << '\n';
    if (!os) {
        throw IoError("write to '" + path + "' failed");
    }
}

inline constexpr const char *kVersion = "1.0.0";

inline json units() {
    return {{"time", "1/chi"}, {"angle", "rad"}, {"gain", "dB"}, {"sigma", "spin units (s_z)"}};
}

/// Sidecar manifest; `config` is complete enough to re-run the command.
inline json manifest(const std::string &command, const json &config, double wall_time_s,
                     const json &summary) {
    return {{"command", command}, {"config", config},    {"version", kVersion},
            {"wall_time_s", wall_time_s}, {"units", units()}, {"summary", summary}};
}

inline std::string manifest_path(const std::string &csv_path) { return csv_path + ".json"; }

// ---------------------------------------------------------------------------
// Serializers

inline std::string fmt(double v) { return format_double(v); }

/// Long format, one `cell` row per grid point, then a `best` row. With
/// labels, an extra region column (0 = not in a kept region).
inline CsvTable landscape_table(const LandscapeResult &r, const std::vector<int> *labels = nullptr) {
    CsvTable t;
    t.header = {"record", "t1", "t2", "gain_db", "qcrb_db", "n_x", "n_y", "n_z"};
    const std::size_t p = r.m_opt.empty() ? 0 : static_cast<std::size_t>(r.m_opt.front().size());
    for (std::size_t l = 0; l < p; ++l) {
        t.header.push_back("m_" + std::to_string(l + 1));
    }
    if (labels) {
        t.header.push_back("region");
    }
    auto row = [&](const std::string &rec, std::size_t i, std::size_t j) {
        const std::size_t c = r.index(i, j);
        std::vector<std::string> cells = {
            rec, fmt(r.t1_grid[i]), fmt(r.t2_grid[j]),
            fmt(r.gain(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))),
            fmt(r.qcrb_db[i]), fmt(r.n_opt[c].x()), fmt(r.n_opt[c].y()), fmt(r.n_opt[c].z())};
        for (std::size_t l = 0; l < p; ++l) {
            cells.push_back(fmt(r.m_opt[c](static_cast<Eigen::Index>(l))));
        }
        if (labels) {
            cells.push_back(std::to_string((*labels)[c]));
        }
        t.add(std::move(cells));
    };
    for (std::size_t i = 0; i < r.t1_grid.size(); ++i) {
        for (std::size_t j = 0; j < r.t2_grid.size(); ++j) {
            row("cell", i, j);
        }
    }
    row("best", r.best.i, r.best.j);
    return t;
}

inline CsvTable total_time_table(const std::vector<TotalTimePoint> &curve) {
    CsvTable t;
    t.header = {"tau", "gain_db", "t1", "t2", "fidelity_initial", "fidelity_opposite"};
    for (const auto &p : curve) {
        t.add({fmt(p.tau), fmt(p.gain_db), fmt(p.t1), fmt(p.t2), fmt(p.fidelity_initial),
               fmt(p.fidelity_opposite)});
    }
    return t;
}

/// `point` rows per N, then one `fit` row per series with exponent and stderr.
inline CsvTable scaling_table(const ScalingResult &r) {
    CsvTable t;
    t.header = {"record",    "series",    "n",        "quasi_period", "qcrb_db",
                "cyclic_db", "cyclic_t1", "cyclic_total", "linear_db",    "linear_t1",
                "t_qfi_max", "exponent",  "stderr",   "intercept"};
    for (const auto &p : r.points) {
        t.add({"point", "", std::to_string(p.particles), fmt(p.quasi_period), fmt(p.qcrb_db),
               fmt(p.cyclic_db), fmt(p.cyclic_t1), fmt(p.cyclic_total), fmt(p.linear_db),
               fmt(p.linear_t1), fmt(p.t_qfi_max), "", "", ""});
    }
    auto fit = [&](const std::string &series, const PowerLawFit &f) {
        t.add({"fit", series, "", "", "", "", "", "", "", "", "", fmt(f.exponent),
               fmt(f.stderr_exponent), fmt(f.intercept)});
    };
    fit("cyclic", r.cyclic_fit);
    fit("linear", r.linear_fit);
    return t;
}

inline CsvTable noise_table(const NoiseTable &r) {
    CsvTable t;
    t.header = {"sigma",          "cyclic_gain_db", "cyclic_t1",        "cyclic_t2",
                "linear_gain_db", "linear_t1",      "reversed_gain_db", "reversed_t1",
                "reversed_t2"};
    for (const auto &row : r.rows) {
        t.add({fmt(row.sigma), fmt(row.cyclic.gain_db), fmt(row.cyclic.t1), fmt(row.cyclic.t2),
               fmt(row.linear.gain_db), fmt(row.linear.t1), fmt(row.reversed.gain_db),
               fmt(row.reversed.t1), fmt(row.reversed.t2)});
    }
    return t;
}

/// (theta, phi, q) triples with the mean-field energy for contour plots.
inline CsvTable husimi_table(const HusimiGrid &g, Model model, const SpinEnsemble &ens, double chi,
                             double omega) {
    CsvTable t;
    t.header = {"theta", "phi", "q", "energy"};
    for (std::size_t i = 0; i < g.theta.size(); ++i) {
        for (std::size_t j = 0; j < g.phi.size(); ++j) {
            t.add({fmt(g.theta[i]), fmt(g.phi[j]),
                   fmt(g.q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))),
                   fmt(mean_field_energy(model, ens, chi, omega, g.theta[i], g.phi[j]))});
        }
    }
    return t;
}

/// Riemann sum of Q sin(theta) dtheta dphi; the trapezoid weights drop the
/// duplicated phi = 2 pi column.
inline double husimi_integral(const HusimiGrid &g) {
    const double dth = g.theta[1] - g.theta[0];
    const double dph = g.phi[1] - g.phi[0];
    double acc = 0.0;
    for (std::size_t i = 0; i < g.theta.size(); ++i) {
        const double wi = (i == 0 || i + 1 == g.theta.size()) ? 0.5 : 1.0;
        for (std::size_t j = 0; j + 1 < g.phi.size(); ++j) {
            acc += wi * g.q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
                   std::sin(g.theta[i]);
        }
    }
    return acc * dth * dph;
}

struct EvolveSample {
    double t = 0.0;
    double fidelity_initial = 0.0;
    double fidelity_opposite = 0.0;
    double qfi_norm = 0.0; // F_Q / N
};

/// Columns follow the requested fidelity tracks.
inline CsvTable evolve_table(const std::vector<EvolveSample> &trace, bool initial, bool opposite) {
    CsvTable t;
    t.header = {"t"};
    if (initial) {
        t.header.push_back("fidelity_initial");
    }
    if (opposite) {
        t.header.push_back("fidelity_opposite");
    }
    t.header.push_back("qfi_norm");
    for (const auto &s : trace) {
        std::vector<std::string> row{fmt(s.t)};
        if (initial) {
            row.push_back(fmt(s.fidelity_initial));
        }
        if (opposite) {
            row.push_back(fmt(s.fidelity_opposite));
        }
        row.push_back(fmt(s.qfi_norm));
        t.add(std::move(row));
    }
    return t;
}

inline CsvTable magnify_table(const MagnificationReport &r, int particles) {
    CsvTable t;
    t.header = {"record", "measured", "expected", "ratio"};
    auto add = [&](const std::string &name, double measured, double expected) {
        t.add({name, fmt(measured), fmt(expected), fmt(measured / expected)});
    };
    add("coherent_quadratic", r.synthetic_coeff, 0.25 * particles);
    add("probe_quadratic", r.probe_coeff, 0.25 * r.probe_fisher);
    add("saturated_delta_phi", r.saturated_delta_phi, r.qcrb);
    add("dynamical_magnification", r.dynamical_magnification, r.expected_magnification);
    return t;
}

} // namespace spinmetro::io
