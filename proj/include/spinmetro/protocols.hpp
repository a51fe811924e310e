#pragma once

// End-to-end experiments: single interferometer runs, (t1, t2) gain
// landscapes, total-time curves, particle-number scaling, detection-noise
// sweeps and the quantum-magnification check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinmetro/detection_noise.hpp"
#include "spinmetro/metrology.hpp"
#include "spinmetro/parallel.hpp"

namespace spinmetro {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline std::vector<double> linspace(double a, double b, int n) {
    if (n < 1) {
        throw std::invalid_argument("linspace: need at least one point");
    }
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = a;
        return out;
    }
    for (int i = 0; i < n; ++i) {
        out[i] = a + (b - a) * i / (n - 1);
    }
    return out;
}

inline void require_increasing(const std::vector<double> &g, const char *name) {
    if (g.empty()) {
        throw std::invalid_argument(std::string(name) + " grid is empty");
    }
    for (std::size_t i = 1; i < g.size(); ++i) {
        if (!(g[i] > g[i - 1])) {
            throw std::invalid_argument(std::string(name) + " grid must be strictly increasing");
        }
    }
}

/// |s_x = +N/2>, the input state of every experiment.
inline StateVector initial_state(const SpinEnsemble &ens) {
    return coherent_state(ens, 0.5 * std::numbers::pi, 0.0);
}

/// |s_x = -N/2>, the second unstable fixed point of the TACT model.
inline StateVector opposite_state(const SpinEnsemble &ens) {
    return coherent_state(ens, 0.5 * std::numbers::pi, std::numbers::pi);
}

/// TNT takes omega = chi N / lambda; lambda is ignored for TACT.
inline Hamiltonian make_hamiltonian(Model model, const SpinEnsemble &ens, double chi,
                                    double lambda) {
    return model == Model::TNT ? build_tnt_lambda(ens, chi, lambda) : build_tact(ens, chi);
}

// ---------------------------------------------------------------------------
// Single run

struct InterferometerConfig {
    Model model = Model::TNT;
    int particles = 100;
    double chi = 1.0;
    double lambda = 2.0;
    double t1 = 0.0;
    double t2 = 0.0;
    Direction n{0.0, 1.0, 0.0};
    double phi = 0.0;
    int order = 1;
    double sigma = 0.0;
    /// Axis mapped onto z before population detection; identity when unset.
    std::optional<Direction> measure;
};

struct InterferometerRun {
    StateVector probe;
    StateVector output;
    RVector distribution;
    double signal = 0.0;   // <Sz> of the (noisy) distribution
    double variance = 0.0; // (Delta Sz)^2 of the (noisy) distribution
};

/// psi_out = R_m U(t2) R_n(phi) U(t1) |+x>.
inline InterferometerRun run_interferometer(const InterferometerConfig &cfg) {
    const SpinEnsemble ens(cfg.particles);
    const Hamiltonian h = make_hamiltonian(cfg.model, ens, cfg.chi, cfg.lambda);
    const auto ops = build_spin_operators(ens);
    const StateVector probe = evolve(initial_state(ens), h, cfg.t1);
    const StateVector encoded = SpinRotation(ops, cfg.n).apply(probe, cfg.phi);
    CVector out = h.propagate(encoded.amplitudes(), cfg.t2);
    if (cfg.measure) {
        out = measurement_rotation(ops, *cfg.measure) * out;
    }
    InterferometerRun run{probe, StateVector(std::move(out)), {}, 0.0, 0.0};
    run.distribution = noisy_distribution(run.output, build_noise(ens, cfg.sigma));
    const RVector m = sz_values(ens);
    run.signal = distribution_mean(run.distribution, m);
    run.variance = distribution_variance(run.distribution, m);
    return run;
}

// ---------------------------------------------------------------------------
// Local refinement

struct GridPoint {
    double t1 = 0.0;
    double t2 = 0.0;
    double value = kNegInf;
};

/// Compass search for a maximum starting from a grid optimum; steps halve
/// when no neighbour improves. `feasible` bounds the search domain.
template <class F, class Feasible>
GridPoint compass_refine(const F &f, GridPoint start, double h1, double h2,
                         const Feasible &feasible, int max_evals = 200, double tol = 1e-7) {
    GridPoint best = start;
    int evals = 0;
    static constexpr int dirs[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1},
                                       {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
    while ((h1 > tol || h2 > tol) && evals < max_evals) {
        bool improved = false;
        for (const auto &d : dirs) {
            const double a = best.t1 + d[0] * h1;
            const double b = best.t2 + d[1] * h2;
            if ((d[0] != 0 && h1 <= tol) || (d[1] != 0 && h2 <= tol) || !feasible(a, b)) {
                continue;
            }
            const double v = f(a, b);
            ++evals;
            if (v > best.value) {
                best = {a, b, v};
                improved = true;
            }
        }
        if (!improved) {
            h1 *= 0.5;
            h2 *= 0.5;
        }
    }
    return best;
}

/// Safe cell evaluation: zero-signal cells count as -inf dB.
inline double cell_gain_db(const CyclicInterferometer &ifm, double t1, double t2) {
    try {
        return optimize_nm(ifm.moments(t1, t2)).gain_db;
    } catch (const ZeroSignalError &) {
        return kNegInf;
    }
}

// ---------------------------------------------------------------------------
// Landscape

struct LandscapeSpec {
    Model model = Model::TNT;
    int particles = 100;
    double chi = 1.0;
    double lambda = 2.0;
    std::vector<double> t1_grid;
    std::vector<double> t2_grid;
    int order = 1;
    int threads = 0;
};

inline LandscapeSpec default_landscape(Model model, int particles = 100, double chi = 1.0,
                                       double lambda = 2.0, int order = 1) {
    LandscapeSpec s{model, particles, chi, lambda, {}, {}, order, 0};
    if (model == Model::TNT) {
        s.t1_grid = linspace(0.0, 0.15, 75);
        s.t2_grid = linspace(0.0, 0.2, 100);
    } else {
        s.t1_grid = linspace(0.0, 0.16, 100);
        s.t2_grid = linspace(0.0, 0.2, 100);
    }
    return s;
}

struct LandscapeBest {
    std::size_t i = 0;
    std::size_t j = 0;
    double t1 = 0.0;
    double t2 = 0.0;
    double gain_db = kNegInf;
};

struct LandscapeResult {
    Model model = Model::TNT;
    int particles = 0;
    int order = 1;
    std::vector<double> t1_grid;
    std::vector<double> t2_grid;
    RMatrix gain;                        // gain(i, j) at (t1_grid[i], t2_grid[j]), dB
    std::vector<Eigen::Vector3d> n_opt;  // row-major, i * |t2| + j
    std::vector<RVector> m_opt;          // row-major
    std::vector<double> qcrb_db;         // 10 log10(F_Q(probe at t1) / N) per row
    LandscapeBest best;

    std::size_t index(std::size_t i, std::size_t j) const { return i * t2_grid.size() + j; }
};

inline LandscapeResult gain_landscape(const LandscapeSpec &spec) {
    require_increasing(spec.t1_grid, "t1");
    require_increasing(spec.t2_grid, "t2");
    const SpinEnsemble ens(spec.particles);
    const Hamiltonian h = make_hamiltonian(spec.model, ens, spec.chi, spec.lambda);
    const CyclicInterferometer ifm(h, initial_state(ens), spec.order);

    LandscapeResult res;
    res.model = spec.model;
    res.particles = spec.particles;
    res.order = spec.order;
    res.t1_grid = spec.t1_grid;
    res.t2_grid = spec.t2_grid;
    const std::size_t n1 = spec.t1_grid.size();
    const std::size_t n2 = spec.t2_grid.size();
    res.gain = RMatrix::Constant(static_cast<Eigen::Index>(n1), static_cast<Eigen::Index>(n2), kNegInf);
    res.n_opt.assign(n1 * n2, Eigen::Vector3d::Zero());
    res.m_opt.assign(n1 * n2, RVector::Zero(static_cast<Eigen::Index>(ifm.set().size())));
    res.qcrb_db.assign(n1, kNegInf);

    parallel_for(
        n1,
        [&](std::size_t i) {
            const ProbeStage stage = ifm.stage(spec.t1_grid[i]);
            const double fq = qfi_max(StateVector(stage.probe()), ifm.spin_ops()).fisher;
            res.qcrb_db[i] = fisher_gain_db(fq, spec.particles);
            for (std::size_t j = 0; j < n2; ++j) {
                try {
                    const auto s = optimize_nm(stage.moments(spec.t2_grid[j]));
                    res.gain(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s.gain_db;
                    res.n_opt[res.index(i, j)] = s.n_opt.vector();
                    res.m_opt[res.index(i, j)] = s.m_opt;
                } catch (const ZeroSignalError &) {
                }
            }
        },
        spec.threads);

    for (std::size_t i = 0; i < n1; ++i) {
        for (std::size_t j = 0; j < n2; ++j) {
            const double g = res.gain(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (g > res.best.gain_db) {
                res.best = {i, j, spec.t1_grid[i], spec.t2_grid[j], g};
            }
        }
    }
    return res;
}

struct GainRegion {
    std::size_t cells = 0;
    double peak_db = kNegInf;
    double t1 = 0.0;
    double t2 = 0.0;
    bool touches_t2_zero = false;
};

struct RegionOptions {
    double threshold_db = 3.0;
    /// Lobes whose peak stays below this are threshold-crossing ripples.
    double min_peak_db = 10.0;
    /// Drop the lobe fed directly by the probe (cells at t2 = 0).
    bool exclude_direct_readout = true;
};

/// Connected components (4-neighbour) of {gain > threshold}, each labelled
/// with its peak. `labels`, when given, receives a 1-based region id per
/// cell for the kept regions and 0 elsewhere.
inline std::vector<GainRegion> gain_regions(const LandscapeResult &res, const RegionOptions &opt,
                                            std::vector<int> *labels = nullptr) {
    const auto n1 = static_cast<std::size_t>(res.gain.rows());
    const auto n2 = static_cast<std::size_t>(res.gain.cols());
    std::vector<int> comp(n1 * n2, -1);
    std::vector<GainRegion> all;
    auto above = [&](std::size_t i, std::size_t j) {
        return res.gain(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > opt.threshold_db;
    };
    for (std::size_t i0 = 0; i0 < n1; ++i0) {
        for (std::size_t j0 = 0; j0 < n2; ++j0) {
            if (!above(i0, j0) || comp[i0 * n2 + j0] >= 0) {
                continue;
            }
            const int id = static_cast<int>(all.size());
            GainRegion reg;
            std::queue<std::pair<std::size_t, std::size_t>> todo;
            todo.push({i0, j0});
            comp[i0 * n2 + j0] = id;
            while (!todo.empty()) {
                const auto [i, j] = todo.front();
                todo.pop();
                ++reg.cells;
                const double g = res.gain(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                if (g > reg.peak_db) {
                    reg.peak_db = g;
                    reg.t1 = res.t1_grid[i];
                    reg.t2 = res.t2_grid[j];
                }
                if (j == 0) {
                    reg.touches_t2_zero = true;
                }
                const long di[4] = {1, -1, 0, 0};
                const long dj[4] = {0, 0, 1, -1};
                for (int q = 0; q < 4; ++q) {
                    const long a = static_cast<long>(i) + di[q];
                    const long b = static_cast<long>(j) + dj[q];
                    if (a < 0 || b < 0 || a >= static_cast<long>(n1) || b >= static_cast<long>(n2)) {
                        continue;
                    }
                    const auto ua = static_cast<std::size_t>(a);
                    const auto ub = static_cast<std::size_t>(b);
                    if (above(ua, ub) && comp[ua * n2 + ub] < 0) {
                        comp[ua * n2 + ub] = id;
                        todo.push({ua, ub});
                    }
                }
            }
            all.push_back(reg);
        }
    }
    std::vector<GainRegion> kept;
    std::vector<int> remap(all.size(), 0);
    for (std::size_t r = 0; r < all.size(); ++r) {
        if (all[r].peak_db < opt.min_peak_db ||
            (opt.exclude_direct_readout && all[r].touches_t2_zero)) {
            continue;
        }
        kept.push_back(all[r]);
        remap[r] = static_cast<int>(kept.size());
    }
    if (labels) {
        labels->assign(n1 * n2, 0);
        for (std::size_t c = 0; c < comp.size(); ++c) {
            if (comp[c] >= 0) {
                (*labels)[c] = remap[static_cast<std::size_t>(comp[c])];
            }
        }
    }
    return kept;
}

// ---------------------------------------------------------------------------
// Total-time curve

struct TotalTimeSpec {
    Model model = Model::TNT;
    int particles = 100;
    double chi = 1.0;
    double lambda = 2.0;
    std::vector<double> tau_grid;
    double t1_max = 0.15;
    /// t1 sampling step along each tau = t1 + t2 line.
    double t1_step = 0.002;
    int order = 1;
    int threads = 0;
};

struct TotalTimePoint {
    double tau = 0.0;
    double gain_db = kNegInf;
    double t1 = 0.0;
    double t2 = 0.0;
    double fidelity_initial = 0.0;
    double fidelity_opposite = 0.0;
};

/// For every tau, the best gain over the line t1 + t2 = tau (t1 <= t1_max),
/// together with the fidelities of U(tau)|+x> to |+x> and |-x>.
inline std::vector<TotalTimePoint> gain_vs_total_time(const TotalTimeSpec &spec) {
    require_increasing(spec.tau_grid, "tau");
    const SpinEnsemble ens(spec.particles);
    const Hamiltonian h = make_hamiltonian(spec.model, ens, spec.chi, spec.lambda);
    const StateVector psi0 = initial_state(ens);
    const CyclicInterferometer ifm(h, psi0, spec.order);
    const FidelityTrace f_init(h, psi0, psi0);
    const FidelityTrace f_opp(h, psi0, opposite_state(ens));

    std::vector<TotalTimePoint> out(spec.tau_grid.size());
    parallel_for(
        out.size(),
        [&](std::size_t q) {
            const double tau = spec.tau_grid[q];
            TotalTimePoint pt;
            pt.tau = tau;
            pt.fidelity_initial = f_init(tau);
            pt.fidelity_opposite = f_opp(tau);
            const double lim = std::min(tau, spec.t1_max);
            const int steps = static_cast<int>(std::floor(lim / spec.t1_step + 1e-9));
            for (int s = 0; s <= steps + 1; ++s) {
                const double t1 = s <= steps ? s * spec.t1_step : lim;
                if (s == steps + 1 && std::abs(lim - steps * spec.t1_step) < 1e-12) {
                    break;
                }
                const double t2 = std::max(tau - t1, 0.0);
                const double g = cell_gain_db(ifm, t1, t2);
                if (g > pt.gain_db) {
                    pt.gain_db = g;
                    pt.t1 = t1;
                    pt.t2 = t2;
                }
            }
            out[q] = pt;
        },
        spec.threads);
    return out;
}

/// First tau >= tau_min on the curve whose gain is positive.
inline std::optional<double> positive_onset(const std::vector<TotalTimePoint> &curve,
                                            double tau_min) {
    for (const auto &p : curve) {
        if (p.tau >= tau_min && p.gain_db > 0.0) {
            return p.tau;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Particle-number scaling

struct PowerLawFit {
    double exponent = 0.0;
    double stderr_exponent = 0.0;
    double intercept = 0.0;
};

/// Unweighted least squares of log(y) against log(x).
inline PowerLawFit fit_power_law(const std::vector<double> &x, const std::vector<double> &y) {
    if (x.size() != y.size() || x.size() < 3) {
        throw std::invalid_argument("fit_power_law: need >= 3 matching points");
    }
    const auto n = static_cast<Eigen::Index>(x.size());
    RMatrix a(n, 2);
    RVector b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, 0) = std::log(x[static_cast<std::size_t>(i)]);
        a(i, 1) = 1.0;
        b(i) = std::log(y[static_cast<std::size_t>(i)]);
    }
    const RMatrix ata = a.transpose() * a;
    const RVector coef = ata.ldlt().solve(a.transpose() * b);
    const RVector r = b - a * coef;
    const double s2 = r.squaredNorm() / static_cast<double>(n - 2);
    const RMatrix cov = s2 * ata.inverse();
    return {coef(0), std::sqrt(cov(0, 0)), coef(1)};
}

struct ScalingSpec {
    Model model = Model::TNT;
    double chi = 1.0;
    double lambda = 2.0;
    std::vector<int> particles{20, 40, 70, 100, 200, 400, 700, 1000};
    double time_cap_factor = 1.5;
    int n_t1 = 120;
    int n_t2 = 60;
    bool refine = true;
    int threads = 0;
};

struct ScalingPoint {
    int particles = 0;
    double quasi_period = 0.0;
    double revival_fidelity = 0.0;
    double t_qfi_max = 0.0;
    double qcrb_db = kNegInf;
    double cyclic_db = kNegInf;
    double cyclic_t1 = 0.0;
    double cyclic_total = 0.0;
    double linear_db = kNegInf;
    double linear_t1 = 0.0;
};

struct ScalingResult {
    std::vector<ScalingPoint> points;
    PowerLawFit cyclic_fit;
    PowerLawFit linear_fit;
    /// Mean over N of (max QCRB gain - cyclic gain), dB.
    double mean_deficit_db = 0.0;
};

inline double delta_phi_from_gain(double gain, int particles) {
    return std::pow(10.0, -gain / 20.0) / std::sqrt(static_cast<double>(particles));
}

inline double default_revival_window(int particles, double chi) {
    return 10.0 * (1.0 + std::log(static_cast<double>(particles))) / (chi * particles);
}

inline ScalingPoint scaling_point(const ScalingSpec &spec, int particles) {
    if (particles < 10) {
        throw std::invalid_argument("scaling_study: every N must be >= 10");
    }
    const SpinEnsemble ens(particles);
    const Hamiltonian h = make_hamiltonian(spec.model, ens, spec.chi, spec.lambda);
    const StateVector psi0 = initial_state(ens);
    const CyclicInterferometer ifm(h, psi0, 1);
    ScalingPoint pt;
    pt.particles = particles;
    const QuasiPeriod qp = quasi_period(h, psi0, default_revival_window(particles, spec.chi));
    pt.quasi_period = qp.T;
    pt.revival_fidelity = qp.peak_fidelity;
    const double cap = spec.time_cap_factor * qp.T;

    // Maximal QFI over t1 in [0, cap].
    auto qfi_db = [&](double t1, double /*unused*/) {
        if (t1 < 0.0 || t1 > cap) {
            return kNegInf;
        }
        return fisher_gain_db(qfi_max(StateVector(ifm.probe(t1)), ifm.spin_ops()).fisher, particles);
    };
    const auto t_qfi = linspace(0.0, cap, 4 * spec.n_t1);
    GridPoint q_best;
    for (double t : t_qfi) {
        const double v = qfi_db(t, 0.0);
        if (v > q_best.value) {
            q_best = {t, 0.0, v};
        }
    }
    const double hq = t_qfi[1] - t_qfi[0];
    q_best = compass_refine(qfi_db, q_best, hq, 0.0,
                            [&](double a, double) { return a >= 0.0 && a <= cap; });
    pt.t_qfi_max = q_best.t1;
    pt.qcrb_db = q_best.value;

    // Cyclic readout on t1, t1 + t2 <= cap; linear readout on the t2 = 0 edge.
    const auto t1s = linspace(0.0, cap, spec.n_t1);
    GridPoint c_best;
    GridPoint l_best;
    for (double t1 : t1s) {
        const ProbeStage stage = ifm.stage(t1);
        const auto t2s = linspace(0.0, std::max(cap - t1, 0.0), spec.n_t2);
        for (double t2 : t2s) {
            double g = kNegInf;
            try {
                g = optimize_nm(stage.moments(t2)).gain_db;
            } catch (const ZeroSignalError &) {
            }
            if (g > c_best.value) {
                c_best = {t1, t2, g};
            }
            if (t2 == 0.0 && g > l_best.value) {
                l_best = {t1, 0.0, g};
            }
            if (t2s.size() == 1) {
                break;
            }
        }
    }
    if (spec.refine) {
        const double h1 = cap / (spec.n_t1 - 1);
        const double h2 = cap / (spec.n_t2 - 1);
        auto f = [&](double a, double b) { return cell_gain_db(ifm, a, b); };
        c_best = compass_refine(f, c_best, h1, h2, [&](double a, double b) {
            return a >= 0.0 && b >= 0.0 && a + b <= cap;
        });
        l_best = compass_refine(f, l_best, h1, 0.0,
                                [&](double a, double) { return a >= 0.0 && a <= cap; });
    }
    pt.cyclic_db = c_best.value;
    pt.cyclic_t1 = c_best.t1;
    pt.cyclic_total = c_best.t1 + c_best.t2;
    pt.linear_db = l_best.value;
    pt.linear_t1 = l_best.t1;
    return pt;
}

inline ScalingResult scaling_study(const ScalingSpec &spec) {
    if (!std::is_sorted(spec.particles.begin(), spec.particles.end())) {
        throw std::invalid_argument("scaling_study: N list must be ascending");
    }
    ScalingResult res;
    res.points.resize(spec.particles.size());
    parallel_for(
        spec.particles.size(),
        [&](std::size_t i) { res.points[i] = scaling_point(spec, spec.particles[i]); }, spec.threads);
    std::vector<double> ns, cyc, lin;
    double deficit = 0.0;
    for (const auto &p : res.points) {
        ns.push_back(p.particles);
        cyc.push_back(delta_phi_from_gain(p.cyclic_db, p.particles));
        lin.push_back(delta_phi_from_gain(p.linear_db, p.particles));
        deficit += p.qcrb_db - p.cyclic_db;
    }
    res.cyclic_fit = fit_power_law(ns, cyc);
    res.linear_fit = fit_power_law(ns, lin);
    res.mean_deficit_db = deficit / static_cast<double>(res.points.size());
    return res;
}

// ---------------------------------------------------------------------------
// Detection-noise robustness

struct NoiseSpec {
    Model model = Model::TNT;
    int particles = 100;
    double chi = 1.0;
    double lambda = 2.0;
    std::vector<double> sigmas;
    int n_t1 = 31;
    int n_t2 = 46;
    int threads = 0;
};

struct NoiseOptimum {
    double gain_db = kNegInf;
    double t1 = 0.0;
    double t2 = 0.0;
};

struct NoiseRow {
    double sigma = 0.0;
    NoiseOptimum cyclic;
    NoiseOptimum linear;
    NoiseOptimum reversed;
};

struct NoiseTable {
    double quasi_period = 0.0;
    std::vector<NoiseRow> rows;
};

namespace detail {

struct NoiseCell {
    double t1 = 0.0;
    double t2 = 0.0;
    bool valid = false;
    ReadoutProfile profile;
};

/// Noiseless (n_opt, m_opt) of the linear set fixes the encoding axis and
/// the readout rotation R_m; the profile then serves every sigma.
inline NoiseCell noise_cell(const CyclicInterferometer &ifm, const Hamiltonian &h, double t1,
                            double t2) {
    NoiseCell cell{t1, t2, false, {}};
    const ProbeStage stage = ifm.stage(t1);
    SensitivityResult s;
    try {
        s = optimize_nm(stage.moments(t2));
    } catch (const ZeroSignalError &) {
        return cell;
    }
    const Eigen::Vector3d mv = s.m_opt.head<3>();
    if (!(mv.norm() > 0.0)) {
        return cell;
    }
    const auto &ops = ifm.spin_ops();
    const CMatrix rm = measurement_rotation(ops, Direction::normalized(mv));
    const CVector chi = rm * h.propagate(stage.probe(), t2);
    const CVector eta = rm * h.propagate(spin_along(ops, s.n_opt).apply(stage.probe()), t2);
    cell.profile.populations = chi.cwiseAbs2();
    cell.profile.slope_density.resize(chi.size());
    for (Eigen::Index j = 0; j < chi.size(); ++j) {
        cell.profile.slope_density(j) = 2.0 * (std::conj(chi(j)) * eta(j)).imag();
    }
    cell.valid = true;
    return cell;
}

} // namespace detail

/// Optimal noisy gain per sigma for three readouts: cyclic (t1 in [0,T],
/// t2 in [0,1.5T]), linear (t2 = 0) and time-reversed (t2 in [-1.5T, 0]).
inline NoiseTable noise_robustness(const NoiseSpec &spec) {
    for (double s : spec.sigmas) {
        if (!(s >= 0.0)) {
            throw std::invalid_argument("noise_robustness: sigmas must be >= 0");
        }
    }
    const SpinEnsemble ens(spec.particles);
    const Hamiltonian h = make_hamiltonian(spec.model, ens, spec.chi, spec.lambda);
    const StateVector psi0 = initial_state(ens);
    const CyclicInterferometer ifm(h, psi0, 1);
    NoiseTable table;
    table.quasi_period = quasi_period(h, psi0, default_revival_window(spec.particles, spec.chi)).T;
    const double T = table.quasi_period;

    struct Series {
        std::vector<double> t1, t2;
    };
    const auto t1s = linspace(0.0, T, spec.n_t1);
    const Series cyclic{t1s, linspace(0.0, 1.5 * T, spec.n_t2)};
    const Series linear{linspace(0.0, T, 2 * spec.n_t1 - 1), {0.0}};
    std::vector<double> rev = linspace(0.0, 1.5 * T, spec.n_t2);
    for (double &v : rev) {
        v = -v;
    }
    const Series reversed{t1s, rev};

    std::vector<NoiseModel> models;
    models.reserve(spec.sigmas.size());
    for (double s : spec.sigmas) {
        models.push_back(build_noise(ens, s));
    }
    const RVector m = sz_values(ens);

    auto optimize = [&](const Series &series) {
        const std::size_t n2 = series.t2.size();
        std::vector<detail::NoiseCell> cells(series.t1.size() * n2);
        parallel_for(
            cells.size(),
            [&](std::size_t c) {
                cells[c] = detail::noise_cell(ifm, h, series.t1[c / n2], series.t2[c % n2]);
            },
            spec.threads);
        std::vector<NoiseOptimum> best(spec.sigmas.size());
        for (const auto &cell : cells) {
            if (!cell.valid) {
                continue;
            }
            for (std::size_t s = 0; s < models.size(); ++s) {
                double g = kNegInf;
                try {
                    g = profile_gain_db(cell.profile, models[s], m, spec.particles);
                } catch (const SingularMeasurementError &) {
                }
                if (g > best[s].gain_db) {
                    best[s] = {g, cell.t1, cell.t2};
                }
            }
        }
        return best;
    };
    const auto c = optimize(cyclic);
    const auto l = optimize(linear);
    const auto r = optimize(reversed);
    for (std::size_t s = 0; s < spec.sigmas.size(); ++s) {
        table.rows.push_back({spec.sigmas[s], c[s], l[s], r[s]});
    }
    return table;
}

// ---------------------------------------------------------------------------
// Quantum magnification

struct MagnifySpec {
    int particles = 100;
    double chi = 1.0;
    double lambda = 2.0;
    /// Probe preparation time (near maximal QFI).
    double t1 = 0.07;
    /// Recombining time; unset means refocusing, t2 = T - t1.
    std::optional<double> t2;
    std::vector<double> theta_list = linspace(0.002, 0.02, 10);
    std::vector<double> phi_list = linspace(2e-4, 2e-3, 10);
    double phi_extract = 1e-3;
};

struct MagnificationReport {
    double probe_fisher = 0.0;
    double synthetic_coeff = 0.0;  // fitted d(1-F)/d(theta^2), expected N/4
    double probe_coeff = 0.0;      // fitted d(1-F)/d(phi^2), expected F_Q/4
    double saturated_delta_phi = 0.0;
    double qcrb = 0.0;
    double dynamical_magnification = 0.0; // (d<Sz>/dphi)/(N/2)
    double expected_magnification = 0.0;  // sqrt(F_Q/N)
    double t2 = 0.0;                      // recombining time used
};

/// Quadratic coefficient a of y = a x^2 + b x^4 by least squares.
inline double quadratic_coefficient(const std::vector<double> &x, const std::vector<double> &y) {
    const auto n = static_cast<Eigen::Index>(x.size());
    RMatrix a(n, 2);
    RVector b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x2 = x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
        a(i, 0) = x2;
        a(i, 1) = x2 * x2;
        b(i) = y[static_cast<std::size_t>(i)];
    }
    return a.colPivHouseholderQr().solve(b)(0);
}

inline MagnificationReport magnification_check(const MagnifySpec &spec) {
    const SpinEnsemble ens(spec.particles);
    const auto ops = build_spin_operators(ens);
    const Hamiltonian h = build_tnt_lambda(ens, spec.chi, spec.lambda);
    const StateVector psi0 = initial_state(ens);
    MagnificationReport rep;
    const double n = spec.particles;

    // Coherent state rotated transversally: 1 - F = theta^2 N/4 + O(theta^4).
    const SpinRotation about_y(ops, Direction(0.0, 1.0, 0.0));
    std::vector<double> loss;
    for (double th : spec.theta_list) {
        loss.push_back(1.0 - fidelity(psi0, about_y.apply(psi0, th)));
    }
    rep.synthetic_coeff = quadratic_coefficient(spec.theta_list, loss);

    // Probe: 1 - F = phi^2 F_Q/4 along its optimal generator.
    const StateVector probe = evolve(psi0, h, spec.t1);
    const QfiResult q = qfi_max(probe, ops);
    rep.probe_fisher = q.fisher;
    rep.qcrb = qcrb(q.fisher);
    const SpinRotation about_n(ops, q.n_star);
    loss.clear();
    for (double ph : spec.phi_list) {
        loss.push_back(1.0 - fidelity(probe, about_n.apply(probe, ph)));
    }
    rep.probe_coeff = quadratic_coefficient(spec.phi_list, loss);

    // Perfectly disentangled output: coherent state displaced by
    // theta = phi sqrt(F_Q/N), read out by error propagation on Sz.
    rep.expected_magnification = std::sqrt(q.fisher / n);
    {
        const double dphi = spec.phi_extract;
        auto sz_mean = [&](double ph) {
            const CVector v = about_y.apply(psi0, ph * rep.expected_magnification).amplitudes();
            return v.dot(ops.z.apply(v)).real();
        };
        const double slope = (sz_mean(dphi) - sz_mean(-dphi)) / (2.0 * dphi);
        const Moments mom = moments(psi0, linear_set(ops));
        rep.saturated_delta_phi = std::sqrt(mom.covariance(2, 2)) / std::abs(slope);
    }

    // Dynamical: the refocused output is displaced by the magnified angle.
    // The displacement direction is mapped onto z before reading <Sz>.
    {
        const double t2 = spec.t2 ? *spec.t2
                                  : quasi_period(h, psi0, default_revival_window(spec.particles, spec.chi)).T -
                                        spec.t1;
        rep.t2 = t2;
        const CyclicInterferometer ifm(h, psi0, 1);
        const SpinRotation enc(ops, optimize_nm(ifm.moments(spec.t1, t2)).n_opt);
        auto output = [&](double ph) {
            return h.propagate(enc.apply(probe.amplitudes(), ph), t2);
        };
        auto mean_spin = [&](const CVector &v) {
            return Eigen::Vector3d(v.dot(ops.x.apply(v)).real(), v.dot(ops.y.apply(v)).real(),
                                   v.dot(ops.z.apply(v)).real());
        };
        const CVector ref = output(0.0);
        const CVector shifted = output(spec.phi_extract);
        const Eigen::Vector3d disp = mean_spin(shifted) - mean_spin(ref);
        const CMatrix rm = measurement_rotation(ops, Direction::normalized(disp));
        const CVector a = rm * ref;
        const CVector b = rm * shifted;
        const double slope =
            (b.dot(ops.z.apply(b)).real() - a.dot(ops.z.apply(a)).real()) / spec.phi_extract;
        rep.dynamical_magnification = std::abs(slope) / (0.5 * n);
    }
    return rep;
}

} // namespace spinmetro
