// Acceptance checks. Each criterion prints its measured quantities, then a
// single PASS/FAIL line. Run one with --criterion NAME or all without.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <string>

#include "CLI11.hpp"

#include "oracles.hpp"

using namespace spinmetro;

namespace {

class Report {
  public:
    explicit Report(std::string name) : name_(std::move(name)) {}

    void within(const std::string &what, double value, double target, double tol) {
        record(what, std::abs(value - target) <= tol, value,
               "expected " + num(target) + " +/- " + num(tol));
    }
    void below(const std::string &what, double value, double limit) {
        record(what, value < limit, value, "expected < " + num(limit));
    }
    void above(const std::string &what, double value, double limit) {
        record(what, value > limit, value, "expected > " + num(limit));
    }
    void truth(const std::string &what, bool ok, const std::string &detail) {
        std::printf("  [%s] %s: %s\n", ok ? " ok " : "FAIL", what.c_str(), detail.c_str());
        ok_ = ok_ && ok;
    }

    bool finish(double seconds, double limit) {
        below("runtime_s", seconds, limit);
        std::printf("%s %s (%.1f s)\n", ok_ ? "PASS" : "FAIL", name_.c_str(), seconds);
        std::fflush(stdout);
        return ok_;
    }

    static std::string num(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.10g", v);
        return buf;
    }

  private:
    void record(const std::string &what, bool ok, double value, const std::string &expect) {
        truth(what, ok, num(value) + " (" + expect + ")");
    }

    std::string name_;
    bool ok_ = true;
};

double max_abs(const CMatrix &m) { return m.cwiseAbs().maxCoeff(); }

StateVector plus_x(const SpinEnsemble &ens) { return initial_state(ens); }

void tnt_fidelity(Report &r) {
    const SpinEnsemble ens(100);
    const auto h = build_tnt_lambda(ens, 1.0, 2.0);
    const auto qp = quasi_period(h, plus_x(ens), 1.0);
    r.within("peak_fidelity", qp.peak_fidelity, 0.84, 0.02);
    r.within("quasi_period", qp.T, 0.15, 0.01);
}

void qcrb_peak(Report &r) {
    const SpinEnsemble ens(100);
    const auto ops = build_spin_operators(ens);
    const auto h = build_tnt_lambda(ens, 1.0, 2.0);
    const CyclicInterferometer ifm(h, plus_x(ens), 1);
    auto g = [&](double t1, double) { return fisher_gain_db(qfi_max(StateVector(ifm.probe(t1)), ops).fisher, 100); };
    GridPoint best;
    for (double t1 : linspace(0.0, 0.15, 301)) {
        const double v = g(t1, 0.0);
        if (v > best.value) {
            best = {t1, 0.0, v};
        }
    }
    best = compass_refine(g, best, 5e-4, 0.0, [](double a, double) { return a >= 0.0 && a <= 0.15; });
    r.within("max_qcrb_gain_db", best.value, 18.1, 0.3);
    r.within("t1_at_max", best.t1, 0.07, 0.005);
}

void landscape(Report &r) {
    auto spec = default_landscape(Model::TNT);
    const auto res = gain_landscape(spec);
    r.within("best_gain_db", res.best.gain_db, 16.4, 0.4);
    r.within("best_t1", res.best.t1, 0.085, 0.01);
    r.within("best_total_time", res.best.t1 + res.best.t2, 0.18, 0.01);
    double last_positive = -1.0;
    double first_nonpositive = 1e9;
    for (std::size_t i = 0; i < res.t1_grid.size(); ++i) {
        const double g = res.gain(static_cast<Eigen::Index>(i), 0);
        if (g > 1e-9) {
            last_positive = res.t1_grid[i];
        } else if (res.t1_grid[i] > 0.0) {
            first_nonpositive = std::min(first_nonpositive, res.t1_grid[i]);
        }
    }
    r.truth("direct_readout_positive_only_below_0.05", last_positive > 0.0 && last_positive < 0.05,
            "largest positive t1 at t2=0 is " + Report::num(last_positive) +
                ", first non-positive " + Report::num(first_nonpositive));

    TotalTimeSpec ts;
    ts.tau_grid = linspace(0.002, 0.3, 150);
    const auto curve = gain_vs_total_time(ts);
    const auto onset = positive_onset(curve, 0.05);
    r.truth("onset_exists", onset.has_value(), onset ? "found" : "no positive gain for tau >= 0.05");
    if (onset) {
        r.within("nongaussian_onset_total_time", *onset, 0.12, 0.01);
        bool stays = true;
        for (const auto &p : curve) {
            if (p.tau >= 0.05 && p.tau < *onset - 1e-12 && p.gain_db > 0.0) {
                stays = false;
            }
        }
        r.truth("no_positive_gain_between_branches", stays, "checked tau in [0.05, onset)");
    }
}

void scaling(Report &r) {
    const auto res = scaling_study(ScalingSpec{});
    for (const auto &p : res.points) {
        std::printf("  N=%-5d T=%.5f qcrb=%.3f dB cyclic=%.3f dB linear=%.3f dB\n", p.particles,
                    p.quasi_period, p.qcrb_db, p.cyclic_db, p.linear_db);
    }
    r.within("cyclic_exponent", res.cyclic_fit.exponent, -1.00, 0.06);
    r.within("linear_exponent", res.linear_fit.exponent, -0.76, 0.08);
    r.within("mean_deficit_db", res.mean_deficit_db, 2.8, 0.5);
}

void noise(Report &r) {
    NoiseSpec s;
    s.sigmas = {0.0, 0.3, 1.0, 2.0, 3.0, 5.0, 10.0, 20.0, 30.0, 50.0, 70.0, 100.0};
    const auto tab = noise_robustness(s);
    std::map<double, NoiseRow> by;
    for (const auto &row : tab.rows) {
        std::printf("  sigma=%-5g cyclic=%8.3f linear=%8.3f reversed=%8.3f dB\n", row.sigma,
                    row.cyclic.gain_db, row.linear.gain_db, row.reversed.gain_db);
        by[row.sigma] = row;
    }
    r.below("cyclic_drop_at_sigma_10_db", by[0.0].cyclic.gain_db - by[10.0].cyclic.gain_db, 1.0);
    r.above("cyclic_gain_at_sigma_50_db", by[50.0].cyclic.gain_db, 0.0);
    double worst_linear = kNegInf;
    double worst_gap = 0.0;
    for (const auto &row : tab.rows) {
        if (row.sigma >= 3.0) {
            worst_linear = std::max(worst_linear, row.linear.gain_db);
        }
        worst_gap = std::max(worst_gap, std::abs(row.reversed.gain_db - row.cyclic.gain_db));
    }
    r.below("max_linear_gain_sigma_ge_3_db", worst_linear, 0.0);
    r.below("max_reversed_cyclic_gap_db", worst_gap, 2.0 + 1e-12);
}

void tact(Report &r) {
    const SpinEnsemble ens(100);
    const auto h = build_tact(ens, 1.0);
    const double window = default_revival_window(100, 1.0);
    const auto half = revival_peak(h, plus_x(ens), opposite_state(ens), {window, 1e-5, 0.3});
    const auto full = quasi_period(h, plus_x(ens), window);
    std::printf("  half period at t=%.5f, full period at t=%.5f\n", half.T, full.T);
    r.within("half_period_fidelity_vs_minus_x", half.peak_fidelity, 0.8, 0.03);
    r.within("full_period_fidelity", full.peak_fidelity, 0.6, 0.03);
    const auto res = gain_landscape(default_landscape(Model::TACT));
    r.within("best_gain_db", res.best.gain_db, 15.6, 0.5);
    const auto regions = gain_regions(res, {});
    for (const auto &g : regions) {
        std::printf("  region peak %.3f dB at (%.4f, %.4f), %zu cells\n", g.peak_db, g.t1, g.t2, g.cells);
    }
    r.truth("four_regions", regions.size() == 4, std::to_string(regions.size()) + " regions (expected 4)");
}

void higher_order(Report &r) {
    LandscapeSpec s{Model::TNT, 100, 1.0, 2.0, linspace(0.0, 0.15, 301), {0.0}, 3, 0};
    const auto direct = gain_landscape(s);
    std::printf("  k=3 direct readout best at t1=%.4f\n", direct.best.t1);
    r.within("k3_direct_best_gain_db", direct.best.gain_db, 16.6, 0.4);

    double worst = kNegInf;
    std::vector<LandscapeResult> by_k;
    for (int k = 1; k <= 3; ++k) {
        by_k.push_back(gain_landscape({Model::TNT, 100, 1.0, 2.0, linspace(0.0, 0.15, 16), linspace(0.0, 0.2, 21), k, 0}));
    }
    for (int k = 1; k < 3; ++k) {
        worst = std::max(worst, (by_k[k - 1].gain - by_k[k].gain).maxCoeff());
    }
    r.below("max_gain_decrease_with_k_db", worst, 1e-8);
}

void properties(Report &r) {
    double su2 = 0.0;
    for (int n : {1, 2, 7, 30, 100}) {
        const auto ops = build_spin_operators(SpinEnsemble(n));
        const CMatrix &x = ops.x.matrix(), &y = ops.y.matrix(), &z = ops.z.matrix();
        const Complex i(0.0, 1.0);
        const double s = 0.5 * n;
        su2 = std::max({su2, max_abs(x * y - y * x - i * z), max_abs(y * z - z * y - i * x),
                        max_abs(z * x - x * z - i * y),
                        max_abs(x * x + y * y + z * z - s * (s + 1) * CMatrix::Identity(n + 1, n + 1))});
    }
    r.below("su2_commutator_casimir_error", su2, 1e-9);

    double unitary = 0.0;
    for (auto model : {Model::TNT, Model::TACT}) {
        const SpinEnsemble ens(100);
        const auto h = make_hamiltonian(model, ens, 1.0, 2.0);
        for (double t : {0.05, 0.15, 1.0}) {
            const CMatrix u = h.propagator(t);
            unitary = std::max(unitary, max_abs(u.adjoint() * u - CMatrix::Identity(101, 101)));
        }
    }
    r.below("propagator_unitarity_error", unitary, 1e-10);

    double worst_fid = 1.0;
    for (int n : {1, 4, 12, 30}) {
        const SpinEnsemble ens(n);
        for (auto model : {Model::TNT, Model::TACT}) {
            const auto h = make_hamiltonian(model, ens, 1.0, 2.0);
            for (double t : {0.013, 0.11, 0.4}) {
                const CVector a = h.propagate(plus_x(ens).amplitudes(), t);
                const CVector b = oracle::propagator(h.op().matrix(), t) * plus_x(ens).amplitudes();
                worst_fid = std::min(worst_fid, std::norm(b.dot(a)));
            }
        }
    }
    r.above("taylor_oracle_min_fidelity", worst_fid, 1.0 - 1e-9);

    double slope_err = 0.0;
    std::mt19937_64 rng(3);
    {
        const SpinEnsemble ens(20);
        const auto spins = oracle::spins(20);
        for (auto model : {Model::TNT, Model::TACT}) {
            const auto h = make_hamiltonian(model, ens, 1.0, 2.0);
            for (int k : {1, 3}) {
                const auto set = higher_order_set(ens, k);
                std::vector<CMatrix> dense;
                for (const auto &o : set.members) {
                    dense.push_back(o.matrix());
                }
                const auto data = moment_matrices(plus_x(ens), h, 0.2, 0.25, set);
                for (int rep = 0; rep < 2; ++rep) {
                    const Eigen::Vector3d nv = oracle::random_unit(rng);
                    const RVector an = data.M.transpose() * nv;
                    const RVector fd =
                        oracle::slope_fd(h.op().matrix(), plus_x(ens).amplitudes(), 0.2, 0.25, nv, dense, spins);
                    slope_err = std::max(slope_err, (an - fd).norm() / an.norm());
                }
            }
        }
    }
    r.below("commutator_slope_vs_fd_rel_error", slope_err, 1e-5);

    double cs = 0.0;
    {
        const SpinEnsemble ens(100);
        const auto h = build_tnt_lambda(ens, 1.0, 2.0);
        for (int k : {1, 2, 3}) {
            const CyclicInterferometer ifm(h, plus_x(ens), k);
            for (auto [t1, t2] : {std::pair{0.03, 0.0}, {0.085, 0.095}, {0.12, 0.05}}) {
                const auto data = ifm.moments(t1, t2);
                const auto s = optimize_nm(data);
                cs = std::max(cs, std::abs(error_propagation(data, s.n_opt, s.m_opt) / s.delta_phi - 1.0));
            }
        }
    }
    r.below("cauchy_schwarz_saturation_error", cs, 1e-8);

    double excess = kNegInf;
    for (auto model : {Model::TNT, Model::TACT}) {
        const auto res = gain_landscape(default_landscape(model));
        for (Eigen::Index i = 0; i < res.gain.rows(); ++i) {
            excess = std::max(excess, res.gain.row(i).maxCoeff() - res.qcrb_db[static_cast<std::size_t>(i)]);
        }
    }
    r.below("max_gain_minus_qcrb_db", excess, 1e-6);

    double stoch = 0.0;
    double min_entry = 0.0;
    for (double sigma : {0.0, 0.3, 1.0, 10.0, 50.0, 100.0}) {
        const auto g = build_noise(SpinEnsemble(100), sigma).gamma;
        stoch = std::max(stoch, (g.colwise().sum().array() - 1.0).abs().maxCoeff());
        min_entry = std::min(min_entry, g.minCoeff());
    }
    r.below("gamma_column_sum_error", stoch, 1e-12);
    r.truth("gamma_nonnegative", min_entry >= 0.0, "min entry " + Report::num(min_entry));

    double sql = 0.0;
    for (int n : {10, 100, 400}) {
        const SpinEnsemble ens(n);
        for (int k : {1, 3}) {
            sql = std::max(sql, std::abs(higher_order_bound(plus_x(ens), build_tnt_lambda(ens, 1.0, 2.0), 0.0, 0.0, k).gain_db));
        }
    }
    r.below("coherent_state_gain_abs_db", sql, 1e-9);

    const auto mag = magnification_check({});
    r.within("coherent_quadratic_over_n_4", mag.synthetic_coeff / 25.0, 1.0, 0.02);
    r.within("probe_quadratic_over_fq_4", mag.probe_coeff / (0.25 * mag.probe_fisher), 1.0, 0.02);
}

struct Criterion {
    void (*run)(Report &);
    double limit_s;
};

const std::map<std::string, Criterion> &criteria() {
    static const std::map<std::string, Criterion> c = {
        {"tnt_fidelity", {tnt_fidelity, 10.0}}, {"qcrb", {qcrb_peak, 10.0}},
        {"landscape", {landscape, 300.0}},      {"scaling", {scaling, 900.0}},
        {"noise", {noise, 900.0}},              {"tact", {tact, 300.0}},
        {"higher_order", {higher_order, 300.0}},    {"properties", {properties, 60.0}},
    };
    return c;
}

bool run_one(const std::string &name) {
    const auto &c = criteria().at(name);
    Report r(name);
    std::printf("== %s\n", name.c_str());
    const auto start = std::chrono::steady_clock::now();
    try {
        c.run(r);
    } catch (const std::exception &e) {
        r.truth("completed", false, std::string("exception: ") + e.what());
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r.finish(s, c.limit_s);
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"acceptance checks"};
    std::string which;
    app.add_option("--criterion", which, "run a single criterion");
    CLI11_PARSE(app, argc, argv);
    if (!which.empty()) {
        if (!criteria().count(which)) {
            std::cerr << "unknown criterion '" << which << "'\n";
            return 2;
        }
        return run_one(which) ? 0 : 1;
    }
    bool all = true;
    for (const auto &[name, c] : criteria()) {
        all = run_one(name) && all;
    }
    return all ? 0 : 1;
}
