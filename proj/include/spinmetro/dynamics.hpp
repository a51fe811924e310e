#pragma once

// Hamiltonians of the twist-and-turn (TNT) and two-axis-countertwisting
// (TACT) models with cached spectra, spectral propagators and revival
// detection.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinmetro/spin_core.hpp"

namespace spinmetro {

enum class Model { TNT, TACT };

inline std::string to_string(Model m) { return m == Model::TNT ? "tnt" : "tact"; }

inline Model parse_model(const std::string &s) {
    if (s == "tnt" || s == "TNT") {
        return Model::TNT;
    }
    if (s == "tact" || s == "TACT") {
        return Model::TACT;
    }
    throw std::invalid_argument("unknown model '" + s + "' (expected tnt or tact)");
}

/// Time-independent Hamiltonian with its spectral decomposition H = V diag(E) V^dagger.
class Hamiltonian {
  public:
    Hamiltonian(SpinEnsemble ens, Operator op, Model model, double chi, double omega)
        : ens_(ens), op_(std::move(op)), model_(model), chi_(chi), omega_(omega),
          spectrum_(linalg::hermitian_eigen(op_.matrix())) {}

    const SpinEnsemble &ensemble() const noexcept { return ens_; }
    const Operator &op() const noexcept { return op_; }
    Model model() const noexcept { return model_; }
    double chi() const noexcept { return chi_; }
    double omega() const noexcept { return omega_; }
    const RVector &eigenvalues() const noexcept { return spectrum_.values; }
    const CMatrix &eigenvectors() const noexcept { return spectrum_.vectors; }
    Eigen::Index dim() const noexcept { return spectrum_.values.size(); }

    /// Coefficients in the energy eigenbasis.
    CVector to_eigenbasis(const CVector &v) const { return spectrum_.vectors.adjoint() * v; }
    CMatrix to_eigenbasis(const CMatrix &cols) const { return spectrum_.vectors.adjoint() * cols; }

    /// Multiplies eigenbasis coefficients by exp(-i E t) in place.
    void advance(CVector &coeffs, double t) const {
        for (Eigen::Index j = 0; j < coeffs.size(); ++j) {
            coeffs(j) *= std::polar(1.0, -spectrum_.values(j) * t);
        }
    }
    void advance(CMatrix &coeffs, double t) const {
        for (Eigen::Index j = 0; j < coeffs.rows(); ++j) {
            coeffs.row(j) *= std::polar(1.0, -spectrum_.values(j) * t);
        }
    }

    CVector from_eigenbasis(const CVector &coeffs) const { return spectrum_.vectors * coeffs; }
    CMatrix from_eigenbasis(const CMatrix &coeffs) const { return spectrum_.vectors * coeffs; }

    /// exp(-i H t) applied to a vector; negative t evolves under -H.
    CVector propagate(const CVector &v, double t) const {
        CVector c = to_eigenbasis(v);
        advance(c, t);
        return from_eigenbasis(c);
    }

    CMatrix propagator(double t) const {
        CVector phases(dim());
        for (Eigen::Index j = 0; j < dim(); ++j) {
            phases(j) = std::polar(1.0, -spectrum_.values(j) * t);
        }
        return spectrum_.vectors * phases.asDiagonal() * spectrum_.vectors.adjoint();
    }

  private:
    SpinEnsemble ens_;
    Operator op_;
    Model model_;
    double chi_;
    double omega_;
    linalg::HermitianSpectrum spectrum_;
};

/// H = chi Sz^2 + omega Sx.
inline Hamiltonian build_tnt(const SpinEnsemble &ens, double chi, double omega) {
    if (!(chi > 0.0)) {
        throw std::invalid_argument("build_tnt: chi must be > 0");
    }
    const auto s = build_spin_operators(ens);
    CMatrix h = chi * s.z.matrix() * s.z.matrix() + omega * s.x.matrix();
    return Hamiltonian(ens, Operator(std::move(h), "H_TNT"), Model::TNT, chi, omega);
}

/// TNT with omega fixed by Lambda = chi N / omega.
inline Hamiltonian build_tnt_lambda(const SpinEnsemble &ens, double chi, double lambda) {
    if (!(lambda > 0.0)) {
        throw std::invalid_argument("build_tnt_lambda: lambda must be > 0");
    }
    return build_tnt(ens, chi, chi * ens.particles() / lambda);
}

/// H = -chi (Sy Sz + Sz Sy), the countertwisting model rotated so its
/// unstable fixed points sit at <S> = (+-N/2, 0, 0).
inline Hamiltonian build_tact(const SpinEnsemble &ens, double chi) {
    if (!(chi > 0.0)) {
        throw std::invalid_argument("build_tact: chi must be > 0");
    }
    const auto s = build_spin_operators(ens);
    CMatrix h = -chi * (s.y.matrix() * s.z.matrix() + s.z.matrix() * s.y.matrix());
    h = 0.5 * (h + h.adjoint()).eval();
    return Hamiltonian(ens, Operator(std::move(h), "H_TACT"), Model::TACT, chi, 0.0);
}

enum class Regime { Rabi, Josephson };

struct RegimeInfo {
    double lambda = 0.0;
    Regime regime = Regime::Josephson;
    /// lambda == 1 exactly; classified Josephson by convention.
    bool on_boundary = false;
};

inline RegimeInfo classify_regime(const SpinEnsemble &ens, double chi, double omega) {
    if (omega == 0.0) {
        throw std::invalid_argument("classify_regime: omega = 0 leaves Lambda undefined (pure twisting)");
    }
    RegimeInfo info;
    info.lambda = chi * ens.particles() / omega;
    info.on_boundary = info.lambda == 1.0;
    info.regime = info.lambda < 1.0 ? Regime::Rabi : Regime::Josephson;
    return info;
}

inline StateVector evolve(const StateVector &state, const Hamiltonian &h, double t) {
    return StateVector(h.propagate(state.amplitudes(), t));
}

/// U^dagger(t) A U(t).
inline Operator heisenberg_transform(const Operator &a, const Hamiltonian &h, double t) {
    if (!a.hermitian()) {
        throw std::invalid_argument("heisenberg_transform: operator must be Hermitian");
    }
    const CMatrix u = h.propagator(t);
    CMatrix m = u.adjoint() * a.matrix() * u;
    m = 0.5 * (m + m.adjoint()).eval();
    return Operator(std::move(m), a.label() + "(t)");
}

/// |<target| U(t) |psi0>|^2 at O(d) cost per time after one projection.
class FidelityTrace {
  public:
    FidelityTrace(const Hamiltonian &h, const StateVector &psi0, const StateVector &target)
        : h_(&h), c0_(h.to_eigenbasis(psi0.amplitudes())),
          weights_(h.to_eigenbasis(target.amplitudes()).conjugate().cwiseProduct(c0_)) {}

    double operator()(double t) const {
        Complex acc = 0.0;
        const RVector &e = h_->eigenvalues();
        for (Eigen::Index j = 0; j < weights_.size(); ++j) {
            acc += weights_(j) * std::polar(1.0, -e(j) * t);
        }
        return std::clamp(std::norm(acc), 0.0, 1.0);
    }

  private:
    const Hamiltonian *h_;
    CVector c0_;
    CVector weights_;
};

struct QuasiPeriod {
    double T = 0.0;
    double peak_fidelity = 0.0;
    /// Fidelity never left the threshold band: stationary state, T reported as 0.
    bool stationary = false;
};

struct RevivalOptions {
    double t_max = 1.0;
    double dt = 1e-4;
    /// Fidelity must first fall below and then revive to at least this value.
    double threshold = 0.3;
};

/// First local maximum of a sampled curve with value >= threshold occurring
/// after the curve has dipped below threshold, refined by a three-point
/// parabola through the neighbouring samples.
template <class Curve>
std::optional<std::pair<double, double>> first_revival(const Curve &f, const RevivalOptions &opt) {
    if (!(opt.t_max > 0.0) || !(opt.dt > 0.0)) {
        throw std::invalid_argument("revival scan: t_max and dt must be > 0");
    }
    const auto steps = static_cast<long>(std::ceil(opt.t_max / opt.dt));
    bool dipped = false;
    double prev2 = f(0.0);
    double prev = f(opt.dt);
    if (prev2 < opt.threshold) {
        dipped = true;
    }
    for (long k = 2; k <= steps; ++k) {
        const double t = k * opt.dt;
        const double cur = f(t);
        if (prev < opt.threshold) {
            dipped = true;
        }
        if (dipped && prev >= opt.threshold && prev >= prev2 && prev > cur) {
            const double tc = (k - 1) * opt.dt;
            const double denom = prev2 - 2.0 * prev + cur;
            double shift = 0.0;
            if (denom < 0.0) {
                shift = 0.5 * opt.dt * (prev2 - cur) / denom;
            }
            const double tp = tc + std::clamp(shift, -opt.dt, opt.dt);
            const double fp = f(tp);
            return fp >= prev ? std::make_pair(tp, fp) : std::make_pair(tc, prev);
        }
        prev2 = prev;
        prev = cur;
    }
    return std::nullopt;
}

/// Revival of the fidelity with respect to `target` under evolution of psi0.
inline QuasiPeriod revival_peak(const Hamiltonian &h, const StateVector &psi0,
                                const StateVector &target, const RevivalOptions &opt) {
    const FidelityTrace trace(h, psi0, target);
    if (auto hit = first_revival(trace, opt)) {
        return {hit->first, hit->second, false};
    }
    // Stationary case (e.g. a single spin along the field): flat fidelity.
    double lo = 1.0;
    double hi = 0.0;
    const auto steps = static_cast<long>(std::ceil(opt.t_max / opt.dt));
    for (long k = 0; k <= steps; ++k) {
        const double v = trace(k * opt.dt);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi - lo < 1e-12 && lo >= opt.threshold) {
        return {0.0, trace(0.0), true};
    }
    throw NoRevivalError("no fidelity revival above " + std::to_string(opt.threshold) +
                         " within t_max = " + std::to_string(opt.t_max) +
                         " (non-cyclic parameters)");
}

inline QuasiPeriod quasi_period(const Hamiltonian &h, const StateVector &psi0,
                                const RevivalOptions &opt) {
    return revival_peak(h, psi0, psi0, opt);
}

/// Autoscan: coarse pass to locate T, then a pass with dt = T_guess / 2000.
inline QuasiPeriod quasi_period(const Hamiltonian &h, const StateVector &psi0, double t_max,
                                double threshold = 0.3) {
    RevivalOptions coarse{t_max, t_max / 4000.0, threshold};
    const QuasiPeriod guess = revival_peak(h, psi0, psi0, coarse);
    if (guess.stationary) {
        return guess;
    }
    RevivalOptions fine{std::min(t_max, 1.2 * guess.T + coarse.dt), guess.T / 2000.0, threshold};
    return revival_peak(h, psi0, psi0, fine);
}

/// Classical energy at s = (N/2)(sin t cos p, sin t sin p, cos t).
inline double mean_field_energy(Model model, const SpinEnsemble &ens, double chi, double omega,
                                double theta, double phi) {
    const double r = ens.spin();
    const double sx = r * std::sin(theta) * std::cos(phi);
    const double sy = r * std::sin(theta) * std::sin(phi);
    const double sz = r * std::cos(theta);
    if (model == Model::TNT) {
        return chi * sz * sz + omega * sx;
    }
    return -2.0 * chi * sy * sz;
}

} // namespace spinmetro
