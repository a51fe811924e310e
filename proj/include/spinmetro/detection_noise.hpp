#pragma once

// Finite detector resolution as a Gaussian-blurred population POVM
//   |m~><m~| = sum_m' Gamma(m, m') |m'><m'|,
// with Gamma normalized over the observed index m, so each column sums to one.

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "spinmetro/metrology.hpp"

namespace spinmetro {

struct NoiseModel {
    double sigma = 0.0;
    RMatrix gamma; // gamma(observed, true), basis order
};

inline NoiseModel build_noise(const SpinEnsemble &ens, double sigma) {
    if (!(sigma >= 0.0)) {
        throw std::invalid_argument("build_noise: sigma must be >= 0");
    }
    const int d = ens.dim();
    NoiseModel out{sigma, RMatrix::Identity(d, d)};
    if (sigma == 0.0) {
        return out;
    }
    for (int j = 0; j < d; ++j) {
        for (int i = 0; i < d; ++i) {
            const double diff = ens.sz(i) - ens.sz(j);
            out.gamma(i, j) = std::exp(-diff * diff / (2.0 * sigma * sigma));
        }
        out.gamma.col(j) /= out.gamma.col(j).sum();
    }
    return out;
}

/// Observed distribution P_m = sum_m' Gamma(m, m') |<m'|psi>|^2.
inline RVector noisy_distribution(const StateVector &output, const NoiseModel &noise) {
    if (output.dim() != noise.gamma.rows()) {
        throw std::invalid_argument("noisy_distribution: dimension mismatch");
    }
    return noise.gamma * output.populations();
}

/// s_z values of the basis, in basis order.
inline RVector sz_values(const SpinEnsemble &ens) {
    RVector m(ens.dim());
    for (int i = 0; i < ens.dim(); ++i) {
        m(i) = ens.sz(i);
    }
    return m;
}

inline double distribution_mean(const RVector &p, const RVector &m) { return m.dot(p); }

inline double distribution_variance(const RVector &p, const RVector &m) {
    const double mean = m.dot(p);
    return m.cwiseAbs2().dot(p) - mean * mean;
}

inline double noisy_variance(const StateVector &output, const NoiseModel &noise) {
    const SpinEnsemble ens(static_cast<int>(output.dim()) - 1);
    return distribution_variance(noisy_distribution(output, noise), sz_values(ens));
}

/// Spin rotation R = exp(-i alpha S_a) with R^dagger Sz R = S_m, so that
/// population readout after R measures S_m.
inline CMatrix measurement_rotation(const SpinOperators &ops, const Direction &m) {
    const Eigen::Vector3d z(0.0, 0.0, 1.0);
    const Eigen::Vector3d v = m.vector();
    const Eigen::Vector3d axis = v.cross(z);
    const double s = axis.norm();
    const double c = v.dot(z);
    const auto d = ops.z.dim();
    if (s < 1e-14) {
        if (c > 0) {
            return CMatrix::Identity(d, d);
        }
        return SpinRotation(ops, Direction(1.0, 0.0, 0.0)).matrix(std::numbers::pi);
    }
    return SpinRotation(ops, Direction(axis / s)).matrix(std::atan2(s, c));
}

/// d<Sz>/dphi at phi = 0 under the noisy POVM, from the commutator form
///   dP_m/dphi = -i Tr[|m~><m~| R U(t2) [S_n, rho_p] U(t2)^dagger R^dagger].
inline double noisy_signal_slope(const StateVector &probe, const Hamiltonian &h, double t2,
                                 const CMatrix &rm, const Direction &n, const NoiseModel &noise,
                                 const SpinOperators &ops) {
    const CVector chi = rm * h.propagate(probe.amplitudes(), t2);
    const CVector eta = rm * h.propagate(spin_along(ops, n).apply(probe.amplitudes()), t2);
    RVector dp(chi.size());
    for (Eigen::Index j = 0; j < chi.size(); ++j) {
        dp(j) = 2.0 * (std::conj(chi(j)) * eta(j)).imag();
    }
    return sz_values(h.ensemble()).dot(noise.gamma * dp);
}

inline double noisy_signal_slope(const StateVector &probe, const Hamiltonian &h, double t2,
                                 const CMatrix &rm, const Direction &n, const NoiseModel &noise) {
    return noisy_signal_slope(probe, h, t2, rm, n, noise, build_spin_operators(h.ensemble()));
}

/// Noise-free ingredients of the readout at one (t1, t2) cell; sigma only
/// enters through Gamma, so sweeps over sigma reuse these.
struct ReadoutProfile {
    RVector populations; // |<m|R U(t2) psi_p>|^2
    RVector slope_density; // dP_m/dphi before blurring
};

inline double profile_gain_db(const ReadoutProfile &prof, const NoiseModel &noise,
                              const RVector &m, int particles) {
    const RVector p = noise.gamma * prof.populations;
    const double var = distribution_variance(p, m);
    const double slope = m.dot(noise.gamma * prof.slope_density);
    if (!(var > 0.0)) {
        throw SingularMeasurementError("noisy readout has zero variance");
    }
    return fisher_gain_db(slope * slope / var, particles);
}

/// Gain of the interferometer read out by population detection of R_m psi_out
/// under detection noise, with m mapped onto the z axis.
inline double noisy_gain(const StateVector &psi0, const Hamiltonian &h, double t1, double t2,
                         const Direction &n, const Direction &m, const NoiseModel &noise) {
    const auto ops = build_spin_operators(h.ensemble());
    const StateVector probe = evolve(psi0, h, t1);
    const CMatrix rm = measurement_rotation(ops, m);
    const CVector chi = rm * h.propagate(probe.amplitudes(), t2);
    const CVector eta = rm * h.propagate(spin_along(ops, n).apply(probe.amplitudes()), t2);
    ReadoutProfile prof{chi.cwiseAbs2(), RVector(chi.size())};
    for (Eigen::Index j = 0; j < chi.size(); ++j) {
        prof.slope_density(j) = 2.0 * (std::conj(chi(j)) * eta(j)).imag();
    }
    return profile_gain_db(prof, noise, sz_values(h.ensemble()), h.ensemble().particles());
}

} // namespace spinmetro
