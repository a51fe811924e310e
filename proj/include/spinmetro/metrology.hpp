#pragma once

// Quantum Fisher information and low-order-moment sensitivity of the
// cyclic interferometer U(t2) R_n(phi) U(t1), evaluated at phi = 0.
//
// With psi1 = U(t1) psi0 and psi2 = U(t2) psi1 the moment matrices are
//   M_kl = i <[S_k(U(t1)), O_l(U(t2) U(t1))]> = -2 Im <U(t2) S_k psi1 | O_l psi2>
//   Q_kl = Re <O_k psi2 | O_l psi2> - <O_k><O_l>
// so a grid cell costs a handful of propagated vectors instead of dense
// Heisenberg-picture operator products.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "spinmetro/dynamics.hpp"

namespace spinmetro {

struct QfiResult {
    double fisher = 0.0;
    Direction n_star;
};

/// Pure-state QFI maximized over linear generators: 4 lambda_max(Cov(Sx,Sy,Sz)).
inline QfiResult qfi_max(const StateVector &state, const SpinOperators &ops) {
    const Moments mom = moments(state, linear_set(ops));
    const auto top = linalg::top_eigenpair(mom.covariance);
    return {4.0 * std::max(top.value, 0.0), Direction::normalized(top.vector)};
}

inline QfiResult qfi_max(const StateVector &state) {
    return qfi_max(state, build_spin_operators(SpinEnsemble(static_cast<int>(state.dim()) - 1)));
}

inline double qcrb(double fisher) {
    if (!(fisher > 0.0)) {
        throw std::invalid_argument("qcrb: Fisher information must be > 0");
    }
    return 1.0 / std::sqrt(fisher);
}

/// Gain over the standard quantum limit 1/sqrt(N), in dB.
inline double gain_db(double delta_phi, int particles) {
    if (!(delta_phi > 0.0)) {
        throw std::invalid_argument("gain_db: delta_phi must be > 0");
    }
    return -20.0 * std::log10(delta_phi * std::sqrt(static_cast<double>(particles)));
}

/// Gain in dB of a Fisher-type quantity (inverse squared sensitivity).
inline double fisher_gain_db(double inv_var, int particles) {
    return 10.0 * std::log10(inv_var / particles);
}

struct MomentData {
    RMatrix M; // 3 x p
    RMatrix Q; // p x p
    RMatrix B; // 3 x 3, M Q^+ M^T
    int order = 1;
    int particles = 0;
};

inline constexpr double kPinvCut = 1e-12;

inline MomentData assemble_moments(RMatrix m, RMatrix q, int order, int particles) {
    MomentData out;
    out.Q = 0.5 * (q + q.transpose());
    out.M = std::move(m);
    const RMatrix qp = linalg::symmetric_pinv(out.Q, kPinvCut);
    out.B = out.M * qp * out.M.transpose();
    out.B = 0.5 * (out.B + out.B.transpose()).eval();
    out.order = order;
    out.particles = particles;
    return out;
}

/// Probe prepared by U(t1); reused for every recombining time t2.
class ProbeStage {
  public:
    ProbeStage(const Hamiltonian &h, const OperatorSet &set, const SpinOperators &ops,
               const CVector &psi1)
        : h_(&h), set_(&set), psi1_(psi1) {
        CMatrix cols(psi1.size(), 4);
        cols.col(0) = psi1;
        for (int k = 0; k < 3; ++k) {
            cols.col(k + 1) = ops[k].apply(psi1);
        }
        coeffs_ = h.to_eigenbasis(cols);
    }

    const CVector &probe() const noexcept { return psi1_; }

    /// Column 0: psi2 = U(t2) psi1. Columns 1..3: U(t2) S_k psi1.
    CMatrix recombined(double t2) const {
        CMatrix c = coeffs_;
        h_->advance(c, t2);
        return h_->from_eigenbasis(c);
    }

    MomentData moments(double t2) const {
        const CMatrix out = recombined(t2);
        const CVector psi2 = out.col(0);
        const auto p = static_cast<Eigen::Index>(set_->size());
        std::vector<CVector> images;
        images.reserve(p);
        for (const auto &o : set_->members) {
            images.push_back(o.apply(psi2));
        }
        RMatrix m(3, p);
        for (int k = 0; k < 3; ++k) {
            const CVector phi_k = out.col(k + 1);
            for (Eigen::Index l = 0; l < p; ++l) {
                m(k, l) = -2.0 * phi_k.dot(images[l]).imag();
            }
        }
        Moments mom = moments_from_images(psi2, images);
        return assemble_moments(std::move(m), std::move(mom.covariance), set_->order,
                                h_->ensemble().particles());
    }

  private:
    const Hamiltonian *h_;
    const OperatorSet *set_;
    CVector psi1_;
    CMatrix coeffs_;
};

/// Shared data for sweeps over (t1, t2) from one input state.
class CyclicInterferometer {
  public:
    CyclicInterferometer(const Hamiltonian &h, const StateVector &psi0, OperatorSet set)
        : h_(&h), ops_(build_spin_operators(h.ensemble())), set_(std::move(set)),
          c0_(h.to_eigenbasis(psi0.amplitudes())) {}
    CyclicInterferometer(const Hamiltonian &h, const StateVector &psi0, int k)
        : h_(&h), ops_(build_spin_operators(h.ensemble())), set_(higher_order_set(ops_, k)),
          c0_(h.to_eigenbasis(psi0.amplitudes())) {}

    const Hamiltonian &hamiltonian() const noexcept { return *h_; }
    const SpinOperators &spin_ops() const noexcept { return ops_; }
    const OperatorSet &set() const noexcept { return set_; }

    CVector probe(double t1) const {
        CVector c = c0_;
        h_->advance(c, t1);
        return h_->from_eigenbasis(c);
    }

    ProbeStage stage(double t1) const { return ProbeStage(*h_, set_, ops_, probe(t1)); }

    MomentData moments(double t1, double t2) const { return stage(t1).moments(t2); }

  private:
    const Hamiltonian *h_;
    SpinOperators ops_;
    OperatorSet set_;
    CVector c0_;
};

inline MomentData moment_matrices(const StateVector &psi0, const Hamiltonian &h, double t1,
                                  double t2, const OperatorSet &set) {
    return CyclicInterferometer(h, psi0, set).moments(t1, t2);
}

struct SensitivityResult {
    double delta_phi = 0.0;
    double gain_db = 0.0;
    Direction n_opt;
    RVector m_opt;
    int order = 1;
    /// Top eigenvalue of B was degenerate; the tie-break rule picked n_opt.
    bool degenerate = false;
};

/// n_opt = top eigenvector of B, m_opt = Q^+ M^T n_opt, delta_phi = lambda_max(B)^(-1/2).
inline SensitivityResult optimize_nm(const MomentData &data) {
    if (!data.B.allFinite()) {
        throw std::invalid_argument("optimize_nm: bound matrix is not finite");
    }
    const auto top = linalg::top_eigenpair(data.B);
    const double scale = std::max(data.Q.trace(), 1.0);
    if (!(top.value > 1e-14 * scale)) {
        throw ZeroSignalError("optimize_nm: lambda_max(B) <= 0, encoding produces no signal");
    }
    SensitivityResult out;
    out.delta_phi = 1.0 / std::sqrt(top.value);
    out.gain_db = gain_db(out.delta_phi, data.particles);
    out.n_opt = Direction::normalized(top.vector);
    out.m_opt = linalg::symmetric_pinv(data.Q, kPinvCut) * data.M.transpose() * out.n_opt.vector();
    out.order = data.order;
    out.degenerate = top.degenerate;
    return out;
}

inline SensitivityResult higher_order_bound(const StateVector &psi0, const Hamiltonian &h,
                                            double t1, double t2, int k) {
    return optimize_nm(CyclicInterferometer(h, psi0, k).moments(t1, t2));
}

/// Error-propagation sensitivity (n^T M m)^2 / (m^T Q m) for given data.
inline double error_propagation(const MomentData &data, const Direction &n, const RVector &m) {
    if (m.size() != data.Q.rows()) {
        throw std::invalid_argument("error_propagation: measurement vector has wrong length");
    }
    if (m.cwiseAbs().maxCoeff() == 0.0) {
        throw std::invalid_argument("error_propagation: measurement coefficients are all zero");
    }
    const double slope = n.vector().dot(data.M * m);
    const double var = m.dot(data.Q * m);
    const double var_scale = std::max(data.Q.trace(), 1.0) * m.squaredNorm();
    const bool var_zero = var <= 1e-13 * var_scale;
    const double slope_scale = data.M.cwiseAbs().maxCoeff() * m.cwiseAbs().sum();
    const bool slope_zero = std::abs(slope) <= 1e-13 * std::max(slope_scale, 1.0);
    if (var_zero && slope_zero) {
        throw std::invalid_argument("error_propagation: zero slope and zero variance");
    }
    if (var_zero) {
        throw SingularMeasurementError(
            "error_propagation: zero variance with nonzero slope (unphysical delta_phi -> 0)");
    }
    if (slope_zero) {
        return std::numeric_limits<double>::infinity();
    }
    return std::sqrt(var) / std::abs(slope);
}

inline double error_propagation(const StateVector &psi0, const Hamiltonian &h, double t1,
                                double t2, const Direction &n, const RVector &m,
                                const OperatorSet &set) {
    return error_propagation(moment_matrices(psi0, h, t1, t2, set), n, m);
}

} // namespace spinmetro
