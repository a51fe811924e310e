#pragma once

// Collective spin-1/2 ensembles in the fully symmetric (Dicke) subspace.
//
// Basis convention: index i = 0..N carries s_z = S - i, i.e. amplitudes are
// ordered from s_z = +S down to s_z = -S. Every module and file format uses
// this order.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spinmetro/linalg.hpp"

namespace spinmetro {

class SpinEnsemble {
  public:
    explicit SpinEnsemble(int particles) : particles_(particles) {
        if (particles < 1) {
            throw std::invalid_argument("SpinEnsemble: particle count must be >= 1, got " +
                                        std::to_string(particles));
        }
    }

    int particles() const noexcept { return particles_; }
    int dim() const noexcept { return particles_ + 1; }
    double spin() const noexcept { return 0.5 * particles_; }
    /// s_z eigenvalue carried by basis index i.
    double sz(int index) const noexcept { return spin() - index; }

    friend bool operator==(const SpinEnsemble &, const SpinEnsemble &) = default;

  private:
    int particles_;
};

class Operator {
  public:
    Operator() = default;
    Operator(CMatrix matrix, std::string label, bool hermitian = true)
        : matrix_(std::move(matrix)), label_(std::move(label)), hermitian_(hermitian) {
        if (matrix_.rows() != matrix_.cols()) {
            throw std::invalid_argument("Operator '" + label_ + "': matrix is not square");
        }
        if (hermitian_ && !linalg::is_hermitian(matrix_)) {
            throw std::invalid_argument("Operator '" + label_ + "' flagged Hermitian but is not");
        }
    }

    const CMatrix &matrix() const noexcept { return matrix_; }
    const std::string &label() const noexcept { return label_; }
    bool hermitian() const noexcept { return hermitian_; }
    Eigen::Index dim() const noexcept { return matrix_.rows(); }

    CVector apply(const CVector &v) const { return matrix_ * v; }

  private:
    CMatrix matrix_;
    std::string label_;
    bool hermitian_ = true;
};

class StateVector {
  public:
    static constexpr double kNormTolerance = 1e-10;

    StateVector() = default;
    explicit StateVector(CVector amplitudes) : amps_(std::move(amplitudes)) {
        const double norm2 = amps_.squaredNorm();
        if (std::abs(norm2 - 1.0) > kNormTolerance) {
            throw std::invalid_argument("StateVector: squared norm " + std::to_string(norm2) +
                                        " deviates from 1");
        }
    }

    static StateVector normalized(CVector amplitudes) {
        const double n = amplitudes.norm();
        if (!(n > 0.0)) {
            throw std::invalid_argument("StateVector::normalized: zero vector");
        }
        return StateVector(amplitudes / n);
    }

    /// Dicke state with basis index i (s_z = S - i).
    static StateVector dicke(const SpinEnsemble &ens, int index) {
        if (index < 0 || index >= ens.dim()) {
            throw std::out_of_range("StateVector::dicke: index out of range");
        }
        CVector v = CVector::Zero(ens.dim());
        v(index) = 1.0;
        return StateVector(std::move(v));
    }

    const CVector &amplitudes() const noexcept { return amps_; }
    Eigen::Index dim() const noexcept { return amps_.size(); }

    /// |<s_z|psi>|^2 in basis order.
    RVector populations() const { return amps_.cwiseAbs2(); }

  private:
    CVector amps_;
};

class Direction {
  public:
    static constexpr double kUnitTolerance = 1e-9;

    Direction() : v_(0.0, 0.0, 1.0) {}
    /// Rejects vectors whose norm differs from 1 by more than 1e-9, then
    /// renormalizes so the stored vector is unit to round-off.
    Direction(double x, double y, double z) : v_(x, y, z) {
        const double n = v_.norm();
        if (std::abs(n - 1.0) > kUnitTolerance) {
            throw std::invalid_argument("Direction: vector is not unit norm (|n| = " +
                                        std::to_string(n) + ")");
        }
        v_ /= n;
    }
    explicit Direction(const Eigen::Vector3d &v) : Direction(v.x(), v.y(), v.z()) {}

    static Direction normalized(const Eigen::Vector3d &v) {
        const double n = v.norm();
        if (!(n > 0.0)) {
            throw std::invalid_argument("Direction::normalized: zero vector");
        }
        return Direction(v / n);
    }

    double x() const noexcept { return v_.x(); }
    double y() const noexcept { return v_.y(); }
    double z() const noexcept { return v_.z(); }
    const Eigen::Vector3d &vector() const noexcept { return v_; }

  private:
    Eigen::Vector3d v_;
};

struct SpinOperators {
    Operator x, y, z;

    const Operator &operator[](int axis) const {
        switch (axis) {
        case 0:
            return x;
        case 1:
            return y;
        case 2:
            return z;
        default:
            throw std::out_of_range("SpinOperators: axis must be 0, 1 or 2");
        }
    }
};

/// Sx, Sy, Sz from the ladder action S+|S,m> = sqrt(S(S+1) - m(m+1)) |S,m+1>.
inline SpinOperators build_spin_operators(const SpinEnsemble &ens) {
    const int d = ens.dim();
    const double s = ens.spin();
    RMatrix raise = RMatrix::Zero(d, d);
    for (int i = 1; i < d; ++i) {
        const double m = ens.sz(i);
        raise(i - 1, i) = std::sqrt(s * (s + 1.0) - m * (m + 1.0));
    }
    const RMatrix lower = raise.transpose();
    CMatrix sx = (0.5 * (raise + lower)).cast<Complex>();
    CMatrix sy = ((raise - lower).cast<Complex>()) * Complex(0.0, -0.5);
    CMatrix sz = CMatrix::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        sz(i, i) = ens.sz(i);
    }
    return {Operator(std::move(sx), "Sx"), Operator(std::move(sy), "Sy"),
            Operator(std::move(sz), "Sz")};
}

inline Operator spin_along(const SpinOperators &ops, const Direction &n) {
    CMatrix m = n.x() * ops.x.matrix() + n.y() * ops.y.matrix() + n.z() * ops.z.matrix();
    return Operator(std::move(m), "S_n");
}

inline Operator spin_along(const SpinEnsemble &ens, const Direction &n) {
    return spin_along(build_spin_operators(ens), n);
}

/// Spin-coherent state pointing along (sin t cos p, sin t sin p, cos t).
/// Binomial weights switch to log space above 300 particles.
inline StateVector coherent_state(const SpinEnsemble &ens, double theta, double phi) {
    const int n = ens.particles();
    const double c = std::cos(0.5 * theta);
    const double sn = std::sin(0.5 * theta);
    CVector amps(ens.dim());
    const bool log_space = n > 300;
    const double log_c = std::log(std::abs(c));
    const double log_s = std::log(std::abs(sn));
    const double sign_c = c < 0 ? -1.0 : 1.0;
    const double sign_s = sn < 0 ? -1.0 : 1.0;
    double binom = 1.0; // C(n, k), updated incrementally in the direct path
    for (int k = 0; k <= n; ++k) {
        // k = S - m down-steps from the north pole
        const int up = n - k;
        double mag;
        if (log_space) {
            const double log_binom =
                std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(up + 1.0);
            const double lc = up == 0 ? 0.0 : up * log_c;
            const double ls = k == 0 ? 0.0 : k * log_s;
            mag = std::exp(0.5 * log_binom + lc + ls);
            if (up % 2 == 1 && sign_c < 0) {
                mag = -mag;
            }
            if (k % 2 == 1 && sign_s < 0) {
                mag = -mag;
            }
        } else {
            if (k > 0) {
                binom = binom * (n - k + 1) / k;
            }
            mag = std::sqrt(binom) * std::pow(c, up) * std::pow(sn, k);
        }
        amps(k) = mag * std::polar(1.0, k * phi);
    }
    return StateVector::normalized(std::move(amps));
}

inline double fidelity(const StateVector &a, const StateVector &b) {
    if (a.dim() != b.dim()) {
        throw std::invalid_argument("fidelity: dimension mismatch");
    }
    return std::clamp(std::norm(a.amplitudes().dot(b.amplitudes())), 0.0, 1.0);
}

/// exp(-i angle S_n) with the spectrum of S_n computed once, so repeated
/// angles about one axis cost only matrix-vector products.
class SpinRotation {
  public:
    SpinRotation(const SpinOperators &ops, const Direction &axis)
        : axis_(axis), spectrum_(linalg::hermitian_eigen(spin_along(ops, axis).matrix())) {}
    SpinRotation(const SpinEnsemble &ens, const Direction &axis)
        : SpinRotation(build_spin_operators(ens), axis) {}

    CVector apply(const CVector &v, double angle) const {
        const auto &vecs = spectrum_.vectors;
        CVector c = vecs.adjoint() * v;
        for (Eigen::Index j = 0; j < c.size(); ++j) {
            c(j) *= std::polar(1.0, -angle * spectrum_.values(j));
        }
        return vecs * c;
    }

    StateVector apply(const StateVector &s, double angle) const {
        return StateVector(apply(s.amplitudes(), angle));
    }

    CMatrix matrix(double angle) const {
        const auto &vecs = spectrum_.vectors;
        CVector phases(spectrum_.values.size());
        for (Eigen::Index j = 0; j < phases.size(); ++j) {
            phases(j) = std::polar(1.0, -angle * spectrum_.values(j));
        }
        return vecs * phases.asDiagonal() * vecs.adjoint();
    }

    const Direction &axis() const noexcept { return axis_; }

  private:
    Direction axis_;
    linalg::HermitianSpectrum spectrum_;
};

inline StateVector rotate(const StateVector &state, const SpinEnsemble &ens, const Direction &n,
                          double angle) {
    return SpinRotation(ens, n).apply(state, angle);
}

/// Ordered symmetrized operator set; the first three members are always Sx, Sy, Sz.
struct OperatorSet {
    int order = 1;
    std::vector<Operator> members;

    std::size_t size() const noexcept { return members.size(); }
    const Operator &operator[](std::size_t i) const { return members[i]; }
};

inline OperatorSet linear_set(const SpinOperators &ops) { return {1, {ops.x, ops.y, ops.z}}; }

/// Linear and symmetrized products of up to k collective spin operators, in
/// the fixed member order (3, 9 or 19 members).
inline OperatorSet higher_order_set(const SpinOperators &ops, int k) {
    if (k < 1 || k > 3) {
        throw std::invalid_argument("higher_order_set: order must be 1, 2 or 3, got " +
                                    std::to_string(k));
    }
    const CMatrix &x = ops.x.matrix();
    const CMatrix &y = ops.y.matrix();
    const CMatrix &z = ops.z.matrix();
    auto op = [](CMatrix m, const char *label) {
        // Products of Hermitian matrices are Hermitian only up to round-off.
        m = 0.5 * (m + m.adjoint()).eval();
        return Operator(std::move(m), label);
    };
    auto anti = [](const CMatrix &a, const CMatrix &b) -> CMatrix { return 0.5 * (a * b + b * a); };
    auto tri = [](const CMatrix &a, const CMatrix &b) -> CMatrix {
        return (a * a * b + a * b * a + b * a * a) / 3.0;
    };

    OperatorSet set{k, {ops.x, ops.y, ops.z}};
    if (k == 1) {
        return set;
    }
    set.members.push_back(op(x * x, "Sx^2"));
    set.members.push_back(op(y * y, "Sy^2"));
    set.members.push_back(op(z * z, "Sz^2"));
    if (k == 2) {
        set.members.push_back(op(anti(x, y), "{Sx,Sy}/2"));
        set.members.push_back(op(anti(x, z), "{Sx,Sz}/2"));
        set.members.push_back(op(anti(y, z), "{Sy,Sz}/2"));
        return set;
    }
    set.members.push_back(op(x * x * x, "Sx^3"));
    set.members.push_back(op(y * y * y, "Sy^3"));
    set.members.push_back(op(z * z * z, "Sz^3"));
    set.members.push_back(op(anti(x, y), "{Sx,Sy}/2"));
    set.members.push_back(op(anti(y, z), "{Sy,Sz}/2"));
    set.members.push_back(op(anti(x, z), "{Sx,Sz}/2"));
    set.members.push_back(op(tri(x, y), "(Sx^2 Sy)_sym"));
    set.members.push_back(op(tri(x, z), "(Sx^2 Sz)_sym"));
    set.members.push_back(op(tri(y, x), "(Sy^2 Sx)_sym"));
    set.members.push_back(op(tri(y, z), "(Sy^2 Sz)_sym"));
    set.members.push_back(op(tri(z, x), "(Sz^2 Sx)_sym"));
    set.members.push_back(op(tri(z, y), "(Sz^2 Sy)_sym"));
    set.members.push_back(
        op((x * y * z + x * z * y + y * z * x + y * x * z + z * x * y + z * y * x) / 6.0,
           "(SxSySz)_sym"));
    return set;
}

inline OperatorSet higher_order_set(const SpinEnsemble &ens, int k) {
    return higher_order_set(build_spin_operators(ens), k);
}

struct Moments {
    RVector means;
    RMatrix covariance;
};

/// Means and symmetrized covariance of the members of a set, from the
/// vectors O_l|psi>.
inline Moments moments_from_images(const CVector &psi, const std::vector<CVector> &images) {
    const auto p = static_cast<Eigen::Index>(images.size());
    Moments out{RVector(p), RMatrix(p, p)};
    for (Eigen::Index k = 0; k < p; ++k) {
        out.means(k) = psi.dot(images[k]).real();
    }
    for (Eigen::Index k = 0; k < p; ++k) {
        for (Eigen::Index l = k; l < p; ++l) {
            // <O_k O_l + O_l O_k>/2 = Re <O_k psi | O_l psi> for Hermitian members
            const double c = images[k].dot(images[l]).real() - out.means(k) * out.means(l);
            out.covariance(k, l) = c;
            out.covariance(l, k) = c;
        }
    }
    return out;
}

inline Moments moments(const StateVector &state, const OperatorSet &ops) {
    std::vector<CVector> images;
    images.reserve(ops.size());
    for (const auto &o : ops.members) {
        images.push_back(o.apply(state.amplitudes()));
    }
    return moments_from_images(state.amplitudes(), images);
}

struct HusimiGrid {
    std::vector<double> theta;
    std::vector<double> phi;
    RMatrix q; // q(i, j) at (theta[i], phi[j])
};

/// Husimi function Q = (N+1)/(4 pi) |<theta,phi|psi>|^2 on an endpoint-inclusive
/// regular grid, theta in [0, pi], phi in [0, 2 pi].
inline HusimiGrid husimi_grid(const StateVector &state, int n_theta = 181, int n_phi = 361) {
    if (n_theta < 2 || n_phi < 2) {
        throw std::invalid_argument("husimi_grid: grid sizes must be >= 2");
    }
    const auto d = state.dim();
    const int n = static_cast<int>(d) - 1;
    const SpinEnsemble ens(n);
    HusimiGrid grid;
    grid.theta.resize(n_theta);
    grid.phi.resize(n_phi);
    for (int i = 0; i < n_theta; ++i) {
        grid.theta[i] = std::numbers::pi * i / (n_theta - 1);
    }
    for (int j = 0; j < n_phi; ++j) {
        grid.phi[j] = 2.0 * std::numbers::pi * j / (n_phi - 1);
    }
    grid.q.resize(n_theta, n_phi);
    const double norm = (n + 1) / (4.0 * std::numbers::pi);
    const CVector &psi = state.amplitudes();
    for (int i = 0; i < n_theta; ++i) {
        // Real magnitudes at phi = 0; the conjugated phase e^{-ik phi} is applied per column.
        const CVector base = coherent_state(ens, grid.theta[i], 0.0).amplitudes();
        const CVector weighted = base.conjugate().cwiseProduct(psi);
        for (int j = 0; j < n_phi; ++j) {
            const Complex step = std::polar(1.0, -grid.phi[j]);
            Complex acc = 0.0;
            Complex ph = 1.0;
            for (Eigen::Index k = 0; k < d; ++k) {
                acc += weighted(k) * ph;
                ph *= step;
            }
            grid.q(i, j) = norm * std::norm(acc);
        }
    }
    return grid;
}

} // namespace spinmetro
