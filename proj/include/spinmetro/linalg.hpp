#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "spinmetro/error.hpp"

namespace spinmetro {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

namespace linalg {

/// Eigenvalues ascending, eigenvectors in the columns.
struct HermitianSpectrum {
    RVector values;
    CMatrix vectors;
};

struct SymmetricSpectrum {
    RVector values;
    RMatrix vectors;
};

inline double max_abs(const CMatrix &a) {
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const CMatrix &a, double rel_tol = 1e-12) {
    if (a.rows() != a.cols()) {
        return false;
    }
    const double scale = max_abs(a);
    return max_abs(a - a.adjoint()) <= rel_tol * std::max(scale, 1e-300);
}

/// Hermitian eigensolve. Real-symmetric inputs take the real solver, which is
/// several times faster for the d ~ 1000 matrices of the scaling study.
inline HermitianSpectrum hermitian_eigen(const CMatrix &h) {
    if (h.rows() != h.cols()) {
        throw std::invalid_argument("hermitian_eigen: matrix is not square");
    }
    const double scale = std::max(max_abs(h), 1e-300);
    HermitianSpectrum out;
    if (h.imag().cwiseAbs().maxCoeff() <= 1e-15 * scale) {
        Eigen::SelfAdjointEigenSolver<RMatrix> solver(h.real());
        if (solver.info() != Eigen::Success) {
            throw NumericError("Hermitian eigensolve did not converge (real path)");
        }
        out.values = solver.eigenvalues();
        out.vectors = solver.eigenvectors().cast<Complex>();
    } else {
        Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
        if (solver.info() != Eigen::Success) {
            throw NumericError("Hermitian eigensolve did not converge");
        }
        out.values = solver.eigenvalues();
        out.vectors = solver.eigenvectors();
    }
    return out;
}

inline SymmetricSpectrum symmetric_eigen(const RMatrix &a) {
    const RMatrix sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<RMatrix> solver(sym);
    if (solver.info() != Eigen::Success) {
        throw NumericError("symmetric eigensolve did not converge");
    }
    return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Moore-Penrose inverse of a symmetric PSD matrix: eigenvalues at or below
/// rel_cut * lambda_max are treated as exact zeros.
inline RMatrix symmetric_pinv(const RMatrix &q, double rel_cut = 1e-12) {
    const auto spec = symmetric_eigen(q);
    const double top = spec.values.size() ? spec.values.maxCoeff() : 0.0;
    RMatrix out = RMatrix::Zero(q.rows(), q.cols());
    if (top <= 0.0) {
        return out;
    }
    for (Eigen::Index i = 0; i < spec.values.size(); ++i) {
        if (spec.values(i) > rel_cut * top) {
            const auto v = spec.vectors.col(i);
            out.noalias() += (v * v.transpose()) / spec.values(i);
        }
    }
    return out;
}

/// First component exceeding tol in magnitude is made positive.
inline RVector fix_sign(RVector v, double tol = 1e-9) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > tol) {
            if (v(i) < 0) {
                v = -v;
            }
            break;
        }
    }
    return v;
}

struct TopEigenpair {
    double value = 0.0;
    RVector vector;
    bool degenerate = false;
};

/// Largest eigenpair of a small symmetric matrix. In a degenerate top
/// subspace (relative gap < rel_gap) the member with largest |last component|
/// is selected, i.e. |n_z| for 3-vectors; the sign rule is applied last.
inline TopEigenpair top_eigenpair(const RMatrix &a, double rel_gap = 1e-9) {
    const auto spec = symmetric_eigen(a);
    const Eigen::Index n = spec.values.size();
    TopEigenpair out;
    out.value = spec.values(n - 1);
    const double scale = std::max(std::abs(out.value), 1e-300);
    Eigen::Index first = n - 1;
    while (first > 0 && (out.value - spec.values(first - 1)) < rel_gap * scale) {
        --first;
    }
    const Eigen::Index deg = n - first;
    out.degenerate = deg > 1;
    if (!out.degenerate) {
        out.vector = spec.vectors.col(n - 1);
    } else {
        const RMatrix basis = spec.vectors.middleCols(first, deg);
        // Projection of the last unit axis onto the subspace maximizes that component.
        RVector axis = RVector::Zero(n);
        axis(n - 1) = 1.0;
        RVector proj = basis * (basis.transpose() * axis);
        if (proj.norm() < 1e-12) {
            out.vector = basis.col(deg - 1);
        } else {
            out.vector = proj / proj.norm();
        }
    }
    out.vector = fix_sign(out.vector);
    return out;
}

} // namespace linalg
} // namespace spinmetro
