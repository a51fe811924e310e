#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"

using namespace spinmetro;

namespace {

double max_diff(const CMatrix &a, const CMatrix &b) { return (a - b).cwiseAbs().maxCoeff(); }

} // namespace

TEST(SpinEnsemble, DimensionAndSzValues) {
    const SpinEnsemble ens(5);
    EXPECT_EQ(ens.dim(), 6);
    EXPECT_DOUBLE_EQ(ens.spin(), 2.5);
    EXPECT_DOUBLE_EQ(ens.sz(0), 2.5);
    EXPECT_DOUBLE_EQ(ens.sz(5), -2.5);
    EXPECT_THROW(SpinEnsemble(0), std::invalid_argument);
    EXPECT_THROW(SpinEnsemble(-3), std::invalid_argument);
}

TEST(SpinOperators, TwoParticleLadderValues) {
    const auto s = build_spin_operators(SpinEnsemble(2));
    const double r = 1.0 / std::sqrt(2.0);
    CMatrix sx(3, 3);
    sx << 0, r, 0, r, 0, r, 0, r, 0;
    CMatrix sy(3, 3);
    sy << 0, Complex(0, -r), 0, Complex(0, r), 0, Complex(0, -r), 0, Complex(0, r), 0;
    CMatrix sz = CMatrix::Zero(3, 3);
    sz.diagonal() << 1, 0, -1;
    EXPECT_LT(max_diff(s.x.matrix(), sx), 1e-15);
    EXPECT_LT(max_diff(s.y.matrix(), sy), 1e-15);
    EXPECT_LT(max_diff(s.z.matrix(), sz), 1e-15);
}

TEST(SpinOperators, MatchExplicitMatrixElements) {
    for (int n : {1, 3, 8, 25}) {
        const auto s = build_spin_operators(SpinEnsemble(n));
        const auto o = oracle::spins(n);
        EXPECT_LT(max_diff(s.x.matrix(), o.x), 1e-13) << n;
        EXPECT_LT(max_diff(s.y.matrix(), o.y), 1e-13) << n;
        EXPECT_LT(max_diff(s.z.matrix(), o.z), 1e-13) << n;
    }
}

TEST(SpinOperators, Su2AlgebraAndCasimir) {
    const Complex i(0.0, 1.0);
    for (int n : {1, 2, 5, 20, 100}) {
        const auto s = build_spin_operators(SpinEnsemble(n));
        const CMatrix &x = s.x.matrix();
        const CMatrix &y = s.y.matrix();
        const CMatrix &z = s.z.matrix();
        const double scale = std::max(1.0, 0.25 * n * n);
        EXPECT_LT(max_diff(x * y - y * x, i * z) / scale, 1e-9) << n;
        EXPECT_LT(max_diff(y * z - z * y, i * x) / scale, 1e-9) << n;
        EXPECT_LT(max_diff(z * x - x * z, i * y) / scale, 1e-9) << n;
        const double cas = 0.5 * n * (0.5 * n + 1.0);
        const CMatrix c = x * x + y * y + z * z;
        EXPECT_LT(max_diff(c, cas * CMatrix::Identity(n + 1, n + 1)) / scale, 1e-9) << n;
    }
}

TEST(SpinOperators, AxisIndexing) {
    const auto s = build_spin_operators(SpinEnsemble(3));
    EXPECT_EQ(&s[0], &s.x);
    EXPECT_EQ(&s[2], &s.z);
    EXPECT_THROW(s[3], std::out_of_range);
}

TEST(Operator, RejectsNonHermitianWhenFlagged) {
    CMatrix m = CMatrix::Zero(2, 2);
    m(0, 1) = 1.0;
    EXPECT_THROW(Operator(m, "bad"), std::invalid_argument);
    EXPECT_NO_THROW(Operator(m, "ok", false));
    EXPECT_THROW(Operator(CMatrix::Zero(2, 3), "rect"), std::invalid_argument);
}

TEST(StateVector, NormValidation) {
    CVector v = CVector::Zero(3);
    v(0) = 1.0;
    EXPECT_NO_THROW(StateVector{v});
    v(1) = 1e-3;
    EXPECT_THROW(StateVector{v}, std::invalid_argument);
    EXPECT_NEAR(StateVector::normalized(v).amplitudes().norm(), 1.0, 1e-15);
    EXPECT_THROW(StateVector::normalized(CVector::Zero(3)), std::invalid_argument);
    const auto d = StateVector::dicke(SpinEnsemble(4), 2);
    EXPECT_DOUBLE_EQ(d.populations()(2), 1.0);
    EXPECT_THROW(StateVector::dicke(SpinEnsemble(4), 5), std::out_of_range);
}

TEST(Direction, ValidatesAndRenormalizes) {
    EXPECT_THROW(Direction(1.0, 1.0, 0.0), std::invalid_argument);
    const Direction d(1.0 + 5e-10, 0.0, 0.0);
    EXPECT_DOUBLE_EQ(d.vector().norm(), 1.0);
    const auto n = Direction::normalized(Eigen::Vector3d(0.0, 3.0, 4.0));
    EXPECT_DOUBLE_EQ(n.y(), 0.6);
    EXPECT_THROW(Direction::normalized(Eigen::Vector3d::Zero()), std::invalid_argument);
}

TEST(CoherentState, MeanSpinAndTransverseVariance) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> th(0.0, std::numbers::pi);
    std::uniform_real_distribution<double> ph(0.0, 2.0 * std::numbers::pi);
    for (int n : {1, 4, 17, 60, 350}) {
        const SpinEnsemble ens(n);
        const auto ops = build_spin_operators(ens);
        for (int rep = 0; rep < 5; ++rep) {
            const double t = th(rng);
            const double p = ph(rng);
            const auto psi = coherent_state(ens, t, p);
            const Eigen::Vector3d dir(std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t));
            const auto mom = moments(psi, linear_set(ops));
            EXPECT_LT((mom.means - 0.5 * n * dir).norm(), 1e-9 * n) << n;
            // variance n/4 in the plane orthogonal to dir, 0 along it
            EXPECT_NEAR(dir.dot(mom.covariance * dir), 0.0, 1e-9 * n);
            EXPECT_NEAR(mom.covariance.trace(), 0.5 * n, 1e-9 * n);
        }
    }
}

TEST(CoherentState, MatchesRotatedNorthPole) {
    for (int n : {2, 7, 20}) {
        const SpinEnsemble ens(n);
        const auto psi = coherent_state(ens, 1.1, 2.3);
        const CVector ref = oracle::coherent(n, 1.1, 2.3);
        EXPECT_NEAR(std::norm(ref.dot(psi.amplitudes())), 1.0, 1e-12) << n;
    }
}

TEST(CoherentState, OverlapIsCosineHalfAnglePower) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int n : {3, 10, 40}) {
        const SpinEnsemble ens(n);
        for (int rep = 0; rep < 6; ++rep) {
            const double t1 = std::acos(1 - 2 * u(rng)), p1 = 2 * std::numbers::pi * u(rng);
            const double t2 = std::acos(1 - 2 * u(rng)), p2 = 2 * std::numbers::pi * u(rng);
            const Eigen::Vector3d a(std::sin(t1) * std::cos(p1), std::sin(t1) * std::sin(p1), std::cos(t1));
            const Eigen::Vector3d b(std::sin(t2) * std::cos(p2), std::sin(t2) * std::sin(p2), std::cos(t2));
            const double gamma = std::acos(std::clamp(a.dot(b), -1.0, 1.0));
            const double expect = std::pow(std::cos(0.5 * gamma), 2 * n);
            EXPECT_NEAR(fidelity(coherent_state(ens, t1, p1), coherent_state(ens, t2, p2)), expect, 1e-12);
        }
    }
}

TEST(CoherentState, LogSpacePathAgreesAcrossThreshold) {
    // N = 300 takes the direct products, larger N the log-space weights.
    for (int n : {300, 301, 800}) {
        const SpinEnsemble ens(n);
        const double f = fidelity(coherent_state(ens, 0.5 * std::numbers::pi, 0.0),
                                  coherent_state(ens, 0.5 * std::numbers::pi, 0.05));
        EXPECT_NEAR(f, std::pow(std::cos(0.025), 2 * n), 1e-10) << n;
    }
}

TEST(SpinRotation, MatchesTaylorExponential) {
    const int n = 9;
    const SpinEnsemble ens(n);
    const auto ops = build_spin_operators(ens);
    const Direction axis = Direction::normalized(Eigen::Vector3d(0.3, -0.5, 0.8));
    const SpinRotation rot(ops, axis);
    const CMatrix ref = oracle::expm(Complex(0.0, -0.77) * spin_along(ops, axis).matrix());
    EXPECT_LT(max_diff(rot.matrix(0.77), ref), 1e-12);
    const CMatrix u = rot.matrix(1.3);
    EXPECT_LT(max_diff(u.adjoint() * u, CMatrix::Identity(n + 1, n + 1)), 1e-12);
}

TEST(SpinRotation, TurnsCoherentStateAboutAxis) {
    const SpinEnsemble ens(30);
    const auto psi = coherent_state(ens, 0.5 * std::numbers::pi, 0.0);
    const auto turned = rotate(psi, ens, Direction(0.0, 0.0, 1.0), 0.4);
    EXPECT_NEAR(fidelity(turned, coherent_state(ens, 0.5 * std::numbers::pi, 0.4)), 1.0, 1e-12);
    const auto tipped = rotate(psi, ens, Direction(0.0, 1.0, 0.0), -0.3);
    EXPECT_NEAR(fidelity(tipped, coherent_state(ens, 0.5 * std::numbers::pi - 0.3, 0.0)), 1.0, 1e-12);
}

TEST(OperatorSets, SizesOrderAndNesting) {
    const auto ops = build_spin_operators(SpinEnsemble(6));
    EXPECT_EQ(higher_order_set(ops, 1).size(), 3u);
    EXPECT_EQ(higher_order_set(ops, 2).size(), 9u);
    EXPECT_EQ(higher_order_set(ops, 3).size(), 19u);
    EXPECT_THROW(higher_order_set(ops, 0), std::invalid_argument);
    EXPECT_THROW(higher_order_set(ops, 4), std::invalid_argument);
    const auto s3 = higher_order_set(ops, 3);
    EXPECT_EQ(s3[0].label(), "Sx");
    EXPECT_EQ(s3[5].label(), "Sz^2");
    EXPECT_EQ(s3[18].label(), "(SxSySz)_sym");
    for (const auto &o : s3.members) {
        EXPECT_TRUE(o.hermitian());
        EXPECT_TRUE(linalg::is_hermitian(o.matrix()));
    }
    // Every member of the second-order set lies in the span of the third.
    const auto s2 = higher_order_set(ops, 2);
    CMatrix basis(49, 19);
    for (Eigen::Index c = 0; c < 19; ++c) {
        basis.col(c) = s3[static_cast<std::size_t>(c)].matrix().reshaped();
    }
    for (const auto &o : s2.members) {
        const CVector v = o.matrix().reshaped();
        const CVector coef = basis.colPivHouseholderQr().solve(v);
        EXPECT_LT((basis * coef - v).norm(), 1e-9) << o.label();
    }
}

TEST(Moments, MeansAndCovarianceMatchDirectExpectations) {
    const SpinEnsemble ens(8);
    const auto ops = build_spin_operators(ens);
    const auto set = higher_order_set(ops, 2);
    const auto psi = coherent_state(ens, 0.9, 0.4);
    const auto mom = moments(psi, set);
    const CVector &v = psi.amplitudes();
    for (std::size_t k = 0; k < set.size(); ++k) {
        const CMatrix &a = set[k].matrix();
        const auto kk = static_cast<Eigen::Index>(k);
        EXPECT_NEAR(mom.means(kk), oracle::expect(v, a), 1e-12);
        for (std::size_t l = 0; l < set.size(); ++l) {
            const CMatrix &b = set[l].matrix();
            const double ref = oracle::expect(v, 0.5 * (a * b + b * a)) -
                               oracle::expect(v, a) * oracle::expect(v, b);
            EXPECT_NEAR(mom.covariance(kk, static_cast<Eigen::Index>(l)), ref, 1e-10);
        }
    }
    EXPECT_GE(linalg::symmetric_eigen(mom.covariance).values.minCoeff(), -1e-9);
}

TEST(Husimi, NormalizedAndPeakedOnStateDirection) {
    const SpinEnsemble ens(20);
    const auto psi = coherent_state(ens, 1.0, 2.0);
    const auto g = husimi_grid(psi, 121, 241);
    EXPECT_EQ(g.theta.size(), 121u);
    EXPECT_DOUBLE_EQ(g.theta.back(), std::numbers::pi);
    EXPECT_DOUBLE_EQ(g.phi.back(), 2.0 * std::numbers::pi);
    double acc = 0.0;
    const double dth = g.theta[1] - g.theta[0];
    const double dph = g.phi[1] - g.phi[0];
    Eigen::Index bi = 0, bj = 0;
    g.q.maxCoeff(&bi, &bj);
    for (std::size_t i = 0; i < g.theta.size(); ++i) {
        for (std::size_t j = 0; j + 1 < g.phi.size(); ++j) {
            acc += g.q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * std::sin(g.theta[i]);
        }
    }
    EXPECT_NEAR(acc * dth * dph, 1.0, 1e-3);
    EXPECT_NEAR(g.theta[static_cast<std::size_t>(bi)], 1.0, 1.5 * dth);
    EXPECT_NEAR(g.phi[static_cast<std::size_t>(bj)], 2.0, 1.5 * dph);
    // At its own direction a coherent state has Q = (N+1)/(4 pi).
    const auto at = husimi_grid(coherent_state(ens, 0.0, 0.0), 3, 3);
    EXPECT_NEAR(at.q(0, 0), 21.0 / (4.0 * std::numbers::pi), 1e-12);
    EXPECT_THROW(husimi_grid(psi, 1, 10), std::invalid_argument);
}
