#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"

using namespace spinmetro;

namespace {

StateVector plus_x(const SpinEnsemble &ens) { return coherent_state(ens, 0.5 * std::numbers::pi, 0.0); }

} // namespace

TEST(NoiseModel, ColumnStochasticGaussianKernel) {
    const SpinEnsemble ens(100);
    for (double sigma : {0.0, 0.3, 1.0, 10.0, 100.0}) {
        const auto noise = build_noise(ens, sigma);
        EXPECT_LT((noise.gamma.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12) << sigma;
        EXPECT_GE(noise.gamma.minCoeff(), 0.0);
    }
    EXPECT_TRUE(build_noise(ens, 0.0).gamma.isIdentity());
    const auto g = build_noise(ens, 2.0).gamma;
    // Ratio of neighbouring entries within a column follows the Gaussian.
    EXPECT_NEAR(g(51, 50) / g(50, 50), std::exp(-1.0 / 8.0), 1e-12);
    EXPECT_NEAR(g(52, 50) / g(50, 50), std::exp(-4.0 / 8.0), 1e-12);
    EXPECT_THROW(build_noise(ens, -1.0), std::invalid_argument);
}

TEST(NoiseModel, BlurredDistributionIsNormalizedAndBroadened) {
    const SpinEnsemble ens(60);
    const auto dicke = StateVector::dicke(ens, 30);
    const RVector m = sz_values(ens);
    double prev = 0.0;
    for (double sigma : {0.0, 0.5, 1.0, 3.0, 6.0}) {
        const RVector p = noisy_distribution(dicke, build_noise(ens, sigma));
        EXPECT_NEAR(p.sum(), 1.0, 1e-12);
        const double var = distribution_variance(p, m);
        EXPECT_GE(var, prev);
        prev = var;
        if (sigma >= 1.0 && sigma <= 3.0) {
            EXPECT_NEAR(var, sigma * sigma, 1e-6 * sigma * sigma);
        }
    }
    EXPECT_THROW(noisy_distribution(dicke, build_noise(SpinEnsemble(10), 1.0)), std::invalid_argument);
}

TEST(MeasurementRotation, MapsZOntoRequestedAxis) {
    const SpinEnsemble ens(12);
    const auto ops = build_spin_operators(ens);
    std::mt19937_64 rng(21);
    std::vector<Eigen::Vector3d> axes = {{0, 0, 1}, {0, 0, -1}, {1, 0, 0}, {0, 1, 0}};
    for (int i = 0; i < 6; ++i) {
        axes.push_back(oracle::random_unit(rng));
    }
    for (const auto &a : axes) {
        const Direction m(a);
        const CMatrix r = measurement_rotation(ops, m);
        const CMatrix lhs = r.adjoint() * ops.z.matrix() * r;
        EXPECT_LT((lhs - spin_along(ops, m).matrix()).cwiseAbs().maxCoeff(), 1e-11) << a.transpose();
    }
}

TEST(NoisySlope, NoiselessLimitMatchesMomentMatrices) {
    const SpinEnsemble ens(40);
    const auto ops = build_spin_operators(ens);
    const auto h = build_tnt_lambda(ens, 1.0, 2.0);
    const double t1 = 0.12, t2 = 0.09;
    const auto data = moment_matrices(plus_x(ens), h, t1, t2, linear_set(ops));
    const auto probe = evolve(plus_x(ens), h, t1);
    std::mt19937_64 rng(2);
    const auto none = build_noise(ens, 0.0);
    for (int rep = 0; rep < 4; ++rep) {
        const Direction n(oracle::random_unit(rng));
        const Direction m(oracle::random_unit(rng));
        const double slope = noisy_signal_slope(probe, h, t2, measurement_rotation(ops, m), n, none);
        EXPECT_NEAR(slope, n.vector().dot(data.M * m.vector()), 1e-9 * (1.0 + std::abs(slope)));
    }
}

TEST(NoisySlope, MatchesFiniteDifferenceOfNoisyMean) {
    const SpinEnsemble ens(30);
    const auto ops = build_spin_operators(ens);
    const auto h = build_tnt_lambda(ens, 1.0, 2.0);
    const auto probe = evolve(plus_x(ens), h, 0.1);
    const Direction n(0.0, 0.6, 0.8);
    const Direction m = Direction::normalized(Eigen::Vector3d(0.2, 0.5, 0.7));
    const CMatrix rm = measurement_rotation(ops, m);
    const auto noise = build_noise(ens, 2.5);
    const RVector mz = sz_values(ens);
    const SpinRotation enc(ops, n);
    auto mean = [&](double phi) {
        const StateVector out(rm * h.propagate(enc.apply(probe.amplitudes(), phi), 0.2));
        return distribution_mean(noisy_distribution(out, noise), mz);
    };
    const double e = 1e-4;
    const double fd = (mean(e) - mean(-e)) / (2 * e);
    const double slope = noisy_signal_slope(probe, h, 0.2, rm, n, noise);
    EXPECT_NEAR(slope, fd, 1e-6 * std::abs(fd));
}

TEST(NoisyGain, NoiselessGainEqualsLinearOptimum) {
    const SpinEnsemble ens(50);
    const auto h = build_tnt_lambda(ens, 1.0, 2.0);
    for (auto [t1, t2] : {std::pair{0.05, 0.0}, {0.15, 0.12}}) {
        const auto s = higher_order_bound(plus_x(ens), h, t1, t2, 1);
        const Direction m = Direction::normalized(s.m_opt.head<3>());
        const double g = noisy_gain(plus_x(ens), h, t1, t2, s.n_opt, m, build_noise(ens, 0.0));
        EXPECT_NEAR(g, s.gain_db, 1e-8);
    }
}

TEST(NoisyGain, DecreasesWithDetectionNoise) {
    const SpinEnsemble ens(50);
    const auto h = build_tnt_lambda(ens, 1.0, 2.0);
    const auto s = higher_order_bound(plus_x(ens), h, 0.15, 0.12, 1);
    const Direction m = Direction::normalized(s.m_opt.head<3>());
    double prev = std::numeric_limits<double>::infinity();
    for (double sigma : {0.0, 1.0, 3.0, 10.0, 30.0}) {
        const double g = noisy_gain(plus_x(ens), h, 0.15, 0.12, s.n_opt, m, build_noise(ens, sigma));
        EXPECT_LE(g, prev + 1e-12);
        prev = g;
    }
}

TEST(NoisyVariance, NoiselessMatchesCovariance) {
    const SpinEnsemble ens(20);
    const auto ops = build_spin_operators(ens);
    const auto psi = coherent_state(ens, 0.7, 0.2);
    const auto mom = moments(psi, linear_set(ops));
    EXPECT_NEAR(noisy_variance(psi, build_noise(ens, 0.0)), mom.covariance(2, 2), 1e-12);
}
