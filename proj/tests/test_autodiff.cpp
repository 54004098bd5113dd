#include "clifford/autodiff.hpp"

#include <gtest/gtest.h>

#include "clifford/rng.hpp"

using namespace clifford;

namespace {

Tensor random_tensor(std::vector<std::int64_t> shape, std::uint64_t seed, double scale = 1.0) {
    Tensor t(std::move(shape));
    Rng rng(seed);
    for (auto& v : t.vec()) v = scale * rng.uniform(-1, 1);
    return t;
}

using GraphBuilder = std::function<NodeId(Tape&, const std::vector<NodeId>&)>;

// Runs a full analytic-vs-central-differences comparison for a loss graph.
FdReport check_gradients(const GraphBuilder& builder, const std::vector<Tensor>& params,
                         std::uint64_t seed, int ncoords = 100, double h = 1e-5) {
    Tape tape;
    std::vector<NodeId> ids;
    for (const auto& p : params) ids.push_back(tape.leaf(p));
    const NodeId loss = builder(tape, ids);
    const GradReport report = tape.grad(loss, ids);
    auto closure = [&](const std::vector<Tensor>& ps) {
        Tape t2;
        std::vector<NodeId> ids2;
        for (const auto& p : ps) ids2.push_back(t2.leaf(p));
        return t2.value(builder(t2, ids2))[0];
    };
    return fd_check(closure, params, report.grads, h, seed, ncoords);
}

}  // namespace

TEST(Tape, SumLossGivesUnitGradients) {
    Tape tape;
    const NodeId x = tape.leaf(random_tensor({3, 4}, 1));
    const NodeId loss = build::sum_all(tape, x);
    const GradReport g = tape.grad(loss, {x});
    ASSERT_TRUE(g.connected[0]);
    for (std::int64_t i = 0; i < 12; ++i) EXPECT_EQ(g.grads[0][i], 1.0);
}

TEST(Tape, DisconnectedParameterFlaggedWithZeroGradient) {
    Tape tape;
    const NodeId x = tape.leaf(random_tensor({2, 2}, 2));
    const NodeId unused = tape.leaf(random_tensor({2, 2}, 3));
    const NodeId loss = build::sum_all(tape, build::mul(tape, x, x));
    const GradReport g = tape.grad(loss, {x, unused});
    EXPECT_TRUE(g.connected[0]);
    EXPECT_FALSE(g.connected[1]);
    EXPECT_EQ(max_abs(g.grads[1]), 0.0);
}

TEST(Tape, ReplayReproducesForwardBitIdentically) {
    Tape tape;
    const NodeId x = tape.leaf(random_tensor({4, 1, 8, 8}, 4));
    const NodeId w = tape.leaf(random_tensor({4, 2, 1, 3, 3}, 5, 0.5));
    const NodeId y = build::clifford_conv(tape, x, w, kCl20, {8, 8}, {3, 3}, 1, 2);
    const NodeId act = build::gelu(tape, y);
    const NodeId loss = build::sum_all(tape, build::mul(tape, act, act));
    (void)loss;
    const auto replayed = tape.replay_forward();
    ASSERT_EQ(replayed.size(), tape.size());
    for (std::size_t i = 0; i < replayed.size(); ++i)
        for (std::int64_t j = 0; j < replayed[i].numel(); ++j)
            EXPECT_EQ(replayed[i][j], tape.value(static_cast<NodeId>(i))[j]);
}

TEST(Gradient, GeometricProductNormMatchesFiniteDifferences) {
    // |gp(a, b)|^2 realized as a 1x1 Clifford convolution on a 1x1 grid.
    const std::vector<Tensor> params{random_tensor({4, 1, 1, 1}, 6),      // a as field
                                     random_tensor({4, 1, 1, 1, 1}, 7)};  // b as kernel
    const auto builder = [](Tape& t, const std::vector<NodeId>& ids) {
        const NodeId y = build::clifford_conv(t, ids[0], ids[1], kCl20, {1, 1}, {1, 1}, 1, 1);
        return build::sum_all(t, build::mul(t, y, y));
    };
    const FdReport report = check_gradients(builder, params, 11);
    EXPECT_LT(report.max_rel_error, 1e-8);
}

TEST(Gradient, LinearOpIsExactToFiniteDifferenceNoise) {
    const std::vector<Tensor> params{random_tensor({2, 4, 4}, 8)};
    const auto builder = [](Tape& t, const std::vector<NodeId>& ids) {
        return build::sum_all(t, build::scale(t, ids[0], 3.0, 0.25));
    };
    const FdReport report = check_gradients(builder, params, 12, 50);
    EXPECT_LT(report.max_rel_error, 1e-9);
}

TEST(Gradient, CliffordConv2dAndZeroPadding) {
    const Tensor x = random_tensor({4 * 2, 6, 6}, 9);
    const std::vector<Tensor> params{x, random_tensor({4, 2, 2, 3, 3}, 10, 0.5)};
    for (Padding p : {Padding::periodic, Padding::zero}) {
        const auto builder = [p](Tape& t, const std::vector<NodeId>& ids) {
            const NodeId y = build::clifford_conv(t, ids[0], ids[1], kCl20, {6, 6}, {3, 3}, 2, 2, p);
            return build::sum_all(t, build::mul(t, y, y));
        };
        const FdReport report = check_gradients(builder, params, 13);
        EXPECT_LT(report.max_rel_error, 1e-7);
    }
}

TEST(Gradient, CliffordConv3d) {
    const std::vector<Tensor> params{random_tensor({8 * 1, 4, 4, 4}, 14),
                                     random_tensor({8, 1, 1, 3, 3, 3}, 15, 0.4)};
    const auto builder = [](Tape& t, const std::vector<NodeId>& ids) {
        const NodeId y = build::clifford_conv(t, ids[0], ids[1], kCl30, {4, 4, 4}, {3, 3, 3}, 1, 1);
        return build::sum_all(t, build::mul(t, y, y));
    };
    const FdReport report = check_gradients(builder, params, 16);
    EXPECT_LT(report.max_rel_error, 1e-7);
}

TEST(Gradient, RotationalConv2d) {
    std::vector<Tensor> params{random_tensor({4 * 2, 6, 6}, 17)};
    for (int i = 0; i < 6; ++i) params.push_back(random_tensor({2, 2, 3, 3}, 18 + i, 0.7));
    const auto builder = [](Tape& t, const std::vector<NodeId>& ids) {
        const NodeId y = build::rotational_conv(
            t, ids[0], {ids[1], ids[2], ids[3], ids[4], ids[5], ids[6]}, 1e-12, {6, 6}, {3, 3}, 2, 2);
        return build::sum_all(t, build::mul(t, y, y));
    };
    const FdReport report = check_gradients(builder, params, 24);
    EXPECT_LT(report.max_rel_error, 1e-6);
}

TEST(Gradient, SpectralConv2dAnd3d) {
    {
        const std::vector<Tensor> params{random_tensor({4 * 2, 8, 8}, 25),
                                         random_tensor({4, 2, 2, 4, 4}, 26, 0.5),
                                         random_tensor({4, 2, 2, 4, 4}, 27, 0.5)};
        const auto builder = [](Tape& t, const std::vector<NodeId>& ids) {
            const NodeId y = build::spectral_conv(t, ids[0], ids[1], ids[2], kCl20, {8, 8}, {2, 2}, 2, 2);
            return build::sum_all(t, build::mul(t, y, y));
        };
        const FdReport report = check_gradients(builder, params, 28);
        EXPECT_LT(report.max_rel_error, 1e-6);
    }
    {
        const std::vector<Tensor> params{random_tensor({8 * 1, 4, 4, 4}, 29),
                                         random_tensor({8, 1, 1, 2, 2, 2}, 30, 0.5),
                                         random_tensor({8, 1, 1, 2, 2, 2}, 31, 0.5)};
        const auto builder = [](Tape& t, const std::vector<NodeId>& ids) {
            const NodeId y =
                build::spectral_conv(t, ids[0], ids[1], ids[2], kCl30, {4, 4, 4}, {1, 1, 1}, 1, 1);
            return build::sum_all(t, build::mul(t, y, y));
        };
        const FdReport report = check_gradients(builder, params, 32);
        EXPECT_LT(report.max_rel_error, 1e-6);
    }
}

TEST(Gradient, GroupNormWhitening) {
    // A tiny perturbation guards against exactly repeated eigenvalues where
    // the subgradient is undefined.
    Tensor x = random_tensor({4 * 4, 6, 6}, 33);
    Rng rng(34);
    for (auto& v : x.vec()) v += 1e-10 * rng.uniform(-1, 1);
    const std::vector<Tensor> params{x, random_tensor({4, 4, 4}, 35, 0.5),
                                     random_tensor({4 * 4}, 36, 0.5)};
    const auto builder = [](Tape& t, const std::vector<NodeId>& ids) {
        const NodeId y = build::groupnorm(t, ids[0], ids[1], ids[2], 4, 4, 2, 36, 1e-5);
        return build::sum_all(t, build::mul(t, y, y));
    };
    const FdReport report = check_gradients(builder, params, 37, 100, 1e-5);
    EXPECT_LT(report.max_rel_error, 1e-5);
}

TEST(Gradient, GeluAndSmse) {
    const Tensor target = random_tensor({4, 4, 4}, 38);
    const std::vector<Tensor> params{random_tensor({4, 4, 4}, 39)};
    const auto builder = [&](Tape& t, const std::vector<NodeId>& ids) {
        const NodeId y = build::gelu(t, ids[0]);
        return build::smse(t, y, target, {true, true, false, true}, 1.0 / 16.0);
    };
    const FdReport report = check_gradients(builder, params, 40);
    EXPECT_LT(report.max_rel_error, 1e-7);
}

TEST(Gradient, FullFourierBlockChain) {
    // spectral + 1x1 conv residual + gelu + groupnorm + smse, the full CFNO
    // block composition.
    const Tensor target = random_tensor({4 * 2, 8, 8}, 41);
    const std::vector<Tensor> params{random_tensor({4 * 2, 8, 8}, 42),
                                     random_tensor({4, 2, 2, 2, 2}, 43, 0.4),
                                     random_tensor({4, 2, 2, 2, 2}, 44, 0.4),
                                     random_tensor({4, 2, 2, 1, 1}, 45, 0.4),
                                     random_tensor({2, 4, 4}, 46, 0.5),
                                     random_tensor({4 * 2}, 47, 0.3)};
    const auto builder = [&](Tape& t, const std::vector<NodeId>& ids) {
        const NodeId spec = build::spectral_conv(t, ids[0], ids[1], ids[2], kCl20, {8, 8}, {1, 1}, 2, 2);
        const NodeId conv = build::clifford_conv(t, ids[0], ids[3], kCl20, {8, 8}, {1, 1}, 2, 2);
        const NodeId act = build::gelu(t, build::add(t, spec, conv));
        const NodeId norm = build::groupnorm(t, act, ids[4], ids[5], 4, 2, 1, 64, 1e-5);
        return build::smse(t, norm, target, std::vector<bool>(8, true), 1.0 / 64.0);
    };
    for (std::uint64_t seed : {48, 49, 50}) {
        const FdReport report = check_gradients(builder, params, seed);
        EXPECT_LT(report.max_rel_error, 1e-5);
    }
}

TEST(Gradient, DftAdjointIsConjugateTransposedTransform) {
    // loss = <wr, Re dft(x)> + <wi, Im dft(x)> for real x; the analytic
    // gradient must equal N * Re(idft(w)).
    const std::int64_t n = 8;
    const Tensor x = random_tensor({1, n, n}, 51);
    const Tensor wr = random_tensor({1, n, n}, 52);
    const Tensor wi = random_tensor({1, n, n}, 53);
    ComplexGrid w(std::vector<std::int64_t>{1, n, n});
    w.re = wr;
    w.im = wi;
    const ComplexGrid back = dft(w, true);
    auto loss = [&](const Tensor& xs) {
        ComplexGrid g(std::vector<std::int64_t>{1, n, n});
        g.re = xs;
        const ComplexGrid hat = dft(g, false);
        double s = 0.0;
        for (std::int64_t i = 0; i < n * n; ++i) s += wr[i] * hat.re[i] + wi[i] * hat.im[i];
        return s;
    };
    Rng rng(54);
    for (int it = 0; it < 50; ++it) {
        const std::int64_t i = rng.uniform_int(n * n);
        Tensor xp = x, xm = x;
        xp[i] += 1e-6;
        xm[i] -= 1e-6;
        const double fd = (loss(xp) - loss(xm)) / 2e-6;
        const double analytic = static_cast<double>(n * n) * back.re[i];
        EXPECT_NEAR(fd, analytic, 1e-6 * std::max(1.0, std::abs(analytic)));
    }
}

TEST(Gradient, RealConvAndRealSpectralBaselineOps) {
    const std::vector<Tensor> params{random_tensor({2, 8, 8}, 55), random_tensor({3, 2, 3, 3}, 56, 0.5),
                                     random_tensor({1, 3, 3, 4, 4}, 57, 0.5),
                                     random_tensor({1, 3, 3, 4, 4}, 58, 0.5)};
    const auto builder = [](Tape& t, const std::vector<NodeId>& ids) {
        const NodeId y = build::real_conv(t, ids[0], ids[1], {8, 8}, {3, 3}, 2, 3);
        const NodeId z = build::real_spectral_conv(t, y, ids[2], ids[3], {8, 8}, {2, 2}, 3, 3);
        return build::sum_all(t, build::mul(t, z, z));
    };
    const FdReport report = check_gradients(builder, params, 59);
    EXPECT_LT(report.max_rel_error, 1e-6);
}
