#include "clifford/transforms.hpp"

#include <gtest/gtest.h>

#include <numbers>

#include "clifford/rng.hpp"
#include "oracle/oracle.hpp"

using namespace clifford;

namespace {

MultivectorField random_field(Signature sig, std::int64_t channels, std::vector<std::int64_t> spatial,
                              std::uint64_t seed) {
    MultivectorField f(sig, channels, std::move(spatial));
    Rng rng(seed);
    for (auto& v : f.data.vec()) v = rng.uniform(-1, 1);
    return f;
}

ComplexGrid random_grid(std::vector<std::int64_t> shape, std::uint64_t seed) {
    ComplexGrid g(std::move(shape));
    Rng rng(seed);
    for (auto& v : g.re.vec()) v = rng.uniform(-1, 1);
    for (auto& v : g.im.vec()) v = rng.uniform(-1, 1);
    return g;
}

double spectrum_max_diff(const CliffordSpectrum& a, const CliffordSpectrum& b) {
    return max_abs_diff(a.coeff, b.coeff);
}

}  // namespace

TEST(Dft2d, ConstantFieldConcentratesAtZeroFrequency) {
    const std::int64_t m = 8;
    ComplexGrid g({1, m, m});
    std::fill(g.re.vec().begin(), g.re.vec().end(), 0.75);
    const ComplexGrid hat = dft_2d(g, false);
    EXPECT_NEAR(hat.re[0], 0.75 * m * m, 1e-10);
    EXPECT_NEAR(hat.im[0], 0.0, 1e-10);
    for (std::int64_t i = 1; i < m * m; ++i) {
        EXPECT_NEAR(hat.re[i], 0.0, 1e-10);
        EXPECT_NEAR(hat.im[i], 0.0, 1e-10);
    }
}

TEST(Dft2d, UnitImpulseGivesFlatSpectrum) {
    ComplexGrid g({1, 8, 8});
    g.re[0] = 1.0;
    const ComplexGrid hat = dft_2d(g, false);
    for (std::int64_t i = 0; i < 64; ++i) {
        EXPECT_NEAR(hat.re[i], 1.0, 1e-12);
        EXPECT_NEAR(hat.im[i], 0.0, 1e-12);
    }
}

TEST(Dft2d, FastPathAgreesWithNaiveReference) {
    const ComplexGrid g = random_grid({2, 16, 16}, 7);
    const ComplexGrid fast = dft_2d(g, false);
    const ComplexGrid naive = oracle::oracle_dft(g, false);
    EXPECT_LT(max_abs_diff(fast.re, naive.re), 1e-10);
    EXPECT_LT(max_abs_diff(fast.im, naive.im), 1e-10);
    const ComplexGrid fast_inv = dft_2d(g, true);
    const ComplexGrid naive_inv = oracle::oracle_dft(g, true);
    EXPECT_LT(max_abs_diff(fast_inv.re, naive_inv.re), 1e-12);
    EXPECT_LT(max_abs_diff(fast_inv.im, naive_inv.im), 1e-12);
}

TEST(Dft2d, NonPowerOfTwoExtentsAgreeWithNaiveReference) {
    const ComplexGrid g = random_grid({1, 6, 12}, 8);
    const ComplexGrid fast = dft_2d(g, false);
    const ComplexGrid naive = oracle::oracle_dft(g, false);
    EXPECT_LT(max_abs_diff(fast.re, naive.re), 1e-10);
    EXPECT_LT(max_abs_diff(fast.im, naive.im), 1e-10);
}

TEST(CliffordFt2d, PureScalarConstantFieldIsDcOnlyInBladeZero) {
    MultivectorField f(kCl20, 1, {8, 8});
    for (std::int64_t i = 0; i < 64; ++i) f.plane(0, 0)[i] = 2.0;
    const CliffordSpectrum spec = clifford_ft_2d(f);
    EXPECT_NEAR(spec.plane(0, 0)[0], 2.0 * 64, 1e-10);
    for (int b = 0; b < 4; ++b)
        for (std::int64_t i = (b == 0 ? 1 : 0); i < 64; ++i) EXPECT_NEAR(spec.plane(b, 0)[i], 0.0, 1e-10);
}

TEST(CliffordFt2d, BivectorOnlyFieldStaysInSpinorPair) {
    MultivectorField f = random_field(kCl20, 1, {8, 8}, 11);
    for (int b : {1, 2})
        for (std::int64_t i = 0; i < 64; ++i) f.plane(b, 0)[i] = 0.0;
    for (std::int64_t i = 0; i < 64; ++i) f.plane(0, 0)[i] = 0.0;  // keep only f12
    const CliffordSpectrum spec = clifford_ft_2d(f);
    double vec_energy = 0.0, spinor_energy = 0.0;
    for (std::int64_t i = 0; i < 64; ++i) {
        vec_energy += std::abs(spec.plane(1, 0)[i]) + std::abs(spec.plane(2, 0)[i]);
        spinor_energy += std::abs(spec.plane(0, 0)[i]) + std::abs(spec.plane(3, 0)[i]);
    }
    EXPECT_NEAR(vec_energy, 0.0, 1e-12);
    EXPECT_GT(spinor_energy, 1.0);
}

TEST(CliffordFt2d, BladeReassemblyEqualsTwoIndependentComplexDfts) {
    const MultivectorField f = random_field(kCl20, 2, {8, 8}, 12);
    const CliffordSpectrum spec = clifford_ft_2d(f);
    // Hand-built spinor and vector pairs, transformed independently.
    ComplexGrid spinor({2, 8, 8}), vector({2, 8, 8});
    for (std::int64_t c = 0; c < 2; ++c) {
        for (std::int64_t i = 0; i < 64; ++i) {
            spinor.re[c * 64 + i] = f.plane(0, c)[i];
            spinor.im[c * 64 + i] = f.plane(3, c)[i];
            vector.re[c * 64 + i] = f.plane(1, c)[i];
            vector.im[c * 64 + i] = f.plane(2, c)[i];
        }
    }
    const ComplexGrid shat = dft_2d(spinor, false);
    const ComplexGrid vhat = dft_2d(vector, false);
    for (std::int64_t c = 0; c < 2; ++c) {
        for (std::int64_t i = 0; i < 64; ++i) {
            EXPECT_NEAR(spec.plane(0, c)[i], shat.re[c * 64 + i], 1e-12);
            EXPECT_NEAR(spec.plane(3, c)[i], shat.im[c * 64 + i], 1e-12);
            EXPECT_NEAR(spec.plane(1, c)[i], vhat.re[c * 64 + i], 1e-12);
            EXPECT_NEAR(spec.plane(2, c)[i], vhat.im[c * 64 + i], 1e-12);
        }
    }
}

TEST(CliffordIft2d, RoundTripOnRandomFields) {
    const MultivectorField f = random_field(kCl20, 2, {16, 16}, 13);
    const MultivectorField back = clifford_ift_2d(clifford_ft_2d(f));
    EXPECT_LT(rel_l2_diff(back.data, f.data), 1e-10);
}

TEST(CliffordIft2d, ZeroSpectrumGivesZeroField) {
    CliffordSpectrum spec{kCl20, Tensor::zeros({4, 1, 8, 8})};
    EXPECT_EQ(max_abs(clifford_ift_2d(spec).data), 0.0);
}

TEST(CliffordIft2d, SingleModeSynthesizesComplexExponentialPerDualPair) {
    // Single spinor mode at (xi1, xi2) = (1, 2) with coefficient 1.
    CliffordSpectrum spec{kCl20, Tensor::zeros({4, 1, 8, 8})};
    spec.coeff.at(0, 0, 1, 2) = 1.0;
    const MultivectorField f = clifford_ift_2d(spec);
    // Naive synthesis through the oracle inverse transform of the pair.
    ComplexGrid pair({1, 8, 8});
    pair.re.at(0, 1, 2) = 1.0;
    const ComplexGrid synth = oracle::oracle_dft(pair, true);
    for (std::int64_t i = 0; i < 64; ++i) {
        EXPECT_NEAR(f.plane(0, 0)[i], synth.re[i], 1e-12);
        EXPECT_NEAR(f.plane(3, 0)[i], synth.im[i], 1e-12);
        EXPECT_NEAR(f.plane(1, 0)[i], 0.0, 1e-12);
        EXPECT_NEAR(f.plane(2, 0)[i], 0.0, 1e-12);
    }
    const double ang = -2.0 * std::numbers::pi * (1.0 * 3 / 8 + 2.0 * 5 / 8);
    EXPECT_NEAR(f.plane(0, 0)[3 * 8 + 5], std::cos(ang) / 64.0, 1e-12);
}

TEST(CliffordFt3d, ConstantScalarFieldIsDcOnly) {
    MultivectorField f(kCl30, 1, {4, 4, 4});
    for (std::int64_t i = 0; i < 64; ++i) f.plane(0, 0)[i] = 1.5;
    const CliffordSpectrum spec = clifford_ft_3d(f);
    EXPECT_NEAR(spec.plane(0, 0)[0], 1.5 * 64, 1e-10);
    for (int b = 0; b < 8; ++b)
        for (std::int64_t i = (b == 0 ? 1 : 0); i < 64; ++i) EXPECT_NEAR(spec.plane(b, 0)[i], 0.0, 1e-10);
}

TEST(CliffordFt3d, TrivectorOnlyFieldConfinedToScalarTrivectorPair) {
    MultivectorField f(kCl30, 1, {4, 4, 4});
    Rng rng(14);
    for (std::int64_t i = 0; i < 64; ++i) f.plane(7, 0)[i] = rng.uniform(-1, 1);
    const CliffordSpectrum spec = clifford_ft_3d(f);
    for (int b = 1; b < 7; ++b)
        for (std::int64_t i = 0; i < 64; ++i) EXPECT_NEAR(spec.plane(b, 0)[i], 0.0, 1e-12);
}

TEST(CliffordFt3d, RoundTripOnRandomFields) {
    const MultivectorField f = random_field(kCl30, 1, {8, 8, 8}, 15);
    const MultivectorField back = clifford_ift_3d(clifford_ft_3d(f));
    EXPECT_LT(rel_l2_diff(back.data, f.data), 1e-10);
    const MultivectorField big = random_field(kCl30, 1, {32, 32, 32}, 16);
    EXPECT_LT(rel_l2_diff(clifford_ift_3d(clifford_ft_3d(big)).data, big.data), 1e-10);
}

TEST(CliffordFt, LinearityInTheArgument) {
    const MultivectorField f = random_field(kCl20, 1, {8, 8}, 17);
    const MultivectorField g = random_field(kCl20, 1, {8, 8}, 18);
    const CliffordSpectrum lhs = clifford_ft_2d(f + g * (-1.75));
    CliffordSpectrum rhs = clifford_ft_2d(f);
    const CliffordSpectrum gs = clifford_ft_2d(g);
    for (std::int64_t i = 0; i < rhs.coeff.numel(); ++i) rhs.coeff[i] += -1.75 * gs.coeff[i];
    EXPECT_LT(spectrum_max_diff(lhs, rhs), 1e-12);
}

TEST(CliffordFt, ShiftTheoremAppliesComplexPhasePerDualPair) {
    const MultivectorField f = random_field(kCl20, 1, {8, 8}, 19);
    const std::vector<std::int64_t> t{3, 5};
    const CliffordSpectrum shifted = clifford_ft_2d(circular_shift(f, t));
    const CliffordSpectrum base = clifford_ft_2d(f);
    for (std::int64_t k1 = 0; k1 < 8; ++k1) {
        for (std::int64_t k2 = 0; k2 < 8; ++k2) {
            const double ang =
                -2.0 * std::numbers::pi * (static_cast<double>(t[0] * k1) / 8.0 + static_cast<double>(t[1] * k2) / 8.0);
            const double c = std::cos(ang), s = std::sin(ang);
            // Spinor pair rotates by the phase.
            const double sr = base.coeff.at(0, 0, k1, k2), si = base.coeff.at(3, 0, k1, k2);
            EXPECT_NEAR(shifted.coeff.at(0, 0, k1, k2), sr * c - si * s, 1e-10);
            EXPECT_NEAR(shifted.coeff.at(3, 0, k1, k2), sr * s + si * c, 1e-10);
            // Vector pair rotates by the same phase.
            const double vr = base.coeff.at(1, 0, k1, k2), vi = base.coeff.at(2, 0, k1, k2);
            EXPECT_NEAR(shifted.coeff.at(1, 0, k1, k2), vr * c - vi * s, 1e-10);
            EXPECT_NEAR(shifted.coeff.at(2, 0, k1, k2), vr * s + vi * c, 1e-10);
        }
    }
}

TEST(CircularConvolveDirect, DeltaKernelWithIdentityMultivectorIsIdentity) {
    const MultivectorField f = random_field(kCl20, 2, {8, 8}, 20);
    MultivectorField k(kCl20, 1, {8, 8});
    k.plane(0, 0)[0] = 1.0;  // identity multivector at the origin
    const MultivectorField out = circular_convolve_direct(f, k, KernelKind::full);
    EXPECT_LT(max_abs_diff(out.data, f.data), 1e-12);
}

TEST(CircularConvolveDirect, SpinorKernelTheoremHoldsWithConjugatedKernelSpectrum) {
    const MultivectorField f = random_field(kCl20, 1, {16, 16}, 21);
    MultivectorField k = random_field(kCl20, 1, {16, 16}, 22);
    for (int b : {1, 2})
        for (std::int64_t i = 0; i < k.spatial_numel(); ++i) k.plane(b, 0)[i] = 0.0;
    const MultivectorField conv = circular_convolve_direct(f, k, KernelKind::spinor);
    const CliffordSpectrum lhs = clifford_ft_2d(conv);
    const CliffordSpectrum rhs = spectrum_pointwise_gp(clifford_ft_2d(f), clifford_ft_2d(k), true);
    EXPECT_LT(spectrum_max_diff(lhs, rhs) / max_abs(rhs.coeff), 1e-9);
}

TEST(CircularConvolveDirect, VectorKernelTheoremUsesUnconjugatedKernelSpectrum) {
    // Statement read at the negated output frequency, the relabeling the
    // proof introduces: F{f * k_v}(-xi) = F{f}(xi) . F{k_v}(xi).
    const MultivectorField f = random_field(kCl20, 1, {16, 16}, 23);
    MultivectorField k = random_field(kCl20, 1, {16, 16}, 24);
    for (int b : {0, 3})
        for (std::int64_t i = 0; i < k.spatial_numel(); ++i) k.plane(b, 0)[i] = 0.0;
    const MultivectorField conv = circular_convolve_direct(f, k, KernelKind::vector);
    const CliffordSpectrum lhs = spectrum_negate_frequency(clifford_ft_2d(conv));
    const CliffordSpectrum unconj = spectrum_pointwise_gp(clifford_ft_2d(f), clifford_ft_2d(k), false);
    EXPECT_LT(spectrum_max_diff(lhs, unconj) / max_abs(unconj.coeff), 1e-9);
    // The spinor-style conjugated variant must NOT match for a generic kernel.
    const CliffordSpectrum conj = spectrum_pointwise_gp(clifford_ft_2d(f), clifford_ft_2d(k), true);
    EXPECT_GT(spectrum_max_diff(clifford_ft_2d(conv), conj) / max_abs(conj.coeff), 1e-6);
}

TEST(CircularConvolveDirect, FullMultivectorTheoremHoldsIn3d) {
    const MultivectorField f = random_field(kCl30, 1, {8, 8, 8}, 25);
    const MultivectorField k = random_field(kCl30, 1, {8, 8, 8}, 26);
    const MultivectorField conv = circular_convolve_direct(f, k, KernelKind::full);
    const CliffordSpectrum lhs = clifford_ft_3d(conv);
    const CliffordSpectrum rhs = spectrum_pointwise_gp(clifford_ft_3d(f), clifford_ft_3d(k), true);
    EXPECT_LT(spectrum_max_diff(lhs, rhs) / max_abs(rhs.coeff), 1e-9);
}
