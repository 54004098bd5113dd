#pragma once

// Theorem-backed property suites behind `check` and the acceptance run.
// Every entry reports the observed maximum error against its tolerance.

#include <chrono>
#include <string>
#include <vector>

#include "clifford/algebra.hpp"
#include "clifford/autodiff.hpp"
#include "clifford/datagen.hpp"
#include "clifford/fields.hpp"
#include "clifford/layers.hpp"
#include "clifford/models.hpp"
#include "clifford/rng.hpp"
#include "clifford/transforms.hpp"

namespace clifford {

struct CheckResult {
    std::string suite;
    std::string name;
    double max_error = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    double seconds = 0.0;
};

namespace detail {

class CheckTimer {
public:
    CheckTimer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

inline CheckResult make_result(const std::string& suite, const std::string& name, double err,
                               double tol, double secs) {
    return {suite, name, err, tol, err <= tol, secs};
}

inline MultivectorField random_field(Signature sig, std::int64_t channels,
                                     std::vector<std::int64_t> spatial, Rng& rng) {
    MultivectorField f(sig, channels, std::move(spatial));
    for (auto& v : f.data.vec()) v = rng.uniform(-1, 1);
    return f;
}

}  // namespace detail

// Suite 1 + 2: specialized products against the table-driven product, and
// the complex/quaternion isomorphisms. An injected table override lets the
// mutation check poison Cl(2,0).
inline std::vector<CheckResult> check_algebra(std::uint64_t seed, int random_cases = 10000,
                                              const BladeTable* cl20_override = nullptr) {
    std::vector<CheckResult> results;
    const BladeTable t20_own = build_blade_table(kCl20);
    const BladeTable& t20 = cl20_override ? *cl20_override : t20_own;
    const BladeTable t02 = build_blade_table(kCl02);
    const BladeTable t30 = build_blade_table(kCl30);
    const BladeTable t01 = build_blade_table(kCl01);

    {
        detail::CheckTimer timer;
        double err = 0.0;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                std::array<double, 4> a{}, b{}, out{};
                a[i] = 1.0;
                b[j] = 1.0;
                geometric_product(t20, a, b, out);
                const Multivector2 fast = geometric_product_2d(Multivector2::from_coeffs(a),
                                                               Multivector2::from_coeffs(b), kCl20);
                const auto fc = fast.coeffs();
                for (int k = 0; k < 4; ++k) err = std::max(err, std::abs(fc[k] - out[k]));
            }
        Rng rng(seed);
        for (int it = 0; it < random_cases; ++it) {
            Multivector2 a{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
            Multivector2 b{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
            auto ac = a.coeffs(), bc = b.coeffs();
            std::array<double, 4> out{};
            geometric_product(t20, ac, bc, out);
            const auto fc = geometric_product_2d(a, b, kCl20).coeffs();
            for (int k = 0; k < 4; ++k) err = std::max(err, std::abs(fc[k] - out[k]));
        }
        results.push_back(detail::make_result("algebra", "cl20_specialized_vs_table", err, 1e-12,
                                              timer.seconds()));
    }
    {
        detail::CheckTimer timer;
        double err = 0.0;
        Rng rng(seed + 1);
        for (int it = 0; it < random_cases; ++it) {
            Multivector2 a{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
            Multivector2 b{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
            auto ac = a.coeffs(), bc = b.coeffs();
            std::array<double, 4> out{};
            geometric_product(t02, ac, bc, out);
            const auto fc = geometric_product_2d(a, b, kCl02).coeffs();
            for (int k = 0; k < 4; ++k) err = std::max(err, std::abs(fc[k] - out[k]));
        }
        results.push_back(detail::make_result("algebra", "cl02_specialized_vs_table", err, 1e-12,
                                              timer.seconds()));
    }
    {
        detail::CheckTimer timer;
        double err = 0.0;
        Rng rng(seed + 2);
        for (int it = 0; it < random_cases; ++it) {
            Multivector3 a, b;
            auto fill = [&](Multivector3& m) {
                m = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                     rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
            };
            fill(a);
            fill(b);
            auto ac = a.coeffs(), bc = b.coeffs();
            std::array<double, 8> out{};
            geometric_product(t30, ac, bc, out);
            const auto fc = geometric_product_3d(a, b).coeffs();
            for (int k = 0; k < 8; ++k) err = std::max(err, std::abs(fc[k] - out[k]));
        }
        results.push_back(detail::make_result("algebra", "cl30_specialized_vs_table", err, 1e-12,
                                              timer.seconds()));
    }
    {
        detail::CheckTimer timer;
        double err = 0.0;
        Rng rng(seed + 3);
        for (int it = 0; it < random_cases; ++it) {
            const double ar = rng.uniform(-1, 1), ai = rng.uniform(-1, 1);
            const double br = rng.uniform(-1, 1), bi = rng.uniform(-1, 1);
            const std::array<double, 2> a{ar, ai}, b{br, bi};
            std::array<double, 2> out{};
            geometric_product(t01, a, b, out);
            err = std::max(err, std::abs(out[0] - (ar * br - ai * bi)));
            err = std::max(err, std::abs(out[1] - (ar * bi + ai * br)));
        }
        results.push_back(
            detail::make_result("algebra", "cl01_equals_complex_multiply", err, 1e-12, timer.seconds()));
    }
    {
        detail::CheckTimer timer;
        double err = 0.0;
        Rng rng(seed + 4);
        for (int it = 0; it < random_cases; ++it) {
            const Quaternion a{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                               rng.uniform(-1, 1)};
            const Quaternion b{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                               rng.uniform(-1, 1)};
            const Quaternion h = quaternion_product(a, b);
            const std::array<double, 4> ac{a.w0, a.w1, a.w2, a.w3}, bc{b.w0, b.w1, b.w2, b.w3};
            std::array<double, 4> out{};
            geometric_product(t02, ac, bc, out);
            err = std::max({err, std::abs(h.w0 - out[0]), std::abs(h.w1 - out[1]),
                            std::abs(h.w2 - out[2]), std::abs(h.w3 - out[3])});
        }
        results.push_back(
            detail::make_result("algebra", "cl02_equals_hamilton_product", err, 1e-12, timer.seconds()));
    }
    {
        detail::CheckTimer timer;
        double err = 0.0;
        Rng rng(seed + 5);
        for (int it = 0; it < 1000; ++it) {
            Quaternion q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
            const double n = q.norm();
            q = {q.w0 / n, q.w1 / n, q.w2 / n, q.w3 / n};
            const Matrix3 r = quaternion_rotation_matrix(q, 0.0);
            const std::array<double, 3> v{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
            // Conjugation route through Hamilton products.
            const Quaternion qv = quaternion_product(q, {0.0, v[0], v[1], v[2]});
            const Quaternion rot = quaternion_product(qv, q.conjugate());
            const std::array<double, 3> want{rot.w1, rot.w2, rot.w3};
            for (int row = 0; row < 3; ++row) {
                const double got = r[row][0] * v[0] + r[row][1] * v[1] + r[row][2] * v[2];
                err = std::max(err, std::abs(got - want[row]));
            }
        }
        results.push_back(detail::make_result("algebra", "rotation_matrix_vs_conjugation", err, 1e-10,
                                              timer.seconds()));
    }
    {
        detail::CheckTimer timer;
        double err = 0.0;
        for (const Signature sig : {kCl01, kCl20, kCl02, kCl30}) {
            const BladeTable table = sig == kCl20 && cl20_override ? *cl20_override
                                                                   : build_blade_table(sig);
            const int nb = sig.blade_count();
            std::vector<double> pseudo(nb, 0.0);
            pseudo[nb - 1] = 1.0;
            std::vector<double> isq(nb, 0.0);
            geometric_product(table, pseudo, pseudo, isq);
            for (int i = 0; i < nb; ++i) {
                std::vector<double> a(nb, 0.0), d1(nb, 0.0), d2(nb, 0.0), want(nb, 0.0);
                a[i] = 1.0;
                dual(table, a, d1);
                dual(table, d1, d2);
                geometric_product(table, a, isq, want);
                for (int k = 0; k < nb; ++k) err = std::max(err, std::abs(d2[k] - want[k]));
            }
        }
        results.push_back(
            detail::make_result("algebra", "double_dual_equals_pseudoscalar_square", err, 0.0,
                                timer.seconds()));
    }
    return results;
}

// Suite: transforms (round trips, structure, shift and convolution theorems).
inline std::vector<CheckResult> check_transforms(std::uint64_t seed, int theorem_cases = 50) {
    std::vector<CheckResult> results;
    Rng rng(seed);
    {
        detail::CheckTimer timer;
        double err = 0.0;
        const MultivectorField f2 = detail::random_field(kCl20, 2, {16, 16}, rng);
        err = std::max(err, rel_l2_diff(clifford_ift_2d(clifford_ft_2d(f2)).data, f2.data));
        const MultivectorField f3 = detail::random_field(kCl30, 1, {32, 32, 32}, rng);
        err = std::max(err, rel_l2_diff(clifford_ift_3d(clifford_ft_3d(f3)).data, f3.data));
        results.push_back(detail::make_result("transforms", "cft_round_trip", err, 1e-10, timer.seconds()));
    }
    {
        detail::CheckTimer timer;
        double err = 0.0;
        const MultivectorField f = detail::random_field(kCl20, 1, {16, 16}, rng);
        const CliffordSpectrum spec = clifford_ft_2d(f);
        ComplexGrid spinor({1, 16, 16}), vec({1, 16, 16});
        for (std::int64_t i = 0; i < 256; ++i) {
            spinor.re[i] = f.plane(0, 0)[i];
            spinor.im[i] = f.plane(3, 0)[i];
            vec.re[i] = f.plane(1, 0)[i];
            vec.im[i] = f.plane(2, 0)[i];
        }
        const ComplexGrid shat = dft_2d(spinor, false), vhat = dft_2d(vec, false);
        for (std::int64_t i = 0; i < 256; ++i) {
            err = std::max({err, std::abs(spec.plane(0, 0)[i] - shat.re[i]),
                            std::abs(spec.plane(3, 0)[i] - shat.im[i]),
                            std::abs(spec.plane(1, 0)[i] - vhat.re[i]),
                            std::abs(spec.plane(2, 0)[i] - vhat.im[i])});
        }
        // 3D: four independent transforms over the dual pairs.
        const MultivectorField g = detail::random_field(kCl30, 1, {8, 8, 8}, rng);
        const CliffordSpectrum spec3 = clifford_ft_3d(g);
        const int pairs[4][2] = {{0, 7}, {1, 6}, {2, 5}, {3, 4}};
        const double signs[4] = {1.0, 1.0, -1.0, 1.0};
        for (int p = 0; p < 4; ++p) {
            ComplexGrid pair({1, 8, 8, 8});
            for (std::int64_t i = 0; i < 512; ++i) {
                pair.re[i] = g.plane(pairs[p][0], 0)[i];
                pair.im[i] = signs[p] * g.plane(pairs[p][1], 0)[i];
            }
            const ComplexGrid hat = dft(pair, false);
            for (std::int64_t i = 0; i < 512; ++i) {
                err = std::max(err, std::abs(spec3.plane(pairs[p][0], 0)[i] - hat.re[i]));
                err = std::max(err, std::abs(spec3.plane(pairs[p][1], 0)[i] - signs[p] * hat.im[i]));
            }
        }
        results.push_back(
            detail::make_result("transforms", "cft_equals_independent_pair_dfts", err, 1e-12,
                                timer.seconds()));
    }
    {
        detail::CheckTimer timer;
        double err = 0.0;
        const MultivectorField f = detail::random_field(kCl20, 1, {16, 16}, rng);
        const CliffordSpectrum base = clifford_ft_2d(f);
        const std::vector<std::int64_t> t{rng.uniform_int(16), rng.uniform_int(16)};
        const CliffordSpectrum shifted = clifford_ft_2d(circular_shift(f, t));
        for (std::int64_t k1 = 0; k1 < 16; ++k1)
            for (std::int64_t k2 = 0; k2 < 16; ++k2) {
                const double ang = -2.0 * std::numbers::pi *
                                   (static_cast<double>(t[0] * k1) + static_cast<double>(t[1] * k2)) / 16.0;
                const double c = std::cos(ang), s = std::sin(ang);
                const std::int64_t i = k1 * 16 + k2;
                const double sr = base.plane(0, 0)[i], si = base.plane(3, 0)[i];
                const double vr = base.plane(1, 0)[i], vi = base.plane(2, 0)[i];
                err = std::max({err, std::abs(shifted.plane(0, 0)[i] - (sr * c - si * s)),
                                std::abs(shifted.plane(3, 0)[i] - (sr * s + si * c)),
                                std::abs(shifted.plane(1, 0)[i] - (vr * c - vi * s)),
                                std::abs(shifted.plane(2, 0)[i] - (vr * s + vi * c))});
            }
        results.push_back(detail::make_result("transforms", "shift_theorem_phase_per_dual_pair", err,
                                              1e-10, timer.seconds()));
    }
    {
        detail::CheckTimer timer;
        double err_spinor = 0.0, err_vector = 0.0, err_full3d = 0.0;
        for (int it = 0; it < theorem_cases; ++it) {
            MultivectorField f = detail::random_field(kCl20, 1, {16, 16}, rng);
            MultivectorField ks = detail::random_field(kCl20, 1, {16, 16}, rng);
            for (int b : {1, 2})
                for (std::int64_t i = 0; i < 256; ++i) ks.plane(b, 0)[i] = 0.0;
            const CliffordSpectrum lhs = clifford_ft_2d(circular_convolve_direct(f, ks, KernelKind::spinor));
            const CliffordSpectrum rhs = spectrum_pointwise_gp(clifford_ft_2d(f), clifford_ft_2d(ks), true);
            err_spinor = std::max(err_spinor,
                                  max_abs_diff(lhs.coeff, rhs.coeff) / std::max(1.0, max_abs(rhs.coeff)));

            MultivectorField kv = detail::random_field(kCl20, 1, {16, 16}, rng);
            for (int b : {0, 3})
                for (std::int64_t i = 0; i < 256; ++i) kv.plane(b, 0)[i] = 0.0;
            const CliffordSpectrum lhs_v = spectrum_negate_frequency(
                clifford_ft_2d(circular_convolve_direct(f, kv, KernelKind::vector)));
            const CliffordSpectrum rhs_v =
                spectrum_pointwise_gp(clifford_ft_2d(f), clifford_ft_2d(kv), false);
            err_vector = std::max(
                err_vector, max_abs_diff(lhs_v.coeff, rhs_v.coeff) / std::max(1.0, max_abs(rhs_v.coeff)));

            const MultivectorField f3 = detail::random_field(kCl30, 1, {8, 8, 8}, rng);
            const MultivectorField k3 = detail::random_field(kCl30, 1, {8, 8, 8}, rng);
            const CliffordSpectrum lhs3 =
                clifford_ft_3d(circular_convolve_direct(f3, k3, KernelKind::full));
            const CliffordSpectrum rhs3 =
                spectrum_pointwise_gp(clifford_ft_3d(f3), clifford_ft_3d(k3), true);
            err_full3d = std::max(
                err_full3d, max_abs_diff(lhs3.coeff, rhs3.coeff) / std::max(1.0, max_abs(rhs3.coeff)));
        }
        results.push_back(detail::make_result("transforms", "conv_theorem_2d_spinor_kernel", err_spinor,
                                              1e-9, timer.seconds()));
        results.push_back(detail::make_result("transforms", "conv_theorem_2d_vector_kernel", err_vector,
                                              1e-9, 0.0));
        results.push_back(detail::make_result("transforms", "conv_theorem_3d_full_kernel", err_full3d,
                                              1e-9, 0.0));
    }
    return results;
}

// Suite: layers (translation equivariance, conv oracle agreement, spectral
// identity, whitening).
inline std::vector<CheckResult> check_layers(std::uint64_t seed, int equivariance_cases = 100) {
    std::vector<CheckResult> results;
    Rng rng(seed);
    {
        detail::CheckTimer timer;
        double e2 = 0.0, e3 = 0.0, er = 0.0, es = 0.0;
        CliffordKernel k2{kCl20, Tensor::zeros({4, 2, 2, 3, 3}), std::nullopt};
        for (auto& v : k2.weights.vec()) v = rng.uniform(-1, 1);
        CliffordKernel k3{kCl30, Tensor::zeros({8, 1, 1, 3, 3, 3}), std::nullopt};
        for (auto& v : k3.weights.vec()) v = rng.uniform(-1, 1);
        RotationalKernel rk;
        rk.epsilon = 1e-12;
        for (int i = 0; i < 6; ++i) {
            rk.w[i] = Tensor::zeros({2, 2, 3, 3});
            for (auto& v : rk.w[i].vec()) v = rng.uniform(-1, 1);
        }
        const SpectralWeights sw = init_spectral(kCl20, 2, 2, {4, 4}, InitMode::standard, seed + 9);
        for (int it = 0; it < equivariance_cases; ++it) {
            // Fresh field and shift per case.
            const MultivectorField f2 = detail::random_field(kCl20, 2, {16, 16}, rng);
            const MultivectorField f3 = detail::random_field(kCl30, 1, {8, 8, 8}, rng);
            const std::vector<std::int64_t> t2{rng.uniform_int(16), rng.uniform_int(16)};
            const std::vector<std::int64_t> t3{rng.uniform_int(8), rng.uniform_int(8), rng.uniform_int(8)};
            const MultivectorField s2 = circular_shift(f2, t2);
            const MultivectorField s3 = circular_shift(f3, t3);
            e2 = std::max(e2, max_abs_diff(clifford_conv2d(s2, k2).data,
                                           circular_shift(clifford_conv2d(f2, k2), t2).data));
            e3 = std::max(e3, max_abs_diff(clifford_conv3d(s3, k3).data,
                                           circular_shift(clifford_conv3d(f3, k3), t3).data));
            er = std::max(er, max_abs_diff(rotational_clifford_conv2d(s2, rk).data,
                                           circular_shift(rotational_clifford_conv2d(f2, rk), t2).data));
            es = std::max(es, max_abs_diff(clifford_spectral_conv2d(s2, sw).data,
                                           circular_shift(clifford_spectral_conv2d(f2, sw), t2).data));
        }
        const double secs = timer.seconds();
        results.push_back(detail::make_result("layers", "equivariance_conv2d", e2, 1e-12, secs));
        results.push_back(detail::make_result("layers", "equivariance_conv3d", e3, 1e-12, 0.0));
        results.push_back(detail::make_result("layers", "equivariance_rotational", er, 1e-12, 0.0));
        results.push_back(detail::make_result("layers", "equivariance_spectral", es, 1e-9, 0.0));
    }
    {
        detail::CheckTimer timer;
        double err = 0.0;
        // Small-grid agreement with the direct geometric-product sum.
        const MultivectorField f = detail::random_field(kCl20, 1, {8, 8}, rng);
        CliffordKernel k{kCl20, Tensor::zeros({4, 1, 1, 3, 3}), std::nullopt};
        for (auto& v : k.weights.vec()) v = rng.uniform(-1, 1);
        MultivectorField kf(kCl20, 1, {8, 8});
        for (std::int64_t b = 0; b < 4; ++b)
            for (std::int64_t ty = -1; ty <= 1; ++ty)
                for (std::int64_t tx = -1; tx <= 1; ++tx)
                    kf.plane(b, 0)[((ty + 8) % 8) * 8 + ((tx + 8) % 8)] =
                        k.weights.at(b, std::int64_t{0}, std::int64_t{0}, ty + 1, tx + 1);
        err = std::max(err, max_abs_diff(clifford_conv2d(f, k).data,
                                         circular_convolve_direct(f, kf, KernelKind::full).data));
        const MultivectorField f3 = detail::random_field(kCl30, 1, {6, 6, 6}, rng);
        CliffordKernel k3{kCl30, Tensor::zeros({8, 1, 1, 3, 3, 3}), std::nullopt};
        for (auto& v : k3.weights.vec()) v = rng.uniform(-1, 1);
        MultivectorField kf3(kCl30, 1, {6, 6, 6});
        for (std::int64_t b = 0; b < 8; ++b)
            for (std::int64_t tz = -1; tz <= 1; ++tz)
                for (std::int64_t ty = -1; ty <= 1; ++ty)
                    for (std::int64_t tx = -1; tx <= 1; ++tx)
                        kf3.plane(b, 0)[(((tz + 6) % 6) * 6 + ((ty + 6) % 6)) * 6 + ((tx + 6) % 6)] =
                            k3.weights.at(b, std::int64_t{0}, std::int64_t{0}, tz + 1, ty + 1, tx + 1);
        err = std::max(err, max_abs_diff(clifford_conv3d(f3, k3).data,
                                         circular_convolve_direct(f3, kf3, KernelKind::full).data));
        results.push_back(
            detail::make_result("layers", "conv_equals_direct_gp_sum", err, 1e-10, timer.seconds()));
    }
    {
        detail::CheckTimer timer;
        const MultivectorField f = detail::random_field(kCl20, 2, {16, 16}, rng);
        const MultivectorField out =
            clifford_spectral_conv2d(f, SpectralWeights::identity(kCl20, 2, {8, 8}));
        results.push_back(detail::make_result("layers", "spectral_identity_full_modes",
                                              rel_l2_diff(out.data, f.data), 1e-9, timer.seconds()));
    }
    {
        detail::CheckTimer timer;
        double err = 0.0;
        MultivectorField f = detail::random_field(kCl20, 4, {16, 16}, rng);
        for (std::int64_t i = 0; i < f.spatial_numel(); ++i)
            f.plane(0, 0)[i] = 2.0 * f.plane(1, 0)[i] + 0.5;  // correlated blades
        const CliffordNormState st = CliffordNormState::identity(kCl20, 4);
        const std::int64_t groups = 2, gc = 2, npix = f.spatial_numel();
        const MultivectorField out = clifford_groupnorm(f, st, groups);
        for (std::int64_t g = 0; g < groups; ++g) {
            const double n = static_cast<double>(gc * npix);
            std::vector<double> mean(4, 0.0);
            for (std::int64_t b = 0; b < 4; ++b)
                for (std::int64_t c = g * gc; c < (g + 1) * gc; ++c)
                    for (std::int64_t i = 0; i < npix; ++i) mean[b] += out.plane(b, c)[i] / n;
            for (std::int64_t b1 = 0; b1 < 4; ++b1)
                for (std::int64_t b2 = 0; b2 < 4; ++b2) {
                    double cov = 0.0;
                    for (std::int64_t c = g * gc; c < (g + 1) * gc; ++c)
                        for (std::int64_t i = 0; i < npix; ++i)
                            cov += (out.plane(b1, c)[i] - mean[b1]) * (out.plane(b2, c)[i] - mean[b2]) / n;
                    err = std::max(err, std::abs(cov - (b1 == b2 ? 1.0 : 0.0)));
                }
        }
        results.push_back(
            detail::make_result("layers", "whitening_identity_covariance", err, 1e-6, timer.seconds()));
    }
    return results;
}

// Suite: analytic gradients against central finite differences for every
// layer family.
inline std::vector<CheckResult> check_grad(std::uint64_t seed, int coords = 100, int nseeds = 10) {
    std::vector<CheckResult> results;
    using Builder = std::function<NodeId(Tape&, const std::vector<NodeId>&)>;
    struct OpCase {
        std::string name;
        std::vector<Tensor> params;
        Builder builder;
        double tol;
    };

    auto rt = [&](std::vector<std::int64_t> shape, std::uint64_t s, double scale = 1.0) {
        Tensor t(std::move(shape));
        Rng rng(seed * 7919 + s);
        for (auto& v : t.vec()) v = scale * rng.uniform(-1, 1);
        return t;
    };

    std::vector<OpCase> cases;
    cases.push_back({"grad_clifford_conv2d",
                     {rt({8, 6, 6}, 1), rt({4, 2, 2, 3, 3}, 2, 0.5)},
                     [](Tape& t, const std::vector<NodeId>& ids) {
                         NodeId y = build::clifford_conv(t, ids[0], ids[1], kCl20, {6, 6}, {3, 3}, 2, 2);
                         return build::sum_all(t, build::mul(t, y, y));
                     },
                     1e-5});
    cases.push_back({"grad_clifford_conv3d",
                     {rt({8, 4, 4, 4}, 3), rt({8, 1, 1, 3, 3, 3}, 4, 0.4)},
                     [](Tape& t, const std::vector<NodeId>& ids) {
                         NodeId y =
                             build::clifford_conv(t, ids[0], ids[1], kCl30, {4, 4, 4}, {3, 3, 3}, 1, 1);
                         return build::sum_all(t, build::mul(t, y, y));
                     },
                     1e-5});
    cases.push_back({"grad_rotational_conv2d",
                     {rt({8, 6, 6}, 5), rt({2, 2, 3, 3}, 6, 0.7), rt({2, 2, 3, 3}, 7, 0.7),
                      rt({2, 2, 3, 3}, 8, 0.7), rt({2, 2, 3, 3}, 9, 0.7), rt({2, 2, 3, 3}, 10, 0.7),
                      rt({2, 2, 3, 3}, 11, 0.7)},
                     [](Tape& t, const std::vector<NodeId>& ids) {
                         NodeId y = build::rotational_conv(
                             t, ids[0], {ids[1], ids[2], ids[3], ids[4], ids[5], ids[6]}, 1e-12, {6, 6},
                             {3, 3}, 2, 2);
                         return build::sum_all(t, build::mul(t, y, y));
                     },
                     1e-5});
    cases.push_back({"grad_spectral_conv2d",
                     {rt({8, 8, 8}, 12), rt({4, 2, 2, 4, 4}, 13, 0.5), rt({4, 2, 2, 4, 4}, 14, 0.5)},
                     [](Tape& t, const std::vector<NodeId>& ids) {
                         NodeId y =
                             build::spectral_conv(t, ids[0], ids[1], ids[2], kCl20, {8, 8}, {2, 2}, 2, 2);
                         return build::sum_all(t, build::mul(t, y, y));
                     },
                     1e-5});
    cases.push_back({"grad_spectral_conv3d",
                     {rt({8, 4, 4, 4}, 15), rt({8, 1, 1, 2, 2, 2}, 16, 0.5),
                      rt({8, 1, 1, 2, 2, 2}, 17, 0.5)},
                     [](Tape& t, const std::vector<NodeId>& ids) {
                         NodeId y = build::spectral_conv(t, ids[0], ids[1], ids[2], kCl30, {4, 4, 4},
                                                         {1, 1, 1}, 1, 1);
                         return build::sum_all(t, build::mul(t, y, y));
                     },
                     1e-5});
    {
        Tensor x = rt({16, 6, 6}, 18);
        Rng perturb(seed + 99);
        for (auto& v : x.vec()) v += 1e-10 * perturb.uniform(-1, 1);
        cases.push_back({"grad_groupnorm",
                         {x, rt({4, 4, 4}, 19, 0.5), rt({16}, 20, 0.5)},
                         [](Tape& t, const std::vector<NodeId>& ids) {
                             NodeId y = build::groupnorm(t, ids[0], ids[1], ids[2], 4, 4, 2, 36, 1e-5);
                             return build::sum_all(t, build::mul(t, y, y));
                         },
                         1e-5});
    }
    cases.push_back({"grad_gelu",
                     {rt({4, 8, 8}, 21)},
                     [](Tape& t, const std::vector<NodeId>& ids) {
                         return build::sum_all(t, build::gelu(t, ids[0]));
                     },
                     1e-5});
    {
        const Tensor target = rt({8, 8, 8}, 22);
        cases.push_back({"grad_fourier_block",
                         {rt({8, 8, 8}, 23), rt({4, 2, 2, 2, 2}, 24, 0.4), rt({4, 2, 2, 2, 2}, 25, 0.4),
                          rt({4, 2, 2, 1, 1}, 26, 0.4)},
                         [target](Tape& t, const std::vector<NodeId>& ids) {
                             NodeId spec = build::spectral_conv(t, ids[0], ids[1], ids[2], kCl20,
                                                                {8, 8}, {1, 1}, 2, 2);
                             NodeId conv =
                                 build::clifford_conv(t, ids[0], ids[3], kCl20, {8, 8}, {1, 1}, 2, 2);
                             NodeId act = build::gelu(t, build::add(t, spec, conv));
                             return build::smse(t, act, target, std::vector<bool>(8, true), 1.0 / 64.0);
                         },
                         1e-5});
    }

    for (auto& c : cases) {
        detail::CheckTimer timer;
        double worst = 0.0;
        for (int s = 0; s < nseeds; ++s) {
            Tape tape;
            std::vector<NodeId> ids;
            for (const auto& p : c.params) ids.push_back(tape.leaf(p));
            const NodeId loss = c.builder(tape, ids);
            const GradReport report = tape.grad(loss, ids);
            auto closure = [&](const std::vector<Tensor>& ps) {
                Tape t2;
                std::vector<NodeId> ids2;
                for (const auto& p : ps) ids2.push_back(t2.leaf(p));
                return t2.value(c.builder(t2, ids2))[0];
            };
            const FdReport fd =
                fd_check(closure, c.params, report.grads, 1e-5, seed + 31 * s, coords);
            worst = std::max(worst, fd.max_rel_error);
        }
        results.push_back(detail::make_result("grad", c.name, worst, c.tol, timer.seconds()));
    }
    return results;
}

// Suite: toy-PDE generator physics.
inline std::vector<CheckResult> check_physics(std::uint64_t seed) {
    std::vector<CheckResult> results;
    {
        detail::CheckTimer timer;
        const TrajectorySet set =
            gen_advection2d(32, 2, VelocityLaw::constant, 0.9, seed, 8, 1.0, "f64");
        double err = 0.0;
        for (std::int64_t traj = 0; traj < 2; ++traj) {
            double mass0 = 0.0;
            const MultivectorField f0 = set.field_at(traj, 0);
            for (std::int64_t i = 0; i < f0.spatial_numel(); ++i) mass0 += f0.plane(0, 0)[i];
            for (std::int64_t t = 1; t < 8; ++t) {
                double mass = 0.0;
                const MultivectorField ft = set.field_at(traj, t);
                for (std::int64_t i = 0; i < ft.spatial_numel(); ++i) mass += ft.plane(0, 0)[i];
                err = std::max(err, std::abs(mass - mass0) / std::abs(mass0));
            }
        }
        results.push_back(
            detail::make_result("physics", "advection_mass_conservation", err, 1e-10, timer.seconds()));
    }
    {
        detail::CheckTimer timer;
        YeeGrid3d yee(16);
        Rng rng(seed + 1);
        for (int mode = 0; mode < 6; ++mode) {
            const double kx = 2.0 * std::numbers::pi * static_cast<double>(1 + rng.uniform_int(2)) / 16;
            const double ky = 2.0 * std::numbers::pi * static_cast<double>(1 + rng.uniform_int(2)) / 16;
            const double kz = 2.0 * std::numbers::pi * static_cast<double>(1 + rng.uniform_int(2)) / 16;
            const double amp = rng.uniform(-1, 1), phase = rng.uniform(0, 6.28);
            Tensor* targets[6] = {&yee.ex, &yee.ey, &yee.ez, &yee.hx, &yee.hy, &yee.hz};
            Tensor& field = *targets[rng.uniform_int(6)];
            for (std::int64_t i = 0; i < 16; ++i)
                for (std::int64_t j = 0; j < 16; ++j)
                    for (std::int64_t k = 0; k < 16; ++k)
                        field[(i * 16 + j) * 16 + k] += amp * std::sin(kx * i + ky * j + kz * k + phase);
        }
        const double dt = 0.5 * maxwell_courant_bound();
        double lo = 1e300, hi = -1e300;
        for (int step = 0; step < 100; ++step) {
            const double e = yee.step_energy(dt);
            lo = std::min(lo, e);
            hi = std::max(hi, e);
        }
        results.push_back(detail::make_result("physics", "maxwell_energy_drift_100_steps",
                                              (hi - lo) / hi, 0.01, timer.seconds()));
    }
    {
        detail::CheckTimer timer;
        const std::int64_t m = 32, mode = 2;
        const double k = 2.0 * std::numbers::pi * static_cast<double>(mode) / m;
        YeeGrid3d yee(m);
        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t j = 0; j < m; ++j)
                for (std::int64_t kk = 0; kk < m; ++kk)
                    yee.ey[(i * m + j) * m + kk] = std::cos(k * static_cast<double>(i));
        const double dt = 0.5 * maxwell_courant_bound();
        std::vector<double> series;
        for (int step = 0; step < 32; ++step) {
            double re = 0.0;
            for (std::int64_t i = 0; i < m; ++i)
                re += yee.ey[(i * m) * m] * std::cos(k * static_cast<double>(i));
            series.push_back(re);
            yee.step(dt);
        }
        double best_cos = 0.0, best_weight = 0.0;
        for (std::size_t n = 1; n + 1 < series.size(); ++n) {
            if (std::abs(series[n]) < 1e-6) continue;
            if (std::abs(series[n]) > best_weight) {
                best_weight = std::abs(series[n]);
                best_cos = (series[n + 1] + series[n - 1]) / (2.0 * series[n]);
            }
        }
        const double omega = std::acos(best_cos) / dt;
        results.push_back(detail::make_result("physics", "maxwell_plane_wave_phase_speed",
                                              std::abs(omega / k - 1.0), 0.05, timer.seconds()));
    }
    return results;
}

// Suite: parameter accounting.
inline std::vector<CheckResult> check_params() {
    std::vector<CheckResult> results;
    {
        detail::CheckTimer timer;
        const CliffordKernel k = init_clifford(kCl20, 6, 5, {3, 3}, InitMode::standard, 1);
        const double err = std::abs(static_cast<double>(k.parameter_count() - 4 * 6 * 5 * 3 * 3));
        results.push_back(
            detail::make_result("params", "cl20_conv_count_formula", err, 0.0, timer.seconds()));
    }
    {
        detail::CheckTimer timer;
        const Model cfno = Model::create(SurrogateConfig::desk2d("cfno"), 1);
        const Model fno = Model::create(SurrogateConfig::desk2d("fno"), 2);
        const double ratio =
            static_cast<double>(cfno.parameter_count()) / static_cast<double>(fno.parameter_count());
        results.push_back(detail::make_result("params", "cfno_vs_fno_parameter_parity",
                                              std::abs(ratio - 1.0), 0.1, timer.seconds()));
    }
    return results;
}

// Guard against vacuous suites: every single sign flip in the Cl(2,0)
// table must be caught by the basis-pair comparison of suite 1.
inline CheckResult check_mutation_sensitivity() {
    detail::CheckTimer timer;
    int undetected = 0;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            BladeTable mutated = build_blade_table(kCl20);
            mutated.entry(i, j).sign = -mutated.entry(i, j).sign;
            bool caught = false;
            for (const auto& r : check_algebra(1, 64, &mutated))
                if (!r.pass) caught = true;
            if (!caught) ++undetected;
        }
    }
    return detail::make_result("mutation", "single_sign_flip_detected_16_of_16",
                               static_cast<double>(undetected), 0.0, timer.seconds());
}

inline std::vector<CheckResult> run_suites(const std::string& suite, std::uint64_t seed) {
    std::vector<CheckResult> all;
    auto append = [&](std::vector<CheckResult> r) {
        for (auto& x : r) all.push_back(std::move(x));
    };
    if (suite == "algebra" || suite == "all") append(check_algebra(seed));
    if (suite == "transforms" || suite == "all") append(check_transforms(seed));
    if (suite == "layers" || suite == "all") append(check_layers(seed));
    if (suite == "grad" || suite == "all") append(check_grad(seed, 100, suite == "all" ? 3 : 10));
    if (suite == "all") {
        append(check_physics(seed));
        append(check_params());
        all.push_back(check_mutation_sensitivity());
    }
    return all;
}

}  // namespace clifford
