#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "clifford/algebra.hpp"
#include "clifford/fields.hpp"
#include "clifford/rng.hpp"
#include "clifford/tensor.hpp"
#include "clifford/transforms.hpp"

namespace clifford {

enum class Padding { periodic, zero };

// Learnable multivector kernel: one real kernel stack per blade,
// weights[blade][cout][cin][k_spatial...], odd spatial extents.
struct CliffordKernel {
    Signature signature;
    Tensor weights;
    std::optional<Tensor> bias;  // [blade][cout]

    std::int64_t cout() const { return weights.dim(1); }
    std::int64_t cin() const { return weights.dim(2); }
    std::vector<std::int64_t> ksize() const {
        return {weights.shape().begin() + 3, weights.shape().end()};
    }
    std::int64_t taps() const {
        std::int64_t t = 1;
        for (std::size_t i = 3; i < weights.rank(); ++i) t *= weights.dim(i);
        return t;
    }
    std::int64_t parameter_count() const {
        return weights.numel() + (bias ? bias->numel() : 0);
    }

    void validate() const {
        signature.validate();
        if (weights.rank() < 4) throw std::invalid_argument("CliffordKernel: weights rank too small");
        if (weights.dim(0) != signature.blade_count())
            throw std::invalid_argument("CliffordKernel: blade axis mismatch");
        for (std::size_t i = 3; i < weights.rank(); ++i)
            if (weights.dim(i) % 2 == 0)
                throw std::invalid_argument("CliffordKernel: spatial kernel extents must be odd");
    }
};

// Rotational reparameterization, six parameter planes per (cout, cin, tap):
// w[0..3] the quaternion filter, w[4] the rotation scale, w[5] the
// scalar-to-vector coupling.
struct RotationalKernel {
    std::array<Tensor, 6> w;  // each [cout][cin][kh][kw]
    double epsilon = 1e-12;

    std::int64_t cout() const { return w[0].dim(0); }
    std::int64_t cin() const { return w[0].dim(1); }
    std::vector<std::int64_t> ksize() const { return {w[0].dim(2), w[0].dim(3)}; }
    std::int64_t taps() const { return w[0].dim(2) * w[0].dim(3); }
    std::int64_t parameter_count() const { return 6 * w[0].numel(); }

    // Pins the rotation scale to 1 and the scalar-to-vector coupling to 0,
    // leaving the plain scalar-response + quaternion-rotation form.
    RotationalKernel eq7_faithful() const {
        RotationalKernel out = *this;
        std::fill(out.w[4].vec().begin(), out.w[4].vec().end(), 1.0);
        std::fill(out.w[5].vec().begin(), out.w[5].vec().end(), 0.0);
        return out;
    }
};

// Per-retained-mode multivector weights with complex blade coefficients:
// planes [blade][cout][cin][2m1][2m2(,2m3)] aligned with the gathered
// corner blocks. Modes above the cutoffs contribute exactly zero.
struct SpectralWeights {
    Signature signature;
    Tensor re, im;
    std::vector<std::int64_t> modes;  // cutoff per spatial axis

    std::int64_t blades() const { return re.dim(0); }
    std::int64_t cout() const { return re.dim(1); }
    std::int64_t cin() const { return re.dim(2); }
    std::int64_t parameter_count() const { return re.numel() + im.numel(); }

    static SpectralWeights zeros(Signature sig, std::int64_t cout, std::int64_t cin,
                                 std::vector<std::int64_t> modes) {
        sig.validate();
        if (static_cast<int>(modes.size()) != sig.dim())
            throw std::invalid_argument("SpectralWeights: one cutoff per spatial axis");
        std::vector<std::int64_t> shape{sig.blade_count(), cout, cin};
        for (auto m : modes) {
            if (m < 1) throw std::invalid_argument("SpectralWeights: cutoffs must be >= 1");
            shape.push_back(2 * m);
        }
        return {sig, Tensor::zeros(shape), Tensor::zeros(shape), std::move(modes)};
    }

    static SpectralWeights identity(Signature sig, std::int64_t channels,
                                    std::vector<std::int64_t> modes) {
        SpectralWeights w = zeros(sig, channels, channels, std::move(modes));
        std::int64_t block = 1;
        for (std::size_t i = 3; i < w.re.rank(); ++i) block *= w.re.dim(i);
        for (std::int64_t c = 0; c < channels; ++c) {
            double* plane = w.re.data() + ((0 * channels + c) * channels + c) * block;
            for (std::int64_t i = 0; i < block; ++i) plane[i] = 1.0;
        }
        return w;
    }
};

// Group-normalization state: learnable whitening affine (gamma matrix,
// beta multivector) per channel plus running moments updated only through
// explicit training-mode calls.
struct CliffordNormState {
    Tensor gamma;         // [C][nb][nb]
    Tensor beta;          // [C][nb]
    Tensor running_mean;  // [C][nb]
    Tensor running_cov;   // [C][nb][nb]
    double eps = 1e-5;
    double momentum = 0.1;

    static CliffordNormState identity(Signature sig, std::int64_t channels, double eps = 1e-5) {
        const std::int64_t nb = sig.blade_count();
        CliffordNormState st{Tensor::zeros({channels, nb, nb}), Tensor::zeros({channels, nb}),
                             Tensor::zeros({channels, nb}), Tensor::zeros({channels, nb, nb}), eps, 0.1};
        for (std::int64_t c = 0; c < channels; ++c)
            for (std::int64_t b = 0; b < nb; ++b) {
                st.gamma.at(c, b, b) = 1.0;
                st.running_cov.at(c, b, b) = 1.0;
            }
        return st;
    }
};

namespace kernels {

// out[co][x] (+)= sum_ci sum_tap K[co][ci][tap] * x[ci][x*stride + tap - center]
// over 2 or 3 spatial axes. The composite channel index folds blades in.
struct ConvShape {
    std::vector<std::int64_t> spatial;   // input spatial extents
    std::vector<std::int64_t> ksize;     // odd kernel extents
    std::int64_t cin = 0, cout = 0;
    Padding padding = Padding::periodic;
    std::int64_t stride = 1;

    std::vector<std::int64_t> out_spatial() const {
        std::vector<std::int64_t> out(spatial.size());
        for (std::size_t d = 0; d < spatial.size(); ++d) out[d] = (spatial[d] + stride - 1) / stride;
        return out;
    }
    std::int64_t in_numel() const {
        std::int64_t n = 1;
        for (auto s : spatial) n *= s;
        return n;
    }
    std::int64_t out_numel() const {
        std::int64_t n = 1;
        for (auto s : out_spatial()) n *= s;
        return n;
    }
    std::int64_t taps() const {
        std::int64_t n = 1;
        for (auto k : ksize) n *= k;
        return n;
    }
};

inline void matrix_conv_forward(const ConvShape& s, const double* x, const double* K, double* out) {
    const auto out_sp = s.out_spatial();
    const std::int64_t npix_in = s.in_numel(), npix_out = s.out_numel(), ntap = s.taps();
    const std::size_t srank = s.spatial.size();
    std::vector<std::int64_t> istr(srank, 1), ostr(srank, 1), kstr(srank, 1);
    for (int d = static_cast<int>(srank) - 2; d >= 0; --d) {
        istr[d] = istr[d + 1] * s.spatial[d + 1];
        ostr[d] = ostr[d + 1] * out_sp[d + 1];
        kstr[d] = kstr[d + 1] * s.ksize[d + 1];
    }
    std::fill(out, out + s.cout * npix_out, 0.0);

    // Precompute per-(output pixel, tap) source offsets; -1 marks outside
    // for zero padding.
    std::vector<std::int64_t> src(static_cast<std::size_t>(npix_out) * ntap);
    for (std::int64_t o = 0; o < npix_out; ++o) {
        std::int64_t rem = o;
        std::vector<std::int64_t> oc(srank);
        for (std::size_t d = 0; d < srank; ++d) {
            oc[d] = rem / ostr[d];
            rem %= ostr[d];
        }
        for (std::int64_t t = 0; t < ntap; ++t) {
            std::int64_t remt = t, flat = 0;
            bool inside = true;
            for (std::size_t d = 0; d < srank; ++d) {
                const std::int64_t td = remt / kstr[d] - s.ksize[d] / 2;
                remt %= kstr[d];
                std::int64_t sd = oc[d] * s.stride + td;
                if (s.padding == Padding::periodic) {
                    sd = ((sd % s.spatial[d]) + s.spatial[d]) % s.spatial[d];
                } else if (sd < 0 || sd >= s.spatial[d]) {
                    inside = false;
                    break;
                }
                flat += sd * istr[d];
            }
            src[o * ntap + t] = inside ? flat : -1;
        }
    }

    for (std::int64_t co = 0; co < s.cout; ++co) {
        double* orow = out + co * npix_out;
        for (std::int64_t ci = 0; ci < s.cin; ++ci) {
            const double* xrow = x + ci * npix_in;
            const double* krow = K + (co * s.cin + ci) * ntap;
            for (std::int64_t o = 0; o < npix_out; ++o) {
                double acc = 0.0;
                const std::int64_t* srow = src.data() + o * ntap;
                for (std::int64_t t = 0; t < ntap; ++t)
                    if (srow[t] >= 0) acc += krow[t] * xrow[srow[t]];
                orow[o] += acc;
            }
        }
    }
}

inline void matrix_conv_input_grad(const ConvShape& s, const double* gout, const double* K,
                                   double* gx) {
    const auto out_sp = s.out_spatial();
    const std::int64_t npix_in = s.in_numel(), npix_out = s.out_numel(), ntap = s.taps();
    const std::size_t srank = s.spatial.size();
    std::vector<std::int64_t> istr(srank, 1), ostr(srank, 1), kstr(srank, 1);
    for (int d = static_cast<int>(srank) - 2; d >= 0; --d) {
        istr[d] = istr[d + 1] * s.spatial[d + 1];
        ostr[d] = ostr[d + 1] * out_sp[d + 1];
        kstr[d] = kstr[d + 1] * s.ksize[d + 1];
    }
    std::fill(gx, gx + s.cin * npix_in, 0.0);
    std::vector<std::int64_t> src(static_cast<std::size_t>(npix_out) * ntap);
    for (std::int64_t o = 0; o < npix_out; ++o) {
        std::int64_t rem = o;
        std::vector<std::int64_t> oc(srank);
        for (std::size_t d = 0; d < srank; ++d) {
            oc[d] = rem / ostr[d];
            rem %= ostr[d];
        }
        for (std::int64_t t = 0; t < ntap; ++t) {
            std::int64_t remt = t, flat = 0;
            bool inside = true;
            for (std::size_t d = 0; d < srank; ++d) {
                const std::int64_t td = remt / kstr[d] - s.ksize[d] / 2;
                remt %= kstr[d];
                std::int64_t sd = oc[d] * s.stride + td;
                if (s.padding == Padding::periodic) {
                    sd = ((sd % s.spatial[d]) + s.spatial[d]) % s.spatial[d];
                } else if (sd < 0 || sd >= s.spatial[d]) {
                    inside = false;
                    break;
                }
                flat += sd * istr[d];
            }
            src[o * ntap + t] = inside ? flat : -1;
        }
    }
    for (std::int64_t co = 0; co < s.cout; ++co) {
        const double* grow = gout + co * npix_out;
        for (std::int64_t ci = 0; ci < s.cin; ++ci) {
            double* gxrow = gx + ci * npix_in;
            const double* krow = K + (co * s.cin + ci) * ntap;
            for (std::int64_t o = 0; o < npix_out; ++o) {
                const std::int64_t* srow = src.data() + o * ntap;
                const double g = grow[o];
                for (std::int64_t t = 0; t < ntap; ++t)
                    if (srow[t] >= 0) gxrow[srow[t]] += krow[t] * g;
            }
        }
    }
}

inline void matrix_conv_weight_grad(const ConvShape& s, const double* x, const double* gout,
                                    double* gK) {
    const auto out_sp = s.out_spatial();
    const std::int64_t npix_in = s.in_numel(), npix_out = s.out_numel(), ntap = s.taps();
    const std::size_t srank = s.spatial.size();
    std::vector<std::int64_t> istr(srank, 1), ostr(srank, 1), kstr(srank, 1);
    for (int d = static_cast<int>(srank) - 2; d >= 0; --d) {
        istr[d] = istr[d + 1] * s.spatial[d + 1];
        ostr[d] = ostr[d + 1] * out_sp[d + 1];
        kstr[d] = kstr[d + 1] * s.ksize[d + 1];
    }
    std::fill(gK, gK + s.cout * s.cin * ntap, 0.0);
    std::vector<std::int64_t> src(static_cast<std::size_t>(npix_out) * ntap);
    for (std::int64_t o = 0; o < npix_out; ++o) {
        std::int64_t rem = o;
        std::vector<std::int64_t> oc(srank);
        for (std::size_t d = 0; d < srank; ++d) {
            oc[d] = rem / ostr[d];
            rem %= ostr[d];
        }
        for (std::int64_t t = 0; t < ntap; ++t) {
            std::int64_t remt = t, flat = 0;
            bool inside = true;
            for (std::size_t d = 0; d < srank; ++d) {
                const std::int64_t td = remt / kstr[d] - s.ksize[d] / 2;
                remt %= kstr[d];
                std::int64_t sd = oc[d] * s.stride + td;
                if (s.padding == Padding::periodic) {
                    sd = ((sd % s.spatial[d]) + s.spatial[d]) % s.spatial[d];
                } else if (sd < 0 || sd >= s.spatial[d]) {
                    inside = false;
                    break;
                }
                flat += sd * istr[d];
            }
            src[o * ntap + t] = inside ? flat : -1;
        }
    }
    for (std::int64_t co = 0; co < s.cout; ++co) {
        const double* grow = gout + co * npix_out;
        for (std::int64_t ci = 0; ci < s.cin; ++ci) {
            const double* xrow = x + ci * npix_in;
            double* krow = gK + (co * s.cin + ci) * ntap;
            for (std::int64_t o = 0; o < npix_out; ++o) {
                const std::int64_t* srow = src.data() + o * ntap;
                const double g = grow[o];
                for (std::int64_t t = 0; t < ntap; ++t)
                    if (srow[t] >= 0) krow[t] += xrow[srow[t]] * g;
            }
        }
    }
}

// Blade-mixing structure of the geometric product f w: the expanded
// kernel matrix entry (out blade, in blade) holds sign * W[kernel blade].
struct BladeMix {
    int in_blade, kernel_blade, out_blade, sign;
};

inline std::vector<BladeMix> blade_mixing(const Signature& sig) {
    const BladeTable table = build_blade_table(sig);
    const int nb = sig.blade_count();
    std::vector<BladeMix> mix;
    mix.reserve(static_cast<std::size_t>(nb) * nb);
    for (int bi = 0; bi < nb; ++bi)
        for (int bk = 0; bk < nb; ++bk) {
            const auto& e = table.entry(bi, bk);
            mix.push_back({bi, bk, e.blade, e.sign});
        }
    return mix;
}

// Expands multivector weights [nb][co][ci][taps] into the dense blade-
// mixing kernel matrix [(nb co)][(nb ci)][taps] realizing Algorithm-style
// grouped convolution.
inline Tensor expand_blade_kernel(const Signature& sig, const Tensor& weights) {
    const std::int64_t nb = sig.blade_count();
    const std::int64_t co = weights.dim(1), ci = weights.dim(2);
    std::int64_t taps = 1;
    for (std::size_t i = 3; i < weights.rank(); ++i) taps *= weights.dim(i);
    Tensor K({nb * co, nb * ci, taps});
    for (const auto& m : blade_mixing(sig)) {
        for (std::int64_t o = 0; o < co; ++o)
            for (std::int64_t i = 0; i < ci; ++i) {
                const double* w = weights.data() + ((m.kernel_blade * co + o) * ci + i) * taps;
                double* k = K.data() + ((m.out_blade * co + o) * (nb * ci) + (m.in_blade * ci + i)) * taps;
                for (std::int64_t t = 0; t < taps; ++t) k[t] += m.sign * w[t];
            }
    }
    return K;
}

// Assembles the rotational blade-mixing matrix [(4 co)][(4 ci)][taps]:
// scalar row [W0, -W1, -W2, -W3]; vector/bivector rows are W5 coupling in
// the scalar column plus W4-scaled rotation entries built from the
// epsilon-normalized quaternion filter.
inline Tensor expand_rotational_kernel(const RotationalKernel& rk) {
    const std::int64_t co = rk.cout(), ci = rk.cin(), taps = rk.taps();
    Tensor K({4 * co, 4 * ci, taps});
    auto put = [&](int bo, int bi, std::int64_t o, std::int64_t i, std::int64_t t, double v) {
        K[((bo * co + o) * (4 * ci) + (bi * ci + i)) * taps + t] = v;
    };
    for (std::int64_t o = 0; o < co; ++o) {
        for (std::int64_t i = 0; i < ci; ++i) {
            for (std::int64_t t = 0; t < taps; ++t) {
                const std::int64_t off = (o * ci + i) * taps + t;
                const double w0 = rk.w[0][off], w1 = rk.w[1][off], w2 = rk.w[2][off],
                             w3 = rk.w[3][off], w4 = rk.w[4][off], w5 = rk.w[5][off];
                put(0, 0, o, i, t, w0);
                put(0, 1, o, i, t, -w1);
                put(0, 2, o, i, t, -w2);
                put(0, 3, o, i, t, -w3);
                const Matrix3 r = quaternion_rotation_matrix({w0, w1, w2, w3}, rk.epsilon);
                for (int row = 0; row < 3; ++row) {
                    put(row + 1, 0, o, i, t, w5);
                    for (int col = 0; col < 3; ++col) put(row + 1, col + 1, o, i, t, w4 * r[row][col]);
                }
            }
        }
    }
    return K;
}

// Symmetric eigendecomposition by cyclic Jacobi rotations; a[k][k] input
// row-major, returns eigenvalues and column eigenvectors.
inline void sym_eig(const double* a_in, int k, double* eigvals, double* eigvecs) {
    std::vector<double> a(a_in, a_in + static_cast<std::size_t>(k) * k);
    for (int i = 0; i < k * k; ++i) eigvecs[i] = 0.0;
    for (int i = 0; i < k; ++i) eigvecs[i * k + i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j) off += a[i * k + j] * a[i * k + j];
        if (off < 1e-32) break;
        for (int p = 0; p < k; ++p) {
            for (int q = p + 1; q < k; ++q) {
                if (std::abs(a[p * k + q]) < 1e-300) continue;
                const double theta = 0.5 * std::atan2(2.0 * a[p * k + q], a[q * k + q] - a[p * k + p]);
                const double c = std::cos(theta), s = std::sin(theta);
                for (int m = 0; m < k; ++m) {
                    const double ap = a[m * k + p], aq = a[m * k + q];
                    a[m * k + p] = c * ap - s * aq;
                    a[m * k + q] = s * ap + c * aq;
                }
                for (int m = 0; m < k; ++m) {
                    const double ap = a[p * k + m], aq = a[q * k + m];
                    a[p * k + m] = c * ap - s * aq;
                    a[q * k + m] = s * ap + c * aq;
                }
                for (int m = 0; m < k; ++m) {
                    const double up = eigvecs[m * k + p], uq = eigvecs[m * k + q];
                    eigvecs[m * k + p] = c * up - s * uq;
                    eigvecs[m * k + q] = s * up + c * uq;
                }
            }
        }
    }
    for (int i = 0; i < k; ++i) eigvals[i] = a[i * k + i];
}

// (V)^{-1/2} with eigenvalues clamped at eps; PSD-safe.
inline void sym_inv_sqrt(const double* v, int k, double eps, double* out) {
    std::vector<double> lam(k), u(static_cast<std::size_t>(k) * k);
    sym_eig(v, k, lam.data(), u.data());
    for (int i = 0; i < k * k; ++i) out[i] = 0.0;
    for (int i = 0; i < k; ++i) {
        const double inv_sqrt = 1.0 / std::sqrt(std::max(lam[i], eps));
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < k; ++c) out[r * k + c] += u[r * k + i] * inv_sqrt * u[c * k + i];
    }
}

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

inline double gelu_grad(double x) {
    const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)) + x * phi;
}

}  // namespace kernels

namespace detail {

inline void check_conv_inputs(const MultivectorField& f, const Signature& ksig,
                              const std::vector<std::int64_t>& ksize, std::int64_t cin) {
    if (f.signature != ksig)
        throw std::invalid_argument("clifford conv: field/kernel signature mismatch");
    if (f.channels() != cin)
        throw std::invalid_argument("clifford conv: channel count mismatch");
    if (ksize.size() != f.spatial_rank())
        throw std::invalid_argument("clifford conv: kernel rank mismatch");
    const auto spatial = f.spatial_shape();
    for (std::size_t d = 0; d < ksize.size(); ++d)
        if (ksize[d] > spatial[d])
            throw std::invalid_argument("clifford conv: kernel larger than field");
}

inline MultivectorField run_matrix_conv(const MultivectorField& f, const Tensor& K,
                                        const std::vector<std::int64_t>& ksize, std::int64_t cout,
                                        Padding padding, std::int64_t stride) {
    kernels::ConvShape shape{f.spatial_shape(), ksize, f.blades() * f.channels(),
                             f.blades() * cout, padding, stride};
    MultivectorField out(f.signature, cout, shape.out_spatial(), f.spacing);
    kernels::matrix_conv_forward(shape, f.data.data(), K.data(), out.data.data());
    return out;
}

}  // namespace detail

// Clifford convolution: the per-tap scalar product replaced by the
// geometric product, realized as one dense blade-mixing convolution
// (cross-correlation orientation).
inline MultivectorField clifford_conv(const MultivectorField& f, const CliffordKernel& k,
                                      Padding padding = Padding::periodic, std::int64_t stride = 1) {
    k.validate();
    detail::check_conv_inputs(f, k.signature, k.ksize(), k.cin());
    const Tensor K = kernels::expand_blade_kernel(k.signature, k.weights);
    MultivectorField out = detail::run_matrix_conv(f, K, k.ksize(), k.cout(), padding, stride);
    if (k.bias) {
        const std::int64_t npix = out.spatial_numel();
        for (std::int64_t b = 0; b < out.blades(); ++b)
            for (std::int64_t c = 0; c < out.channels(); ++c) {
                const double add = (*k.bias)[b * out.channels() + c];
                double* plane = out.plane(b, c);
                for (std::int64_t i = 0; i < npix; ++i) plane[i] += add;
            }
    }
    return out;
}

inline MultivectorField clifford_conv2d(const MultivectorField& f, const CliffordKernel& k,
                                        Padding padding = Padding::periodic, std::int64_t stride = 1) {
    if (f.spatial_rank() != 2) throw std::invalid_argument("clifford_conv2d: need 2 spatial axes");
    return clifford_conv(f, k, padding, stride);
}

inline MultivectorField clifford_conv3d(const MultivectorField& f, const CliffordKernel& k,
                                        Padding padding = Padding::periodic, std::int64_t stride = 1) {
    if (f.spatial_rank() != 3) throw std::invalid_argument("clifford_conv3d: need 3 spatial axes");
    return clifford_conv(f, k, padding, stride);
}

// Rotational Clifford convolution: scalar row [W0, -W1, -W2, -W3], a
// learned rotation scale W4 on the quaternion rotation of the vector part,
// and a scalar-to-vector coupling W5.
inline MultivectorField rotational_clifford_conv2d(const MultivectorField& f, const RotationalKernel& k,
                                                   Padding padding = Padding::periodic,
                                                   std::int64_t stride = 1) {
    if (f.signature.blade_count() != 4)
        throw std::invalid_argument("rotational_clifford_conv2d: G^2 field required");
    if (f.spatial_rank() != 2)
        throw std::invalid_argument("rotational_clifford_conv2d: need 2 spatial axes");
    detail::check_conv_inputs(f, f.signature, k.ksize(), k.cin());
    const Tensor K = kernels::expand_rotational_kernel(k);
    return detail::run_matrix_conv(f, K, k.ksize(), k.cout(), padding, stride);
}

namespace detail {

// Gathered corner-block frequency index: position a in [0, 2m) maps to
// mode a for the low block and M - 2m + a for the high block.
inline std::int64_t corner_mode(std::int64_t a, std::int64_t m, std::int64_t M) {
    return a < m ? a : M - 2 * m + a;
}

}  // namespace detail

// Clifford Fourier layer core: blade-wise Fourier modes, per retained
// mode the geometric-product expansion evaluated over complex scalars
// (multivector weights with complex blade coefficients), zeros elsewhere,
// inverse transform. Gathering follows the corner-block indexing.
inline MultivectorField clifford_spectral_conv(const MultivectorField& f, const SpectralWeights& w) {
    if (f.signature != w.signature)
        throw std::invalid_argument("clifford_spectral_conv: signature mismatch");
    if (f.channels() != w.cin())
        throw std::invalid_argument("clifford_spectral_conv: channel count mismatch");
    const auto spatial = f.spatial_shape();
    if (spatial.size() != w.modes.size())
        throw std::invalid_argument("clifford_spectral_conv: rank mismatch");
    for (std::size_t d = 0; d < spatial.size(); ++d)
        if (2 * w.modes[d] > spatial[d])
            throw std::invalid_argument("clifford_spectral_conv: mode cutoff exceeds Nyquist");

    const std::int64_t nb = f.signature.blade_count();
    const std::int64_t cin = f.channels(), cout = w.cout();
    const std::int64_t npix = f.spatial_numel();

    // Blade-wise forward modes (real input planes).
    std::vector<std::int64_t> grid_shape{nb * cin};
    for (auto s : spatial) grid_shape.push_back(s);
    ComplexGrid fhat(grid_shape);
    std::copy(f.data.data(), f.data.data() + nb * cin * npix, fhat.re.data());
    fhat = dft(fhat, false);

    std::int64_t nblock = 1;
    for (auto m : w.modes) nblock *= 2 * m;
    std::vector<std::int64_t> bstr(w.modes.size(), 1), sstr(spatial.size(), 1);
    for (int d = static_cast<int>(spatial.size()) - 2; d >= 0; --d) {
        bstr[d] = bstr[d + 1] * 2 * w.modes[d + 1];
        sstr[d] = sstr[d + 1] * spatial[d + 1];
    }

    std::vector<std::int64_t> out_shape{nb * cout};
    for (auto s : spatial) out_shape.push_back(s);
    ComplexGrid yhat(out_shape);

    const auto mix = kernels::blade_mixing(f.signature);
    for (std::int64_t blk = 0; blk < nblock; ++blk) {
        std::int64_t rem = blk, mode = 0;
        for (std::size_t d = 0; d < w.modes.size(); ++d) {
            const std::int64_t a = rem / bstr[d];
            rem %= bstr[d];
            mode += detail::corner_mode(a, w.modes[d], spatial[d]) * sstr[d];
        }
        for (std::int64_t co = 0; co < cout; ++co) {
            std::array<double, 8> acc_re{}, acc_im{};
            for (std::int64_t ci = 0; ci < cin; ++ci) {
                for (const auto& m : mix) {
                    const std::int64_t fi = (m.in_blade * cin + ci) * npix + mode;
                    const std::int64_t wi = ((m.kernel_blade * cout + co) * cin + ci) * nblock + blk;
                    const double ar = fhat.re[fi], ai = fhat.im[fi];
                    const double br = w.re[wi], bi = w.im[wi];
                    acc_re[m.out_blade] += m.sign * (ar * br - ai * bi);
                    acc_im[m.out_blade] += m.sign * (ar * bi + ai * br);
                }
            }
            for (std::int64_t b = 0; b < nb; ++b) {
                yhat.re[(b * cout + co) * npix + mode] = acc_re[b];
                yhat.im[(b * cout + co) * npix + mode] = acc_im[b];
            }
        }
    }

    const ComplexGrid back = dft(yhat, true);
    MultivectorField out(f.signature, cout, spatial, f.spacing);
    std::copy(back.re.data(), back.re.data() + nb * cout * npix, out.data.data());
    return out;
}

inline MultivectorField clifford_spectral_conv2d(const MultivectorField& f, const SpectralWeights& w) {
    if (f.spatial_rank() != 2) throw std::invalid_argument("clifford_spectral_conv2d: need 2 axes");
    return clifford_spectral_conv(f, w);
}

inline MultivectorField clifford_spectral_conv3d(const MultivectorField& f, const SpectralWeights& w) {
    if (f.spatial_rank() != 3) throw std::invalid_argument("clifford_spectral_conv3d: need 3 axes");
    return clifford_spectral_conv(f, w);
}

// Blade-wise GeLU.
inline MultivectorField clifford_gelu(const MultivectorField& f) {
    MultivectorField out = f;
    for (auto& v : out.data.vec()) v = kernels::gelu(v);
    return out;
}

// CFNO layer body: nonlinearity(spectral(f) + conv1x1(f)).
inline MultivectorField clifford_fourier_block(const MultivectorField& f, const SpectralWeights& w_spectral,
                                               const CliffordKernel& w_conv, bool apply_gelu = true) {
    MultivectorField y = clifford_spectral_conv(f, w_spectral);
    y += clifford_conv(f, w_conv, Padding::periodic, 1);
    return apply_gelu ? clifford_gelu(y) : y;
}

struct GroupNormResult {
    MultivectorField output;
    Tensor group_mean;  // [groups][nb]
    Tensor group_cov;   // [groups][nb][nb]
};

// Whitens blade components per channel group: subtract the mean
// multivector, multiply by cov^{-1/2} (eigenvalues clamped at eps), then
// apply the learnable gamma matrix and beta shift.
inline GroupNormResult clifford_groupnorm_stats(const MultivectorField& f, const CliffordNormState& st,
                                                std::int64_t groups) {
    const std::int64_t C = f.channels();
    if (groups < 1 || C % groups != 0)
        throw std::invalid_argument("clifford_groupnorm: channels must be divisible by groups");
    const std::int64_t nb = f.blades();
    const std::int64_t npix = f.spatial_numel();
    const std::int64_t gc = C / groups;
    const double n = static_cast<double>(gc * npix);

    GroupNormResult res{f.like_zeros(), Tensor::zeros({groups, nb}), Tensor::zeros({groups, nb, nb})};
    std::vector<double> w(static_cast<std::size_t>(nb) * nb);
    for (std::int64_t g = 0; g < groups; ++g) {
        double* mean = res.group_mean.data() + g * nb;
        for (std::int64_t b = 0; b < nb; ++b) {
            double acc = 0.0;
            for (std::int64_t c = g * gc; c < (g + 1) * gc; ++c) {
                const double* plane = f.plane(b, c);
                for (std::int64_t i = 0; i < npix; ++i) acc += plane[i];
            }
            mean[b] = acc / n;
        }
        double* cov = res.group_cov.data() + g * nb * nb;
        for (std::int64_t b1 = 0; b1 < nb; ++b1)
            for (std::int64_t b2 = b1; b2 < nb; ++b2) {
                double acc = 0.0;
                for (std::int64_t c = g * gc; c < (g + 1) * gc; ++c) {
                    const double* p1 = f.plane(b1, c);
                    const double* p2 = f.plane(b2, c);
                    for (std::int64_t i = 0; i < npix; ++i)
                        acc += (p1[i] - mean[b1]) * (p2[i] - mean[b2]);
                }
                cov[b1 * nb + b2] = cov[b2 * nb + b1] = acc / n;
            }
        kernels::sym_inv_sqrt(cov, static_cast<int>(nb), st.eps, w.data());
        for (std::int64_t c = g * gc; c < (g + 1) * gc; ++c) {
            for (std::int64_t i = 0; i < npix; ++i) {
                std::array<double, 8> xc{}, wh{}, y{};
                for (std::int64_t b = 0; b < nb; ++b) xc[b] = f.plane(b, c)[i] - mean[b];
                for (std::int64_t b1 = 0; b1 < nb; ++b1) {
                    double acc = 0.0;
                    for (std::int64_t b2 = 0; b2 < nb; ++b2) acc += w[b1 * nb + b2] * xc[b2];
                    wh[b1] = acc;
                }
                for (std::int64_t b1 = 0; b1 < nb; ++b1) {
                    double acc = st.beta[c * nb + b1];
                    for (std::int64_t b2 = 0; b2 < nb; ++b2)
                        acc += st.gamma[(c * nb + b1) * nb + b2] * wh[b2];
                    y[b1] = acc;
                }
                for (std::int64_t b = 0; b < nb; ++b) res.output.plane(b, c)[i] = y[b];
            }
        }
    }
    return res;
}

inline MultivectorField clifford_groupnorm(const MultivectorField& f, const CliffordNormState& st,
                                           std::int64_t groups) {
    return clifford_groupnorm_stats(f, st, groups).output;
}

// Training-mode call: normalizes and folds batch moments into the running
// statistics (per-channel copies of the group moments).
inline MultivectorField clifford_groupnorm_train(const MultivectorField& f, CliffordNormState& st,
                                                 std::int64_t groups) {
    GroupNormResult res = clifford_groupnorm_stats(f, st, groups);
    const std::int64_t C = f.channels(), nb = f.blades(), gc = C / groups;
    for (std::int64_t c = 0; c < C; ++c) {
        const std::int64_t g = c / gc;
        for (std::int64_t b = 0; b < nb; ++b) {
            st.running_mean[c * nb + b] = (1.0 - st.momentum) * st.running_mean[c * nb + b] +
                                          st.momentum * res.group_mean[g * nb + b];
            for (std::int64_t b2 = 0; b2 < nb; ++b2)
                st.running_cov[(c * nb + b) * nb + b2] =
                    (1.0 - st.momentum) * st.running_cov[(c * nb + b) * nb + b2] +
                    st.momentum * res.group_cov[(g * nb + b) * nb + b2];
        }
    }
    return res.output;
}

enum class InitMode { standard, scaled3d };

// Uniform fan-in initialization: bound = sqrt(gain / fan_in) with
// fan_in = blades * cin * taps; scaled3d shrinks the bound by 1/8.
inline double init_bound(const Signature& sig, std::int64_t cin, std::int64_t taps, InitMode mode,
                         double gain = 1.0) {
    const double fan_in = static_cast<double>(sig.blade_count() * cin * taps);
    double bound = std::sqrt(gain / fan_in);
    if (mode == InitMode::scaled3d) bound /= 8.0;
    return bound;
}

inline CliffordKernel init_clifford(const Signature& sig, std::int64_t cout, std::int64_t cin,
                                    std::vector<std::int64_t> ksize, InitMode mode, std::uint64_t seed,
                                    double gain = 1.0) {
    sig.validate();
    std::vector<std::int64_t> shape{sig.blade_count(), cout, cin};
    std::int64_t taps = 1;
    for (auto k : ksize) {
        shape.push_back(k);
        taps *= k;
    }
    CliffordKernel kernel{sig, Tensor::zeros(shape), std::nullopt};
    const double bound = init_bound(sig, cin, taps, mode, gain);
    Rng rng(seed);
    for (auto& v : kernel.weights.vec()) v = rng.uniform(-bound, bound);
    return kernel;
}

inline RotationalKernel init_rotational(std::int64_t cout, std::int64_t cin,
                                        std::vector<std::int64_t> ksize, std::uint64_t seed,
                                        double gain = 1.0, double epsilon = 1e-12) {
    std::int64_t taps = 1;
    for (auto k : ksize) taps *= k;
    const double bound = init_bound(kCl20, cin, taps, InitMode::standard, gain);
    RotationalKernel rk;
    rk.epsilon = epsilon;
    Rng rng(seed);
    for (int i = 0; i < 6; ++i) {
        rk.w[i] = Tensor::zeros({cout, cin, ksize[0], ksize[1]});
        for (auto& v : rk.w[i].vec()) v = rng.uniform(-bound, bound);
    }
    return rk;
}

inline SpectralWeights init_spectral(const Signature& sig, std::int64_t cout, std::int64_t cin,
                                     std::vector<std::int64_t> modes, InitMode mode, std::uint64_t seed,
                                     double gain = 1.0) {
    SpectralWeights w = SpectralWeights::zeros(sig, cout, cin, std::move(modes));
    const double bound = init_bound(sig, cin, 1, mode, gain);
    Rng rng(seed);
    for (auto& v : w.re.vec()) v = rng.uniform(-bound, bound);
    for (auto& v : w.im.vec()) v = rng.uniform(-bound, bound);
    return w;
}

}  // namespace clifford
