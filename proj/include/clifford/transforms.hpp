#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "clifford/algebra.hpp"
#include "clifford/fields.hpp"
#include "clifford/tensor.hpp"

namespace clifford {

// Complex-valued grid stored as separate real and imaginary planes over
// [channel, spatial...].
struct ComplexGrid {
    Tensor re;
    Tensor im;

    ComplexGrid() = default;
    explicit ComplexGrid(std::vector<std::int64_t> shape) : re(shape), im(std::move(shape)) {}
    ComplexGrid(Tensor r, Tensor i) : re(std::move(r)), im(std::move(i)) {
        if (!re.same_shape(im)) throw std::invalid_argument("ComplexGrid: re/im shape mismatch");
    }
};

namespace detail {

inline bool is_pow2(std::int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place radix-2 FFT of one gathered line.
inline void fft_pow2(std::vector<double>& re, std::vector<double>& im, bool inverse) {
    const std::size_t n = re.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) {
            std::swap(re[i], re[j]);
            std::swap(im[i], im[j]);
        }
    }
    const double sgn = inverse ? 1.0 : -1.0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sgn * 2.0 * std::numbers::pi / static_cast<double>(len);
        const double wr = std::cos(ang), wi = std::sin(ang);
        for (std::size_t i = 0; i < n; i += len) {
            double cr = 1.0, ci = 0.0;
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::size_t a = i + k, b = i + k + len / 2;
                const double tr = re[b] * cr - im[b] * ci;
                const double ti = re[b] * ci + im[b] * cr;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
                const double ncr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = ncr;
            }
        }
    }
}

// Direct O(n^2) line transform for non power-of-two extents.
inline void dft_direct(std::vector<double>& re, std::vector<double>& im, bool inverse) {
    const std::size_t n = re.size();
    std::vector<double> or_(n, 0.0), oi(n, 0.0);
    const double sgn = inverse ? 1.0 : -1.0;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t m = 0; m < n; ++m) {
            const double ang = sgn * 2.0 * std::numbers::pi * static_cast<double>(k * m) / static_cast<double>(n);
            const double c = std::cos(ang), s = std::sin(ang);
            or_[k] += re[m] * c - im[m] * s;
            oi[k] += re[m] * s + im[m] * c;
        }
    }
    re.swap(or_);
    im.swap(oi);
}

inline void transform_axis(Tensor& re, Tensor& im, std::size_t axis, bool inverse) {
    const auto& shape = re.shape();
    const std::int64_t n = shape[axis];
    std::int64_t inner = 1;
    for (std::size_t d = axis + 1; d < shape.size(); ++d) inner *= shape[d];
    std::int64_t outer = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= shape[d];

    std::vector<double> lr(n), li(n);
    for (std::int64_t o = 0; o < outer; ++o) {
        for (std::int64_t i = 0; i < inner; ++i) {
            const std::int64_t base = o * n * inner + i;
            for (std::int64_t k = 0; k < n; ++k) {
                lr[k] = re[base + k * inner];
                li[k] = im[base + k * inner];
            }
            if (is_pow2(n))
                fft_pow2(lr, li, inverse);
            else
                dft_direct(lr, li, inverse);
            const double scale = inverse ? 1.0 / static_cast<double>(n) : 1.0;
            for (std::int64_t k = 0; k < n; ++k) {
                re[base + k * inner] = lr[k] * scale;
                im[base + k * inner] = li[k] * scale;
            }
        }
    }
}

}  // namespace detail

// Separable DFT over all spatial axes (every axis after the channel axis).
// Convention: unnormalized forward, 1/N-scaled inverse.
inline ComplexGrid dft(const ComplexGrid& g, bool inverse) {
    ComplexGrid out = g;
    for (std::size_t axis = 1; axis < out.re.rank(); ++axis)
        detail::transform_axis(out.re, out.im, axis, inverse);
    return out;
}

inline ComplexGrid dft_2d(const ComplexGrid& g, bool inverse) {
    if (g.re.rank() != 3) throw std::invalid_argument("dft_2d: expected [channel, H, W] grid");
    return dft(g, inverse);
}

inline ComplexGrid dft_3d(const ComplexGrid& g, bool inverse) {
    if (g.re.rank() != 4) throw std::invalid_argument("dft_3d: expected [channel, D, H, W] grid");
    return dft(g, inverse);
}

// Clifford Fourier spectrum: one real multivector coefficient vector per
// frequency, axes [blade, channel, frequency...]. The forward transform is
// unnormalized, the inverse carries the 1/N factor.
struct CliffordSpectrum {
    Signature signature;
    Tensor coeff;

    std::int64_t blades() const { return coeff.dim(0); }
    std::int64_t channels() const { return coeff.dim(1); }
    std::int64_t modes() const {
        std::int64_t n = 1;
        for (std::size_t i = 2; i < coeff.rank(); ++i) n *= coeff.dim(i);
        return n;
    }
    double* plane(std::int64_t blade, std::int64_t channel) {
        return coeff.data() + (blade * channels() + channel) * modes();
    }
    const double* plane(std::int64_t blade, std::int64_t channel) const {
        return coeff.data() + (blade * channels() + channel) * modes();
    }
};

namespace detail {

// Dual pairs (real blade, imaginary blade, sign of the imaginary part)
// realizing a = pair_re + pair_im * i_n per pair. The e1e3 storage
// orientation makes the e2 pair carry -f13.
inline std::vector<std::array<int, 3>> dual_pairs(const Signature& sig) {
    if (sig.blade_count() == 4) return {{0, 3, 1}, {1, 2, 1}};
    return {{0, 7, 1}, {1, 6, 1}, {2, 5, -1}, {3, 4, 1}};
}

}  // namespace detail

// 2D Clifford Fourier transform: two classical DFTs over the spinor pair
// (f0 + f12 i2) and vector pair (f1 + f2 i2), reassembled blade-wise.
inline CliffordSpectrum clifford_ft(const MultivectorField& f) {
    const auto pairs = detail::dual_pairs(f.signature);
    CliffordSpectrum spec{f.signature, Tensor::zeros(f.data.shape())};
    const std::int64_t npix = f.spatial_numel();
    std::vector<std::int64_t> grid_shape{f.channels()};
    for (auto s : f.spatial_shape()) grid_shape.push_back(s);
    for (const auto& [re_blade, im_blade, sign] : pairs) {
        ComplexGrid pair(grid_shape);
        for (std::int64_t c = 0; c < f.channels(); ++c) {
            const double* pr = f.plane(re_blade, c);
            const double* pi = f.plane(im_blade, c);
            for (std::int64_t i = 0; i < npix; ++i) {
                pair.re[c * npix + i] = pr[i];
                pair.im[c * npix + i] = sign * pi[i];
            }
        }
        const ComplexGrid hat = dft(pair, false);
        for (std::int64_t c = 0; c < f.channels(); ++c) {
            double* sr = spec.plane(re_blade, c);
            double* si = spec.plane(im_blade, c);
            for (std::int64_t i = 0; i < npix; ++i) {
                sr[i] = hat.re[c * npix + i];
                si[i] = sign * hat.im[c * npix + i];
            }
        }
    }
    return spec;
}

inline MultivectorField clifford_ift(const CliffordSpectrum& spec,
                                     const std::vector<double>& spacing = {}) {
    const auto pairs = detail::dual_pairs(spec.signature);
    std::vector<std::int64_t> spatial{spec.coeff.shape().begin() + 2, spec.coeff.shape().end()};
    MultivectorField f(spec.signature, spec.channels(), spatial, spacing);
    const std::int64_t npix = f.spatial_numel();
    std::vector<std::int64_t> grid_shape{spec.channels()};
    for (auto s : spatial) grid_shape.push_back(s);
    for (const auto& [re_blade, im_blade, sign] : pairs) {
        ComplexGrid pair(grid_shape);
        for (std::int64_t c = 0; c < spec.channels(); ++c) {
            const double* sr = spec.plane(re_blade, c);
            const double* si = spec.plane(im_blade, c);
            for (std::int64_t i = 0; i < npix; ++i) {
                pair.re[c * npix + i] = sr[i];
                pair.im[c * npix + i] = sign * si[i];
            }
        }
        const ComplexGrid back = dft(pair, true);
        for (std::int64_t c = 0; c < spec.channels(); ++c) {
            double* pr = f.plane(re_blade, c);
            double* pi = f.plane(im_blade, c);
            for (std::int64_t i = 0; i < npix; ++i) {
                pr[i] = back.re[c * npix + i];
                pi[i] = sign * back.im[c * npix + i];
            }
        }
    }
    return f;
}

inline CliffordSpectrum clifford_ft_2d(const MultivectorField& f) {
    if (f.signature.blade_count() != 4)
        throw std::invalid_argument("clifford_ft_2d: field must carry 4 blades (G^2)");
    return clifford_ft(f);
}

inline MultivectorField clifford_ift_2d(const CliffordSpectrum& s) {
    if (s.signature.blade_count() != 4)
        throw std::invalid_argument("clifford_ift_2d: spectrum must carry 4 blades (G^2)");
    return clifford_ift(s);
}

inline CliffordSpectrum clifford_ft_3d(const MultivectorField& f) {
    if (f.signature.blade_count() != 8)
        throw std::invalid_argument("clifford_ft_3d: field must carry 8 blades (G^3)");
    return clifford_ft(f);
}

inline MultivectorField clifford_ift_3d(const CliffordSpectrum& s) {
    if (s.signature.blade_count() != 8)
        throw std::invalid_argument("clifford_ift_3d: spectrum must carry 8 blades (G^3)");
    return clifford_ift(s);
}

enum class KernelKind { spinor, vector, full };

// Direct spatial sum out(x) = sum_y f(y) k(y - x) with periodic wrap,
// the geometric product per tap. Oracle side of the convolution theorems.
inline MultivectorField circular_convolve_direct(const MultivectorField& f, const MultivectorField& k,
                                                 KernelKind kind) {
    if (f.spatial_shape() != k.spatial_shape())
        throw std::invalid_argument("circular_convolve_direct: field/kernel grid mismatch");
    if (f.signature != k.signature)
        throw std::invalid_argument("circular_convolve_direct: signature mismatch");
    if (k.channels() != 1)
        throw std::invalid_argument("circular_convolve_direct: kernel must have one channel");
    MultivectorField km = k;
    if (f.signature.blade_count() == 4 && kind != KernelKind::full) {
        const std::vector<int> keep =
            kind == KernelKind::spinor ? std::vector<int>{0, 3} : std::vector<int>{1, 2};
        for (int b = 0; b < 4; ++b) {
            bool kept = false;
            for (int kb : keep) kept |= (kb == b);
            if (!kept)
                for (std::int64_t i = 0; i < km.spatial_numel(); ++i) km.plane(b, 0)[i] = 0.0;
        }
    }

    const BladeTable table = build_blade_table(f.signature);
    const int nb = f.signature.blade_count();
    MultivectorField out = f.like_zeros();
    const auto spatial = f.spatial_shape();
    const std::int64_t npix = f.spatial_numel();
    std::vector<std::int64_t> strides(spatial.size(), 1);
    for (int d = static_cast<int>(spatial.size()) - 2; d >= 0; --d)
        strides[d] = strides[d + 1] * spatial[d + 1];

    std::vector<double> fv(nb), kv(nb), prod(nb);
    std::vector<std::int64_t> xi(spatial.size()), yi(spatial.size());
    for (std::int64_t c = 0; c < f.channels(); ++c) {
        for (std::int64_t x = 0; x < npix; ++x) {
            std::int64_t rem = x;
            for (std::size_t d = 0; d < spatial.size(); ++d) {
                xi[d] = rem / strides[d];
                rem %= strides[d];
            }
            std::vector<double> acc(nb, 0.0);
            for (std::int64_t y = 0; y < npix; ++y) {
                rem = y;
                std::int64_t koff = 0;
                for (std::size_t d = 0; d < spatial.size(); ++d) {
                    yi[d] = rem / strides[d];
                    rem %= strides[d];
                    koff += detail::wrap(yi[d] - xi[d], spatial[d]) * strides[d];
                }
                for (int b = 0; b < nb; ++b) {
                    fv[b] = f.plane(b, c)[y];
                    kv[b] = km.plane(b, 0)[koff];
                }
                geometric_product(table, fv, kv, prod);
                for (int b = 0; b < nb; ++b) acc[b] += prod[b];
            }
            for (int b = 0; b < nb; ++b) out.plane(b, c)[x] = acc[b];
        }
    }
    return out;
}

// Frequency negation xi -> -xi (mod grid), the dagger of the convolution
// theorems applied to a whole spectrum.
inline CliffordSpectrum spectrum_negate_frequency(const CliffordSpectrum& s) {
    CliffordSpectrum out{s.signature, Tensor::zeros(s.coeff.shape())};
    std::vector<std::int64_t> freq{s.coeff.shape().begin() + 2, s.coeff.shape().end()};
    std::vector<std::int64_t> strides(freq.size(), 1);
    for (int d = static_cast<int>(freq.size()) - 2; d >= 0; --d) strides[d] = strides[d + 1] * freq[d + 1];
    const std::int64_t modes = s.modes();
    for (std::int64_t b = 0; b < s.blades(); ++b) {
        for (std::int64_t c = 0; c < s.channels(); ++c) {
            const double* src = s.plane(b, c);
            double* dst = out.plane(b, c);
            for (std::int64_t m = 0; m < modes; ++m) {
                std::int64_t neg = 0, rem = m;
                for (std::size_t d = 0; d < freq.size(); ++d) {
                    const std::int64_t fd = rem / strides[d];
                    rem %= strides[d];
                    neg += detail::wrap(-fd, freq[d]) * strides[d];
                }
                dst[neg] = src[m];
            }
        }
    }
    return out;
}

// Per-mode geometric product of two spectra, with optional frequency
// negation of the right factor (the dagger of the convolution theorems).
inline CliffordSpectrum spectrum_pointwise_gp(const CliffordSpectrum& a, const CliffordSpectrum& b,
                                              bool negate_b_frequency) {
    if (a.signature != b.signature)
        throw std::invalid_argument("spectrum_pointwise_gp: signature mismatch");
    const BladeTable table = build_blade_table(a.signature);
    const int nb = a.signature.blade_count();
    CliffordSpectrum out{a.signature, Tensor::zeros(a.coeff.shape())};
    std::vector<std::int64_t> freq{a.coeff.shape().begin() + 2, a.coeff.shape().end()};
    std::vector<std::int64_t> strides(freq.size(), 1);
    for (int d = static_cast<int>(freq.size()) - 2; d >= 0; --d) strides[d] = strides[d + 1] * freq[d + 1];
    const std::int64_t modes = a.modes();
    std::vector<double> av(nb), bv(nb), prod(nb);
    for (std::int64_t c = 0; c < a.channels(); ++c) {
        for (std::int64_t m = 0; m < modes; ++m) {
            std::int64_t mb = m;
            if (negate_b_frequency) {
                mb = 0;
                std::int64_t rem = m;
                for (std::size_t d = 0; d < freq.size(); ++d) {
                    const std::int64_t fd = rem / strides[d];
                    rem %= strides[d];
                    mb += detail::wrap(-fd, freq[d]) * strides[d];
                }
            }
            for (int bl = 0; bl < nb; ++bl) {
                av[bl] = a.plane(bl, c)[m];
                bv[bl] = b.plane(bl, c % b.channels())[mb];
            }
            geometric_product(table, av, bv, prod);
            for (int bl = 0; bl < nb; ++bl) out.plane(bl, c)[m] = prod[bl];
        }
    }
    return out;
}

}  // namespace clifford
