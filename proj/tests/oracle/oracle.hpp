#pragma once

// Brute-force reference implementations used only by tests. Nothing here
// shares computation with the production headers: blade products are
// derived at string level, transforms are literal double sums, rotations
// go through explicit Hamilton-product conjugation.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "clifford/algebra.hpp"
#include "clifford/fields.hpp"
#include "clifford/tensor.hpp"
#include "clifford/transforms.hpp"

namespace clifford::oracle {

struct SymbolicTerm {
    std::string result;  // sorted index string, "" for the scalar blade
    int sign = 1;
};

// Product of two basis blades written as index strings ("13" = e1e3):
// bubble-sorts the concatenation counting transpositions, then cancels
// doubled indices with the squared sign of the metric.
inline SymbolicTerm symbolic_blade_product(const std::string& a, const std::string& b, int p) {
    std::string word = a + b;
    int sign = 1;
    bool swapped = true;
    while (swapped) {
        swapped = false;
        for (std::size_t i = 0; i + 1 < word.size(); ++i) {
            if (word[i] > word[i + 1]) {
                std::swap(word[i], word[i + 1]);
                sign = -sign;
                swapped = true;
            }
        }
    }
    std::string reduced;
    for (std::size_t i = 0; i < word.size();) {
        if (i + 1 < word.size() && word[i] == word[i + 1]) {
            const int index = word[i] - '0';  // 1-based
            if (index > p) sign = -sign;
            i += 2;
        } else {
            reduced += word[i];
            ++i;
        }
    }
    return {reduced, sign};
}

inline std::string blade_string(unsigned mask) {
    std::string s;
    for (int i = 0; i < 8; ++i)
        if (mask & (1u << i)) s += static_cast<char>('1' + i);
    return s;
}

// Canonical blade order [1, e1, e2, (e3), e12, (e13), (e23), (e123)]
// spelled out as strings, independent of the production bit tricks.
inline std::vector<std::string> blade_strings(int n) {
    std::vector<std::string> out{""};
    if (n >= 1) out.push_back("1");
    if (n >= 2) out.push_back("2");
    if (n >= 3) out.push_back("3");
    if (n == 2) out.push_back("12");
    if (n == 3) {
        out.push_back("12");
        out.push_back("13");
        out.push_back("23");
    }
    if (n >= 3) out.push_back("123");
    return out;
}

// Table-free geometric product: sums over all blade pairs via
// symbolic_blade_product. O(4^n) per product.
inline std::vector<double> oracle_gp(const Signature& sig, const std::vector<double>& a,
                                     const std::vector<double>& b) {
    const auto blades = blade_strings(sig.dim());
    std::vector<double> out(blades.size(), 0.0);
    for (std::size_t i = 0; i < blades.size(); ++i) {
        for (std::size_t j = 0; j < blades.size(); ++j) {
            const SymbolicTerm term = symbolic_blade_product(blades[i], blades[j], sig.p);
            const auto it = std::find(blades.begin(), blades.end(), term.result);
            out[static_cast<std::size_t>(it - blades.begin())] += term.sign * a[i] * b[j];
        }
    }
    return out;
}

// Product expansion with complex scalars, same symbolic term derivation.
inline void oracle_gp_complex(const Signature& sig, const std::vector<double>& ar,
                              const std::vector<double>& ai, const std::vector<double>& br,
                              const std::vector<double>& bi, std::vector<double>& out_re,
                              std::vector<double>& out_im) {
    const auto blades = blade_strings(sig.dim());
    out_re.assign(blades.size(), 0.0);
    out_im.assign(blades.size(), 0.0);
    for (std::size_t i = 0; i < blades.size(); ++i) {
        for (std::size_t j = 0; j < blades.size(); ++j) {
            const SymbolicTerm term = symbolic_blade_product(blades[i], blades[j], sig.p);
            const auto it = std::find(blades.begin(), blades.end(), term.result);
            const std::size_t k = static_cast<std::size_t>(it - blades.begin());
            out_re[k] += term.sign * (ar[i] * br[j] - ai[i] * bi[j]);
            out_im[k] += term.sign * (ar[i] * bi[j] + ai[i] * br[j]);
        }
    }
}

// Literal convolution loop: for every output position and tap, one
// symbolic geometric product. Kernel weights are [blade][cout][cin][k...].
inline MultivectorField oracle_conv(const MultivectorField& f, const Tensor& weights,
                                    bool periodic) {
    const int nb = f.signature.blade_count();
    const std::int64_t cout = weights.dim(1);
    const std::int64_t cin = weights.dim(2);
    const std::size_t srank = f.spatial_rank();
    std::vector<std::int64_t> ksize{weights.shape().begin() + 3, weights.shape().end()};
    const auto spatial = f.spatial_shape();

    MultivectorField out(f.signature, cout, spatial, f.spacing);
    std::vector<std::int64_t> strides(srank, 1);
    for (int d = static_cast<int>(srank) - 2; d >= 0; --d) strides[d] = strides[d + 1] * spatial[d + 1];
    std::int64_t ktaps = 1;
    for (auto k : ksize) ktaps *= k;
    std::vector<std::int64_t> kstrides(srank, 1);
    for (int d = static_cast<int>(srank) - 2; d >= 0; --d) kstrides[d] = kstrides[d + 1] * ksize[d + 1];

    std::vector<double> fv(nb), wv(nb);
    for (std::int64_t co = 0; co < cout; ++co) {
        for (std::int64_t x = 0; x < f.spatial_numel(); ++x) {
            std::vector<double> acc(nb, 0.0);
            for (std::int64_t t = 0; t < ktaps; ++t) {
                // Tap offset relative to the (odd) kernel center.
                std::int64_t src = 0;
                bool inside = true;
                std::int64_t remx = x, remt = t;
                for (std::size_t d = 0; d < srank; ++d) {
                    const std::int64_t xd = remx / strides[d];
                    remx %= strides[d];
                    const std::int64_t td = remt / kstrides[d] - ksize[d] / 2;
                    remt %= kstrides[d];
                    std::int64_t sd = xd + td;
                    if (periodic) {
                        sd = ((sd % spatial[d]) + spatial[d]) % spatial[d];
                    } else if (sd < 0 || sd >= spatial[d]) {
                        inside = false;
                        break;
                    }
                    src += sd * strides[d];
                }
                if (!inside) continue;
                for (std::int64_t ci = 0; ci < cin; ++ci) {
                    for (int b = 0; b < nb; ++b) {
                        fv[b] = f.plane(b, ci)[src];
                        wv[b] = weights[((b * cout + co) * cin + ci) * ktaps + t];
                    }
                    const auto prod = oracle_gp(f.signature, fv, wv);
                    for (int b = 0; b < nb; ++b) acc[b] += prod[b];
                }
            }
            for (int b = 0; b < nb; ++b) out.plane(b, co)[x] = acc[b];
        }
    }
    return out;
}

// Direct double (or triple) sum DFT over the spatial axes.
inline ComplexGrid oracle_dft(const ComplexGrid& g, bool inverse) {
    const auto& shape = g.re.shape();
    const std::int64_t channels = shape[0];
    std::vector<std::int64_t> spatial{shape.begin() + 1, shape.end()};
    std::int64_t npix = 1;
    for (auto s : spatial) npix *= s;
    std::vector<std::int64_t> strides(spatial.size(), 1);
    for (int d = static_cast<int>(spatial.size()) - 2; d >= 0; --d)
        strides[d] = strides[d + 1] * spatial[d + 1];

    ComplexGrid out(shape);
    const double sgn = inverse ? 1.0 : -1.0;
    for (std::int64_t c = 0; c < channels; ++c) {
        for (std::int64_t k = 0; k < npix; ++k) {
            double sr = 0.0, si = 0.0;
            for (std::int64_t m = 0; m < npix; ++m) {
                double phase = 0.0;
                std::int64_t rk = k, rm = m;
                for (std::size_t d = 0; d < spatial.size(); ++d) {
                    const std::int64_t kd = rk / strides[d];
                    const std::int64_t md = rm / strides[d];
                    rk %= strides[d];
                    rm %= strides[d];
                    phase += static_cast<double>(kd * md) / static_cast<double>(spatial[d]);
                }
                const double ang = sgn * 2.0 * std::numbers::pi * phase;
                const double cr = std::cos(ang), ci = std::sin(ang);
                const double xr = g.re[c * npix + m], xi = g.im[c * npix + m];
                sr += xr * cr - xi * ci;
                si += xr * ci + xi * cr;
            }
            const double scale = inverse ? 1.0 / static_cast<double>(npix) : 1.0;
            out.re[c * npix + k] = sr * scale;
            out.im[c * npix + k] = si * scale;
        }
    }
    return out;
}

// Vector part of q v q^-1 via explicit Hamilton products.
inline std::array<double, 3> rotate_by_conjugation(const std::array<double, 4>& q,
                                                   const std::array<double, 3>& v) {
    auto ham = [](const std::array<double, 4>& a, const std::array<double, 4>& b) {
        return std::array<double, 4>{a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
                                     a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
                                     a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
                                     a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]};
    };
    const double n2 = q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3];
    const std::array<double, 4> qinv{q[0] / n2, -q[1] / n2, -q[2] / n2, -q[3] / n2};
    const std::array<double, 4> qv = ham(q, {0.0, v[0], v[1], v[2]});
    const std::array<double, 4> r = ham(qv, qinv);
    return {r[1], r[2], r[3]};
}

// Covariance whitening by explicit principal square root: cyclic Jacobi
// eigendecomposition, eigenvalues floored at eps.
inline std::vector<double> whiten_matrix(const std::vector<double>& cov, int k, double eps) {
    std::vector<double> a = cov;
    std::vector<double> u(static_cast<std::size_t>(k) * k, 0.0);
    for (int i = 0; i < k; ++i) u[i * k + i] = 1.0;
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j) off += a[i * k + j] * a[i * k + j];
        if (off < 1e-30) break;
        for (int i = 0; i < k; ++i) {
            for (int j = i + 1; j < k; ++j) {
                if (std::abs(a[i * k + j]) < 1e-300) continue;
                const double theta = 0.5 * std::atan2(2.0 * a[i * k + j], a[j * k + j] - a[i * k + i]);
                const double c = std::cos(theta), s = std::sin(theta);
                for (int m = 0; m < k; ++m) {
                    const double ai = a[m * k + i], aj = a[m * k + j];
                    a[m * k + i] = c * ai - s * aj;
                    a[m * k + j] = s * ai + c * aj;
                }
                for (int m = 0; m < k; ++m) {
                    const double ai = a[i * k + m], aj = a[j * k + m];
                    a[i * k + m] = c * ai - s * aj;
                    a[j * k + m] = s * ai + c * aj;
                }
                for (int m = 0; m < k; ++m) {
                    const double ui = u[m * k + i], uj = u[m * k + j];
                    u[m * k + i] = c * ui - s * uj;
                    u[m * k + j] = s * ui + c * uj;
                }
            }
        }
    }
    std::vector<double> w(static_cast<std::size_t>(k) * k, 0.0);
    for (int i = 0; i < k; ++i) {
        const double lam = std::max(a[i * k + i], eps);
        const double inv_sqrt = 1.0 / std::sqrt(lam);
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < k; ++c) w[r * k + c] += u[r * k + i] * inv_sqrt * u[c * k + i];
    }
    return w;
}

}  // namespace clifford::oracle
