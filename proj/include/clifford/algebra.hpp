#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace clifford {

// Metric signature (p, q): p basis vectors square to +1, q to -1.
// Supported range is 1 <= p+q <= 3.
struct Signature {
    int p = 0;
    int q = 0;

    constexpr int dim() const { return p + q; }
    constexpr int blade_count() const { return 1 << (p + q); }

    constexpr bool operator==(const Signature&) const = default;

    void validate() const {
        if (p < 0 || q < 0 || dim() < 1 || dim() > 3)
            throw std::invalid_argument("Signature: unsupported (p,q)=(" + std::to_string(p) + "," +
                                        std::to_string(q) + "), need p,q >= 0 and 1 <= p+q <= 3");
    }

    std::string str() const { return "Cl(" + std::to_string(p) + "," + std::to_string(q) + ")"; }
};

inline constexpr Signature kCl01{0, 1};
inline constexpr Signature kCl20{2, 0};
inline constexpr Signature kCl02{0, 2};
inline constexpr Signature kCl30{3, 0};

// A blade is a bit mask over generating basis vectors: bit i set means
// e_{i+1} participates. Storage order is canonical: blades sorted by
// (grade, mask), i.e. [1, e1, e2, (e3), e12, (e13), (e23), (e123)].
using BladeMask = unsigned;

inline int blade_grade(BladeMask m) { return std::popcount(m); }

inline std::vector<BladeMask> canonical_blades(int n) {
    std::vector<BladeMask> blades;
    for (int g = 0; g <= n; ++g)
        for (BladeMask m = 0; m < (1u << n); ++m)
            if (blade_grade(m) == g) blades.push_back(m);
    return blades;
}

// Canonical storage index of a blade mask (inverse of canonical_blades).
inline int blade_index(BladeMask m, int n) {
    int idx = 0;
    const int g = blade_grade(m);
    for (BladeMask o = 0; o < (1u << n); ++o)
        if (blade_grade(o) < g || (blade_grade(o) == g && o < m)) ++idx;
    return idx;
}

// Sign-dressed product of two basis blades: sorts the concatenated index
// list counting transpositions, then substitutes e_k^2 = +1 (k <= p) or -1.
inline int blade_product_sign(BladeMask a, BladeMask b, const Signature& sig) {
    int swaps = 0;
    for (int j = 0; j < sig.dim(); ++j) {
        if (!(b & (1u << j))) continue;
        const BladeMask higher = a & ~((2u << j) - 1u);
        swaps += std::popcount(higher);
    }
    int sign = (swaps % 2 == 0) ? 1 : -1;
    const BladeMask common = a & b;
    for (int k = 0; k < sig.dim(); ++k)
        if ((common & (1u << k)) && k >= sig.p) sign = -sign;
    return sign;
}

// Multiplication table over canonical blade indices.
struct BladeTable {
    struct Entry {
        int blade = 0;  // canonical index of the result blade
        int sign = 0;   // -1 or +1
    };

    Signature signature;
    std::vector<BladeMask> blades;   // canonical order
    std::vector<Entry> entries;      // row-major [i][j]

    const Entry& entry(int i, int j) const { return entries[i * signature.blade_count() + j]; }
    Entry& entry(int i, int j) { return entries[i * signature.blade_count() + j]; }
};

inline BladeTable build_blade_table(const Signature& sig) {
    sig.validate();
    const int n = sig.dim();
    const int count = sig.blade_count();
    BladeTable table;
    table.signature = sig;
    table.blades = canonical_blades(n);
    table.entries.resize(static_cast<std::size_t>(count) * count);
    for (int i = 0; i < count; ++i) {
        for (int j = 0; j < count; ++j) {
            const BladeMask a = table.blades[i];
            const BladeMask b = table.blades[j];
            table.entry(i, j) = {blade_index(a ^ b, n), blade_product_sign(a, b, sig)};
        }
    }
    return table;
}

// Generic table-driven geometric product on canonical coefficient spans.
inline void geometric_product(const BladeTable& table, std::span<const double> a,
                              std::span<const double> b, std::span<double> out) {
    const int count = table.signature.blade_count();
    if (static_cast<int>(a.size()) != count || static_cast<int>(b.size()) != count ||
        static_cast<int>(out.size()) != count)
        throw std::invalid_argument("geometric_product: coefficient count mismatch for " +
                                    table.signature.str());
    for (int k = 0; k < count; ++k) out[k] = 0.0;
    for (int i = 0; i < count; ++i) {
        if (a[i] == 0.0) continue;
        for (int j = 0; j < count; ++j) {
            const auto& e = table.entry(i, j);
            out[e.blade] += e.sign * a[i] * b[j];
        }
    }
}

// Dense G^2 element. Coefficient names follow the blade they multiply.
struct Multivector2 {
    double s = 0, e1 = 0, e2 = 0, e12 = 0;

    std::array<double, 4> coeffs() const { return {s, e1, e2, e12}; }
    static Multivector2 from_coeffs(std::span<const double> c) { return {c[0], c[1], c[2], c[3]}; }

    Multivector2 operator+(const Multivector2& o) const { return {s + o.s, e1 + o.e1, e2 + o.e2, e12 + o.e12}; }
    Multivector2 operator-(const Multivector2& o) const { return {s - o.s, e1 - o.e1, e2 - o.e2, e12 - o.e12}; }
    Multivector2 operator*(double c) const { return {s * c, e1 * c, e2 * c, e12 * c}; }
};

// Dense G^3 element; the e1e3 blade is stored in e1e3 orientation.
struct Multivector3 {
    double s = 0, e1 = 0, e2 = 0, e3 = 0, e12 = 0, e13 = 0, e23 = 0, e123 = 0;

    std::array<double, 8> coeffs() const { return {s, e1, e2, e3, e12, e13, e23, e123}; }
    static Multivector3 from_coeffs(std::span<const double> c) {
        return {c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]};
    }

    Multivector3 operator+(const Multivector3& o) const {
        return {s + o.s, e1 + o.e1, e2 + o.e2, e3 + o.e3, e12 + o.e12, e13 + o.e13, e23 + o.e23, e123 + o.e123};
    }
    Multivector3 operator-(const Multivector3& o) const {
        return {s - o.s, e1 - o.e1, e2 - o.e2, e3 - o.e3, e12 - o.e12, e13 - o.e13, e23 - o.e23, e123 - o.e123};
    }
    Multivector3 operator*(double c) const {
        return {s * c, e1 * c, e2 * c, e3 * c, e12 * c, e13 * c, e23 * c, e123 * c};
    }
};

// Closed-form Cl(2,0) / Cl(0,2) product.
inline Multivector2 geometric_product_2d(const Multivector2& a, const Multivector2& b,
                                         const Signature& sig) {
    if (sig == kCl20) {
        return {a.s * b.s + a.e1 * b.e1 + a.e2 * b.e2 - a.e12 * b.e12,
                a.s * b.e1 + a.e1 * b.s - a.e2 * b.e12 + a.e12 * b.e2,
                a.s * b.e2 + a.e1 * b.e12 + a.e2 * b.s - a.e12 * b.e1,
                a.s * b.e12 + a.e1 * b.e2 - a.e2 * b.e1 + a.e12 * b.s};
    }
    if (sig == kCl02) {
        return {a.s * b.s - a.e1 * b.e1 - a.e2 * b.e2 - a.e12 * b.e12,
                a.s * b.e1 + a.e1 * b.s + a.e2 * b.e12 - a.e12 * b.e2,
                a.s * b.e2 - a.e1 * b.e12 + a.e2 * b.s + a.e12 * b.e1,
                a.s * b.e12 + a.e1 * b.e2 - a.e2 * b.e1 + a.e12 * b.s};
    }
    throw std::invalid_argument("geometric_product_2d: unsupported signature " + sig.str() +
                                ", expected Cl(2,0) or Cl(0,2)");
}

// Closed-form Cl(3,0) product.
inline Multivector3 geometric_product_3d(const Multivector3& a, const Multivector3& b) {
    return {
        a.s * b.s + a.e1 * b.e1 + a.e2 * b.e2 + a.e3 * b.e3 - a.e12 * b.e12 - a.e13 * b.e13 -
            a.e23 * b.e23 - a.e123 * b.e123,
        a.s * b.e1 + a.e1 * b.s - a.e2 * b.e12 - a.e3 * b.e13 + a.e12 * b.e2 + a.e13 * b.e3 -
            a.e23 * b.e123 - a.e123 * b.e23,
        a.s * b.e2 + a.e1 * b.e12 + a.e2 * b.s - a.e3 * b.e23 - a.e12 * b.e1 + a.e13 * b.e123 +
            a.e23 * b.e3 + a.e123 * b.e13,
        a.s * b.e3 + a.e1 * b.e13 + a.e2 * b.e23 + a.e3 * b.s - a.e12 * b.e123 - a.e13 * b.e1 -
            a.e23 * b.e2 - a.e123 * b.e12,
        a.s * b.e12 + a.e1 * b.e2 - a.e2 * b.e1 + a.e3 * b.e123 + a.e12 * b.s - a.e13 * b.e23 +
            a.e23 * b.e13 + a.e123 * b.e3,
        a.s * b.e13 + a.e1 * b.e3 - a.e2 * b.e123 - a.e3 * b.e1 + a.e12 * b.e23 + a.e13 * b.s -
            a.e23 * b.e12 - a.e123 * b.e2,
        a.s * b.e23 + a.e1 * b.e123 + a.e2 * b.e3 - a.e3 * b.e2 - a.e12 * b.e13 + a.e13 * b.e12 +
            a.e23 * b.s + a.e123 * b.e1,
        a.s * b.e123 + a.e1 * b.e23 - a.e2 * b.e13 + a.e3 * b.e12 + a.e12 * b.e3 - a.e13 * b.e2 +
            a.e23 * b.e1 + a.e123 * b.s};
}

// Dual a* = a i_{p+q}: right-multiplication by the pseudoscalar.
inline void dual(const BladeTable& table, std::span<const double> a, std::span<double> out) {
    const int count = table.signature.blade_count();
    std::vector<double> pseudo(count, 0.0);
    pseudo[count - 1] = 1.0;  // highest-grade blade is last in canonical order
    geometric_product(table, a, pseudo, out);
}

inline Multivector2 dual(const Multivector2& a, const Signature& sig) {
    const BladeTable table = build_blade_table(sig);
    auto c = a.coeffs();
    std::array<double, 4> out{};
    dual(table, c, out);
    return Multivector2::from_coeffs(out);
}

inline Multivector3 dual(const Multivector3& a, const Signature& sig) {
    const BladeTable table = build_blade_table(sig);
    auto c = a.coeffs();
    std::array<double, 8> out{};
    dual(table, c, out);
    return Multivector3::from_coeffs(out);
}

struct InnerWedge {
    double inner = 0;
    double wedge = 0;
};

// For grade-1 inputs x, y in G^2: x y = <x,y> + (x ^ y) e1e2.
inline InnerWedge vector_inner_wedge(double x1, double x2, double y1, double y2) {
    return {x1 * y1 + x2 * y2, x1 * y2 - x2 * y1};
}

// Quaternion w0 + w1 i + w2 j + w3 k, isomorphic to Cl(0,2) under
// (1, i, j, k) <-> (1, e1, e2, e1e2).
struct Quaternion {
    double w0 = 0, w1 = 0, w2 = 0, w3 = 0;

    double norm_sq() const { return w0 * w0 + w1 * w1 + w2 * w2 + w3 * w3; }
    double norm() const { return std::sqrt(norm_sq()); }
    Quaternion conjugate() const { return {w0, -w1, -w2, -w3}; }

    Quaternion normalized(double epsilon = 0.0) const {
        const double n2 = norm_sq() + epsilon;
        if (n2 <= 0.0) throw std::invalid_argument("Quaternion: cannot normalize zero quaternion");
        const double inv = 1.0 / std::sqrt(n2);
        return {w0 * inv, w1 * inv, w2 * inv, w3 * inv};
    }
};

inline Quaternion quaternion_product(const Quaternion& a, const Quaternion& b) {
    return {a.w0 * b.w0 - a.w1 * b.w1 - a.w2 * b.w2 - a.w3 * b.w3,
            a.w0 * b.w1 + a.w1 * b.w0 + a.w2 * b.w3 - a.w3 * b.w2,
            a.w0 * b.w2 - a.w1 * b.w3 + a.w2 * b.w0 + a.w3 * b.w1,
            a.w0 * b.w3 + a.w1 * b.w2 - a.w2 * b.w1 + a.w3 * b.w0};
}

using Matrix3 = std::array<std::array<double, 3>, 3>;

// Rotation matrix realizing v -> q v q^-1 on the vector part, built from
// q normalized by sqrt(|q|^2 + epsilon). Rows/columns are ordered over
// the (vector1, vector2, bivector) slots of G^2.
inline Matrix3 quaternion_rotation_matrix(const Quaternion& q, double epsilon = 1e-12) {
    const double n2 = q.norm_sq() + epsilon;
    if (n2 <= 0.0)
        throw std::invalid_argument("quaternion_rotation_matrix: zero quaternion with epsilon = 0");
    const double inv = 1.0 / std::sqrt(n2);
    const double w = q.w0 * inv, x = q.w1 * inv, y = q.w2 * inv, z = q.w3 * inv;
    return {{{1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)},
             {2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)},
             {2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)}}};
}

}  // namespace clifford
