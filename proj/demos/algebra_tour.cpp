// Quick tour of the algebra layer: products, duals, dual pairs and the
// quaternion rotation realization.

#include <cstdio>

#include "clifford/algebra.hpp"

using namespace clifford;

namespace {

void print_mv2(const char* label, const Multivector2& m) {
    std::printf("%-24s = %+.3f + %+.3f e1 + %+.3f e2 + %+.3f e12\n", label, m.s, m.e1, m.e2, m.e12);
}

}  // namespace

int main() {
    const Multivector2 a{1.0, 2.0, 0.5, -1.0};
    const Multivector2 b{0.5, -1.0, 1.5, 2.0};

    print_mv2("a", a);
    print_mv2("b", b);
    print_mv2("a b   (Cl(2,0))", geometric_product_2d(a, b, kCl20));
    print_mv2("a b   (Cl(0,2))", geometric_product_2d(a, b, kCl02));
    print_mv2("dual(a)", dual(a, kCl20));

    const InnerWedge iw = vector_inner_wedge(1.0, 0.5, -0.25, 2.0);
    std::printf("%-24s = <x,y> %+.3f, x^y %+.3f\n", "vector product split", iw.inner, iw.wedge);

    // The Cl(0,2) product is the Hamilton product.
    const Quaternion q1{0.0, 1.0, 0.0, 0.0};
    const Quaternion q2{0.0, 0.0, 1.0, 0.0};
    const Quaternion k = quaternion_product(q1, q2);
    std::printf("%-24s = %+.1f + %+.1f i + %+.1f j + %+.1f k\n", "i j", k.w0, k.w1, k.w2, k.w3);

    const Matrix3 r = quaternion_rotation_matrix({std::sqrt(0.5), std::sqrt(0.5), 0.0, 0.0}, 0.0);
    std::printf("rotation by 90 degrees about i:\n");
    for (int row = 0; row < 3; ++row)
        std::printf("  [%+.3f %+.3f %+.3f]\n", r[row][0], r[row][1], r[row][2]);

    // Generic table-driven product for Cl(3,0).
    const BladeTable table = build_blade_table(kCl30);
    std::printf("Cl(3,0) blade table row for e1 (canonical order):\n  ");
    for (int j = 0; j < 8; ++j) {
        const auto& e = table.entry(1, j);
        std::printf("(%d,%+d) ", e.blade, e.sign);
    }
    std::printf("\n");
    return 0;
}
