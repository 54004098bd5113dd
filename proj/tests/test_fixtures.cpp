// Validates the production implementations against the committed oracle
// fixtures, so external reimplementations can target the same files.

#include <gtest/gtest.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "clifford/algebra.hpp"
#include "clifford/datagen.hpp"
#include "clifford/layers.hpp"
#include "clifford/transforms.hpp"

using namespace clifford;
using nlohmann::json;

namespace {

json load_json(const std::string& name) {
    std::ifstream in(std::string(CLIFFIELD_FIXTURE_DIR) + "/" + name);
    if (!in) throw std::runtime_error("missing fixture " + name);
    json j;
    in >> j;
    return j;
}

MultivectorField unwrap_field(const TrajectorySet& set) { return set.field_at(0, 0); }

}  // namespace

TEST(Fixtures, GeometricProductsMatchFrozenOracleValues) {
    const json all = load_json("gp_cases.json");
    for (const auto& [key, group] : all.items()) {
        const Signature sig{group.at("signature").at("p").get<int>(),
                            group.at("signature").at("q").get<int>()};
        const BladeTable table = build_blade_table(sig);
        for (const auto& c : group.at("cases")) {
            const auto a = c.at("a").get<std::vector<double>>();
            const auto b = c.at("b").get<std::vector<double>>();
            const auto want = c.at("expected").get<std::vector<double>>();
            std::vector<double> table_out(a.size());
            geometric_product(table, a, b, table_out);
            for (std::size_t k = 0; k < want.size(); ++k)
                EXPECT_NEAR(table_out[k], want[k], 1e-12) << key;
            if (sig == kCl20 || sig == kCl02) {
                const auto fast = geometric_product_2d(Multivector2::from_coeffs(a),
                                                       Multivector2::from_coeffs(b), sig)
                                      .coeffs();
                for (std::size_t k = 0; k < want.size(); ++k)
                    EXPECT_NEAR(fast[k], want[k], 1e-12) << key;
            } else {
                const auto fast =
                    geometric_product_3d(Multivector3::from_coeffs(a), Multivector3::from_coeffs(b))
                        .coeffs();
                for (std::size_t k = 0; k < want.size(); ++k)
                    EXPECT_NEAR(fast[k], want[k], 1e-12) << key;
            }
        }
    }
}

TEST(Fixtures, RotationMatricesMatchFrozenConjugationColumns) {
    const json all = load_json("rotation_cases.json");
    for (const auto& c : all.at("cases")) {
        const auto q = c.at("q").get<std::vector<double>>();
        const Matrix3 r = quaternion_rotation_matrix({q[0], q[1], q[2], q[3]}, 0.0);
        const auto columns = c.at("columns");
        for (int col = 0; col < 3; ++col) {
            const auto want = columns[col].get<std::vector<double>>();
            for (int row = 0; row < 3; ++row) EXPECT_NEAR(r[row][col], want[row], 1e-10);
        }
    }
}

TEST(Fixtures, CliffordConvolutionMatchesFrozenOracleOutput) {
    const MultivectorField input =
        unwrap_field(read_clf(std::string(CLIFFIELD_FIXTURE_DIR) + "/conv2d_input.clf"));
    const MultivectorField expected =
        unwrap_field(read_clf(std::string(CLIFFIELD_FIXTURE_DIR) + "/conv2d_expected.clf"));
    const json kj = load_json("conv2d_kernel.json");
    CliffordKernel kernel{kCl20,
                          Tensor(kj.at("shape").get<std::vector<std::int64_t>>(),
                                 kj.at("weights").get<std::vector<double>>()),
                          std::nullopt};
    const MultivectorField out = clifford_conv2d(input, kernel, Padding::periodic);
    EXPECT_LT(max_abs_diff(out.data, expected.data), 1e-10);
}

TEST(Fixtures, DftMatchesFrozenOracleSpectrum) {
    const json j = load_json("dft_case.json");
    ComplexGrid g(std::vector<std::int64_t>{1, 8, 8});
    g.re = Tensor({1, 8, 8}, j.at("re").get<std::vector<double>>());
    g.im = Tensor({1, 8, 8}, j.at("im").get<std::vector<double>>());
    const ComplexGrid hat = dft_2d(g, false);
    const auto want_re = j.at("expected_re").get<std::vector<double>>();
    const auto want_im = j.at("expected_im").get<std::vector<double>>();
    for (std::size_t i = 0; i < want_re.size(); ++i) {
        EXPECT_NEAR(hat.re[static_cast<std::int64_t>(i)], want_re[i], 1e-10);
        EXPECT_NEAR(hat.im[static_cast<std::int64_t>(i)], want_im[i], 1e-10);
    }
}
