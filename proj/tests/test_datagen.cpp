#include "clifford/datagen.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <numbers>

#include "clifford/rng.hpp"

using namespace clifford;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST(Advection2d, ZeroVelocityGivesStaticTrajectory) {
    const TrajectorySet set = gen_advection2d(16, 2, VelocityLaw::constant, 0.5, 7, 6, 0.0);
    for (std::int64_t traj = 0; traj < 2; ++traj) {
        const MultivectorField first = set.field_at(traj, 0);
        for (std::int64_t t = 1; t < 6; ++t)
            EXPECT_EQ(max_abs_diff(set.field_at(traj, t).data, first.data), 0.0);
    }
}

TEST(Advection2d, FullPeriodTranslationReturnsInitialField) {
    Rng rng(9);
    const Tensor s = detail::smooth_blob_mixture(32, rng);
    const Tensor wrapped = detail::spectral_shift_2d(s, 32.0, -64.0);
    EXPECT_LT(max_abs_diff(wrapped, s), 1e-8);
}

TEST(Advection2d, FramesAreExactTranslatesOfTheInitialField) {
    const TrajectorySet set = gen_advection2d(16, 1, VelocityLaw::constant, 0.7, 21, 5, 1.0, "f64");
    const MultivectorField f0 = set.field_at(0, 0);
    const double vx = f0.plane(1, 0)[0], vy = f0.plane(2, 0)[0];
    for (std::int64_t t = 1; t < 5; ++t) {
        Tensor s0({16, 16});
        std::copy(f0.plane(0, 0), f0.plane(0, 0) + 256, s0.data());
        const Tensor want = detail::spectral_shift_2d(s0, vy * 0.7 * t, vx * 0.7 * t);
        const MultivectorField ft = set.field_at(0, t);
        Tensor got({16, 16});
        std::copy(ft.plane(0, 0), ft.plane(0, 0) + 256, got.data());
        EXPECT_LT(max_abs_diff(got, want), 1e-10);
    }
}

TEST(Advection2d, SeedDeterminismIsBitExact) {
    const TrajectorySet a = gen_advection2d(16, 3, VelocityLaw::solid_rotation, 0.5, 11, 4);
    const TrajectorySet b = gen_advection2d(16, 3, VelocityLaw::solid_rotation, 0.5, 11, 4);
    EXPECT_EQ(max_abs_diff(a.data, b.data), 0.0);
    const TrajectorySet c = gen_advection2d(16, 3, VelocityLaw::solid_rotation, 0.5, 12, 4);
    EXPECT_GT(max_abs_diff(a.data, c.data), 0.0);
}

TEST(Advection2d, SpectralTransportConservesTotalMass) {
    const TrajectorySet set = gen_advection2d(32, 2, VelocityLaw::constant, 0.9, 13, 8, 1.0, "f64");
    for (std::int64_t traj = 0; traj < 2; ++traj) {
        const MultivectorField f0 = set.field_at(traj, 0);
        double mass0 = 0.0;
        for (std::int64_t i = 0; i < f0.spatial_numel(); ++i) mass0 += f0.plane(0, 0)[i];
        for (std::int64_t t = 1; t < 8; ++t) {
            const MultivectorField ft = set.field_at(traj, t);
            double mass = 0.0;
            for (std::int64_t i = 0; i < ft.spatial_numel(); ++i) mass += ft.plane(0, 0)[i];
            EXPECT_LT(std::abs(mass - mass0) / std::abs(mass0), 1e-10);
        }
    }
}

TEST(Maxwell3d, NoSourcesZeroInitialFieldsStayZero) {
    MaxwellSourceSpec sources;
    sources.count = 0;
    const TrajectorySet set = gen_maxwell3d(8, 1, sources, 0.2, 17, 4);
    EXPECT_EQ(max_abs(set.data), 0.0);
}

TEST(Maxwell3d, CourantViolationRejected) {
    EXPECT_THROW(gen_maxwell3d(8, 1, MaxwellSourceSpec{}, 0.6, 17), std::invalid_argument);
}

TEST(Maxwell3d, SourceFreeEnergyDriftBelowOnePercent) {
    // Random smooth initial data: a few low-frequency modes in E and H.
    const std::int64_t m = 16;
    YeeGrid3d yee(m);
    Rng rng(23);
    for (int mode = 0; mode < 6; ++mode) {
        const double kx = 2.0 * std::numbers::pi * static_cast<double>(1 + rng.uniform_int(2)) / m;
        const double ky = 2.0 * std::numbers::pi * static_cast<double>(1 + rng.uniform_int(2)) / m;
        const double kz = 2.0 * std::numbers::pi * static_cast<double>(1 + rng.uniform_int(2)) / m;
        const double amp = rng.uniform(-1, 1), phase = rng.uniform(0, 6.28);
        Tensor* targets[6] = {&yee.ex, &yee.ey, &yee.ez, &yee.hx, &yee.hy, &yee.hz};
        Tensor& field = *targets[rng.uniform_int(6)];
        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t j = 0; j < m; ++j)
                for (std::int64_t k = 0; k < m; ++k)
                    field[(i * m + j) * m + k] += amp * std::sin(kx * i + ky * j + kz * k + phase);
    }
    const double dt = 0.5 * maxwell_courant_bound();
    double lo = 1e300, hi = -1e300;
    for (int step = 0; step < 100; ++step) {
        const double e = yee.step_energy(dt);
        lo = std::min(lo, e);
        hi = std::max(hi, e);
    }
    EXPECT_LT((hi - lo) / hi, 0.01);
}

TEST(Maxwell3d, PlaneWavePhaseSpeedWithinFivePercentOfC) {
    const std::int64_t m = 32;
    const std::int64_t mode = 2;
    const double k = 2.0 * std::numbers::pi * static_cast<double>(mode) / m;
    YeeGrid3d yee(m);
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < m; ++j)
            for (std::int64_t kk = 0; kk < m; ++kk)
                yee.ey[(i * m + j) * m + kk] = std::cos(k * static_cast<double>(i));
    const double dt = 0.5 * maxwell_courant_bound();
    // Standing wave: the k-mode amplitude obeys the cosine three-term
    // recurrence m_{n+1} + m_{n-1} = 2 cos(w dt) m_n.
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
        const double c = (series[n + 1] + series[n - 1]) / (2.0 * series[n]);
        if (std::abs(series[n]) > best_weight) {
            best_weight = std::abs(series[n]);
            best_cos = c;
        }
    }
    const double omega = std::acos(best_cos) / dt;
    const double phase_speed = omega / k;
    EXPECT_NEAR(phase_speed, 1.0, 0.05);
    // Dispersion oracle: sin(w dt / 2) = dt sin(k dx / 2) at unit dx and c.
    const double omega_disp = 2.0 * std::asin(dt * std::sin(k / 2.0)) / dt;
    EXPECT_NEAR(omega, omega_disp, 1e-3);
}

TEST(Maxwell3d, TrajectoriesWithSourcesAreFiniteAndNonzero) {
    MaxwellSourceSpec sources;
    sources.count = 4;
    const TrajectorySet set = gen_maxwell3d(8, 2, sources, 0.25, 29, 4, 2);
    EXPECT_GT(max_abs(set.data), 0.0);
    for (std::int64_t i = 0; i < set.data.numel(); ++i) ASSERT_TRUE(std::isfinite(set.data[i]));
    // Packing orientation: H_y rides negated in the e1e3 blade.
    const MultivectorField f = set.field_at(0, 3);
    const auto grids = unpack(f, set.packing);
    EXPECT_EQ(grids.count("magnetic_y"), 1u);
}

TEST(Clf, RoundTripIsBitExactForBothDtypes) {
    for (const std::string dtype : {"f32", "f64"}) {
        const TrajectorySet set = gen_advection2d(8, 2, VelocityLaw::constant, 0.5, 31, 3, 1.0, dtype);
        const std::string path = temp_path("clf_roundtrip_" + dtype + ".clf");
        write_clf(path, set);
        const TrajectorySet back = read_clf(path);
        EXPECT_EQ(max_abs_diff(back.data, set.data), 0.0);
        EXPECT_EQ(back.dtype, dtype);
        EXPECT_EQ(back.dt, set.dt);
        EXPECT_EQ(back.dx, set.dx);
        EXPECT_EQ(back.signature, set.signature);
        EXPECT_EQ(back.seed, set.seed);
        EXPECT_EQ(back.generator, set.generator);
        EXPECT_EQ(back.generator_params, set.generator_params);
        ASSERT_EQ(back.packing.slots.size(), set.packing.slots.size());
        for (std::size_t i = 0; i < set.packing.slots.size(); ++i) {
            EXPECT_EQ(back.packing.slots[i].name, set.packing.slots[i].name);
            EXPECT_EQ(back.packing.slots[i].blade, set.packing.slots[i].blade);
            EXPECT_EQ(back.packing.slots[i].sign, set.packing.slots[i].sign);
        }
        std::filesystem::remove(path);
    }
}

TEST(Clf, HeaderOnlyInspectionSkipsPayload) {
    const TrajectorySet set = gen_advection2d(8, 3, VelocityLaw::constant, 0.5, 37, 4);
    const std::string path = temp_path("clf_header.clf");
    write_clf(path, set);
    const TrajectorySet header = read_clf_header(path);
    EXPECT_EQ(header.data.shape(), set.data.shape());
    EXPECT_EQ(max_abs(header.data), 0.0);  // payload not loaded
    std::filesystem::remove(path);
}

TEST(Clf, CorruptedMagicRejected) {
    const std::string path = temp_path("clf_badmagic.clf");
    std::ofstream(path, std::ios::binary) << "NOPE1234abcdef";
    try {
        read_clf(path);
        FAIL() << "expected ClfError";
    } catch (const ClfError& e) {
        EXPECT_EQ(e.kind, ClfError::Kind::bad_magic);
    }
    std::filesystem::remove(path);
}

TEST(Clf, TruncatedPayloadRejectedDistinctly) {
    const TrajectorySet set = gen_advection2d(8, 1, VelocityLaw::constant, 0.5, 41, 3);
    const std::string path = temp_path("clf_truncated.clf");
    write_clf(path, set);
    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size - 64);
    try {
        read_clf(path);
        FAIL() << "expected ClfError";
    } catch (const ClfError& e) {
        EXPECT_EQ(e.kind, ClfError::Kind::truncated);
    }
    EXPECT_NO_THROW(read_clf_header(path));  // header region intact
    std::filesystem::remove(path);
}

TEST(Clf, ContentHashIsStable) {
    const TrajectorySet set = gen_advection2d(8, 1, VelocityLaw::constant, 0.5, 43, 3);
    const std::string path = temp_path("clf_hash.clf");
    write_clf(path, set);
    const std::uint64_t h1 = fnv1a_file(path);
    write_clf(path, set);
    EXPECT_EQ(fnv1a_file(path), h1);
    std::filesystem::remove(path);
}
