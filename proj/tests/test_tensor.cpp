#include "gdfusion/tensor.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "util.hpp"

using namespace gdfusion;

// ============================================================================
// matmul
// ============================================================================

TEST(Matmul, IdentityLeavesOperandUnchanged) {
    const Tensor b = testutil::random_tensor({3, 5}, 11);
    const Tensor out = matmul(Tensor::identity(3), b);
    EXPECT_EQ(testutil::max_abs_diff(out, b), 0.0);
}

TEST(Matmul, MatchesTripleLoopReferenceBitExactly) {
    const Tensor a = testutil::random_tensor({2, 3}, 21);
    const Tensor b = testutil::random_tensor({3, 2}, 22);
    const Tensor out = matmul(a, b);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < 3; ++k) s += a(i, k) * b(k, j);
            EXPECT_EQ(out(i, j), s);
        }
}

TEST(Matmul, LargerShapesStayBitIdenticalToReference) {
    const Tensor a = testutil::random_tensor({7, 13}, 31);
    const Tensor b = testutil::random_tensor({13, 9}, 32);
    const Tensor out = matmul(a, b);
    for (std::size_t i = 0; i < 7; ++i)
        for (std::size_t j = 0; j < 9; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < 13; ++k) s += a(i, k) * b(k, j);
            EXPECT_EQ(out(i, j), s);
        }
}

TEST(Matmul, ZeroMatrixAnnihilates) {
    const Tensor a = testutil::random_tensor({4, 4}, 41);
    const Tensor out = matmul(a, Tensor({4, 4}));
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], 0.0);
}

TEST(Matmul, DimensionMismatchThrows) {
    const Tensor a({2, 3});
    const Tensor b({4, 2});
    EXPECT_THROW(matmul(a, b), ShapeError);
}

// ============================================================================
// zscore_norm
// ============================================================================

TEST(ZScore, TwoPointColumnGivesPlusMinusOne) {
    Tensor z({2, 1});
    z(0, 0) = 1.0;
    z(1, 0) = 3.0;
    const ZScoreResult r = zscore_norm(z, 1e-30);
    EXPECT_NEAR(r.zhat(0, 0), -1.0, 1e-12);
    EXPECT_NEAR(r.zhat(1, 0), 1.0, 1e-12);
    EXPECT_NEAR(r.mu[0], 2.0, 1e-12);
    EXPECT_NEAR(r.sigma[0], 1.0, 1e-12);
}

TEST(ZScore, ConstantColumnMapsToZeros) {
    Tensor z({5, 2});
    for (std::size_t i = 0; i < 5; ++i) {
        z(i, 0) = 7.5;
        z(i, 1) = -2.0;
    }
    const ZScoreResult r = zscore_norm(z);
    for (std::size_t i = 0; i < r.zhat.size(); ++i) EXPECT_EQ(r.zhat[i], 0.0);
}

TEST(ZScore, RandomInputHasUnitColumnStatistics) {
    const Tensor z = testutil::random_tensor({4, 7}, 55, -2.0, 2.0);
    const ZScoreResult r = zscore_norm(z, 1e-6);
    for (std::size_t j = 0; j < 7; ++j) {
        double mean = 0.0, var = 0.0, raw_var = 0.0, raw_mean = 0.0;
        for (std::size_t i = 0; i < 4; ++i) {
            mean += r.zhat(i, j);
            raw_mean += z(i, j);
        }
        mean /= 4.0;
        raw_mean /= 4.0;
        for (std::size_t i = 0; i < 4; ++i) {
            var += r.zhat(i, j) * r.zhat(i, j);
            raw_var += (z(i, j) - raw_mean) * (z(i, j) - raw_mean);
        }
        var /= 4.0;
        raw_var /= 4.0;
        EXPECT_LT(std::fabs(mean), 1e-12);
        // the eps-regularized sigma predicts output variance var/(var + eps)
        EXPECT_NEAR(var, raw_var / (raw_var + 1e-6), 1e-9);
    }
}

TEST(ZScore, StatisticsMatchDirectRecomputation) {
    const Tensor z = testutil::random_tensor({6, 9}, 56, -3.0, 3.0);
    const ZScoreResult r = zscore_norm(z, 1e-6);
    for (std::size_t j = 0; j < 9; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < 6; ++i) mean += z(i, j);
        mean /= 6.0;
        double var = 0.0;
        for (std::size_t i = 0; i < 6; ++i) var += (z(i, j) - mean) * (z(i, j) - mean);
        var /= 6.0;
        EXPECT_NEAR(r.mu[j], mean, 1e-12);
        EXPECT_NEAR(r.sigma[j], std::sqrt(var + 1e-6), 1e-12);
    }
}

// ============================================================================
// trilinear sampling
// ============================================================================

TEST(TrilinearSample, CanonicalGridReproducesInputExactly) {
    const VoxelGrid g = testutil::random_grid(3, 4, 5, 6, 61);
    const CoordField p = CoordField::canonical(4, 5, 6);
    const VoxelGrid out = trilinear_sample(g, p);
    EXPECT_LE(testutil::max_abs_diff(out.data, g.data), 1e-15);
}

TEST(TrilinearSample, MidpointAveragesNeighbors) {
    VoxelGrid g(1, 2, 1, 1);
    g.at(0, 0, 0, 0) = 0.0;
    g.at(0, 1, 0, 0) = 8.0;
    double out = -1.0;
    trilinear_sample_point(g, 0.5, 0.0, 0.0, &out);
    EXPECT_DOUBLE_EQ(out, 4.0);
}

TEST(TrilinearSample, MatchesEightCornerClosedForm) {
    const VoxelGrid g = testutil::random_grid(2, 5, 5, 5, 62);
    rng::Stream rs(63);
    for (int probe = 0; probe < 100; ++probe) {
        const double x = rs.uniform(0.0, 4.0);
        const double y = rs.uniform(0.0, 4.0);
        const double z = rs.uniform(0.0, 4.0);
        double got[2];
        trilinear_sample_point(g, x, y, z, got);
        const auto i0 = static_cast<std::size_t>(std::floor(x));
        const auto j0 = static_cast<std::size_t>(std::floor(y));
        const auto k0 = static_cast<std::size_t>(std::floor(z));
        const double dx = x - std::floor(x), dy = y - std::floor(y), dz = z - std::floor(z);
        for (std::size_t ch = 0; ch < 2; ++ch) {
            double want = 0.0;
            for (int di = 0; di < 2; ++di)
                for (int dj = 0; dj < 2; ++dj)
                    for (int dk = 0; dk < 2; ++dk) {
                        const std::size_t i = i0 + di, j = j0 + dj, k = k0 + dk;
                        if (i >= 5 || j >= 5 || k >= 5) continue;
                        const double w = (di ? dx : 1 - dx) * (dj ? dy : 1 - dy) *
                                         (dk ? dz : 1 - dz);
                        want += w * g.at(ch, i, j, k);
                    }
            EXPECT_NEAR(got[ch], want, 1e-12);
        }
    }
}

TEST(TrilinearSample, OutOfBoundsCornersContributeZero) {
    VoxelGrid g(1, 2, 2, 2);
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = 10.0;
    double out = -1.0;
    trilinear_sample_point(g, -0.5, 0.0, 0.0, &out);
    EXPECT_DOUBLE_EQ(out, 5.0);  // half the weight falls outside
    trilinear_sample_point(g, -3.0, 0.0, 0.0, &out);
    EXPECT_DOUBLE_EQ(out, 0.0);
}

TEST(TrilinearSample, AffineAlongEachAxisWithinCell) {
    const VoxelGrid g = testutil::random_grid(1, 4, 4, 4, 64);
    rng::Stream rs(65);
    for (int trial = 0; trial < 20; ++trial) {
        const double base[3] = {rs.uniform(0.1, 2.4), rs.uniform(0.1, 2.4),
                                rs.uniform(0.1, 2.4)};
        for (int axis = 0; axis < 3; ++axis) {
            // three collinear points inside one cell
            double lo = std::floor(base[axis]) + 0.05;
            double coords[3][3];
            double vals[3];
            for (int s = 0; s < 3; ++s) {
                for (int a = 0; a < 3; ++a) coords[s][a] = base[a];
                coords[s][axis] = lo + 0.4 * s;
                trilinear_sample_point(g, coords[s][0], coords[s][1], coords[s][2], &vals[s]);
            }
            EXPECT_NEAR(vals[1], 0.5 * (vals[0] + vals[2]), 1e-12);
        }
    }
}

// ============================================================================
// trilinear Jacobian
// ============================================================================

TEST(TrilinearJacobian, ConstantFieldHasZeroJacobian) {
    VoxelGrid g(2, 3, 3, 3);
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = 3.25;
    double jac[6];
    trilinear_jacobian_point(g, 1.3, 1.7, 0.4, jac);
    for (double v : jac) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(TrilinearJacobian, LinearRampRecoversSlope) {
    VoxelGrid g(1, 4, 4, 4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            for (std::size_t k = 0; k < 4; ++k) g.at(0, i, j, k) = 2.0 * static_cast<double>(i);
    double jac[3];
    trilinear_jacobian_point(g, 1.6, 2.3, 0.9, jac);
    EXPECT_NEAR(jac[0], 2.0, 1e-12);
    EXPECT_NEAR(jac[1], 0.0, 1e-12);
    EXPECT_NEAR(jac[2], 0.0, 1e-12);
}

TEST(TrilinearJacobian, MatchesCentralFiniteDifferences) {
    const VoxelGrid g = testutil::random_grid(2, 5, 5, 5, 71);
    rng::Stream rs(72);
    const double h = 1e-5;
    for (int probe = 0; probe < 60; ++probe) {
        double p[3];
        for (double& v : p) {
            // keep at least 1e-3 from every lattice plane
            v = rs.uniform(0.0, 3.0) + rs.uniform(0.05, 0.95);
            if (v - std::floor(v) < 1e-3) v += 1e-3;
        }
        double jac[6];
        trilinear_jacobian_point(g, p[0], p[1], p[2], jac);
        for (int axis = 0; axis < 3; ++axis) {
            double up[2], down[2];
            double q[3] = {p[0], p[1], p[2]};
            q[axis] = p[axis] + h;
            trilinear_sample_point(g, q[0], q[1], q[2], up);
            q[axis] = p[axis] - h;
            trilinear_sample_point(g, q[0], q[1], q[2], down);
            for (int ch = 0; ch < 2; ++ch) {
                const double fd = (up[ch] - down[ch]) / (2 * h);
                EXPECT_NEAR(jac[ch * 3 + axis], fd,
                            1e-5 * std::max(1.0, std::fabs(fd)));
            }
        }
    }
}

TEST(TrilinearJacobian, BulkMatchesPointEvaluation) {
    const VoxelGrid g = testutil::random_grid(3, 4, 4, 4, 73);
    CoordField coords = CoordField::canonical(4, 4, 4);
    rng::Stream rs(74);
    for (std::size_t i = 0; i < coords.data.size(); ++i)
        coords.data[i] += rs.uniform(-0.4, 0.4);
    const Tensor jac = trilinear_jacobian(g, coords);
    const std::size_t n = coords.num_points();
    double buf[9];
    for (std::size_t v = 0; v < n; v += 7) {
        trilinear_jacobian_point(g, coords.data[v], coords.data[n + v], coords.data[2 * n + v],
                                 buf);
        for (std::size_t ch = 0; ch < 3; ++ch)
            for (std::size_t ax = 0; ax < 3; ++ax)
                EXPECT_EQ(jac[(ch * 3 + ax) * n + v], buf[ch * 3 + ax]);
    }
}

// ============================================================================
// rigid transforms
// ============================================================================

TEST(RigidTransform, IdentityLeavesCoordsUnchanged) {
    const CoordField p = CoordField::canonical(3, 3, 3);
    const CoordField out = transform_coords(RigidTransform::identity(), p);
    EXPECT_EQ(testutil::max_abs_diff(out.data, p.data), 0.0);
}

TEST(RigidTransform, PureTranslationShiftsCanonicalGrid) {
    const CoordField p = CoordField::canonical(3, 3, 3);
    const CoordField out = transform_coords(RigidTransform::from_translation(1, 0, 0), p);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t k = 0; k < 3; ++k) {
                EXPECT_DOUBLE_EQ(out.at(0, i, j, k), static_cast<double>(i) + 1.0);
                EXPECT_DOUBLE_EQ(out.at(1, i, j, k), static_cast<double>(j));
                EXPECT_DOUBLE_EQ(out.at(2, i, j, k), static_cast<double>(k));
            }
}

TEST(RigidTransform, InverseComposesToIdentity) {
    const RigidTransform t = [] {
        RigidTransform r = RigidTransform::axis_angle({0.3, -1.0, 0.5}, 0.7);
        r.translation = {1.5, -2.0, 0.25};
        return r;
    }();
    EXPECT_LT(t.orthonormality_error(), 1e-12);
    const RigidTransform round_trip = compose(t, t.inverse());
    EXPECT_LT(round_trip.orthonormality_error(), 1e-12);

    CoordField p = CoordField::canonical(4, 3, 2);
    rng::Stream rs(81);
    for (std::size_t i = 0; i < p.data.size(); ++i) p.data[i] += rs.uniform(-1.0, 1.0);
    const CoordField out = transform_coords(round_trip, p);
    EXPECT_LT(testutil::max_abs_diff(out.data, p.data), 1e-10);
}

TEST(Tensor, ShapeValidationAndFlattenBijection) {
    EXPECT_THROW(Tensor({2, 3}, {1.0, 2.0}), ShapeError);
    const VoxelGrid g = testutil::random_grid(4, 3, 2, 5, 91);
    const Tensor m = g.as_matrix();
    EXPECT_EQ(m.rows(), 4u);
    EXPECT_EQ(m.cols(), 30u);
    const VoxelGrid back = VoxelGrid::from_matrix(m, g.extent);
    EXPECT_EQ(testutil::max_abs_diff(back.data, g.data), 0.0);
}
