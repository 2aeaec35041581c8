#include "gdfusion/oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "gdfusion/gdft.hpp"
#include "util.hpp"

using namespace gdfusion;

// ============================================================================
// finite_diff_grad
// ============================================================================

TEST(FiniteDiff, QuadraticGradientIsTwoX) {
    const Tensor x = testutil::random_tensor({7}, 1001, -2.0, 2.0);
    const Tensor g = oracle::finite_diff_grad(
        [](const Tensor& t) {
            double s = 0.0;
            for (std::size_t i = 0; i < t.size(); ++i) s += t[i] * t[i];
            return s;
        },
        x, 1e-6);
    for (std::size_t i = 0; i < x.size(); ++i)
        EXPECT_NEAR(g[i], 2.0 * x[i], 1e-6 * std::max(1.0, std::fabs(x[i])));
}

TEST(FiniteDiff, ConstantFunctionHasZeroGradient) {
    const Tensor x = testutil::random_tensor({5}, 1002);
    const Tensor g = oracle::finite_diff_grad([](const Tensor&) { return 3.5; }, x, 1e-6);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g[i], 0.0);
}

TEST(FiniteDiff, ProductRuleOnEntryProduct) {
    const Tensor x = testutil::random_tensor({4}, 1003, 0.5, 2.0);
    const Tensor g = oracle::finite_diff_grad(
        [](const Tensor& t) {
            double p = 1.0;
            for (std::size_t i = 0; i < t.size(); ++i) p *= t[i];
            return p;
        },
        x, 1e-6);
    double prod = 1.0;
    for (std::size_t i = 0; i < x.size(); ++i) prod *= x[i];
    for (std::size_t i = 0; i < x.size(); ++i)
        EXPECT_NEAR(g[i], prod / x[i], 1e-6 * std::fabs(prod / x[i]) + 1e-10);
}

TEST(FiniteDiff, LogSumExpGradientIsSoftmax) {
    const Tensor x = testutil::random_tensor({6}, 1004, -1.0, 1.0);
    const Tensor g = oracle::finite_diff_grad(
        [](const Tensor& t) {
            double m = t[0];
            for (std::size_t i = 1; i < t.size(); ++i) m = std::max(m, t[i]);
            double s = 0.0;
            for (std::size_t i = 0; i < t.size(); ++i) s += std::exp(t[i] - m);
            return m + std::log(s);
        },
        x, 1e-6);
    double m = x[0];
    for (std::size_t i = 1; i < x.size(); ++i) m = std::max(m, x[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) z += std::exp(x[i] - m);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double softmax = std::exp(x[i] - m) / z;
        EXPECT_NEAR(g[i], softmax, 1e-6 * std::max(1.0, softmax));
    }
}

TEST(FiniteDiff, NonFiniteLossRaisesOracleError) {
    const Tensor x = testutil::random_tensor({2}, 1005);
    EXPECT_THROW(oracle::finite_diff_grad(
                     [](const Tensor&) { return std::numeric_limits<double>::infinity(); }, x,
                     1e-6),
                 oracle::OracleError);
}

// ============================================================================
// naive_chain_gradient
// ============================================================================

TEST(NaiveChain, MatchesFusedGradientPath) {
    const std::size_t c = 4, n = 8;
    const Tensor v = testutil::random_tensor({c, n}, 1006);
    scene::SceneParams p = scene::SceneParams::initial(c, 0.7);
    rng::Stream rs(1007);
    for (std::size_t i = 0; i < c * c; ++i) p.w[i] += 0.3 * rs.uniform(-1, 1);
    for (std::size_t i = 0; i < c; ++i) {
        p.beta[i] = rs.uniform(-1, 1);
        p.b[i] = rs.uniform(-0.5, 0.5);
    }
    const scene::AugmentWeights aug = scene::AugmentWeights::seeded(c, 1008, false);

    const scene::SceneGradient naive = oracle::naive_chain_gradient(v, p, aug);
    const scene::GradientResult fused = scene_gradient(v, p, aug);
    EXPECT_LE(testutil::max_abs_diff(naive.d_gamma, fused.grad.d_gamma), 1e-10);
    EXPECT_LE(testutil::max_abs_diff(naive.d_beta, fused.grad.d_beta), 1e-10);
    EXPECT_LE(testutil::max_abs_diff(naive.d_w, fused.grad.d_w), 1e-10);
    EXPECT_LE(testutil::max_abs_diff(naive.d_b, fused.grad.d_b), 1e-10);
}

TEST(NaiveChain, ZeroResidualGivesZeros) {
    const std::size_t c = 3;
    scene::AugmentWeights aug = scene::AugmentWeights::seeded(c, 1009, false);
    aug.q2 = aug.q1;
    const Tensor v = testutil::random_tensor({c, 6}, 1010);
    const scene::SceneGradient g =
        oracle::naive_chain_gradient(v, scene::SceneParams::initial(c, 0.0), aug);
    for (std::size_t i = 0; i < c; ++i) {
        EXPECT_EQ(g.d_gamma[i], 0.0);
        EXPECT_EQ(g.d_beta[i], 0.0);
        EXPECT_EQ(g.d_b[i], 0.0);
    }
    for (std::size_t i = 0; i < c * c; ++i) EXPECT_EQ(g.d_w[i], 0.0);
}

TEST(NaiveChain, AgreesAtRuntimeComparisonDims) {
    // correctness at the benchmark shape (timing itself is asserted in the
    // acceptance suite)
    const std::size_t c = 32, n = 512;
    const Tensor v = testutil::random_tensor({c, n}, 1011);
    scene::SceneParams p = scene::SceneParams::initial(c, 0.5);
    const scene::AugmentWeights aug = scene::AugmentWeights::seeded(c, 1012, false);
    const scene::SceneGradient naive = oracle::naive_chain_gradient(v, p, aug);
    const scene::GradientResult fused = scene_gradient(v, p, aug);
    EXPECT_LE(testutil::scaled_max_err(naive.d_w, fused.grad.d_w, 1e-12, 1e-10), 1.0);
    EXPECT_LE(testutil::scaled_max_err(naive.d_b, fused.grad.d_b, 1e-12, 1e-10), 1.0);
}

// ============================================================================
// stacking baseline
// ============================================================================

TEST(Stacking, ZeroHistoryIsMemoryless) {
    oracle::StackingState s = oracle::StackingState::averaging(3, 0);
    const VoxelGrid v = testutil::random_grid(3, 4, 4, 3, 1013);
    const oracle::StackingResult r = oracle::stacking_update(std::move(s), v,
                                                             RigidTransform::identity());
    EXPECT_EQ(testutil::max_abs_diff(r.fused.data, v.data), 0.0);
    EXPECT_TRUE(r.state.queue.empty());
}

TEST(Stacking, QueueBytesScaleExactlyWithDepth) {
    const std::size_t nh = 4;
    oracle::StackingState s = oracle::StackingState::averaging(2, nh);
    const std::size_t frame_bytes = gdft::byte_size(Tensor({2, 3, 3, 3}));
    for (int t = 1; t <= 8; ++t) {
        const VoxelGrid v = testutil::random_grid(2, 3, 3, 3, 1014 + t);
        auto r = oracle::stacking_update(std::move(s), v, RigidTransform::identity());
        s = std::move(r.state);
        const std::size_t expect_frames = std::min<std::size_t>(t, nh);
        EXPECT_EQ(s.history_bytes(), expect_frames * frame_bytes);
    }
}

TEST(Stacking, AveragingEqualsMeanOfRecentFramesOnStaticScene) {
    const std::size_t nh = 3;
    oracle::StackingState s = oracle::StackingState::averaging(2, nh);
    std::vector<VoxelGrid> frames;
    for (int t = 0; t < 6; ++t) frames.push_back(testutil::random_grid(2, 3, 4, 3, 1100 + t));

    for (std::size_t t = 0; t < frames.size(); ++t) {
        auto r = oracle::stacking_update(std::move(s), frames[t], RigidTransform::identity());
        s = std::move(r.state);
        const std::size_t window = std::min<std::size_t>(t + 1, nh + 1);
        VoxelGrid mean(2, 3, 4, 3);
        for (std::size_t q = 0; q < window; ++q)
            for (std::size_t i = 0; i < mean.data.size(); ++i)
                mean.data[i] += frames[t - q].data[i] / static_cast<double>(window);
        EXPECT_LE(testutil::max_abs_diff(r.fused.data, mean.data), 1e-12);
    }
}

TEST(Stacking, ExplicitFuseWeightsApplyLinearMap) {
    // weights that copy the newest queued frame, ignoring the current one
    const std::size_t c = 2, nh = 2;
    oracle::StackingState s = oracle::StackingState::averaging(c, nh);
    s.fuse_weights = Tensor({c, (nh + 1) * c});
    s.fuse_weights(0, c + 0) = 1.0;
    s.fuse_weights(1, c + 1) = 1.0;

    const VoxelGrid first = testutil::random_grid(c, 3, 3, 2, 1200);
    const VoxelGrid second = testutil::random_grid(c, 3, 3, 2, 1201);
    auto r1 = oracle::stacking_update(std::move(s), first, RigidTransform::identity());
    auto r2 = oracle::stacking_update(std::move(r1.state), second, RigidTransform::identity());
    EXPECT_LE(testutil::max_abs_diff(r2.fused.data, first.data), 1e-12);
}
