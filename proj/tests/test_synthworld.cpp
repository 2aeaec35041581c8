#include "gdfusion/synthworld.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <map>

#include "util.hpp"

using namespace gdfusion;
using synth::SensorNoise;
using synth::Trajectory;
using synth::WorldSpec;

namespace {

PipelineConfig small_cfg() {
    PipelineConfig cfg;
    cfg.grid_x = 8;
    cfg.grid_y = 6;
    cfg.grid_z = 4;
    cfg.channels = 6;
    cfg.num_classes = 4;
    cfg.depth_bins = 16;
    cfg.depth_min = 0.5;
    cfg.depth_max = 16.5;
    cfg.cam_start_x = -3.0;
    cfg.cam_step_x = 0.0;
    cfg.cam_step_y = 0.05;
    cfg.cam_step_z = 0.02;
    return cfg;
}

WorldSpec empty_world(std::size_t x, std::size_t y, std::size_t z) {
    WorldSpec w;
    w.grid = {x, y, z};
    w.classes = {{"empty", false}, {"solid", false}, {"other", false}, {"mover", true}};
    return w;
}

}  // namespace

// ============================================================================
// ground truth
// ============================================================================

TEST(GroundTruth, EmptyWorldIsAllEmpty) {
    const WorldSpec w = empty_world(5, 4, 3);
    const std::vector<int> labels = synth::ground_truth_occupancy(w, 1);
    for (int v : labels) EXPECT_EQ(v, 0);
}

TEST(GroundTruth, UnitBoxAdvancesWithVelocity) {
    WorldSpec w = empty_world(8, 4, 4);
    w.boxes.push_back({3, {0, 0, 0}, {1, 1, 1}, {1, 0, 0}});
    const std::vector<int> labels = synth::ground_truth_occupancy(w, 3);
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            for (std::size_t k = 0; k < 4; ++k) {
                const int want = (i == 2 && j == 0 && k == 0) ? 3 : 0;
                EXPECT_EQ(labels[(i * 4 + j) * 4 + k], want);
            }
}

TEST(GroundTruth, HistogramMatchesVolumeBookkeeping) {
    WorldSpec w = empty_world(10, 10, 6);
    w.boxes.push_back({1, {1, 1, 0}, {3, 2, 4}, {0, 0, 0}});   // 24 voxels
    w.boxes.push_back({2, {6, 4, 1}, {2, 3, 2}, {0, 0, 0}});   // 12 voxels
    const std::vector<int> labels = synth::ground_truth_occupancy(w, 1);
    std::map<int, int> hist;
    for (int v : labels) ++hist[v];
    EXPECT_EQ(hist[1], 24);
    EXPECT_EQ(hist[2], 12);
    EXPECT_EQ(hist[0], 600 - 36);
}

TEST(GroundTruth, LaterListedBoxWinsOverlap) {
    WorldSpec w = empty_world(6, 6, 6);
    w.boxes.push_back({1, {0, 0, 0}, {4, 4, 4}, {0, 0, 0}});
    w.boxes.push_back({2, {2, 2, 2}, {2, 2, 2}, {0, 0, 0}});
    const std::vector<int> labels = synth::ground_truth_occupancy(w, 1);
    EXPECT_EQ(labels[(3 * 6 + 3) * 6 + 3], 2);
    EXPECT_EQ(labels[(1 * 6 + 1) * 6 + 1], 1);
}

TEST(GroundTruth, FractionalMotionUsesCenterContainment) {
    WorldSpec w = empty_world(8, 4, 4);
    w.boxes.push_back({3, {1, 0, 0}, {2, 1, 1}, {0.25, 0, 0}});
    // at t = 3 the box spans [1.5, 3.5): centers 2 and 3
    const std::vector<int> labels = synth::ground_truth_occupancy(w, 3);
    EXPECT_EQ(labels[(1 * 4 + 0) * 4 + 0], 0);
    EXPECT_EQ(labels[(2 * 4 + 0) * 4 + 0], 3);
    EXPECT_EQ(labels[(3 * 4 + 0) * 4 + 0], 3);
    EXPECT_EQ(labels[(4 * 4 + 0) * 4 + 0], 0);
}

// ============================================================================
// ray casting
// ============================================================================

TEST(Raycast, HitsFirstOccupiedVoxelAtEntryDistance) {
    WorldSpec w = empty_world(10, 4, 4);
    w.boxes.push_back({1, {6, 0, 0}, {2, 4, 4}, {0, 0, 0}});
    const std::vector<int> labels = synth::ground_truth_occupancy(w, 1);
    const synth::RayHit hit = synth::raycast(labels, w.grid, {-3.0, 1.0, 1.0}, {1, 0, 0}, 40.0);
    ASSERT_TRUE(hit.hit);
    // voxel 6 spans [5.5, 6.5); entry from x = -3 is at distance 8.5
    EXPECT_NEAR(hit.distance, 8.5, 1e-9);
    EXPECT_EQ(hit.cls, 1);
}

TEST(Raycast, MissesEmptyWorld) {
    const WorldSpec w = empty_world(6, 6, 6);
    const std::vector<int> labels = synth::ground_truth_occupancy(w, 1);
    const synth::RayHit hit = synth::raycast(labels, w.grid, {-2.0, 2.0, 2.0}, {1, 0, 0}, 40.0);
    EXPECT_FALSE(hit.hit);
}

TEST(Raycast, DiagonalRayFindsBox) {
    WorldSpec w = empty_world(8, 8, 8);
    w.boxes.push_back({2, {4, 4, 4}, {2, 2, 2}, {0, 0, 0}});
    const std::vector<int> labels = synth::ground_truth_occupancy(w, 1);
    const double inv = 1.0 / std::sqrt(3.0);
    const synth::RayHit hit =
        synth::raycast(labels, w.grid, {0.0, 0.0, 0.0}, {inv, inv, inv}, 40.0);
    ASSERT_TRUE(hit.hit);
    EXPECT_EQ(hit.cls, 2);
    EXPECT_NEAR(hit.distance, 3.5 * std::sqrt(3.0), 1e-9);
}

// ============================================================================
// rendering
// ============================================================================

TEST(RenderFrame, NoiselessArgmaxHitsTrueBinOnBoxFace) {
    PipelineConfig cfg = small_cfg();
    cfg.grid_x = 16;
    cfg.grid_y = 6;
    cfg.grid_z = 4;
    cfg.depth_bins = 32;
    cfg.depth_min = 0.5;
    cfg.depth_max = 32.5;
    WorldSpec w = empty_world(16, 6, 4);
    w.boxes.push_back({1, {10, 0, 0}, {2, 6, 4}, {0, 0, 0}});

    const Trajectory traj = synth::make_trajectory(cfg, 1);
    const geometry::RayTable rays = synth::make_ray_table(cfg);
    const Tensor emb = synth::class_embeddings(4, cfg.channels, 7);
    const pipeline::FrameInput frame =
        synth::render_frame(w, traj, SensorNoise{0, 0, 7}, 1, rays, emb, cfg);

    // hit voxel center x = 10, camera plane x = -3: true depth 13 = bin 12
    const auto& g = frame.views[0].geom;
    for (std::size_t r = 0; r < g.rays; ++r) {
        std::size_t argmax = 0;
        for (std::size_t k = 1; k < g.bins; ++k)
            if (g.probs(r, k) > g.probs(r, argmax)) argmax = k;
        EXPECT_EQ(argmax, 12u);
    }
    EXPECT_LE(g.max_row_sum_error(), 1e-12);
}

TEST(RenderFrame, EmptyWorldPutsMassAtFarthestBin) {
    const PipelineConfig cfg = small_cfg();
    const WorldSpec w = empty_world(8, 6, 4);
    const Trajectory traj = synth::make_trajectory(cfg, 2);
    const geometry::RayTable rays = synth::make_ray_table(cfg);
    const Tensor emb = synth::class_embeddings(4, cfg.channels, 8);
    const pipeline::FrameInput frame =
        synth::render_frame(w, traj, SensorNoise{0, 0, 8}, 1, rays, emb, cfg);
    const auto& g = frame.views[0].geom;
    for (std::size_t r = 0; r < g.rays; ++r) {
        std::size_t argmax = 0;
        for (std::size_t k = 1; k < g.bins; ++k)
            if (g.probs(r, k) > g.probs(r, argmax)) argmax = k;
        EXPECT_EQ(argmax, g.bins - 1);
    }
}

TEST(RenderFrame, NoisyAverageRecoversTrueBin) {
    PipelineConfig cfg = small_cfg();
    WorldSpec w = empty_world(8, 6, 4);
    w.boxes.push_back({1, {5, 0, 0}, {2, 6, 4}, {0, 0, 0}});
    const Trajectory traj = synth::make_trajectory(cfg, 1);
    const geometry::RayTable rays = synth::make_ray_table(cfg);
    const Tensor emb = synth::class_embeddings(4, cfg.channels, 9);

    // truth: hit voxel center x = 5, depth 8 = bin 7 (centers 1..16)
    Tensor avg({rays.count(), cfg.depth_bins});
    const int renders = 200;
    for (int s = 0; s < renders; ++s) {
        const pipeline::FrameInput frame = synth::render_frame(
            w, traj, SensorNoise{1.5, 0.0, 1000 + static_cast<std::uint64_t>(s)}, 1, rays, emb,
            cfg);
        for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += frame.views[0].geom.probs[i];
    }
    for (std::size_t r = 0; r < rays.count(); ++r) {
        std::size_t argmax = 0;
        for (std::size_t k = 1; k < cfg.depth_bins; ++k)
            if (avg(r, k) > avg(r, argmax)) argmax = k;
        EXPECT_EQ(argmax, 7u);
    }
}

TEST(RenderFrame, DeterministicUnderFixedSeed) {
    const PipelineConfig cfg = small_cfg();
    const WorldSpec w = synth::make_default_world(8, 6, 4);
    const Trajectory traj = synth::make_trajectory(cfg, 3);
    const geometry::RayTable rays = synth::make_ray_table(cfg);
    const Tensor emb = synth::class_embeddings(4, cfg.channels, 10);
    const SensorNoise noise{0.8, 0.3, 77};

    const auto a = synth::render_frame(w, traj, noise, 2, rays, emb, cfg);
    const auto b = synth::render_frame(w, traj, noise, 2, rays, emb, cfg);
    EXPECT_EQ(std::memcmp(a.views[0].ray_features.data(), b.views[0].ray_features.data(),
                          a.views[0].ray_features.size() * sizeof(double)),
              0);
    EXPECT_EQ(std::memcmp(a.views[0].geom.probs.data(), b.views[0].geom.probs.data(),
                          a.views[0].geom.probs.size() * sizeof(double)),
              0);

    const SensorNoise other{0.8, 0.3, 78};
    const auto c = synth::render_frame(w, traj, other, 2, rays, emb, cfg);
    EXPECT_NE(std::memcmp(a.views[0].ray_features.data(), c.views[0].ray_features.data(),
                          a.views[0].ray_features.size() * sizeof(double)),
              0);
}

TEST(Trajectory, CameraDeltasComposeToDirectDelta) {
    PipelineConfig cfg = small_cfg();
    cfg.cam_step_x = 0.07;
    cfg.cam_yaw_step = 0.01;
    const std::size_t frames = 12;
    const Trajectory traj = synth::make_trajectory(cfg, frames);
    const WorldSpec w = synth::make_default_world(8, 6, 4);
    const geometry::RayTable rays = synth::make_ray_table(cfg);
    const Tensor emb = synth::class_embeddings(4, cfg.channels, 11);

    RigidTransform chain = RigidTransform::identity();
    for (std::size_t t = 2; t <= frames; ++t) {
        const auto frame = synth::render_frame(w, traj, SensorNoise{0, 0, 1}, t, rays, emb, cfg);
        // delta_t maps frame (t-1) camera coords into frame t camera coords
        chain = compose(frame.views[0].cam_prev_to_cur, chain);
        EXPECT_EQ(frame.ego_to_prev.orthonormality_error(), 0.0);
    }
    const RigidTransform direct = compose(traj.at(frames).inverse(), traj.at(1));
    double err = 0.0;
    for (int i = 0; i < 9; ++i)
        err = std::max(err, std::fabs(chain.rotation[i] - direct.rotation[i]));
    for (int i = 0; i < 3; ++i)
        err = std::max(err, std::fabs(chain.translation[i] - direct.translation[i]));
    EXPECT_LT(err, 1e-9);
}

TEST(RayTable, ParallelAndPinholeDirectionsAreUnitNorm) {
    PipelineConfig cfg = small_cfg();
    EXPECT_LE(synth::make_ray_table(cfg).max_direction_norm_error(), 1e-12);
    cfg.camera_model = CameraModel::kPinhole;
    cfg.rays_u = 5;
    cfg.rays_v = 4;
    const geometry::RayTable pinhole = synth::make_ray_table(cfg);
    EXPECT_EQ(pinhole.count(), 20u);
    EXPECT_LE(pinhole.max_direction_norm_error(), 1e-12);
    // common origin, central ray looks straight down the view axis
    for (std::size_t r = 0; r < pinhole.count(); ++r)
        for (int a = 0; a < 3; ++a) EXPECT_EQ(pinhole.origins(r, a), 0.0);
}

TEST(RenderFrame, PinholeCameraProducesValidFrames) {
    PipelineConfig cfg = small_cfg();
    cfg.camera_model = CameraModel::kPinhole;
    cfg.rays_u = 8;
    cfg.rays_v = 6;
    cfg.cam_focal = 6.0;
    cfg.cam_start_y = 2.5;  // aim through the volume
    cfg.cam_start_z = 1.5;
    const synth::WorldSpec w = synth::make_default_world(8, 6, 4);
    const synth::Trajectory traj = synth::make_trajectory(cfg, 2);
    const geometry::RayTable rays = synth::make_ray_table(cfg);
    const Tensor emb = synth::class_embeddings(4, cfg.channels, 13);
    const pipeline::FrameInput frame =
        synth::render_frame(w, traj, synth::SensorNoise{0.5, 0.2, 14}, 2, rays, emb, cfg);
    EXPECT_LE(frame.views[0].geom.max_row_sum_error(), 1e-9);
    EXPECT_TRUE(frame.views[0].ray_features.all_finite());
    // at least one ray must strike geometry (non-far argmax)
    bool any_hit = false;
    const auto& g = frame.views[0].geom;
    for (std::size_t r = 0; r < g.rays; ++r) {
        std::size_t argmax = 0;
        for (std::size_t k = 1; k < g.bins; ++k)
            if (g.probs(r, k) > g.probs(r, argmax)) argmax = k;
        if (argmax + 1 < g.bins) any_hit = true;
    }
    EXPECT_TRUE(any_hit);
}

TEST(MakeWorld, ValidatesDeclarations) {
    PipelineConfig cfg = small_cfg();
    cfg.world.present = true;
    cfg.world.classes = {"empty", "wall", "pillar", "mover"};
    cfg.world.dynamic_names = {"mover"};
    cfg.world.boxes.push_back({"wall", {20, 0, 0}, {2, 2, 2}, {0, 0, 0}});
    EXPECT_THROW(synth::make_world(cfg), DimensionError);  // outside grid

    cfg.world.boxes.clear();
    cfg.world.boxes.push_back({"wall", {1, 1, 1}, {2, 2, 2}, {1, 0, 0}});
    EXPECT_THROW(synth::make_world(cfg), DimensionError);  // static box moving

    cfg.world.boxes.clear();
    cfg.world.boxes.push_back({"ghost", {1, 1, 1}, {2, 2, 2}, {0, 0, 0}});
    EXPECT_THROW(synth::make_world(cfg), DimensionError);  // unknown class

    cfg.world.boxes.clear();
    cfg.world.boxes.push_back({"mover", {1, 1, 1}, {2, 2, 2}, {0.5, 0, 0}});
    EXPECT_NO_THROW(synth::make_world(cfg));
}
