#pragma once
// Deterministic synthetic world and sensor generator: axis-aligned boxes
// with semantic classes (constant-velocity dynamics), a moving camera, noisy
// per-ray depth distributions, per-ray class-embedding features, and exact
// ground-truth occupancy labels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gdfusion/config.hpp"
#include "gdfusion/geometry.hpp"
#include "gdfusion/pipeline.hpp"
#include "gdfusion/rng.hpp"
#include "gdfusion/tensor.hpp"

namespace gdfusion::synth {

struct ClassDef {
    std::string name;
    bool dynamic = false;
};

struct Box {
    int cls = 0;
    std::array<double, 3> min{0, 0, 0};
    std::array<double, 3> extent{0, 0, 0};
    std::array<double, 3> velocity{0, 0, 0};
};

struct WorldSpec {
    std::array<std::size_t, 3> grid{16, 16, 8};
    std::vector<ClassDef> classes;  // index 0 is the single empty class
    std::vector<Box> boxes;         // listed order; later boxes win overlaps

    std::size_t num_voxels() const { return grid[0] * grid[1] * grid[2]; }
    std::size_t num_classes() const { return classes.size(); }
};

struct SensorNoise {
    double sigma_depth = 0.0;  // std of score-space perturbation before softmax
    double sigma_feat = 0.0;   // std of additive feature noise
    std::uint64_t seed = 1;
};

// Camera pose per frame (camera frame -> grid frame), 1-based frame index.
struct Trajectory {
    std::vector<RigidTransform> cam_to_grid;

    const RigidTransform& at(std::size_t t) const { return cam_to_grid.at(t - 1); }
    std::size_t frames() const { return cam_to_grid.size(); }
};

// ============================================================================
// World construction
// ============================================================================

inline WorldSpec make_default_world(std::size_t x, std::size_t y, std::size_t z) {
    WorldSpec w;
    w.grid = {x, y, z};
    w.classes = {{"empty", false}, {"wall", false}, {"pillar", false}, {"mover", true}};
    const double fx = static_cast<double>(x), fy = static_cast<double>(y),
                 fz = static_cast<double>(z);
    // one-voxel-thick structures keep every occupied voxel camera-visible;
    // the back wall leaves an open corridor behind the mover's path so its
    // rays exit the volume instead of striking a second surface
    const double gap_lo = std::floor(fy * 0.3);
    const double gap_hi = std::floor(fy * 0.6);
    w.boxes.push_back({1, {fx - 3.0, 0.0, 0.0}, {1.0, gap_lo, fz}, {0, 0, 0}});
    w.boxes.push_back({1, {fx - 3.0, gap_hi, 0.0}, {1.0, fy - gap_hi, fz}, {0, 0, 0}});
    w.boxes.push_back({2, {std::floor(fx / 3.0), std::floor(fy / 8.0), 0.0},
                       {1.0, 2.0, std::ceil(fz * 0.6)}, {0, 0, 0}});
    w.boxes.push_back({2, {std::floor(fx / 2.0), std::floor(fy * 2.0 / 3.0), 0.0},
                       {1.0, 3.0, std::ceil(fz * 0.75)}, {0, 0, 0}});
    w.boxes.push_back({3, {std::floor(fx / 5.0), std::floor(fy * 0.3) + 1.0, 1.0},
                       {1.0, 2.0, 2.0}, {0.0, 0.05, 0.0}});
    return w;
}

inline WorldSpec make_world(const PipelineConfig& cfg) {
    if (!cfg.world.present) return make_default_world(cfg.grid_x, cfg.grid_y, cfg.grid_z);

    WorldSpec w;
    w.grid = {cfg.grid_x, cfg.grid_y, cfg.grid_z};
    if (cfg.world.classes.empty()) throw DimensionError("world: class list is empty");
    if (cfg.world.classes.size() != cfg.num_classes)
        throw DimensionError("world: class list length disagrees with model classes");
    for (const auto& name : cfg.world.classes) {
        const bool dyn = std::find(cfg.world.dynamic_names.begin(), cfg.world.dynamic_names.end(),
                                   name) != cfg.world.dynamic_names.end();
        w.classes.push_back({name, dyn});
    }
    if (w.classes[0].dynamic) throw DimensionError("world: the empty class cannot be dynamic");

    for (const auto& decl : cfg.world.boxes) {
        int cls = -1;
        for (std::size_t i = 0; i < w.classes.size(); ++i)
            if (w.classes[i].name == decl.class_name) cls = static_cast<int>(i);
        if (cls < 0) throw DimensionError("world: box references unknown class '" +
                                          decl.class_name + "'");
        if (cls == 0) throw DimensionError("world: boxes cannot use the empty class");
        for (int a = 0; a < 3; ++a) {
            if (decl.min[a] < 0.0 ||
                decl.min[a] + decl.extent[a] > static_cast<double>(w.grid[a]))
                throw DimensionError("world: box for '" + decl.class_name +
                                     "' extends outside the grid at t = 0");
            if (!w.classes[cls].dynamic && decl.velocity[a] != 0.0)
                throw DimensionError("world: static-class box has nonzero velocity");
        }
        w.boxes.push_back({cls, decl.min, decl.extent, decl.velocity});
    }
    return w;
}

// ============================================================================
// Ground truth
// ============================================================================

// Voxel centers sit at integer coordinates; a box [min, min + extent) claims
// the centers it contains. Dynamic boxes advance by velocity * (t - 1);
// overlaps resolve to the later-listed box.
inline std::vector<int> ground_truth_occupancy(const WorldSpec& world, std::size_t t) {
    if (t < 1) throw std::invalid_argument("ground_truth_occupancy: frames are 1-based");
    std::vector<int> labels(world.num_voxels(), 0);
    const double age = static_cast<double>(t - 1);
    for (const Box& box : world.boxes) {
        std::array<double, 3> lo, hi;
        for (int a = 0; a < 3; ++a) {
            lo[a] = box.min[a] + box.velocity[a] * age;
            hi[a] = lo[a] + box.extent[a];
        }
        const auto clamp_lo = [](double v) { return std::max(0.0, std::ceil(v)); };
        const auto i_lo = static_cast<std::size_t>(clamp_lo(lo[0]));
        const auto j_lo = static_cast<std::size_t>(clamp_lo(lo[1]));
        const auto k_lo = static_cast<std::size_t>(clamp_lo(lo[2]));
        for (std::size_t i = i_lo; i < world.grid[0] && static_cast<double>(i) < hi[0]; ++i)
            for (std::size_t j = j_lo; j < world.grid[1] && static_cast<double>(j) < hi[1]; ++j)
                for (std::size_t k = k_lo; k < world.grid[2] && static_cast<double>(k) < hi[2];
                     ++k)
                    labels[(i * world.grid[1] + j) * world.grid[2] + k] = box.cls;
    }
    return labels;
}

// ============================================================================
// Ray casting
// ============================================================================

struct RayHit {
    bool hit = false;
    double distance = 0.0;  // entry distance of the hit voxel along the ray
    int cls = 0;
    std::array<std::int64_t, 3> cell{0, 0, 0};
};

// Amanatides-Woo traversal over voxel cells centered on integer coordinates
// (cell (i,j,k) spans [i-0.5, i+0.5) per axis). Returns the entry distance of
// the first non-empty cell.
inline RayHit raycast(const std::vector<int>& labels, const std::array<std::size_t, 3>& grid,
                      std::array<double, 3> origin, std::array<double, 3> dir,
                      double max_dist) {
    // Shift so cells become [i, i+1).
    std::array<double, 3> o{origin[0] + 0.5, origin[1] + 0.5, origin[2] + 0.5};
    const std::array<double, 3> ext{static_cast<double>(grid[0]), static_cast<double>(grid[1]),
                                    static_cast<double>(grid[2])};

    double t_enter = 0.0, t_exit = max_dist;
    for (int a = 0; a < 3; ++a) {
        if (dir[a] == 0.0) {
            if (o[a] < 0.0 || o[a] >= ext[a]) return {};
        } else {
            double t0 = (0.0 - o[a]) / dir[a];
            double t1 = (ext[a] - o[a]) / dir[a];
            if (t0 > t1) std::swap(t0, t1);
            t_enter = std::max(t_enter, t0);
            t_exit = std::min(t_exit, t1);
        }
    }
    if (t_enter >= t_exit) return {};

    const double kNudge = 1e-9;
    std::array<double, 3> p{o[0] + dir[0] * (t_enter + kNudge), o[1] + dir[1] * (t_enter + kNudge),
                            o[2] + dir[2] * (t_enter + kNudge)};
    std::array<std::int64_t, 3> cell;
    std::array<std::int64_t, 3> step;
    std::array<double, 3> t_max, t_delta;
    for (int a = 0; a < 3; ++a) {
        cell[a] = std::clamp(static_cast<std::int64_t>(std::floor(p[a])), std::int64_t{0},
                             static_cast<std::int64_t>(grid[a]) - 1);
        if (dir[a] > 0.0) {
            step[a] = 1;
            t_max[a] = (static_cast<double>(cell[a] + 1) - o[a]) / dir[a];
            t_delta[a] = 1.0 / dir[a];
        } else if (dir[a] < 0.0) {
            step[a] = -1;
            t_max[a] = (static_cast<double>(cell[a]) - o[a]) / dir[a];
            t_delta[a] = -1.0 / dir[a];
        } else {
            step[a] = 0;
            t_max[a] = std::numeric_limits<double>::infinity();
            t_delta[a] = std::numeric_limits<double>::infinity();
        }
    }

    double t_cell = t_enter;
    while (t_cell < t_exit) {
        const int cls = labels[(static_cast<std::size_t>(cell[0]) * grid[1] +
                                static_cast<std::size_t>(cell[1])) * grid[2] +
                               static_cast<std::size_t>(cell[2])];
        if (cls != 0) return {true, t_cell, cls, cell};

        int axis = 0;
        if (t_max[1] < t_max[axis]) axis = 1;
        if (t_max[2] < t_max[axis]) axis = 2;
        t_cell = t_max[axis];
        cell[axis] += step[axis];
        if (cell[axis] < 0 || cell[axis] >= static_cast<std::int64_t>(grid[axis])) break;
        t_max[axis] += t_delta[axis];
    }
    return {};
}

// ============================================================================
// Camera
// ============================================================================

inline geometry::RayTable make_ray_table(const PipelineConfig& cfg) {
    const std::size_t nu = cfg.rays_u == 0 ? cfg.grid_y : cfg.rays_u;
    const std::size_t nv = cfg.rays_v == 0 ? cfg.grid_z : cfg.rays_v;
    const std::size_t n = nu * nv;
    geometry::RayTable rays{Tensor({n, 3}), Tensor({n, 3})};
    std::size_t r = 0;
    for (std::size_t u = 0; u < nu; ++u) {
        for (std::size_t v = 0; v < nv; ++v, ++r) {
            if (cfg.camera_model == CameraModel::kParallel) {
                rays.origins(r, 0) = 0.0;
                rays.origins(r, 1) = static_cast<double>(u);
                rays.origins(r, 2) = static_cast<double>(v);
                rays.directions(r, 0) = 1.0;
                rays.directions(r, 1) = 0.0;
                rays.directions(r, 2) = 0.0;
            } else {
                const double du = static_cast<double>(u) - 0.5 * static_cast<double>(nu - 1);
                const double dv = static_cast<double>(v) - 0.5 * static_cast<double>(nv - 1);
                const double norm = std::sqrt(cfg.cam_focal * cfg.cam_focal + du * du + dv * dv);
                rays.origins(r, 0) = rays.origins(r, 1) = rays.origins(r, 2) = 0.0;
                rays.directions(r, 0) = cfg.cam_focal / norm;
                rays.directions(r, 1) = du / norm;
                rays.directions(r, 2) = dv / norm;
            }
        }
    }
    return rays;
}

inline Trajectory make_trajectory(const PipelineConfig& cfg, std::size_t frames) {
    Trajectory traj;
    traj.cam_to_grid.reserve(frames);
    for (std::size_t t = 1; t <= frames; ++t) {
        const double age = static_cast<double>(t - 1);
        RigidTransform pose = RigidTransform::rotation_z(cfg.cam_yaw_step * age);
        pose.translation = {cfg.cam_start_x + cfg.cam_step_x * age,
                            cfg.cam_start_y + cfg.cam_step_y * age,
                            cfg.cam_start_z + cfg.cam_step_z * age};
        traj.cam_to_grid.push_back(pose);
    }
    return traj;
}

// Class embeddings: the empty class maps to the zero vector, every other
// class to a seeded uniform(-1, 1) vector.
inline Tensor class_embeddings(std::size_t num_classes, std::size_t channels,
                               std::uint64_t seed) {
    Tensor e({num_classes, channels});
    rng::Stream rs(seed, 0xE3B0);
    for (std::size_t cls = 1; cls < num_classes; ++cls)
        for (std::size_t ch = 0; ch < channels; ++ch) e(cls, ch) = rs.uniform(-1.0, 1.0);
    return e;
}

// ============================================================================
// Frame rendering
// ============================================================================

// True depth is the entry distance of the first non-empty voxel along the
// ray; rays that hit nothing put their score peak at the farthest bin. Depth
// noise perturbs scores before the softmax so the distribution stays a
// simplex by construction.
inline pipeline::ViewInput render_view(const WorldSpec& world, const Trajectory& ego,
                                       const SensorNoise& noise, std::size_t t,
                                       const geometry::RayTable& rays, const Tensor& embeddings,
                                       const PipelineConfig& cfg) {
    const std::vector<int> labels = ground_truth_occupancy(world, t);
    const RigidTransform& pose = ego.at(t);
    const RigidTransform prev_pose = t > 1 ? ego.at(t - 1) : pose;

    const std::size_t nrays = rays.count();
    const std::size_t nbins = cfg.depth_bins;
    const std::size_t channels = cfg.channels;
    pipeline::ViewInput view{Tensor({nrays, channels}),
                             geometry::DepthDistribution(
                                 nrays, nbins,
                                 geometry::DepthDistribution::uniform_centers(
                                     nbins, cfg.depth_min, cfg.depth_max)),
                             compose(pose.inverse(), prev_pose), pose};

    const double bin_width = view.geom.bin_width();
    const double tau_len = cfg.depth_tau * bin_width;
    rng::Stream rs(noise.seed, (static_cast<std::uint64_t>(t) << 20) | 0xA11CE);

    std::vector<double> scores(nbins);
    for (std::size_t r = 0; r < nrays; ++r) {
        const std::array<double, 3> o =
            pose.apply({rays.origins(r, 0), rays.origins(r, 1), rays.origins(r, 2)});
        const std::array<double, 3> d_cam{rays.directions(r, 0), rays.directions(r, 1),
                                          rays.directions(r, 2)};
        const auto& rot = pose.rotation;
        const std::array<double, 3> d{
            rot[0] * d_cam[0] + rot[1] * d_cam[1] + rot[2] * d_cam[2],
            rot[3] * d_cam[0] + rot[4] * d_cam[1] + rot[5] * d_cam[2],
            rot[6] * d_cam[0] + rot[7] * d_cam[1] + rot[8] * d_cam[2]};

        const RayHit hit = raycast(labels, world.grid, o, d, cfg.depth_max + bin_width);
        // report depth to the hit voxel's center so the lift deposits feature
        // mass onto the occupied sample node rather than the face plane
        double d_true = view.geom.bin_centers[nbins - 1];
        if (hit.hit) {
            d_true = (static_cast<double>(hit.cell[0]) - o[0]) * d[0] +
                     (static_cast<double>(hit.cell[1]) - o[1]) * d[1] +
                     (static_cast<double>(hit.cell[2]) - o[2]) * d[2];
        }

        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < nbins; ++k) {
            const double off = (view.geom.bin_centers[k] - d_true) / tau_len;
            scores[k] = -off * off + noise.sigma_depth * rs.gaussian();
            best = std::max(best, scores[k]);
        }
        double total = 0.0;
        for (std::size_t k = 0; k < nbins; ++k) {
            scores[k] = std::exp(scores[k] - best);
            total += scores[k];
        }
        for (std::size_t k = 0; k < nbins; ++k) view.geom.probs(r, k) = scores[k] / total;

        const int cls = hit.hit ? hit.cls : 0;
        for (std::size_t ch = 0; ch < channels; ++ch)
            view.ray_features(r, ch) =
                embeddings(static_cast<std::size_t>(cls), ch) + noise.sigma_feat * rs.gaussian();
    }
    return view;
}

// The grid is world-fixed, so the per-frame grid transform is the identity;
// the camera trajectory carries all ego motion.
inline pipeline::FrameInput render_frame(const WorldSpec& world, const Trajectory& ego,
                                         const SensorNoise& noise, std::size_t t,
                                         const geometry::RayTable& rays,
                                         const Tensor& embeddings, const PipelineConfig& cfg) {
    if (t < 1 || t > ego.frames())
        throw std::invalid_argument("render_frame: frame outside trajectory");
    pipeline::FrameInput frame;
    frame.frame_index = t;
    frame.dt = cfg.dt;
    frame.ego_to_prev = RigidTransform::identity();
    frame.views.push_back(render_view(world, ego, noise, t, rays, embeddings, cfg));
    return frame;
}

}  // namespace gdfusion::synth
