#pragma once
// Streaming multi-level fusion pipeline. Each frame runs geometry fusion,
// 2D-to-3D lifting, motion fusion, voxel-level fusion, scene-level fusion,
// and the occupancy head, advancing the four single-frame-sized hidden
// states exactly once in that order. Every stage is individually toggleable.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gdfusion/config.hpp"
#include "gdfusion/gdft.hpp"
#include "gdfusion/geometry.hpp"
#include "gdfusion/motion.hpp"
#include "gdfusion/scene.hpp"
#include "gdfusion/tensor.hpp"
#include "gdfusion/voxel.hpp"

namespace gdfusion::pipeline {

// ============================================================================
// Types
// ============================================================================

struct ViewInput {
    Tensor ray_features;  // (rays, c)
    geometry::DepthDistribution geom;
    RigidTransform cam_prev_to_cur;  // previous camera frame -> current
    RigidTransform cam_to_grid;      // current camera frame -> grid frame
};

struct FrameInput {
    std::vector<ViewInput> views;
    RigidTransform ego_to_prev;  // grid coordinates, current frame -> previous
    std::size_t frame_index = 1;
    double dt = 0.5;
};

struct HeadParams {
    Tensor weight;  // (classes, c)
    Tensor bias;    // (classes)
};

struct OccupancyPrediction {
    Tensor logits;  // (classes, X, Y, Z)

    std::vector<int> labels() const {
        const std::size_t classes = logits.dim(0);
        const std::size_t n = logits.size() / classes;
        std::vector<int> out(n);
        for (std::size_t v = 0; v < n; ++v) {
            int best = 0;
            double best_val = logits[v];
            for (std::size_t cls = 1; cls < classes; ++cls) {
                const double val = logits[cls * n + v];
                if (val > best_val) {
                    best_val = val;
                    best = static_cast<int>(cls);
                }
            }
            out[v] = best;
        }
        return out;
    }
};

// The four historical states threaded through the sequence. Total serialized
// size is independent of how many frames have been folded in.
struct HiddenStateBundle {
    bool initialized = false;
    std::size_t frame_index = 0;  // last folded frame
    voxel::VoxelHidden h_v;
    scene::SceneParams h_s;
    motion::MotionField h_m;
    std::vector<geometry::DepthDistribution> h_g;  // per view
};

// Per-world frozen parameters; built deterministically from config + seed.
struct PipelineParams {
    scene::AugmentWeights aug;
    scene::SceneParams s0;
    motion::MotionPredictor motion_net;
    geometry::GateParams gate_net;
    voxel::FusionWeights fusion;
    HeadParams head;
    std::vector<geometry::RayTable> view_rays;  // camera frame, fixed per view
};

struct StepResult {
    OccupancyPrediction prediction;
    HiddenStateBundle states;
};

struct SequenceResult {
    std::vector<OccupancyPrediction> predictions;
    HiddenStateBundle final_states;
};

// ============================================================================
// Lift and head
// ============================================================================

// Simplified lift-splat: every (ray, bin) deposits probs * ray_feature into
// the 8 voxels around the 3D point at that bin's depth; out-of-volume corners
// are dropped.
inline void lift_view_into(VoxelGrid& out, const ViewInput& view,
                           const geometry::DepthDistribution& g,
                           const geometry::RayTable& rays) {
    if (g.rays != rays.count() || view.ray_features.rows() != rays.count())
        throw DimensionError("lift: ray count mismatch");
    if (view.ray_features.cols() != out.channels)
        throw DimensionError("lift: feature channel mismatch");
    const std::size_t n = out.num_voxels();
    const auto ex = static_cast<std::int64_t>(out.extent[0]);
    const auto ey = static_cast<std::int64_t>(out.extent[1]);
    const auto ez = static_cast<std::int64_t>(out.extent[2]);
    const auto& rot = view.cam_to_grid.rotation;

    for (std::size_t r = 0; r < rays.count(); ++r) {
        const std::array<double, 3> o = view.cam_to_grid.apply(
            {rays.origins(r, 0), rays.origins(r, 1), rays.origins(r, 2)});
        const std::array<double, 3> dc{rays.directions(r, 0), rays.directions(r, 1),
                                       rays.directions(r, 2)};
        const std::array<double, 3> d{rot[0] * dc[0] + rot[1] * dc[1] + rot[2] * dc[2],
                                      rot[3] * dc[0] + rot[4] * dc[1] + rot[5] * dc[2],
                                      rot[6] * dc[0] + rot[7] * dc[1] + rot[8] * dc[2]};
        const double* feat = view.ray_features.data() + r * out.channels;
        for (std::size_t k = 0; k < g.bins; ++k) {
            const double mass = g.probs(r, k);
            if (mass == 0.0) continue;
            const double depth = g.bin_centers[k];
            const double px = o[0] + depth * d[0];
            const double py = o[1] + depth * d[1];
            const double pz = o[2] + depth * d[2];
            const auto i0 = static_cast<std::int64_t>(std::floor(px));
            const auto j0 = static_cast<std::int64_t>(std::floor(py));
            const auto k0 = static_cast<std::int64_t>(std::floor(pz));
            const double dx = px - static_cast<double>(i0);
            const double dy = py - static_cast<double>(j0);
            const double dz = pz - static_cast<double>(k0);
            const double wx[2] = {1.0 - dx, dx};
            const double wy[2] = {1.0 - dy, dy};
            const double wz[2] = {1.0 - dz, dz};
            for (int di = 0; di < 2; ++di) {
                const std::int64_t i = i0 + di;
                if (i < 0 || i >= ex) continue;
                for (int dj = 0; dj < 2; ++dj) {
                    const std::int64_t j = j0 + dj;
                    if (j < 0 || j >= ey) continue;
                    for (int dk = 0; dk < 2; ++dk) {
                        const std::int64_t kk = k0 + dk;
                        if (kk < 0 || kk >= ez) continue;
                        const double w = mass * wx[di] * wy[dj] * wz[dk];
                        if (w == 0.0) continue;
                        const std::size_t voxel =
                            (static_cast<std::size_t>(i) * out.extent[1] +
                             static_cast<std::size_t>(j)) * out.extent[2] +
                            static_cast<std::size_t>(kk);
                        double* base = out.data.data() + voxel;
                        for (std::size_t ch = 0; ch < out.channels; ++ch)
                            base[ch * n] += w * feat[ch];
                    }
                }
            }
        }
    }
}

inline VoxelGrid lift(const FrameInput& frame,
                      const std::vector<geometry::DepthDistribution>& g_fused,
                      const PipelineParams& params, const PipelineConfig& cfg) {
    if (frame.views.size() != params.view_rays.size() || frame.views.size() != g_fused.size())
        throw DimensionError("lift: view count mismatch");
    VoxelGrid out(cfg.channels, cfg.grid_x, cfg.grid_y, cfg.grid_z);
    for (std::size_t v = 0; v < frame.views.size(); ++v)
        lift_view_into(out, frame.views[v], g_fused[v], params.view_rays[v]);
    return out;
}

// Per-voxel affine map from feature channels to class logits.
inline OccupancyPrediction head(const VoxelGrid& v, const HeadParams& p) {
    if (p.weight.cols() != v.channels) throw ShapeError("head: channel mismatch");
    const std::size_t classes = p.weight.rows();
    const std::size_t n = v.num_voxels();
    Tensor logits = matmul(p.weight, v.as_matrix());
    for (std::size_t cls = 0; cls < classes; ++cls) {
        const double b = p.bias[cls];
        for (std::size_t j = 0; j < n; ++j) logits[cls * n + j] += b;
    }
    return {logits.reshaped({classes, v.extent[0], v.extent[1], v.extent[2]})};
}

// ============================================================================
// Step / sequence
// ============================================================================

namespace detail {

inline void check_frame(const FrameInput& frame, const PipelineParams& params,
                        const PipelineConfig& cfg) {
    if (frame.views.size() != params.view_rays.size())
        throw DimensionError("step: frame view count disagrees with configured cameras");
    for (std::size_t v = 0; v < frame.views.size(); ++v) {
        const auto& view = frame.views[v];
        if (view.geom.bins != cfg.depth_bins)
            throw DimensionError("step: depth bin count mismatch");
        if (view.geom.rays != params.view_rays[v].count())
            throw DimensionError("step: geometry ray count mismatch");
        if (view.ray_features.cols() != cfg.channels)
            throw DimensionError("step: ray feature channels mismatch");
    }
}

}  // namespace detail

inline StepResult step(const FrameInput& frame, const HiddenStateBundle& states,
                       const PipelineParams& params, const PipelineConfig& cfg) {
    detail::check_frame(frame, params, cfg);
    const bool first = !states.initialized;
    if (!first && states.h_g.size() != frame.views.size())
        throw DimensionError("step: hidden state view count mismatch");

    HiddenStateBundle next;
    next.initialized = true;
    next.frame_index = frame.frame_index;
    next.h_g.resize(frame.views.size());

    // Temporal geometry fusion: gate-blend the warped history into the
    // current depth distributions before lifting.
    std::vector<geometry::DepthDistribution> g_fused(frame.views.size());
    for (std::size_t v = 0; v < frame.views.size(); ++v) {
        const auto& g_now = frame.views[v].geom;
        if (!cfg.fuse_geometry || first) {
            next.h_g[v] = g_now;
        } else {
            const geometry::CameraPose pose{frame.views[v].cam_prev_to_cur,
                                            params.view_rays[v]};
            const geometry::DepthDistribution warped = warp_geometry(states.h_g[v], pose);
            const Tensor gates = geometry::gate(warped, g_now, params.gate_net);
            next.h_g[v] = geometry_update(warped, g_now, gates);
        }
        g_fused[v] = next.h_g[v];
    }

    const VoxelGrid v_raw = lift(frame, g_fused, params, cfg);

    // Temporal motion fusion: pull the current offset prediction toward the
    // warped history. The predictor consumes the raw lifted features.
    motion::MotionField m_fused(cfg.grid_x, cfg.grid_y, cfg.grid_z);
    if (cfg.fuse_motion) {
        const motion::MotionField m_now = predict_motion(v_raw, params.motion_net);
        if (first) {
            next.h_m = m_now;
        } else {
            const motion::MotionField grad =
                motion_gradient(states.h_m, m_now, frame.ego_to_prev);
            next.h_m = motion_update(m_now, grad, cfg.eta_m);
        }
        m_fused = next.h_m;
    } else {
        next.h_m = m_fused;
    }

    // Voxel-level fusion with sinusoidal time embedding on the current frame.
    VoxelGrid v_in = v_raw;
    if (cfg.fuse_voxel && cfg.time_embedding) {
        const Tensor e = voxel::time_embed(frame.frame_index, frame.dt, cfg.channels);
        const std::size_t n = v_in.num_voxels();
        for (std::size_t ch = 0; ch < cfg.channels; ++ch) {
            double* row = v_in.data.data() + ch * n;
            for (std::size_t j = 0; j < n; ++j) row[j] += e[ch];
        }
    }
    VoxelGrid v_fused;
    if (cfg.fuse_voxel) {
        if (!first && !states.h_v.state.same_shape(v_in))
            throw DimensionError("step: grid extents changed mid-sequence");
        const voxel::VoxelHidden& h_prev = first ? voxel::VoxelHidden{v_in} : states.h_v;
        next.h_v = voxel_update(h_prev, v_in, m_fused, frame.ego_to_prev, params.fusion);
        v_fused = next.h_v.state;
    } else {
        next.h_v.state = v_in;
        v_fused = v_in;
    }

    // Scene-level fusion operates on the voxel-fused features: one descent
    // step on the matching loss, then the fused parameters transform the
    // features entering the head. eta_s is a mean-square step size, so the
    // summed-loss gradient is rescaled by 1/(c n).
    VoxelGrid v_hat;
    if (cfg.fuse_scene) {
        const scene::SceneParams& s_prev = first ? params.s0 : states.h_s;
        const Tensor v_mat = v_fused.as_matrix();
        const scene::GradientResult gr = scene_gradient(v_mat, s_prev, params.aug);
        const double eta_eff =
            cfg.eta_s / static_cast<double>(cfg.channels * v_fused.num_voxels());
        next.h_s = scene_update(s_prev, gr.grad, eta_eff);
        v_hat = VoxelGrid::from_matrix(scene_apply(v_mat, next.h_s, params.aug),
                                       v_fused.extent);
    } else {
        next.h_s = first ? params.s0 : states.h_s;
        v_hat = v_fused;
    }

    return {head(v_hat, params.head), std::move(next)};
}

inline SequenceResult run_sequence(const std::vector<FrameInput>& frames,
                                   const PipelineParams& params, const PipelineConfig& cfg,
                                   HiddenStateBundle initial = {}) {
    if (frames.empty()) throw std::invalid_argument("run_sequence: empty frame list");
    SequenceResult out;
    out.predictions.reserve(frames.size());
    HiddenStateBundle states = std::move(initial);
    for (const FrameInput& frame : frames) {
        StepResult r = step(frame, states, params, cfg);
        out.predictions.push_back(std::move(r.prediction));
        states = std::move(r.states);
    }
    out.final_states = std::move(states);
    return out;
}

// ============================================================================
// Head fitting
// ============================================================================

namespace detail {

// Cholesky solve for the SPD ridge system; dim is small (channels + 1).
inline std::vector<double> cholesky_solve(std::vector<double> a, std::vector<double> rhs,
                                          std::size_t dim, std::size_t nrhs) {
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i * dim + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * dim + k] * a[j * dim + k];
            if (i == j) {
                if (s <= 0.0) throw std::runtime_error("cholesky: matrix not positive definite");
                a[i * dim + i] = std::sqrt(s);
            } else {
                a[i * dim + j] = s / a[j * dim + j];
            }
        }
    }
    for (std::size_t r = 0; r < nrhs; ++r) {
        for (std::size_t i = 0; i < dim; ++i) {
            double s = rhs[i * nrhs + r];
            for (std::size_t k = 0; k < i; ++k) s -= a[i * dim + k] * rhs[k * nrhs + r];
            rhs[i * nrhs + r] = s / a[i * dim + i];
        }
        for (std::size_t ii = dim; ii-- > 0;) {
            double s = rhs[ii * nrhs + r];
            for (std::size_t k = ii + 1; k < dim; ++k) s -= a[k * dim + ii] * rhs[k * nrhs + r];
            rhs[ii * nrhs + r] = s / a[ii * dim + ii];
        }
    }
    return rhs;
}

}  // namespace detail

// Closed-form ridge regression of one-hot labels on per-voxel features (plus
// a bias), accumulated over the supplied frames. lambda is per sample.
inline HeadParams fit_head_ridge(const std::vector<VoxelGrid>& feature_frames,
                                 const std::vector<std::vector<int>>& label_frames,
                                 std::size_t num_classes, double lambda) {
    if (feature_frames.empty() || feature_frames.size() != label_frames.size())
        throw std::invalid_argument("fit_head_ridge: mismatched inputs");
    const std::size_t c = feature_frames[0].channels;
    const std::size_t dim = c + 1;
    std::vector<double> gram(dim * dim, 0.0);
    std::vector<double> rhs(dim * num_classes, 0.0);
    std::size_t samples = 0;

    std::vector<double> phi(dim);
    for (std::size_t f = 0; f < feature_frames.size(); ++f) {
        const VoxelGrid& grid = feature_frames[f];
        const std::vector<int>& labels = label_frames[f];
        const std::size_t n = grid.num_voxels();
        if (labels.size() != n) throw std::invalid_argument("fit_head_ridge: label count");
        for (std::size_t v = 0; v < n; ++v) {
            const auto cls = static_cast<std::size_t>(labels[v]);
            if (cls >= num_classes) throw std::invalid_argument("fit_head_ridge: label range");
            for (std::size_t ch = 0; ch < c; ++ch) phi[ch] = grid.data[ch * n + v];
            phi[c] = 1.0;
            for (std::size_t i = 0; i < dim; ++i)
                for (std::size_t j = 0; j <= i; ++j) gram[i * dim + j] += phi[i] * phi[j];
            for (std::size_t i = 0; i < dim; ++i) rhs[i * num_classes + cls] += phi[i];
            ++samples;
        }
    }
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = i + 1; j < dim; ++j) gram[i * dim + j] = gram[j * dim + i];
        gram[i * dim + i] += lambda * static_cast<double>(samples);
    }

    const std::vector<double> theta = detail::cholesky_solve(std::move(gram), std::move(rhs),
                                                             dim, num_classes);
    HeadParams p{Tensor({num_classes, c}), Tensor({num_classes})};
    for (std::size_t cls = 0; cls < num_classes; ++cls) {
        for (std::size_t ch = 0; ch < c; ++ch)
            p.weight(cls, ch) = theta[ch * num_classes + cls];
        p.bias[cls] = theta[c * num_classes + cls];
    }
    return p;
}

// ============================================================================
// Bundle serialization (GDFT container + fixed-width manifest)
// ============================================================================

namespace detail {

inline std::string fixed_index(std::size_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%012zu", v);
    return buf;
}

inline std::map<std::string, std::string> read_manifest(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw gdft::IoError("bundle: cannot open manifest " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

}  // namespace detail

inline void save_bundle(const std::filesystem::path& dir, const HiddenStateBundle& b) {
    std::filesystem::create_directories(dir);
    gdft::write_file(dir / "h_v.gdft", b.h_v.state.data);
    gdft::write_file(dir / "h_s_gamma.gdft", b.h_s.gamma);
    gdft::write_file(dir / "h_s_beta.gdft", b.h_s.beta);
    gdft::write_file(dir / "h_s_w.gdft", b.h_s.w);
    gdft::write_file(dir / "h_s_b.gdft", b.h_s.b);
    gdft::write_file(dir / "h_m.gdft", b.h_m.offsets.data);
    for (std::size_t v = 0; v < b.h_g.size(); ++v) {
        gdft::write_file(dir / ("h_g_probs_" + std::to_string(v) + ".gdft"), b.h_g[v].probs);
        gdft::write_file(dir / ("h_g_centers_" + std::to_string(v) + ".gdft"),
                         b.h_g[v].bin_centers);
    }
    std::ofstream os(dir / "manifest.txt");
    os << "format = gdfusion-bundle\n";
    os << "version = 1\n";
    os << "initialized = " << (b.initialized ? 1 : 0) << "\n";
    os << "frame_index = " << detail::fixed_index(b.frame_index) << "\n";
    os << "views = " << detail::fixed_index(b.h_g.size()) << "\n";
    os << "tensor_h_v = h_v.gdft\n";
    os << "tensor_h_s = h_s_gamma.gdft h_s_beta.gdft h_s_w.gdft h_s_b.gdft\n";
    os << "tensor_h_m = h_m.gdft\n";
    for (std::size_t v = 0; v < b.h_g.size(); ++v)
        os << "tensor_h_g_" << v << " = h_g_probs_" << v << ".gdft h_g_centers_" << v
           << ".gdft\n";
}

inline HiddenStateBundle load_bundle(const std::filesystem::path& dir) {
    const auto kv = detail::read_manifest(dir / "manifest.txt");
    HiddenStateBundle b;
    b.initialized = kv.count("initialized") && kv.at("initialized") == "1";
    b.frame_index = kv.count("frame_index") ? std::stoull(kv.at("frame_index")) : 0;
    const std::size_t views = kv.count("views") ? std::stoull(kv.at("views")) : 0;
    b.h_v.state = VoxelGrid::wrap(gdft::read_file(dir / "h_v.gdft"));
    b.h_s.gamma = gdft::read_file(dir / "h_s_gamma.gdft");
    b.h_s.beta = gdft::read_file(dir / "h_s_beta.gdft");
    b.h_s.w = gdft::read_file(dir / "h_s_w.gdft");
    b.h_s.b = gdft::read_file(dir / "h_s_b.gdft");
    b.h_m = motion::MotionField(VoxelGrid::wrap(gdft::read_file(dir / "h_m.gdft")));
    for (std::size_t v = 0; v < views; ++v) {
        Tensor probs = gdft::read_file(dir / ("h_g_probs_" + std::to_string(v) + ".gdft"));
        Tensor centers = gdft::read_file(dir / ("h_g_centers_" + std::to_string(v) + ".gdft"));
        geometry::DepthDistribution g(probs.rows(), probs.cols(), std::move(centers));
        g.probs = std::move(probs);
        b.h_g.push_back(std::move(g));
    }
    return b;
}

namespace detail {

inline Tensor transform_tensor(const RigidTransform& t) {
    Tensor out({4, 3});
    for (int i = 0; i < 9; ++i) out[static_cast<std::size_t>(i)] = t.rotation[i];
    for (int i = 0; i < 3; ++i) out[9 + static_cast<std::size_t>(i)] = t.translation[i];
    return out;
}

inline RigidTransform tensor_transform(const Tensor& t) {
    RigidTransform out;
    for (int i = 0; i < 9; ++i) out.rotation[i] = t[static_cast<std::size_t>(i)];
    for (int i = 0; i < 3; ++i) out.translation[i] = t[9 + static_cast<std::size_t>(i)];
    return out;
}

}  // namespace detail

// Frame inputs use the same GDFT container: one tensor file per field with a
// manifest listing them.
inline void save_frame(const std::filesystem::path& dir, const FrameInput& frame) {
    std::filesystem::create_directories(dir);
    gdft::write_file(dir / "ego_to_prev.gdft", detail::transform_tensor(frame.ego_to_prev));
    for (std::size_t v = 0; v < frame.views.size(); ++v) {
        const std::string s = std::to_string(v);
        gdft::write_file(dir / ("features_" + s + ".gdft"), frame.views[v].ray_features);
        gdft::write_file(dir / ("geom_probs_" + s + ".gdft"), frame.views[v].geom.probs);
        gdft::write_file(dir / ("geom_centers_" + s + ".gdft"),
                         frame.views[v].geom.bin_centers);
        gdft::write_file(dir / ("cam_prev_to_cur_" + s + ".gdft"),
                         detail::transform_tensor(frame.views[v].cam_prev_to_cur));
        gdft::write_file(dir / ("cam_to_grid_" + s + ".gdft"),
                         detail::transform_tensor(frame.views[v].cam_to_grid));
    }
    std::ofstream os(dir / "manifest.txt");
    os << "format = gdfusion-frame\n";
    os << "version = 1\n";
    os << "frame_index = " << detail::fixed_index(frame.frame_index) << "\n";
    char dt_buf[40];
    std::snprintf(dt_buf, sizeof dt_buf, "%.17g", frame.dt);
    os << "dt = " << dt_buf << "\n";
    os << "views = " << detail::fixed_index(frame.views.size()) << "\n";
    os << "tensor_ego_to_prev = ego_to_prev.gdft\n";
    for (std::size_t v = 0; v < frame.views.size(); ++v)
        os << "tensor_view_" << v << " = features_" << v << ".gdft geom_probs_" << v
           << ".gdft geom_centers_" << v << ".gdft cam_prev_to_cur_" << v
           << ".gdft cam_to_grid_" << v << ".gdft\n";
}

inline FrameInput load_frame(const std::filesystem::path& dir) {
    const auto kv = detail::read_manifest(dir / "manifest.txt");
    FrameInput frame;
    frame.frame_index = kv.count("frame_index") ? std::stoull(kv.at("frame_index")) : 1;
    frame.dt = kv.count("dt") ? std::stod(kv.at("dt")) : 0.5;
    frame.ego_to_prev = detail::tensor_transform(gdft::read_file(dir / "ego_to_prev.gdft"));
    const std::size_t views = kv.count("views") ? std::stoull(kv.at("views")) : 0;
    for (std::size_t v = 0; v < views; ++v) {
        const std::string s = std::to_string(v);
        Tensor probs = gdft::read_file(dir / ("geom_probs_" + s + ".gdft"));
        Tensor centers = gdft::read_file(dir / ("geom_centers_" + s + ".gdft"));
        geometry::DepthDistribution g(probs.rows(), probs.cols(), std::move(centers));
        g.probs = std::move(probs);
        frame.views.push_back(
            {gdft::read_file(dir / ("features_" + s + ".gdft")), std::move(g),
             detail::tensor_transform(gdft::read_file(dir / ("cam_prev_to_cur_" + s + ".gdft"))),
             detail::tensor_transform(gdft::read_file(dir / ("cam_to_grid_" + s + ".gdft")))});
    }
    return frame;
}

// Exact serialized bytes per state component; the accounting derives from the
// container format alone.
inline std::vector<std::pair<std::string, std::size_t>> bundle_component_bytes(
    const HiddenStateBundle& b) {
    std::size_t h_s = gdft::byte_size(b.h_s.gamma) + gdft::byte_size(b.h_s.beta) +
                      gdft::byte_size(b.h_s.w) + gdft::byte_size(b.h_s.b);
    std::size_t h_g = 0;
    for (const auto& g : b.h_g) h_g += gdft::byte_size(g.probs) + gdft::byte_size(g.bin_centers);
    return {{"h_v", gdft::byte_size(b.h_v.state.data)},
            {"h_s", h_s},
            {"h_m", gdft::byte_size(b.h_m.offsets.data)},
            {"h_g", h_g}};
}

}  // namespace gdfusion::pipeline
