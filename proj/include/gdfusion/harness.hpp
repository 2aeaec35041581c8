#pragma once
// Driver-level glue: build the seeded world and frozen parameters (with the
// head fitted by ridge regression on a noiseless single-frame pass), render
// frame sequences, map fusion-combination names onto config toggles, and
// evaluate runs into CSV metric rows.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gdfusion/config.hpp"
#include "gdfusion/metrics.hpp"
#include "gdfusion/pipeline.hpp"
#include "gdfusion/synthworld.hpp"

namespace gdfusion::harness {

struct World {
    synth::WorldSpec spec;
    synth::Trajectory trajectory;
    geometry::RayTable rays;
    Tensor embeddings;
    pipeline::PipelineParams params;
    std::vector<pipeline::FrameInput> frames;      // noisy inputs, 1..T
    std::vector<std::vector<int>> ground_truth;    // per frame
};

inline pipeline::PipelineParams make_params(const PipelineConfig& cfg,
                                            const geometry::RayTable& rays) {
    pipeline::PipelineParams p;
    p.aug = scene::AugmentWeights::seeded(cfg.channels, cfg.seed, !cfg.scene_random_qo);
    p.s0 = scene::SceneParams::initial(cfg.channels, cfg.scene_gamma0);
    p.motion_net = motion::MotionPredictor::seeded(cfg.channels, cfg.seed,
                                                   cfg.motion_weight_scale);
    p.gate_net = geometry::GateParams::zeros(cfg.depth_bins);
    if (cfg.voxel_mode == VoxelWeightMode::kEma) {
        p.fusion = voxel::FusionWeights::ema(cfg.channels, cfg.ema_alpha);
    } else {
        p.fusion.a_v = gdft::read_file(cfg.voxel_a_file);
        p.fusion.b_v = gdft::read_file(cfg.voxel_b_file);
        if (p.fusion.a_v.rank() != 2 || p.fusion.a_v.rows() != cfg.channels ||
            p.fusion.b_v.rows() != cfg.channels)
            throw DimensionError("voxel weight files disagree with channel count");
    }
    p.head = pipeline::HeadParams{Tensor({cfg.num_classes, cfg.channels}),
                                  Tensor({cfg.num_classes})};
    p.view_rays = {rays};
    return p;
}

// The head is fit once per world on noiseless single-frame lifted features
// against ground-truth one-hot labels, so fusion benefits are measured
// without any iterative training.
inline World build_world(const PipelineConfig& cfg) {
    validate_config(cfg);
    World w;
    w.spec = synth::make_world(cfg);
    w.trajectory = synth::make_trajectory(cfg, cfg.frames);
    w.rays = synth::make_ray_table(cfg);
    w.embeddings = synth::class_embeddings(cfg.num_classes, cfg.channels, cfg.seed);
    w.params = make_params(cfg, w.rays);

    const synth::SensorNoise clean{0.0, 0.0, cfg.seed};
    std::vector<VoxelGrid> features;
    std::vector<std::vector<int>> labels;
    features.reserve(cfg.frames);
    labels.reserve(cfg.frames);
    for (std::size_t t = 1; t <= cfg.frames; ++t) {
        const pipeline::FrameInput frame =
            synth::render_frame(w.spec, w.trajectory, clean, t, w.rays, w.embeddings, cfg);
        std::vector<geometry::DepthDistribution> g_now;
        for (const auto& view : frame.views) g_now.push_back(view.geom);
        features.push_back(pipeline::lift(frame, g_now, w.params, cfg));
        labels.push_back(synth::ground_truth_occupancy(w.spec, t));
    }
    w.params.head =
        pipeline::fit_head_ridge(features, labels, cfg.num_classes, cfg.head_lambda);

    const synth::SensorNoise noisy{cfg.sigma_depth, cfg.sigma_feat, cfg.seed};
    for (std::size_t t = 1; t <= cfg.frames; ++t) {
        w.frames.push_back(
            synth::render_frame(w.spec, w.trajectory, noisy, t, w.rays, w.embeddings, cfg));
        w.ground_truth.push_back(labels[t - 1]);
    }
    return w;
}

// ============================================================================
// Fusion combinations
// ============================================================================

// Combination names: "B" (no fusion), "B" plus any of V, S, M, G (voxel,
// scene, motion, geometry), "Full" (all four), or "config" (the [fusion]
// toggles as given).
struct Combo {
    std::string name;
    bool voxel = false, scene = false, motion = false, geometry = false;
    bool from_config = false;
};

inline Combo parse_combo(const std::string& name) {
    Combo c;
    c.name = name;
    if (name == "Full") {
        c.voxel = c.scene = c.motion = c.geometry = true;
        return c;
    }
    if (name == "config") {
        c.from_config = true;
        return c;
    }
    if (name.empty() || name[0] != 'B')
        throw std::invalid_argument("fusion combo must start with 'B': " + name);
    for (std::size_t i = 1; i < name.size(); ++i) {
        switch (name[i]) {
            case 'V': c.voxel = true; break;
            case 'S': c.scene = true; break;
            case 'M': c.motion = true; break;
            case 'G': c.geometry = true; break;
            default:
                throw std::invalid_argument("unknown fusion letter '" +
                                            std::string(1, name[i]) + "' in " + name);
        }
    }
    return c;
}

inline PipelineConfig apply_combo(PipelineConfig cfg, const Combo& combo) {
    if (combo.from_config) return cfg;
    cfg.fuse_voxel = combo.voxel;
    cfg.fuse_scene = combo.scene;
    cfg.fuse_motion = combo.motion;
    cfg.fuse_geometry = combo.geometry;
    return cfg;
}

// ============================================================================
// Evaluation
// ============================================================================

struct RunMetrics {
    std::string run_id;
    double miou = 0.0;
    double iou = 0.0;
    std::optional<double> miou_dynamic;
    std::vector<metrics::CsvRow> rows;
    pipeline::HiddenStateBundle final_states;
};

inline RunMetrics evaluate_run(const World& w, const PipelineConfig& cfg,
                               const std::string& run_id) {
    RunMetrics out;
    out.run_id = run_id;
    pipeline::SequenceResult seq = pipeline::run_sequence(w.frames, w.params, cfg);

    metrics::ConfusionMatrix cm(cfg.num_classes);
    for (std::size_t f = 0; f < seq.predictions.size(); ++f) {
        const std::vector<int> pred = seq.predictions[f].labels();
        const std::vector<int>& gt = w.ground_truth[f];
        cm.add(pred, gt);
        const metrics::IouReport frame_iou = metrics::miou(pred, gt, cfg.num_classes);
        out.rows.push_back({run_id, f + 1, "miou", frame_iou.miou});
        out.rows.push_back({run_id, f + 1, "iou", metrics::iou_binary(pred, gt)});
    }

    const metrics::IouReport agg = metrics::miou(cm);
    out.miou = agg.miou;
    out.miou_dynamic = metrics::miou_dynamic(cm, w.spec.classes);

    // Aggregate binary IoU from the confusion matrix: any non-empty label
    // counts as occupied.
    std::uint64_t btp = 0, bfp = 0, bfn = 0;
    for (std::size_t g = 0; g < cfg.num_classes; ++g)
        for (std::size_t p = 0; p < cfg.num_classes; ++p) {
            const std::uint64_t n = cm.counts[g * cfg.num_classes + p];
            const bool go = g != 0, po = p != 0;
            if (go && po) btp += n;
            else if (!go && po) bfp += n;
            else if (go && !po) bfn += n;
        }
    out.iou = (btp + bfp + bfn) == 0
                  ? 1.0
                  : static_cast<double>(btp) / static_cast<double>(btp + bfp + bfn);
    out.rows.push_back({run_id, 0, "miou", out.miou});
    out.rows.push_back({run_id, 0, "iou", out.iou});
    if (out.miou_dynamic) out.rows.push_back({run_id, 0, "miou_dynamic", *out.miou_dynamic});
    out.final_states = std::move(seq.final_states);
    return out;
}

}  // namespace gdfusion::harness
