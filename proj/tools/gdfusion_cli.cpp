// Operator surface for the fusion engine: `run` executes the streaming
// pipeline over seeded synthetic sequences for a set of fusion combinations
// and writes metrics CSV, `gradcheck` runs the gradient parity sweeps, and
// `bench` emits memory-scaling curves and a runtime profile.
//
// Exit codes: 0 success, 2 configuration parse error (message carries the
// line number), 3 inconsistent dimensions, 1 anything else.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "gdfusion/gradcheck.hpp"
#include "gdfusion/harness.hpp"
#include "gdfusion/metrics.hpp"

namespace fs = std::filesystem;
using namespace gdfusion;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::int64_t seed = -1;
    std::int64_t frames = -1;
    std::int64_t baseline_n = -1;
};

PipelineConfig load_config(const CommonOpts& opts) {
    PipelineConfig cfg;
    if (!opts.config_path.empty()) cfg = parse_config_file(opts.config_path);
    if (opts.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opts.seed);
    if (opts.frames > 0) cfg.frames = static_cast<std::size_t>(opts.frames);
    if (opts.baseline_n >= 0) cfg.baseline_nh = static_cast<std::size_t>(opts.baseline_n);
    validate_config(cfg);
    return cfg;
}

std::vector<std::string> split_list(const std::string& arg) {
    std::vector<std::string> out;
    std::string token;
    for (char ch : arg) {
        if (ch == ',') {
            if (!token.empty()) out.push_back(token);
            token.clear();
        } else {
            token += ch;
        }
    }
    if (!token.empty()) out.push_back(token);
    return out;
}

int cmd_run(const CommonOpts& opts, const std::string& fusion_list,
            const std::string& dump_dir) {
    const PipelineConfig cfg = load_config(opts);
    const harness::World world = harness::build_world(cfg);

    std::vector<metrics::CsvRow> rows;
    for (const std::string& name : split_list(fusion_list)) {
        const harness::Combo combo = harness::parse_combo(name);
        const PipelineConfig run_cfg = harness::apply_combo(cfg, combo);
        validate_config(run_cfg);
        harness::RunMetrics m = harness::evaluate_run(world, run_cfg, name);
        rows.insert(rows.end(), m.rows.begin(), m.rows.end());
        std::printf("%-6s miou=%.6f iou=%.6f", name.c_str(), m.miou, m.iou);
        if (m.miou_dynamic) std::printf(" miou_dynamic=%.6f", *m.miou_dynamic);
        std::printf("\n");
        if (!dump_dir.empty()) pipeline::save_bundle(fs::path(dump_dir) / name, m.final_states);
    }

    fs::create_directories(opts.out_dir);
    const fs::path csv_path = fs::path(opts.out_dir) / "metrics.csv";
    std::ofstream os(csv_path);
    metrics::write_csv(os, rows);
    std::printf("wrote %s\n", csv_path.string().c_str());
    return 0;
}

int cmd_gradcheck(const CommonOpts& opts, bool inject_sign_error) {
    PipelineConfig cfg;
    if (!opts.config_path.empty()) cfg = parse_config_file(opts.config_path);
    if (opts.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opts.seed);

    const auto results = gradcheck::run_all(cfg.seed, inject_sign_error);
    bool all_pass = true;
    for (const auto& r : results) {
        std::printf("%-48s measured %.3e  limit %.3e  %s\n", r.name.c_str(), r.measured,
                    r.limit, r.pass() ? "PASS" : "FAIL");
        all_pass = all_pass && r.pass();
    }
    return all_pass ? 0 : 1;
}

int cmd_bench(const CommonOpts& opts) {
    const PipelineConfig cfg = load_config(opts);
    const harness::World world = harness::build_world(cfg);
    fs::create_directories(opts.out_dir);

    // Memory curves: the recurrent bundle stays single-frame-sized while the
    // stacking queue grows until its window saturates.
    std::vector<metrics::CsvRow> memory_rows;
    {
        pipeline::HiddenStateBundle states;
        for (std::size_t t = 0; t < cfg.frames; ++t) {
            auto r = pipeline::step(world.frames[t], states, world.params, cfg);
            states = std::move(r.states);
            const metrics::MemoryReport report = metrics::memory_report(states);
            memory_rows.push_back(
                {"gdfusion", t + 1, "bundle_bytes", static_cast<double>(report.total())});
            if (t + 1 == cfg.frames) {
                std::size_t h_v = 0, aux = 0;
                for (const auto& [name, bytes] : report.components) {
                    memory_rows.push_back(
                        {"gdfusion", 0, name + "_bytes", static_cast<double>(bytes)});
                    (name == "h_v" ? h_v : aux) += bytes;
                }
                memory_rows.push_back({"gdfusion", 0, "aux_over_voxel_ratio",
                                       static_cast<double>(aux) / static_cast<double>(h_v)});
            }
        }
    }
    std::vector<std::size_t> windows = {1, 2, 4, 8, 16};
    if (std::find(windows.begin(), windows.end(), cfg.baseline_nh) == windows.end())
        windows.push_back(cfg.baseline_nh);
    for (std::size_t nh : windows) {
        oracle::StackingState state = oracle::StackingState::averaging(cfg.channels, nh);
        std::vector<geometry::DepthDistribution> g_now;
        for (std::size_t t = 0; t < cfg.frames; ++t) {
            g_now.clear();
            for (const auto& view : world.frames[t].views) g_now.push_back(view.geom);
            const VoxelGrid v = pipeline::lift(world.frames[t], g_now, world.params, cfg);
            auto r = oracle::stacking_update(std::move(state), v,
                                             world.frames[t].ego_to_prev);
            state = std::move(r.state);
            memory_rows.push_back({"stacking_nh" + std::to_string(nh), t + 1, "history_bytes",
                                   static_cast<double>(state.history_bytes())});
        }
    }
    {
        const fs::path path = fs::path(opts.out_dir) / "memory.csv";
        std::ofstream os(path);
        metrics::write_csv(os, memory_rows);
        std::printf("wrote %s\n", path.string().c_str());
    }

    // Runtime profile. The fused-vs-chain gradient comparison runs at the
    // fixed benchmark shape; the pipeline stages run at configured dims.
    std::vector<metrics::CsvRow> runtime_rows;
    {
        const std::size_t c = 32, n = 4096;
        rng::Stream rs(cfg.seed, 0xBE9C);
        Tensor v({c, n});
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = rs.uniform(-1.0, 1.0);
        scene::SceneParams params = scene::SceneParams::initial(c, 0.5);
        const scene::AugmentWeights aug = scene::AugmentWeights::seeded(c, cfg.seed, false);
        const auto rows = metrics::runtime_profile(
            {{"scene_gradient_fused", [&] { scene_gradient(v, params, aug); }},
             {"scene_gradient_naive_chain",
              [&] { oracle::naive_chain_gradient(v, params, aug); }}});
        for (const auto& r : rows)
            runtime_rows.push_back({"runtime_c32_n4096", 0, r.name + "_ms", r.median_ms});
    }
    {
        pipeline::HiddenStateBundle warm;
        auto r1 = pipeline::step(world.frames[0], warm, world.params, cfg);
        warm = std::move(r1.states);
        const pipeline::FrameInput& frame = world.frames.size() > 1 ? world.frames[1]
                                                                    : world.frames[0];
        std::vector<geometry::DepthDistribution> g_now;
        for (const auto& view : frame.views) g_now.push_back(view.geom);
        const VoxelGrid lifted = pipeline::lift(frame, g_now, world.params, cfg);
        const motion::MotionField m_now = predict_motion(lifted, world.params.motion_net);
        const Tensor v_mat = lifted.as_matrix();

        const auto step_time = metrics::runtime_profile(
            {{"step_total", [&] { pipeline::step(frame, warm, world.params, cfg); }}});
        const double total_ms = step_time[0].median_ms;

        const auto parts = metrics::runtime_profile(
            {{"geometry_fusion",
              [&] {
                  const geometry::CameraPose pose{frame.views[0].cam_prev_to_cur,
                                                  world.params.view_rays[0]};
                  const auto warped = warp_geometry(warm.h_g[0], pose);
                  const Tensor gates =
                      geometry::gate(warped, frame.views[0].geom, world.params.gate_net);
                  geometry_update(warped, frame.views[0].geom, gates);
              }},
             {"lift", [&] { pipeline::lift(frame, g_now, world.params, cfg); }},
             {"motion_fusion",
              [&] {
                  const auto grad = motion_gradient(warm.h_m, m_now, frame.ego_to_prev);
                  motion_update(m_now, grad, cfg.eta_m);
              }},
             {"voxel_fusion",
              [&] {
                  voxel_update(warm.h_v, lifted, warm.h_m, frame.ego_to_prev,
                               world.params.fusion);
              }},
             {"scene_fusion",
              [&] {
                  const auto gr = scene_gradient(v_mat, warm.h_s, world.params.aug);
                  const auto updated = scene_update(
                      warm.h_s, gr.grad,
                      cfg.eta_s / static_cast<double>(v_mat.rows() * v_mat.cols()));
                  scene_apply(v_mat, updated, world.params.aug);
              }},
             {"head", [&] { pipeline::head(lifted, world.params.head); }}},
            3, 11, total_ms);

        runtime_rows.push_back({"runtime_pipeline", 0, "step_total_ms", total_ms});
        for (const auto& r : parts) {
            runtime_rows.push_back({"runtime_pipeline", 0, r.name + "_ms", r.median_ms});
            runtime_rows.push_back({"runtime_pipeline", 0, "share_" + r.name, r.share});
        }
    }
    {
        const fs::path path = fs::path(opts.out_dir) / "runtime.csv";
        std::ofstream os(path);
        metrics::write_csv(os, runtime_rows);
        std::printf("wrote %s\n", path.string().c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gdfusion: streaming temporal-fusion engine over synthetic worlds"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string fusion_list = "B,BV,BVS,BVMG,Full";
    std::string dump_dir;
    bool inject_sign_error = false;

    CLI::App* run = app.add_subcommand("run", "run fusion combinations and write metrics CSV");
    run->add_option("--config", opts.config_path, "config file (sectioned key=value)");
    run->add_option("--out", opts.out_dir, "output directory for metrics.csv");
    run->add_option("--seed", opts.seed, "override [run] seed");
    run->add_option("--frames", opts.frames, "override [run] frames");
    run->add_option("--fusion", fusion_list,
                    "comma list of combinations (B, BV, ..., Full, config)");
    run->add_option("--baseline-n", opts.baseline_n, "override stacking window");
    run->add_option("--dump-states", dump_dir, "directory for per-combination state bundles");

    CLI::App* grad = app.add_subcommand("gradcheck", "run gradient parity sweeps");
    grad->add_option("--config", opts.config_path, "config file");
    grad->add_option("--seed", opts.seed, "override seed");
    grad->add_flag("--inject-scene-grad-sign-error", inject_sign_error,
                   "flip the beta gradient sign (detector sanity hook)")
        ->group("");  // hidden

    CLI::App* bench = app.add_subcommand("bench", "emit memory curves and runtime profile");
    bench->add_option("--config", opts.config_path, "config file");
    bench->add_option("--out", opts.out_dir, "output directory");
    bench->add_option("--seed", opts.seed, "override seed");
    bench->add_option("--frames", opts.frames, "override frames");
    bench->add_option("--baseline-n", opts.baseline_n, "override stacking window");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(opts, fusion_list, dump_dir);
        if (grad->parsed()) return cmd_gradcheck(opts, inject_sign_error);
        if (bench->parsed()) return cmd_bench(opts);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DimensionError& e) {
        std::cerr << "dimension error: " << e.what() << "\n";
        return 3;
    } catch (const ShapeError& e) {
        std::cerr << "dimension error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
