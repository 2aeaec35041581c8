#pragma once
// Pipeline configuration: a plain-text sectioned key=value format. Unknown
// sections or keys are hard errors (silent typos corrupt ablations), and
// every parse error carries its line number.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gdfusion {

class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

// Dimension/consistency failures distinct from parse failures; the CLI maps
// these to exit code 3.
class DimensionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Axis-aligned box in voxel units; velocity in voxel units per frame.
struct BoxDecl {
    std::string class_name;
    std::array<double, 3> min{0, 0, 0};
    std::array<double, 3> extent{0, 0, 0};
    std::array<double, 3> velocity{0, 0, 0};
};

struct WorldDecl {
    std::vector<std::string> classes;        // first entry is the empty class
    std::vector<std::string> dynamic_names;  // classes flagged dynamic
    std::vector<BoxDecl> boxes;
    bool present = false;
};

enum class CameraModel { kParallel, kPinhole };
enum class VoxelWeightMode { kEma, kFiles };

struct PipelineConfig {
    // [grid]
    std::size_t grid_x = 16, grid_y = 16, grid_z = 8;
    // [model]
    std::size_t channels = 16;
    std::size_t num_classes = 4;
    // [depth]
    std::size_t depth_bins = 32;
    double depth_min = 0.5;
    double depth_max = 32.5;  // integer bin centers line up with voxel sample nodes
    double depth_tau = 0.5;  // score sharpness in bin widths
    // [fusion]
    bool fuse_voxel = true;
    bool fuse_scene = true;
    bool fuse_motion = true;
    bool fuse_geometry = true;
    bool time_embedding = false;
    // [rates]
    double eta_s = 0.1;  // step size for the mean-square scene objective
    double eta_m = 0.01;
    // [voxel]
    VoxelWeightMode voxel_mode = VoxelWeightMode::kEma;
    double ema_alpha = 0.5;
    std::string voxel_a_file;
    std::string voxel_b_file;
    // [scene]
    double scene_gamma0 = 0.0;
    bool scene_random_qo = false;
    // [motion]
    double motion_weight_scale = 0.02;
    // [noise]
    double sigma_depth = 2.5;
    double sigma_feat = 1.2;
    // [run]
    std::uint64_t seed = 1;
    std::size_t frames = 30;
    std::size_t baseline_nh = 16;
    double dt = 0.5;
    // [camera]
    CameraModel camera_model = CameraModel::kParallel;
    double cam_start_x = -3.0, cam_start_y = 0.0, cam_start_z = 0.0;
    double cam_step_x = 0.0, cam_step_y = 0.01, cam_step_z = 0.005;
    double cam_yaw_step = 0.0;
    double cam_focal = 8.0;
    std::size_t rays_u = 0, rays_v = 0;  // 0 = one ray per (y, z) voxel
    // [head]
    double head_lambda = 1e-3;
    // [world]
    WorldDecl world;

    std::size_t num_voxels() const { return grid_x * grid_y * grid_z; }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline bool parse_bool(const std::string& v, int line) {
    if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "off" || v == "0" || v == "no") return false;
    throw ConfigError(line, "expected boolean, got '" + v + "'");
}

inline double parse_double(const std::string& v, int line) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(line, "expected number, got '" + v + "'");
    }
}

inline std::size_t parse_size(const std::string& v, int line) {
    const double d = parse_double(v, line);
    if (d < 0 || d != static_cast<double>(static_cast<std::size_t>(d)))
        throw ConfigError(line, "expected nonnegative integer, got '" + v + "'");
    return static_cast<std::size_t>(d);
}

inline std::vector<std::string> split_ws(const std::string& v) {
    std::vector<std::string> out;
    std::istringstream is(v);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

inline BoxDecl parse_box(const std::string& v, int line) {
    const auto toks = split_ws(v);
    if (toks.size() != 10)
        throw ConfigError(line, "box needs 'class min_x min_y min_z ext_x ext_y ext_z "
                                "vel_x vel_y vel_z'");
    BoxDecl b;
    b.class_name = toks[0];
    for (int i = 0; i < 3; ++i) b.min[i] = parse_double(toks[1 + i], line);
    for (int i = 0; i < 3; ++i) b.extent[i] = parse_double(toks[4 + i], line);
    for (int i = 0; i < 3; ++i) b.velocity[i] = parse_double(toks[7 + i], line);
    return b;
}

}  // namespace detail

inline PipelineConfig parse_config_text(const std::string& text) {
    PipelineConfig cfg;
    std::istringstream is(text);
    std::string raw;
    std::string section;
    int line_no = 0;

    const std::set<std::string> known_sections = {"grid",   "model", "depth", "fusion", "rates",
                                                  "voxel",  "scene", "motion", "noise", "run",
                                                  "camera", "head",  "world"};

    while (std::getline(is, raw)) {
        ++line_no;
        std::string line = raw;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(line_no, "unterminated section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            if (!known_sections.count(section))
                throw ConfigError(line_no, "unknown section [" + section + "]");
            if (section == "world") cfg.world.present = true;
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(line_no, "expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (section.empty()) throw ConfigError(line_no, "key outside any section");
        if (key.empty()) throw ConfigError(line_no, "empty key");

        using detail::parse_bool;
        using detail::parse_double;
        using detail::parse_size;

        bool handled = true;
        if (section == "grid") {
            if (key == "x") cfg.grid_x = parse_size(value, line_no);
            else if (key == "y") cfg.grid_y = parse_size(value, line_no);
            else if (key == "z") cfg.grid_z = parse_size(value, line_no);
            else handled = false;
        } else if (section == "model") {
            if (key == "channels") cfg.channels = parse_size(value, line_no);
            else if (key == "classes") cfg.num_classes = parse_size(value, line_no);
            else handled = false;
        } else if (section == "depth") {
            if (key == "bins") cfg.depth_bins = parse_size(value, line_no);
            else if (key == "min") cfg.depth_min = parse_double(value, line_no);
            else if (key == "max") cfg.depth_max = parse_double(value, line_no);
            else if (key == "tau") cfg.depth_tau = parse_double(value, line_no);
            else handled = false;
        } else if (section == "fusion") {
            if (key == "voxel") cfg.fuse_voxel = parse_bool(value, line_no);
            else if (key == "scene") cfg.fuse_scene = parse_bool(value, line_no);
            else if (key == "motion") cfg.fuse_motion = parse_bool(value, line_no);
            else if (key == "geometry") cfg.fuse_geometry = parse_bool(value, line_no);
            else if (key == "time_embedding") cfg.time_embedding = parse_bool(value, line_no);
            else handled = false;
        } else if (section == "rates") {
            if (key == "eta_s") cfg.eta_s = parse_double(value, line_no);
            else if (key == "eta_m") cfg.eta_m = parse_double(value, line_no);
            else handled = false;
        } else if (section == "voxel") {
            if (key == "mode") {
                if (value == "ema") cfg.voxel_mode = VoxelWeightMode::kEma;
                else if (value == "files") cfg.voxel_mode = VoxelWeightMode::kFiles;
                else throw ConfigError(line_no, "voxel mode must be 'ema' or 'files'");
            } else if (key == "alpha") cfg.ema_alpha = parse_double(value, line_no);
            else if (key == "a_file") cfg.voxel_a_file = value;
            else if (key == "b_file") cfg.voxel_b_file = value;
            else handled = false;
        } else if (section == "scene") {
            if (key == "gamma0") cfg.scene_gamma0 = parse_double(value, line_no);
            else if (key == "random_qo") cfg.scene_random_qo = parse_bool(value, line_no);
            else handled = false;
        } else if (section == "motion") {
            if (key == "weight_scale") cfg.motion_weight_scale = parse_double(value, line_no);
            else handled = false;
        } else if (section == "noise") {
            if (key == "sigma_depth") cfg.sigma_depth = parse_double(value, line_no);
            else if (key == "sigma_feat") cfg.sigma_feat = parse_double(value, line_no);
            else handled = false;
        } else if (section == "run") {
            if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_size(value, line_no));
            else if (key == "frames") cfg.frames = parse_size(value, line_no);
            else if (key == "baseline_frames") cfg.baseline_nh = parse_size(value, line_no);
            else if (key == "dt") cfg.dt = parse_double(value, line_no);
            else handled = false;
        } else if (section == "camera") {
            if (key == "model") {
                if (value == "parallel") cfg.camera_model = CameraModel::kParallel;
                else if (value == "pinhole") cfg.camera_model = CameraModel::kPinhole;
                else throw ConfigError(line_no, "camera model must be 'parallel' or 'pinhole'");
            } else if (key == "start_x") cfg.cam_start_x = parse_double(value, line_no);
            else if (key == "start_y") cfg.cam_start_y = parse_double(value, line_no);
            else if (key == "start_z") cfg.cam_start_z = parse_double(value, line_no);
            else if (key == "step_x") cfg.cam_step_x = parse_double(value, line_no);
            else if (key == "step_y") cfg.cam_step_y = parse_double(value, line_no);
            else if (key == "step_z") cfg.cam_step_z = parse_double(value, line_no);
            else if (key == "yaw_step") cfg.cam_yaw_step = parse_double(value, line_no);
            else if (key == "focal") cfg.cam_focal = parse_double(value, line_no);
            else if (key == "rays_u") cfg.rays_u = parse_size(value, line_no);
            else if (key == "rays_v") cfg.rays_v = parse_size(value, line_no);
            else handled = false;
        } else if (section == "head") {
            if (key == "lambda") cfg.head_lambda = parse_double(value, line_no);
            else handled = false;
        } else if (section == "world") {
            if (key == "classes") cfg.world.classes = detail::split_ws(value);
            else if (key == "dynamic") cfg.world.dynamic_names = detail::split_ws(value);
            else if (key.rfind("box_", 0) == 0) cfg.world.boxes.push_back(
                detail::parse_box(value, line_no));
            else handled = false;
        }
        if (!handled)
            throw ConfigError(line_no, "unknown key '" + key + "' in section [" + section + "]");
    }
    return cfg;
}

inline PipelineConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError(0, "cannot open config file " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config_text(ss.str());
}

// Consistency checks beyond per-line syntax; violations map to exit code 3.
inline void validate_config(const PipelineConfig& cfg) {
    if (cfg.grid_x == 0 || cfg.grid_y == 0 || cfg.grid_z == 0)
        throw DimensionError("grid extents must be positive");
    if (cfg.channels == 0) throw DimensionError("channels must be positive");
    if (cfg.num_classes < 2) throw DimensionError("need at least an empty class and one more");
    if (cfg.depth_bins < 2) throw DimensionError("need at least two depth bins");
    if (cfg.depth_max <= cfg.depth_min) throw DimensionError("depth range must be increasing");
    if (cfg.time_embedding && cfg.channels % 2 != 0)
        throw DimensionError("time embedding requires an even channel count");
    if (cfg.eta_s < 0.0 || cfg.eta_m < 0.0) throw DimensionError("eta values must be nonnegative");
    if (cfg.sigma_depth < 0.0 || cfg.sigma_feat < 0.0)
        throw DimensionError("noise sigmas must be nonnegative");
    if (cfg.frames == 0) throw DimensionError("frames must be positive");
    if (cfg.voxel_mode == VoxelWeightMode::kFiles &&
        (cfg.voxel_a_file.empty() || cfg.voxel_b_file.empty()))
        throw DimensionError("voxel mode 'files' needs a_file and b_file");
}

}  // namespace gdfusion
