#pragma once
// Dense row-major double tensors plus the sampling and normalization
// primitives shared by every fusion operator: matrix product with a fixed
// summation order, channel-wise Z-score normalization, trilinear sampling
// and its analytic Jacobian, and rigid coordinate transforms.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gdfusion {

class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Regularizer for sigma = sqrt(var + eps); unregularized division is
// singular on constant columns.
inline constexpr double kZScoreEps = 1e-6;

// ============================================================================
// Tensor
// ============================================================================

class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> dims)
        : dims_(std::move(dims)), data_(checked_size(dims_), 0.0) {}

    Tensor(std::vector<std::size_t> dims, std::vector<double> data)
        : dims_(std::move(dims)), data_(std::move(data)) {
        if (data_.size() != checked_size(dims_)) {
            throw ShapeError("Tensor: data length " + std::to_string(data_.size()) +
                             " does not match dims product " +
                             std::to_string(checked_size(dims_)));
        }
    }

    static Tensor zeros(std::vector<std::size_t> dims) { return Tensor(std::move(dims)); }

    static Tensor identity(std::size_t n) {
        Tensor t({n, n});
        for (std::size_t i = 0; i < n; ++i) t.data_[i * n + i] = 1.0;
        return t;
    }

    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t rank() const { return dims_.size(); }
    std::size_t dim(std::size_t i) const { return dims_[i]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // Rank-2 accessors; matrices are by far the most common case.
    std::size_t rows() const { require_rank(2); return dims_[0]; }
    std::size_t cols() const { require_rank(2); return dims_[1]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * dims_[1] + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * dims_[1] + c]; }

    // Same data, new dims; product of extents must be unchanged.
    Tensor reshaped(std::vector<std::size_t> dims) const {
        Tensor out(std::move(dims), data_);
        return out;
    }

    bool all_finite() const {
        for (double v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

private:
    static std::size_t checked_size(const std::vector<std::size_t>& dims) {
        std::size_t n = 1;
        for (std::size_t d : dims) {
            if (d == 0) throw ShapeError("Tensor: zero extent");
            n *= d;
        }
        return dims.empty() ? 0 : n;
    }

    void require_rank(std::size_t r) const {
        if (dims_.size() != r) {
            throw ShapeError("Tensor: expected rank " + std::to_string(r) + ", got " +
                             std::to_string(dims_.size()));
        }
    }

    std::vector<std::size_t> dims_;
    std::vector<double> data_;
};

// Fixed i-k-j loop: every output element accumulates over k in ascending
// order, so results are bit-identical to the naive i-j-k reference.
inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) throw ShapeError("matmul: operands must be rank 2");
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dims disagree (" + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()) + ")");
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out({m, n});
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t l = 0; l < k; ++l) {
            const double aik = pa[i * k + l];
            const double* brow = pb + l * n;
            double* orow = po + i * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

inline Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw ShapeError("transpose: operand must be rank 2");
    Tensor out({a.cols(), a.rows()});
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

// ============================================================================
// Z-score normalization (statistics per column over the c channels)
// ============================================================================

struct ZScoreResult {
    Tensor zhat;   // (c, n)
    Tensor mu;     // (1, n)
    Tensor sigma;  // (1, n), sqrt(var + eps)
};

inline ZScoreResult zscore_norm(const Tensor& z, double eps = kZScoreEps) {
    if (z.rank() != 2) throw ShapeError("zscore_norm: operand must be rank 2");
    if (eps <= 0.0) throw std::invalid_argument("zscore_norm: eps must be positive");
    const std::size_t c = z.rows(), n = z.cols();
    ZScoreResult r{Tensor({c, n}), Tensor({1, n}), Tensor({1, n})};
    for (std::size_t j = 0; j < n; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < c; ++i) mean += z(i, j);
        mean /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t i = 0; i < c; ++i) {
            const double d = z(i, j) - mean;
            var += d * d;
        }
        var /= static_cast<double>(c);
        const double sigma = std::sqrt(var + eps);
        r.mu[j] = mean;
        r.sigma[j] = sigma;
        for (std::size_t i = 0; i < c; ++i) r.zhat(i, j) = (z(i, j) - mean) / sigma;
    }
    return r;
}

// ============================================================================
// VoxelGrid / CoordField
// ============================================================================

// Dense rank-4 feature volume (channels, X, Y, Z). Flatten to (c, n) is a
// pure reshape: the row-major layouts coincide.
struct VoxelGrid {
    std::size_t channels = 0;
    std::array<std::size_t, 3> extent{0, 0, 0};
    Tensor data;

    VoxelGrid() = default;

    VoxelGrid(std::size_t c, std::size_t x, std::size_t y, std::size_t z)
        : channels(c), extent{x, y, z}, data({c, x, y, z}) {}

    static VoxelGrid wrap(Tensor t) {
        if (t.rank() != 4) throw ShapeError("VoxelGrid: tensor must be rank 4");
        VoxelGrid g;
        g.channels = t.dim(0);
        g.extent = {t.dim(1), t.dim(2), t.dim(3)};
        g.data = std::move(t);
        return g;
    }

    std::size_t num_voxels() const { return extent[0] * extent[1] * extent[2]; }

    std::size_t index(std::size_t ch, std::size_t i, std::size_t j, std::size_t k) const {
        return ((ch * extent[0] + i) * extent[1] + j) * extent[2] + k;
    }

    double& at(std::size_t ch, std::size_t i, std::size_t j, std::size_t k) {
        return data[index(ch, i, j, k)];
    }
    double at(std::size_t ch, std::size_t i, std::size_t j, std::size_t k) const {
        return data[index(ch, i, j, k)];
    }

    Tensor as_matrix() const { return data.reshaped({channels, num_voxels()}); }

    static VoxelGrid from_matrix(const Tensor& m, std::array<std::size_t, 3> extent) {
        if (m.rank() != 2 || m.cols() != extent[0] * extent[1] * extent[2]) {
            throw ShapeError("VoxelGrid::from_matrix: extent mismatch");
        }
        return wrap(m.reshaped({m.rows(), extent[0], extent[1], extent[2]}));
    }

    bool same_shape(const VoxelGrid& o) const {
        return channels == o.channels && extent == o.extent;
    }
};

// Per-voxel 3D coordinates in voxel-index units, dims (3, X, Y, Z).
struct CoordField {
    std::array<std::size_t, 3> extent{0, 0, 0};
    Tensor data;

    CoordField() = default;

    CoordField(std::size_t x, std::size_t y, std::size_t z)
        : extent{x, y, z}, data({3, x, y, z}) {}

    // The canonical grid P with P[:, i, j, k] = (i, j, k).
    static CoordField canonical(std::size_t x, std::size_t y, std::size_t z) {
        CoordField f(x, y, z);
        for (std::size_t i = 0; i < x; ++i)
            for (std::size_t j = 0; j < y; ++j)
                for (std::size_t k = 0; k < z; ++k) {
                    f.at(0, i, j, k) = static_cast<double>(i);
                    f.at(1, i, j, k) = static_cast<double>(j);
                    f.at(2, i, j, k) = static_cast<double>(k);
                }
        return f;
    }

    std::size_t num_points() const { return extent[0] * extent[1] * extent[2]; }

    std::size_t index(std::size_t axis, std::size_t i, std::size_t j, std::size_t k) const {
        return ((axis * extent[0] + i) * extent[1] + j) * extent[2] + k;
    }

    double& at(std::size_t axis, std::size_t i, std::size_t j, std::size_t k) {
        return data[index(axis, i, j, k)];
    }
    double at(std::size_t axis, std::size_t i, std::size_t j, std::size_t k) const {
        return data[index(axis, i, j, k)];
    }
};

// ============================================================================
// RigidTransform
// ============================================================================

struct RigidTransform {
    // Row-major 3x3 rotation, orthonormal within 1e-12; translation in voxel
    // units.
    std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};
    std::array<double, 3> translation{0, 0, 0};

    static RigidTransform identity() { return RigidTransform{}; }

    static RigidTransform from_translation(double x, double y, double z) {
        RigidTransform t;
        t.translation = {x, y, z};
        return t;
    }

    // Rodrigues rotation about a (normalized internally) axis.
    static RigidTransform axis_angle(std::array<double, 3> axis, double angle) {
        const double norm = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
        if (norm == 0.0) throw std::invalid_argument("axis_angle: zero axis");
        const double ux = axis[0] / norm, uy = axis[1] / norm, uz = axis[2] / norm;
        const double c = std::cos(angle), s = std::sin(angle), v = 1.0 - c;
        RigidTransform t;
        t.rotation = {c + ux * ux * v,      ux * uy * v - uz * s, ux * uz * v + uy * s,
                      uy * ux * v + uz * s, c + uy * uy * v,      uy * uz * v - ux * s,
                      uz * ux * v - uy * s, uz * uy * v + ux * s, c + uz * uz * v};
        return t;
    }

    static RigidTransform rotation_z(double angle) { return axis_angle({0, 0, 1}, angle); }

    std::array<double, 3> apply(const std::array<double, 3>& p) const {
        const auto& r = rotation;
        return {r[0] * p[0] + r[1] * p[1] + r[2] * p[2] + translation[0],
                r[3] * p[0] + r[4] * p[1] + r[5] * p[2] + translation[1],
                r[6] * p[0] + r[7] * p[1] + r[8] * p[2] + translation[2]};
    }

    RigidTransform inverse() const {
        RigidTransform inv;
        const auto& r = rotation;
        inv.rotation = {r[0], r[3], r[6], r[1], r[4], r[7], r[2], r[5], r[8]};
        inv.translation = {
            -(inv.rotation[0] * translation[0] + inv.rotation[1] * translation[1] +
              inv.rotation[2] * translation[2]),
            -(inv.rotation[3] * translation[0] + inv.rotation[4] * translation[1] +
              inv.rotation[5] * translation[2]),
            -(inv.rotation[6] * translation[0] + inv.rotation[7] * translation[1] +
              inv.rotation[8] * translation[2])};
        return inv;
    }

    double orthonormality_error() const {
        const auto& r = rotation;
        double err = 0.0;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                double dot = 0.0;
                for (int k = 0; k < 3; ++k) dot += r[k * 3 + i] * r[k * 3 + j];
                err = std::max(err, std::fabs(dot - (i == j ? 1.0 : 0.0)));
            }
        }
        return err;
    }
};

// compose(a, b) applies b first, then a.
inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
    RigidTransform out;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += a.rotation[i * 3 + k] * b.rotation[k * 3 + j];
            out.rotation[i * 3 + j] = s;
        }
    }
    out.translation = a.apply(b.translation);
    return out;
}

inline CoordField transform_coords(const RigidTransform& t, const CoordField& coords) {
    CoordField out(coords.extent[0], coords.extent[1], coords.extent[2]);
    const std::size_t n = coords.num_points();
    const double* px = coords.data.data();
    const double* py = px + n;
    const double* pz = py + n;
    double* ox = out.data.data();
    double* oy = ox + n;
    double* oz = oy + n;
    const auto& r = t.rotation;
    const auto& tr = t.translation;
    for (std::size_t v = 0; v < n; ++v) {
        const double x = px[v], y = py[v], z = pz[v];
        ox[v] = r[0] * x + r[1] * y + r[2] * z + tr[0];
        oy[v] = r[3] * x + r[4] * y + r[5] * z + tr[1];
        oz[v] = r[6] * x + r[7] * y + r[8] * z + tr[2];
    }
    return out;
}

// ============================================================================
// Trilinear sampling and its Jacobian
// ============================================================================

// 8-corner interpolation with zero padding: corners outside the grid
// contribute value 0 with their normal weight.
inline void trilinear_sample_point(const VoxelGrid& g, double x, double y, double z, double* out) {
    const auto i0 = static_cast<std::int64_t>(std::floor(x));
    const auto j0 = static_cast<std::int64_t>(std::floor(y));
    const auto k0 = static_cast<std::int64_t>(std::floor(z));
    const double dx = x - static_cast<double>(i0);
    const double dy = y - static_cast<double>(j0);
    const double dz = z - static_cast<double>(k0);
    const double wx[2] = {1.0 - dx, dx};
    const double wy[2] = {1.0 - dy, dy};
    const double wz[2] = {1.0 - dz, dz};
    const auto ex = static_cast<std::int64_t>(g.extent[0]);
    const auto ey = static_cast<std::int64_t>(g.extent[1]);
    const auto ez = static_cast<std::int64_t>(g.extent[2]);

    for (std::size_t ch = 0; ch < g.channels; ++ch) out[ch] = 0.0;
    for (int di = 0; di < 2; ++di) {
        const std::int64_t i = i0 + di;
        if (i < 0 || i >= ex) continue;
        for (int dj = 0; dj < 2; ++dj) {
            const std::int64_t j = j0 + dj;
            if (j < 0 || j >= ey) continue;
            for (int dk = 0; dk < 2; ++dk) {
                const std::int64_t k = k0 + dk;
                if (k < 0 || k >= ez) continue;
                const double w = wx[di] * wy[dj] * wz[dk];
                if (w == 0.0) continue;
                const double* base = g.data.data() +
                                     ((static_cast<std::size_t>(i) * g.extent[1] +
                                       static_cast<std::size_t>(j)) * g.extent[2] +
                                      static_cast<std::size_t>(k));
                const std::size_t stride = g.num_voxels();
                for (std::size_t ch = 0; ch < g.channels; ++ch) out[ch] += w * base[ch * stride];
            }
        }
    }
}

inline VoxelGrid trilinear_sample(const VoxelGrid& g, const CoordField& coords) {
    VoxelGrid out(g.channels, coords.extent[0], coords.extent[1], coords.extent[2]);
    const std::size_t n = coords.num_points();
    const double* px = coords.data.data();
    const double* py = px + n;
    const double* pz = py + n;
    std::vector<double> buf(g.channels);
    for (std::size_t v = 0; v < n; ++v) {
        trilinear_sample_point(g, px[v], py[v], pz[v], buf.data());
        for (std::size_t ch = 0; ch < g.channels; ++ch) out.data[ch * n + v] = buf[ch];
    }
    return out;
}

// Partial derivatives of the sampled value with respect to the sampling
// coordinates; out is row-major (channels x 3). The interpolation basis has
// derivative -1/+1 per axis, so within a cell the Jacobian is exact; on
// lattice planes the floor convention yields the right-continuous one-sided
// derivative.
inline void trilinear_jacobian_point(const VoxelGrid& g, double x, double y, double z,
                                     double* out) {
    const auto i0 = static_cast<std::int64_t>(std::floor(x));
    const auto j0 = static_cast<std::int64_t>(std::floor(y));
    const auto k0 = static_cast<std::int64_t>(std::floor(z));
    const double dx = x - static_cast<double>(i0);
    const double dy = y - static_cast<double>(j0);
    const double dz = z - static_cast<double>(k0);
    const double wx[2] = {1.0 - dx, dx}, gx[2] = {-1.0, 1.0};
    const double wy[2] = {1.0 - dy, dy}, gy[2] = {-1.0, 1.0};
    const double wz[2] = {1.0 - dz, dz}, gz[2] = {-1.0, 1.0};
    const auto ex = static_cast<std::int64_t>(g.extent[0]);
    const auto ey = static_cast<std::int64_t>(g.extent[1]);
    const auto ez = static_cast<std::int64_t>(g.extent[2]);

    for (std::size_t i = 0; i < g.channels * 3; ++i) out[i] = 0.0;
    for (int di = 0; di < 2; ++di) {
        const std::int64_t i = i0 + di;
        if (i < 0 || i >= ex) continue;
        for (int dj = 0; dj < 2; ++dj) {
            const std::int64_t j = j0 + dj;
            if (j < 0 || j >= ey) continue;
            for (int dk = 0; dk < 2; ++dk) {
                const std::int64_t k = k0 + dk;
                if (k < 0 || k >= ez) continue;
                const double w0 = gx[di] * wy[dj] * wz[dk];
                const double w1 = wx[di] * gy[dj] * wz[dk];
                const double w2 = wx[di] * wy[dj] * gz[dk];
                const double* base = g.data.data() +
                                     ((static_cast<std::size_t>(i) * g.extent[1] +
                                       static_cast<std::size_t>(j)) * g.extent[2] +
                                      static_cast<std::size_t>(k));
                const std::size_t stride = g.num_voxels();
                for (std::size_t ch = 0; ch < g.channels; ++ch) {
                    const double h = base[ch * stride];
                    out[ch * 3 + 0] += w0 * h;
                    out[ch * 3 + 1] += w1 * h;
                    out[ch * 3 + 2] += w2 * h;
                }
            }
        }
    }
}

// Per-voxel Jacobians as a (c, 3, X, Y, Z) tensor.
inline Tensor trilinear_jacobian(const VoxelGrid& g, const CoordField& coords) {
    const std::size_t n = coords.num_points();
    Tensor out({g.channels, 3, coords.extent[0], coords.extent[1], coords.extent[2]});
    const double* px = coords.data.data();
    const double* py = px + n;
    const double* pz = py + n;
    std::vector<double> buf(g.channels * 3);
    for (std::size_t v = 0; v < n; ++v) {
        trilinear_jacobian_point(g, px[v], py[v], pz[v], buf.data());
        for (std::size_t ch = 0; ch < g.channels; ++ch)
            for (std::size_t ax = 0; ax < 3; ++ax)
                out[(ch * 3 + ax) * n + v] = buf[ch * 3 + ax];
    }
    return out;
}

}  // namespace gdfusion
