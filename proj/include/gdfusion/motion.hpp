#pragma once
// Temporal motion fusion: per-voxel offset prediction, warping of the
// historical motion state through the trilinear sampler, the discrepancy
// loss, its gradient through both the residual and the sampling coordinates
// (R^T J - I chain), and the hidden-state update.

#include <cstddef>

#include "gdfusion/rng.hpp"
#include "gdfusion/tensor.hpp"

namespace gdfusion::motion {

// Per-voxel 3-vector displacements in voxel units, dims (3, X, Y, Z).
struct MotionField {
    VoxelGrid offsets;

    MotionField() = default;
    explicit MotionField(VoxelGrid g) : offsets(std::move(g)) {
        if (offsets.channels != 3) throw ShapeError("MotionField: needs 3 channels");
    }
    MotionField(std::size_t x, std::size_t y, std::size_t z) : offsets(3, x, y, z) {}

    const std::array<std::size_t, 3>& extent() const { return offsets.extent; }
    std::size_t num_voxels() const { return offsets.num_voxels(); }
};

// Per-voxel affine map from c feature channels to a 3-vector offset.
struct MotionPredictor {
    Tensor weight;  // (3, c)
    Tensor bias;    // (3)

    static MotionPredictor seeded(std::size_t c, std::uint64_t seed, double scale = 1.0) {
        const double a = scale / std::sqrt(static_cast<double>(c));
        rng::Stream rs(seed, 0xF30A);
        MotionPredictor p{Tensor({3, c}), Tensor({3})};
        for (std::size_t i = 0; i < 3 * c; ++i) p.weight[i] = rs.uniform(-a, a);
        return p;
    }
};

inline MotionField predict_motion(const VoxelGrid& v, const MotionPredictor& f_m) {
    if (f_m.weight.cols() != v.channels) throw ShapeError("predict_motion: channel mismatch");
    const std::size_t n = v.num_voxels();
    MotionField m(v.extent[0], v.extent[1], v.extent[2]);
    const double* feat = v.data.data();
    for (std::size_t ax = 0; ax < 3; ++ax) {
        double* out = m.offsets.data.data() + ax * n;
        for (std::size_t j = 0; j < n; ++j) out[j] = f_m.bias[ax];
        for (std::size_t ch = 0; ch < v.channels; ++ch) {
            const double w = f_m.weight(ax, ch);
            const double* row = feat + ch * n;
            for (std::size_t j = 0; j < n; ++j) out[j] += w * row[j];
        }
    }
    return m;
}

// Sampling coordinates R (P + M), shared by warp, loss and gradient.
inline CoordField motion_sample_coords(const MotionField& m_now, const RigidTransform& t) {
    const auto& e = m_now.extent();
    CoordField coords = CoordField::canonical(e[0], e[1], e[2]);
    const std::size_t n = m_now.num_voxels();
    for (std::size_t i = 0; i < 3 * n; ++i) coords.data[i] += m_now.offsets.data[i];
    return transform_coords(t, coords);
}

inline MotionField warp_motion(const MotionField& h_prev, const MotionField& m_now,
                               const RigidTransform& t) {
    if (!(h_prev.extent() == m_now.extent())) throw ShapeError("warp_motion: extent mismatch");
    return MotionField(trilinear_sample(h_prev.offsets, motion_sample_coords(m_now, t)));
}

inline double motion_loss(const MotionField& h_prev, const MotionField& m_now,
                          const RigidTransform& t) {
    const MotionField warped = warp_motion(h_prev, m_now, t);
    double loss = 0.0;
    for (std::size_t i = 0; i < warped.offsets.data.size(); ++i) {
        const double d = warped.offsets.data[i] - m_now.offsets.data[i];
        loss += d * d;
    }
    return loss;
}

// Gradient of motion_loss with respect to the current prediction M. The
// current offsets enter twice: through the sampling coordinates R (P + M)
// and through the residual, giving per voxel
//   grad = 2 (R^T J^T - I) r,   r = warped - m_now,
// with J the (3 x 3) trilinear Jacobian of the history at the transformed
// coordinates (rows = channels, columns = coordinate axes).
inline MotionField motion_gradient(const MotionField& h_prev, const MotionField& m_now,
                                   const RigidTransform& t) {
    if (!(h_prev.extent() == m_now.extent()))
        throw ShapeError("motion_gradient: extent mismatch");
    const CoordField coords = motion_sample_coords(m_now, t);
    const std::size_t n = m_now.num_voxels();
    const auto& e = m_now.extent();
    MotionField grad(e[0], e[1], e[2]);

    const double* px = coords.data.data();
    const double* py = px + n;
    const double* pz = py + n;
    double warped[3];
    double jac[9];  // row-major (channel, axis)
    const auto& r = t.rotation;
    for (std::size_t v = 0; v < n; ++v) {
        trilinear_sample_point(h_prev.offsets, px[v], py[v], pz[v], warped);
        trilinear_jacobian_point(h_prev.offsets, px[v], py[v], pz[v], jac);
        double res[3];
        for (int ch = 0; ch < 3; ++ch) res[ch] = warped[ch] - m_now.offsets.data[ch * n + v];
        for (int k = 0; k < 3; ++k) {
            // (R^T J^T)[k][j] = sum_i R[i][k] J[j][i]
            double acc = 0.0;
            for (int j = 0; j < 3; ++j) {
                double a = 0.0;
                for (int i = 0; i < 3; ++i) a += r[i * 3 + k] * jac[j * 3 + i];
                acc += a * res[j];
            }
            grad.offsets.data[k * n + v] = 2.0 * (acc - res[k]);
        }
    }
    return grad;
}

// H_m = M - eta_m * grad; the result is both the new hidden state and the
// fused motion fed to voxel-level fusion.
inline MotionField motion_update(const MotionField& m_now, const MotionField& grad,
                                 double eta_m) {
    if (eta_m < 0.0) throw std::invalid_argument("motion_update: eta_m must be nonnegative");
    MotionField out = m_now;
    for (std::size_t i = 0; i < out.offsets.data.size(); ++i)
        out.offsets.data[i] -= eta_m * grad.offsets.data[i];
    return out;
}

}  // namespace gdfusion::motion
