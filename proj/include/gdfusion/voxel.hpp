#pragma once
// Memory-efficient voxel-level temporal fusion: a single-frame-sized hidden
// state advanced by warp + channel mix, sinusoidal time embedding, and the
// executable equivalence between the linear recurrent update and one
// gradient-descent step on the quadratic feature-matching objective.

#include <cmath>
#include <cstddef>

#include "gdfusion/motion.hpp"
#include "gdfusion/tensor.hpp"

namespace gdfusion::voxel {

struct FusionWeights {
    Tensor a_v;  // (c, c)
    Tensor b_v;  // (c, c)

    static FusionWeights ema(std::size_t c, double alpha) {
        FusionWeights w{Tensor({c, c}), Tensor({c, c})};
        for (std::size_t i = 0; i < c; ++i) {
            w.a_v(i, i) = alpha;
            w.b_v(i, i) = 1.0 - alpha;
        }
        return w;
    }
};

// The recurrent hidden state; one frame's worth of features regardless of
// how many frames have been folded in.
struct VoxelHidden {
    VoxelGrid state;
};

struct GDStepWeights {
    Tensor a;  // (c, c)
    Tensor b;  // (c, c)
    double eta = 0.0;
};

// Warp the hidden state to the current frame at R (P + M_f), then mix
// channels: A_v * warped + B_v * v_now. The result is also the fused volume
// feature for the head.
inline VoxelHidden voxel_update(const VoxelHidden& h_prev, const VoxelGrid& v_now,
                                const motion::MotionField& m_fused, const RigidTransform& t,
                                const FusionWeights& w) {
    if (!h_prev.state.same_shape(v_now)) throw ShapeError("voxel_update: extent mismatch");
    if (m_fused.extent() != v_now.extent) throw ShapeError("voxel_update: motion extent mismatch");
    if (w.a_v.rows() != v_now.channels) throw ShapeError("voxel_update: channel mismatch");

    const VoxelGrid warped =
        trilinear_sample(h_prev.state, motion::motion_sample_coords(m_fused, t));
    Tensor mixed = matmul(w.a_v, warped.as_matrix());
    const Tensor current = matmul(w.b_v, v_now.as_matrix());
    for (std::size_t i = 0; i < mixed.size(); ++i) mixed[i] += current[i];
    return {VoxelGrid::from_matrix(mixed, v_now.extent)};
}

// Standard sinusoid over elapsed time tau = t_index * dt:
//   entry 2i   = sin(tau / 10000^(2i/c))
//   entry 2i+1 = cos(tau / 10000^(2i/c))
inline Tensor time_embed(std::size_t t_index, double dt, std::size_t c) {
    if (c % 2 != 0) throw std::invalid_argument("time_embed: channel count must be even");
    const double tau = static_cast<double>(t_index) * dt;
    Tensor e({c});
    for (std::size_t i = 0; i < c / 2; ++i) {
        const double freq = std::pow(10000.0, 2.0 * static_cast<double>(i) / static_cast<double>(c));
        e[2 * i] = std::sin(tau / freq);
        e[2 * i + 1] = std::cos(tau / freq);
    }
    return e;
}

// One gradient step h - eta * 2 A^T (A h - B x) written as a recurrence:
// A' = I - 2 eta A^T A, B' = 2 eta A^T B.
inline FusionWeights prop1_transform(const GDStepWeights& g) {
    const std::size_t c = g.a.rows();
    const Tensor at = transpose(g.a);
    Tensor a_prime = matmul(at, g.a);
    for (std::size_t i = 0; i < c * c; ++i) a_prime[i] *= -2.0 * g.eta;
    for (std::size_t i = 0; i < c; ++i) a_prime(i, i) += 1.0;
    Tensor b_prime = matmul(at, g.b);
    for (std::size_t i = 0; i < c * c; ++i) b_prime[i] *= 2.0 * g.eta;
    return {std::move(a_prime), std::move(b_prime)};
}

// Max-abs discrepancy between the recurrent path A' h + B' x and the explicit
// descent path h - 2 eta A^T (A h - B x); an algebraic identity up to
// rounding.
inline double prop1_check(const GDStepWeights& g, const Tensor& h, const Tensor& x) {
    const std::size_t c = g.a.rows();
    const FusionWeights w = prop1_transform(g);

    const Tensor hm = h.reshaped({c, 1});
    const Tensor xm = x.reshaped({c, 1});
    const Tensor rnn_a = matmul(w.a_v, hm);
    const Tensor rnn_b = matmul(w.b_v, xm);

    const Tensor ah = matmul(g.a, hm);
    const Tensor bx = matmul(g.b, xm);
    Tensor resid({c, 1});
    for (std::size_t i = 0; i < c; ++i) resid[i] = ah[i] - bx[i];
    const Tensor at_resid = matmul(transpose(g.a), resid);

    double err = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
        const double rnn_path = rnn_a[i] + rnn_b[i];
        const double gd_path = h[i] - 2.0 * g.eta * at_resid[i];
        err = std::max(err, std::fabs(rnn_path - gd_path));
    }
    return err;
}

}  // namespace gdfusion::voxel
