#pragma once
// Independent verification machinery: central finite differences (the
// arbiter for every closed-form gradient), a per-element chain-rule
// evaluator for the scene gradients that materializes every term instead of
// fusing matrix products, and the multi-frame stacking fusion baseline used
// for memory accounting comparisons.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "gdfusion/scene.hpp"
#include "gdfusion/tensor.hpp"

namespace gdfusion::oracle {

class OracleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Central differences per entry with relative stepping h * max(1, |x|) so
// large entries keep a sane step.
inline Tensor finite_diff_grad(const std::function<double(const Tensor&)>& loss,
                               const Tensor& at, double h) {
    if (h <= 0.0) throw std::invalid_argument("finite_diff_grad: h must be positive");
    Tensor grad(at.dims());
    Tensor probe = at;
    for (std::size_t i = 0; i < at.size(); ++i) {
        const double x = at[i];
        const double step = h * std::max(1.0, std::fabs(x));
        probe[i] = x + step;
        const double up = loss(probe);
        probe[i] = x - step;
        const double down = loss(probe);
        probe[i] = x;
        if (!std::isfinite(up) || !std::isfinite(down))
            throw OracleError("finite_diff_grad: loss not finite near probe point");
        grad[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

// Same gradients as scene::scene_gradient, computed the slow way: plain
// j-inner matrix products, per-column materialization of the normalization
// Jacobian, and per-element accumulation of the W gradient. Numerically
// equal to the fused path within rounding.
inline scene::SceneGradient naive_chain_gradient(const Tensor& v, const scene::SceneParams& p,
                                                 const scene::AugmentWeights& aug,
                                                 double eps = kZScoreEps) {
    const std::size_t c = v.rows(), n = v.cols();

    auto slow_matmul = [](const Tensor& a, const Tensor& b) {
        Tensor out({a.rows(), b.cols()});
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = 0; j < b.cols(); ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
                out(i, j) = s;
            }
        return out;
    };

    const Tensor x = slow_matmul(aug.q1, v);
    const Tensor target = slow_matmul(aug.q2, v);
    Tensor z = slow_matmul(p.w, x);
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < n; ++j) z(i, j) += p.b[i];

    scene::SceneGradient grad{Tensor({c}), Tensor({c}), Tensor({c, c}), Tensor({c})};
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> col(c), zhat(c);
        double mean = 0.0;
        for (std::size_t i = 0; i < c; ++i) mean += z(i, j);
        mean /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t i = 0; i < c; ++i) var += (z(i, j) - mean) * (z(i, j) - mean);
        var /= static_cast<double>(c);
        const double sigma = std::sqrt(var + eps);
        for (std::size_t i = 0; i < c; ++i) zhat[i] = (z(i, j) - mean) / sigma;

        std::vector<double> delta1(c), delta2(c);
        for (std::size_t i = 0; i < c; ++i) {
            const double y = p.gamma[i] * zhat[i] + p.beta[i] + x(i, j);
            delta1[i] = y - target(i, j);
            delta2[i] = 2.0 * p.gamma[i] * delta1[i];
            grad.d_gamma[i] += 2.0 * delta1[i] * zhat[i];
            grad.d_beta[i] += 2.0 * delta1[i];
        }

        // Full normalization Jacobian for this column, materialized.
        std::vector<double> jac(c * c);
        for (std::size_t l = 0; l < c; ++l)
            for (std::size_t i = 0; i < c; ++i) {
                const double kron = l == i ? 1.0 : 0.0;
                jac[l * c + i] = (kron - 1.0 / static_cast<double>(c) -
                                  zhat[l] * zhat[i] / static_cast<double>(c)) /
                                 sigma;
            }
        std::vector<double> delta3(c, 0.0);
        for (std::size_t i = 0; i < c; ++i)
            for (std::size_t l = 0; l < c; ++l) delta3[i] += delta2[l] * jac[l * c + i];

        for (std::size_t i = 0; i < c; ++i) {
            grad.d_b[i] += delta3[i];
            for (std::size_t k = 0; k < c; ++k) grad.d_w(i, k) += delta3[i] * x(k, j);
        }
    }
    return grad;
}

// ============================================================================
// Multi-frame stacking baseline
// ============================================================================

// Queue of up to max_frames warped volume features (most recent first), kept
// aligned to the latest processed frame. fuse_weights maps the concatenated
// (max_frames + 1) * c channels to c channels.
struct StackingState {
    std::size_t max_frames = 0;
    std::vector<VoxelGrid> queue;
    Tensor fuse_weights;  // (c, (max_frames + 1) * c)

    // Uniform averaging over however many frames are present.
    static StackingState averaging(std::size_t c, std::size_t max_frames) {
        StackingState s;
        s.max_frames = max_frames;
        s.fuse_weights = Tensor({c, (max_frames + 1) * c});
        return s;
    }

    std::size_t history_bytes() const {
        std::size_t total = 0;
        for (const auto& g : queue) total += 4 + 4 + 4 + 8 * 4 + 8 * g.data.size();
        return total;
    }
};

struct StackingResult {
    VoxelGrid fused;
    StackingState state;
};

// Warp every queued grid into the current frame, fuse with the current
// features, then push the current frame and evict beyond max_frames. A
// zero fuse_weights tensor means uniform averaging over the present frames.
inline StackingResult stacking_update(StackingState state, const VoxelGrid& v_now,
                                      const RigidTransform& t) {
    const std::size_t c = v_now.channels;
    const CoordField coords = transform_coords(
        t, CoordField::canonical(v_now.extent[0], v_now.extent[1], v_now.extent[2]));
    for (auto& g : state.queue) g = trilinear_sample(g, coords);

    const std::size_t n = v_now.num_voxels();
    VoxelGrid fused(c, v_now.extent[0], v_now.extent[1], v_now.extent[2]);
    bool all_zero = true;
    for (std::size_t i = 0; i < state.fuse_weights.size(); ++i)
        if (state.fuse_weights[i] != 0.0) {
            all_zero = false;
            break;
        }
    if (all_zero) {
        const double w = 1.0 / static_cast<double>(state.queue.size() + 1);
        for (std::size_t i = 0; i < fused.data.size(); ++i) fused.data[i] = w * v_now.data[i];
        for (const auto& g : state.queue)
            for (std::size_t i = 0; i < fused.data.size(); ++i) fused.data[i] += w * g.data[i];
    } else {
        for (std::size_t ch = 0; ch < c; ++ch) {
            double* out = fused.data.data() + ch * n;
            for (std::size_t src = 0; src < c; ++src) {
                const double w = state.fuse_weights(ch, src);
                if (w == 0.0) continue;
                const double* row = v_now.data.data() + src * n;
                for (std::size_t j = 0; j < n; ++j) out[j] += w * row[j];
            }
            for (std::size_t q = 0; q < state.queue.size(); ++q) {
                for (std::size_t src = 0; src < c; ++src) {
                    const double w = state.fuse_weights(ch, (q + 1) * c + src);
                    if (w == 0.0) continue;
                    const double* row = state.queue[q].data.data() + src * n;
                    for (std::size_t j = 0; j < n; ++j) out[j] += w * row[j];
                }
            }
        }
    }

    if (state.max_frames > 0) {
        state.queue.insert(state.queue.begin(), v_now);
        if (state.queue.size() > state.max_frames) state.queue.resize(state.max_frames);
    }
    return {std::move(fused), std::move(state)};
}

}  // namespace gdfusion::oracle
