#pragma once
// Scene-level temporal fusion: the residual LayerNorm-affine network f_s,
// its self-supervised matching loss over two linear augmentations, the
// closed-form parameter gradients computed with fused matrix operations,
// the hidden-state update, and the application of fused parameters to
// volume features.

#include <cstddef>
#include <utility>

#include "gdfusion/rng.hpp"
#include "gdfusion/tensor.hpp"

namespace gdfusion::scene {

// The four scene-adaptive parameter blocks. gamma/beta/b are length-c
// vectors, W is c x c.
struct SceneParams {
    Tensor gamma;
    Tensor beta;
    Tensor w;
    Tensor b;

    std::size_t channels() const { return gamma.size(); }

    // Identity-acting start when gamma0 = 0: the forward pass reduces to the
    // residual path. gamma0 = 1 weights the normalized branch fully.
    static SceneParams initial(std::size_t c, double gamma0 = 0.0) {
        SceneParams p{Tensor({c}), Tensor({c}), Tensor::identity(c), Tensor({c})};
        for (std::size_t i = 0; i < c; ++i) p.gamma[i] = gamma0;
        return p;
    }

    bool same_shape(const SceneParams& o) const {
        return gamma.size() == o.gamma.size() && beta.size() == o.beta.size() &&
               w.dims() == o.w.dims() && b.size() == o.b.size();
    }
};

// Fixed linear augmentations Q1, Q2 for the matching loss plus the output
// mixing matrix Qo applied before the fused forward pass.
struct AugmentWeights {
    Tensor q1;
    Tensor q2;
    Tensor qo;

    static AugmentWeights seeded(std::size_t c, std::uint64_t seed, bool identity_qo = true) {
        const double a = 1.0 / std::sqrt(static_cast<double>(c));
        rng::Stream rs(seed, 0x5C3E);
        AugmentWeights w{Tensor({c, c}), Tensor({c, c}), Tensor::identity(c)};
        for (std::size_t i = 0; i < c * c; ++i) w.q1[i] = rs.uniform(-a, a);
        for (std::size_t i = 0; i < c * c; ++i) w.q2[i] = rs.uniform(-a, a);
        if (!identity_qo) {
            w.qo = Tensor({c, c});
            for (std::size_t i = 0; i < c * c; ++i) w.qo[i] = rs.uniform(-a, a);
        }
        return w;
    }
};

struct SceneGradient {
    Tensor d_gamma;
    Tensor d_beta;
    Tensor d_w;
    Tensor d_b;
};

// Chain terms captured during forward/gradient evaluation. delta2 always
// equals 2 * gamma (.) delta1.
struct SceneIntermediates {
    Tensor delta1;
    Tensor delta2;
    Tensor delta3;
    Tensor zhat;
    Tensor mu;
    Tensor sigma;
};

struct ForwardResult {
    Tensor y;
    SceneIntermediates inter;
};

struct GradientResult {
    SceneGradient grad;
    SceneIntermediates inter;
};

// y = gamma (.) Norm(W x + b 1^T) + beta + x.
inline ForwardResult scene_forward(const Tensor& x, const SceneParams& p,
                                   double eps = kZScoreEps) {
    const std::size_t c = x.rows(), n = x.cols();
    if (p.channels() != c || p.w.rows() != c) throw ShapeError("scene_forward: channel mismatch");

    Tensor z = matmul(p.w, x);
    for (std::size_t i = 0; i < c; ++i) {
        const double bi = p.b[i];
        for (std::size_t j = 0; j < n; ++j) z(i, j) += bi;
    }
    ZScoreResult norm = zscore_norm(z, eps);

    Tensor y({c, n});
    for (std::size_t i = 0; i < c; ++i) {
        const double g = p.gamma[i], be = p.beta[i];
        for (std::size_t j = 0; j < n; ++j) y(i, j) = g * norm.zhat(i, j) + be + x(i, j);
    }
    return {std::move(y),
            {Tensor{}, Tensor{}, Tensor{}, std::move(norm.zhat), std::move(norm.mu),
             std::move(norm.sigma)}};
}

// Squared Frobenius norm of f_s(Q1 v) - Q2 v, unnormalized; the mean-square
// constant is absorbed into eta_s by callers that want it.
inline double scene_loss(const Tensor& v, const SceneParams& p, const AugmentWeights& aug,
                         double eps = kZScoreEps) {
    const Tensor x = matmul(aug.q1, v);
    const Tensor target = matmul(aug.q2, v);
    const ForwardResult f = scene_forward(x, p, eps);
    double loss = 0.0;
    for (std::size_t i = 0; i < f.y.size(); ++i) {
        const double d = f.y[i] - target[i];
        loss += d * d;
    }
    return loss;
}

// Closed-form gradients of scene_loss with respect to {gamma, beta, W, b},
// computed via fused matrix operations:
//   d_gamma = 2 (delta1 (.) zhat) 1_n
//   d_beta  = 2 delta1 1_n
//   delta2  = 2 gamma (.) delta1
//   delta3  = (delta2 - colmean(delta2) - zhat (.) colmean(zhat (.) delta2))
//             (/) sigma      [column means over the c channels]
//   d_W     = delta3 (Q1 v)^T
//   d_b     = delta3 1_n
inline GradientResult scene_gradient(const Tensor& v, const SceneParams& p,
                                     const AugmentWeights& aug, double eps = kZScoreEps) {
    const std::size_t c = v.rows(), n = v.cols();
    const Tensor x = matmul(aug.q1, v);
    const Tensor target = matmul(aug.q2, v);
    ForwardResult f = scene_forward(x, p, eps);
    const Tensor& zhat = f.inter.zhat;

    Tensor delta1({c, n});
    for (std::size_t i = 0; i < c * n; ++i) delta1[i] = f.y[i] - target[i];

    Tensor d_gamma({c}), d_beta({c});
    for (std::size_t i = 0; i < c; ++i) {
        double sg = 0.0, sb = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            sg += delta1(i, j) * zhat(i, j);
            sb += delta1(i, j);
        }
        d_gamma[i] = 2.0 * sg;
        d_beta[i] = 2.0 * sb;
    }

    Tensor delta2({c, n});
    for (std::size_t i = 0; i < c; ++i) {
        const double g2 = 2.0 * p.gamma[i];
        for (std::size_t j = 0; j < n; ++j) delta2(i, j) = g2 * delta1(i, j);
    }

    Tensor delta3({c, n});
    for (std::size_t j = 0; j < n; ++j) {
        double m1 = 0.0, m2 = 0.0;
        for (std::size_t i = 0; i < c; ++i) {
            m1 += delta2(i, j);
            m2 += zhat(i, j) * delta2(i, j);
        }
        m1 /= static_cast<double>(c);
        m2 /= static_cast<double>(c);
        const double inv_sigma = 1.0 / f.inter.sigma[j];
        for (std::size_t i = 0; i < c; ++i)
            delta3(i, j) = (delta2(i, j) - m1 - zhat(i, j) * m2) * inv_sigma;
    }

    Tensor d_w = matmul(delta3, transpose(x));
    Tensor d_b({c});
    for (std::size_t i = 0; i < c; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += delta3(i, j);
        d_b[i] = s;
    }

    SceneIntermediates inter{std::move(delta1), std::move(delta2), std::move(delta3),
                             std::move(f.inter.zhat), std::move(f.inter.mu),
                             std::move(f.inter.sigma)};
    return {{std::move(d_gamma), std::move(d_beta), std::move(d_w), std::move(d_b)},
            std::move(inter)};
}

// One descent step per block; the result serves as both the new hidden state
// and the fused parameters.
inline SceneParams scene_update(const SceneParams& h_prev, const SceneGradient& grad,
                                double eta_s) {
    if (eta_s < 0.0) throw std::invalid_argument("scene_update: eta_s must be nonnegative");
    const std::size_t c = h_prev.channels();
    SceneParams out = h_prev;
    for (std::size_t i = 0; i < c; ++i) {
        out.gamma[i] -= eta_s * grad.d_gamma[i];
        out.beta[i] -= eta_s * grad.d_beta[i];
        out.b[i] -= eta_s * grad.d_b[i];
    }
    for (std::size_t i = 0; i < c * c; ++i) out.w[i] -= eta_s * grad.d_w[i];
    return out;
}

inline Tensor scene_apply(const Tensor& v_fused, const SceneParams& s_fused,
                          const AugmentWeights& aug, double eps = kZScoreEps) {
    return scene_forward(matmul(aug.qo, v_fused), s_fused, eps).y;
}

}  // namespace gdfusion::scene
