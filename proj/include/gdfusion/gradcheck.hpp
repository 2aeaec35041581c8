#pragma once
// Seeded parity sweeps pairing every closed-form gradient with its
// independent oracle: finite differences for the scene/motion/sampling
// chains, the recurrence-vs-descent identity, and the per-element chain
// evaluator against the fused matrix path.

#include <cmath>
#include <string>
#include <vector>

#include "gdfusion/motion.hpp"
#include "gdfusion/oracle.hpp"
#include "gdfusion/rng.hpp"
#include "gdfusion/scene.hpp"
#include "gdfusion/tensor.hpp"
#include "gdfusion/voxel.hpp"

namespace gdfusion::gradcheck {

struct CheckResult {
    std::string name;
    double measured = 0.0;  // worst value observed across the sweep
    double limit = 0.0;     // pass iff measured <= limit

    bool pass() const { return measured <= limit; }
};

namespace detail {

// max over entries of |got - want| / (abs_tol + rel_tol |want|); <= 1 passes
inline double scaled_err(const Tensor& got, const Tensor& want, double rel_tol,
                         double abs_tol) {
    double worst = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i)
        worst = std::max(worst,
                         std::fabs(got[i] - want[i]) / (abs_tol + rel_tol * std::fabs(want[i])));
    return worst;
}

// Scales are moderated so the summed loss stays O(100): the central
// difference of a loss L carries round-off eps L / (2h), which must stay
// below the 1e-8 absolute tolerance floor the parity checks use.
inline scene::SceneParams random_scene_params(std::size_t c, rng::Stream& rs) {
    scene::SceneParams p{Tensor({c}), Tensor({c}), Tensor::identity(c), Tensor({c})};
    for (std::size_t i = 0; i < c; ++i) {
        p.gamma[i] = rs.uniform(-0.2, 0.2);
        p.beta[i] = rs.uniform(-0.2, 0.2);
        p.b[i] = rs.uniform(-0.15, 0.15);
    }
    for (std::size_t i = 0; i < c * c; ++i) p.w[i] += rs.uniform(-0.2, 0.2);
    return p;
}

inline scene::AugmentWeights random_aug(std::size_t c, rng::Stream& rs) {
    scene::AugmentWeights aug{Tensor({c, c}), Tensor({c, c}), Tensor({c, c})};
    const double a = 1.0 / std::sqrt(static_cast<double>(c));
    for (std::size_t i = 0; i < c * c; ++i) {
        aug.q1[i] = rs.uniform(-a, a);
        aug.q2[i] = rs.uniform(-a, a);
        aug.qo[i] = rs.uniform(-a, a);
    }
    return aug;
}

// Extended-precision evaluation of the scene matching loss, written from the
// definition: f_s(Q1 v) = gamma (.) Norm(W Q1 v + b) + beta + Q1 v, loss =
// squared Frobenius norm against Q2 v. Central differences of a double
// precision loss carry summation round-off sqrt(nc) eps L / (2h), which
// breaches the 1e-8 absolute tolerance floor; the oracle therefore runs in
// long double.
inline long double scene_loss_ld(const Tensor& v, const scene::SceneParams& p,
                                 const scene::AugmentWeights& aug, double eps = kZScoreEps) {
    const std::size_t c = v.rows(), n = v.cols();
    std::vector<long double> x(c * n, 0.0L), target(c * n, 0.0L), z(c * n, 0.0L);
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            long double sx = 0.0L, st = 0.0L;
            for (std::size_t k = 0; k < c; ++k) {
                sx += static_cast<long double>(aug.q1(i, k)) * v(k, j);
                st += static_cast<long double>(aug.q2(i, k)) * v(k, j);
            }
            x[i * n + j] = sx;
            target[i * n + j] = st;
        }
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            long double s = static_cast<long double>(p.b[i]);
            for (std::size_t k = 0; k < c; ++k)
                s += static_cast<long double>(p.w(i, k)) * x[k * n + j];
            z[i * n + j] = s;
        }
    long double loss = 0.0L;
    for (std::size_t j = 0; j < n; ++j) {
        long double mean = 0.0L;
        for (std::size_t i = 0; i < c; ++i) mean += z[i * n + j];
        mean /= static_cast<long double>(c);
        long double var = 0.0L;
        for (std::size_t i = 0; i < c; ++i) {
            const long double d = z[i * n + j] - mean;
            var += d * d;
        }
        var /= static_cast<long double>(c);
        const long double sigma = sqrtl(var + static_cast<long double>(eps));
        for (std::size_t i = 0; i < c; ++i) {
            const long double zhat = (z[i * n + j] - mean) / sigma;
            const long double y = static_cast<long double>(p.gamma[i]) * zhat +
                                  static_cast<long double>(p.beta[i]) + x[i * n + j];
            const long double d = y - target[i * n + j];
            loss += d * d;
        }
    }
    return loss;
}

// Offsets rejected until every transformed coordinate keeps `margin` from
// all lattice planes, so central differences stay inside one cell.
inline motion::MotionField off_lattice_offsets(std::size_t x, std::size_t y, std::size_t z,
                                               const RigidTransform& t, rng::Stream& rs,
                                               double margin = 0.05) {
    motion::MotionField m(x, y, z);
    const std::size_t n = m.num_voxels();
    std::size_t v = 0;
    for (std::size_t i = 0; i < x; ++i)
        for (std::size_t j = 0; j < y; ++j)
            for (std::size_t k = 0; k < z; ++k, ++v)
                for (int attempt = 0; attempt < 256; ++attempt) {
                    const std::array<double, 3> off{rs.uniform(-0.9, 0.9),
                                                    rs.uniform(-0.9, 0.9),
                                                    rs.uniform(-0.9, 0.9)};
                    const std::array<double, 3> p =
                        t.apply({static_cast<double>(i) + off[0],
                                 static_cast<double>(j) + off[1],
                                 static_cast<double>(k) + off[2]});
                    bool ok = true;
                    for (double coord : p) {
                        const double frac = coord - std::floor(coord);
                        if (frac < margin || frac > 1.0 - margin) ok = false;
                    }
                    if (ok) {
                        m.offsets.data[v] = off[0];
                        m.offsets.data[n + v] = off[1];
                        m.offsets.data[2 * n + v] = off[2];
                        break;
                    }
                }
    return m;
}

}  // namespace detail

// Recurrence path vs explicit descent path over random instances, c <= 8.
inline CheckResult check_prop1(std::uint64_t seed, int trials = 1000, double tol = 1e-11) {
    rng::Stream rs(seed, 0x9901);
    double worst = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        const std::size_t c = 1 + rs.below(8);
        voxel::GDStepWeights g{Tensor({c, c}), Tensor({c, c}), rs.uniform(0.0, 1.0)};
        for (std::size_t i = 0; i < c * c; ++i) {
            g.a[i] = rs.uniform(-1.0, 1.0);
            g.b[i] = rs.uniform(-1.0, 1.0);
        }
        Tensor h({c}), x({c});
        for (std::size_t i = 0; i < c; ++i) {
            h[i] = rs.uniform(-1.0, 1.0);
            x[i] = rs.uniform(-1.0, 1.0);
        }
        worst = std::max(worst, voxel::prop1_check(g, h, x));
    }
    return {"prop1 recurrence-vs-descent max-abs", worst, tol};
}

// Every block of the scene gradient vs central finite differences of the
// loss; includes the degenerate c = 1 instance. The optional sign flip on
// d_beta is a detector-sanity hook.
inline CheckResult check_scene_gradients(std::uint64_t seed, int instances = 20,
                                         double rel_tol = 1e-5, double abs_tol = 1e-8,
                                         bool inject_sign_error = false) {
    rng::Stream rs(seed, 0x9902);
    double worst = 0.0;
    for (int inst = 0; inst < instances; ++inst) {
        const std::size_t c = inst == 0 ? 1 : 1 + rs.below(8);
        const std::size_t n = 4 + rs.below(61);
        Tensor v({c, n});
        scene::SceneParams p = scene::SceneParams::initial(c);
        scene::AugmentWeights aug{Tensor({c, c}), Tensor({c, c}), Tensor({c, c})};
        // redraw instances whose normalization statistics sit near the
        // regularization scale: central differences cannot resolve the
        // 1/sqrt(var + eps) curvature there, so the oracle itself would be
        // invalid (the c = 1 case is exempt; its zhat is identically zero)
        for (int attempt = 0; attempt < 256; ++attempt) {
            for (std::size_t i = 0; i < v.size(); ++i) v[i] = rs.uniform(-0.4, 0.4);
            p = detail::random_scene_params(c, rs);
            aug = detail::random_aug(c, rs);
            if (c == 1) break;
            Tensor z = matmul(p.w, matmul(aug.q1, v));
            for (std::size_t i = 0; i < c; ++i)
                for (std::size_t j = 0; j < n; ++j) z(i, j) += p.b[i];
            double min_sigma = 1e300;
            for (std::size_t j = 0; j < n; ++j) {
                double mean = 0.0, var = 0.0;
                for (std::size_t i = 0; i < c; ++i) mean += z(i, j);
                mean /= static_cast<double>(c);
                for (std::size_t i = 0; i < c; ++i)
                    var += (z(i, j) - mean) * (z(i, j) - mean);
                min_sigma = std::min(min_sigma, std::sqrt(var / static_cast<double>(c)));
            }
            if (min_sigma >= 0.15) break;
        }

        scene::GradientResult got = scene_gradient(v, p, aug);
        if (inject_sign_error)
            for (std::size_t i = 0; i < c; ++i) got.grad.d_beta[i] = -got.grad.d_beta[i];

        // h = 1e-6 with relative stepping; the loss itself is evaluated in
        // long double so the difference quotient is truncation-limited
        const double h = 1e-6;
        auto fd_block = [&](auto&& replace, const Tensor& at) {
            Tensor grad(at.dims());
            Tensor probe = at;
            for (std::size_t i = 0; i < at.size(); ++i) {
                const double x0 = at[i];
                const double step = h * std::max(1.0, std::fabs(x0));
                scene::SceneParams q = p;
                probe[i] = x0 + step;
                replace(q, probe);
                const long double up = detail::scene_loss_ld(v, q, aug);
                probe[i] = x0 - step;
                replace(q, probe);
                const long double down = detail::scene_loss_ld(v, q, aug);
                probe[i] = x0;
                grad[i] = static_cast<double>((up - down) /
                                              (2.0L * static_cast<long double>(step)));
            }
            return grad;
        };
        const Tensor fd_gamma =
            fd_block([](scene::SceneParams& q, const Tensor& b) { q.gamma = b; }, p.gamma);
        const Tensor fd_beta =
            fd_block([](scene::SceneParams& q, const Tensor& b) { q.beta = b; }, p.beta);
        const Tensor fd_w =
            fd_block([](scene::SceneParams& q, const Tensor& b) { q.w = b; }, p.w);
        const Tensor fd_b =
            fd_block([](scene::SceneParams& q, const Tensor& b) { q.b = b; }, p.b);

        worst = std::max(worst, detail::scaled_err(got.grad.d_gamma, fd_gamma, rel_tol, abs_tol));
        worst = std::max(worst, detail::scaled_err(got.grad.d_beta, fd_beta, rel_tol, abs_tol));
        worst = std::max(worst, detail::scaled_err(got.grad.d_w, fd_w, rel_tol, abs_tol));
        worst = std::max(worst, detail::scaled_err(got.grad.d_b, fd_b, rel_tol, abs_tol));
    }
    return {"scene gradient vs finite differences (scaled)", worst, 1.0};
}

// Analytic sampling Jacobian vs central differences at off-lattice probes.
inline CheckResult check_trilinear_jacobian(std::uint64_t seed, int probes = 200,
                                            double rel_tol = 1e-5) {
    rng::Stream rs(seed, 0x9903);
    const std::size_t c = 2;
    VoxelGrid g(c, 6, 6, 6);
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = rs.uniform(-1.0, 1.0);

    const double h = 1e-5;
    double worst = 0.0;
    std::vector<double> jac(c * 3);
    std::vector<double> up(c), down(c);
    for (int probe = 0; probe < probes; ++probe) {
        double p[3];
        for (double& coord : p) {
            coord = rs.uniform(0.0, 4.0) + rs.uniform(0.05, 0.95);
            if (coord - std::floor(coord) < 1e-3) coord += 1e-3;
        }
        trilinear_jacobian_point(g, p[0], p[1], p[2], jac.data());
        for (int axis = 0; axis < 3; ++axis) {
            double q[3] = {p[0], p[1], p[2]};
            q[axis] = p[axis] + h;
            trilinear_sample_point(g, q[0], q[1], q[2], up.data());
            q[axis] = p[axis] - h;
            trilinear_sample_point(g, q[0], q[1], q[2], down.data());
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double fd = (up[ch] - down[ch]) / (2.0 * h);
                worst = std::max(worst, std::fabs(jac[ch * 3 + axis] - fd) /
                                            (1e-9 + rel_tol * std::fabs(fd)));
            }
        }
    }
    return {"trilinear jacobian vs finite differences (scaled)", worst, 1.0};
}

inline CheckResult check_lattice_exactness(std::uint64_t seed, double tol = 1e-15) {
    rng::Stream rs(seed, 0x9904);
    VoxelGrid g(3, 5, 4, 6);
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = rs.uniform(-10.0, 10.0);
    const CoordField p = CoordField::canonical(5, 4, 6);
    const VoxelGrid out = trilinear_sample(g, p);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.data.size(); ++i)
        worst = std::max(worst, std::fabs(out.data[i] - g.data[i]));
    return {"integer-coordinate sampling max-abs", worst, tol};
}

// Motion-loss gradient vs finite differences at off-lattice configurations.
inline CheckResult check_motion_gradient(std::uint64_t seed, int instances = 20,
                                         double rel_tol = 1e-4, double abs_tol = 1e-8) {
    rng::Stream rs(seed, 0x9905);
    double worst = 0.0;
    for (int inst = 0; inst < instances; ++inst) {
        const std::size_t x = 3 + rs.below(4), y = 3 + rs.below(4), z = 3 + rs.below(4);
        RigidTransform t = RigidTransform::axis_angle(
            {rs.uniform(-1, 1), rs.uniform(-1, 1), rs.uniform(-1, 1)},
            rs.uniform(-0.25, 0.25));
        t.translation = {rs.uniform(-0.5, 0.5), rs.uniform(-0.5, 0.5), rs.uniform(-0.5, 0.5)};

        motion::MotionField h_prev(x, y, z);
        for (std::size_t i = 0; i < h_prev.offsets.data.size(); ++i)
            h_prev.offsets.data[i] = rs.uniform(-1.0, 1.0);
        const motion::MotionField m_now = detail::off_lattice_offsets(x, y, z, t, rs);

        const motion::MotionField got = motion_gradient(h_prev, m_now, t);
        const Tensor fd = oracle::finite_diff_grad(
            [&](const Tensor& offsets) {
                motion::MotionField probe(x, y, z);
                probe.offsets.data = offsets;
                return motion_loss(h_prev, probe, t);
            },
            m_now.offsets.data, 1e-5);
        worst = std::max(worst, detail::scaled_err(got.offsets.data, fd, rel_tol, abs_tol));
    }
    return {"motion gradient vs finite differences (scaled)", worst, 1.0};
}

// Fused matrix path vs the per-element chain evaluator.
inline CheckResult check_naive_chain(std::uint64_t seed, double tol = 1e-10) {
    rng::Stream rs(seed, 0x9906);
    double worst = 0.0;
    for (int inst = 0; inst < 5; ++inst) {
        const std::size_t c = 2 + rs.below(7), n = 8 + rs.below(25);
        Tensor v({c, n});
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = rs.uniform(-1.0, 1.0);
        const scene::SceneParams p = detail::random_scene_params(c, rs);
        const scene::AugmentWeights aug = detail::random_aug(c, rs);
        const scene::SceneGradient naive = oracle::naive_chain_gradient(v, p, aug);
        const scene::GradientResult fused = scene_gradient(v, p, aug);
        auto max_diff = [&](const Tensor& a, const Tensor& b) {
            double m = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i)
                m = std::max(m, std::fabs(a[i] - b[i]));
            return m;
        };
        worst = std::max(worst, max_diff(naive.d_gamma, fused.grad.d_gamma));
        worst = std::max(worst, max_diff(naive.d_beta, fused.grad.d_beta));
        worst = std::max(worst, max_diff(naive.d_w, fused.grad.d_w));
        worst = std::max(worst, max_diff(naive.d_b, fused.grad.d_b));
    }
    return {"fused vs per-element chain gradient max-abs", worst, tol};
}

inline std::vector<CheckResult> run_all(std::uint64_t seed, bool inject_scene_sign_error = false) {
    return {check_prop1(seed),
            check_scene_gradients(seed, 20, 1e-5, 1e-8, inject_scene_sign_error),
            check_trilinear_jacobian(seed),
            check_lattice_exactness(seed),
            check_motion_gradient(seed),
            check_naive_chain(seed)};
}

}  // namespace gdfusion::gradcheck
