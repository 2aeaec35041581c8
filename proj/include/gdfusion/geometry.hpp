#pragma once
// Temporal geometry fusion over per-ray discrete depth distributions:
// cross-frame warping of the historical distribution, the adaptive sigmoid
// gate, and the convex-combination update that preserves the probability
// simplex.

#include <cmath>
#include <cstddef>
#include <limits>

#include "gdfusion/tensor.hpp"

namespace gdfusion::geometry {

// Per-ray probability vectors over K uniformly spaced depth bins.
struct DepthDistribution {
    std::size_t rays = 0;
    std::size_t bins = 0;
    Tensor probs;        // (rays, K), rows on the simplex
    Tensor bin_centers;  // (K), strictly increasing, uniform spacing

    DepthDistribution() = default;

    DepthDistribution(std::size_t r, std::size_t k, Tensor centers)
        : rays(r), bins(k), probs({r, k}), bin_centers(std::move(centers)) {
        if (bin_centers.size() != k) throw ShapeError("DepthDistribution: center count mismatch");
    }

    static Tensor uniform_centers(std::size_t k, double d_min, double d_max) {
        Tensor c({k});
        const double width = (d_max - d_min) / static_cast<double>(k);
        for (std::size_t i = 0; i < k; ++i)
            c[i] = d_min + (static_cast<double>(i) + 0.5) * width;
        return c;
    }

    double bin_width() const {
        return bins > 1 ? bin_centers[1] - bin_centers[0] : 1.0;
    }

    double max_row_sum_error() const {
        double err = 0.0;
        for (std::size_t r = 0; r < rays; ++r) {
            double s = 0.0;
            for (std::size_t k = 0; k < bins; ++k) s += probs(r, k);
            err = std::max(err, std::fabs(s - 1.0));
        }
        return err;
    }
};

// Scalar gate head over the concatenated (warped history, current) rows.
struct GateParams {
    Tensor weight;  // (2K)
    double bias = 0.0;

    static GateParams zeros(std::size_t k) { return GateParams{Tensor({2 * k}), 0.0}; }
};

// Ray geometry in the camera frame: per-ray origin and unit direction. The
// ray table is fixed per camera, so it describes both frames of a warp.
struct RayTable {
    Tensor origins;     // (rays, 3)
    Tensor directions;  // (rays, 3), unit norm

    std::size_t count() const { return origins.rows(); }

    double max_direction_norm_error() const {
        double err = 0.0;
        for (std::size_t r = 0; r < count(); ++r) {
            const double n = directions(r, 0) * directions(r, 0) +
                             directions(r, 1) * directions(r, 1) +
                             directions(r, 2) * directions(r, 2);
            err = std::max(err, std::fabs(std::sqrt(n) - 1.0));
        }
        return err;
    }
};

struct CameraPose {
    RigidTransform prev_to_cur;  // previous camera frame -> current camera frame
    RayTable rays;
};

namespace detail {

// Index of the ray whose line is closest to point q; first index wins ties.
inline std::size_t nearest_ray(const RayTable& rays, const std::array<double, 3>& q) {
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < rays.count(); ++r) {
        const double vx = q[0] - rays.origins(r, 0);
        const double vy = q[1] - rays.origins(r, 1);
        const double vz = q[2] - rays.origins(r, 2);
        const double along = vx * rays.directions(r, 0) + vy * rays.directions(r, 1) +
                             vz * rays.directions(r, 2);
        const double d2 = vx * vx + vy * vy + vz * vz - along * along;
        if (d2 < best_d2) {
            best_d2 = d2;
            best = r;
        }
    }
    return best;
}

}  // namespace detail

// Moves each ray/bin mass point into the current camera frame, re-associates
// it with the nearest current ray, and splats the mass linearly between the
// two enclosing depth bins. Mass projected outside [d_1, d_K] is dropped;
// rows are renormalized afterwards and rows left without mass become uniform.
inline DepthDistribution warp_geometry(const DepthDistribution& h_prev, const CameraPose& pose) {
    if (pose.rays.count() != h_prev.rays) throw ShapeError("warp_geometry: ray count mismatch");
    const std::size_t nrays = h_prev.rays, nbins = h_prev.bins;
    const double d_min = h_prev.bin_centers[0];
    const double d_max = h_prev.bin_centers[nbins - 1];
    const double width = h_prev.bin_width();
    const double slack = 1e-9 * width;

    DepthDistribution out(nrays, nbins, h_prev.bin_centers);
    for (std::size_t r = 0; r < nrays; ++r) {
        const std::array<double, 3> o{pose.rays.origins(r, 0), pose.rays.origins(r, 1),
                                      pose.rays.origins(r, 2)};
        const std::array<double, 3> d{pose.rays.directions(r, 0), pose.rays.directions(r, 1),
                                      pose.rays.directions(r, 2)};
        for (std::size_t k = 0; k < nbins; ++k) {
            const double mass = h_prev.probs(r, k);
            if (mass == 0.0) continue;
            const double depth = h_prev.bin_centers[k];
            const std::array<double, 3> q = pose.prev_to_cur.apply(
                {o[0] + depth * d[0], o[1] + depth * d[1], o[2] + depth * d[2]});
            const std::size_t tgt = detail::nearest_ray(pose.rays, q);
            double s = (q[0] - pose.rays.origins(tgt, 0)) * pose.rays.directions(tgt, 0) +
                       (q[1] - pose.rays.origins(tgt, 1)) * pose.rays.directions(tgt, 1) +
                       (q[2] - pose.rays.origins(tgt, 2)) * pose.rays.directions(tgt, 2);
            if (s < d_min - slack || s > d_max + slack) continue;
            s = std::min(std::max(s, d_min), d_max);
            const double u = (s - d_min) / width;
            std::size_t k0 = static_cast<std::size_t>(u);
            if (k0 >= nbins - 1) k0 = nbins - 2;
            const double frac = u - static_cast<double>(k0);
            out.probs(tgt, k0) += mass * (1.0 - frac);
            out.probs(tgt, k0 + 1) += mass * frac;
        }
    }

    for (std::size_t r = 0; r < nrays; ++r) {
        double total = 0.0;
        for (std::size_t k = 0; k < nbins; ++k) total += out.probs(r, k);
        if (total > 0.0) {
            for (std::size_t k = 0; k < nbins; ++k) out.probs(r, k) /= total;
        } else {
            const double u = 1.0 / static_cast<double>(nbins);
            for (std::size_t k = 0; k < nbins; ++k) out.probs(r, k) = u;
        }
    }
    return out;
}

// Per-ray gate sigmoid(w . cat(h_row, g_row) + bias), in (0, 1) away from
// the double saturation limit (|pre-activation| beyond ~36 rounds to 0 or 1).
inline Tensor gate(const DepthDistribution& h_warped, const DepthDistribution& g_now,
                   const GateParams& p) {
    if (h_warped.rays != g_now.rays || h_warped.bins != g_now.bins)
        throw ShapeError("gate: shape mismatch");
    if (p.weight.size() != 2 * h_warped.bins) throw ShapeError("gate: weight length mismatch");
    const std::size_t nrays = h_warped.rays, nbins = h_warped.bins;
    Tensor gates({nrays});
    for (std::size_t r = 0; r < nrays; ++r) {
        double pre = p.bias;
        for (std::size_t k = 0; k < nbins; ++k) {
            pre += p.weight[k] * h_warped.probs(r, k);
            pre += p.weight[nbins + k] * g_now.probs(r, k);
        }
        gates[r] = 1.0 / (1.0 + std::exp(-pre));
    }
    return gates;
}

// Per-ray convex combination written as g_now + (1 - gate) (h - g_now): a
// unit gate returns the current distribution bitwise, agreement of the two
// inputs is a bitwise fixed point, and simplex rows stay on the simplex.
inline DepthDistribution geometry_update(const DepthDistribution& h_warped,
                                         const DepthDistribution& g_now, const Tensor& gates) {
    if (h_warped.rays != g_now.rays || h_warped.bins != g_now.bins)
        throw ShapeError("geometry_update: shape mismatch");
    if (gates.size() != h_warped.rays) throw ShapeError("geometry_update: gate count mismatch");
    DepthDistribution out(h_warped.rays, h_warped.bins, h_warped.bin_centers);
    for (std::size_t r = 0; r < h_warped.rays; ++r) {
        const double keep = 1.0 - gates[r];
        for (std::size_t k = 0; k < h_warped.bins; ++k) {
            const double now = g_now.probs(r, k);
            double v = now + keep * (h_warped.probs(r, k) - now);
            if (v < 0.0) v = 0.0;  // rounding guard at saturated gates
            out.probs(r, k) = v;
        }
    }
    return out;
}

}  // namespace gdfusion::geometry
