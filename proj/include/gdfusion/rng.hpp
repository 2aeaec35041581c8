#pragma once
// Seeded RNG helpers. Streams are derived per (seed, stream id) so frame
// rendering stays deterministic and order-independent; gaussians use
// Box-Muller over the raw 64-bit stream for a build-stable sequence.

#include <cmath>
#include <cstdint>

namespace gdfusion::rng {

// splitmix64; also used to mix stream ids into seeds.
inline std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

class Stream {
public:
    explicit Stream(std::uint64_t seed) : state_(seed == 0 ? 0x6A09E667F3BCC909ULL : seed) {}

    Stream(std::uint64_t seed, std::uint64_t stream_id) : Stream(mix(seed) ^ mix(~stream_id)) {}

    std::uint64_t next_u64() {
        state_ = mix(state_);
        return state_;
    }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        if (u1 < 1e-300) u1 = 1e-300;
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace gdfusion::rng
