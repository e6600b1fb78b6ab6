#include "stochdiag/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace stochdiag {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += kGolden;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t mix64(std::uint64_t x) {
    return splitmix64_next(x);
}

std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_(stream_id) {
    std::uint64_t init = mix64(seed) ^ (mix64(stream_id) + kGolden);
    state_[0] = splitmix64_next(init);
    state_[1] = splitmix64_next(init);
    state_[2] = splitmix64_next(init);
    state_[3] = splitmix64_next(init);
    // xoshiro's all-zero state is absorbing; splitmix output makes it
    // unreachable in practice, this is just belt and braces.
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) {
        state_[0] = kGolden;
    }
}

std::uint64_t RngStream::next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double RngStream::uniform01() {
    // 53 random bits, centered in the stratum: range [2^-54, 1 - 2^-54].
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::uniform(double a, double b) {
    return a + (b - a) * uniform01();
}

double RngStream::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    cached_normal_ = radius * std::sin(angle);
    has_cached_normal_ = true;
    return radius * std::cos(angle);
}

double RngStream::gamma(double shape) {
    if (!(shape > 0.0)) {
        throw std::domain_error("gamma shape must be positive");
    }
    if (shape < 1.0) {
        // Boost: G(a) = G(a+1) * U^(1/a).
        const double g = gamma(shape + 1.0);
        return g * std::pow(uniform01(), 1.0 / shape);
    }
    // Marsaglia & Tsang (2000), "A simple method for generating gamma
    // variables".
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x;
        double v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform01();
        if (u < 1.0 - 0.0331 * x * x * x * x) {
            return d * v;
        }
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
            return d * v;
        }
    }
}

RngStream RngStream::substream(std::uint64_t key) const {
    // Order-sensitive combine so substream(a).substream(b) differs from
    // substream(b).substream(a).
    std::uint64_t child = stream_;
    child ^= mix64(key) + kGolden + (child << 12) + (child >> 4);
    return RngStream(seed_, child);
}

}  // namespace stochdiag
