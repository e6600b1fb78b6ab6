#pragma once

#include <cstdint>

namespace stochdiag {

// Seeded random stream built on xoshiro256++ with splitmix64 state expansion.
// A stream is fully identified by (seed, stream_id): equal pairs give
// bit-identical draw sequences, distinct stream ids give statistically
// independent sequences. Streams are single-owner; parallel code derives one
// substream per task instead of sharing.
//
// http://prng.di.unimi.it/
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

    std::uint64_t next_u64();

    // Uniform on the open interval (0,1); never returns an exact endpoint.
    double uniform01();
    double uniform(double a, double b);

    // Standard normal via Box-Muller; draws are generated in pairs and the
    // spare is cached, so the sequence depends only on the call order.
    double normal();

    // Gamma(shape, scale 1) via Marsaglia-Tsang, boosted for shape < 1.
    double gamma(double shape);

    // Independent child stream keyed off this stream's identity. Derivation
    // uses only (seed, stream_id, key), never the current position, so
    // substreams are reproducible regardless of how much the parent has been
    // consumed.
    RngStream substream(std::uint64_t key) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

private:
    std::uint64_t state_[4];
    std::uint64_t seed_;
    std::uint64_t stream_;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

}  // namespace stochdiag
