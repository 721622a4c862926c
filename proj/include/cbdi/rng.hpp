// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace cbdi {

// Counter-based stream built on the Philox-4x32-10 block cipher.
//
// A stream is addressed by (key, path, substream): the 64-bit key carries the
// master seed (already mixed with a domain tag, see derive_stream_key), the
// counter's high words carry the path index and the low words carry the
// substream index (generation or time step) plus a running block counter.
// Any (path, substream) pair therefore yields the same draw sequence no
// matter which thread runs it or in which order streams are consumed, which
// is what makes ensemble output independent of the worker count.
class RngStream {
  public:
    RngStream(std::uint64_t key, std::uint64_t path, std::uint64_t substream)
        : key0_(static_cast<std::uint32_t>(key)),
          key1_(static_cast<std::uint32_t>(key >> 32)),
          ctr_{0u, static_cast<std::uint32_t>(substream),
               static_cast<std::uint32_t>(path),
               static_cast<std::uint32_t>(path >> 32)},
          buf_pos_(4) {}

    std::uint32_t next_u32() {
        if (buf_pos_ == 4) refill();
        return buf_[buf_pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    // Uniform on [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0, 1); safe under log().
    double next_double_open() {
        return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
    }

    // Standard normal (Box-Muller, one value per pair of uniforms).
    double normal();

    // Exponential with unit mean.
    double exponential() { return -std::log(next_double_open()); }

    // Poisson(mean); exact distribution for every mean >= 0: sequential
    // search below mean 10, transformed rejection (PTRS) above.
    std::int64_t poisson(double mean);

    // Binomial(n, p); exact distribution: inversion for small n*min(p,1-p),
    // the BTPE accept/reject scheme otherwise.
    std::int64_t binomial(std::int64_t n, double p);

    // Gamma(shape, scale), shape > 0 (Marsaglia-Tsang squeeze method).
    double gamma(double shape, double scale);

  private:
    void refill();

    std::uint32_t key0_, key1_;
    std::array<std::uint32_t, 4> ctr_;
    std::array<std::uint32_t, 4> buf_;
    int buf_pos_;
};

// Mixes a master seed with a domain tag (one tag per simulation kind and
// scale level) so distinct experiments draw from unrelated streams even when
// they share the master seed.
std::uint64_t derive_stream_key(std::uint64_t master_seed, std::uint64_t domain);

namespace stream_domain {
inline constexpr std::uint64_t discrete(std::uint64_t k) {
    return 0x64697363u ^ (k * 0x9e3779b97f4a7c15ull);
}
inline constexpr std::uint64_t sde() { return 0x73646573u; }
inline constexpr std::uint64_t generic() { return 0x67656e65u; }
}  // namespace stream_domain

}  // namespace cbdi
