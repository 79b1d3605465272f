#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fbllr {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Output is a
/// pure function of (counter, key).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key) noexcept;

/// Identifies the Brownian increment of particle j over step k.
struct RngStreamKey {
    std::uint64_t seed = 0;
    std::uint64_t particle = 0;
    std::uint64_t level = 0;
};

/// Fills `out` with i.i.d. N(0, dt) samples for the given key. Uses Box-Muller
/// on 53-bit uniforms; block b of the stream is the Philox output at
/// counter (particle, level, b, 0) under key = seed.
void gaussian_block(const RngStreamKey& key, double dt, std::span<double> out) noexcept;

std::vector<double> gaussian_block(const RngStreamKey& key, std::size_t d, double dt);

}  // namespace fbllr
