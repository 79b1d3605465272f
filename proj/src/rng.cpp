#include "fbllr/rng.hpp"

#include <cmath>
#include <numbers>

namespace fbllr {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

// 53-bit uniform in [0, 1).
inline double to_unit(std::uint32_t a, std::uint32_t b) noexcept {
    return (static_cast<double>(a >> 5) * 67108864.0 + static_cast<double>(b >> 6)) * 0x1.0p-53;
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

void gaussian_block(const RngStreamKey& key, double dt, std::span<double> out) noexcept {
    const PhiloxKey k = {static_cast<std::uint32_t>(key.seed), static_cast<std::uint32_t>(key.seed >> 32)};
    const double scale = std::sqrt(dt);
    // Particle and level indices are assumed to fit in 32 bits.
    const auto particle = static_cast<std::uint32_t>(key.particle);
    const auto level = static_cast<std::uint32_t>(key.level);
    const std::size_t n = out.size();
    for (std::size_t i = 0, block = 0; i < n; i += 2, ++block) {
        const PhiloxCounter r = philox4x32_10({particle, level, static_cast<std::uint32_t>(block), 0u}, k);
        const double u1 = 1.0 - to_unit(r[0], r[1]);  // (0, 1]
        const double u2 = to_unit(r[2], r[3]);
        const double radius = std::sqrt(-2.0 * std::log(u1)) * scale;
        const double angle = 2.0 * std::numbers::pi * u2;
        out[i] = radius * std::cos(angle);
        if (i + 1 < n) out[i + 1] = radius * std::sin(angle);
    }
}

std::vector<double> gaussian_block(const RngStreamKey& key, std::size_t d, double dt) {
    std::vector<double> out(d);
    gaussian_block(key, dt, out);
    return out;
}

}  // namespace fbllr
