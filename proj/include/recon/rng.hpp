#pragma once

// Counter-based RNG (Philox-4x32-10). Every variate is a pure function of
// (seed, stream, index), so parallel sampling order cannot change the output.

#include <array>
#include <cmath>
#include <cstdint>

namespace recon {

namespace philox {

inline constexpr uint32_t kMul0 = 0xD2511F53u;
inline constexpr uint32_t kMul1 = 0xCD9E8D57u;
inline constexpr uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr uint32_t kWeyl1 = 0xBB67AE85u;

inline void round_once(std::array<uint32_t, 4>& ctr, uint32_t k0, uint32_t k1) {
    uint64_t p0 = uint64_t(kMul0) * ctr[0];
    uint64_t p1 = uint64_t(kMul1) * ctr[2];
    uint32_t hi0 = uint32_t(p0 >> 32), lo0 = uint32_t(p0);
    uint32_t hi1 = uint32_t(p1 >> 32), lo1 = uint32_t(p1);
    ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
}

// 128-bit counter in, 128 random bits out; 10 rounds.
inline std::array<uint32_t, 4> block(uint64_t key, uint64_t ctr_hi, uint64_t ctr_lo) {
    std::array<uint32_t, 4> c = {uint32_t(ctr_lo), uint32_t(ctr_lo >> 32),
                                 uint32_t(ctr_hi), uint32_t(ctr_hi >> 32)};
    uint32_t k0 = uint32_t(key), k1 = uint32_t(key >> 32);
    for (int r = 0; r < 10; ++r) {
        round_once(c, k0, k1);
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return c;
}

}  // namespace philox

// Uniform in (0,1): 64 bits mapped to the open interval.
inline double bits_to_unit(uint32_t hi, uint32_t lo) {
    uint64_t u = (uint64_t(hi) << 32) | lo;
    return (double(u >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal, deterministic per (seed, stream, index).
inline double normal_at(uint64_t seed, uint64_t stream, uint64_t index) {
    auto b = philox::block(seed, stream, index);
    double u1 = bits_to_unit(b[0], b[1]);
    double u2 = bits_to_unit(b[2], b[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

// Uniform in (0,1), same keying scheme.
inline double uniform_at(uint64_t seed, uint64_t stream, uint64_t index) {
    auto b = philox::block(seed, stream, index);
    return bits_to_unit(b[0], b[1]);
}

}  // namespace recon
