#pragma once

#include <array>
#include <cstdint>

namespace ipsim {

// Philox4x32-10 counter-based generator. Every random draw in the simulator is
// a pure function of (seed, stream, counter), so results never depend on the
// order in which patches or pixels are evaluated.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter counter, Key key);
};

// Independent noise streams sharing one seed.
enum class NoiseStream : std::uint32_t {
    kMultiply = 0,
    kReadSignal = 1,
    kReadReset = 2,
    kFixedPattern = 3,
    kSynthetic = 4,
};

// Identifies one noise sample: (seed, frame, patch, vector, pixel).
struct NoiseKey {
    std::uint64_t seed = 0;
    std::uint32_t frame = 0;
    std::uint32_t patch = 0;
    std::uint32_t vector = 0;
    std::uint32_t pixel = 0;
    NoiseStream stream = NoiseStream::kMultiply;
};

// Uniform in [0, 1) with 53 random bits.
double uniform01(const NoiseKey& key);

// Standard normal deviate (Box-Muller on one Philox block).
double standard_normal(const NoiseKey& key);

}  // namespace ipsim
