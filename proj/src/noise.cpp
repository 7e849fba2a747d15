#include "ipsim/noise.hpp"

#include <cmath>
#include <numbers>

namespace ipsim {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

Philox4x32::Counter block_for(const NoiseKey& key) {
    const Philox4x32::Key k{static_cast<std::uint32_t>(key.seed),
                            static_cast<std::uint32_t>(key.seed >> 32) ^
                                (static_cast<std::uint32_t>(key.stream) * 0x85EBCA6Bu)};
    return Philox4x32::generate({key.frame, key.patch, key.vector, key.pixel}, k);
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

double uniform01(const NoiseKey& key) {
    const auto block = block_for(key);
    return to_unit(block[0], block[1]);
}

double standard_normal(const NoiseKey& key) {
    const auto block = block_for(key);
    // u1 in (0, 1] keeps the log finite.
    const double u1 = 1.0 - to_unit(block[0], block[1]);
    const double u2 = to_unit(block[2], block[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace ipsim
