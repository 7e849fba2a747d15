#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ipsim/config.hpp"

namespace ipsim {

// CDS pixel voltages for one input image: optional antialias, mosaic,
// global-shutter capture.
AnalogPixelArray sense_frame(const RgbImage& img, const RunConfig& cfg, std::uint32_t frame);

PatchTiling tiling_for(const AnalogPixelArray& arr, const RunConfig& cfg);

// Simulated digital features for one frame (charge dump, projection, ADC).
DigitalFeatureFrame simulate_frame(const AnalogPixelArray& pixels, const PatchTiling& tiling,
                                   const WeightBank& bank, const SelectionMask& mask,
                                   const RunConfig& cfg, std::uint32_t frame);

// Reference features: b_v + sum_i W_iv P_i / N with raw weights in plain
// arithmetic, no circuit model and no quantization.
DigitalFeatureFrame oracle_frame(const AnalogPixelArray& pixels, const PatchTiling& tiling,
                                 const WeightBank& bank, const SelectionMask& mask,
                                 const RunConfig& cfg, std::uint32_t frame);

struct CompareStats {
    std::size_t count = 0;
    double max_abs = 0.0;
    double mean_abs = 0.0;
    double rms = 0.0;
    double enob = 0.0;  // +inf when rms is 0
};

// Throws std::invalid_argument if the frames differ in shape.
CompareStats compare_frames(const DigitalFeatureFrame& a, const DigitalFeatureFrame& b,
                            double full_scale);

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitMismatch = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitInvariant = 3;

// Entry point behind the `ipsim` binary. Diagnostics go to `err` as a single
// line "ipsim: error: <io|usage|invariant|shape>: <message>".
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ipsim
