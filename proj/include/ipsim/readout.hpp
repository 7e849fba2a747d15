#pragma once

#include <cstdint>
#include <vector>

#include "ipsim/analog_compute.hpp"
#include "ipsim/patch_engine.hpp"

namespace ipsim {

struct AdcConfig {
    int bits = 8;
    double v_lo = 0.0;  // V
    double v_hi = 2.0;  // V; default [0, 2 V_R] puts V_R mid-scale

    void validate() const;
    std::uint32_t max_code() const { return static_cast<std::uint32_t>((1ull << bits) - 1); }
    double lsb() const { return (v_hi - v_lo) / static_cast<double>(max_code()); }
};

// round-half-up of the clamped input onto [0, 2^bits - 1].
std::uint32_t adc_convert(double v, const AdcConfig& cfg);

double dequantize(std::uint32_t code, const AdcConfig& cfg);

// b_v + scale * (dequantize(code) - V_R).
double digital_out(std::uint32_t code, const AdcConfig& cfg, double V_R, double b_v, double scale);

struct DigitalPatch {
    std::uint32_t patch = 0;
    std::vector<double> features;
};

struct DigitalFeatureFrame {
    std::uint32_t frame = 0;
    std::size_t vectors = 0;
    std::vector<DigitalPatch> entries;

    std::size_t feature_count() const { return entries.size() * vectors; }
};

enum class ReadoutMode {
    kIdealAdc,  // no conversion error; features are exact b + scale * swing
    kQuantized, // adc_convert + digital_out
    kRawCodes,  // ADC codes as values
};

DigitalFeatureFrame assemble_features(const AnalogFeatureFrame& analog, const AdcConfig& cfg,
                                      const WeightBank& bank, const HardwareProfile& profile,
                                      ReadoutMode mode = ReadoutMode::kQuantized);

}  // namespace ipsim
