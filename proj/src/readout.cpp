#include "ipsim/readout.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ipsim {

void AdcConfig::validate() const {
    if (bits < 1 || bits > 31) throw std::invalid_argument("ADC bits must lie in [1, 31]");
    if (!(v_lo < v_hi)) throw std::invalid_argument("ADC range needs v_lo < v_hi");
}

std::uint32_t adc_convert(double v, const AdcConfig& cfg) {
    cfg.validate();
    const double x = (std::clamp(v, cfg.v_lo, cfg.v_hi) - cfg.v_lo) / (cfg.v_hi - cfg.v_lo);
    const double code = std::floor(x * static_cast<double>(cfg.max_code()) + 0.5);
    return static_cast<std::uint32_t>(std::min(code, static_cast<double>(cfg.max_code())));
}

double dequantize(std::uint32_t code, const AdcConfig& cfg) {
    return cfg.v_lo + static_cast<double>(code) * cfg.lsb();
}

double digital_out(std::uint32_t code, const AdcConfig& cfg, double V_R, double b_v, double scale) {
    cfg.validate();
    if (code > cfg.max_code()) {
        throw std::invalid_argument("ADC code " + std::to_string(code) + " exceeds " +
                                    std::to_string(cfg.max_code()));
    }
    return b_v + scale * (dequantize(code, cfg) - V_R);
}

DigitalFeatureFrame assemble_features(const AnalogFeatureFrame& analog, const AdcConfig& cfg,
                                      const WeightBank& bank, const HardwareProfile& profile,
                                      ReadoutMode mode) {
    cfg.validate();
    if (analog.vectors != bank.vectors()) {
        throw std::invalid_argument("feature frame and weight bank disagree on M");
    }
    DigitalFeatureFrame out;
    out.frame = analog.frame;
    out.vectors = analog.vectors;
    out.entries.reserve(analog.entries.size());
    for (std::size_t e = 0; e < analog.entries.size(); ++e) {
        const auto& entry = analog.entries[e];
        if (entry.swing.size() != analog.vectors) throw std::invalid_argument("ragged feature frame");
        DigitalPatch dp{entry.patch, std::vector<double>(analog.vectors)};
        for (std::size_t v = 0; v < analog.vectors; ++v) {
            switch (mode) {
                case ReadoutMode::kIdealAdc:
                    dp.features[v] = entry.swing[v] * bank.scale() + bank.bias(v);
                    break;
                case ReadoutMode::kQuantized:
                    dp.features[v] = digital_out(adc_convert(analog.out_v(e, v), cfg), cfg,
                                                 profile.V_R, bank.bias(v), bank.scale());
                    break;
                case ReadoutMode::kRawCodes:
                    dp.features[v] = adc_convert(analog.out_v(e, v), cfg);
                    break;
            }
        }
        out.entries.push_back(std::move(dp));
    }
    return out;
}

}  // namespace ipsim
