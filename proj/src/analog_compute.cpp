#include "ipsim/analog_compute.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ipsim {

void HardwareProfile::validate() const {
    if (!(V_R > 0.0 && V_sat > 0.0 && C_unit > 0.0 && tau_leak > 0.0 && v_scale > 0.0)) {
        throw std::invalid_argument("hardware profile constants must be > 0");
    }
    if (!(enob_analog > 0.0)) throw std::invalid_argument("enob_analog must be > 0");
    if (pwm_bits < 1 || weight_dac_bits < 1 || pwm_bits > 52 || weight_dac_bits > 52) {
        throw std::invalid_argument("quantizer bit widths must lie in [1, 52]");
    }
    if (!(opamp_residual >= 0.0 && opamp_residual < 1.0)) {
        throw std::invalid_argument("opamp_residual must lie in [0, 1)");
    }
    if (!(sum_mode.hold_time >= 0.0)) throw std::invalid_argument("hold_time must be >= 0");
}

double HardwareProfile::noise_sigma() const {
    return V_sat / (std::exp2(enob_analog) * std::sqrt(12.0));
}

double quantize_pulse_width(double v, double v_sat, int bits) {
    const double steps = std::exp2(bits) - 1.0;
    return std::round(std::clamp(v / v_sat, 0.0, 1.0) * steps) / steps * v_sat;
}

double quantize_weight(double w, int bits) {
    const double half = std::max(1.0, std::exp2(bits - 1) - 1.0);
    return std::round(std::clamp(w, -1.0, 1.0) * half) / half;
}

CapCharge pwm_multiply(double pixel_v, double weight, const HardwareProfile& profile,
                       Fidelity fidelity, const NoiseKey& key) {
    if (!(pixel_v >= 0.0 && pixel_v <= profile.V_sat)) {
        throw std::invalid_argument("pixel voltage outside [0, V_sat]");
    }
    if (fidelity == Fidelity::kIdeal) return {weight * pixel_v};
    if (!(std::abs(weight) <= 1.0)) throw std::invalid_argument("|weight| must be <= 1");

    double v = quantize_weight(weight, profile.weight_dac_bits) *
               quantize_pulse_width(pixel_v, profile.V_sat, profile.pwm_bits);
    if (profile.noise_enabled) v += profile.noise_sigma() * standard_normal(key);
    return {std::clamp(v, -profile.V_sat, profile.V_sat)};
}

double sum_gain(const SumMode& mode, const HardwareProfile& profile) {
    if (mode.variant == SumVariant::kPassive) {
        if (!(mode.hold_time >= 0.0)) throw std::invalid_argument("hold_time must be >= 0");
        return std::exp(-mode.hold_time / profile.tau_leak);
    }
    return 1.0 - profile.opamp_residual;
}

double charge_share_sum(std::span<const CapCharge> charges, const SumMode& mode,
                        const HardwareProfile& profile) {
    if (charges.empty()) throw std::invalid_argument("charge_share_sum needs at least one capacitor");
    double total = 0.0;
    for (const auto& c : charges) total += c.voltage;
    return total / static_cast<double>(charges.size()) * sum_gain(mode, profile);
}

double quantized_divide(double v, int k_extra) {
    if (k_extra < 0) throw std::invalid_argument("k_extra must be >= 0");
    return v / (1.0 + k_extra);
}

double series_combine(std::span<const SeriesTerm> terms) {
    if (terms.empty()) throw std::invalid_argument("series_combine needs at least one term");
    double total = 0.0;
    for (const auto& t : terms) {
        if (t.sign != 1 && t.sign != -1) throw std::invalid_argument("series term sign must be +-1");
        total += t.sign * t.voltage;
    }
    return total;
}

double activation(double v, double bias, ActivationKind kind, const HardwareProfile& profile) {
    if (kind == ActivationKind::kRelu) return std::max(0.0, v - bias);
    return profile.V_sat / (1.0 + std::exp(-(v - bias) / profile.v_scale));
}

double qth_quantize(double w) {
    if (w == 0.0 || !std::isfinite(w)) return w;
    int exponent = 0;
    const double mantissa = std::frexp(std::abs(w), &exponent);  // |w| = m * 2^e, m in [0.5, 1)
    // log2|w| = e + log2(m) rounds up to e iff log2(m) >= -1/2, i.e. m >= 2^-1/2.
    if (mantissa < std::numbers::sqrt2 / 2.0) --exponent;
    return std::copysign(std::ldexp(1.0, exponent), w);
}

}  // namespace ipsim
