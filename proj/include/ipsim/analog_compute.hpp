#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include "ipsim/noise.hpp"

namespace ipsim {

enum class Fidelity { kIdeal, kAnalog };

enum class SumVariant { kPassive, kOpamp };

struct SumMode {
    SumVariant variant = SumVariant::kOpamp;
    double hold_time = 0.0;  // s, PASSIVE only
};

// Physical and calibration constants of the in-pixel compute circuits.
struct HardwareProfile {
    double V_R = 1.0;        // amplifier reference, V
    double V_sat = 1.0;      // V
    double C_unit = 30e-15;  // per-pixel storage cap, F
    // 10% passive droop in 10 us: tau = -10 us / ln(0.9) ~= 94.91 us.
    double tau_leak = -10e-6 / std::log(0.9);
    double opamp_residual = 0.0;
    int pwm_bits = 8;
    int weight_dac_bits = 8;
    double enob_analog = 6.0;
    std::uint64_t noise_seed = 0;
    bool noise_enabled = true;
    double v_scale = 0.1;  // sigmoid slope, V
    SumMode sum_mode{};

    void validate() const;

    // sigma of the additive multiply noise: V_sat / (2^enob * sqrt(12)).
    double noise_sigma() const;
};

// Charge on one pixel capacitor, expressed as its voltage. Negative values
// come from the reversed charging current of a negative weight.
struct CapCharge {
    double voltage = 0.0;
};

// Quantizes v in [0, v_sat] to 2^bits uniform levels (endpoints exact).
double quantize_pulse_width(double v, double v_sat, int bits);

// Symmetric mid-tread quantizer on [-1, 1] with 2^bits - 1 levels, so zero
// and +-1 are exact.
double quantize_weight(double w, int bits);

// PWM current-modulated multiply. IDEAL returns weight * pixel_v exactly;
// ANALOG quantizes both operands and adds Gaussian noise keyed by `key`.
CapCharge pwm_multiply(double pixel_v, double weight, const HardwareProfile& profile,
                       Fidelity fidelity = Fidelity::kAnalog, const NoiseKey& key = {});

// Droop factor applied to a charge-shared sum under the given mode.
double sum_gain(const SumMode& mode, const HardwareProfile& profile);

// Charge sharing over equal capacitors: mean voltage times the mode's droop.
double charge_share_sum(std::span<const CapCharge> charges, const SumMode& mode,
                        const HardwareProfile& profile);

// Switching k_extra equal, discharged caps onto a charged one.
double quantized_divide(double v, int k_extra);

struct SeriesTerm {
    double voltage = 0.0;
    int sign = +1;
};

double series_combine(std::span<const SeriesTerm> terms);

enum class ActivationKind { kRelu, kSigmoid };

double activation(double v, double bias, ActivationKind kind, const HardwareProfile& profile);

// Nearest signed power of two in the log domain, ties rounded up; zero stays
// zero.
double qth_quantize(double w);

}  // namespace ipsim
