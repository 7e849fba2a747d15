#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace ipsim {

enum class OverlapMode {
    kOverlapped,  // frame = max(compute, readout, exposure)
    kSerial,      // frame = max(compute + readout, exposure)
};

struct TimingConfig {
    int sensor_w = 1920;
    int sensor_h = 1080;
    int patch_w = 32;
    int patch_h = 32;
    int M = 400;
    int C = 2;               // weight lines per pixel column
    double t_dac = 1.0e-6;   // s per weight-programming step
    double t_pwm = 0.7e-6;   // s per PWM integration
    double t_exposure = 1e-3;
    int n_adc = 1920;
    double f_adc = 1e6;      // conversions/s per ADC
    double active_fraction = 0.25;
    OverlapMode overlap = OverlapMode::kOverlapped;

    void validate() const;
    long long patch_count() const;
};

struct TimingBreakdown {
    double compute_s = 0.0;
    double readout_s = 0.0;
    double exposure_s = 0.0;
    double frame_s = 0.0;
};

// Weights are broadcast on column lines, so every patch computes
// concurrently: compute = M * ceil(patch_h / C) * (t_dac + t_pwm).
TimingBreakdown timing_breakdown(const TimingConfig& cfg);
double frame_time(const TimingConfig& cfg);

struct Throughput {
    double frame_rate_hz = 0.0;
    double mpix_per_s = 0.0;
};

Throughput throughput(const TimingConfig& cfg);

struct PowerConfig {
    double E_adc = 5e-9;      // J per conversion
    double E_dac = 1e-12;     // J per weight-line write
    double C_unit = 30e-15;   // F
    double V_drive = 1.0;     // V
    double P_opamp = 0.5e-6;  // W static per patch amplifier
    double P_misc = 5e-3;     // W
    double frame_rate_hz = 30.0;  // operating rate; 0 uses the timing model's maximum

    void validate() const;
};

struct PowerBreakdown {
    double frame_rate_hz = 0.0;
    double adc_mw = 0.0;
    double dac_mw = 0.0;
    double analog_mw = 0.0;
    double opamp_mw = 0.0;
    double misc_mw = 0.0;
    double total_mw = 0.0;
};

PowerBreakdown power_estimate(const TimingConfig& tcfg, const PowerConfig& pcfg);

struct AreaRow {
    std::string name;
    double count = 0.0;
    double unit_area_um2 = 0.0;
};

using AreaTable = std::vector<AreaRow>;

// 65 nm per-pixel budget: photo sensor, three 30 fF caps, 41 transistors,
// wiring and margin.
AreaTable default_area_table();

struct AreaReport {
    double total_um2 = 0.0;
    double pitch_um = 0.0;
    std::vector<double> occupancy;  // fraction per row
};

AreaReport area_estimate(const AreaTable& table);

struct DataReduction {
    double vs_bayer = 0.0;
    double vs_rgb = 0.0;
};

DataReduction data_reduction(int patch_w, int patch_h, int M, double active_fraction);

struct PerfReport {
    TimingBreakdown timing;
    Throughput rate;
    PowerBreakdown power;
    AreaReport area;
    AreaTable area_table;
    DataReduction reduction;
    double sensor_mpix = 0.0;
};

PerfReport make_report(const TimingConfig& tcfg, const PowerConfig& pcfg, const AreaTable& table);
nlohmann::json report_json(const PerfReport& report);
std::string report_text(const PerfReport& report);

}  // namespace ipsim
