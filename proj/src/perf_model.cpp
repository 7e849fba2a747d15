#include "ipsim/perf_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace ipsim {

void TimingConfig::validate() const {
    if (C != 1 && C != 2 && C != 4 && C != 8) {
        throw std::invalid_argument("weight lines per column C must be 1, 2, 4 or 8");
    }
    if (sensor_w < 1 || sensor_h < 1 || patch_w < 1 || patch_h < 1 || M < 1 || n_adc < 1) {
        throw std::invalid_argument("timing dimensions and counts must be >= 1");
    }
    if (patch_w > sensor_w || patch_h > sensor_h) throw std::invalid_argument("patch larger than sensor");
    if (!(t_dac > 0.0 && t_pwm > 0.0 && t_exposure > 0.0 && f_adc > 0.0)) {
        throw std::invalid_argument("timing constants must be > 0");
    }
    if (!(active_fraction >= 0.0 && active_fraction <= 1.0)) {
        throw std::invalid_argument("active_fraction must lie in [0, 1]");
    }
}

long long TimingConfig::patch_count() const {
    return static_cast<long long>(sensor_w / patch_w) * (sensor_h / patch_h);
}

TimingBreakdown timing_breakdown(const TimingConfig& cfg) {
    cfg.validate();
    TimingBreakdown t;
    const int steps = (cfg.patch_h + cfg.C - 1) / cfg.C;
    t.compute_s = static_cast<double>(cfg.M) * steps * (cfg.t_dac + cfg.t_pwm);
    const double conversions = static_cast<double>(cfg.patch_count()) * cfg.active_fraction * cfg.M;
    t.readout_s = conversions / (cfg.n_adc * cfg.f_adc);
    t.exposure_s = cfg.t_exposure;
    // Exposure of the next frame runs while this one is processed.
    t.frame_s = cfg.overlap == OverlapMode::kOverlapped
                    ? std::max({t.compute_s, t.readout_s, t.exposure_s})
                    : std::max(t.compute_s + t.readout_s, t.exposure_s);
    return t;
}

double frame_time(const TimingConfig& cfg) { return timing_breakdown(cfg).frame_s; }

Throughput throughput(const TimingConfig& cfg) {
    Throughput r;
    r.frame_rate_hz = 1.0 / frame_time(cfg);
    r.mpix_per_s = static_cast<double>(cfg.sensor_w) * cfg.sensor_h * r.frame_rate_hz / 1e6;
    return r;
}

void PowerConfig::validate() const {
    if (E_adc < 0 || E_dac < 0 || C_unit < 0 || V_drive < 0 || P_opamp < 0 || P_misc < 0 ||
        frame_rate_hz < 0) {
        throw std::invalid_argument("power constants must be >= 0");
    }
}

PowerBreakdown power_estimate(const TimingConfig& tcfg, const PowerConfig& pcfg) {
    tcfg.validate();
    pcfg.validate();
    PowerBreakdown p;
    p.frame_rate_hz = pcfg.frame_rate_hz > 0.0 ? pcfg.frame_rate_hz : throughput(tcfg).frame_rate_hz;
    const double fr = p.frame_rate_hz;
    const auto patches = static_cast<double>(tcfg.patch_count());
    const double conversions = patches * tcfg.active_fraction * tcfg.M;
    const double writes = static_cast<double>(tcfg.M) * tcfg.patch_h * tcfg.sensor_w;
    const double active_pixels =
        patches * tcfg.active_fraction * static_cast<double>(tcfg.patch_w) * tcfg.patch_h;
    const double cap_energy = 0.5 * pcfg.C_unit * pcfg.V_drive * pcfg.V_drive;

    p.adc_mw = conversions * fr * pcfg.E_adc * 1e3;
    p.dac_mw = writes * fr * pcfg.E_dac * 1e3;
    p.analog_mw = active_pixels * tcfg.M * cap_energy * fr * 1e3;
    p.opamp_mw = patches * pcfg.P_opamp * 1e3;
    p.misc_mw = pcfg.P_misc * 1e3;
    p.total_mw = p.adc_mw + p.dac_mw + p.analog_mw + p.opamp_mw + p.misc_mw;
    return p;
}

AreaTable default_area_table() {
    return {
        {"Photo Sensor", 1, 64},
        {"Cap 30 fF", 3, 64},
        {"Transistors", 41, 5},
        {"Wiring", 1, 16},
        {"Margin", 1, 8},
    };
}

AreaReport area_estimate(const AreaTable& table) {
    if (table.empty()) throw std::invalid_argument("area table is empty");
    AreaReport r;
    for (const auto& row : table) {
        if (row.count < 0 || !(row.unit_area_um2 > 0)) {
            throw std::invalid_argument("area row '" + row.name + "' needs count >= 0 and area > 0");
        }
        r.total_um2 += row.count * row.unit_area_um2;
    }
    if (!(r.total_um2 > 0)) throw std::invalid_argument("area table sums to zero");
    r.pitch_um = std::sqrt(r.total_um2);
    for (const auto& row : table) r.occupancy.push_back(row.count * row.unit_area_um2 / r.total_um2);
    return r;
}

DataReduction data_reduction(int patch_w, int patch_h, int M, double active_fraction) {
    if (patch_w < 1 || patch_h < 1 || M < 1 || !(active_fraction > 0.0)) {
        throw std::invalid_argument("data_reduction needs positive arguments");
    }
    DataReduction d;
    d.vs_bayer = static_cast<double>(patch_w) * patch_h / (M * active_fraction);
    d.vs_rgb = 3.0 * d.vs_bayer;
    return d;
}

PerfReport make_report(const TimingConfig& tcfg, const PowerConfig& pcfg, const AreaTable& table) {
    PerfReport r;
    r.timing = timing_breakdown(tcfg);
    r.rate = throughput(tcfg);
    r.power = power_estimate(tcfg, pcfg);
    r.area = area_estimate(table);
    r.area_table = table;
    r.reduction = data_reduction(tcfg.patch_w, tcfg.patch_h, tcfg.M, tcfg.active_fraction);
    r.sensor_mpix = static_cast<double>(tcfg.sensor_w) * tcfg.sensor_h / 1e6;
    return r;
}

nlohmann::json report_json(const PerfReport& r) {
    nlohmann::json occupancy = nlohmann::json::object();
    for (std::size_t i = 0; i < r.area_table.size(); ++i) occupancy[r.area_table[i].name] = r.area.occupancy[i];
    return {
        {"frame_time_s", r.timing.frame_s},
        {"frame_rate_hz", r.rate.frame_rate_hz},
        {"mpix_per_s", r.rate.mpix_per_s},
        {"compute_time_s", r.timing.compute_s},
        {"readout_time_s", r.timing.readout_s},
        {"power_frame_rate_hz", r.power.frame_rate_hz},
        {"power_mw",
         {{"adc", r.power.adc_mw},
          {"dac", r.power.dac_mw},
          {"analog", r.power.analog_mw},
          {"opamp", r.power.opamp_mw},
          {"misc", r.power.misc_mw},
          {"total", r.power.total_mw}}},
        {"power_mw_per_mpix", r.power.total_mw / r.sensor_mpix},
        {"area_um2", r.area.total_um2},
        {"occupancy", occupancy},
        {"pitch_um", r.area.pitch_um},
        {"reduction", {{"bayer", r.reduction.vs_bayer}, {"rgb", r.reduction.vs_rgb}}},
    };
}

std::string report_text(const PerfReport& r) {
    std::ostringstream os;
    char line[160];
    auto put = [&](const char* fmt, auto... args) {
        std::snprintf(line, sizeof line, fmt, args...);
        os << line << '\n';
    };
    os << "timing\n";
    put("  compute time      %10.4f ms", r.timing.compute_s * 1e3);
    put("  readout time      %10.4f ms", r.timing.readout_s * 1e3);
    put("  exposure          %10.4f ms", r.timing.exposure_s * 1e3);
    put("  frame time        %10.4f ms", r.timing.frame_s * 1e3);
    put("  frame rate        %10.2f Hz", r.rate.frame_rate_hz);
    put("  pixel throughput  %10.2f Mpix/s", r.rate.mpix_per_s);
    put("power @ %.2f Hz", r.power.frame_rate_hz);
    put("  adc               %10.3f mW", r.power.adc_mw);
    put("  dac               %10.3f mW", r.power.dac_mw);
    put("  analog            %10.3f mW", r.power.analog_mw);
    put("  opamp             %10.3f mW", r.power.opamp_mw);
    put("  misc              %10.3f mW", r.power.misc_mw);
    put("  total             %10.3f mW (%.2f mW/Mpix)", r.power.total_mw, r.power.total_mw / r.sensor_mpix);
    os << "area per pixel\n";
    for (std::size_t i = 0; i < r.area_table.size(); ++i) {
        const auto& row = r.area_table[i];
        put("  %-16s %5g x %7.2f um2 = %8.2f um2  %5.1f%%", row.name.c_str(), row.count,
            row.unit_area_um2, row.count * row.unit_area_um2, 100.0 * r.area.occupancy[i]);
    }
    put("  total             %10.2f um2", r.area.total_um2);
    put("  pixel pitch       %10.2f um", r.area.pitch_um);
    os << "data reduction\n";
    put("  vs bayer          %10.2f x", r.reduction.vs_bayer);
    put("  vs rgb            %10.2f x", r.reduction.vs_rgb);
    return os.str();
}

}  // namespace ipsim
