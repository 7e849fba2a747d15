#include "ipsim/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace ipsim {

using nlohmann::json;

namespace {

// Reads the keys of one JSON section, rejecting any it does not know.
class Section {
public:
    Section(const json& root, const std::string& name) : name_(name) {
        if (root.contains(name)) {
            node_ = &root.at(name);
            if (!node_->is_object()) throw std::invalid_argument("config section '" + name + "' must be an object");
        }
    }
    ~Section() noexcept(false) {
        if (!node_ || std::uncaught_exceptions() > 0) return;
        for (const auto& [key, value] : node_->items()) {
            if (!seen_.contains(key)) throw std::invalid_argument("unknown config key '" + name_ + "." + key + "'");
        }
    }

    template <typename T>
    void get(const std::string& key, T& field) {
        seen_.insert(key);
        if (!node_ || !node_->contains(key)) return;
        try {
            field = node_->at(key).get<T>();
        } catch (const json::exception& e) {
            throw std::invalid_argument("config key '" + name_ + "." + key + "': " + e.what());
        }
    }

    const json* raw(const std::string& key) {
        seen_.insert(key);
        if (!node_ || !node_->contains(key)) return nullptr;
        return &node_->at(key);
    }

private:
    std::string name_;
    const json* node_ = nullptr;
    std::set<std::string> seen_;
};

SumVariant parse_sum_variant(const std::string& s) {
    if (s == "opamp" || s == "OPAMP") return SumVariant::kOpamp;
    if (s == "passive" || s == "PASSIVE") return SumVariant::kPassive;
    throw std::invalid_argument("sum_mode must be 'opamp' or 'passive'");
}

OverlapMode parse_overlap(const std::string& s) {
    if (s == "overlapped") return OverlapMode::kOverlapped;
    if (s == "serial") return OverlapMode::kSerial;
    throw std::invalid_argument("timing.overlap must be 'overlapped' or 'serial'");
}

}  // namespace

Fidelity parse_fidelity(const std::string& s) {
    if (s == "ideal" || s == "IDEAL") return Fidelity::kIdeal;
    if (s == "analog" || s == "ANALOG") return Fidelity::kAnalog;
    throw std::invalid_argument("fidelity must be 'ideal' or 'analog'");
}

const char* to_string(Fidelity f) { return f == Fidelity::kIdeal ? "ideal" : "analog"; }

void RunConfig::validate() const {
    exposure.validate();
    hardware.validate();
    adc.validate();
    timing.validate();
    power.validate();
    area_estimate(area);
    if (hardware.V_sat < exposure.V_sat) {
        throw std::invalid_argument("hardware.V_sat must be >= exposure.V_sat");
    }
    if (!is_supported_patch_size(tiling.patch_w) || !is_supported_patch_size(tiling.patch_h)) {
        throw std::invalid_argument("tiling patch size must be one of 8, 16, 24, 32");
    }
    if (tiling.origin_x % 4 != 0 || tiling.origin_y % 4 != 0 || tiling.origin_x < 0 || tiling.origin_y < 0) {
        throw std::invalid_argument("tiling origin must be a non-negative multiple of 4");
    }
    if (antialias_cutoff && !(*antialias_cutoff > 0.0 && *antialias_cutoff <= 1.0)) {
        throw std::invalid_argument("pipeline.antialias_cutoff must lie in (0, 1]");
    }
    if (!(selection_fraction >= 0.0 && selection_fraction <= 1.0)) {
        throw std::invalid_argument("pipeline.selection_fraction must lie in [0, 1]");
    }
}

RunConfig config_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("config root must be a JSON object");
    static const std::set<std::string> sections{"exposure", "hardware", "adc", "tiling",
                                                "timing",   "power",    "area", "pipeline"};
    for (const auto& [key, value] : j.items()) {
        if (!sections.contains(key)) throw std::invalid_argument("unknown config section '" + key + "'");
    }

    RunConfig cfg;
    {
        Section s(j, "exposure");
        auto& e = cfg.exposure;
        s.get("t_exposure", e.t_exposure);
        s.get("gain", e.gain);
        s.get("V_dark", e.V_dark);
        s.get("V_sat", e.V_sat);
        s.get("fill_factor", e.fill_factor);
        s.get("read_noise_sigma", e.read_noise_sigma);
        s.get("fpn_sigma", e.fpn_sigma);
        if (const json* fp = s.raw("frame_period"); fp && !fp->is_null()) e.frame_period = fp->get<double>();
    }
    {
        Section s(j, "hardware");
        auto& h = cfg.hardware;
        s.get("V_R", h.V_R);
        s.get("V_sat", h.V_sat);
        s.get("C_unit", h.C_unit);
        s.get("tau_leak", h.tau_leak);
        s.get("opamp_residual", h.opamp_residual);
        s.get("pwm_bits", h.pwm_bits);
        s.get("weight_dac_bits", h.weight_dac_bits);
        s.get("enob_analog", h.enob_analog);
        s.get("noise_seed", h.noise_seed);
        s.get("noise_enabled", h.noise_enabled);
        s.get("v_scale", h.v_scale);
        std::string mode;
        s.get("sum_mode", mode);
        if (!mode.empty()) h.sum_mode.variant = parse_sum_variant(mode);
        s.get("hold_time", h.sum_mode.hold_time);
    }
    {
        Section s(j, "adc");
        s.get("bits", cfg.adc.bits);
        s.get("v_lo", cfg.adc.v_lo);
        s.get("v_hi", cfg.adc.v_hi);
    }
    {
        Section s(j, "tiling");
        auto& t = cfg.tiling;
        s.get("patch_w", t.patch_w);
        s.get("patch_h", t.patch_h);
        s.get("origin_x", t.origin_x);
        s.get("origin_y", t.origin_y);
        if (const json* offs = s.raw("vector_offsets")) {
            for (const auto& o : *offs) {
                if (!o.is_array() || o.size() != 2) throw std::invalid_argument("vector_offsets entries must be [dx, dy]");
                t.vector_offsets.push_back({o[0].get<int>(), o[1].get<int>()});
            }
        }
    }
    {
        Section s(j, "timing");
        auto& t = cfg.timing;
        s.get("sensor_w", t.sensor_w);
        s.get("sensor_h", t.sensor_h);
        s.get("patch_w", t.patch_w);
        s.get("patch_h", t.patch_h);
        s.get("M", t.M);
        s.get("C", t.C);
        s.get("t_dac", t.t_dac);
        s.get("t_pwm", t.t_pwm);
        s.get("t_exposure", t.t_exposure);
        s.get("n_adc", t.n_adc);
        s.get("f_adc", t.f_adc);
        s.get("active_fraction", t.active_fraction);
        std::string overlap;
        s.get("overlap", overlap);
        if (!overlap.empty()) t.overlap = parse_overlap(overlap);
    }
    {
        Section s(j, "power");
        auto& p = cfg.power;
        s.get("E_adc", p.E_adc);
        s.get("E_dac", p.E_dac);
        s.get("C_unit", p.C_unit);
        s.get("V_drive", p.V_drive);
        s.get("P_opamp", p.P_opamp);
        s.get("P_misc", p.P_misc);
        s.get("frame_rate_hz", p.frame_rate_hz);
    }
    if (j.contains("area")) {
        const auto& rows = j.at("area");
        if (!rows.is_array()) throw std::invalid_argument("area must be an array of rows");
        cfg.area.clear();
        for (const auto& r : rows) {
            for (const auto& [key, value] : r.items()) {
                if (key != "name" && key != "count" && key != "unit_area_um2") {
                    throw std::invalid_argument("unknown area row key '" + key + "'");
                }
            }
            cfg.area.push_back({r.value("name", std::string{}), r.at("count").get<double>(),
                                r.at("unit_area_um2").get<double>()});
        }
    }
    {
        Section s(j, "pipeline");
        std::string pattern, fidelity, format;
        s.get("pattern", pattern);
        if (!pattern.empty()) cfg.pattern = parse_bayer_pattern(pattern);
        if (const json* c = s.raw("antialias_cutoff"); c && !c->is_null()) cfg.antialias_cutoff = c->get<double>();
        s.get("fidelity", fidelity);
        if (!fidelity.empty()) cfg.fidelity = parse_fidelity(fidelity);
        s.get("selection_fraction", cfg.selection_fraction);
        s.get("raw_codes", cfg.raw_codes);
        s.get("format", format);
        if (format == "csv") {
            cfg.format = FeatureFormat::kCsv;
        } else if (!format.empty() && format != "bin") {
            throw std::invalid_argument("pipeline.format must be 'bin' or 'csv'");
        }
        s.get("threads", cfg.threads);
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config " + path.string() + ": " + e.what());
    }
    RunConfig cfg;
    try {
        cfg = config_from_json(j);
    } catch (const json::exception& e) {
        throw std::invalid_argument("config " + path.string() + ": " + e.what());
    }
    return cfg;
}

json config_to_json(const RunConfig& c) {
    json offsets = json::array();
    for (const auto& o : c.tiling.vector_offsets) offsets.push_back({o.dx, o.dy});
    json area = json::array();
    for (const auto& r : c.area) area.push_back({{"name", r.name}, {"count", r.count}, {"unit_area_um2", r.unit_area_um2}});
    const auto& e = c.exposure;
    const auto& h = c.hardware;
    const auto& t = c.timing;
    const auto& p = c.power;
    return {
        {"exposure",
         {{"t_exposure", e.t_exposure}, {"gain", e.gain}, {"V_dark", e.V_dark}, {"V_sat", e.V_sat},
          {"fill_factor", e.fill_factor}, {"read_noise_sigma", e.read_noise_sigma}, {"fpn_sigma", e.fpn_sigma},
          {"frame_period", e.frame_period ? json(*e.frame_period) : json(nullptr)}}},
        {"hardware",
         {{"V_R", h.V_R}, {"V_sat", h.V_sat}, {"C_unit", h.C_unit}, {"tau_leak", h.tau_leak},
          {"opamp_residual", h.opamp_residual}, {"pwm_bits", h.pwm_bits}, {"weight_dac_bits", h.weight_dac_bits},
          {"enob_analog", h.enob_analog}, {"noise_seed", h.noise_seed}, {"noise_enabled", h.noise_enabled},
          {"v_scale", h.v_scale}, {"sum_mode", h.sum_mode.variant == SumVariant::kOpamp ? "opamp" : "passive"},
          {"hold_time", h.sum_mode.hold_time}}},
        {"adc", {{"bits", c.adc.bits}, {"v_lo", c.adc.v_lo}, {"v_hi", c.adc.v_hi}}},
        {"tiling",
         {{"patch_w", c.tiling.patch_w}, {"patch_h", c.tiling.patch_h}, {"origin_x", c.tiling.origin_x},
          {"origin_y", c.tiling.origin_y}, {"vector_offsets", offsets}}},
        {"timing",
         {{"sensor_w", t.sensor_w}, {"sensor_h", t.sensor_h}, {"patch_w", t.patch_w}, {"patch_h", t.patch_h},
          {"M", t.M}, {"C", t.C}, {"t_dac", t.t_dac}, {"t_pwm", t.t_pwm}, {"t_exposure", t.t_exposure},
          {"n_adc", t.n_adc}, {"f_adc", t.f_adc}, {"active_fraction", t.active_fraction},
          {"overlap", t.overlap == OverlapMode::kOverlapped ? "overlapped" : "serial"}}},
        {"power",
         {{"E_adc", p.E_adc}, {"E_dac", p.E_dac}, {"C_unit", p.C_unit}, {"V_drive", p.V_drive},
          {"P_opamp", p.P_opamp}, {"P_misc", p.P_misc}, {"frame_rate_hz", p.frame_rate_hz}}},
        {"area", area},
        {"pipeline",
         {{"pattern", to_string(c.pattern)},
          {"antialias_cutoff", c.antialias_cutoff ? json(*c.antialias_cutoff) : json(nullptr)},
          {"fidelity", to_string(c.fidelity)}, {"selection_fraction", c.selection_fraction},
          {"raw_codes", c.raw_codes}, {"format", c.format == FeatureFormat::kCsv ? "csv" : "bin"},
          {"threads", c.threads}}},
    };
}

}  // namespace ipsim
