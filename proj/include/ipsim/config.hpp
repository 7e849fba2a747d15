#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ipsim/analog_compute.hpp"
#include "ipsim/io.hpp"
#include "ipsim/patch_engine.hpp"
#include "ipsim/perf_model.hpp"
#include "ipsim/readout.hpp"
#include "ipsim/sensor_frontend.hpp"

namespace ipsim {

struct TilingParams {
    int patch_w = 32;
    int patch_h = 32;
    int origin_x = 0;
    int origin_y = 0;
    std::vector<VectorOffset> vector_offsets;
};

// Everything a run needs. JSON sections mirror the struct names:
//   exposure, hardware, adc, tiling, timing, power, area, pipeline.
struct RunConfig {
    ExposureConfig exposure;
    HardwareProfile hardware;
    AdcConfig adc;
    TilingParams tiling;
    TimingConfig timing;
    PowerConfig power;
    AreaTable area = default_area_table();

    BayerPattern pattern = BayerPattern::kRGGB;
    std::optional<double> antialias_cutoff;
    Fidelity fidelity = Fidelity::kAnalog;
    double selection_fraction = 0.25;  // variance fallback when no mask is given
    bool raw_codes = false;
    FeatureFormat format = FeatureFormat::kBinary;
    unsigned threads = 0;  // 0: IPSIM_THREADS or hardware concurrency

    // Throws std::invalid_argument on any violated invariant.
    void validate() const;
};

// Unknown keys are rejected. Missing keys keep their defaults.
RunConfig config_from_json(const nlohmann::json& j);
// Throws IoError if unreadable, std::invalid_argument if malformed.
RunConfig load_config(const std::filesystem::path& path);
// Every effective value, defaults included.
nlohmann::json config_to_json(const RunConfig& cfg);

Fidelity parse_fidelity(const std::string& s);
const char* to_string(Fidelity f);

}  // namespace ipsim
