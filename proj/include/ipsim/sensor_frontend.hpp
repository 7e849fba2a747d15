#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ipsim/tiling.hpp"

namespace ipsim {

// Normalized irradiance, interleaved r,g,b per pixel, row-major.
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int width, int height, double fill = 0.0);

    int width() const { return width_; }
    int height() const { return height_; }
    double& at(int x, int y, int c) { return data_[index(x, y, c)]; }
    double at(int x, int y, int c) const { return data_[index(x, y, c)]; }
    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    // Throws std::invalid_argument if any channel value lies outside [0, 1].
    void validate() const;

private:
    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * 3 + c;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

enum class BayerPattern { kRGGB, kBGGR, kGRBG, kGBRG, kMono };

// Channel (0=R, 1=G, 2=B) sampled at (x, y). MONO samples green.
int bayer_channel(BayerPattern pattern, int x, int y);
BayerPattern parse_bayer_pattern(const std::string& name);
const char* to_string(BayerPattern pattern);

struct BayerFrame {
    int width = 0;
    int height = 0;
    BayerPattern pattern = BayerPattern::kRGGB;
    std::vector<double> data;  // one sample per pixel, row-major

    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

struct AnalogPixelArray {
    int width = 0;
    int height = 0;
    double v_sat = 1.0;
    std::vector<double> voltages;
    std::vector<std::uint8_t> valid;

    AnalogPixelArray() = default;
    AnalogPixelArray(int w, int h, double vsat, double fill = 0.0);

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
    double& at(int x, int y) { return voltages[index(x, y)]; }
    double at(int x, int y) const { return voltages[index(x, y)]; }
    bool is_valid(int x, int y) const { return valid[index(x, y)] != 0; }
};

struct ExposureConfig {
    double t_exposure = 1e-3;   // s
    double gain = 1000.0;       // V / (irradiance * s)
    double V_dark = 0.0;        // V
    double V_sat = 1.0;         // V
    double fill_factor = 1.0;
    std::optional<double> frame_period;  // s; bounds t_exposure when set
    double read_noise_sigma = 0.0;       // V, 0 disables
    double fpn_sigma = 0.0;              // V, per-pixel fixed-pattern offset, 0 disables

    void validate() const;
};

// Isotropic Gaussian lowpass with |H| = 2^-1/2 at cutoff_fraction * 0.5
// cycles/pixel, applied per channel with mirror (reflect-101) borders.
RgbImage gaussian_antialias(const RgbImage& img, double cutoff_fraction);

// Spatial sigma (pixels) of the discrete, +-4 sigma truncated, unit-sum kernel
// whose response at the cutoff is exactly 2^-1/2.
double antialias_sigma(double cutoff_fraction);
std::vector<double> antialias_kernel(double cutoff_fraction);

BayerFrame mosaic_bayer(const RgbImage& img, BayerPattern pattern);

struct ExposureNoise {
    std::uint64_t seed = 0;
    std::uint32_t frame = 0;
    bool reset_sample = false;
};

// Global-shutter exposure: every pixel integrates over the same window.
AnalogPixelArray expose(const BayerFrame& frame, const ExposureConfig& cfg,
                        const ExposureNoise& noise = {});

// Reset-level sample (zero irradiance) matching expose().
AnalogPixelArray reset_level(int width, int height, const ExposureConfig& cfg,
                             const ExposureNoise& noise = {});

AnalogPixelArray cds_sample(const AnalogPixelArray& signal, const AnalogPixelArray& reset);

// Clears every pixel of each deselected patch.
AnalogPixelArray charge_dump(const AnalogPixelArray& arr, const PatchTiling& tiling,
                             const SelectionMask& selection);

// Full capture chain: expose signal and reset with shared fixed-pattern
// offsets, then CDS.
AnalogPixelArray capture(const BayerFrame& frame, const ExposureConfig& cfg, std::uint64_t seed,
                         std::uint32_t frame_index);

}  // namespace ipsim
