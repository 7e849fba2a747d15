#include "ipsim/sensor_frontend.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ipsim/noise.hpp"

namespace ipsim {

RgbImage::RgbImage(int width, int height, double fill) : width_(width), height_(height) {
    if (width < 1 || height < 1) throw std::invalid_argument("image dimensions must be >= 1");
    data_.assign(static_cast<std::size_t>(width) * height * 3, fill);
}

void RgbImage::validate() const {
    if (width_ < 1 || height_ < 1) throw std::invalid_argument("image is empty");
    for (double v : data_) {
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("irradiance outside [0, 1]");
    }
}

int bayer_channel(BayerPattern pattern, int x, int y) {
    const int pos = ((y & 1) << 1) | (x & 1);
    switch (pattern) {
        case BayerPattern::kRGGB: return std::array{0, 1, 1, 2}[pos];
        case BayerPattern::kBGGR: return std::array{2, 1, 1, 0}[pos];
        case BayerPattern::kGRBG: return std::array{1, 0, 2, 1}[pos];
        case BayerPattern::kGBRG: return std::array{1, 2, 0, 1}[pos];
        case BayerPattern::kMono: return 1;
    }
    throw std::invalid_argument("unknown Bayer pattern");
}

BayerPattern parse_bayer_pattern(const std::string& name) {
    std::string up = name;
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
    if (up == "RGGB") return BayerPattern::kRGGB;
    if (up == "BGGR") return BayerPattern::kBGGR;
    if (up == "GRBG") return BayerPattern::kGRBG;
    if (up == "GBRG") return BayerPattern::kGBRG;
    if (up == "MONO") return BayerPattern::kMono;
    throw std::invalid_argument("unknown Bayer pattern '" + name + "'");
}

const char* to_string(BayerPattern pattern) {
    switch (pattern) {
        case BayerPattern::kRGGB: return "RGGB";
        case BayerPattern::kBGGR: return "BGGR";
        case BayerPattern::kGRBG: return "GRBG";
        case BayerPattern::kGBRG: return "GBRG";
        case BayerPattern::kMono: return "MONO";
    }
    return "?";
}

AnalogPixelArray::AnalogPixelArray(int w, int h, double vsat, double fill)
    : width(w), height(h), v_sat(vsat),
      voltages(static_cast<std::size_t>(w) * h, fill),
      valid(static_cast<std::size_t>(w) * h, 1) {}

void ExposureConfig::validate() const {
    if (!(t_exposure > 0.0)) throw std::invalid_argument("t_exposure must be > 0");
    if (frame_period && t_exposure > *frame_period) {
        throw std::invalid_argument("t_exposure exceeds the frame period");
    }
    if (!(gain > 0.0)) throw std::invalid_argument("gain must be > 0");
    if (!(V_sat > 0.0)) throw std::invalid_argument("V_sat must be > 0");
    if (!(V_dark >= 0.0 && V_dark < V_sat)) throw std::invalid_argument("need 0 <= V_dark < V_sat");
    if (!(fill_factor > 0.0 && fill_factor <= 1.0)) {
        throw std::invalid_argument("fill_factor must lie in (0, 1]");
    }
    if (read_noise_sigma < 0.0 || fpn_sigma < 0.0) {
        throw std::invalid_argument("noise sigmas must be >= 0");
    }
}

namespace {

std::vector<double> gaussian_taps(double sigma) {
    const int radius = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> taps(2 * radius + 1);
    double sum = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        taps[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
        sum += taps[k + radius];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

// Zero-phase response of a symmetric kernel at f cycles/pixel.
double kernel_response(const std::vector<double>& taps, double f) {
    const int radius = static_cast<int>(taps.size() / 2);
    double h = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        h += taps[k + radius] * std::cos(2.0 * std::numbers::pi * f * k);
    }
    return h;
}

// reflect-101: ... 2 1 | 0 1 2 ... n-1 | n-2 ...
int mirror(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

void check_cutoff(double cutoff_fraction) {
    if (!(cutoff_fraction > 0.0 && cutoff_fraction <= 1.0)) {
        throw std::invalid_argument("cutoff_fraction must lie in (0, 1]");
    }
}

}  // namespace

double antialias_sigma(double cutoff_fraction) {
    check_cutoff(cutoff_fraction);
    const double fc = 0.5 * cutoff_fraction;
    const double target = std::numbers::sqrt2 / 2.0;
    // Response at fc falls monotonically with sigma. Start from the continuous
    // closed form and bisect on the sampled kernel.
    double lo = 1e-3;
    double hi = 4.0 * std::sqrt(std::numbers::ln2) / (2.0 * std::numbers::pi * fc) + 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (kernel_response(gaussian_taps(mid), fc) > target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

std::vector<double> antialias_kernel(double cutoff_fraction) {
    return gaussian_taps(antialias_sigma(cutoff_fraction));
}

RgbImage gaussian_antialias(const RgbImage& img, double cutoff_fraction) {
    check_cutoff(cutoff_fraction);
    if (img.width() < 1 || img.height() < 1) throw std::invalid_argument("image is empty");
    const auto taps = antialias_kernel(cutoff_fraction);
    const int radius = static_cast<int>(taps.size() / 2);
    const int w = img.width();
    const int h = img.height();

    RgbImage tmp(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    acc += taps[k + radius] * img.at(mirror(x + k, w), y, c);
                }
                tmp.at(x, y, c) = acc;
            }
        }
    }
    RgbImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    acc += taps[k + radius] * tmp.at(x, mirror(y + k, h), c);
                }
                // Rounding can nudge a saturated pixel just past 1.
                out.at(x, y, c) = std::clamp(acc, 0.0, 1.0);
            }
        }
    }
    return out;
}

BayerFrame mosaic_bayer(const RgbImage& img, BayerPattern pattern) {
    if (img.width() < 1 || img.height() < 1) throw std::invalid_argument("image is empty");
    if (pattern != BayerPattern::kMono && (img.width() % 2 != 0 || img.height() % 2 != 0)) {
        throw std::invalid_argument("2x2 color patterns need even image dimensions");
    }
    BayerFrame out{img.width(), img.height(), pattern, {}};
    out.data.resize(static_cast<std::size_t>(img.width()) * img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            out.data[static_cast<std::size_t>(y) * img.width() + x] =
                img.at(x, y, bayer_channel(pattern, x, y));
        }
    }
    return out;
}

namespace {

double fixed_pattern_offset(const ExposureConfig& cfg, std::uint64_t seed, std::uint32_t pixel) {
    if (cfg.fpn_sigma <= 0.0) return 0.0;
    // Constant across frames.
    return std::abs(cfg.fpn_sigma *
                    standard_normal({seed, 0, 0, 0, pixel, NoiseStream::kFixedPattern}));
}

double read_noise(const ExposureConfig& cfg, const ExposureNoise& noise, std::uint32_t pixel) {
    if (cfg.read_noise_sigma <= 0.0) return 0.0;
    const auto stream = noise.reset_sample ? NoiseStream::kReadReset : NoiseStream::kReadSignal;
    return cfg.read_noise_sigma * standard_normal({noise.seed, noise.frame, 0, 0, pixel, stream});
}

}  // namespace

AnalogPixelArray expose(const BayerFrame& frame, const ExposureConfig& cfg,
                        const ExposureNoise& noise) {
    cfg.validate();
    if (frame.data.size() != static_cast<std::size_t>(frame.width) * frame.height) {
        throw std::invalid_argument("Bayer frame data does not match its dimensions");
    }
    AnalogPixelArray out(frame.width, frame.height, cfg.V_sat);
    const double k = cfg.gain * cfg.fill_factor * cfg.t_exposure;
    for (std::size_t i = 0; i < frame.data.size(); ++i) {
        const auto p = static_cast<std::uint32_t>(i);
        const double v = cfg.V_dark + fixed_pattern_offset(cfg, noise.seed, p) +
                         k * frame.data[i] + read_noise(cfg, noise, p);
        out.voltages[i] = std::clamp(v, 0.0, cfg.V_sat);
    }
    return out;
}

AnalogPixelArray reset_level(int width, int height, const ExposureConfig& cfg,
                             const ExposureNoise& noise) {
    cfg.validate();
    AnalogPixelArray out(width, height, cfg.V_sat);
    for (std::size_t i = 0; i < out.voltages.size(); ++i) {
        const auto p = static_cast<std::uint32_t>(i);
        const double v = cfg.V_dark + fixed_pattern_offset(cfg, noise.seed, p) + read_noise(cfg, noise, p);
        out.voltages[i] = std::clamp(v, 0.0, cfg.V_sat);
    }
    return out;
}

AnalogPixelArray cds_sample(const AnalogPixelArray& signal, const AnalogPixelArray& reset) {
    if (signal.width != reset.width || signal.height != reset.height) {
        throw std::invalid_argument("CDS inputs differ in size");
    }
    AnalogPixelArray out(signal.width, signal.height, signal.v_sat);
    for (std::size_t i = 0; i < out.voltages.size(); ++i) {
        out.valid[i] = signal.valid[i] && reset.valid[i];
        out.voltages[i] =
            out.valid[i] ? std::clamp(signal.voltages[i] - reset.voltages[i], 0.0, signal.v_sat) : 0.0;
    }
    return out;
}

AnalogPixelArray charge_dump(const AnalogPixelArray& arr, const PatchTiling& tiling,
                             const SelectionMask& selection) {
    if (selection.size() != tiling.patch_count()) {
        throw std::invalid_argument("selection mask length does not match patch count");
    }
    if (tiling.sensor_w() != arr.width || tiling.sensor_h() != arr.height) {
        throw std::invalid_argument("tiling does not match pixel array size");
    }
    AnalogPixelArray out = arr;
    for (std::size_t p = 0; p < tiling.patch_count(); ++p) {
        if (selection.selected(p)) continue;
        const auto& r = tiling.patch(p);
        for (int y = r.y; y < r.y + r.h; ++y) {
            for (int x = r.x; x < r.x + r.w; ++x) {
                out.voltages[out.index(x, y)] = 0.0;
                out.valid[out.index(x, y)] = 0;
            }
        }
    }
    return out;
}

AnalogPixelArray capture(const BayerFrame& frame, const ExposureConfig& cfg, std::uint64_t seed,
                         std::uint32_t frame_index) {
    const auto signal = expose(frame, cfg, {seed, frame_index, false});
    const auto reset = reset_level(frame.width, frame.height, cfg, {seed, frame_index, true});
    return cds_sample(signal, reset);
}

}  // namespace ipsim
