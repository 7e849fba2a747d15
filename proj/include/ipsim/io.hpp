#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipsim/patch_engine.hpp"
#include "ipsim/readout.hpp"
#include "ipsim/sensor_frontend.hpp"
#include "ipsim/tiling.hpp"

namespace ipsim {

// Unreadable, missing or malformed input files.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Binary PGM/PPM (maxval 255 or 65535) and 8/16-bit PNG. Grayscale inputs
// are replicated to all three channels; values are normalized to [0, 1].
RgbImage read_image(const std::filesystem::path& path);

// Format follows the extension: .pgm (gray, 16-bit), .ppm (16-bit), .png
// (16-bit). Gray formats store the green channel.
void write_image(const std::filesystem::path& path, const RgbImage& img);

// Weight bank file, little-endian:
//   "IPWB" | u16 version | u32 M | u32 columns | u8 flags (bit0: has RGB source)
//   | f32 weights[M * columns] | f32 bias[M] | f32 source[M * columns * 3]?
inline constexpr std::uint16_t kWeightBankVersion = 1;
WeightBank read_weight_bank(const std::filesystem::path& path);
void write_weight_bank(const std::filesystem::path& path, const WeightBank& bank);

// One "0"/"1" line per patch, row-major patch order. Blank lines and lines
// starting with '#' are skipped.
SelectionMask read_selection_mask(const std::filesystem::path& path);
void write_selection_mask(const std::filesystem::path& path, const SelectionMask& mask);

// Feature file, little-endian:
//   "IPFF" | u16 version | u32 frame | u32 patch count | u32 M
//   | per patch: u32 patch index, f32 features[M]
// CSV alternative: header "frame,patch,vector,value".
inline constexpr std::uint16_t kFeatureFileVersion = 1;
enum class FeatureFormat { kBinary, kCsv };

void write_features(const std::filesystem::path& path, const DigitalFeatureFrame& frame,
                    FeatureFormat format);
std::string encode_features(const DigitalFeatureFrame& frame, FeatureFormat format);

// Detects the format from the magic bytes. Both formats carry f32 values.
DigitalFeatureFrame read_features(const std::filesystem::path& path);

}  // namespace ipsim
