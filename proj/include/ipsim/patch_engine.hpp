#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ipsim/analog_compute.hpp"
#include "ipsim/sensor_frontend.hpp"
#include "ipsim/tiling.hpp"

namespace ipsim {

// Dense row-major matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

// RGB column order: column (p * 3 + c) holds pixel p (row-major in the patch),
// channel c (0=R, 1=G, 2=B).
inline std::size_t rgb_column(std::size_t pixel, int channel) { return pixel * 3 + channel; }

// Reduces an RGB-trained projection A (M x pw*ph*3) to the Bayer form A'
// (M x pw*ph) by keeping, for every pixel, only the column of the channel the
// pattern samples there.
Matrix strike_columns(const Matrix& rgb, int patch_w, int patch_h, BayerPattern pattern);

// M projection vectors over one patch plus digital-domain biases.
//
// Weights are stored normalized so that max|W| lies in (1/2, 1]; the
// normalization factor is a power of two, so raw = normalized * scale is
// exact and the digital rescale is a shift.
class WeightBank {
public:
    WeightBank() = default;

    static WeightBank from_raw(Matrix raw, std::vector<double> bias,
                               std::optional<Matrix> source_rgb = std::nullopt);
    // Builds A' from A and keeps A as the source.
    static WeightBank from_rgb(Matrix source_rgb, std::vector<double> bias, int patch_w,
                               int patch_h, BayerPattern pattern);

    std::size_t vectors() const { return weights_.rows; }
    std::size_t columns() const { return weights_.cols; }
    double weight(std::size_t v, std::size_t i) const { return weights_(v, i); }
    std::span<const double> row(std::size_t v) const { return weights_.row(v); }
    const Matrix& weights() const { return weights_; }
    double raw_weight(std::size_t v, std::size_t i) const { return weights_(v, i) * scale_; }
    Matrix raw_weights() const;
    double bias(std::size_t v) const { return bias_.at(v); }
    const std::vector<double>& biases() const { return bias_; }
    double scale() const { return scale_; }
    const std::optional<Matrix>& source_rgb() const { return source_rgb_; }

    // Throws std::invalid_argument if the source matrix is present and does
    // not reduce to the stored weights under (patch dims, pattern).
    void check_source(int patch_w, int patch_h, BayerPattern pattern) const;

private:
    Matrix weights_;
    std::vector<double> bias_;
    double scale_ = 1.0;
    std::optional<Matrix> source_rgb_;
};

// Pixel voltages of `rect`, row-major. Throws if any pixel is outside the
// array or invalid (charge-dumped).
std::vector<double> extract_patch(const AnalogPixelArray& arr, const PatchRect& rect);

struct ProjectionKey {
    std::uint64_t seed = 0;
    std::uint32_t frame = 0;
    std::uint32_t patch = 0;
};

// Out_v - V_R for every vector v. Segments are patches connected to one
// amplifier; their pixels are concatenated in order and charge sharing spans
// all of them. bank.columns() must equal the total pixel count.
std::vector<double> project_connected_swing(std::span<const std::span<const double>> segments,
                                            const WeightBank& bank, const HardwareProfile& profile,
                                            Fidelity fidelity, const ProjectionKey& key = {});

std::vector<double> project_patch_swing(std::span<const double> pixels, const WeightBank& bank,
                                        const HardwareProfile& profile, Fidelity fidelity,
                                        const ProjectionKey& key = {});

// Amplifier outputs Out_v = V_R + sum_i W_iv P_i / N.
std::vector<double> project_patch(std::span<const double> pixels, const WeightBank& bank,
                                  const HardwareProfile& profile, Fidelity fidelity,
                                  const ProjectionKey& key = {});

struct PatchFeatures {
    std::uint32_t patch = 0;
    std::vector<double> swing;  // Out_v - V_R per vector
};

struct AnalogFeatureFrame {
    double V_R = 1.0;
    std::size_t vectors = 0;
    std::uint32_t frame = 0;
    std::vector<PatchFeatures> entries;  // selected patches, ascending index

    double out_v(std::size_t entry, std::size_t v) const { return V_R + entries[entry].swing[v]; }
    std::size_t feature_count() const { return entries.size() * vectors; }
};

struct VectorOffset {
    int dx = 0;
    int dy = 0;
};

struct FrameOptions {
    Fidelity fidelity = Fidelity::kIdeal;
    std::uint32_t frame = 0;
    // Empty, or one origin shift per vector with components in {-4, 0, 4}.
    std::vector<VectorOffset> vector_offsets;
    unsigned threads = 1;
};

void validate_vector_offsets(const std::vector<VectorOffset>& offsets, std::size_t vectors);

// Projects every selected patch. Deselected patches produce nothing; the
// pixel array is read-only here (apply charge_dump beforehand).
AnalogFeatureFrame run_frame(const AnalogPixelArray& arr, const PatchTiling& tiling,
                             const WeightBank& bank, const SelectionMask& mask,
                             const HardwareProfile& profile, const FrameOptions& options);

// Fallback saliency: the round(fraction * count) patches with the highest
// pixel variance (ties to the lower index).
SelectionMask select_by_variance(const AnalogPixelArray& arr, const PatchTiling& tiling,
                                 double fraction);

struct NeighborMember {
    std::uint32_t patch = 0;
    double alpha = 0.0;
};

struct Neighborhood {
    std::uint32_t patch = 0;  // output slot
    std::vector<NeighborMember> members;
};

// Second layer: each output vector is the charge-shared mean over its
// neighborhood of qth_quantize(alpha) * feature.
AnalogFeatureFrame attention_layer(const AnalogFeatureFrame& features,
                                   std::span<const Neighborhood> neighborhoods,
                                   const HardwareProfile& profile, Fidelity fidelity);

}  // namespace ipsim
