#include "ipsim/patch_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "ipsim/parallel.hpp"

namespace ipsim {

Matrix strike_columns(const Matrix& rgb, int patch_w, int patch_h, BayerPattern pattern) {
    const auto pixels = static_cast<std::size_t>(patch_w) * static_cast<std::size_t>(patch_h);
    if (patch_w < 1 || patch_h < 1 || rgb.cols != pixels * 3) {
        throw std::invalid_argument("RGB weight matrix has " + std::to_string(rgb.cols) +
                                    " columns, expected " + std::to_string(pixels * 3));
    }
    Matrix out(rgb.rows, pixels);
    for (std::size_t v = 0; v < rgb.rows; ++v) {
        for (int y = 0; y < patch_h; ++y) {
            for (int x = 0; x < patch_w; ++x) {
                const auto p = static_cast<std::size_t>(y) * patch_w + x;
                out(v, p) = rgb(v, rgb_column(p, bayer_channel(pattern, x, y)));
            }
        }
    }
    return out;
}

namespace {

double power_of_two_scale(const Matrix& m) {
    double max_abs = 0.0;
    for (double w : m.data) {
        if (!std::isfinite(w)) throw std::invalid_argument("weight bank contains a non-finite value");
        max_abs = std::max(max_abs, std::abs(w));
    }
    if (max_abs == 0.0) return 1.0;
    int exponent = 0;
    const double mantissa = std::frexp(max_abs, &exponent);
    return std::ldexp(1.0, mantissa == 0.5 ? exponent - 1 : exponent);
}

}  // namespace

WeightBank WeightBank::from_raw(Matrix raw, std::vector<double> bias, std::optional<Matrix> source_rgb) {
    if (raw.rows < 1 || raw.cols < 1) throw std::invalid_argument("weight bank needs M >= 1 and columns >= 1");
    if (raw.data.size() != raw.rows * raw.cols) throw std::invalid_argument("weight matrix storage size mismatch");
    if (bias.size() != raw.rows) throw std::invalid_argument("bias count must equal M");
    if (source_rgb && (source_rgb->rows != raw.rows || source_rgb->cols != raw.cols * 3)) {
        throw std::invalid_argument("RGB source matrix must be M x (3 * columns)");
    }
    WeightBank bank;
    bank.scale_ = power_of_two_scale(raw);
    for (double& w : raw.data) w /= bank.scale_;
    bank.weights_ = std::move(raw);
    bank.bias_ = std::move(bias);
    bank.source_rgb_ = std::move(source_rgb);
    return bank;
}

WeightBank WeightBank::from_rgb(Matrix source_rgb, std::vector<double> bias, int patch_w, int patch_h,
                                BayerPattern pattern) {
    Matrix reduced = strike_columns(source_rgb, patch_w, patch_h, pattern);
    return from_raw(std::move(reduced), std::move(bias), std::move(source_rgb));
}

Matrix WeightBank::raw_weights() const {
    Matrix m = weights_;
    for (double& w : m.data) w *= scale_;
    return m;
}

void WeightBank::check_source(int patch_w, int patch_h, BayerPattern pattern) const {
    if (!source_rgb_) return;
    if (strike_columns(*source_rgb_, patch_w, patch_h, pattern).data != raw_weights().data) {
        throw std::invalid_argument("weights are not the Bayer reduction of the RGB source matrix");
    }
}

std::vector<double> extract_patch(const AnalogPixelArray& arr, const PatchRect& rect) {
    if (rect.x < 0 || rect.y < 0 || rect.x + rect.w > arr.width || rect.y + rect.h > arr.height) {
        throw std::invalid_argument("patch window lies outside the pixel array");
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(rect.w) * rect.h);
    for (int y = rect.y; y < rect.y + rect.h; ++y) {
        for (int x = rect.x; x < rect.x + rect.w; ++x) {
            if (!arr.is_valid(x, y)) throw std::invalid_argument("patch contains charge-dumped pixels");
            out.push_back(arr.at(x, y));
        }
    }
    return out;
}

namespace {

std::size_t total_pixels(std::span<const std::span<const double>> segments) {
    std::size_t total = 0;
    for (const auto& s : segments) total += s.size();
    return total;
}

// One vector's Out_v - V_R. Capacitors start from reset for every vector.
double project_vector(std::span<const std::span<const double>> segments, std::span<const double> w,
                      const HardwareProfile& profile, Fidelity fidelity, const ProjectionKey& key,
                      std::uint32_t vector, std::vector<CapCharge>& charges) {
    const std::size_t total = total_pixels(segments);
    if (fidelity == Fidelity::kIdeal) {
        double acc = 0.0;
        std::size_t i = 0;
        for (const auto& s : segments) {
            for (double p : s) acc += w[i++] * p;
        }
        return acc / static_cast<double>(total);
    }
    charges.resize(total);
    std::size_t i = 0;
    for (const auto& s : segments) {
        for (double p : s) {
            const NoiseKey nk{key.seed, key.frame, key.patch, vector, static_cast<std::uint32_t>(i),
                              NoiseStream::kMultiply};
            charges[i] = pwm_multiply(p, w[i], profile, Fidelity::kAnalog, nk);
            ++i;
        }
    }
    return charge_share_sum(charges, profile.sum_mode, profile);
}

}  // namespace

std::vector<double> project_connected_swing(std::span<const std::span<const double>> segments,
                                            const WeightBank& bank, const HardwareProfile& profile,
                                            Fidelity fidelity, const ProjectionKey& key) {
    const std::size_t total = total_pixels(segments);
    if (total == 0 || total != bank.columns()) {
        throw std::invalid_argument("patch pixel count " + std::to_string(total) +
                                    " does not match weight bank columns " +
                                    std::to_string(bank.columns()));
    }
    std::vector<double> swing(bank.vectors());
    std::vector<CapCharge> charges;
    for (std::size_t v = 0; v < bank.vectors(); ++v) {
        swing[v] = project_vector(segments, bank.row(v), profile, fidelity, key,
                                  static_cast<std::uint32_t>(v), charges);
    }
    return swing;
}

std::vector<double> project_patch_swing(std::span<const double> pixels, const WeightBank& bank,
                                        const HardwareProfile& profile, Fidelity fidelity,
                                        const ProjectionKey& key) {
    const std::span<const double> one[] = {pixels};
    return project_connected_swing(one, bank, profile, fidelity, key);
}

std::vector<double> project_patch(std::span<const double> pixels, const WeightBank& bank,
                                  const HardwareProfile& profile, Fidelity fidelity,
                                  const ProjectionKey& key) {
    auto out = project_patch_swing(pixels, bank, profile, fidelity, key);
    for (double& v : out) v += profile.V_R;
    return out;
}

void validate_vector_offsets(const std::vector<VectorOffset>& offsets, std::size_t vectors) {
    if (offsets.empty()) return;
    if (offsets.size() != vectors) throw std::invalid_argument("need one vector offset per vector");
    for (const auto& o : offsets) {
        const auto ok = [](int d) { return d == -4 || d == 0 || d == 4; };
        if (!ok(o.dx) || !ok(o.dy)) throw std::invalid_argument("vector offsets must lie in {-4, 0, 4}");
    }
}

AnalogFeatureFrame run_frame(const AnalogPixelArray& arr, const PatchTiling& tiling,
                             const WeightBank& bank, const SelectionMask& mask,
                             const HardwareProfile& profile, const FrameOptions& options) {
    profile.validate();
    if (mask.size() != tiling.patch_count()) {
        throw std::invalid_argument("selection mask length does not match patch count");
    }
    if (tiling.sensor_w() != arr.width || tiling.sensor_h() != arr.height) {
        throw std::invalid_argument("tiling does not match pixel array size");
    }
    if (bank.columns() != tiling.pixels_per_patch()) {
        throw std::invalid_argument("weight bank columns do not match patch pixel count");
    }
    validate_vector_offsets(options.vector_offsets, bank.vectors());

    AnalogFeatureFrame out;
    out.V_R = profile.V_R;
    out.vectors = bank.vectors();
    out.frame = options.frame;
    for (std::size_t p = 0; p < tiling.patch_count(); ++p) {
        if (mask.selected(p)) out.entries.push_back({static_cast<std::uint32_t>(p), {}});
    }

    parallel_for(out.entries.size(), options.threads, [&](std::size_t e) {
        auto& entry = out.entries[e];
        const PatchRect& rect = tiling.patch(entry.patch);
        const ProjectionKey key{profile.noise_seed, options.frame, entry.patch};
        if (options.vector_offsets.empty()) {
            entry.swing = project_patch_swing(extract_patch(arr, rect), bank, profile,
                                              options.fidelity, key);
            return;
        }
        // Shifted windows: each vector reads its own window.
        entry.swing.resize(bank.vectors());
        std::vector<CapCharge> charges;
        for (std::size_t v = 0; v < bank.vectors(); ++v) {
            const auto& o = options.vector_offsets[v];
            const auto pixels = extract_patch(arr, {rect.x + o.dx, rect.y + o.dy, rect.w, rect.h});
            const std::span<const double> seg[] = {pixels};
            entry.swing[v] = project_vector(seg, bank.row(v), profile, options.fidelity, key,
                                            static_cast<std::uint32_t>(v), charges);
        }
    });
    return out;
}

SelectionMask select_by_variance(const AnalogPixelArray& arr, const PatchTiling& tiling, double fraction) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("fraction must lie in [0, 1]");
    const std::size_t n = tiling.patch_count();
    std::vector<double> variance(n);
    for (std::size_t p = 0; p < n; ++p) {
        const auto& r = tiling.patch(p);
        double sum = 0.0, sum2 = 0.0;
        for (int y = r.y; y < r.y + r.h; ++y) {
            for (int x = r.x; x < r.x + r.w; ++x) {
                sum += arr.at(x, y);
                sum2 += arr.at(x, y) * arr.at(x, y);
            }
        }
        const double count = static_cast<double>(r.w) * r.h;
        variance[p] = sum2 / count - (sum / count) * (sum / count);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return variance[a] > variance[b]; });
    const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    std::vector<std::uint8_t> bits(n, 0);
    for (std::size_t k = 0; k < keep; ++k) bits[order[k]] = 1;
    return SelectionMask(std::move(bits));
}

AnalogFeatureFrame attention_layer(const AnalogFeatureFrame& features,
                                   std::span<const Neighborhood> neighborhoods,
                                   const HardwareProfile& profile, Fidelity fidelity) {
    auto find = [&](std::uint32_t patch) -> const PatchFeatures& {
        for (const auto& e : features.entries) {
            if (e.patch == patch) return e;
        }
        throw std::invalid_argument("neighborhood references missing patch " + std::to_string(patch));
    };

    AnalogFeatureFrame out;
    out.V_R = features.V_R;
    out.vectors = features.vectors;
    out.frame = features.frame;
    for (const auto& hood : neighborhoods) {
        if (hood.members.empty()) throw std::invalid_argument("empty attention neighborhood");
        std::vector<const PatchFeatures*> members;
        std::vector<double> weights;
        for (const auto& m : hood.members) {
            members.push_back(&find(m.patch));
            weights.push_back(qth_quantize(m.alpha));
        }
        PatchFeatures result{hood.patch, std::vector<double>(features.vectors)};
        std::vector<CapCharge> charges(members.size());
        for (std::size_t v = 0; v < features.vectors; ++v) {
            if (fidelity == Fidelity::kIdeal) {
                double acc = 0.0;
                for (std::size_t k = 0; k < members.size(); ++k) acc += weights[k] * members[k]->swing[v];
                result.swing[v] = acc / static_cast<double>(members.size());
            } else {
                // A power-of-two weight is a binary shift of the stored charge,
                // limited by the capacitor's swing.
                for (std::size_t k = 0; k < members.size(); ++k) {
                    charges[k].voltage =
                        std::clamp(weights[k] * members[k]->swing[v], -profile.V_sat, profile.V_sat);
                }
                result.swing[v] = charge_share_sum(charges, profile.sum_mode, profile);
            }
        }
        out.entries.push_back(std::move(result));
    }
    return out;
}

}  // namespace ipsim
