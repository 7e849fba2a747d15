#include "ipsim/tiling.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ipsim {

bool is_supported_patch_size(int size) {
    return size == 8 || size == 16 || size == 24 || size == 32;
}

PatchTiling build_tiling(int sensor_w, int sensor_h, int patch_w, int patch_h, int origin_x,
                         int origin_y) {
    if (!is_supported_patch_size(patch_w) || !is_supported_patch_size(patch_h)) {
        throw std::invalid_argument("patch size must be one of 8, 16, 24, 32 (got " +
                                    std::to_string(patch_w) + "x" + std::to_string(patch_h) + ")");
    }
    if (origin_x < 0 || origin_y < 0 || origin_x % 4 != 0 || origin_y % 4 != 0) {
        throw std::invalid_argument("patch origin must be a non-negative multiple of 4");
    }
    if (sensor_w < patch_w || sensor_h < patch_h) {
        throw std::invalid_argument("sensor is smaller than one patch");
    }

    PatchTiling t;
    t.sensor_w_ = sensor_w;
    t.sensor_h_ = sensor_h;
    t.patch_w_ = patch_w;
    t.patch_h_ = patch_h;
    t.origin_x_ = origin_x;
    t.origin_y_ = origin_y;
    t.cols_ = std::max(0, (sensor_w - origin_x) / patch_w);
    t.rows_ = std::max(0, (sensor_h - origin_y) / patch_h);
    if (t.cols_ == 0 || t.rows_ == 0) {
        throw std::invalid_argument("origin leaves no complete patch inside the sensor");
    }
    t.patches_.reserve(static_cast<std::size_t>(t.cols_) * t.rows_);
    for (int r = 0; r < t.rows_; ++r) {
        for (int c = 0; c < t.cols_; ++c) {
            t.patches_.push_back({origin_x + c * patch_w, origin_y + r * patch_h, patch_w, patch_h});
        }
    }
    return t;
}

SelectionMask SelectionMask::all(std::size_t n, bool selected) {
    return SelectionMask(std::vector<std::uint8_t>(n, selected ? 1 : 0));
}

std::size_t SelectionMask::selected_count() const {
    return static_cast<std::size_t>(std::count_if(bits_.begin(), bits_.end(),
                                                  [](std::uint8_t b) { return b != 0; }));
}

double SelectionMask::active_fraction() const {
    if (bits_.empty()) return 0.0;
    return static_cast<double>(selected_count()) / static_cast<double>(bits_.size());
}

}  // namespace ipsim
