#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace ipsim {

struct PatchRect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    bool contains(int px, int py) const { return px >= x && px < x + w && py >= y && py < y + h; }
    bool operator==(const PatchRect&) const = default;
};

// Non-overlapping grid of equal patches over the sensor. Patch index order is
// row-major over the grid.
class PatchTiling {
public:
    PatchTiling() = default;

    int sensor_w() const { return sensor_w_; }
    int sensor_h() const { return sensor_h_; }
    int patch_w() const { return patch_w_; }
    int patch_h() const { return patch_h_; }
    int origin_x() const { return origin_x_; }
    int origin_y() const { return origin_y_; }
    int cols() const { return cols_; }
    int rows() const { return rows_; }
    std::size_t patch_count() const { return patches_.size(); }
    std::size_t pixels_per_patch() const {
        return static_cast<std::size_t>(patch_w_) * static_cast<std::size_t>(patch_h_);
    }
    const std::vector<PatchRect>& patches() const { return patches_; }
    const PatchRect& patch(std::size_t i) const { return patches_.at(i); }

    friend PatchTiling build_tiling(int sensor_w, int sensor_h, int patch_w, int patch_h,
                                    int origin_x, int origin_y);

private:
    int sensor_w_ = 0;
    int sensor_h_ = 0;
    int patch_w_ = 0;
    int patch_h_ = 0;
    int origin_x_ = 0;
    int origin_y_ = 0;
    int cols_ = 0;
    int rows_ = 0;
    std::vector<PatchRect> patches_;
};

bool is_supported_patch_size(int size);

// Patch sizes must be one of 8/16/24/32 and origins multiples of 4. Partial
// patches at the right and bottom edges are dropped. Throws
// std::invalid_argument on any violated constraint.
PatchTiling build_tiling(int sensor_w, int sensor_h, int patch_w, int patch_h, int origin_x = 0,
                         int origin_y = 0);

// Per-patch selection bits, row-major patch order.
class SelectionMask {
public:
    SelectionMask() = default;
    explicit SelectionMask(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {}
    static SelectionMask all(std::size_t n, bool selected);

    std::size_t size() const { return bits_.size(); }
    bool selected(std::size_t i) const { return bits_.at(i) != 0; }
    std::size_t selected_count() const;
    double active_fraction() const;
    const std::vector<std::uint8_t>& bits() const { return bits_; }

private:
    std::vector<std::uint8_t> bits_;
};

}  // namespace ipsim
