#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vx/tensor.hpp"

namespace vx {

// How slice values map to 8-bit gray.
enum class RenderScale {
    MinMax,  // [min, max] -> [0, 255]; constant slices go black
    Signed,  // 0 -> 128, +-max|v| -> 255/1; constant-zero slices go mid-gray
};

const char* render_scale_name(RenderScale s);
RenderScale parse_render_scale(std::string_view name);

struct SliceImage {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<uint8_t> pixels;  // row-major, rows * cols
};

// Extracts the plane at `index` along `axis` (0 = d, 1 = h, 2 = w) of a
// (d, h, w) volume and rescales it to gray.
SliceImage render_slice(const Tensor& volume, size_t axis, size_t index, RenderScale scale);

// Binary PGM (P5, maxval 255).
void write_pgm(const SliceImage& image, const std::string& path);

}  // namespace vx
