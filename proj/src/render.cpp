#include "vx/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

namespace vx {

const char* render_scale_name(RenderScale s) {
    switch (s) {
        case RenderScale::MinMax: return "minmax";
        case RenderScale::Signed: return "signed";
    }
    fail("render: bad scale enum");
}

RenderScale parse_render_scale(std::string_view name) {
    if (name == "minmax") return RenderScale::MinMax;
    if (name == "signed") return RenderScale::Signed;
    fail("render: unknown scale '" + std::string(name) + "'");
}

SliceImage render_slice(const Tensor& volume, size_t axis, size_t index, RenderScale scale) {
    if (volume.rank() != 3)
        fail("render: expected a (d, h, w) volume, got rank " + std::to_string(volume.rank()));
    if (axis > 2) fail("render: axis " + std::to_string(axis) + " out of range (3 axes)");
    if (index >= volume.extent(axis))
        fail("render: index " + std::to_string(index) + " out of range (axis extent " +
             std::to_string(volume.extent(axis)) + ")");

    const size_t row_axis = axis == 0 ? 1 : 0;
    const size_t col_axis = axis == 2 ? 1 : 2;
    SliceImage image;
    image.rows = volume.extent(row_axis);
    image.cols = volume.extent(col_axis);

    std::vector<double> values(image.rows * image.cols);
    std::array<size_t, 3> c{};
    c[axis] = index;
    const size_t h = volume.extent(1), w = volume.extent(2);
    for (size_t r = 0; r < image.rows; ++r)
        for (size_t col = 0; col < image.cols; ++col) {
            c[row_axis] = r;
            c[col_axis] = col;
            const double v = volume[(c[0] * h + c[1]) * w + c[2]];
            if (!std::isfinite(v)) fail("render: slice contains a non-finite value");
            values[r * image.cols + col] = v;
        }

    image.pixels.resize(values.size());
    if (scale == RenderScale::MinMax) {
        const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
        const double lo = *lo_it, hi = *hi_it;
        for (size_t i = 0; i < values.size(); ++i)
            image.pixels[i] = hi == lo ? 0
                                       : static_cast<uint8_t>(std::floor(
                                             (values[i] - lo) / (hi - lo) * 255.0 + 0.5));
    } else {
        double peak = 0.0;
        for (double v : values) peak = std::max(peak, std::fabs(v));
        for (size_t i = 0; i < values.size(); ++i) {
            if (peak == 0.0) {
                image.pixels[i] = 128;
                continue;
            }
            const double p = std::floor(128.0 + 127.0 * values[i] / peak + 0.5);
            image.pixels[i] = static_cast<uint8_t>(std::clamp(p, 0.0, 255.0));
        }
    }
    return image;
}

void write_pgm(const SliceImage& image, const std::string& path) {
    if (image.rows == 0 || image.cols == 0 || image.pixels.size() != image.rows * image.cols)
        fail("render: malformed image");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("render: cannot open '" + path + "' for writing");
    out << "P5\n" << image.cols << ' ' << image.rows << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()),
              static_cast<std::streamsize>(image.pixels.size()));
    if (!out) fail("render: write failed for '" + path + "'");
}

}  // namespace vx
