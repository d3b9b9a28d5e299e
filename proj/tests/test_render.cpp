#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "vx/render.hpp"
#include "vx/rng.hpp"
#include "vx/tensor.hpp"

using namespace vx;

namespace {

std::string thrown_message(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

Tensor filled(std::vector<size_t> shape, double value) {
    Tensor t(std::move(shape));
    for (size_t i = 0; i < t.numel(); ++i) t[i] = value;
    return t;
}

}  // namespace

TEST_CASE("constant slices render black under min-max and mid-gray signed") {
    const Tensor volume = filled({3, 4, 5}, 7.5);
    const SliceImage minmax = render_slice(volume, 0, 1, RenderScale::MinMax);
    CHECK(minmax.rows == 4);
    CHECK(minmax.cols == 5);
    for (uint8_t p : minmax.pixels) CHECK(p == 0);

    const SliceImage centered = render_slice(filled({3, 4, 5}, 0.0), 0, 1, RenderScale::Signed);
    for (uint8_t p : centered.pixels) CHECK(p == 128);
}

TEST_CASE("a single bright voxel yields exactly one 255 pixel") {
    Tensor volume = filled({4, 4, 4}, 1.0);
    volume[(2 * 4 + 1) * 4 + 3] = 9.0;  // (d, h, w) = (2, 1, 3)
    const SliceImage image = render_slice(volume, 0, 2, RenderScale::MinMax);
    CHECK(std::count(image.pixels.begin(), image.pixels.end(), 255) == 1);
    CHECK(image.pixels[1 * 4 + 3] == 255);
    CHECK(std::count(image.pixels.begin(), image.pixels.end(), 0) == 15);
}

TEST_CASE("min-max bytes match a scalar rescale oracle on a random slice") {
    Tensor volume({1, 8, 8});
    Rng rng(17);
    for (size_t i = 0; i < volume.numel(); ++i) volume[i] = rng.uniform(-5.0, 5.0);
    const SliceImage image = render_slice(volume, 0, 0, RenderScale::MinMax);

    double lo = volume[0], hi = volume[0];
    for (size_t i = 0; i < volume.numel(); ++i) {
        lo = std::min(lo, volume[i]);
        hi = std::max(hi, volume[i]);
    }
    for (size_t i = 0; i < volume.numel(); ++i) {
        const auto expect =
            static_cast<uint8_t>(std::floor((volume[i] - lo) / (hi - lo) * 255.0 + 0.5));
        CHECK(image.pixels[i] == expect);
    }
}

TEST_CASE("signed rendering maps sign to brightness around mid-gray") {
    Tensor volume({1, 1, 5});
    volume[0] = -2.0;
    volume[1] = -1.0;
    volume[2] = 0.0;
    volume[3] = 1.0;
    volume[4] = 2.0;
    const SliceImage image = render_slice(volume, 0, 0, RenderScale::Signed);
    CHECK(image.pixels[0] == 1);    // -max
    CHECK(image.pixels[1] == 65);   // 128 - 63.5 rounded
    CHECK(image.pixels[2] == 128);  // zero
    CHECK(image.pixels[3] == 192);  // 128 + 63.5 rounded
    CHECK(image.pixels[4] == 255);  // +max
}

TEST_CASE("each axis slices the expected plane") {
    Tensor volume({2, 3, 4});
    for (size_t i = 0; i < volume.numel(); ++i) volume[i] = static_cast<double>(i);

    const SliceImage d_slice = render_slice(volume, 0, 1, RenderScale::MinMax);
    CHECK(d_slice.rows == 3);
    CHECK(d_slice.cols == 4);

    const SliceImage h_slice = render_slice(volume, 1, 0, RenderScale::MinMax);
    CHECK(h_slice.rows == 2);
    CHECK(h_slice.cols == 4);

    const SliceImage w_slice = render_slice(volume, 2, 3, RenderScale::MinMax);
    CHECK(w_slice.rows == 2);
    CHECK(w_slice.cols == 3);

    // The h = 0 slice holds values {0..3} and {12..15}, so its min-max range
    // is [0, 15] and the first row rescales 0..3 over that range.
    for (size_t x = 0; x < 4; ++x) {
        const auto expect =
            static_cast<uint8_t>(std::floor(static_cast<double>(x) / 15.0 * 255.0 + 0.5));
        CHECK(h_slice.pixels[x] == expect);
    }
}

TEST_CASE("render validates its inputs") {
    const Tensor volume = filled({2, 2, 2}, 1.0);
    CHECK(contains(thrown_message([&] { render_slice(volume, 3, 0, RenderScale::MinMax); }),
                   "axis 3 out of range"));
    CHECK(contains(thrown_message([&] { render_slice(volume, 1, 2, RenderScale::MinMax); }),
                   "index 2 out of range (axis extent 2)"));
    CHECK(contains(thrown_message(
                       [&] { render_slice(filled({4}, 0.0), 0, 0, RenderScale::MinMax); }),
                   "expected a (d, h, w) volume, got rank 1"));
    Tensor bad = filled({2, 2, 2}, 1.0);
    bad[0] = std::nan("");
    CHECK(contains(thrown_message([&] { render_slice(bad, 0, 0, RenderScale::MinMax); }),
                   "non-finite"));

    CHECK(parse_render_scale("minmax") == RenderScale::MinMax);
    CHECK(parse_render_scale("signed") == RenderScale::Signed);
    CHECK(contains(thrown_message([] { parse_render_scale("log"); }), "unknown scale 'log'"));
    CHECK(std::string(render_scale_name(RenderScale::MinMax)) == "minmax");
    CHECK(std::string(render_scale_name(RenderScale::Signed)) == "signed");
}

TEST_CASE("pgm files carry the P5 header and raw pixel bytes") {
    Tensor volume({1, 2, 3});
    for (size_t i = 0; i < 6; ++i) volume[i] = static_cast<double>(i);
    const SliceImage image = render_slice(volume, 0, 0, RenderScale::MinMax);
    const auto path = std::filesystem::temp_directory_path() / "vx_render.pgm";
    write_pgm(image, path.string());

    std::ifstream in(path, std::ios::binary);
    REQUIRE(bool(in));
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    const std::string header = "P5\n3 2\n255\n";
    REQUIRE(bytes.size() == header.size() + 6);
    CHECK(std::string(bytes.begin(), bytes.begin() + header.size()) == header);
    for (size_t i = 0; i < 6; ++i) CHECK(bytes[header.size() + i] == image.pixels[i]);
}
