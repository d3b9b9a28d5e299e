#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "common/oracles.hpp"
#include "vx/rng.hpp"
#include "vx/volume_io.hpp"

using namespace vx;

namespace {

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

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

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(bool(in));
    return std::vector<unsigned char>((std::istreambuf_iterator<char>(in)),
                                      std::istreambuf_iterator<char>());
}

void spit(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    REQUIRE(bool(out));
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

template <typename T>
void put_le(std::vector<unsigned char>& buf, size_t off, T v) {
    std::memcpy(buf.data() + off, &v, sizeof v);
}

// A 2x3x4 int16 NIfTI-1 file assembled field by field, independent of the
// writer: x extent 4, y extent 3, z extent 2, payload 0..23 in file order.
std::vector<unsigned char> nifti_fixture() {
    std::vector<unsigned char> buf(352 + 24 * 2, 0);
    put_le<int32_t>(buf, 0, 348);
    const int16_t dims[8] = {3, 4, 3, 2, 1, 1, 1, 1};
    for (size_t i = 0; i < 8; ++i) put_le<int16_t>(buf, 40 + 2 * i, dims[i]);
    put_le<int16_t>(buf, 70, 4);   // datatype int16
    put_le<int16_t>(buf, 72, 16);  // bitpix
    for (size_t a = 1; a <= 3; ++a) put_le<float>(buf, 76 + 4 * a, 1.0f);
    put_le<float>(buf, 108, 352.0f);  // vox_offset
    put_le<float>(buf, 112, 1.0f);    // scl_slope
    std::memcpy(buf.data() + 344, "n+1\0", 4);
    for (int16_t i = 0; i < 24; ++i) put_le<int16_t>(buf, 352 + 2 * i, i);
    return buf;
}

std::string read_error(const std::vector<unsigned char>& bytes, const char* name) {
    const auto path = temp_file(name);
    spit(path, bytes);
    return thrown_message([&] { read_volume_file(path.string()); });
}

}  // namespace

TEST_CASE("vvol round-trips bitwise in every dtype") {
    Tensor f64({2, 3, 4});
    Rng rng(11);
    for (size_t i = 0; i < f64.numel(); ++i) f64[i] = rng.normal();

    Tensor ints({2, 3, 4});
    for (size_t i = 0; i < ints.numel(); ++i)
        ints[i] = static_cast<double>(static_cast<int>(i) * 37 % 65536 - 32768);

    Tensor f32({2, 3, 4});
    for (size_t i = 0; i < f32.numel(); ++i) f32[i] = static_cast<float>(rng.normal());

    const std::vector<std::pair<const Tensor*, VoxelType>> cases = {
        {&f64, VoxelType::Float64}, {&ints, VoxelType::Int16}, {&f32, VoxelType::Float32}};
    for (const auto& [volume, dtype] : cases) {
        const auto path = temp_file("rt.vvol");
        write_volume(*volume, path.string(), VolumeFormat::Vvol, dtype);
        const VolumeFile file = read_volume_file(path.string());
        CHECK(file.dtype == dtype);
        CHECK(bitwise_equal(file.values, *volume));
    }
}

TEST_CASE("vvol writes the documented header bytes") {
    Tensor volume({1, 2, 3});
    for (size_t i = 0; i < 6; ++i) volume[i] = static_cast<double>(i + 1);
    const auto path = temp_file("hdr.vvol");
    write_volume(volume, path.string(), VolumeFormat::Vvol, VoxelType::Int16);
    const auto bytes = slurp(path);
    REQUIRE(bytes.size() == 18 + 6 * 2);
    CHECK(std::memcmp(bytes.data(), "VVOL", 4) == 0);
    CHECK(bytes[4] == 0x01);
    CHECK(bytes[5] == 0x01);  // int16 dtype code
    const unsigned char extents[12] = {1, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0};
    CHECK(std::memcmp(bytes.data() + 6, extents, 12) == 0);
    int16_t first, last;
    std::memcpy(&first, bytes.data() + 18, 2);
    std::memcpy(&last, bytes.data() + 18 + 10, 2);
    CHECK(first == 1);
    CHECK(last == 6);
}

TEST_CASE("vvol rejects values int16 cannot hold") {
    Tensor volume({1, 1, 2});
    volume[0] = 1.0;
    volume[1] = 0.5;
    const auto path = temp_file("bad.vvol");
    std::string msg = thrown_message(
        [&] { write_volume(volume, path.string(), VolumeFormat::Vvol, VoxelType::Int16); });
    CHECK(contains(msg, "0.5 at voxel 1 is not representable as int16"));

    volume[1] = 40000.0;
    msg = thrown_message(
        [&] { write_volume(volume, path.string(), VolumeFormat::Vvol, VoxelType::Int16); });
    CHECK(contains(msg, "40000 at voxel 1 is not representable as int16"));
}

TEST_CASE("vvol read rejects malformed files") {
    Tensor volume({1, 1, 2});
    volume[0] = 1.0;
    volume[1] = 2.0;
    const auto path = temp_file("mut.vvol");
    write_volume(volume, path.string(), VolumeFormat::Vvol, VoxelType::Float64);
    const auto good = slurp(path);

    auto mutate = [&](std::function<void(std::vector<unsigned char>&)> fn) {
        auto bytes = good;
        fn(bytes);
        return read_error(bytes, "mut.vvol");
    };

    CHECK(contains(mutate([](auto& b) { b.resize(10); }), "truncated (10 bytes)"));
    CHECK(contains(mutate([](auto& b) { b[4] = 2; }), "unsupported version 2"));
    CHECK(contains(mutate([](auto& b) { b[5] = 9; }), "unknown dtype code 9"));
    CHECK(contains(mutate([](auto& b) { put_le<uint32_t>(b, 6, 0); }), "zero extent"));
    CHECK(contains(mutate([](auto& b) { b.pop_back(); }), "payload is 15 bytes, expected 16"));
}

TEST_CASE("nifti round-trips through write and read") {
    Tensor volume({2, 3, 4});
    Rng rng(7);
    for (size_t i = 0; i < volume.numel(); ++i)
        volume[i] = std::floor(rng.uniform(-100.0, 100.0));
    for (VoxelType dtype : {VoxelType::Int16, VoxelType::Float32, VoxelType::Float64}) {
        const auto path = temp_file("rt.nii");
        write_volume(volume, path.string(), VolumeFormat::Nifti, dtype);
        const VolumeFile file = read_volume_file(path.string());
        CHECK(file.dtype == dtype);
        CHECK(bitwise_equal(file.values, volume));
        CHECK(file.values.extent(0) == 2);
        CHECK(file.values.extent(1) == 3);
        CHECK(file.values.extent(2) == 4);
    }
}

TEST_CASE("hand-assembled nifti reads with x fastest") {
    const auto path = temp_file("fixture.nii");
    spit(path, nifti_fixture());
    const VolumeFile file = read_volume_file(path.string());
    CHECK(file.dtype == VoxelType::Int16);
    REQUIRE(file.values.rank() == 3);
    CHECK(file.values.extent(0) == 2);  // z -> d
    CHECK(file.values.extent(1) == 3);  // y -> h
    CHECK(file.values.extent(2) == 4);  // x -> w
    for (size_t i = 0; i < 24; ++i) CHECK(file.values[i] == static_cast<double>(i));
}

TEST_CASE("nifti read rejects unsupported and malformed headers") {
    const auto good = nifti_fixture();
    auto mutate = [&](std::function<void(std::vector<unsigned char>&)> fn) {
        auto bytes = good;
        fn(bytes);
        return read_error(bytes, "mut.nii");
    };

    CHECK(contains(mutate([](auto& b) { std::memcpy(b.data() + 344, "ni1\0", 4); }),
                   "two-file (.hdr/.img) form unsupported"));
    CHECK(contains(mutate([](auto& b) { std::memcpy(b.data() + 344, "nXX\0", 4); }),
                   "bad magic"));
    CHECK(contains(mutate([](auto& b) { put_le<int16_t>(b, 40, 4); }),
                   "dim[0] is 4, only 3-dimensional volumes supported"));
    CHECK(contains(mutate([](auto& b) { put_le<int16_t>(b, 48, 2); }),
                   "dim[4] is 2, multi-volume files unsupported"));
    CHECK(contains(mutate([](auto& b) { put_le<int16_t>(b, 70, 2); }),
                   "unsupported datatype code 2"));
    CHECK(contains(mutate([](auto& b) { put_le<int16_t>(b, 72, 32); }),
                   "bitpix 32 does not match datatype code 4"));
    CHECK(contains(mutate([](auto& b) { put_le<float>(b, 112, 2.0f); }),
                   "value scaling unsupported (scl_slope 2)"));
    CHECK(contains(mutate([](auto& b) { put_le<float>(b, 116, 1.0f); }),
                   "value scaling unsupported (scl_inter 1)"));
    CHECK(contains(mutate([](auto& b) { put_le<int16_t>(b, 252, 1); }),
                   "orientation unsupported (qform_code 1)"));
    CHECK(contains(mutate([](auto& b) { put_le<int16_t>(b, 254, 2); }),
                   "orientation unsupported (sform_code 2)"));
    CHECK(contains(mutate([](auto& b) { put_le<float>(b, 108, 340.0f); }),
                   "vox_offset 340 is below 352"));
    CHECK(contains(mutate([](auto& b) { put_le<float>(b, 108, 352.5f); }),
                   "vox_offset 352.5 is not an integer"));
    CHECK(contains(mutate([](auto& b) { b.pop_back(); }), "payload is 47 bytes, expected 48"));
    CHECK(contains(mutate([](auto& b) { put_le<int32_t>(b, 0, 1543503872); }),
                   "byte-swapped file unsupported"));
}

TEST_CASE("format sniffing gives clear errors for unknown files") {
    std::vector<unsigned char> garbage(64, 0xAB);
    CHECK(contains(read_error(garbage, "garbage.bin"),
                   "is neither a VVOL nor a NIfTI-1 file"));
    CHECK(contains(read_error({0x01, 0x02}, "tiny.bin"), "is neither a VVOL nor a NIfTI-1"));
    const std::string msg =
        thrown_message([] { read_volume_file("/nonexistent/path/x.vvol"); });
    CHECK(contains(msg, "cannot open '/nonexistent/path/x.vvol'"));
}

TEST_CASE("write_volume validates shape and values") {
    const auto path = temp_file("invalid.vvol");
    Tensor flat({4});
    std::string msg = thrown_message(
        [&] { write_volume(flat, path.string(), VolumeFormat::Vvol, VoxelType::Float64); });
    CHECK(contains(msg, "expected a (d, h, w) tensor, got rank 1"));

    Tensor volume({1, 1, 2});
    volume[0] = std::nan("");
    msg = thrown_message(
        [&] { write_volume(volume, path.string(), VolumeFormat::Vvol, VoxelType::Float64); });
    CHECK(contains(msg, "volume"));
    CHECK(contains(msg, "finite"));
}

TEST_CASE("normalize standardizes the positive foreground and zeros the rest") {
    Tensor volume({3, 4, 5});
    Rng rng(23);
    for (size_t i = 0; i < volume.numel(); ++i)
        volume[i] = i % 3 == 0 ? 0.0 : rng.uniform(0.5, 4.0);
    volume[7] = -2.5;

    const Tensor out = normalize(volume);
    double sum = 0.0, sq = 0.0;
    size_t n = 0;
    for (size_t i = 0; i < volume.numel(); ++i) {
        if (volume[i] > 0.0) {
            sum += out[i];
            sq += out[i] * out[i];
            ++n;
        } else {
            CHECK(out[i] == 0.0);
        }
    }
    REQUIRE(n > 0);
    const double mean = sum / static_cast<double>(n);
    const double stddev = std::sqrt(sq / static_cast<double>(n) - mean * mean);
    CHECK(std::fabs(mean) <= 1e-12);
    CHECK(std::fabs(stddev - 1.0) <= 1e-9);
}

TEST_CASE("normalize is invariant to positive affine changes of the foreground") {
    Tensor volume({2, 3, 3});
    Rng rng(5);
    for (size_t i = 0; i < volume.numel(); ++i)
        volume[i] = i % 4 == 0 ? 0.0 : rng.uniform(1.0, 2.0);

    Tensor scaled = volume;
    for (size_t i = 0; i < scaled.numel(); ++i)
        if (scaled[i] > 0.0) scaled[i] = 3.25 * scaled[i] + 7.0;

    const Tensor a = normalize(volume);
    const Tensor b = normalize(scaled);
    CHECK(oracle::max_abs_diff(a, b) <= 1e-9);
}

TEST_CASE("normalize rejects degenerate volumes") {
    Tensor none({2, 2, 2});
    for (size_t i = 0; i < none.numel(); ++i) none[i] = -1.0;
    CHECK(contains(thrown_message([&] { normalize(none); }),
                   "no positive (foreground) voxels"));

    Tensor flat({2, 2, 2});
    for (size_t i = 0; i < flat.numel(); ++i) flat[i] = 5.0;
    CHECK(contains(thrown_message([&] { normalize(flat); }), "foreground is constant"));

    Tensor vec({8});
    CHECK(contains(thrown_message([&] { normalize(vec); }), "got rank 1"));
}
