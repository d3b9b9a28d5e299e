#include "vx/volume_io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "volume formats are little-endian and so must the host be");

namespace vx {

namespace {

template <typename T>
T read_le(const std::vector<unsigned char>& buf, size_t off) {
    T v;
    std::memcpy(&v, buf.data() + off, sizeof v);
    return v;
}

template <typename T>
void write_le(std::vector<unsigned char>& buf, size_t off, T v) {
    std::memcpy(buf.data() + off, &v, sizeof v);
}

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("volume: cannot open '" + path + "'");
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    return buf;
}

void write_file(const std::string& path, const std::vector<unsigned char>& buf) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("volume: cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
    if (!out) fail("volume: write failed for '" + path + "'");
}

std::string fmt_float(double v) {
    // Trim the noise digits a plain to_string would add.
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// Payload decoding/encoding between the on-disk dtype and f64 voxels.
Tensor decode_payload(const unsigned char* bytes, std::vector<size_t> shape, VoxelType dtype) {
    Tensor out(std::move(shape));
    const size_t n = out.numel();
    switch (dtype) {
        case VoxelType::Int16:
            for (size_t i = 0; i < n; ++i) {
                int16_t v;
                std::memcpy(&v, bytes + i * 2, 2);
                out[i] = v;
            }
            break;
        case VoxelType::Float32:
            for (size_t i = 0; i < n; ++i) {
                float v;
                std::memcpy(&v, bytes + i * 4, 4);
                out[i] = v;
            }
            break;
        case VoxelType::Float64:
            std::memcpy(out.data(), bytes, n * 8);
            break;
    }
    check_finite(out, "volume payload");
    return out;
}

void encode_payload(const Tensor& volume, VoxelType dtype, std::vector<unsigned char>& buf,
                    size_t off) {
    const size_t n = volume.numel();
    switch (dtype) {
        case VoxelType::Int16:
            for (size_t i = 0; i < n; ++i) {
                const double v = volume[i];
                if (v != std::floor(v) || v < -32768.0 || v > 32767.0)
                    fail("volume: value " + fmt_float(v) + " at voxel " + std::to_string(i) +
                         " is not representable as int16");
                const int16_t s = static_cast<int16_t>(v);
                std::memcpy(buf.data() + off + i * 2, &s, 2);
            }
            break;
        case VoxelType::Float32:
            for (size_t i = 0; i < n; ++i) {
                const float f = static_cast<float>(volume[i]);
                std::memcpy(buf.data() + off + i * 4, &f, 4);
            }
            break;
        case VoxelType::Float64:
            std::memcpy(buf.data() + off, volume.data(), n * 8);
            break;
    }
}

constexpr size_t kVvolHeader = 18;  // magic 4, version 1, dtype 1, extents 3 x u32

VolumeFile read_vvol(const std::vector<unsigned char>& buf, const std::string& path) {
    if (buf.size() < kVvolHeader)
        fail("vvol: '" + path + "' is truncated (" + std::to_string(buf.size()) + " bytes)");
    if (buf[4] != 0x01) fail("vvol: unsupported version " + std::to_string(buf[4]));
    const uint8_t code = buf[5];
    if (code < 1 || code > 3) fail("vvol: unknown dtype code " + std::to_string(code));
    const VoxelType dtype = static_cast<VoxelType>(code);
    const size_t d = read_le<uint32_t>(buf, 6);
    const size_t h = read_le<uint32_t>(buf, 10);
    const size_t w = read_le<uint32_t>(buf, 14);
    if (d == 0 || h == 0 || w == 0) fail("vvol: zero extent in header");
    const size_t expect = d * h * w * voxel_type_size(dtype);
    if (buf.size() - kVvolHeader != expect)
        fail("vvol: payload is " + std::to_string(buf.size() - kVvolHeader) +
             " bytes, expected " + std::to_string(expect));
    return VolumeFile{decode_payload(buf.data() + kVvolHeader, {d, h, w}, dtype), dtype};
}

void write_vvol(const Tensor& volume, VoxelType dtype, const std::string& path) {
    std::vector<unsigned char> buf(kVvolHeader + volume.numel() * voxel_type_size(dtype));
    std::memcpy(buf.data(), "VVOL", 4);
    buf[4] = 0x01;
    buf[5] = static_cast<uint8_t>(dtype);
    write_le<uint32_t>(buf, 6, static_cast<uint32_t>(volume.extent(0)));
    write_le<uint32_t>(buf, 10, static_cast<uint32_t>(volume.extent(1)));
    write_le<uint32_t>(buf, 14, static_cast<uint32_t>(volume.extent(2)));
    encode_payload(volume, dtype, buf, kVvolHeader);
    write_file(path, buf);
}

// NIfTI-1 field offsets (the subset this reader understands).
constexpr size_t kNSizeofHdr = 0;    // int32, must be 348
constexpr size_t kNDim = 40;         // int16[8]
constexpr size_t kNDatatype = 70;    // int16
constexpr size_t kNBitpix = 72;      // int16
constexpr size_t kNPixdim = 76;      // float[8]
constexpr size_t kNVoxOffset = 108;  // float
constexpr size_t kNSclSlope = 112;   // float
constexpr size_t kNSclInter = 116;   // float
constexpr size_t kNQformCode = 252;  // int16
constexpr size_t kNSformCode = 254;  // int16
constexpr size_t kNMagic = 344;      // char[4]

VoxelType dtype_from_nifti_code(int16_t code) {
    switch (code) {
        case 4: return VoxelType::Int16;
        case 16: return VoxelType::Float32;
        case 64: return VoxelType::Float64;
    }
    fail("nifti: unsupported datatype code " + std::to_string(code));
}

int16_t nifti_code(VoxelType t) {
    switch (t) {
        case VoxelType::Int16: return 4;
        case VoxelType::Float32: return 16;
        case VoxelType::Float64: return 64;
    }
    fail("nifti: bad dtype enum value");
}

VolumeFile read_nifti(const std::vector<unsigned char>& buf, const std::string& path) {
    if (buf.size() < 348)
        fail("nifti: '" + path + "' is shorter than the 348-byte header");
    const char* magic = reinterpret_cast<const char*>(buf.data() + kNMagic);
    if (std::memcmp(magic, "n+1\0", 4) != 0) {
        if (std::memcmp(magic, "ni1\0", 4) == 0)
            fail("nifti: two-file (.hdr/.img) form unsupported");
        fail("nifti: bad magic, expected \"n+1\"");
    }
    const int16_t ndim = read_le<int16_t>(buf, kNDim);
    if (ndim != 3)
        fail("nifti: dim[0] is " + std::to_string(ndim) + ", only 3-dimensional volumes supported");
    size_t dims[3];
    for (size_t a = 1; a <= 3; ++a) {
        const int16_t e = read_le<int16_t>(buf, kNDim + 2 * a);
        if (e < 1) fail("nifti: dim[" + std::to_string(a) + "] is " + std::to_string(e));
        dims[a - 1] = static_cast<size_t>(e);
    }
    for (size_t a = 4; a <= 7; ++a) {
        const int16_t e = read_le<int16_t>(buf, kNDim + 2 * a);
        if (e > 1)
            fail("nifti: dim[" + std::to_string(a) + "] is " + std::to_string(e) +
                 ", multi-volume files unsupported");
    }
    const int16_t dt_code = read_le<int16_t>(buf, kNDatatype);
    const VoxelType dtype = dtype_from_nifti_code(dt_code);
    const int16_t bitpix = read_le<int16_t>(buf, kNBitpix);
    if (static_cast<size_t>(bitpix) != voxel_type_size(dtype) * 8)
        fail("nifti: bitpix " + std::to_string(bitpix) + " does not match datatype code " +
             std::to_string(dt_code));
    const float slope = read_le<float>(buf, kNSclSlope);
    const float inter = read_le<float>(buf, kNSclInter);
    if (slope != 0.0f && slope != 1.0f)
        fail("nifti: value scaling unsupported (scl_slope " + fmt_float(slope) + ")");
    if (inter != 0.0f)
        fail("nifti: value scaling unsupported (scl_inter " + fmt_float(inter) + ")");
    for (auto [off, name] : {std::pair<size_t, const char*>{kNQformCode, "qform_code"},
                             {kNSformCode, "sform_code"}}) {
        const int16_t code = read_le<int16_t>(buf, off);
        if (code != 0)
            fail("nifti: orientation unsupported (" + std::string(name) + " " +
                 std::to_string(code) + ")");
    }
    const float off_f = read_le<float>(buf, kNVoxOffset);
    if (!(off_f >= 352.0f)) fail("nifti: vox_offset " + fmt_float(off_f) + " is below 352");
    if (off_f != std::floor(off_f))
        fail("nifti: vox_offset " + fmt_float(off_f) + " is not an integer");
    const size_t offset = static_cast<size_t>(off_f);
    if (buf.size() < offset)
        fail("nifti: file ends before vox_offset " + std::to_string(offset));
    // Tensor axes are (d, h, w) with w fastest; NIfTI stores x fastest, so
    // x->w, y->h, z->d and the payload copies through unchanged.
    const size_t d = dims[2], h = dims[1], w = dims[0];
    const size_t expect = d * h * w * voxel_type_size(dtype);
    if (buf.size() - offset != expect)
        fail("nifti: payload is " + std::to_string(buf.size() - offset) + " bytes, expected " +
             std::to_string(expect));
    return VolumeFile{decode_payload(buf.data() + offset, {d, h, w}, dtype), dtype};
}

void write_nifti(const Tensor& volume, VoxelType dtype, const std::string& path) {
    constexpr size_t kOffset = 352;
    std::vector<unsigned char> buf(kOffset + volume.numel() * voxel_type_size(dtype), 0);
    write_le<int32_t>(buf, kNSizeofHdr, 348);
    write_le<int16_t>(buf, kNDim, 3);
    write_le<int16_t>(buf, kNDim + 2, static_cast<int16_t>(volume.extent(2)));  // x = w
    write_le<int16_t>(buf, kNDim + 4, static_cast<int16_t>(volume.extent(1)));  // y = h
    write_le<int16_t>(buf, kNDim + 6, static_cast<int16_t>(volume.extent(0)));  // z = d
    for (size_t a = 4; a <= 7; ++a) write_le<int16_t>(buf, kNDim + 2 * a, 1);
    write_le<int16_t>(buf, kNDatatype, nifti_code(dtype));
    write_le<int16_t>(buf, kNBitpix, static_cast<int16_t>(voxel_type_size(dtype) * 8));
    for (size_t a = 1; a <= 3; ++a) write_le<float>(buf, kNPixdim + 4 * a, 1.0f);
    write_le<float>(buf, kNVoxOffset, static_cast<float>(kOffset));
    std::memcpy(buf.data() + kNMagic, "n+1\0", 4);
    encode_payload(volume, dtype, buf, kOffset);
    write_file(path, buf);
}

}  // namespace

const char* voxel_type_name(VoxelType t) {
    switch (t) {
        case VoxelType::Int16: return "int16";
        case VoxelType::Float32: return "float32";
        case VoxelType::Float64: return "float64";
    }
    fail("volume: bad dtype enum value");
}

size_t voxel_type_size(VoxelType t) {
    switch (t) {
        case VoxelType::Int16: return 2;
        case VoxelType::Float32: return 4;
        case VoxelType::Float64: return 8;
    }
    fail("volume: bad dtype enum value");
}

VolumeFile read_volume_file(const std::string& path) {
    const auto buf = read_file(path);
    if (buf.size() >= 4 && std::memcmp(buf.data(), "VVOL", 4) == 0) return read_vvol(buf, path);
    if (buf.size() >= 4) {
        const int32_t sizeof_hdr = read_le<int32_t>(buf, 0);
        if (sizeof_hdr == 348) return read_nifti(buf, path);
        if (sizeof_hdr == 1543503872) fail("nifti: byte-swapped file unsupported");
    }
    fail("volume: '" + path + "' is neither a VVOL nor a NIfTI-1 file");
}

Tensor read_volume(const std::string& path) { return read_volume_file(path).values; }

void write_volume(const Tensor& volume, const std::string& path, VolumeFormat format,
                  VoxelType dtype) {
    if (volume.rank() != 3)
        fail("volume: expected a (d, h, w) tensor, got rank " + std::to_string(volume.rank()));
    check_finite(volume, "volume");
    for (size_t a = 0; a < 3; ++a)
        if (volume.extent(a) > 32767 && format == VolumeFormat::Nifti)
            fail("nifti: extent " + std::to_string(volume.extent(a)) +
                 " exceeds the int16 dim field");
    if (format == VolumeFormat::Vvol)
        write_vvol(volume, dtype, path);
    else
        write_nifti(volume, dtype, path);
}

Tensor normalize(const Tensor& volume) {
    if (volume.rank() != 3)
        fail("normalize: expected a (d, h, w) tensor, got rank " +
             std::to_string(volume.rank()));
    check_finite(volume, "normalize input");
    double sum = 0.0;
    size_t n = 0;
    for (size_t i = 0; i < volume.numel(); ++i)
        if (volume[i] > 0.0) {
            sum += volume[i];
            ++n;
        }
    if (n == 0) fail("normalize: volume has no positive (foreground) voxels");
    const double mean = sum / static_cast<double>(n);
    double var = 0.0;
    for (size_t i = 0; i < volume.numel(); ++i)
        if (volume[i] > 0.0) var += (volume[i] - mean) * (volume[i] - mean);
    var /= static_cast<double>(n);
    if (var == 0.0) fail("normalize: foreground is constant");
    const double inv_sigma = 1.0 / std::sqrt(var);
    Tensor out = Tensor::zeros(volume.shape());
    for (size_t i = 0; i < volume.numel(); ++i)
        if (volume[i] > 0.0) out[i] = (volume[i] - mean) * inv_sigma;
    return out;
}

}  // namespace vx
