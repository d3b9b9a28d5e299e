#pragma once

#include <cstdint>
#include <string>

#include "vx/tensor.hpp"

namespace vx {

enum class VoxelType : uint8_t { Int16 = 1, Float32 = 2, Float64 = 3 };
enum class VolumeFormat { Vvol, Nifti };

const char* voxel_type_name(VoxelType t);
size_t voxel_type_size(VoxelType t);

struct VolumeFile {
    Tensor values;  // (d, h, w), converted to f64 losslessly
    VoxelType dtype = VoxelType::Float64;
};

// Reads a VVOL or NIfTI-1 subset file, deciding by content. Anything outside
// the supported subset is rejected with a diagnostic naming the offending
// field; silent misreads are worse than unsupported-feature errors.
VolumeFile read_volume_file(const std::string& path);
Tensor read_volume(const std::string& path);

// int16 requires integral values in range; float32 rounds to single
// precision (re-writing data read from a float32 file is lossless).
void write_volume(const Tensor& volume, const std::string& path, VolumeFormat format,
                  VoxelType dtype = VoxelType::Float64);

// Z-score over the foreground (strictly positive voxels, population
// variance); everything else becomes 0. The mask comes from the input values.
Tensor normalize(const Tensor& volume);

}  // namespace vx
