#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace vx::kernels {

// Fully resolved geometry of one 3-d convolution. Output extents are
// precomputed by the caller; kernels never re-derive or validate shapes.
struct Conv3dShape {
    size_t batch = 1;
    size_t in_ch = 1, in_d = 1, in_h = 1, in_w = 1;
    size_t out_ch = 1, k_d = 1, k_h = 1, k_w = 1;
    size_t stride_d = 1, stride_h = 1, stride_w = 1;
    size_t pad_d = 0, pad_h = 0, pad_w = 0;
    size_t out_d = 1, out_h = 1, out_w = 1;
};

// One implementation of the data-parallel inner loops. Every variant must be
// bit-identical to the scalar reference on all inputs; SIMD variants achieve
// that by vectorizing across output elements while keeping each element's
// accumulation order unchanged (separate mul and add, no fma).
struct KernelSet {
    const char* name;
    void (*conv3d_forward)(const double* in, const double* kernels, const double* bias,
                           double* out, const Conv3dShape& g);
    void (*relu_forward)(const double* x, double* y, size_t n);
    // y = g where x > 0, else 0
    void (*relu_backward)(const double* x, const double* g, double* y, size_t n);
    // y = g where x > 0 and g > 0, else 0
    void (*guided_relu_backward)(const double* x, const double* g, double* y, size_t n);
    // y += a * x
    void (*axpy)(double a, const double* x, double* y, size_t n);
};

const KernelSet& scalar_kernels();

#if defined(__x86_64__) || defined(_M_X64)
const KernelSet& avx2_kernels();
bool avx2_supported();
#endif
#if defined(__aarch64__) || defined(_M_ARM64)
const KernelSet& neon_kernels();
#endif

// The set in use. Defaults to the best supported variant; the VOXATTR_KERNELS
// environment variable (scalar|avx2|neon|auto) overrides the default.
const KernelSet& active_kernels();

// Switch sets by name; throws on an unknown or unsupported name.
void select_kernels(std::string_view name);

std::vector<std::string> available_kernel_sets();

}  // namespace vx::kernels
