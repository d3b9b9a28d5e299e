#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include "vx/kernels.hpp"
#include "vx/tensor.hpp"

namespace vx::kernels {

namespace {

const KernelSet* best_supported() {
#if defined(__x86_64__) || defined(_M_X64)
    if (avx2_supported()) return &avx2_kernels();
#endif
#if defined(__aarch64__) || defined(_M_ARM64)
    return &neon_kernels();
#endif
    return &scalar_kernels();
}

const KernelSet* lookup(std::string_view name) {
    if (name == "auto") return best_supported();
    if (name == "scalar") return &scalar_kernels();
#if defined(__x86_64__) || defined(_M_X64)
    if (name == "avx2") {
        if (!avx2_supported()) fail("kernels: avx2 not supported on this cpu");
        return &avx2_kernels();
    }
#endif
#if defined(__aarch64__) || defined(_M_ARM64)
    if (name == "neon") return &neon_kernels();
#endif
    fail("kernels: unknown kernel set '" + std::string(name) + "'");
}

const KernelSet* initial() {
    if (const char* env = std::getenv("VOXATTR_KERNELS"); env && *env) return lookup(env);
    return best_supported();
}

const KernelSet*& active_slot() {
    static const KernelSet* active = initial();
    return active;
}

}  // namespace

const KernelSet& active_kernels() { return *active_slot(); }

void select_kernels(std::string_view name) { active_slot() = lookup(name); }

std::vector<std::string> available_kernel_sets() {
    std::vector<std::string> names{"scalar"};
#if defined(__x86_64__) || defined(_M_X64)
    if (avx2_supported()) names.push_back("avx2");
#endif
#if defined(__aarch64__) || defined(_M_ARM64)
    names.push_back("neon");
#endif
    return names;
}

}  // namespace vx::kernels
