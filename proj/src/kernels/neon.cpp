#if defined(__aarch64__) || defined(_M_ARM64)

#include <arm_neon.h>

#include <algorithm>

#include "vx/kernels.hpp"

#include "conv_voxel.inl"

namespace vx::kernels {

namespace {

inline float64x2_t mask_f64(uint64x2_t mask, float64x2_t v) {
    return vreinterpretq_f64_u64(vandq_u64(mask, vreinterpretq_u64_f64(v)));
}

// Two output voxels per register; same interior/border split as the AVX2
// variant, same per-voxel accumulation order as the scalar reference.
void conv3d_forward_neon(const double* in, const double* ker, const double* bias,
                         double* out, const Conv3dShape& g) {
    if (g.stride_w != 1) {
        scalar_kernels().conv3d_forward(in, ker, bias, out, g);
        return;
    }
    const size_t in_plane = g.in_h * g.in_w;
    const size_t in_vol = g.in_d * in_plane;
    const size_t k_vol = g.k_d * g.k_h * g.k_w;

    const ptrdiff_t out_w = static_cast<ptrdiff_t>(g.out_w);
    ptrdiff_t lo = static_cast<ptrdiff_t>(g.pad_w);
    ptrdiff_t hi = static_cast<ptrdiff_t>(g.in_w) + static_cast<ptrdiff_t>(g.pad_w) -
                   static_cast<ptrdiff_t>(g.k_w) + 1;
    lo = std::clamp<ptrdiff_t>(lo, 0, out_w);
    hi = std::clamp<ptrdiff_t>(hi, lo, out_w);

    for (size_t b = 0; b < g.batch; ++b)
        for (size_t oc = 0; oc < g.out_ch; ++oc) {
            const double bv = bias[oc];
            for (size_t od = 0; od < g.out_d; ++od)
                for (size_t oh = 0; oh < g.out_h; ++oh) {
                    double* out_row = out + (((b * g.out_ch + oc) * g.out_d + od) * g.out_h + oh) * g.out_w;
                    ptrdiff_t ow = 0;
                    for (; ow < lo; ++ow)
                        out_row[ow] = detail::conv3d_voxel(in, ker, bv, g, b, oc, od, oh,
                                                           static_cast<size_t>(ow));
                    for (; ow + 2 <= hi; ow += 2) {
                        float64x2_t acc = vdupq_n_f64(bv);
                        for (size_t ic = 0; ic < g.in_ch; ++ic) {
                            const double* in_c = in + (b * g.in_ch + ic) * in_vol;
                            const double* ker_c = ker + (oc * g.in_ch + ic) * k_vol;
                            for (size_t kd = 0; kd < g.k_d; ++kd) {
                                const ptrdiff_t id =
                                    static_cast<ptrdiff_t>(od * g.stride_d + kd) -
                                    static_cast<ptrdiff_t>(g.pad_d);
                                if (id < 0 || id >= static_cast<ptrdiff_t>(g.in_d)) continue;
                                for (size_t kh = 0; kh < g.k_h; ++kh) {
                                    const ptrdiff_t ih =
                                        static_cast<ptrdiff_t>(oh * g.stride_h + kh) -
                                        static_cast<ptrdiff_t>(g.pad_h);
                                    if (ih < 0 || ih >= static_cast<ptrdiff_t>(g.in_h)) continue;
                                    const double* in_row = in_c +
                                                           static_cast<size_t>(id) * in_plane +
                                                           static_cast<size_t>(ih) * g.in_w;
                                    const double* ker_row = ker_c + (kd * g.k_h + kh) * g.k_w;
                                    for (size_t kw = 0; kw < g.k_w; ++kw) {
                                        const ptrdiff_t iw0 =
                                            ow - static_cast<ptrdiff_t>(g.pad_w) +
                                            static_cast<ptrdiff_t>(kw);
                                        const float64x2_t x = vld1q_f64(in_row + iw0);
                                        const float64x2_t k = vdupq_n_f64(ker_row[kw]);
                                        acc = vaddq_f64(acc, vmulq_f64(x, k));
                                    }
                                }
                            }
                        }
                        vst1q_f64(out_row + ow, acc);
                    }
                    for (; ow < out_w; ++ow)
                        out_row[ow] = detail::conv3d_voxel(in, ker, bv, g, b, oc, od, oh,
                                                           static_cast<size_t>(ow));
                }
        }
}

void relu_forward_neon(const double* x, double* y, size_t n) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t xv = vld1q_f64(x + i);
        vst1q_f64(y + i, mask_f64(vcgtq_f64(xv, zero), xv));
    }
    for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward_neon(const double* x, const double* g, double* y, size_t n) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(y + i, mask_f64(vcgtq_f64(vld1q_f64(x + i), zero), vld1q_f64(g + i)));
    for (; i < n; ++i) y[i] = x[i] > 0.0 ? g[i] : 0.0;
}

void guided_relu_backward_neon(const double* x, const double* g, double* y, size_t n) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t gv = vld1q_f64(g + i);
        const uint64x2_t mask =
            vandq_u64(vcgtq_f64(vld1q_f64(x + i), zero), vcgtq_f64(gv, zero));
        vst1q_f64(y + i, mask_f64(mask, gv));
    }
    for (; i < n; ++i) y[i] = (x[i] > 0.0 && g[i] > 0.0) ? g[i] : 0.0;
}

void axpy_neon(double a, const double* x, double* y, size_t n) {
    const float64x2_t av = vdupq_n_f64(a);
    size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t t = vmulq_f64(av, vld1q_f64(x + i));
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), t));
    }
    for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

}  // namespace

const KernelSet& neon_kernels() {
    static const KernelSet set{
        "neon",
        conv3d_forward_neon,
        relu_forward_neon,
        relu_backward_neon,
        guided_relu_backward_neon,
        axpy_neon,
    };
    return set;
}

}  // namespace vx::kernels

#endif  // aarch64
