#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <algorithm>

#include "vx/kernels.hpp"

#include "conv_voxel.inl"

namespace vx::kernels {

namespace {

// Four output voxels per register. Each lane accumulates its voxel's terms in
// the exact order of the scalar reference, with separate mul and add, so the
// result is bit-identical to scalar_kernels(). The vector path only covers
// the ow range where the whole kernel width footprint is in bounds; border
// voxels and strided-width cases fall back to the shared scalar voxel code.
void conv3d_forward_avx2(const double* in, const double* ker, const double* bias,
                         double* out, const Conv3dShape& g) {
    if (g.stride_w != 1) {
        scalar_kernels().conv3d_forward(in, ker, bias, out, g);
        return;
    }
    const size_t in_plane = g.in_h * g.in_w;
    const size_t in_vol = g.in_d * in_plane;
    const size_t k_vol = g.k_d * g.k_h * g.k_w;

    const ptrdiff_t out_w = static_cast<ptrdiff_t>(g.out_w);
    // ow in [lo, hi) has iw = ow - pad_w + kw inside [0, in_w) for every kw.
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
                    for (; ow + 4 <= hi; ow += 4) {
                        __m256d acc = _mm256_set1_pd(bv);
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
                                        const __m256d x =
                                            _mm256_loadu_pd(in_row + iw0);
                                        const __m256d k = _mm256_set1_pd(ker_row[kw]);
                                        acc = _mm256_add_pd(acc, _mm256_mul_pd(x, k));
                                    }
                                }
                            }
                        }
                        _mm256_storeu_pd(out_row + ow, acc);
                    }
                    for (; ow < out_w; ++ow)
                        out_row[ow] = detail::conv3d_voxel(in, ker, bv, g, b, oc, od, oh,
                                                           static_cast<size_t>(ow));
                }
        }
}

void relu_forward_avx2(const double* x, double* y, size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
    for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward_avx2(const double* x, const double* g, double* y, size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
        _mm256_storeu_pd(y + i, _mm256_and_pd(mask, _mm256_loadu_pd(g + i)));
    }
    for (; i < n; ++i) y[i] = x[i] > 0.0 ? g[i] : 0.0;
}

void guided_relu_backward_avx2(const double* x, const double* g, double* y, size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d gv = _mm256_loadu_pd(g + i);
        const __m256d mask =
            _mm256_and_pd(_mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ),
                          _mm256_cmp_pd(gv, zero, _CMP_GT_OQ));
        _mm256_storeu_pd(y + i, _mm256_and_pd(mask, gv));
    }
    for (; i < n; ++i) y[i] = (x[i] > 0.0 && g[i] > 0.0) ? g[i] : 0.0;
}

void axpy_avx2(double a, const double* x, double* y, size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d t = _mm256_mul_pd(av, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), t));
    }
    for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

}  // namespace

const KernelSet& avx2_kernels() {
    static const KernelSet set{
        "avx2",
        conv3d_forward_avx2,
        relu_forward_avx2,
        relu_backward_avx2,
        guided_relu_backward_avx2,
        axpy_avx2,
    };
    return set;
}

bool avx2_supported() { return __builtin_cpu_supports("avx2"); }

}  // namespace vx::kernels

#endif  // x86_64
