// Reference computation of a single convolution output voxel. Both the scalar
// kernel and the border paths of the SIMD kernels use this exact function, so
// every voxel is accumulated in the same term order everywhere.

namespace vx::kernels::detail {

inline double conv3d_voxel(const double* in, const double* ker, double bias_v,
                           const Conv3dShape& g, size_t b, size_t oc,
                           size_t od, size_t oh, size_t ow) {
    const size_t in_plane = g.in_h * g.in_w;
    const size_t in_vol = g.in_d * in_plane;
    const size_t k_vol = g.k_d * g.k_h * g.k_w;
    double acc = bias_v;
    for (size_t ic = 0; ic < g.in_ch; ++ic) {
        const double* in_c = in + (b * g.in_ch + ic) * in_vol;
        const double* ker_c = ker + (oc * g.in_ch + ic) * k_vol;
        for (size_t kd = 0; kd < g.k_d; ++kd) {
            const ptrdiff_t id = static_cast<ptrdiff_t>(od * g.stride_d + kd) -
                                 static_cast<ptrdiff_t>(g.pad_d);
            if (id < 0 || id >= static_cast<ptrdiff_t>(g.in_d)) continue;
            for (size_t kh = 0; kh < g.k_h; ++kh) {
                const ptrdiff_t ih = static_cast<ptrdiff_t>(oh * g.stride_h + kh) -
                                     static_cast<ptrdiff_t>(g.pad_h);
                if (ih < 0 || ih >= static_cast<ptrdiff_t>(g.in_h)) continue;
                const double* in_row = in_c + static_cast<size_t>(id) * in_plane +
                                       static_cast<size_t>(ih) * g.in_w;
                const double* ker_row = ker_c + (kd * g.k_h + kh) * g.k_w;
                for (size_t kw = 0; kw < g.k_w; ++kw) {
                    const ptrdiff_t iw = static_cast<ptrdiff_t>(ow * g.stride_w + kw) -
                                         static_cast<ptrdiff_t>(g.pad_w);
                    if (iw < 0 || iw >= static_cast<ptrdiff_t>(g.in_w)) continue;
                    acc += in_row[static_cast<size_t>(iw)] * ker_row[kw];
                }
            }
        }
    }
    return acc;
}

}  // namespace vx::kernels::detail
