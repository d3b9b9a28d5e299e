#include "vx/kernels.hpp"

#include "conv_voxel.inl"

namespace vx::kernels {

namespace {

void conv3d_forward_scalar(const double* in, const double* ker, const double* bias,
                           double* out, const Conv3dShape& g) {
    double* o = out;
    for (size_t b = 0; b < g.batch; ++b)
        for (size_t oc = 0; oc < g.out_ch; ++oc) {
            const double bv = bias[oc];
            for (size_t od = 0; od < g.out_d; ++od)
                for (size_t oh = 0; oh < g.out_h; ++oh)
                    for (size_t ow = 0; ow < g.out_w; ++ow)
                        *o++ = detail::conv3d_voxel(in, ker, bv, g, b, oc, od, oh, ow);
        }
}

void relu_forward_scalar(const double* x, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward_scalar(const double* x, const double* g, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? g[i] : 0.0;
}

void guided_relu_backward_scalar(const double* x, const double* g, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = (x[i] > 0.0 && g[i] > 0.0) ? g[i] : 0.0;
}

void axpy_scalar(double a, const double* x, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

}  // namespace

const KernelSet& scalar_kernels() {
    static const KernelSet set{
        "scalar",
        conv3d_forward_scalar,
        relu_forward_scalar,
        relu_backward_scalar,
        guided_relu_backward_scalar,
        axpy_scalar,
    };
    return set;
}

}  // namespace vx::kernels
