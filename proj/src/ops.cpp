#include "vx/ops.hpp"

#include <cmath>
#include <string>

#include "vx/kernels.hpp"

namespace vx {

namespace {

void require_rank(const Tensor& t, size_t rank, const char* op, const char* what) {
    if (t.rank() != rank)
        fail(std::string(op) + ": " + what + " has rank " + std::to_string(t.rank()) +
             ", expected " + std::to_string(rank));
}

void check_conv_params(const ConvParams& p) {
    require_rank(p.kernels, 5, "conv3d", "kernels tensor");
    require_rank(p.bias, 1, "conv3d", "bias tensor");
    if (p.bias.extent(0) != p.kernels.extent(0))
        fail("conv3d: bias extent " + std::to_string(p.bias.extent(0)) +
             " does not match out_channels " + std::to_string(p.kernels.extent(0)));
    for (size_t a = 0; a < 3; ++a)
        if (p.stride[a] == 0) fail("conv3d: stride must be positive");
    check_finite(p.kernels, "conv3d kernels");
    check_finite(p.bias, "conv3d bias");
}

kernels::Conv3dShape conv_shape(const Tensor& input, const ConvParams& p) {
    kernels::Conv3dShape g;
    g.batch = input.extent(0);
    g.in_ch = input.extent(1);
    g.in_d = input.extent(2);
    g.in_h = input.extent(3);
    g.in_w = input.extent(4);
    g.out_ch = p.kernels.extent(0);
    if (g.in_ch != p.kernels.extent(1))
        fail("conv3d: input channels " + std::to_string(g.in_ch) +
             " do not match kernel in_channels " + std::to_string(p.kernels.extent(1)));
    g.k_d = p.kernels.extent(2);
    g.k_h = p.kernels.extent(3);
    g.k_w = p.kernels.extent(4);
    g.stride_d = p.stride[0];
    g.stride_h = p.stride[1];
    g.stride_w = p.stride[2];
    g.pad_d = p.pad[0];
    g.pad_h = p.pad[1];
    g.pad_w = p.pad[2];
    g.out_d = conv_out_extent(g.in_d, g.k_d, g.stride_d, g.pad_d, "conv3d depth");
    g.out_h = conv_out_extent(g.in_h, g.k_h, g.stride_h, g.pad_h, "conv3d height");
    g.out_w = conv_out_extent(g.in_w, g.k_w, g.stride_w, g.pad_w, "conv3d width");
    return g;
}

}  // namespace

size_t conv_out_extent(size_t in, size_t k, size_t stride, size_t pad, const char* axis) {
    if (stride == 0) fail(std::string(axis) + ": stride must be positive");
    const size_t span = in + 2 * pad;
    if (span < k)
        fail(std::string(axis) + ": window " + std::to_string(k) + " exceeds padded extent " +
             std::to_string(span));
    if ((span - k) % stride != 0)
        fail(std::string(axis) + ": (in " + std::to_string(in) + " + 2*pad " +
             std::to_string(pad) + " - window " + std::to_string(k) +
             ") is not a multiple of stride " + std::to_string(stride));
    return (span - k) / stride + 1;
}

Tensor conv3d_forward(const Tensor& input, const ConvParams& p) {
    require_rank(input, 5, "conv3d", "input");
    check_conv_params(p);
    check_finite(input, "conv3d input");
    const auto g = conv_shape(input, p);
    Tensor out(std::vector<size_t>{g.batch, g.out_ch, g.out_d, g.out_h, g.out_w});
    kernels::active_kernels().conv3d_forward(input.data(), p.kernels.data(), p.bias.data(),
                                             out.data(), g);
    check_finite(out, "conv3d output");
    return out;
}

Tensor conv3d_backward_data(const std::vector<size_t>& input_shape, const ConvParams& p,
                            const Tensor& grad_out) {
    Tensor probe(input_shape, std::vector<double>(shape_numel(input_shape), 0.0));
    require_rank(probe, 5, "conv3d", "input");
    check_conv_params(p);
    const auto g = conv_shape(probe, p);
    const std::vector<size_t> want{g.batch, g.out_ch, g.out_d, g.out_h, g.out_w};
    if (grad_out.shape() != want)
        fail("conv3d: grad_out shape " + shape_str(grad_out.shape()) +
             " does not match output shape " + shape_str(want));
    check_finite(grad_out, "conv3d grad_out");

    Tensor grad_input = Tensor::zeros(input_shape);
    const double* go = grad_out.data();
    const double* ker = p.kernels.data();
    double* gi = grad_input.data();
    const size_t in_plane = g.in_h * g.in_w;
    const size_t in_vol = g.in_d * in_plane;
    const size_t k_vol = g.k_d * g.k_h * g.k_w;
    size_t o = 0;
    for (size_t b = 0; b < g.batch; ++b)
        for (size_t oc = 0; oc < g.out_ch; ++oc)
            for (size_t od = 0; od < g.out_d; ++od)
                for (size_t oh = 0; oh < g.out_h; ++oh)
                    for (size_t ow = 0; ow < g.out_w; ++ow, ++o) {
                        const double gv = go[o];
                        if (gv == 0.0) continue;
                        for (size_t ic = 0; ic < g.in_ch; ++ic) {
                            double* gi_c = gi + (b * g.in_ch + ic) * in_vol;
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
                                    double* gi_row = gi_c + static_cast<size_t>(id) * in_plane +
                                                     static_cast<size_t>(ih) * g.in_w;
                                    const double* ker_row = ker_c + (kd * g.k_h + kh) * g.k_w;
                                    for (size_t kw = 0; kw < g.k_w; ++kw) {
                                        const ptrdiff_t iw =
                                            static_cast<ptrdiff_t>(ow * g.stride_w + kw) -
                                            static_cast<ptrdiff_t>(g.pad_w);
                                        if (iw < 0 || iw >= static_cast<ptrdiff_t>(g.in_w))
                                            continue;
                                        gi_row[static_cast<size_t>(iw)] += ker_row[kw] * gv;
                                    }
                                }
                            }
                        }
                    }
    check_finite(grad_input, "conv3d grad_input");
    return grad_input;
}

ConvGrads conv3d_backward(const Tensor& input, const ConvParams& p, const Tensor& grad_out) {
    require_rank(input, 5, "conv3d", "input");
    check_finite(input, "conv3d input");
    ConvGrads grads;
    grads.input = conv3d_backward_data(input.shape(), p, grad_out);
    grads.kernels = Tensor::zeros(p.kernels.shape());
    grads.bias = Tensor::zeros(p.bias.shape());

    const auto g = conv_shape(input, p);
    const double* go = grad_out.data();
    const double* in = input.data();
    double* gk = grads.kernels.data();
    double* gb = grads.bias.data();
    const size_t in_plane = g.in_h * g.in_w;
    const size_t in_vol = g.in_d * in_plane;
    const size_t k_vol = g.k_d * g.k_h * g.k_w;
    size_t o = 0;
    for (size_t b = 0; b < g.batch; ++b)
        for (size_t oc = 0; oc < g.out_ch; ++oc)
            for (size_t od = 0; od < g.out_d; ++od)
                for (size_t oh = 0; oh < g.out_h; ++oh)
                    for (size_t ow = 0; ow < g.out_w; ++ow, ++o) {
                        const double gv = go[o];
                        gb[oc] += gv;
                        if (gv == 0.0) continue;
                        for (size_t ic = 0; ic < g.in_ch; ++ic) {
                            const double* in_c = in + (b * g.in_ch + ic) * in_vol;
                            double* gk_c = gk + (oc * g.in_ch + ic) * k_vol;
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
                                    double* gk_row = gk_c + (kd * g.k_h + kh) * g.k_w;
                                    for (size_t kw = 0; kw < g.k_w; ++kw) {
                                        const ptrdiff_t iw =
                                            static_cast<ptrdiff_t>(ow * g.stride_w + kw) -
                                            static_cast<ptrdiff_t>(g.pad_w);
                                        if (iw < 0 || iw >= static_cast<ptrdiff_t>(g.in_w))
                                            continue;
                                        gk_row[kw] += in_row[static_cast<size_t>(iw)] * gv;
                                    }
                                }
                            }
                        }
                    }
    check_finite(grads.kernels, "conv3d grad_kernels");
    check_finite(grads.bias, "conv3d grad_bias");
    return grads;
}

MaxPoolResult maxpool3d_forward(const Tensor& input, const PoolParams& p) {
    require_rank(input, 5, "maxpool3d", "input");
    check_finite(input, "maxpool3d input");
    const size_t batch = input.extent(0), ch = input.extent(1);
    const size_t in_d = input.extent(2), in_h = input.extent(3), in_w = input.extent(4);
    const size_t out_d = conv_out_extent(in_d, p.window[0], p.stride[0], 0, "maxpool3d depth");
    const size_t out_h = conv_out_extent(in_h, p.window[1], p.stride[1], 0, "maxpool3d height");
    const size_t out_w = conv_out_extent(in_w, p.window[2], p.stride[2], 0, "maxpool3d width");

    MaxPoolResult r{Tensor(std::vector<size_t>{batch, ch, out_d, out_h, out_w}), {}};
    r.argmax.resize(r.output.numel());
    const double* in = input.data();
    double* out = r.output.data();
    const size_t in_plane = in_h * in_w;
    const size_t in_vol = in_d * in_plane;
    size_t o = 0;
    for (size_t b = 0; b < batch; ++b)
        for (size_t c = 0; c < ch; ++c) {
            const size_t base = (b * ch + c) * in_vol;
            for (size_t od = 0; od < out_d; ++od)
                for (size_t oh = 0; oh < out_h; ++oh)
                    for (size_t ow = 0; ow < out_w; ++ow, ++o) {
                        double best = 0.0;
                        size_t best_i = 0;
                        bool first = true;
                        // Scan order is ascending linear index, so a strict >
                        // keeps the smallest index on ties.
                        for (size_t kd = 0; kd < p.window[0]; ++kd)
                            for (size_t kh = 0; kh < p.window[1]; ++kh)
                                for (size_t kw = 0; kw < p.window[2]; ++kw) {
                                    const size_t i = base +
                                                     (od * p.stride[0] + kd) * in_plane +
                                                     (oh * p.stride[1] + kh) * in_w +
                                                     (ow * p.stride[2] + kw);
                                    if (first || in[i] > best) {
                                        best = in[i];
                                        best_i = i;
                                        first = false;
                                    }
                                }
                        out[o] = best;
                        r.argmax[o] = best_i;
                    }
        }
    return r;
}

Tensor maxpool3d_backward(const std::vector<size_t>& argmax, const Tensor& grad_out,
                          const std::vector<size_t>& input_shape) {
    if (argmax.size() != grad_out.numel())
        fail("maxpool3d: argmax has " + std::to_string(argmax.size()) + " entries, grad_out has " +
             std::to_string(grad_out.numel()));
    check_finite(grad_out, "maxpool3d grad_out");
    Tensor grad_input = Tensor::zeros(input_shape);
    const size_t n = grad_input.numel();
    for (size_t o = 0; o < argmax.size(); ++o) {
        if (argmax[o] >= n)
            fail("maxpool3d: argmax index " + std::to_string(argmax[o]) +
                 " out of range for input of " + std::to_string(n) + " elements");
        grad_input[argmax[o]] += grad_out[o];
    }
    return grad_input;
}

Tensor relu_forward(const Tensor& input) {
    check_finite(input, "relu input");
    Tensor out(input.shape());
    kernels::active_kernels().relu_forward(input.data(), out.data(), input.numel());
    return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
    if (!input.same_shape(grad_out))
        fail("relu: grad_out shape " + shape_str(grad_out.shape()) + " does not match input " +
             shape_str(input.shape()));
    check_finite(input, "relu input");
    check_finite(grad_out, "relu grad_out");
    Tensor out(input.shape());
    kernels::active_kernels().relu_backward(input.data(), grad_out.data(), out.data(),
                                            input.numel());
    return out;
}

Tensor guided_relu_backward(const Tensor& input, const Tensor& grad_out) {
    if (!input.same_shape(grad_out))
        fail("relu: grad_out shape " + shape_str(grad_out.shape()) + " does not match input " +
             shape_str(input.shape()));
    check_finite(input, "relu input");
    check_finite(grad_out, "relu grad_out");
    Tensor out(input.shape());
    kernels::active_kernels().guided_relu_backward(input.data(), grad_out.data(), out.data(),
                                                   input.numel());
    return out;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    require_rank(input, 2, "dense", "input");
    require_rank(weights, 2, "dense", "weights");
    require_rank(bias, 1, "dense", "bias");
    const size_t batch = input.extent(0), n = input.extent(1);
    const size_t m = weights.extent(0);
    if (weights.extent(1) != n)
        fail("dense: input features " + std::to_string(n) + " do not match weight columns " +
             std::to_string(weights.extent(1)));
    if (bias.extent(0) != m)
        fail("dense: bias extent " + std::to_string(bias.extent(0)) +
             " does not match weight rows " + std::to_string(m));
    check_finite(input, "dense input");
    check_finite(weights, "dense weights");
    check_finite(bias, "dense bias");

    Tensor out(std::vector<size_t>{batch, m});
    for (size_t b = 0; b < batch; ++b) {
        const double* x = input.data() + b * n;
        double* y = out.data() + b * m;
        for (size_t i = 0; i < m; ++i) {
            const double* w = weights.data() + i * n;
            double acc = bias[i];
            for (size_t j = 0; j < n; ++j) acc += w[j] * x[j];
            y[i] = acc;
        }
    }
    check_finite(out, "dense output");
    return out;
}

DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out) {
    require_rank(input, 2, "dense", "input");
    require_rank(weights, 2, "dense", "weights");
    require_rank(grad_out, 2, "dense", "grad_out");
    const size_t batch = input.extent(0), n = input.extent(1);
    const size_t m = weights.extent(0);
    if (weights.extent(1) != n)
        fail("dense: input features " + std::to_string(n) + " do not match weight columns " +
             std::to_string(weights.extent(1)));
    if (grad_out.extent(0) != batch || grad_out.extent(1) != m)
        fail("dense: grad_out shape " + shape_str(grad_out.shape()) + " does not match (" +
             std::to_string(batch) + ", " + std::to_string(m) + ")");
    check_finite(input, "dense input");
    check_finite(weights, "dense weights");
    check_finite(grad_out, "dense grad_out");

    DenseGrads grads{Tensor::zeros(input.shape()), Tensor::zeros(weights.shape()),
                     Tensor::zeros({m})};
    for (size_t b = 0; b < batch; ++b) {
        const double* x = input.data() + b * n;
        const double* g = grad_out.data() + b * m;
        double* gx = grads.input.data() + b * n;
        for (size_t i = 0; i < m; ++i) {
            const double gv = g[i];
            grads.bias[i] += gv;
            if (gv == 0.0) continue;
            const double* w = weights.data() + i * n;
            double* gw = grads.weights.data() + i * n;
            for (size_t j = 0; j < n; ++j) {
                gx[j] += w[j] * gv;
                gw[j] += x[j] * gv;
            }
        }
    }
    return grads;
}

Tensor softmax(const Tensor& logits) {
    require_rank(logits, 2, "softmax", "logits");
    const size_t batch = logits.extent(0), k = logits.extent(1);
    if (k < 2) fail("softmax: need at least 2 classes, got " + std::to_string(k));
    check_finite(logits, "softmax logits");
    Tensor out(logits.shape());
    for (size_t b = 0; b < batch; ++b) {
        const double* l = logits.data() + b * k;
        double* p = out.data() + b * k;
        double mx = l[0];
        for (size_t j = 1; j < k; ++j) mx = std::max(mx, l[j]);
        double sum = 0.0;
        for (size_t j = 0; j < k; ++j) {
            p[j] = std::exp(l[j] - mx);
            sum += p[j];
        }
        for (size_t j = 0; j < k; ++j) p[j] /= sum;
    }
    return out;
}

LossResult cross_entropy(const Tensor& probs, const std::vector<size_t>& labels) {
    require_rank(probs, 2, "cross_entropy", "probs");
    const size_t batch = probs.extent(0), k = probs.extent(1);
    if (labels.size() != batch)
        fail("cross_entropy: " + std::to_string(labels.size()) + " labels for batch of " +
             std::to_string(batch));
    check_finite(probs, "cross_entropy probs");
    LossResult r{0.0, Tensor::zeros(probs.shape())};
    for (size_t b = 0; b < batch; ++b) {
        if (labels[b] >= k)
            fail("cross_entropy: label " + std::to_string(labels[b]) + " out of range for " +
                 std::to_string(k) + " classes");
        const double p = probs[b * k + labels[b]];
        if (p <= 0.0)
            fail("cross_entropy: probability of true class is not positive (sample " +
                 std::to_string(b) + ")");
        r.loss -= std::log(p);
        r.grad[b * k + labels[b]] = -1.0 / (static_cast<double>(batch) * p);
    }
    r.loss /= static_cast<double>(batch);
    return r;
}

LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<size_t>& labels) {
    require_rank(logits, 2, "cross_entropy", "logits");
    const size_t batch = logits.extent(0), k = logits.extent(1);
    if (k < 2) fail("softmax: need at least 2 classes, got " + std::to_string(k));
    if (labels.size() != batch)
        fail("cross_entropy: " + std::to_string(labels.size()) + " labels for batch of " +
             std::to_string(batch));
    check_finite(logits, "cross_entropy logits");
    LossResult r{0.0, Tensor(logits.shape())};
    for (size_t b = 0; b < batch; ++b) {
        if (labels[b] >= k)
            fail("cross_entropy: label " + std::to_string(labels[b]) + " out of range for " +
                 std::to_string(k) + " classes");
        const double* l = logits.data() + b * k;
        double* g = r.grad.data() + b * k;
        double mx = l[0];
        for (size_t j = 1; j < k; ++j) mx = std::max(mx, l[j]);
        double sum = 0.0;
        for (size_t j = 0; j < k; ++j) {
            g[j] = std::exp(l[j] - mx);
            sum += g[j];
        }
        r.loss += std::log(sum) - (l[labels[b]] - mx);
        for (size_t j = 0; j < k; ++j) {
            g[j] /= sum;
            if (j == labels[b]) g[j] -= 1.0;
            g[j] /= static_cast<double>(batch);
        }
    }
    r.loss /= static_cast<double>(batch);
    check_finite(r.grad, "cross_entropy grad");
    return r;
}

}  // namespace vx
