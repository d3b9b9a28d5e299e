#pragma once

// Shared test oracles: independent reference implementations and a central
// finite-difference gradient checker. These deliberately avoid the library's
// own kernels so that agreement is evidence, not tautology.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "vx/network.hpp"
#include "vx/ops.hpp"
#include "vx/rng.hpp"
#include "vx/tensor.hpp"

namespace oracle {

inline double rel_err(double a, double b, double floor = 1e-12) {
    const double scale = std::max({std::fabs(a), std::fabs(b), floor});
    return std::fabs(a - b) / scale;
}

// Direct six-nested-loop convolution with explicit bound checks, written from
// the definition: out = bias + sum over receptive field of input * kernel.
inline vx::Tensor naive_conv3d(const vx::Tensor& input, const vx::ConvParams& p) {
    const size_t batch = input.extent(0), in_ch = input.extent(1);
    const size_t in_d = input.extent(2), in_h = input.extent(3), in_w = input.extent(4);
    const size_t out_ch = p.kernels.extent(0);
    const size_t k_d = p.kernels.extent(2), k_h = p.kernels.extent(3), k_w = p.kernels.extent(4);
    const size_t out_d = (in_d + 2 * p.pad[0] - k_d) / p.stride[0] + 1;
    const size_t out_h = (in_h + 2 * p.pad[1] - k_h) / p.stride[1] + 1;
    const size_t out_w = (in_w + 2 * p.pad[2] - k_w) / p.stride[2] + 1;

    auto in_at = [&](size_t b, size_t c, long d, long h, long w) -> double {
        if (d < 0 || d >= static_cast<long>(in_d)) return 0.0;
        if (h < 0 || h >= static_cast<long>(in_h)) return 0.0;
        if (w < 0 || w >= static_cast<long>(in_w)) return 0.0;
        return input[(((b * in_ch + c) * in_d + d) * in_h + h) * in_w + w];
    };

    vx::Tensor out(std::vector<size_t>{batch, out_ch, out_d, out_h, out_w});
    size_t o = 0;
    for (size_t b = 0; b < batch; ++b)
        for (size_t oc = 0; oc < out_ch; ++oc)
            for (size_t od = 0; od < out_d; ++od)
                for (size_t oh = 0; oh < out_h; ++oh)
                    for (size_t ow = 0; ow < out_w; ++ow) {
                        double acc = p.bias[oc];
                        for (size_t ic = 0; ic < in_ch; ++ic)
                            for (size_t kd = 0; kd < k_d; ++kd)
                                for (size_t kh = 0; kh < k_h; ++kh)
                                    for (size_t kw = 0; kw < k_w; ++kw)
                                        acc += in_at(b, ic,
                                                     static_cast<long>(od * p.stride[0] + kd) -
                                                         static_cast<long>(p.pad[0]),
                                                     static_cast<long>(oh * p.stride[1] + kh) -
                                                         static_cast<long>(p.pad[1]),
                                                     static_cast<long>(ow * p.stride[2] + kw) -
                                                         static_cast<long>(p.pad[2])) *
                                               p.kernels[(((oc * in_ch + ic) * k_d + kd) * k_h +
                                                          kh) *
                                                             k_w +
                                                         kw];
                        out[o++] = acc;
                    }
    return out;
}

inline double max_abs_diff(const vx::Tensor& a, const vx::Tensor& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

inline double max_rel_diff(const vx::Tensor& a, const vx::Tensor& b, double floor = 1e-12) {
    double m = 0.0;
    for (size_t i = 0; i < a.numel(); ++i) m = std::max(m, rel_err(a[i], b[i], floor));
    return m;
}

inline vx::Tensor random_tensor(vx::Rng& rng, std::vector<size_t> shape, double lo = -1.0,
                                double hi = 1.0) {
    vx::Tensor t(std::move(shape));
    for (size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

// Fills with distinct multiples of `gap` in shuffled order: every pairwise
// difference is at least `gap`, so finite-difference steps and max-pool
// comparisons never cross a tie.
inline vx::Tensor distinct_tensor(vx::Rng& rng, std::vector<size_t> shape, double gap = 0.01) {
    vx::Tensor t(std::move(shape));
    std::vector<double> vals(t.numel());
    for (size_t i = 0; i < vals.size(); ++i)
        vals[i] = (static_cast<double>(i) - static_cast<double>(vals.size()) / 2.0) * gap;
    rng.shuffle(vals);
    for (size_t i = 0; i < t.numel(); ++i) t[i] = vals[i];
    return t;
}

struct GradCheck {
    double max_rel = 0.0;
    size_t checked = 0;
};

// Central finite differences of a scalar function against an analytic
// gradient, coordinate by coordinate. `skip` may exclude kink-adjacent
// coordinates; returns the worst relative error over checked coordinates.
// The floor keeps finite-difference roundoff (about eps*|f|/h) from blowing
// up the relative measure where the true gradient is near zero; any real
// gradient bug moves entries by far more than the floor.
inline GradCheck check_gradient(std::vector<double> x,
                                const std::function<double(const std::vector<double>&)>& f,
                                const std::vector<double>& analytic, double h = 1e-5,
                                const std::function<bool(size_t)>& skip = nullptr,
                                double floor = 1e-3) {
    GradCheck r;
    for (size_t j = 0; j < x.size(); ++j) {
        if (skip && skip(j)) continue;
        const double saved = x[j];
        x[j] = saved + h;
        const double fp = f(x);
        x[j] = saved - h;
        const double fm = f(x);
        x[j] = saved;
        const double fd = (fp - fm) / (2.0 * h);
        r.max_rel = std::max(r.max_rel, rel_err(fd, analytic[j], floor));
        ++r.checked;
    }
    return r;
}

// The discrete decisions a forward pass makes: every ReLU sign and every
// max-pool winner. Two inputs with equal signatures lie on the same smooth
// piece of the network function, so finite differences between them are
// valid; a signature change means the step crossed a kink or tie and the
// coordinate must be skipped.
inline std::vector<size_t> activation_signature(const vx::Network& net, const vx::Tensor& x) {
    const auto trace = vx::forward(net, x);
    std::vector<size_t> sig;
    for (size_t i = 0; i < net.spec.layers.size(); ++i) {
        if (std::holds_alternative<vx::ReluLayer>(net.spec.layers[i])) {
            const auto& in = trace.acts[i];
            for (size_t j = 0; j < in.numel(); ++j) sig.push_back(in[j] > 0.0 ? 1 : 0);
        }
        for (size_t a : trace.pool_argmax[i]) sig.push_back(a);
    }
    return sig;
}

struct InputGradCheck {
    double max_rel = 0.0;
    size_t checked = 0;
    size_t skipped = 0;
};

// Finite-difference check of d(logit[target])/d(input) against `analytic` on
// `coords`, skipping coordinates whose perturbation crosses a ReLU kink or
// pool tie.
inline InputGradCheck check_input_gradient(const vx::Network& net, const vx::Tensor& x,
                                           size_t target, const vx::Tensor& analytic,
                                           const std::vector<size_t>& coords, double h = 1e-5,
                                           double floor = 1e-3) {
    InputGradCheck r;
    vx::Tensor probe(x.shape(), x.values());
    for (size_t j : coords) {
        const double saved = probe[j];
        probe[j] = saved + h;
        const auto sig_plus = activation_signature(net, probe);
        const double fp = vx::forward_logits(net, probe)[target];
        probe[j] = saved - h;
        const auto sig_minus = activation_signature(net, probe);
        const double fm = vx::forward_logits(net, probe)[target];
        probe[j] = saved;
        if (sig_plus != sig_minus) {
            ++r.skipped;
            continue;
        }
        const double fd = (fp - fm) / (2.0 * h);
        r.max_rel = std::max(r.max_rel, rel_err(fd, analytic[j], floor));
        ++r.checked;
    }
    return r;
}

}  // namespace oracle
