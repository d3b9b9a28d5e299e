#include "vx/attribution.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <string>

namespace vx {

namespace {

// Shortest decimal form that parses back to the same double.
std::string fmt_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void check_target(const Network& net, size_t target_class) {
    const size_t k = net.spec.class_names.size();
    if (target_class >= k)
        fail("attribution: target class " + std::to_string(target_class) + " out of range (" +
             std::to_string(k) + " classes)");
}

void check_volume(const Network& net, const Tensor& volume) {
    if (volume.rank() != 4)
        fail("attribution: expected a (c, d, h, w) volume, got rank " +
             std::to_string(volume.rank()));
    const auto& want = net.spec.input_shape;
    for (size_t a = 0; a < 4; ++a)
        if (volume.extent(a) != want[a])
            fail("attribution: volume shape " + shape_str(volume.shape()) +
                 " does not match network input " +
                 shape_str({want[0], want[1], want[2], want[3]}));
}

// onehot(target) at the logits, scaled by `value`.
Tensor logit_seed(size_t classes, size_t target_class, double value) {
    Tensor seed = Tensor::zeros({1, classes});
    seed[target_class] = value;
    return seed;
}

// (1, c, d, h, w) -> (d, h, w), summing channels.
Tensor channel_sum(const Tensor& grad) {
    const size_t c = grad.extent(1);
    const size_t d = grad.extent(2), h = grad.extent(3), w = grad.extent(4);
    const size_t vol = d * h * w;
    Tensor out = Tensor::zeros({d, h, w});
    const double* g = grad.data();
    double* o = out.data();
    for (size_t ic = 0; ic < c; ++ic)
        for (size_t v = 0; v < vol; ++v) o[v] += g[ic * vol + v];
    return out;
}

double target_logit(const Network& net, const Tensor& volume, size_t target_class) {
    return forward_logits(net, volume)[target_class];
}

// Grid positions along one axis: stride steps while a full patch fits, plus a
// final position clamped to the end so the union reaches the boundary.
std::vector<size_t> patch_positions(size_t extent, size_t patch, size_t stride) {
    std::vector<size_t> pos;
    for (size_t p = 0; p + patch <= extent; p += stride) pos.push_back(p);
    if (pos.back() + patch < extent) pos.push_back(extent - patch);
    return pos;
}

double pos_part(double v) { return v > 0.0 ? v : 0.0; }

// Epsilon rule for a linear layer, written on top of the layer's own backward
// data path: R_in = x * backprop(R / (z + eps * sign(z))); a zero denominator
// drops that output's contribution.
Tensor stabilized_ratio(const Tensor& relevance, const Tensor& z, double epsilon) {
    Tensor s = Tensor::zeros(z.shape());
    for (size_t i = 0; i < z.numel(); ++i) {
        const double zi = z[i];
        const double denom = zi + (zi >= 0.0 ? epsilon : -epsilon);
        if (denom != 0.0) s[i] = relevance[i] / denom;
    }
    return s;
}

Tensor lrp_conv_epsilon(const Tensor& x, const ConvParams& cp, const Tensor& z,
                        const Tensor& relevance, double epsilon) {
    Tensor s = stabilized_ratio(relevance, z, epsilon);
    Tensor r_in = conv3d_backward_data(x.shape(), cp, s);
    for (size_t i = 0; i < r_in.numel(); ++i) r_in[i] *= x[i];
    return r_in;
}

Tensor lrp_dense_epsilon(const Tensor& x, const Tensor& weights, const Tensor& z,
                         const Tensor& relevance, double epsilon) {
    const size_t n = weights.extent(1), m = weights.extent(0);
    Tensor s = stabilized_ratio(relevance, z, epsilon);
    Tensor r_in = Tensor::zeros(x.shape());
    for (size_t j = 0; j < m; ++j) {
        const double sj = s[j];
        if (sj == 0.0) continue;
        const double* wj = weights.data() + j * n;
        for (size_t i = 0; i < n; ++i) r_in[i] += wj[i] * sj;
    }
    for (size_t i = 0; i < n; ++i) r_in[i] *= x[i];
    return r_in;
}

// z+ rule: each output redistributes its relevance over the positive parts of
// its input contributions; a positive bias part enlarges the denominator and
// keeps that share of relevance (absorbed, like the epsilon rule's bias).
Tensor lrp_dense_zplus(const Tensor& x, const Tensor& weights, const Tensor& bias,
                       const Tensor& relevance) {
    const size_t n = weights.extent(1), m = weights.extent(0);
    Tensor r_in = Tensor::zeros(x.shape());
    for (size_t j = 0; j < m; ++j) {
        const double* wj = weights.data() + j * n;
        double denom = pos_part(bias[j]);
        for (size_t i = 0; i < n; ++i) denom += pos_part(x[i] * wj[i]);
        if (denom == 0.0) continue;
        const double scale = relevance[j] / denom;
        for (size_t i = 0; i < n; ++i) r_in[i] += pos_part(x[i] * wj[i]) * scale;
    }
    return r_in;
}

Tensor lrp_conv_zplus(const Tensor& x, const ConvParams& cp, const Tensor& z,
                      const Tensor& relevance) {
    const size_t in_ch = x.extent(1), in_d = x.extent(2), in_h = x.extent(3), in_w = x.extent(4);
    const size_t out_ch = z.extent(1), out_d = z.extent(2), out_h = z.extent(3),
                 out_w = z.extent(4);
    const size_t k_d = cp.kernels.extent(2), k_h = cp.kernels.extent(3),
                 k_w = cp.kernels.extent(4);
    const size_t in_plane = in_h * in_w, in_vol = in_d * in_plane;
    const size_t k_vol = k_d * k_h * k_w;
    const double* in = x.data();
    const double* ker = cp.kernels.data();
    Tensor r_in = Tensor::zeros(x.shape());

    size_t out_idx = 0;
    for (size_t oc = 0; oc < out_ch; ++oc) {
        const double bias_pos = pos_part(cp.bias[oc]);
        for (size_t od = 0; od < out_d; ++od)
            for (size_t oh = 0; oh < out_h; ++oh)
                for (size_t ow = 0; ow < out_w; ++ow, ++out_idx) {
                    // Two passes over the receptive field: sum the positive
                    // contributions, then distribute proportionally.
                    double denom = bias_pos;
                    for (int pass = 0; pass < 2; ++pass) {
                        const double scale = pass ? relevance[out_idx] / denom : 0.0;
                        for (size_t ic = 0; ic < in_ch; ++ic) {
                            const double* in_c = in + ic * in_vol;
                            const double* ker_c = ker + (oc * in_ch + ic) * k_vol;
                            for (size_t kd = 0; kd < k_d; ++kd) {
                                const ptrdiff_t id =
                                    static_cast<ptrdiff_t>(od * cp.stride[0] + kd) -
                                    static_cast<ptrdiff_t>(cp.pad[0]);
                                if (id < 0 || id >= static_cast<ptrdiff_t>(in_d)) continue;
                                for (size_t kh = 0; kh < k_h; ++kh) {
                                    const ptrdiff_t ih =
                                        static_cast<ptrdiff_t>(oh * cp.stride[1] + kh) -
                                        static_cast<ptrdiff_t>(cp.pad[1]);
                                    if (ih < 0 || ih >= static_cast<ptrdiff_t>(in_h)) continue;
                                    const size_t row = static_cast<size_t>(id) * in_plane +
                                                       static_cast<size_t>(ih) * in_w;
                                    const double* ker_row = ker_c + (kd * k_h + kh) * k_w;
                                    for (size_t kw = 0; kw < k_w; ++kw) {
                                        const ptrdiff_t iw =
                                            static_cast<ptrdiff_t>(ow * cp.stride[2] + kw) -
                                            static_cast<ptrdiff_t>(cp.pad[2]);
                                        if (iw < 0 || iw >= static_cast<ptrdiff_t>(in_w))
                                            continue;
                                        const size_t at = row + static_cast<size_t>(iw);
                                        const double contrib = pos_part(in_c[at] * ker_row[kw]);
                                        if (pass)
                                            r_in[ic * in_vol + at] += contrib * scale;
                                        else
                                            denom += contrib;
                                    }
                                }
                            }
                        }
                        if (denom == 0.0) break;
                    }
                }
    }
    return r_in;
}

ConvParams conv_params_of(const Conv3dLayer& conv, const LayerParams& p) {
    return ConvParams{p.weights, p.bias,
                      {conv.stride, conv.stride, conv.stride},
                      {conv.pad, conv.pad, conv.pad}};
}

AttributionMap gradient_map(const Network& net, const Tensor& volume, size_t target_class,
                            bool guided, std::vector<Tensor>* relu_grad_sink) {
    check_target(net, target_class);
    check_volume(net, volume);
    ActivationTrace trace = forward(net, volume);
    BackwardOptions opts;
    opts.guided_relu = guided;
    opts.want_param_grads = false;
    opts.relu_grad_sink = relu_grad_sink;
    const Tensor seed = logit_seed(net.spec.class_names.size(), target_class, 1.0);
    BackwardResult back = backward(net, trace, seed, opts);
    AttributionMap map;
    map.values = channel_sum(back.grad_input);
    map.target_class = target_class;
    return map;
}

}  // namespace

AttributionMap sensitivity_map(const Network& net, const Tensor& volume, size_t target_class) {
    AttributionMap map = gradient_map(net, volume, target_class, false, nullptr);
    map.method = Method::Sensitivity;
    return map;
}

AttributionMap guided_backprop_map(const Network& net, const Tensor& volume, size_t target_class,
                                   bool gated, std::vector<Tensor>* relu_grad_sink) {
    AttributionMap map = gradient_map(net, volume, target_class, gated, relu_grad_sink);
    map.method = Method::GuidedBackprop;
    map.metadata["gated"] = gated ? "true" : "false";
    return map;
}

AttributionMap occlusion_map(const Network& net, const Tensor& volume, size_t target_class,
                             size_t patch_extent, size_t stride, double baseline_value) {
    check_target(net, target_class);
    check_volume(net, volume);
    if (patch_extent == 0) fail("occlusion: patch extent must be positive");
    if (stride == 0) fail("occlusion: stride must be positive");
    if (stride > patch_extent)
        fail("occlusion: stride " + std::to_string(stride) + " exceeds patch extent " +
             std::to_string(patch_extent) + ", leaving uncovered voxels");
    const size_t c = volume.extent(0), d = volume.extent(1), h = volume.extent(2),
                 w = volume.extent(3);
    for (size_t a = 1; a < 4; ++a)
        if (patch_extent > volume.extent(a))
            fail("occlusion: patch extent " + std::to_string(patch_extent) +
                 " exceeds volume extent " + std::to_string(volume.extent(a)));
    if (!std::isfinite(baseline_value)) fail("occlusion: baseline value must be finite");

    const double orig = target_logit(net, volume, target_class);
    const auto pos_d = patch_positions(d, patch_extent, stride);
    const auto pos_h = patch_positions(h, patch_extent, stride);
    const auto pos_w = patch_positions(w, patch_extent, stride);

    const size_t plane = h * w, vol = d * plane;
    std::vector<double> delta_sum(vol, 0.0);
    std::vector<uint32_t> cover(vol, 0);
    Tensor occluded = volume;
    for (size_t pd : pos_d)
        for (size_t ph : pos_h)
            for (size_t pw : pos_w) {
                std::memcpy(occluded.data(), volume.data(), volume.numel() * sizeof(double));
                for (size_t ic = 0; ic < c; ++ic)
                    for (size_t z = pd; z < pd + patch_extent; ++z)
                        for (size_t y = ph; y < ph + patch_extent; ++y) {
                            double* row = occluded.data() + ic * vol + z * plane + y * w + pw;
                            for (size_t xm = 0; xm < patch_extent; ++xm)
                                row[xm] = baseline_value;
                        }
                const double delta = orig - target_logit(net, occluded, target_class);
                for (size_t z = pd; z < pd + patch_extent; ++z)
                    for (size_t y = ph; y < ph + patch_extent; ++y) {
                        const size_t row = z * plane + y * w + pw;
                        for (size_t xm = 0; xm < patch_extent; ++xm) {
                            delta_sum[row + xm] += delta;
                            cover[row + xm] += 1;
                        }
                    }
            }

    AttributionMap map;
    map.values = Tensor::zeros({d, h, w});
    for (size_t v = 0; v < vol; ++v) map.values[v] = delta_sum[v] / cover[v];
    map.method = Method::Occlusion;
    map.target_class = target_class;
    map.metadata["patch_extent"] = std::to_string(patch_extent);
    map.metadata["stride"] = std::to_string(stride);
    map.metadata["baseline"] = fmt_double(baseline_value);
    return map;
}

AttributionMap region_occlusion_map(const Network& net, const Tensor& volume,
                                    size_t target_class, const Atlas& atlas,
                                    double baseline_value) {
    check_target(net, target_class);
    check_volume(net, volume);
    const size_t c = volume.extent(0), d = volume.extent(1), h = volume.extent(2),
                 w = volume.extent(3);
    if (atlas.shape[0] != d || atlas.shape[1] != h || atlas.shape[2] != w)
        fail("region occlusion: atlas shape " + std::to_string(atlas.shape[0]) + "x" +
             std::to_string(atlas.shape[1]) + "x" + std::to_string(atlas.shape[2]) +
             " does not match volume " + std::to_string(d) + "x" + std::to_string(h) + "x" +
             std::to_string(w));
    if (!std::isfinite(baseline_value)) fail("region occlusion: baseline value must be finite");
    const auto masks = region_masks(atlas);
    if (masks.empty()) fail("region occlusion: atlas has no non-background region");

    const double orig = target_logit(net, volume, target_class);
    const size_t vol = d * h * w;
    AttributionMap map;
    map.values = Tensor::zeros({d, h, w});
    Tensor occluded = volume;
    for (const auto& [label, voxels] : masks) {
        std::memcpy(occluded.data(), volume.data(), volume.numel() * sizeof(double));
        for (size_t ic = 0; ic < c; ++ic)
            for (size_t v : voxels) occluded[ic * vol + v] = baseline_value;
        const double delta = orig - target_logit(net, occluded, target_class);
        for (size_t v : voxels) map.values[v] = delta;
    }
    map.method = Method::RegionOcclusion;
    map.target_class = target_class;
    map.metadata["baseline"] = fmt_double(baseline_value);
    map.metadata["regions"] = std::to_string(masks.size());
    return map;
}

const char* lrp_rule_name(LrpRule rule) {
    return rule == LrpRule::Epsilon ? "epsilon" : "zplus";
}

LrpRule parse_lrp_rule(std::string_view name) {
    if (name == "epsilon") return LrpRule::Epsilon;
    if (name == "zplus") return LrpRule::ZPlus;
    fail("lrp: unknown rule '" + std::string(name) + "' (expected epsilon or zplus)");
}

AttributionMap lrp_map(const Network& net, const Tensor& volume, size_t target_class,
                       LrpRule rule, double epsilon) {
    check_target(net, target_class);
    check_volume(net, volume);
    if (!(epsilon >= 0.0)) fail("lrp: epsilon must be non-negative");

    ActivationTrace trace = forward(net, volume);
    const Tensor& logits = trace.logits();
    // The target keeps its full logit as initial relevance; the other classes
    // contribute nothing.
    Tensor relevance =
        logit_seed(net.spec.class_names.size(), target_class, logits[target_class]);

    for (size_t i = net.spec.layers.size(); i-- > 0;) {
        const LayerDesc& layer = net.spec.layers[i];
        const Tensor& x = trace.acts[i];
        const Tensor& z = trace.acts[i + 1];
        if (const auto* conv = std::get_if<Conv3dLayer>(&layer)) {
            const ConvParams cp = conv_params_of(*conv, net.params[i]);
            relevance = rule == LrpRule::Epsilon ? lrp_conv_epsilon(x, cp, z, relevance, epsilon)
                                                 : lrp_conv_zplus(x, cp, z, relevance);
        } else if (std::holds_alternative<ReluLayer>(layer)) {
            // Pass-through: a unit and its rectified value are one entity for
            // relevance purposes.
        } else if (std::holds_alternative<MaxPool3dLayer>(layer)) {
            relevance = maxpool3d_backward(trace.pool_argmax[i], relevance, x.shape());
        } else if (std::holds_alternative<FlattenLayer>(layer)) {
            relevance = relevance.reshaped(x.shape());
        } else if (std::holds_alternative<DenseLayer>(layer)) {
            relevance = rule == LrpRule::Epsilon
                            ? lrp_dense_epsilon(x, net.params[i].weights, z, relevance, epsilon)
                            : lrp_dense_zplus(x, net.params[i].weights, net.params[i].bias,
                                              relevance);
        } else {
            fail("lrp: unsupported layer '" + std::string(layer_name(layer)) + "'");
        }
    }

    AttributionMap map;
    map.values = channel_sum(relevance);
    map.method = Method::Lrp;
    map.target_class = target_class;
    map.metadata["rule"] = lrp_rule_name(rule);
    map.metadata["epsilon"] = fmt_double(epsilon);
    return map;
}

AttributionMap average_maps(const std::vector<AttributionMap>& maps) {
    if (maps.empty()) fail("average: no maps to average");
    const AttributionMap& first = maps.front();
    for (size_t i = 1; i < maps.size(); ++i) {
        if (!maps[i].values.same_shape(first.values))
            fail("average: map " + std::to_string(i) + " shape " +
                 shape_str(maps[i].values.shape()) + " does not match " +
                 shape_str(first.values.shape()));
        if (maps[i].method != first.method)
            fail("average: map " + std::to_string(i) + " method " +
                 method_name(maps[i].method) + " does not match " + method_name(first.method));
        if (maps[i].target_class != first.target_class)
            fail("average: map " + std::to_string(i) + " targets class " +
                 std::to_string(maps[i].target_class) + ", expected " +
                 std::to_string(first.target_class));
    }
    AttributionMap out;
    out.values = Tensor::zeros(first.values.shape());
    const double inv = 1.0 / static_cast<double>(maps.size());
    for (const AttributionMap& m : maps)
        for (size_t v = 0; v < m.values.numel(); ++v) out.values[v] += m.values[v] * inv;
    out.method = first.method;
    out.target_class = first.target_class;
    out.metadata = first.metadata;
    out.metadata["count"] = std::to_string(maps.size());
    return out;
}

}  // namespace vx
