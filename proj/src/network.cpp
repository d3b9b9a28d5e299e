#include "vx/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vx/rng.hpp"

// Raw multi-byte values are written as-is and declared little-endian in the
// format; that only holds on a little-endian host.
static_assert(std::endian::native == std::endian::little);

namespace vx {

using nlohmann::json;

const char* layer_name(const LayerDesc& layer) {
    return std::visit(
        [](const auto& l) -> const char* {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Conv3dLayer>) return "conv3d";
            if constexpr (std::is_same_v<T, ReluLayer>) return "relu";
            if constexpr (std::is_same_v<T, MaxPool3dLayer>) return "maxpool3d";
            if constexpr (std::is_same_v<T, FlattenLayer>) return "flatten";
            if constexpr (std::is_same_v<T, DenseLayer>) return "dense";
        },
        layer);
}

namespace {

[[noreturn]] void fail_layer(size_t index, const LayerDesc& layer, const std::string& msg) {
    fail("layer " + std::to_string(index) + " (" + layer_name(layer) + "): " + msg);
}

LayerShape apply_shape(const LayerShape& in, const LayerDesc& layer, size_t index) {
    LayerShape out;
    if (const auto* conv = std::get_if<Conv3dLayer>(&layer)) {
        if (in.flat) fail_layer(index, layer, "input is flat, expected a volume");
        if (conv->out_channels == 0) fail_layer(index, layer, "out_channels must be positive");
        if (conv->kernel == 0) fail_layer(index, layer, "kernel extent must be positive");
        try {
            out.dims[0] = conv->out_channels;
            out.dims[1] = conv_out_extent(in.dims[1], conv->kernel, conv->stride, conv->pad, "depth");
            out.dims[2] = conv_out_extent(in.dims[2], conv->kernel, conv->stride, conv->pad, "height");
            out.dims[3] = conv_out_extent(in.dims[3], conv->kernel, conv->stride, conv->pad, "width");
        } catch (const std::runtime_error& e) {
            fail_layer(index, layer, e.what());
        }
        return out;
    }
    if (std::holds_alternative<ReluLayer>(layer)) return in;
    if (const auto* pool = std::get_if<MaxPool3dLayer>(&layer)) {
        if (in.flat) fail_layer(index, layer, "input is flat, expected a volume");
        try {
            out.dims[0] = in.dims[0];
            out.dims[1] = conv_out_extent(in.dims[1], pool->window, pool->stride, 0, "depth");
            out.dims[2] = conv_out_extent(in.dims[2], pool->window, pool->stride, 0, "height");
            out.dims[3] = conv_out_extent(in.dims[3], pool->window, pool->stride, 0, "width");
        } catch (const std::runtime_error& e) {
            fail_layer(index, layer, e.what());
        }
        return out;
    }
    if (std::holds_alternative<FlattenLayer>(layer)) {
        if (in.flat) fail_layer(index, layer, "input is already flat");
        out.flat = true;
        out.dims = {in.features(), 1, 1, 1};
        return out;
    }
    const auto& dense = std::get<DenseLayer>(layer);
    if (!in.flat) fail_layer(index, layer, "input is not flat; insert a flatten layer first");
    if (dense.out_features == 0) fail_layer(index, layer, "out_features must be positive");
    out.flat = true;
    out.dims = {dense.out_features, 1, 1, 1};
    return out;
}

ConvParams layer_conv_params(const Conv3dLayer& conv, const LayerParams& p) {
    return ConvParams{p.weights, p.bias,
                      {conv.stride, conv.stride, conv.stride},
                      {conv.pad, conv.pad, conv.pad}};
}

// Batched input for one volume or a batch; trace tensors are always rank 5.
Tensor to_batched(const Network& net, const Tensor& input) {
    const auto& want = net.spec.input_shape;
    if (input.rank() == 4) {
        for (size_t a = 0; a < 4; ++a)
            if (input.extent(a) != want[a])
                fail("forward: input shape " + shape_str(input.shape()) +
                     " does not match spec input (" + std::to_string(want[0]) + ", " +
                     std::to_string(want[1]) + ", " + std::to_string(want[2]) + ", " +
                     std::to_string(want[3]) + ")");
        return input.reshaped({1, want[0], want[1], want[2], want[3]});
    }
    if (input.rank() != 5)
        fail("forward: input has rank " + std::to_string(input.rank()) + ", expected 4 or 5");
    for (size_t a = 0; a < 4; ++a)
        if (input.extent(a + 1) != want[a])
            fail("forward: input shape " + shape_str(input.shape()) +
                 " does not match spec input (batch, " + std::to_string(want[0]) + ", " +
                 std::to_string(want[1]) + ", " + std::to_string(want[2]) + ", " +
                 std::to_string(want[3]) + ")");
    return input;
}

Tensor apply_layer(const Network& net, size_t i, const Tensor& x,
                   std::vector<size_t>* argmax_out) {
    const auto& layer = net.spec.layers[i];
    try {
        if (const auto* conv = std::get_if<Conv3dLayer>(&layer))
            return conv3d_forward(x, layer_conv_params(*conv, net.params[i]));
        if (std::holds_alternative<ReluLayer>(layer)) return relu_forward(x);
        if (const auto* pool = std::get_if<MaxPool3dLayer>(&layer)) {
            auto r = maxpool3d_forward(
                x, PoolParams{{pool->window, pool->window, pool->window},
                              {pool->stride, pool->stride, pool->stride}});
            if (argmax_out) *argmax_out = std::move(r.argmax);
            return std::move(r.output);
        }
        if (std::holds_alternative<FlattenLayer>(layer)) {
            const size_t batch = x.extent(0);
            return x.reshaped({batch, x.numel() / batch});
        }
        return dense_forward(x, net.params[i].weights, net.params[i].bias);
    } catch (const std::runtime_error& e) {
        fail_layer(i, layer, e.what());
    }
}

}  // namespace

std::vector<LayerShape> infer_shapes(const NetworkSpec& spec) {
    if (spec.layers.empty()) fail("spec: layer list is empty");
    for (size_t a = 0; a < 4; ++a)
        if (spec.input_shape[a] == 0) fail("spec: input extents must be positive");
    std::vector<LayerShape> shapes;
    shapes.reserve(spec.layers.size() + 1);
    shapes.push_back(LayerShape{false, spec.input_shape});
    for (size_t i = 0; i < spec.layers.size(); ++i)
        shapes.push_back(apply_shape(shapes.back(), spec.layers[i], i));
    return shapes;
}

void validate_spec(const NetworkSpec& spec) {
    const auto shapes = infer_shapes(spec);
    if (spec.class_names.size() < 2)
        fail("spec: need at least 2 class names, got " + std::to_string(spec.class_names.size()));
    std::set<std::string> seen;
    for (const auto& name : spec.class_names) {
        if (name.empty()) fail("spec: empty class name");
        if (!seen.insert(name).second) fail("spec: duplicate class name '" + name + "'");
    }
    const auto* last = std::get_if<DenseLayer>(&spec.layers.back());
    if (!last) fail("spec: final layer must be dense, got " + std::string(layer_name(spec.layers.back())));
    if (last->out_features != spec.class_names.size())
        fail("spec: final dense has " + std::to_string(last->out_features) + " outputs for " +
             std::to_string(spec.class_names.size()) + " classes");
    (void)shapes;
}

Network init_network(const NetworkSpec& spec, uint64_t rng_seed) {
    validate_spec(spec);
    const auto shapes = infer_shapes(spec);
    Network net{spec, {}};
    net.params.resize(spec.layers.size());
    Rng rng(rng_seed);
    for (size_t i = 0; i < spec.layers.size(); ++i) {
        if (const auto* conv = std::get_if<Conv3dLayer>(&spec.layers[i])) {
            const size_t in_ch = shapes[i].dims[0];
            const size_t k = conv->kernel;
            const double fan_in = static_cast<double>(in_ch * k * k * k);
            const double bound = std::sqrt(6.0 / fan_in);
            Tensor w({conv->out_channels, in_ch, k, k, k});
            for (size_t j = 0; j < w.numel(); ++j) w[j] = rng.uniform(-bound, bound);
            net.params[i] = {std::move(w), Tensor::zeros({conv->out_channels})};
        } else if (const auto* dense = std::get_if<DenseLayer>(&spec.layers[i])) {
            const size_t n = shapes[i].features();
            const double bound = std::sqrt(6.0 / static_cast<double>(n));
            Tensor w({dense->out_features, n});
            for (size_t j = 0; j < w.numel(); ++j) w[j] = rng.uniform(-bound, bound);
            net.params[i] = {std::move(w), Tensor::zeros({dense->out_features})};
        }
    }
    return net;
}

ActivationTrace forward(const Network& net, const Tensor& input) {
    ActivationTrace trace;
    trace.acts.reserve(net.spec.layers.size() + 1);
    trace.pool_argmax.resize(net.spec.layers.size());
    trace.acts.push_back(to_batched(net, input));
    for (size_t i = 0; i < net.spec.layers.size(); ++i)
        trace.acts.push_back(apply_layer(net, i, trace.acts.back(), &trace.pool_argmax[i]));
    return trace;
}

Tensor forward_logits(const Network& net, const Tensor& input) {
    Tensor x = to_batched(net, input);
    for (size_t i = 0; i < net.spec.layers.size(); ++i) x = apply_layer(net, i, x, nullptr);
    return x;
}

PredictResult predict(const Network& net, const Tensor& volume) {
    const Tensor logits = forward_logits(net, volume);
    if (logits.extent(0) != 1) fail("predict: expected a single volume, got a batch");
    const Tensor probs = softmax(logits);
    PredictResult r;
    r.probabilities.assign(probs.data(), probs.data() + probs.numel());
    for (size_t j = 1; j < r.probabilities.size(); ++j)
        if (r.probabilities[j] > r.probabilities[r.class_index]) r.class_index = j;
    r.class_name = net.spec.class_names[r.class_index];
    return r;
}

BackwardResult backward(const Network& net, const ActivationTrace& trace,
                        const Tensor& grad_logits, const BackwardOptions& opts) {
    const size_t n = net.spec.layers.size();
    if (trace.acts.size() != n + 1)
        fail("backward: trace has " + std::to_string(trace.acts.size()) + " activations for " +
             std::to_string(n) + " layers");
    if (!grad_logits.same_shape(trace.logits()))
        fail("backward: grad_logits shape " + shape_str(grad_logits.shape()) +
             " does not match logits " + shape_str(trace.logits().shape()));

    BackwardResult result;
    if (opts.want_param_grads) result.param_grads.resize(n);
    Tensor g = grad_logits;
    for (size_t ii = n; ii-- > 0;) {
        const auto& layer = net.spec.layers[ii];
        const Tensor& x = trace.acts[ii];
        try {
            if (const auto* conv = std::get_if<Conv3dLayer>(&layer)) {
                const auto cp = layer_conv_params(*conv, net.params[ii]);
                if (opts.want_param_grads) {
                    auto grads = conv3d_backward(x, cp, g);
                    result.param_grads[ii] = {std::move(grads.kernels), std::move(grads.bias)};
                    g = std::move(grads.input);
                } else {
                    g = conv3d_backward_data(x.shape(), cp, g);
                }
            } else if (std::holds_alternative<ReluLayer>(layer)) {
                g = opts.guided_relu ? guided_relu_backward(x, g) : relu_backward(x, g);
                if (opts.relu_grad_sink) opts.relu_grad_sink->push_back(g);
            } else if (std::holds_alternative<MaxPool3dLayer>(layer)) {
                g = maxpool3d_backward(trace.pool_argmax[ii], g, x.shape());
            } else if (std::holds_alternative<FlattenLayer>(layer)) {
                g = g.reshaped(x.shape());
            } else {
                auto grads = dense_backward(x, net.params[ii].weights, g);
                if (opts.want_param_grads)
                    result.param_grads[ii] = {std::move(grads.weights), std::move(grads.bias)};
                g = std::move(grads.input);
            }
        } catch (const std::runtime_error& e) {
            fail_layer(ii, layer, e.what());
        }
    }
    result.grad_input = std::move(g);
    return result;
}

namespace {

json spec_to_json(const NetworkSpec& spec) {
    json layers = json::array();
    for (const auto& layer : spec.layers) {
        json j{{"type", layer_name(layer)}};
        if (const auto* conv = std::get_if<Conv3dLayer>(&layer)) {
            j["out"] = conv->out_channels;
            j["kernel"] = conv->kernel;
            j["stride"] = conv->stride;
            j["pad"] = conv->pad;
        } else if (const auto* pool = std::get_if<MaxPool3dLayer>(&layer)) {
            j["window"] = pool->window;
            j["stride"] = pool->stride;
        } else if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
            j["out"] = dense->out_features;
        }
        layers.push_back(std::move(j));
    }
    return json{{"class_names", spec.class_names},
                {"input_shape", spec.input_shape},
                {"layers", std::move(layers)}};
}

NetworkSpec spec_from_json(const json& j) {
    NetworkSpec spec;
    try {
        spec.class_names = j.at("class_names").get<std::vector<std::string>>();
        const auto in = j.at("input_shape").get<std::vector<size_t>>();
        if (in.size() != 4) fail("weights: input_shape must have 4 extents");
        std::copy(in.begin(), in.end(), spec.input_shape.begin());
        for (const auto& l : j.at("layers")) {
            const auto type = l.at("type").get<std::string>();
            if (type == "conv3d")
                spec.layers.push_back(Conv3dLayer{l.at("out").get<size_t>(),
                                                  l.at("kernel").get<size_t>(),
                                                  l.at("stride").get<size_t>(),
                                                  l.at("pad").get<size_t>()});
            else if (type == "relu")
                spec.layers.push_back(ReluLayer{});
            else if (type == "maxpool3d")
                spec.layers.push_back(
                    MaxPool3dLayer{l.at("window").get<size_t>(), l.at("stride").get<size_t>()});
            else if (type == "flatten")
                spec.layers.push_back(FlattenLayer{});
            else if (type == "dense")
                spec.layers.push_back(DenseLayer{l.at("out").get<size_t>()});
            else
                fail("weights: unknown layer type '" + type + "' in header");
        }
    } catch (const json::exception& e) {
        fail("weights: malformed header: " + std::string(e.what()));
    }
    return spec;
}

constexpr char kMagic[4] = {'V', 'X', 'W', '1'};
constexpr uint8_t kVersion = 0x01;

}  // namespace

void save_weights(const Network& net, const std::string& path) {
    validate_spec(net.spec);
    json header = spec_to_json(net.spec);
    json tensors = json::array();
    uint64_t offset = 0;
    for (size_t i = 0; i < net.params.size(); ++i) {
        for (const char* name : {"kernels", "bias"}) {
            const Tensor& t =
                std::strcmp(name, "kernels") == 0 ? net.params[i].weights : net.params[i].bias;
            if (t.empty()) continue;
            const uint64_t bytes = t.numel() * sizeof(double);
            tensors.push_back(json{{"layer", i},
                                   {"name", name},
                                   {"shape", t.shape()},
                                   {"offset", offset},
                                   {"bytes", bytes}});
            offset += bytes;
        }
    }
    header["tensors"] = std::move(tensors);
    const std::string text = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("weights: cannot open '" + path + "' for writing");
    out.write(kMagic, 4);
    out.put(static_cast<char>(kVersion));
    const uint64_t hlen = text.size();
    out.write(reinterpret_cast<const char*>(&hlen), 8);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& p : net.params) {
        if (!p.weights.empty())
            out.write(reinterpret_cast<const char*>(p.weights.data()),
                      static_cast<std::streamsize>(p.weights.numel() * sizeof(double)));
        if (!p.bias.empty())
            out.write(reinterpret_cast<const char*>(p.bias.data()),
                      static_cast<std::streamsize>(p.bias.numel() * sizeof(double)));
    }
    if (!out) fail("weights: write to '" + path + "' failed");
}

Network load_network(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("weights: cannot open '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) fail("weights: bad magic in '" + path + "'");
    const int version = in.get();
    if (version != kVersion)
        fail("weights: unsupported version " + std::to_string(version) + " in '" + path + "'");
    uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), 8);
    if (!in) fail("weights: truncated file '" + path + "'");
    std::string text(hlen, '\0');
    in.read(text.data(), static_cast<std::streamsize>(hlen));
    if (!in) fail("weights: truncated file '" + path + "'");

    json header;
    try {
        header = json::parse(text);
    } catch (const json::exception& e) {
        fail("weights: header is not valid JSON: " + std::string(e.what()));
    }
    Network net{spec_from_json(header), {}};
    validate_spec(net.spec);
    net.params.resize(net.spec.layers.size());

    if (!header.contains("tensors")) fail("weights: header has no tensor table");
    uint64_t expect_offset = 0;
    for (const auto& entry : header.at("tensors")) {
        size_t layer;
        std::string name;
        std::vector<size_t> shape;
        uint64_t offset, bytes;
        try {
            layer = entry.at("layer").get<size_t>();
            name = entry.at("name").get<std::string>();
            shape = entry.at("shape").get<std::vector<size_t>>();
            offset = entry.at("offset").get<uint64_t>();
            bytes = entry.at("bytes").get<uint64_t>();
        } catch (const json::exception& e) {
            fail("weights: malformed tensor table: " + std::string(e.what()));
        }
        if (layer >= net.params.size())
            fail("weights: tensor table references layer " + std::to_string(layer) +
                 " of a " + std::to_string(net.params.size()) + "-layer network");
        if (offset != expect_offset)
            fail("weights: tensor table offsets are not contiguous at layer " +
                 std::to_string(layer));
        if (bytes != shape_numel(shape) * sizeof(double))
            fail("weights: tensor byte count disagrees with its shape at layer " +
                 std::to_string(layer));
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(bytes));
        if (static_cast<uint64_t>(in.gcount()) != bytes)
            fail("weights: truncated file '" + path + "'");
        check_finite(t, "weights tensor");
        if (name == "kernels")
            net.params[layer].weights = std::move(t);
        else if (name == "bias")
            net.params[layer].bias = std::move(t);
        else
            fail("weights: unknown tensor name '" + name + "'");
        expect_offset += bytes;
    }
    if (in.peek() != std::ifstream::traits_type::eof())
        fail("weights: trailing bytes after payload in '" + path + "'");

    const auto shapes = infer_shapes(net.spec);
    for (size_t i = 0; i < net.spec.layers.size(); ++i) {
        if (const auto* conv = std::get_if<Conv3dLayer>(&net.spec.layers[i])) {
            const std::vector<size_t> want{conv->out_channels, shapes[i].dims[0], conv->kernel,
                                           conv->kernel, conv->kernel};
            if (net.params[i].weights.shape() != want || net.params[i].bias.shape() !=
                                                             std::vector<size_t>{conv->out_channels})
                fail("weights: layer " + std::to_string(i) + " parameters missing or misshaped");
        } else if (const auto* dense = std::get_if<DenseLayer>(&net.spec.layers[i])) {
            const std::vector<size_t> want{dense->out_features, shapes[i].features()};
            if (net.params[i].weights.shape() != want ||
                net.params[i].bias.shape() != std::vector<size_t>{dense->out_features})
                fail("weights: layer " + std::to_string(i) + " parameters missing or misshaped");
        }
    }
    return net;
}

Network load_weights(const NetworkSpec& spec, const std::string& path) {
    Network net = load_network(path);
    if (!(net.spec == spec)) fail("weights: file '" + path + "' does not match the given spec");
    return net;
}

namespace {

size_t parse_count(const std::string& s, size_t line_no, const std::string& what) {
    try {
        size_t pos = 0;
        const unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size() || v == 0) throw std::invalid_argument(s);
        return static_cast<size_t>(v);
    } catch (const std::exception&) {
        fail("spec line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    }
}

// "pad" is the one argument allowed to be 0.
size_t parse_arg(const std::vector<std::string>& tokens, size_t line_no, const std::string& key,
                 bool allow_zero = false) {
    for (size_t i = 1; i < tokens.size(); ++i) {
        const auto eq = tokens[i].find('=');
        if (eq == std::string::npos)
            fail("spec line " + std::to_string(line_no) + ": expected key=value, got '" +
                 tokens[i] + "'");
        if (tokens[i].substr(0, eq) != key) continue;
        const std::string value = tokens[i].substr(eq + 1);
        if (allow_zero && value == "0") return 0;
        return parse_count(value, line_no, key);
    }
    fail("spec line " + std::to_string(line_no) + ": " + tokens[0] + " requires " + key + "=");
}

}  // namespace

NetworkSpec parse_network_spec(const std::string& text) {
    NetworkSpec spec;
    bool saw_input = false, saw_classes = false;
    std::istringstream stream(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::vector<std::string> tokens;
        for (std::string t; ls >> t;) tokens.push_back(t);
        if (tokens.empty()) continue;
        const std::string& head = tokens[0];
        if (head == "input") {
            if (tokens.size() != 2)
                fail("spec line " + std::to_string(line_no) + ": input takes one CxDxHxW value");
            std::array<size_t, 4> dims{};
            std::string part;
            std::istringstream ds(tokens[1]);
            size_t n = 0;
            while (std::getline(ds, part, 'x')) {
                if (n >= 4) fail("spec line " + std::to_string(line_no) + ": input needs 4 extents");
                dims[n++] = parse_count(part, line_no, "extent");
            }
            if (n != 4) fail("spec line " + std::to_string(line_no) + ": input needs 4 extents");
            spec.input_shape = dims;
            saw_input = true;
        } else if (head == "classes") {
            if (tokens.size() < 3)
                fail("spec line " + std::to_string(line_no) + ": classes needs at least 2 names");
            spec.class_names.assign(tokens.begin() + 1, tokens.end());
            saw_classes = true;
        } else if (head == "conv3d") {
            spec.layers.push_back(Conv3dLayer{parse_arg(tokens, line_no, "out"),
                                              parse_arg(tokens, line_no, "kernel"),
                                              parse_arg(tokens, line_no, "stride"),
                                              parse_arg(tokens, line_no, "pad", true)});
        } else if (head == "relu") {
            spec.layers.push_back(ReluLayer{});
        } else if (head == "maxpool3d") {
            spec.layers.push_back(MaxPool3dLayer{parse_arg(tokens, line_no, "window"),
                                                 parse_arg(tokens, line_no, "stride")});
        } else if (head == "flatten") {
            spec.layers.push_back(FlattenLayer{});
        } else if (head == "dense") {
            spec.layers.push_back(DenseLayer{parse_arg(tokens, line_no, "out")});
        } else {
            fail("spec line " + std::to_string(line_no) + ": unknown directive '" + head + "'");
        }
    }
    if (!saw_input) fail("spec: missing input line");
    if (!saw_classes) fail("spec: missing classes line");
    validate_spec(spec);
    return spec;
}

std::string print_network_spec(const NetworkSpec& spec) {
    std::ostringstream out;
    out << "input " << spec.input_shape[0] << "x" << spec.input_shape[1] << "x"
        << spec.input_shape[2] << "x" << spec.input_shape[3] << "\n";
    out << "classes";
    for (const auto& name : spec.class_names) out << " " << name;
    out << "\n";
    for (const auto& layer : spec.layers) {
        if (const auto* conv = std::get_if<Conv3dLayer>(&layer))
            out << "conv3d out=" << conv->out_channels << " kernel=" << conv->kernel
                << " stride=" << conv->stride << " pad=" << conv->pad << "\n";
        else if (std::holds_alternative<ReluLayer>(layer))
            out << "relu\n";
        else if (const auto* pool = std::get_if<MaxPool3dLayer>(&layer))
            out << "maxpool3d window=" << pool->window << " stride=" << pool->stride << "\n";
        else if (std::holds_alternative<FlattenLayer>(layer))
            out << "flatten\n";
        else
            out << "dense out=" << std::get<DenseLayer>(layer).out_features << "\n";
    }
    return out.str();
}

NetworkSpec desk_default_spec(std::vector<std::string> class_names) {
    NetworkSpec spec;
    spec.input_shape = {1, 16, 16, 16};
    spec.class_names = std::move(class_names);
    spec.layers = {
        Conv3dLayer{8, 3, 1, 1},  ReluLayer{}, MaxPool3dLayer{2, 2},
        Conv3dLayer{16, 3, 1, 1}, ReluLayer{}, MaxPool3dLayer{2, 2},
        Conv3dLayer{32, 3, 1, 1}, ReluLayer{}, MaxPool3dLayer{2, 2},
        FlattenLayer{},           DenseLayer{64},
        ReluLayer{},              DenseLayer{spec.class_names.size()},
    };
    return spec;
}

}  // namespace vx
