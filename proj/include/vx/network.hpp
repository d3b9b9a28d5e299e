#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "vx/ops.hpp"
#include "vx/tensor.hpp"

namespace vx {

// Layer descriptors are declarative; spatial parameters are cubic (one extent
// for all three axes), which is all the default architectures use.
struct Conv3dLayer {
    size_t out_channels = 1;
    size_t kernel = 3;
    size_t stride = 1;
    size_t pad = 0;
    bool operator==(const Conv3dLayer&) const = default;
};
struct ReluLayer {
    bool operator==(const ReluLayer&) const = default;
};
struct MaxPool3dLayer {
    size_t window = 2;
    size_t stride = 2;
    bool operator==(const MaxPool3dLayer&) const = default;
};
struct FlattenLayer {
    bool operator==(const FlattenLayer&) const = default;
};
struct DenseLayer {
    size_t out_features = 1;
    bool operator==(const DenseLayer&) const = default;
};
using LayerDesc = std::variant<Conv3dLayer, ReluLayer, MaxPool3dLayer, FlattenLayer, DenseLayer>;

const char* layer_name(const LayerDesc& layer);

struct NetworkSpec {
    std::vector<LayerDesc> layers;
    std::array<size_t, 4> input_shape{1, 1, 1, 1};  // (channels, depth, height, width)
    std::vector<std::string> class_names;
    bool operator==(const NetworkSpec&) const = default;
};

// Shape of the value flowing between layers: a (c, d, h, w) volume until a
// flatten layer turns it into a flat feature vector.
struct LayerShape {
    bool flat = false;
    std::array<size_t, 4> dims{};  // volume: (c, d, h, w); flat: (features, 1, 1, 1)
    size_t features() const { return dims[0] * dims[1] * dims[2] * dims[3]; }
    bool operator==(const LayerShape&) const = default;
};

// shapes[i] is the input of layer i; shapes[layers.size()] is the network
// output. Throws naming the first offending layer.
std::vector<LayerShape> infer_shapes(const NetworkSpec& spec);

// Full structural validation: non-empty layer list, shape inference succeeds,
// final layer Dense matching class_names (>= 2, unique).
void validate_spec(const NetworkSpec& spec);

struct LayerParams {
    Tensor weights;  // conv kernels (oc, ic, k, k, k) or dense weights (m, n)
    Tensor bias;
};

struct Network {
    NetworkSpec spec;
    std::vector<LayerParams> params;  // one entry per layer; empty for parameterless layers
};

// Fan-in scaled uniform initialization (variance 2/fan_in), zero biases,
// fully determined by the seed.
Network init_network(const NetworkSpec& spec, uint64_t rng_seed);

struct ActivationTrace {
    // acts[0] is the batched network input; acts[i + 1] is layer i's output,
    // so acts.back() holds the logits.
    std::vector<Tensor> acts;
    // Parallel to layers; non-empty only for maxpool3d layers.
    std::vector<std::vector<size_t>> pool_argmax;
    const Tensor& logits() const { return acts.back(); }
};

// Accepts a (c, d, h, w) volume or a (b, c, d, h, w) batch.
ActivationTrace forward(const Network& net, const Tensor& input);
// Same pass without retaining intermediates; returns logits only.
Tensor forward_logits(const Network& net, const Tensor& input);

struct PredictResult {
    size_t class_index = 0;
    std::string class_name;
    std::vector<double> probabilities;
};
// Single volume; ties broken to the smallest class index.
PredictResult predict(const Network& net, const Tensor& volume);

struct BackwardOptions {
    bool guided_relu = false;
    bool want_param_grads = true;
    // When set, receives the post-gating backward tensor at every ReLU layer
    // in backward (output-to-input) order.
    std::vector<Tensor>* relu_grad_sink = nullptr;
};

struct BackwardResult {
    Tensor grad_input;
    std::vector<LayerParams> param_grads;  // aligned with net.params when requested
};

BackwardResult backward(const Network& net, const ActivationTrace& trace,
                        const Tensor& grad_logits, const BackwardOptions& opts = {});

void save_weights(const Network& net, const std::string& path);
// Reads spec and parameters from the file alone.
Network load_network(const std::string& path);
// As load_network, but additionally requires the file's spec to equal `spec`.
Network load_weights(const NetworkSpec& spec, const std::string& path);

// One layer per line text form, round-trippable:
//   input 1x16x16x16
//   classes CN MCI AD
//   conv3d out=8 kernel=3 stride=1 pad=1
//   relu
//   maxpool3d window=2 stride=2
//   flatten
//   dense out=64
NetworkSpec parse_network_spec(const std::string& text);
std::string print_network_spec(const NetworkSpec& spec);

// Conv(8)-Pool-Conv(16)-Pool-Conv(32)-Pool-Dense(64)-Dense(|classes|) on a
// 1x16x16x16 input; the configuration every desk-scale run starts from.
NetworkSpec desk_default_spec(std::vector<std::string> class_names = {"CN", "MCI", "AD"});

}  // namespace vx
