#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "vx/tensor.hpp"

namespace vx {

// Spatial axis order everywhere: (depth, height, width).
struct ConvParams {
    Tensor kernels;  // (out_channels, in_channels, kd, kh, kw)
    Tensor bias;     // (out_channels)
    std::array<size_t, 3> stride{1, 1, 1};
    std::array<size_t, 3> pad{0, 0, 0};
};

struct PoolParams {
    std::array<size_t, 3> window{2, 2, 2};
    std::array<size_t, 3> stride{2, 2, 2};
};

// (in + 2*pad - k) / stride + 1; throws unless the division is exact and the
// result positive, naming `axis` in the message.
size_t conv_out_extent(size_t in, size_t k, size_t stride, size_t pad, const char* axis);

Tensor conv3d_forward(const Tensor& input, const ConvParams& p);

struct ConvGrads {
    Tensor input;
    Tensor kernels;
    Tensor bias;
};
ConvGrads conv3d_backward(const Tensor& input, const ConvParams& p, const Tensor& grad_out);

// Gradient with respect to the input only (the convolution is linear in the
// input, so the original input values are not needed).
Tensor conv3d_backward_data(const std::vector<size_t>& input_shape, const ConvParams& p,
                            const Tensor& grad_out);

struct MaxPoolResult {
    Tensor output;
    // Per output element, the linear index of the winning input element.
    // Ties go to the smallest linear index.
    std::vector<size_t> argmax;
};
MaxPoolResult maxpool3d_forward(const Tensor& input, const PoolParams& p);
Tensor maxpool3d_backward(const std::vector<size_t>& argmax, const Tensor& grad_out,
                          const std::vector<size_t>& input_shape);

Tensor relu_forward(const Tensor& input);
// grad_out where input > 0, else 0; the gradient at exactly 0 is 0.
Tensor relu_backward(const Tensor& input, const Tensor& grad_out);
// grad_out where input > 0 and grad_out > 0, else 0.
Tensor guided_relu_backward(const Tensor& input, const Tensor& grad_out);

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct DenseGrads {
    Tensor input;
    Tensor weights;
    Tensor bias;
};
DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out);

// Row-wise, max-subtracted for stability. logits: (batch, k), k >= 2.
Tensor softmax(const Tensor& logits);

struct LossResult {
    double loss = 0.0;
    Tensor grad;  // with respect to the first argument
};
// Mean negative log-probability of the true class; grad is w.r.t. probs.
LossResult cross_entropy(const Tensor& probs, const std::vector<size_t>& labels);
// Fused path used by training; grad is w.r.t. logits: (softmax - onehot)/batch.
LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<size_t>& labels);

}  // namespace vx
