#pragma once

#include <cstdint>
#include <vector>

#include "vx/network.hpp"
#include "vx/tensor.hpp"

namespace vx {

struct TrainConfig {
    double learning_rate = 0.0001;
    double lr_decay_factor = 0.1;
    size_t decay_period_epochs = 7;
    size_t batch_size = 16;
    size_t epochs = 1;
    uint64_t rng_seed = 0;
    // True L2 regularization; off by default (the default schedule decays the
    // learning rate instead).
    double weight_decay_l2 = 0.0;
};

struct Sample {
    Tensor volume;  // (c, d, h, w)
    size_t label = 0;
};
using Dataset = std::vector<Sample>;

struct EpochMetrics {
    size_t epoch = 0;  // 1-based
    double learning_rate = 0.0;
    double loss = 0.0;
    double accuracy = 0.0;
};

// base * factor^(epoch / period) with integer division; epoch is 0-based.
double scheduled_lr(const TrainConfig& cfg, size_t epoch);

struct TrainResult {
    Network net;
    std::vector<EpochMetrics> metrics;
};

// Plain SGD on softmax cross-entropy. Sample order is reshuffled every epoch
// from a single seeded stream; identical (net, data, cfg) rerun bitwise.
TrainResult train(const Network& net, const Dataset& data, const TrainConfig& cfg);

struct Evaluation {
    double accuracy = 0.0;
    // confusion[true_label][predicted_label]
    std::vector<std::vector<size_t>> confusion;
};
Evaluation evaluate(const Network& net, const Dataset& data);

}  // namespace vx
