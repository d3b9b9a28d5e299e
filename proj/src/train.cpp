#include "vx/train.hpp"

#include <cmath>
#include <cstring>
#include <numeric>

#include "vx/kernels.hpp"
#include "vx/rng.hpp"

namespace vx {

namespace {

void check_dataset(const Network& net, const Dataset& data, const char* op) {
    if (data.empty()) fail(std::string(op) + ": dataset is empty");
    const auto& want = net.spec.input_shape;
    const std::vector<size_t> want_shape{want[0], want[1], want[2], want[3]};
    for (size_t i = 0; i < data.size(); ++i) {
        if (data[i].volume.shape() != want_shape)
            fail(std::string(op) + ": sample " + std::to_string(i) + " has shape " +
                 shape_str(data[i].volume.shape()) + ", expected " + shape_str(want_shape));
        if (data[i].label >= net.spec.class_names.size())
            fail(std::string(op) + ": sample " + std::to_string(i) + " has label " +
                 std::to_string(data[i].label) + " for " +
                 std::to_string(net.spec.class_names.size()) + " classes");
    }
}

Tensor stack_batch(const Dataset& data, const std::vector<size_t>& order, size_t begin,
                   size_t count) {
    const auto& s = data[order[begin]].volume.shape();
    Tensor batch(std::vector<size_t>{count, s[0], s[1], s[2], s[3]});
    const size_t vol = data[order[begin]].volume.numel();
    for (size_t i = 0; i < count; ++i)
        std::memcpy(batch.data() + i * vol, data[order[begin + i]].volume.data(),
                    vol * sizeof(double));
    return batch;
}

size_t argmax_row(const double* row, size_t k) {
    size_t best = 0;
    for (size_t j = 1; j < k; ++j)
        if (row[j] > row[best]) best = j;
    return best;
}

}  // namespace

double scheduled_lr(const TrainConfig& cfg, size_t epoch) {
    if (cfg.decay_period_epochs == 0) fail("train: decay_period_epochs must be positive");
    return cfg.learning_rate *
           std::pow(cfg.lr_decay_factor,
                    static_cast<double>(epoch / cfg.decay_period_epochs));
}

TrainResult train(const Network& net, const Dataset& data, const TrainConfig& cfg) {
    check_dataset(net, data, "train");
    if (cfg.learning_rate <= 0.0) fail("train: learning_rate must be positive");
    if (cfg.lr_decay_factor <= 0.0 || cfg.lr_decay_factor > 1.0)
        fail("train: lr_decay_factor must be in (0, 1]");
    if (cfg.batch_size == 0) fail("train: batch_size must be positive");
    if (cfg.batch_size > data.size())
        fail("train: batch_size " + std::to_string(cfg.batch_size) + " exceeds dataset size " +
             std::to_string(data.size()));

    TrainResult result{net, {}};
    const auto& ker = kernels::active_kernels();
    Rng rng(cfg.rng_seed);
    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), size_t{0});

    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = scheduled_lr(cfg, epoch);
        rng.shuffle(order);
        double epoch_loss = 0.0;
        size_t correct = 0;

        for (size_t begin = 0; begin < data.size(); begin += cfg.batch_size) {
            const size_t count = std::min(cfg.batch_size, data.size() - begin);
            const Tensor batch = stack_batch(data, order, begin, count);
            std::vector<size_t> labels(count);
            for (size_t i = 0; i < count; ++i) labels[i] = data[order[begin + i]].label;

            const auto trace = forward(result.net, batch);
            const auto loss = softmax_cross_entropy(trace.logits(), labels);
            if (!std::isfinite(loss.loss))
                fail("train: non-finite loss in epoch " + std::to_string(epoch + 1));
            epoch_loss += loss.loss * static_cast<double>(count);
            const size_t k = result.net.spec.class_names.size();
            for (size_t i = 0; i < count; ++i)
                if (argmax_row(trace.logits().data() + i * k, k) == labels[i]) ++correct;

            const auto grads = backward(result.net, trace, loss.grad);
            for (size_t l = 0; l < result.net.params.size(); ++l) {
                auto& p = result.net.params[l];
                if (p.weights.empty()) continue;
                const auto& g = grads.param_grads[l];
                if (cfg.weight_decay_l2 > 0.0) {
                    Tensor gw = g.weights;
                    Tensor gb = g.bias;
                    ker.axpy(cfg.weight_decay_l2, p.weights.data(), gw.data(), gw.numel());
                    ker.axpy(cfg.weight_decay_l2, p.bias.data(), gb.data(), gb.numel());
                    ker.axpy(-lr, gw.data(), p.weights.data(), p.weights.numel());
                    ker.axpy(-lr, gb.data(), p.bias.data(), p.bias.numel());
                } else {
                    ker.axpy(-lr, g.weights.data(), p.weights.data(), p.weights.numel());
                    ker.axpy(-lr, g.bias.data(), p.bias.data(), p.bias.numel());
                }
            }
        }

        result.metrics.push_back(EpochMetrics{
            epoch + 1, lr, epoch_loss / static_cast<double>(data.size()),
            static_cast<double>(correct) / static_cast<double>(data.size())});
    }
    return result;
}

Evaluation evaluate(const Network& net, const Dataset& data) {
    check_dataset(net, data, "evaluate");
    const size_t k = net.spec.class_names.size();
    Evaluation ev;
    ev.confusion.assign(k, std::vector<size_t>(k, 0));
    size_t correct = 0;
    for (const auto& sample : data) {
        const auto pred = predict(net, sample.volume);
        ev.confusion[sample.label][pred.class_index] += 1;
        if (pred.class_index == sample.label) ++correct;
    }
    ev.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    return ev;
}

}  // namespace vx
