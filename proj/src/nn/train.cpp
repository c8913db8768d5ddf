#include "sonobox/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sonobox/common.hpp"
#include "sonobox/rng.hpp"

namespace sonobox::nn {

namespace {

size_t input_len(const ModelConfig& cfg) {
    return static_cast<size_t>(cfg.in_channels) * cfg.input_hw * cfg.input_hw;
}

size_t target_len(const ModelConfig& cfg) {
    return static_cast<size_t>(cfg.out_channels) * cfg.input_hw * cfg.input_hw;
}

std::pair<double, Tensor> compute_loss(LossKind kind, const Tensor& pred, const Tensor& target) {
    return kind == LossKind::SquaredError ? mse_loss(pred, target) : l1_loss(pred, target);
}

}  // namespace

Tensor batch_inputs(const std::vector<TrainSample>& samples, const std::vector<int>& idx,
                    const ModelConfig& cfg) {
    const size_t len = input_len(cfg);
    Tensor x(static_cast<int>(idx.size()), cfg.in_channels, cfg.input_hw, cfg.input_hw);
    for (size_t k = 0; k < idx.size(); ++k) {
        const TrainSample& s = samples[idx[k]];
        if (s.input.size() != len) throw DataError("train sample input has wrong length");
        for (size_t i = 0; i < len; ++i) x.data[k * len + i] = s.input[i];
    }
    return x;
}

Tensor batch_targets(const std::vector<TrainSample>& samples, const std::vector<int>& idx,
                     const ModelConfig& cfg) {
    const size_t len = target_len(cfg);
    Tensor y(static_cast<int>(idx.size()), cfg.out_channels, cfg.input_hw, cfg.input_hw);
    for (size_t k = 0; k < idx.size(); ++k) {
        const TrainSample& s = samples[idx[k]];
        if (s.target.size() != len) throw DataError("train sample target has wrong length");
        for (size_t i = 0; i < len; ++i) y.data[k * len + i] = s.target[i];
    }
    return y;
}

double evaluate_loss(SceneModel& model, const std::vector<TrainSample>& samples, LossKind loss,
                     int batch_size) {
    if (samples.empty()) return 0.0;
    double total = 0.0;
    for (size_t start = 0; start < samples.size(); start += batch_size) {
        const size_t stop = std::min(samples.size(), start + batch_size);
        std::vector<int> idx(stop - start);
        std::iota(idx.begin(), idx.end(), static_cast<int>(start));
        const Tensor x = batch_inputs(samples, idx, model.config());
        const Tensor t = batch_targets(samples, idx, model.config());
        const Tensor pred = model.forward(x, false);
        total += compute_loss(loss, pred, t).first * static_cast<double>(idx.size());
    }
    return total / static_cast<double>(samples.size());
}

std::vector<EpochStats> train_model(SceneModel& model, const std::vector<TrainSample>& train,
                                    const std::vector<TrainSample>& val, const TrainConfig& cfg,
                                    const std::function<void(const EpochStats&)>& on_epoch) {
    if (train.empty()) throw DataError("train_model: empty training set");
    if (cfg.epochs <= 0 || cfg.batch_size <= 0)
        throw ConfigError("train_model: epochs and batch size must be positive");

    Adam adam(model.params(), cfg.base_lr);
    std::vector<EpochStats> history;
    std::vector<int> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        adam.lr = lr_schedule(epoch, cfg.base_lr, cfg.lr_milestones);

        Rng rng(hash_seed(cfg.shuffle_seed, static_cast<std::uint64_t>(epoch)));
        for (size_t i = order.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(rng.integer(i));
            std::swap(order[i - 1], order[j]);
        }

        double train_total = 0.0;
        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const size_t stop = std::min(order.size(), start + cfg.batch_size);
            const std::vector<int> idx(order.begin() + start, order.begin() + stop);
            const Tensor x = batch_inputs(train, idx, model.config());
            const Tensor t = batch_targets(train, idx, model.config());

            const Tensor pred = model.forward(x, true);
            auto [loss, grad] = compute_loss(cfg.loss, pred, t);
            if (!std::isfinite(loss)) {
                throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(start / cfg.batch_size));
            }
            train_total += loss * static_cast<double>(idx.size());

            model.zero_grad();
            model.backward(grad);
            adam.step();
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = adam.lr;
        stats.train_loss = train_total / static_cast<double>(train.size());
        stats.val_loss = evaluate_loss(model, val, cfg.loss, cfg.batch_size);
        history.push_back(stats);
        if (on_epoch) on_epoch(stats);
    }
    return history;
}

}  // namespace sonobox::nn
