#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sonobox/nn/model.hpp"
#include "sonobox/nn/optimizer.hpp"

namespace sonobox::nn {

// Samples hold float32 to keep large datasets in memory; tensors are
// built per batch in double.
struct TrainSample {
    std::vector<float> input;   // in_channels * hw * hw
    std::vector<float> target;  // out_channels * hw * hw
};

enum class LossKind { SquaredError, AbsoluteError };

struct TrainConfig {
    int epochs = 60;
    int batch_size = 32;
    double base_lr = 1e-3;
    std::vector<int> lr_milestones = {20, 50, 100};
    LossKind loss = LossKind::SquaredError;
    std::uint64_t shuffle_seed = 0;
};

struct EpochStats {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

Tensor batch_inputs(const std::vector<TrainSample>& samples, const std::vector<int>& idx,
                    const ModelConfig& cfg);
Tensor batch_targets(const std::vector<TrainSample>& samples, const std::vector<int>& idx,
                     const ModelConfig& cfg);

// Average loss over a dataset with the model in eval mode.
double evaluate_loss(SceneModel& model, const std::vector<TrainSample>& samples, LossKind loss,
                     int batch_size);

// Full training run. Shuffling is derived from the config seed alone so
// identical inputs give identical parameter trajectories. Throws
// NumericError if the loss goes non-finite.
std::vector<EpochStats> train_model(SceneModel& model, const std::vector<TrainSample>& train,
                                    const std::vector<TrainSample>& val, const TrainConfig& cfg,
                                    const std::function<void(const EpochStats&)>& on_epoch = {});

}  // namespace sonobox::nn
