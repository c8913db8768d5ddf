#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sonobox/nn/layers.hpp"

namespace sonobox::nn {

struct ModelConfig {
    int in_channels = 4;
    int out_channels = 3;  // 3 for the color target, 1 for depth
    int input_hw = 128;
    double filter_scale = 1.0;

    static constexpr std::array<int, 7> kBaseEncoderFilters{32, 32, 64, 128, 128, 128, 128};
    static constexpr std::array<int, 6> kBaseDecoderFilters{128, 128, 128, 64, 32, 16};

    std::vector<int> encoder_filters() const;
    std::vector<int> decoder_filters() const;
    int latent_channels() const;

    static ModelConfig paper_scale(int out_channels);
    static ModelConfig desk_scale(int out_channels);

    void validate() const;
};

struct StageShape {
    int channels = 0;
    int h = 0;
    int w = 0;
};

// Encoder: seven stages. Each runs a stride-2 4x4 conv and a parallel
// stride-3 4x4 conv; the stride-3 output is nearest-resized to the
// stride-2 output's dims and the two are concatenated on channels.
// Decoder: six stages of two branches (direct 4x4 stride-2 deconv;
// 3x3 conv then 3x3 stride-2 deconv), concatenated, then one final
// 4x4 stride-2 deconv with a sigmoid and no batch norm.
class SceneModel {
public:
    SceneModel(const ModelConfig& cfg, std::uint64_t seed);

    Tensor forward(const Tensor& x, bool training);
    Tensor backward(const Tensor& gy);
    Tensor embed(const Tensor& x);

    void zero_grad();
    std::vector<NamedParam> params();       // trainable tensors only
    std::vector<NamedParam> named_state();  // everything, checkpoint order
    void load_state(const std::vector<std::pair<std::string, Tensor>>& state);

    const ModelConfig& config() const { return cfg_; }
    // filled by the latest forward(): output shape of every stage plus the head
    const std::vector<StageShape>& encoder_trace() const { return encoder_trace_; }
    const std::vector<StageShape>& decoder_trace() const { return decoder_trace_; }
    // stride-3 branch output dims before resizing, per encoder stage
    const std::vector<StageShape>& aux_trace() const { return aux_trace_; }

private:
    struct EncoderStage {
        Conv2d main;
        BatchNorm2d main_bn;
        Conv2d aux;
        BatchNorm2d aux_bn;
        Tensor main_pre, aux_pre, aux_act;
        int filters;

        EncoderStage(int index, int c_in, int f, Rng& rng);
        Tensor forward(const Tensor& x, bool training, StageShape& aux_shape);
        Tensor backward(const Tensor& gy);
        void collect(std::vector<NamedParam>& out);
    };

    struct DecoderStage {
        Deconv2d a_deconv;
        BatchNorm2d a_bn;
        Conv2d b_conv;
        BatchNorm2d b_conv_bn;
        Deconv2d b_deconv;
        BatchNorm2d b_deconv_bn;
        Tensor a_pre, b_conv_pre, b_deconv_pre;
        int filters;

        DecoderStage(int index, int c_in, int g, Rng& rng);
        Tensor forward(const Tensor& x, bool training);
        Tensor backward(const Tensor& gy);
        void collect(std::vector<NamedParam>& out);
    };

    Tensor run_encoder(const Tensor& x, bool training);

    ModelConfig cfg_;
    std::vector<EncoderStage> encoder_;
    std::vector<DecoderStage> decoder_;
    Deconv2d head_;
    Tensor head_out_;
    std::vector<StageShape> encoder_trace_, decoder_trace_, aux_trace_;
};

}  // namespace sonobox::nn
