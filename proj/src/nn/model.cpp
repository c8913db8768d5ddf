#include "sonobox/nn/model.hpp"

#include <cmath>
#include <map>

#include "sonobox/common.hpp"

namespace sonobox::nn {

namespace {

int scaled(double scale, int f) {
    const int v = static_cast<int>(std::lround(scale * f));
    return v < 1 ? 1 : v;
}

}  // namespace

std::vector<int> ModelConfig::encoder_filters() const {
    std::vector<int> out;
    for (int f : kBaseEncoderFilters) out.push_back(scaled(filter_scale, f));
    return out;
}

std::vector<int> ModelConfig::decoder_filters() const {
    std::vector<int> out;
    for (int f : kBaseDecoderFilters) out.push_back(scaled(filter_scale, f));
    return out;
}

int ModelConfig::latent_channels() const { return 2 * encoder_filters().back(); }

ModelConfig ModelConfig::paper_scale(int out_channels) {
    ModelConfig cfg;
    cfg.out_channels = out_channels;
    cfg.filter_scale = 1.0;
    return cfg;
}

ModelConfig ModelConfig::desk_scale(int out_channels) {
    ModelConfig cfg;
    cfg.out_channels = out_channels;
    cfg.filter_scale = 0.25;
    return cfg;
}

void ModelConfig::validate() const {
    if (in_channels <= 0) throw ConfigError("model: in_channels must be positive");
    if (out_channels != 1 && out_channels != 3)
        throw ConfigError("model: out_channels must be 1 or 3");
    if (input_hw != 128) throw ConfigError("model: input must be 128x128");
    if (!(filter_scale > 0.0)) throw ConfigError("model: filter_scale must be positive");
}

SceneModel::EncoderStage::EncoderStage(int index, int c_in, int f, Rng& rng)
    : main("enc" + std::to_string(index) + ".main", c_in, f, 4, 2, 1, rng),
      main_bn("enc" + std::to_string(index) + ".main_bn", f),
      aux("enc" + std::to_string(index) + ".aux", c_in, f, 4, 3, 1, rng),
      aux_bn("enc" + std::to_string(index) + ".aux_bn", f),
      filters(f) {}

Tensor SceneModel::EncoderStage::forward(const Tensor& x, bool training, StageShape& aux_shape) {
    Tensor a = main_bn.forward(main.forward(x), training);
    main_pre = a;
    a = relu_forward(a);

    Tensor u = aux_bn.forward(aux.forward(x), training);
    aux_pre = u;
    u = relu_forward(u);
    aux_act = u;
    aux_shape = {u.c(), u.h(), u.w()};

    Tensor ur = resize_nearest(u, a.h(), a.w());
    return concat_channels(a, ur);
}

Tensor SceneModel::EncoderStage::backward(const Tensor& gy) {
    auto [ga, gur] = split_channels(gy, filters);

    Tensor gu = resize_nearest_backward(aux_act, gur, gur.h(), gur.w());
    gu = relu_backward(aux_pre, gu);
    gu = aux_bn.backward(gu);
    Tensor gx = aux.backward(gu);

    ga = relu_backward(main_pre, ga);
    ga = main_bn.backward(ga);
    Tensor gx_main = main.backward(ga);

    for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += gx_main.data[i];
    return gx;
}

void SceneModel::EncoderStage::collect(std::vector<NamedParam>& out) {
    main.collect(out);
    main_bn.collect(out);
    aux.collect(out);
    aux_bn.collect(out);
}

SceneModel::DecoderStage::DecoderStage(int index, int c_in, int g, Rng& rng)
    : a_deconv("dec" + std::to_string(index) + ".a", c_in, g, 4, 2, 1, 0, rng),
      a_bn("dec" + std::to_string(index) + ".a_bn", g),
      b_conv("dec" + std::to_string(index) + ".b_conv", c_in, g, 3, 1, 1, rng),
      b_conv_bn("dec" + std::to_string(index) + ".b_conv_bn", g),
      b_deconv("dec" + std::to_string(index) + ".b_deconv", g, g, 3, 2, 1, 1, rng),
      b_deconv_bn("dec" + std::to_string(index) + ".b_deconv_bn", g),
      filters(g) {}

Tensor SceneModel::DecoderStage::forward(const Tensor& x, bool training) {
    Tensor a = a_bn.forward(a_deconv.forward(x), training);
    a_pre = a;
    a = relu_forward(a);

    Tensor b = b_conv_bn.forward(b_conv.forward(x), training);
    b_conv_pre = b;
    b = relu_forward(b);
    b = b_deconv_bn.forward(b_deconv.forward(b), training);
    b_deconv_pre = b;
    b = relu_forward(b);

    return concat_channels(a, b);
}

Tensor SceneModel::DecoderStage::backward(const Tensor& gy) {
    auto [ga, gb] = split_channels(gy, filters);

    gb = relu_backward(b_deconv_pre, gb);
    gb = b_deconv_bn.backward(gb);
    gb = b_deconv.backward(gb);
    gb = relu_backward(b_conv_pre, gb);
    gb = b_conv_bn.backward(gb);
    Tensor gx = b_conv.backward(gb);

    ga = relu_backward(a_pre, ga);
    ga = a_bn.backward(ga);
    Tensor gx_a = a_deconv.backward(ga);

    for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += gx_a.data[i];
    return gx;
}

void SceneModel::DecoderStage::collect(std::vector<NamedParam>& out) {
    a_deconv.collect(out);
    a_bn.collect(out);
    b_conv.collect(out);
    b_conv_bn.collect(out);
    b_deconv.collect(out);
    b_deconv_bn.collect(out);
}

SceneModel::SceneModel(const ModelConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      head_([&] {
          cfg.validate();
          Rng head_rng(hash_seed(seed, 1000));
          const int g_last = cfg.decoder_filters().back();
          return Deconv2d("head", 2 * g_last, cfg.out_channels, 4, 2, 1, 0, head_rng);
      }()) {
    const std::vector<int> ef = cfg_.encoder_filters();
    const std::vector<int> df = cfg_.decoder_filters();

    int c = cfg_.in_channels;
    for (int i = 0; i < static_cast<int>(ef.size()); ++i) {
        Rng rng(hash_seed(seed, static_cast<std::uint64_t>(i)));
        encoder_.emplace_back(i + 1, c, ef[i], rng);
        c = 2 * ef[i];
    }
    for (int j = 0; j < static_cast<int>(df.size()); ++j) {
        Rng rng(hash_seed(seed, static_cast<std::uint64_t>(100 + j)));
        decoder_.emplace_back(j + 1, c, df[j], rng);
        c = 2 * df[j];
    }
}

Tensor SceneModel::run_encoder(const Tensor& x, bool training) {
    if (x.c() != cfg_.in_channels || x.h() != cfg_.input_hw || x.w() != cfg_.input_hw)
        throw DomainError("model: input tensor dims do not match the configuration");
    encoder_trace_.clear();
    aux_trace_.clear();
    Tensor h = x;
    for (auto& stage : encoder_) {
        StageShape aux_shape;
        h = stage.forward(h, training, aux_shape);
        encoder_trace_.push_back({h.c(), h.h(), h.w()});
        aux_trace_.push_back(aux_shape);
    }
    return h;
}

Tensor SceneModel::forward(const Tensor& x, bool training) {
    Tensor h = run_encoder(x, training);
    decoder_trace_.clear();
    for (auto& stage : decoder_) {
        h = stage.forward(h, training);
        decoder_trace_.push_back({h.c(), h.h(), h.w()});
    }
    h = head_.forward(h);
    head_out_ = sigmoid_forward(h);
    decoder_trace_.push_back({head_out_.c(), head_out_.h(), head_out_.w()});
    return head_out_;
}

Tensor SceneModel::backward(const Tensor& gy) {
    Tensor g = sigmoid_backward(head_out_, gy);
    g = head_.backward(g);
    for (auto it = decoder_.rbegin(); it != decoder_.rend(); ++it) g = it->backward(g);
    for (auto it = encoder_.rbegin(); it != encoder_.rend(); ++it) g = it->backward(g);
    return g;
}

Tensor SceneModel::embed(const Tensor& x) {
    Tensor h = run_encoder(x, false);
    if (h.h() != 1 || h.w() != 1) throw DomainError("model: embedding is not 1x1");
    return h;
}

void SceneModel::zero_grad() {
    for (NamedParam& p : params()) p.tensor->zero_grad();
}

std::vector<NamedParam> SceneModel::params() {
    std::vector<NamedParam> out;
    for (NamedParam& p : named_state())
        if (p.trainable) out.push_back(p);
    return out;
}

std::vector<NamedParam> SceneModel::named_state() {
    std::vector<NamedParam> out;
    for (auto& stage : encoder_) stage.collect(out);
    for (auto& stage : decoder_) stage.collect(out);
    head_.collect(out);
    return out;
}

void SceneModel::load_state(const std::vector<std::pair<std::string, Tensor>>& state) {
    std::map<std::string, const Tensor*> by_name;
    for (const auto& [name, tensor] : state) by_name[name] = &tensor;
    for (NamedParam& p : named_state()) {
        auto it = by_name.find(p.name);
        if (it == by_name.end()) throw DataError("checkpoint missing tensor: " + p.name);
        if (it->second->shape != p.tensor->shape)
            throw DataError("checkpoint shape mismatch for tensor: " + p.name);
        p.tensor->data = it->second->data;
        by_name.erase(it);
    }
    if (!by_name.empty())
        throw DataError("checkpoint has unexpected tensor: " + by_name.begin()->first);
}

}  // namespace sonobox::nn
