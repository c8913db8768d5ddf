#include "sonobox/nn/layers.hpp"

#include <cmath>
#include <utility>

namespace sonobox::nn {

namespace {

void fill_uniform(Tensor& t, double bound, Rng& rng) {
    for (double& v : t.data) v = rng.uniform(-bound, bound);
}

}  // namespace

Conv2d::Conv2d(std::string name, int c_in, int c_out, int kernel, int stride, int pad, Rng& rng)
    : w(c_out, c_in, kernel, kernel, true),
      b(1, c_out, 1, 1, true),
      name_(std::move(name)),
      stride_(stride),
      pad_(pad) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(c_in) * kernel * kernel);
    fill_uniform(w, bound, rng);
    fill_uniform(b, bound, rng);
}

Tensor Conv2d::forward(const Tensor& x) {
    x_cache_ = x;
    return conv2d_forward(x, w, b, stride_, pad_);
}

Tensor Conv2d::backward(const Tensor& gy) {
    Conv2dGrads g = conv2d_backward(x_cache_, w, gy, stride_, pad_);
    for (size_t i = 0; i < w.data.size(); ++i) w.grad[i] += g.gw.data[i];
    for (size_t i = 0; i < b.data.size(); ++i) b.grad[i] += g.gb.data[i];
    return g.gx;
}

void Conv2d::collect(std::vector<NamedParam>& out) {
    out.push_back({name_ + ".weight", &w, true});
    out.push_back({name_ + ".bias", &b, true});
}

Deconv2d::Deconv2d(std::string name, int c_in, int c_out, int kernel, int stride, int pad,
                   int out_pad, Rng& rng)
    : w(c_in, c_out, kernel, kernel, true),
      b(1, c_out, 1, 1, true),
      name_(std::move(name)),
      stride_(stride),
      pad_(pad),
      out_pad_(out_pad) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(c_in) * kernel * kernel);
    fill_uniform(w, bound, rng);
    fill_uniform(b, bound, rng);
}

Tensor Deconv2d::forward(const Tensor& x) {
    x_cache_ = x;
    return deconv2d_forward(x, w, b, stride_, pad_, out_pad_);
}

Tensor Deconv2d::backward(const Tensor& gy) {
    Conv2dGrads g = deconv2d_backward(x_cache_, w, gy, stride_, pad_, out_pad_);
    for (size_t i = 0; i < w.data.size(); ++i) w.grad[i] += g.gw.data[i];
    for (size_t i = 0; i < b.data.size(); ++i) b.grad[i] += g.gb.data[i];
    return g.gx;
}

void Deconv2d::collect(std::vector<NamedParam>& out) {
    out.push_back({name_ + ".weight", &w, true});
    out.push_back({name_ + ".bias", &b, true});
}

BatchNorm2d::BatchNorm2d(std::string name, int channels)
    : gamma(1, channels, 1, 1, true),
      beta(1, channels, 1, 1, true),
      running_mean(1, channels, 1, 1, false),
      running_var(1, channels, 1, 1, false),
      name_(std::move(name)) {
    for (double& v : gamma.data) v = 1.0;
    for (double& v : running_var.data) v = 1.0;
}

Tensor BatchNorm2d::forward(const Tensor& x, bool training) {
    last_training_ = training;
    if (!training) {
        eval_scale_.assign(x.c(), 0.0);
        for (int c = 0; c < x.c(); ++c)
            eval_scale_[c] = gamma.data[c] / std::sqrt(running_var.data[c] + eps);
    }
    return batchnorm_forward(x, gamma, beta, running_mean, running_var, training, momentum, eps,
                             &cache_);
}

Tensor BatchNorm2d::backward(const Tensor& gy) {
    if (!last_training_) {
        // Eval-mode normalization is a fixed affine map per channel.
        Tensor gx = zeros_like(gy);
        const int plane = gy.h() * gy.w();
        for (int n = 0; n < gy.n(); ++n)
            for (int c = 0; c < gy.c(); ++c) {
                const double k = eval_scale_[c];
                const size_t base = (static_cast<size_t>(n) * gy.c() + c) * plane;
                double gg = 0.0, gb = 0.0;
                for (int i = 0; i < plane; ++i) {
                    gx.data[base + i] = gy.data[base + i] * k;
                    gg += gy.data[base + i] * cache_.xhat.data[base + i];
                    gb += gy.data[base + i];
                }
                gamma.grad[c] += gg;
                beta.grad[c] += gb;
            }
        return gx;
    }
    BatchNormGrads g = batchnorm_backward(gy, gamma, cache_);
    for (size_t i = 0; i < gamma.data.size(); ++i) gamma.grad[i] += g.ggamma.data[i];
    for (size_t i = 0; i < beta.data.size(); ++i) beta.grad[i] += g.gbeta.data[i];
    return g.gx;
}

void BatchNorm2d::collect(std::vector<NamedParam>& out) {
    out.push_back({name_ + ".gamma", &gamma, true});
    out.push_back({name_ + ".beta", &beta, true});
    out.push_back({name_ + ".running_mean", &running_mean, false});
    out.push_back({name_ + ".running_var", &running_var, false});
}

}  // namespace sonobox::nn
