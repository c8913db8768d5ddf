#pragma once

#include <utility>

#include "sonobox/nn/tensor.hpp"

namespace sonobox::nn {

// Convolution geometry: out = floor((in + 2*pad - kernel)/stride) + 1.
int conv_out_dim(int in, int kernel, int stride, int pad);
// Transposed convolution: out = (in - 1)*stride - 2*pad + kernel + out_pad.
int deconv_out_dim(int in, int kernel, int stride, int pad, int out_pad);

// weight shape (C_out, C_in, K, K); bias (1, C_out, 1, 1).
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad);
struct Conv2dGrads {
    Tensor gx, gw, gb;
};
Conv2dGrads conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& gy, int stride,
                            int pad);

// weight shape (C_in, C_out, K, K); bias (1, C_out, 1, 1).
Tensor deconv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad,
                        int out_pad);
Conv2dGrads deconv2d_backward(const Tensor& x, const Tensor& w, const Tensor& gy, int stride,
                              int pad, int out_pad);

struct BatchNormCache {
    Tensor xhat;
    std::vector<double> mean, inv_std;
};
// gamma/beta (1, C, 1, 1). Training mode normalizes with batch statistics
// and updates running stats in place; eval mode uses the running stats.
Tensor batchnorm_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                         Tensor& running_mean, Tensor& running_var, bool training,
                         double momentum, double eps, BatchNormCache* cache);
struct BatchNormGrads {
    Tensor gx, ggamma, gbeta;
};
BatchNormGrads batchnorm_backward(const Tensor& gy, const Tensor& gamma,
                                  const BatchNormCache& cache);

Tensor relu_forward(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& gy);

Tensor sigmoid_forward(const Tensor& x);
// takes the forward output, not the input
Tensor sigmoid_backward(const Tensor& y, const Tensor& gy);

// value and gradient with respect to pred
std::pair<double, Tensor> mse_loss(const Tensor& pred, const Tensor& target);
std::pair<double, Tensor> l1_loss(const Tensor& pred, const Tensor& target);

// Nearest-neighbor spatial resize and its adjoint.
Tensor resize_nearest(const Tensor& x, int out_h, int out_w);
Tensor resize_nearest_backward(const Tensor& x, const Tensor& gy, int out_h, int out_w);

// Channel-dimension concatenation and the matching split of a gradient.
Tensor concat_channels(const Tensor& a, const Tensor& b);
std::pair<Tensor, Tensor> split_channels(const Tensor& g, int c_first);

}  // namespace sonobox::nn
