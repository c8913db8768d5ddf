#pragma once

#include <string>
#include <vector>

#include "sonobox/nn/ops.hpp"
#include "sonobox/rng.hpp"

namespace sonobox::nn {

// Named view into a layer's state. Trainable entries receive optimizer
// updates; the rest (batch-norm running stats) only ride along in
// checkpoints.
struct NamedParam {
    std::string name;
    Tensor* tensor = nullptr;
    bool trainable = true;
};

class Conv2d {
public:
    Conv2d(std::string name, int c_in, int c_out, int kernel, int stride, int pad, Rng& rng);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy);  // accumulates into w.grad / b.grad
    void collect(std::vector<NamedParam>& out);

    Tensor w, b;

private:
    std::string name_;
    int stride_, pad_;
    Tensor x_cache_;
};

class Deconv2d {
public:
    Deconv2d(std::string name, int c_in, int c_out, int kernel, int stride, int pad, int out_pad,
             Rng& rng);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy);
    void collect(std::vector<NamedParam>& out);

    Tensor w, b;

private:
    std::string name_;
    int stride_, pad_, out_pad_;
    Tensor x_cache_;
};

class BatchNorm2d {
public:
    BatchNorm2d(std::string name, int channels);

    Tensor forward(const Tensor& x, bool training);
    Tensor backward(const Tensor& gy);
    void collect(std::vector<NamedParam>& out);

    Tensor gamma, beta, running_mean, running_var;
    double momentum = 0.1;
    double eps = 1e-5;

private:
    std::string name_;
    BatchNormCache cache_;
    bool last_training_ = false;
    std::vector<double> eval_scale_;  // gamma/sqrt(running_var+eps) at forward time
};

}  // namespace sonobox::nn
