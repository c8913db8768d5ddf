#include "sonobox/nn/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace sonobox::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Eigen::MatrixXd;

// col(c*K*K + kh*K + kw, h*W_map + w) = src[n](c, h*stride - pad + kh, w*stride - pad + kw)
void im2col(const Tensor& src, int n, int kernel, int stride, int pad, int h_map, int w_map,
            MatrixXd& col) {
    const int C = src.c(), H = src.h(), W = src.w();
    col.setZero(static_cast<Eigen::Index>(C) * kernel * kernel,
                static_cast<Eigen::Index>(h_map) * w_map);
    for (int c = 0; c < C; ++c) {
        for (int kh = 0; kh < kernel; ++kh) {
            for (int kw = 0; kw < kernel; ++kw) {
                const int row = (c * kernel + kh) * kernel + kw;
                for (int h = 0; h < h_map; ++h) {
                    const int sh = h * stride - pad + kh;
                    if (sh < 0 || sh >= H) continue;
                    for (int w = 0; w < w_map; ++w) {
                        const int sw = w * stride - pad + kw;
                        if (sw < 0 || sw >= W) continue;
                        col(row, h * w_map + w) = src.at(n, c, sh, sw);
                    }
                }
            }
        }
    }
}

// scatter-add transpose of im2col
void col2im_add(const MatrixXd& col, int n, int kernel, int stride, int pad, int h_map,
                int w_map, Tensor& dst) {
    const int C = dst.c(), H = dst.h(), W = dst.w();
    for (int c = 0; c < C; ++c) {
        for (int kh = 0; kh < kernel; ++kh) {
            for (int kw = 0; kw < kernel; ++kw) {
                const int row = (c * kernel + kh) * kernel + kw;
                for (int h = 0; h < h_map; ++h) {
                    const int sh = h * stride - pad + kh;
                    if (sh < 0 || sh >= H) continue;
                    for (int w = 0; w < w_map; ++w) {
                        const int sw = w * stride - pad + kw;
                        if (sw < 0 || sw >= W) continue;
                        dst.at(n, c, sh, sw) += col(row, h * w_map + w);
                    }
                }
            }
        }
    }
}

}  // namespace

int conv_out_dim(int in, int kernel, int stride, int pad) {
    const int out = (in + 2 * pad - kernel) / stride + 1;
    if (in + 2 * pad < kernel || out <= 0) throw DomainError("convolution output would be empty");
    return out;
}

int deconv_out_dim(int in, int kernel, int stride, int pad, int out_pad) {
    const int out = (in - 1) * stride - 2 * pad + kernel + out_pad;
    if (out <= 0) throw DomainError("transposed convolution output would be empty");
    return out;
}

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
    const int K = w.h();
    if (w.c() != x.c()) throw DomainError("conv2d: weight input channels do not match input");
    if (b.c() != w.n()) throw DomainError("conv2d: bias does not match output channels");
    const int ho = conv_out_dim(x.h(), K, stride, pad);
    const int wo = conv_out_dim(x.w(), K, stride, pad);
    const int co = w.n();

    Tensor y(x.n(), co, ho, wo);
    Eigen::Map<const RowMat> wmat(w.data.data(), co, static_cast<Eigen::Index>(x.c()) * K * K);
    MatrixXd col;
    for (int n = 0; n < x.n(); ++n) {
        im2col(x, n, K, stride, pad, ho, wo, col);
        const MatrixXd out = wmat * col;  // co x (ho*wo)
        double* dst = y.data.data() + static_cast<size_t>(n) * co * ho * wo;
        for (int c = 0; c < co; ++c) {
            const double bias = b.data[c];
            for (int p = 0; p < ho * wo; ++p) dst[static_cast<size_t>(c) * ho * wo + p] = out(c, p) + bias;
        }
    }
    return y;
}

Conv2dGrads conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& gy, int stride,
                            int pad) {
    const int K = w.h();
    const int co = w.n();
    const int ho = gy.h(), wo = gy.w();

    Conv2dGrads g;
    g.gx = zeros_like(x);
    g.gw = zeros_like(w);
    g.gb = Tensor(1, co, 1, 1);

    Eigen::Map<const RowMat> wmat(w.data.data(), co, static_cast<Eigen::Index>(x.c()) * K * K);
    Eigen::Map<RowMat> gwmat(g.gw.data.data(), co, static_cast<Eigen::Index>(x.c()) * K * K);
    MatrixXd col;
    for (int n = 0; n < x.n(); ++n) {
        Eigen::Map<const RowMat> gymat(
            gy.data.data() + static_cast<size_t>(n) * co * ho * wo, co,
            static_cast<Eigen::Index>(ho) * wo);
        im2col(x, n, K, stride, pad, ho, wo, col);
        gwmat.noalias() += gymat * col.transpose();
        const MatrixXd gcol = wmat.transpose() * gymat;
        col2im_add(gcol, n, K, stride, pad, ho, wo, g.gx);
        // summed in a fixed scalar order so repeated runs round identically
        for (int c = 0; c < co; ++c) {
            const double* src = gy.data.data() + (static_cast<size_t>(n) * co + c) * ho * wo;
            double acc = 0.0;
            for (int p = 0; p < ho * wo; ++p) acc += src[p];
            g.gb.data[c] += acc;
        }
    }
    return g;
}

Tensor deconv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad,
                        int out_pad) {
    const int K = w.h();
    if (w.n() != x.c()) throw DomainError("deconv2d: weight input channels do not match input");
    const int co = w.c();
    if (b.c() != co) throw DomainError("deconv2d: bias does not match output channels");
    const int ho = deconv_out_dim(x.h(), K, stride, pad, out_pad);
    const int wo = deconv_out_dim(x.w(), K, stride, pad, out_pad);

    Tensor y(x.n(), co, ho, wo);
    Eigen::Map<const RowMat> wmat(w.data.data(), x.c(), static_cast<Eigen::Index>(co) * K * K);
    for (int n = 0; n < x.n(); ++n) {
        Eigen::Map<const RowMat> xmat(
            x.data.data() + static_cast<size_t>(n) * x.c() * x.h() * x.w(), x.c(),
            static_cast<Eigen::Index>(x.h()) * x.w());
        const MatrixXd col = wmat.transpose() * xmat;  // (co*K*K) x (hi*wi)
        col2im_add(col, n, K, stride, pad, x.h(), x.w(), y);
    }
    for (int n = 0; n < y.n(); ++n) {
        for (int c = 0; c < co; ++c) {
            double* dst = y.data.data() + (static_cast<size_t>(n) * co + c) * ho * wo;
            for (int p = 0; p < ho * wo; ++p) dst[p] += b.data[c];
        }
    }
    return y;
}

Conv2dGrads deconv2d_backward(const Tensor& x, const Tensor& w, const Tensor& gy, int stride,
                              int pad, int out_pad) {
    (void)out_pad;  // geometry is fixed by gy's dims
    const int K = w.h();
    const int co = w.c();

    Conv2dGrads g;
    g.gx = zeros_like(x);
    g.gw = zeros_like(w);
    g.gb = Tensor(1, co, 1, 1);

    Eigen::Map<const RowMat> wmat(w.data.data(), x.c(), static_cast<Eigen::Index>(co) * K * K);
    Eigen::Map<RowMat> gwmat(g.gw.data.data(), x.c(), static_cast<Eigen::Index>(co) * K * K);
    MatrixXd col;
    for (int n = 0; n < x.n(); ++n) {
        // gather gy at the scatter positions used by the forward pass
        im2col(gy, n, K, stride, pad, x.h(), x.w(), col);  // (co*K*K) x (hi*wi)
        Eigen::Map<const RowMat> xmat(
            x.data.data() + static_cast<size_t>(n) * x.c() * x.h() * x.w(), x.c(),
            static_cast<Eigen::Index>(x.h()) * x.w());
        Eigen::Map<RowMat> gxmat(
            g.gx.data.data() + static_cast<size_t>(n) * x.c() * x.h() * x.w(), x.c(),
            static_cast<Eigen::Index>(x.h()) * x.w());
        gxmat.noalias() = wmat * col;
        gwmat.noalias() += xmat * col.transpose();
    }
    for (int n = 0; n < gy.n(); ++n) {
        for (int c = 0; c < co; ++c) {
            const double* src = gy.data.data() + (static_cast<size_t>(n) * co + c) * gy.h() * gy.w();
            double acc = 0.0;
            for (int p = 0; p < gy.h() * gy.w(); ++p) acc += src[p];
            g.gb.data[c] += acc;
        }
    }
    return g;
}

Tensor batchnorm_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                         Tensor& running_mean, Tensor& running_var, bool training,
                         double momentum, double eps, BatchNormCache* cache) {
    const int C = x.c();
    if (gamma.c() != C || beta.c() != C) throw DomainError("batchnorm: parameter channel mismatch");
    const size_t per_channel = static_cast<size_t>(x.n()) * x.h() * x.w();

    Tensor y = zeros_like(x);
    std::vector<double> mean(C, 0.0), var(C, 0.0), inv_std(C, 0.0);
    if (training) {
        for (int c = 0; c < C; ++c) {
            double m = 0.0;
            for (int n = 0; n < x.n(); ++n) {
                for (int h = 0; h < x.h(); ++h) {
                    for (int w = 0; w < x.w(); ++w) m += x.at(n, c, h, w);
                }
            }
            m /= static_cast<double>(per_channel);
            double v = 0.0;
            for (int n = 0; n < x.n(); ++n) {
                for (int h = 0; h < x.h(); ++h) {
                    for (int w = 0; w < x.w(); ++w) {
                        const double d = x.at(n, c, h, w) - m;
                        v += d * d;
                    }
                }
            }
            v /= static_cast<double>(per_channel);
            mean[c] = m;
            var[c] = v;
            inv_std[c] = 1.0 / std::sqrt(v + eps);

            const double unbiased =
                per_channel > 1 ? v * static_cast<double>(per_channel) / (per_channel - 1.0) : v;
            running_mean.data[c] = (1.0 - momentum) * running_mean.data[c] + momentum * m;
            running_var.data[c] = (1.0 - momentum) * running_var.data[c] + momentum * unbiased;
        }
    } else {
        for (int c = 0; c < C; ++c) {
            mean[c] = running_mean.data[c];
            inv_std[c] = 1.0 / std::sqrt(running_var.data[c] + eps);
        }
    }

    Tensor xhat = zeros_like(x);
    for (int n = 0; n < x.n(); ++n) {
        for (int c = 0; c < C; ++c) {
            for (int h = 0; h < x.h(); ++h) {
                for (int w = 0; w < x.w(); ++w) {
                    const double xh = (x.at(n, c, h, w) - mean[c]) * inv_std[c];
                    xhat.at(n, c, h, w) = xh;
                    y.at(n, c, h, w) = gamma.data[c] * xh + beta.data[c];
                }
            }
        }
    }
    if (cache) {
        cache->xhat = std::move(xhat);
        cache->mean = std::move(mean);
        cache->inv_std = std::move(inv_std);
    }
    return y;
}

BatchNormGrads batchnorm_backward(const Tensor& gy, const Tensor& gamma,
                                  const BatchNormCache& cache) {
    const Tensor& xhat = cache.xhat;
    const int C = gy.c();
    const double m = static_cast<double>(gy.n()) * gy.h() * gy.w();

    BatchNormGrads g;
    g.gx = zeros_like(gy);
    g.ggamma = Tensor(1, C, 1, 1);
    g.gbeta = Tensor(1, C, 1, 1);

    for (int c = 0; c < C; ++c) {
        double sum_gy = 0.0, sum_gy_xhat = 0.0;
        for (int n = 0; n < gy.n(); ++n) {
            for (int h = 0; h < gy.h(); ++h) {
                for (int w = 0; w < gy.w(); ++w) {
                    sum_gy += gy.at(n, c, h, w);
                    sum_gy_xhat += gy.at(n, c, h, w) * xhat.at(n, c, h, w);
                }
            }
        }
        g.gbeta.data[c] = sum_gy;
        g.ggamma.data[c] = sum_gy_xhat;
        const double k = gamma.data[c] * cache.inv_std[c];
        for (int n = 0; n < gy.n(); ++n) {
            for (int h = 0; h < gy.h(); ++h) {
                for (int w = 0; w < gy.w(); ++w) {
                    g.gx.at(n, c, h, w) =
                        k * (gy.at(n, c, h, w) - sum_gy / m -
                             xhat.at(n, c, h, w) * sum_gy_xhat / m);
                }
            }
        }
    }
    return g;
}

Tensor relu_forward(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data) v = v > 0.0 ? v : 0.0;
    return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& gy) {
    Tensor gx = gy;
    for (size_t i = 0; i < gx.data.size(); ++i) {
        if (x.data[i] <= 0.0) gx.data[i] = 0.0;
    }
    return gx;
}

Tensor sigmoid_forward(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data) v = 1.0 / (1.0 + std::exp(-v));
    return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& gy) {
    Tensor gx = gy;
    for (size_t i = 0; i < gx.data.size(); ++i) {
        gx.data[i] *= y.data[i] * (1.0 - y.data[i]);
    }
    return gx;
}

std::pair<double, Tensor> mse_loss(const Tensor& pred, const Tensor& target) {
    if (pred.shape != target.shape) throw DomainError("mse_loss: shape mismatch");
    const double n = static_cast<double>(pred.numel());
    double loss = 0.0;
    Tensor grad = zeros_like(pred);
    for (size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - target.data[i];
        loss += d * d;
        grad.data[i] = 2.0 * d / n;
    }
    return {loss / n, grad};
}

std::pair<double, Tensor> l1_loss(const Tensor& pred, const Tensor& target) {
    if (pred.shape != target.shape) throw DomainError("l1_loss: shape mismatch");
    const double n = static_cast<double>(pred.numel());
    double loss = 0.0;
    Tensor grad = zeros_like(pred);
    for (size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - target.data[i];
        loss += std::abs(d);
        grad.data[i] = d > 0.0 ? 1.0 / n : (d < 0.0 ? -1.0 / n : 0.0);
    }
    return {loss / n, grad};
}

Tensor resize_nearest(const Tensor& x, int out_h, int out_w) {
    Tensor y(x.n(), x.c(), out_h, out_w);
    for (int n = 0; n < x.n(); ++n) {
        for (int c = 0; c < x.c(); ++c) {
            for (int h = 0; h < out_h; ++h) {
                const int sh = static_cast<int>(static_cast<long>(h) * x.h() / out_h);
                for (int w = 0; w < out_w; ++w) {
                    const int sw = static_cast<int>(static_cast<long>(w) * x.w() / out_w);
                    y.at(n, c, h, w) = x.at(n, c, sh, sw);
                }
            }
        }
    }
    return y;
}

Tensor resize_nearest_backward(const Tensor& x, const Tensor& gy, int out_h, int out_w) {
    Tensor gx = zeros_like(x);
    for (int n = 0; n < x.n(); ++n) {
        for (int c = 0; c < x.c(); ++c) {
            for (int h = 0; h < out_h; ++h) {
                const int sh = static_cast<int>(static_cast<long>(h) * x.h() / out_h);
                for (int w = 0; w < out_w; ++w) {
                    const int sw = static_cast<int>(static_cast<long>(w) * x.w() / out_w);
                    gx.at(n, c, sh, sw) += gy.at(n, c, h, w);
                }
            }
        }
    }
    return gx;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w()) {
        throw DomainError("concat_channels: spatial or batch mismatch");
    }
    Tensor y(a.n(), a.c() + b.c(), a.h(), a.w());
    const size_t plane = static_cast<size_t>(a.h()) * a.w();
    for (int n = 0; n < a.n(); ++n) {
        std::copy_n(a.data.begin() + static_cast<size_t>(n) * a.c() * plane, a.c() * plane,
                    y.data.begin() + static_cast<size_t>(n) * y.c() * plane);
        std::copy_n(b.data.begin() + static_cast<size_t>(n) * b.c() * plane, b.c() * plane,
                    y.data.begin() + static_cast<size_t>(n) * y.c() * plane + a.c() * plane);
    }
    return y;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& g, int c_first) {
    const int c_second = g.c() - c_first;
    if (c_first <= 0 || c_second <= 0) throw DomainError("split_channels: bad split point");
    Tensor a(g.n(), c_first, g.h(), g.w());
    Tensor b(g.n(), c_second, g.h(), g.w());
    const size_t plane = static_cast<size_t>(g.h()) * g.w();
    for (int n = 0; n < g.n(); ++n) {
        std::copy_n(g.data.begin() + static_cast<size_t>(n) * g.c() * plane, c_first * plane,
                    a.data.begin() + static_cast<size_t>(n) * c_first * plane);
        std::copy_n(g.data.begin() + static_cast<size_t>(n) * g.c() * plane + c_first * plane,
                    c_second * plane,
                    b.data.begin() + static_cast<size_t>(n) * c_second * plane);
    }
    return {std::move(a), std::move(b)};
}

}  // namespace sonobox::nn
