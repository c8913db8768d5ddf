#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "sonobox/common.hpp"

namespace sonobox::nn {

// Dense NCHW tensor. Lower-rank values use leading dims of 1.
struct Tensor {
    std::array<int, 4> shape{1, 1, 1, 1};
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;

    Tensor() = default;
    Tensor(int n, int c, int h, int w, bool track = false)
        : shape{n, c, h, w},
          data(static_cast<size_t>(n) * c * h * w, 0.0),
          requires_grad(track) {
        if (track) grad.assign(data.size(), 0.0);
    }

    size_t numel() const { return data.size(); }
    int n() const { return shape[0]; }
    int c() const { return shape[1]; }
    int h() const { return shape[2]; }
    int w() const { return shape[3]; }

    double& at(int in, int ic, int ih, int iw) {
        return data[((static_cast<size_t>(in) * shape[1] + ic) * shape[2] + ih) * shape[3] + iw];
    }
    double at(int in, int ic, int ih, int iw) const {
        return data[((static_cast<size_t>(in) * shape[1] + ic) * shape[2] + ih) * shape[3] + iw];
    }

    void zero_grad() {
        if (requires_grad) grad.assign(data.size(), 0.0);
    }

    void check_finite(const std::string& where) const {
        for (double v : data) {
            if (!std::isfinite(v)) throw NumericError("non-finite value in " + where);
        }
    }
};

inline Tensor zeros_like(const Tensor& t) {
    return Tensor(t.shape[0], t.shape[1], t.shape[2], t.shape[3]);
}

}  // namespace sonobox::nn
