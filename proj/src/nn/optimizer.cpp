#include "sonobox/nn/optimizer.hpp"

#include <cmath>

#include "sonobox/common.hpp"

namespace sonobox::nn {

double lr_schedule(int epoch, double base_lr, const std::vector<int>& milestones) {
    if (epoch < 0) throw DomainError("lr_schedule: negative epoch");
    double lr = base_lr;
    for (int m : milestones) {
        if (epoch >= m) lr *= 0.5;
    }
    return lr;
}

Adam::Adam(std::vector<NamedParam> params, double lr, double beta1, double beta2, double eps)
    : lr(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const NamedParam& p : params) {
        if (!p.trainable || !p.tensor->requires_grad)
            throw DomainError("Adam: parameter without gradient storage: " + p.name);
        slots_.push_back({p.tensor, std::vector<double>(p.tensor->numel(), 0.0),
                          std::vector<double>(p.tensor->numel(), 0.0)});
    }
}

void Adam::step() {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
    for (Slot& s : slots_) {
        for (size_t i = 0; i < s.t->data.size(); ++i) {
            const double g = s.t->grad[i];
            s.m[i] = beta1_ * s.m[i] + (1.0 - beta1_) * g;
            s.v[i] = beta2_ * s.v[i] + (1.0 - beta2_) * g * g;
            const double mhat = s.m[i] / bc1;
            const double vhat = s.v[i] / bc2;
            s.t->data[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

}  // namespace sonobox::nn
