#pragma once

#include <vector>

#include "sonobox/nn/layers.hpp"

namespace sonobox::nn {

// Step decay: the base rate halves at every milestone the epoch has reached.
double lr_schedule(int epoch, double base_lr = 1e-3,
                   const std::vector<int>& milestones = {20, 50, 100});

class Adam {
public:
    explicit Adam(std::vector<NamedParam> params, double lr = 1e-3, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8);

    void step();

    double lr;

private:
    struct Slot {
        Tensor* t;
        std::vector<double> m, v;
    };
    std::vector<Slot> slots_;
    double beta1_, beta2_, eps_;
    long step_count_ = 0;
};

}  // namespace sonobox::nn
