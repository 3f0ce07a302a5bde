#pragma once

#include <vector>

#include "synthcxr/nn/tensor.hpp"

namespace synthcxr::nn {

/// Adaptive moment estimation with the usual defaults and no schedule.
class Adam {
public:
    explicit Adam(std::vector<Param*> params, double lr, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8)
        : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (const Param* p : params_) {
            m_.emplace_back(p->value.shape);
            v_.emplace_back(p->value.shape);
        }
    }

    void zero_grad() {
        for (Param* p : params_) p->grad.zero();
    }

    void step();

    double learning_rate() const { return lr_; }

private:
    std::vector<Param*> params_;
    double lr_, beta1_, beta2_, eps_;
    std::vector<Tensor> m_, v_;
    long t_ = 0;
};

}  // namespace synthcxr::nn
