#pragma once

#include <vector>

#include "coboost/tensor.hpp"

namespace coboost {

class SGD {
public:
    SGD(float lr, float momentum) : lr_(lr), momentum_(momentum) {}

    void step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads);

    float lr() const { return lr_; }

private:
    float lr_, momentum_;
    std::vector<Tensor> velocity_;
};

class Adam {
public:
    explicit Adam(float lr, float beta1 = 0.9f, float beta2 = 0.999f, float eps = 1e-8f)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads);

private:
    float lr_, beta1_, beta2_, eps_;
    int64_t t_ = 0;
    std::vector<Tensor> m_, v_;
};

}  // namespace coboost
