#include "coboost/nn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace coboost {

void SGD::step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads) {
    if (params.size() != grads.size()) throw std::invalid_argument("SGD::step: size mismatch");
    if (velocity_.empty()) {
        velocity_.reserve(params.size());
        for (Tensor* p : params) velocity_.emplace_back(p->shape);
    }
    for (size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i]->data;
        auto& g = grads[i]->data;
        auto& v = velocity_[i].data;
        for (size_t j = 0; j < p.size(); ++j) {
            v[j] = momentum_ * v[j] + g[j];
            p[j] -= lr_ * v[j];
        }
    }
}

void Adam::step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads) {
    if (params.size() != grads.size()) throw std::invalid_argument("Adam::step: size mismatch");
    if (m_.empty()) {
        m_.reserve(params.size());
        v_.reserve(params.size());
        for (Tensor* p : params) {
            m_.emplace_back(p->shape);
            v_.emplace_back(p->shape);
        }
    }
    ++t_;
    const float bc1 = 1.0f - std::pow(beta1_, static_cast<float>(t_));
    const float bc2 = 1.0f - std::pow(beta2_, static_cast<float>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i]->data;
        auto& g = grads[i]->data;
        auto& m = m_[i].data;
        auto& v = v_[i].data;
        for (size_t j = 0; j < p.size(); ++j) {
            m[j] = beta1_ * m[j] + (1.0f - beta1_) * g[j];
            v[j] = beta2_ * v[j] + (1.0f - beta2_) * g[j] * g[j];
            const float mhat = m[j] / bc1;
            const float vhat = v[j] / bc2;
            p[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

}  // namespace coboost
