#pragma once

#include <memory>
#include <vector>

#include "coboost/checksum.hpp"
#include "coboost/nn/layer.hpp"

namespace coboost {

// Sequential stack of layers with explicit forward/backward.
class Network {
public:
    Network() = default;
    Network(Network&&) = default;
    Network& operator=(Network&&) = default;
    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;

    void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

    Tensor forward(const Tensor& x, LayerCtx* ctx = nullptr, bool train = false);
    // grad_out is dL/d(output); returns dL/d(input).
    Tensor backward(const Tensor& grad_out, const LayerCtx& ctx, bool need_param_grads = true);

    std::vector<Tensor*> params();
    std::vector<Tensor*> grads();
    std::vector<Tensor*> buffers();
    void zero_grad();

    size_t num_layers() const { return layers_.size(); }
    Layer& layer(size_t i) { return *layers_[i]; }

    int64_t num_params();
    uint64_t state_checksum();  // params + buffers
    void copy_state_from(Network& other);

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

// Residual block: y = relu(body(x) + shortcut(x)); empty shortcut = identity.
class Residual : public Layer {
public:
    Residual(Network body, Network shortcut) : body_(std::move(body)), shortcut_(std::move(shortcut)) {}

    Tensor forward(const Tensor& x, LayerCtx* ctx, bool train) override;
    Tensor backward(const Tensor& grad_out, const LayerCtx& ctx, bool need_param_grads) override;
    std::vector<Tensor*> params() override;
    std::vector<Tensor*> grads() override;
    std::vector<Tensor*> buffers() override;
    std::string name() const override { return "residual"; }

private:
    Network body_, shortcut_;
};

}  // namespace coboost
