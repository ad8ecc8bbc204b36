#pragma once

#include "coboost/nn/layer.hpp"

namespace coboost {

class Conv2d : public Layer {
public:
    Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding, int groups,
           Rng& rng);

    Tensor forward(const Tensor& x, LayerCtx* ctx, bool train) override;
    Tensor backward(const Tensor& grad_out, const LayerCtx& ctx, bool need_param_grads) override;
    std::vector<Tensor*> params() override { return {&w_, &b_}; }
    std::vector<Tensor*> grads() override { return {&gw_, &gb_}; }
    std::string name() const override { return "conv2d"; }

    int out_size(int in) const { return (in + 2 * pad_ - k_) / stride_ + 1; }

private:
    int in_c_, out_c_, k_, stride_, pad_, groups_;
    Tensor w_, b_, gw_, gb_;  // w: {out_c, in_c/groups, k, k}
};

class MaxPool2d : public Layer {
public:
    explicit MaxPool2d(int kernel, int stride = 0)
        : k_(kernel), stride_(stride == 0 ? kernel : stride) {}
    Tensor forward(const Tensor& x, LayerCtx* ctx, bool train) override;
    Tensor backward(const Tensor& grad_out, const LayerCtx& ctx, bool need_param_grads) override;
    std::string name() const override { return "maxpool2d"; }

private:
    int k_, stride_;
};

// {B,C,H,W} -> {B,C}
class GlobalAvgPool : public Layer {
public:
    Tensor forward(const Tensor& x, LayerCtx* ctx, bool train) override;
    Tensor backward(const Tensor& grad_out, const LayerCtx& ctx, bool need_param_grads) override;
    std::string name() const override { return "global_avg_pool"; }
};

class BatchNorm2d : public Layer {
public:
    explicit BatchNorm2d(int channels, float momentum = 0.1f, float eps = 1e-5f);

    Tensor forward(const Tensor& x, LayerCtx* ctx, bool train) override;
    Tensor backward(const Tensor& grad_out, const LayerCtx& ctx, bool need_param_grads) override;
    std::vector<Tensor*> params() override { return {&gamma_, &beta_}; }
    std::vector<Tensor*> grads() override { return {&ggamma_, &gbeta_}; }
    std::vector<Tensor*> buffers() override { return {&running_mean_, &running_var_}; }
    std::string name() const override { return "batchnorm2d"; }

private:
    int c_;
    float momentum_, eps_;
    Tensor gamma_, beta_, ggamma_, gbeta_;
    Tensor running_mean_, running_var_;
};

// Nearest-neighbour 2x upsampling.
class Upsample2x : public Layer {
public:
    Tensor forward(const Tensor& x, LayerCtx* ctx, bool train) override;
    Tensor backward(const Tensor& grad_out, const LayerCtx& ctx, bool need_param_grads) override;
    std::string name() const override { return "upsample2x"; }
};

class ChannelShuffle : public Layer {
public:
    explicit ChannelShuffle(int groups) : groups_(groups) {}
    Tensor forward(const Tensor& x, LayerCtx* ctx, bool train) override;
    Tensor backward(const Tensor& grad_out, const LayerCtx& ctx, bool need_param_grads) override;
    std::string name() const override { return "channel_shuffle"; }

private:
    int groups_;
};

}  // namespace coboost
