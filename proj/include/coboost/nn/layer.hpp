#pragma once

#include <memory>
#include <string>
#include <vector>

#include "coboost/rng.hpp"
#include "coboost/tensor.hpp"

namespace coboost {

// Per-call saved state for the backward pass. Passing a fresh ctx per forward
// keeps inference reentrant: a frozen model can serve many threads as long as
// each uses its own ctx (or none).
struct LayerCtx {
    std::vector<Tensor> saved;
    std::vector<LayerCtx> children;  // for composite layers
    int flag = 0;
};

class Layer {
public:
    virtual ~Layer() = default;

    // ctx == nullptr means pure inference (nothing saved, backward impossible).
    // train toggles batch-norm statistics mode; train=false mutates no state.
    virtual Tensor forward(const Tensor& x, LayerCtx* ctx, bool train) = 0;

    // Returns dL/dx given dL/dy. Accumulates parameter gradients only when
    // need_param_grads is set (frozen models skip that work).
    virtual Tensor backward(const Tensor& grad_out, const LayerCtx& ctx, bool need_param_grads) = 0;

    virtual std::vector<Tensor*> params() { return {}; }
    virtual std::vector<Tensor*> grads() { return {}; }
    virtual std::vector<Tensor*> buffers() { return {}; }  // non-trained state (BN stats)

    virtual std::string name() const = 0;
};

class Dense : public Layer {
public:
    Dense(int in_features, int out_features, Rng& rng);

    Tensor forward(const Tensor& x, LayerCtx* ctx, bool train) override;
    Tensor backward(const Tensor& grad_out, const LayerCtx& ctx, bool need_param_grads) override;
    std::vector<Tensor*> params() override { return {&w_, &b_}; }
    std::vector<Tensor*> grads() override { return {&gw_, &gb_}; }
    std::string name() const override { return "dense"; }

    int in_features() const { return in_; }
    int out_features() const { return out_; }

private:
    int in_, out_;
    Tensor w_, b_, gw_, gb_;  // w: {out,in}
};

class ReLU : public Layer {
public:
    Tensor forward(const Tensor& x, LayerCtx* ctx, bool train) override;
    Tensor backward(const Tensor& grad_out, const LayerCtx& ctx, bool need_param_grads) override;
    std::string name() const override { return "relu"; }
};

class LeakyReLU : public Layer {
public:
    explicit LeakyReLU(float alpha = 0.2f) : alpha_(alpha) {}
    Tensor forward(const Tensor& x, LayerCtx* ctx, bool train) override;
    Tensor backward(const Tensor& grad_out, const LayerCtx& ctx, bool need_param_grads) override;
    std::string name() const override { return "leaky_relu"; }

private:
    float alpha_;
};

class Tanh : public Layer {
public:
    Tensor forward(const Tensor& x, LayerCtx* ctx, bool train) override;
    Tensor backward(const Tensor& grad_out, const LayerCtx& ctx, bool need_param_grads) override;
    std::string name() const override { return "tanh"; }
};

// {B,...} -> {B, prod(...)}
class Flatten : public Layer {
public:
    Tensor forward(const Tensor& x, LayerCtx* ctx, bool train) override;
    Tensor backward(const Tensor& grad_out, const LayerCtx& ctx, bool need_param_grads) override;
    std::string name() const override { return "flatten"; }
};

// {B, prod(dims)} -> {B, dims...}
class Reshape : public Layer {
public:
    explicit Reshape(std::vector<int> dims) : dims_(std::move(dims)) {}
    Tensor forward(const Tensor& x, LayerCtx* ctx, bool train) override;
    Tensor backward(const Tensor& grad_out, const LayerCtx& ctx, bool need_param_grads) override;
    std::string name() const override { return "reshape"; }

private:
    std::vector<int> dims_;
};

// Final generator layer: per-channel y = lo + (tanh(x)+1)/2 * (hi-lo),
// bounding samples to the normalized data range.
class RangeSquash : public Layer {
public:
    RangeSquash(std::vector<float> lo, std::vector<float> hi);
    Tensor forward(const Tensor& x, LayerCtx* ctx, bool train) override;
    Tensor backward(const Tensor& grad_out, const LayerCtx& ctx, bool need_param_grads) override;
    std::string name() const override { return "range_squash"; }

    const std::vector<float>& lo() const { return lo_; }
    const std::vector<float>& hi() const { return hi_; }

private:
    std::vector<float> lo_, hi_;
};

// Label lookup table. Not a Layer (integer input); owned by the generator.
struct Embedding {
    Tensor table;  // {num_embeddings, dim}
    Tensor grad;

    Embedding() = default;
    Embedding(int num_embeddings, int dim, Rng& rng);

    Tensor forward(const std::vector<int>& ids) const;          // {B,dim}
    void backward(const std::vector<int>& ids, const Tensor& grad_out);
    void zero_grad();
};

}  // namespace coboost
