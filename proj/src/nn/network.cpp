#include "coboost/nn/network.hpp"

namespace coboost {

Tensor Network::forward(const Tensor& x, LayerCtx* ctx, bool train) {
    if (ctx) ctx->children.resize(layers_.size());
    Tensor h = x;
    for (size_t i = 0; i < layers_.size(); ++i)
        h = layers_[i]->forward(h, ctx ? &ctx->children[i] : nullptr, train);
    return h;
}

Tensor Network::backward(const Tensor& grad_out, const LayerCtx& ctx, bool need_param_grads) {
    if (ctx.children.size() != layers_.size())
        throw std::logic_error("Network::backward: ctx does not match this network");
    Tensor g = grad_out;
    for (size_t i = layers_.size(); i-- > 0;)
        g = layers_[i]->backward(g, ctx.children[i], need_param_grads);
    return g;
}

std::vector<Tensor*> Network::params() {
    std::vector<Tensor*> out;
    for (auto& l : layers_)
        for (Tensor* p : l->params()) out.push_back(p);
    return out;
}

std::vector<Tensor*> Network::grads() {
    std::vector<Tensor*> out;
    for (auto& l : layers_)
        for (Tensor* g : l->grads()) out.push_back(g);
    return out;
}

std::vector<Tensor*> Network::buffers() {
    std::vector<Tensor*> out;
    for (auto& l : layers_)
        for (Tensor* b : l->buffers()) out.push_back(b);
    return out;
}

void Network::zero_grad() {
    for (Tensor* g : grads()) std::fill(g->data.begin(), g->data.end(), 0.0f);
}

int64_t Network::num_params() {
    int64_t n = 0;
    for (Tensor* p : params()) n += p->numel();
    return n;
}

uint64_t Network::state_checksum() {
    uint64_t h = 0xCBF29CE484222325ull;
    for (Tensor* p : params()) h = checksum(*p, h);
    for (Tensor* b : buffers()) h = checksum(*b, h);
    return h;
}

void Network::copy_state_from(Network& other) {
    auto dst_p = params(), src_p = other.params();
    auto dst_b = buffers(), src_b = other.buffers();
    if (dst_p.size() != src_p.size() || dst_b.size() != src_b.size())
        throw std::invalid_argument("Network::copy_state_from: structure mismatch");
    for (size_t i = 0; i < dst_p.size(); ++i) {
        check_same_shape(*dst_p[i], *src_p[i], "copy_state_from");
        dst_p[i]->data = src_p[i]->data;
    }
    for (size_t i = 0; i < dst_b.size(); ++i) dst_b[i]->data = src_b[i]->data;
}

Tensor Residual::forward(const Tensor& x, LayerCtx* ctx, bool train) {
    LayerCtx* body_ctx = nullptr;
    LayerCtx* short_ctx = nullptr;
    if (ctx) {
        ctx->children.resize(2);
        body_ctx = &ctx->children[0];
        short_ctx = &ctx->children[1];
    }
    Tensor h = body_.forward(x, body_ctx, train);
    Tensor s = shortcut_.num_layers() ? shortcut_.forward(x, short_ctx, train) : x;
    check_same_shape(h, s, "Residual");
    for (size_t i = 0; i < h.data.size(); ++i) h.data[i] += s.data[i];
    for (auto& v : h.data) v = v > 0.0f ? v : 0.0f;
    if (ctx) {
        ctx->saved.clear();
        ctx->saved.push_back(h);
    }
    return h;
}

Tensor Residual::backward(const Tensor& grad_out, const LayerCtx& ctx, bool need_param_grads) {
    const Tensor& y = ctx.saved.at(0);
    Tensor dh = grad_out;
    for (size_t i = 0; i < dh.data.size(); ++i)
        if (y.data[i] <= 0.0f) dh.data[i] = 0.0f;
    Tensor gx = body_.backward(dh, ctx.children[0], need_param_grads);
    if (shortcut_.num_layers()) {
        Tensor gs = shortcut_.backward(dh, ctx.children[1], need_param_grads);
        add_inplace(gx, gs);
    } else {
        add_inplace(gx, dh);
    }
    return gx;
}

std::vector<Tensor*> Residual::params() {
    auto out = body_.params();
    for (Tensor* p : shortcut_.params()) out.push_back(p);
    return out;
}

std::vector<Tensor*> Residual::grads() {
    auto out = body_.grads();
    for (Tensor* g : shortcut_.grads()) out.push_back(g);
    return out;
}

std::vector<Tensor*> Residual::buffers() {
    auto out = body_.buffers();
    for (Tensor* b : shortcut_.buffers()) out.push_back(b);
    return out;
}

}  // namespace coboost
