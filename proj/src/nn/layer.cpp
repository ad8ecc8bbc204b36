#include "coboost/nn/layer.hpp"

#include <Eigen/Core>
#include <cmath>

namespace coboost {

using MatRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using CMapM = Eigen::Map<const MatRM>;

namespace {

// He-normal init, the default for all conv/dense weights in this codebase.
void he_init(Tensor& w, int fan_in, Rng& rng) {
    float stddev = std::sqrt(2.0f / static_cast<float>(fan_in));
    for (auto& v : w.data) v = stddev * static_cast<float>(rng.normal());
}

}  // namespace

Dense::Dense(int in_features, int out_features, Rng& rng)
    : in_(in_features),
      out_(out_features),
      w_({out_features, in_features}),
      b_({out_features}),
      gw_({out_features, in_features}),
      gb_({out_features}) {
    he_init(w_, in_features, rng);
}

Tensor Dense::forward(const Tensor& x, LayerCtx* ctx, bool) {
    const int batch = x.rows();
    if (x.cols() != in_)
        throw std::invalid_argument("Dense: input has " + std::to_string(x.cols()) +
                                    " features, expected " + std::to_string(in_));
    Tensor y({batch, out_});
    CMapM xm(x.ptr(), batch, in_);
    CMapM wm(w_.ptr(), out_, in_);
    MapM ym(y.ptr(), batch, out_);
    ym.noalias() = xm * wm.transpose();
    ym.rowwise() += Eigen::Map<const Eigen::RowVectorXf>(b_.ptr(), out_);
    if (ctx) {
        ctx->saved.clear();
        ctx->saved.push_back(x);
    }
    return y;
}

Tensor Dense::backward(const Tensor& grad_out, const LayerCtx& ctx, bool need_param_grads) {
    const Tensor& x = ctx.saved.at(0);
    const int batch = x.rows();
    CMapM gym(grad_out.ptr(), batch, out_);
    CMapM xm(x.ptr(), batch, in_);
    CMapM wm(w_.ptr(), out_, in_);

    if (need_param_grads) {
        MapM gwm(gw_.ptr(), out_, in_);
        gwm.noalias() += gym.transpose() * xm;
        Eigen::Map<Eigen::RowVectorXf>(gb_.ptr(), out_) += gym.colwise().sum();
    }
    Tensor gx(x.shape);
    MapM gxm(gx.ptr(), batch, in_);
    gxm.noalias() = gym * wm;
    return gx;
}

Tensor ReLU::forward(const Tensor& x, LayerCtx* ctx, bool) {
    Tensor y = x;
    for (auto& v : y.data) v = v > 0.0f ? v : 0.0f;
    if (ctx) {
        ctx->saved.clear();
        ctx->saved.push_back(y);
    }
    return y;
}

Tensor ReLU::backward(const Tensor& grad_out, const LayerCtx& ctx, bool) {
    const Tensor& y = ctx.saved.at(0);
    Tensor gx = grad_out;
    for (size_t i = 0; i < gx.data.size(); ++i)
        if (y.data[i] <= 0.0f) gx.data[i] = 0.0f;
    return gx;
}

Tensor LeakyReLU::forward(const Tensor& x, LayerCtx* ctx, bool) {
    Tensor y = x;
    for (auto& v : y.data) v = v > 0.0f ? v : alpha_ * v;
    if (ctx) {
        ctx->saved.clear();
        ctx->saved.push_back(x);
    }
    return y;
}

Tensor LeakyReLU::backward(const Tensor& grad_out, const LayerCtx& ctx, bool) {
    const Tensor& x = ctx.saved.at(0);
    Tensor gx = grad_out;
    for (size_t i = 0; i < gx.data.size(); ++i)
        if (x.data[i] <= 0.0f) gx.data[i] *= alpha_;
    return gx;
}

Tensor Tanh::forward(const Tensor& x, LayerCtx* ctx, bool) {
    Tensor y = x;
    for (auto& v : y.data) v = std::tanh(v);
    if (ctx) {
        ctx->saved.clear();
        ctx->saved.push_back(y);
    }
    return y;
}

Tensor Tanh::backward(const Tensor& grad_out, const LayerCtx& ctx, bool) {
    const Tensor& y = ctx.saved.at(0);
    Tensor gx = grad_out;
    for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] *= 1.0f - y.data[i] * y.data[i];
    return gx;
}

Tensor Flatten::forward(const Tensor& x, LayerCtx* ctx, bool) {
    if (ctx) {
        ctx->saved.clear();
        Tensor shape_keeper;
        shape_keeper.shape = x.shape;
        ctx->saved.push_back(shape_keeper);
    }
    return x.reshaped({x.rows(), x.cols()});
}

Tensor Flatten::backward(const Tensor& grad_out, const LayerCtx& ctx, bool) {
    return grad_out.reshaped(ctx.saved.at(0).shape);
}

Tensor Reshape::forward(const Tensor& x, LayerCtx* ctx, bool) {
    std::vector<int> s{x.rows()};
    s.insert(s.end(), dims_.begin(), dims_.end());
    if (ctx) {
        ctx->saved.clear();
        Tensor shape_keeper;
        shape_keeper.shape = x.shape;
        ctx->saved.push_back(shape_keeper);
    }
    return x.reshaped(std::move(s));
}

Tensor Reshape::backward(const Tensor& grad_out, const LayerCtx& ctx, bool) {
    return grad_out.reshaped(ctx.saved.at(0).shape);
}

RangeSquash::RangeSquash(std::vector<float> lo, std::vector<float> hi)
    : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() != hi_.size() || lo_.empty())
        throw std::invalid_argument("RangeSquash: lo/hi size mismatch");
}

Tensor RangeSquash::forward(const Tensor& x, LayerCtx* ctx, bool) {
    if (x.ndim() != 4 || x.dim(1) != static_cast<int>(lo_.size()))
        throw std::invalid_argument("RangeSquash: expected {B,C,H,W} with C=" +
                                    std::to_string(lo_.size()) + ", got " + x.shape_str());
    const int b = x.dim(0), c = x.dim(1);
    const int64_t plane = static_cast<int64_t>(x.dim(2)) * x.dim(3);
    Tensor t = x;
    for (auto& v : t.data) v = std::tanh(v);
    Tensor y(x.shape);
    for (int i = 0; i < b; ++i)
        for (int ch = 0; ch < c; ++ch) {
            const float half_span = 0.5f * (hi_[ch] - lo_[ch]);
            const float mid = 0.5f * (hi_[ch] + lo_[ch]);
            const int64_t base = (static_cast<int64_t>(i) * c + ch) * plane;
            for (int64_t p = 0; p < plane; ++p)
                y.data[base + p] = mid + half_span * t.data[base + p];
        }
    if (ctx) {
        ctx->saved.clear();
        ctx->saved.push_back(std::move(t));
    }
    return y;
}

Tensor RangeSquash::backward(const Tensor& grad_out, const LayerCtx& ctx, bool) {
    const Tensor& t = ctx.saved.at(0);
    const int b = grad_out.dim(0), c = grad_out.dim(1);
    const int64_t plane = static_cast<int64_t>(grad_out.dim(2)) * grad_out.dim(3);
    Tensor gx = grad_out;
    for (int i = 0; i < b; ++i)
        for (int ch = 0; ch < c; ++ch) {
            const float half_span = 0.5f * (hi_[ch] - lo_[ch]);
            const int64_t base = (static_cast<int64_t>(i) * c + ch) * plane;
            for (int64_t p = 0; p < plane; ++p) {
                const float tv = t.data[base + p];
                gx.data[base + p] *= half_span * (1.0f - tv * tv);
            }
        }
    return gx;
}

Embedding::Embedding(int num_embeddings, int dim, Rng& rng)
    : table({num_embeddings, dim}), grad({num_embeddings, dim}) {
    for (auto& v : table.data) v = static_cast<float>(rng.normal());
}

Tensor Embedding::forward(const std::vector<int>& ids) const {
    const int dim = table.dim(1);
    Tensor out({static_cast<int>(ids.size()), dim});
    for (size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || ids[i] >= table.dim(0))
            throw std::out_of_range("Embedding: id out of range");
        std::copy_n(table.ptr() + static_cast<int64_t>(ids[i]) * dim, dim,
                    out.ptr() + static_cast<int64_t>(i) * dim);
    }
    return out;
}

void Embedding::backward(const std::vector<int>& ids, const Tensor& grad_out) {
    const int dim = table.dim(1);
    for (size_t i = 0; i < ids.size(); ++i) {
        float* g = grad.ptr() + static_cast<int64_t>(ids[i]) * dim;
        const float* go = grad_out.ptr() + static_cast<int64_t>(i) * dim;
        for (int d = 0; d < dim; ++d) g[d] += go[d];
    }
}

void Embedding::zero_grad() {
    std::fill(grad.data.begin(), grad.data.end(), 0.0f);
}

}  // namespace coboost
