#include "coboost/nn/conv.hpp"

#include <Eigen/Core>
#include <cmath>
#include <cstring>

namespace coboost {

using MatRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using CMapM = Eigen::Map<const MatRM>;

namespace {

void check_image(const Tensor& x, int channels, const char* who) {
    if (x.ndim() != 4 || x.dim(1) != channels)
        throw std::invalid_argument(std::string(who) + ": expected {B," + std::to_string(channels) +
                                    ",H,W}, got " + x.shape_str());
}

// Column matrix for one channel group: rows (b,oy,ox), cols (ci,ky,kx).
void im2col(const Tensor& x, int ch_begin, int ch_count, int k, int stride, int pad, int oh, int ow,
            float* col) {
    const int b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    (void)c;
    const int64_t row_len = static_cast<int64_t>(ch_count) * k * k;
    for (int bi = 0; bi < b; ++bi) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                float* dst = col + ((static_cast<int64_t>(bi) * oh + oy) * ow + ox) * row_len;
                for (int ci = 0; ci < ch_count; ++ci) {
                    const float* src =
                        x.ptr() + ((static_cast<int64_t>(bi) * x.dim(1) + ch_begin + ci) * h) * w;
                    for (int ky = 0; ky < k; ++ky) {
                        const int iy = oy * stride - pad + ky;
                        for (int kx = 0; kx < k; ++kx) {
                            const int ix = ox * stride - pad + kx;
                            *dst++ = (iy >= 0 && iy < h && ix >= 0 && ix < w)
                                         ? src[static_cast<int64_t>(iy) * w + ix]
                                         : 0.0f;
                        }
                    }
                }
            }
        }
    }
}

void col2im(const float* col, int b, int ch_begin, int ch_count, int h, int w, int k, int stride,
            int pad, int oh, int ow, Tensor& gx) {
    const int64_t row_len = static_cast<int64_t>(ch_count) * k * k;
    for (int bi = 0; bi < b; ++bi) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                const float* src = col + ((static_cast<int64_t>(bi) * oh + oy) * ow + ox) * row_len;
                for (int ci = 0; ci < ch_count; ++ci) {
                    float* dst =
                        gx.ptr() + ((static_cast<int64_t>(bi) * gx.dim(1) + ch_begin + ci) * h) * w;
                    for (int ky = 0; ky < k; ++ky) {
                        const int iy = oy * stride - pad + ky;
                        for (int kx = 0; kx < k; ++kx) {
                            const int ix = ox * stride - pad + kx;
                            if (iy >= 0 && iy < h && ix >= 0 && ix < w)
                                dst[static_cast<int64_t>(iy) * w + ix] += *src;
                            ++src;
                        }
                    }
                }
            }
        }
    }
}

}  // namespace

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding, int groups,
               Rng& rng)
    : in_c_(in_channels),
      out_c_(out_channels),
      k_(kernel),
      stride_(stride),
      pad_(padding),
      groups_(groups),
      w_({out_channels, in_channels / groups, kernel, kernel}),
      b_({out_channels}),
      gw_({out_channels, in_channels / groups, kernel, kernel}),
      gb_({out_channels}) {
    if (in_channels % groups != 0 || out_channels % groups != 0)
        throw std::invalid_argument("Conv2d: channels not divisible by groups");
    const int fan_in = (in_channels / groups) * kernel * kernel;
    const float stddev = std::sqrt(2.0f / static_cast<float>(fan_in));
    for (auto& v : w_.data) v = stddev * static_cast<float>(rng.normal());
}

Tensor Conv2d::forward(const Tensor& x, LayerCtx* ctx, bool) {
    check_image(x, in_c_, "Conv2d");
    const int b = x.dim(0), h = x.dim(2), w = x.dim(3);
    const int oh = out_size(h), ow = out_size(w);
    if (oh <= 0 || ow <= 0)
        throw std::invalid_argument("Conv2d: input " + x.shape_str() + " too small for kernel " +
                                    std::to_string(k_));
    const int cg = in_c_ / groups_, og = out_c_ / groups_;
    const int64_t n_rows = static_cast<int64_t>(b) * oh * ow;
    const int64_t row_len = static_cast<int64_t>(cg) * k_ * k_;

    Tensor y({b, out_c_, oh, ow});
    Tensor cols({groups_, static_cast<int>(n_rows), static_cast<int>(row_len)});
    MatRM yg(og, n_rows);
    for (int g = 0; g < groups_; ++g) {
        float* col = cols.ptr() + static_cast<int64_t>(g) * n_rows * row_len;
        im2col(x, g * cg, cg, k_, stride_, pad_, oh, ow, col);
        CMapM colm(col, n_rows, row_len);
        CMapM wg(w_.ptr() + static_cast<int64_t>(g) * og * row_len, og, row_len);
        yg.noalias() = wg * colm.transpose();
        const int64_t plane = static_cast<int64_t>(oh) * ow;
        for (int oc = 0; oc < og; ++oc) {
            const float bias = b_.data[g * og + oc];
            for (int bi = 0; bi < b; ++bi) {
                float* dst = y.ptr() + ((static_cast<int64_t>(bi) * out_c_ + g * og + oc)) * plane;
                const float* src = yg.data() + oc * n_rows + static_cast<int64_t>(bi) * plane;
                for (int64_t p = 0; p < plane; ++p) dst[p] = src[p] + bias;
            }
        }
    }
    if (ctx) {
        ctx->saved.clear();
        ctx->saved.push_back(std::move(cols));
        Tensor shape_keeper;
        shape_keeper.shape = x.shape;
        ctx->saved.push_back(shape_keeper);
    }
    return y;
}

Tensor Conv2d::backward(const Tensor& grad_out, const LayerCtx& ctx, bool need_param_grads) {
    const Tensor& cols = ctx.saved.at(0);
    const std::vector<int>& xshape = ctx.saved.at(1).shape;
    const int b = xshape[0], h = xshape[2], w = xshape[3];
    const int oh = grad_out.dim(2), ow = grad_out.dim(3);
    const int cg = in_c_ / groups_, og = out_c_ / groups_;
    const int64_t n_rows = static_cast<int64_t>(b) * oh * ow;
    const int64_t row_len = static_cast<int64_t>(cg) * k_ * k_;
    const int64_t plane = static_cast<int64_t>(oh) * ow;

    Tensor gx(xshape);
    MatRM dyg(og, n_rows);
    MatRM dcol(n_rows, row_len);
    for (int g = 0; g < groups_; ++g) {
        for (int oc = 0; oc < og; ++oc)
            for (int bi = 0; bi < b; ++bi)
                std::memcpy(dyg.data() + oc * n_rows + static_cast<int64_t>(bi) * plane,
                            grad_out.ptr() + (static_cast<int64_t>(bi) * out_c_ + g * og + oc) * plane,
                            sizeof(float) * plane);
        const float* col = cols.ptr() + static_cast<int64_t>(g) * n_rows * row_len;
        CMapM colm(col, n_rows, row_len);
        CMapM wg(w_.ptr() + static_cast<int64_t>(g) * og * row_len, og, row_len);
        if (need_param_grads) {
            MapM gwg(gw_.ptr() + static_cast<int64_t>(g) * og * row_len, og, row_len);
            gwg.noalias() += dyg * colm;
            for (int oc = 0; oc < og; ++oc) gb_.data[g * og + oc] += dyg.row(oc).sum();
        }
        dcol.noalias() = dyg.transpose() * wg;
        col2im(dcol.data(), b, g * cg, cg, h, w, k_, stride_, pad_, oh, ow, gx);
    }
    return gx;
}

Tensor MaxPool2d::forward(const Tensor& x, LayerCtx* ctx, bool) {
    if (x.ndim() != 4) throw std::invalid_argument("MaxPool2d: expected {B,C,H,W}");
    const int b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int oh = (h - k_) / stride_ + 1, ow = (w - k_) / stride_ + 1;
    if (oh <= 0 || ow <= 0)
        throw std::invalid_argument("MaxPool2d: input " + x.shape_str() + " too small");
    Tensor y({b, c, oh, ow});
    Tensor arg({b, c, oh, ow});
    int64_t o = 0;
    for (int bi = 0; bi < b; ++bi)
        for (int ci = 0; ci < c; ++ci) {
            const float* plane = x.ptr() + (static_cast<int64_t>(bi) * c + ci) * h * w;
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox, ++o) {
                    float best = -std::numeric_limits<float>::infinity();
                    int best_idx = 0;
                    for (int ky = 0; ky < k_; ++ky)
                        for (int kx = 0; kx < k_; ++kx) {
                            const int iy = oy * stride_ + ky, ix = ox * stride_ + kx;
                            const float v = plane[static_cast<int64_t>(iy) * w + ix];
                            if (v > best) {
                                best = v;
                                best_idx = iy * w + ix;
                            }
                        }
                    y.data[o] = best;
                    arg.data[o] = static_cast<float>(best_idx);
                }
        }
    if (ctx) {
        ctx->saved.clear();
        ctx->saved.push_back(std::move(arg));
        Tensor shape_keeper;
        shape_keeper.shape = x.shape;
        ctx->saved.push_back(shape_keeper);
    }
    return y;
}

Tensor MaxPool2d::backward(const Tensor& grad_out, const LayerCtx& ctx, bool) {
    const Tensor& arg = ctx.saved.at(0);
    const std::vector<int>& xshape = ctx.saved.at(1).shape;
    const int b = xshape[0], c = xshape[1], h = xshape[2], w = xshape[3];
    Tensor gx(xshape);
    const int64_t out_plane = static_cast<int64_t>(grad_out.dim(2)) * grad_out.dim(3);
    for (int bi = 0; bi < b; ++bi)
        for (int ci = 0; ci < c; ++ci) {
            float* dst = gx.ptr() + (static_cast<int64_t>(bi) * c + ci) * h * w;
            const int64_t base = (static_cast<int64_t>(bi) * c + ci) * out_plane;
            for (int64_t p = 0; p < out_plane; ++p)
                dst[static_cast<int>(arg.data[base + p])] += grad_out.data[base + p];
        }
    return gx;
}

Tensor GlobalAvgPool::forward(const Tensor& x, LayerCtx* ctx, bool) {
    if (x.ndim() != 4) throw std::invalid_argument("GlobalAvgPool: expected {B,C,H,W}");
    const int b = x.dim(0), c = x.dim(1);
    const int64_t plane = static_cast<int64_t>(x.dim(2)) * x.dim(3);
    Tensor y({b, c});
    for (int bi = 0; bi < b; ++bi)
        for (int ci = 0; ci < c; ++ci) {
            const float* src = x.ptr() + (static_cast<int64_t>(bi) * c + ci) * plane;
            double s = 0.0;
            for (int64_t p = 0; p < plane; ++p) s += src[p];
            y.data[static_cast<int64_t>(bi) * c + ci] = static_cast<float>(s / plane);
        }
    if (ctx) {
        ctx->saved.clear();
        Tensor shape_keeper;
        shape_keeper.shape = x.shape;
        ctx->saved.push_back(shape_keeper);
    }
    return y;
}

Tensor GlobalAvgPool::backward(const Tensor& grad_out, const LayerCtx& ctx, bool) {
    const std::vector<int>& xshape = ctx.saved.at(0).shape;
    const int b = xshape[0], c = xshape[1];
    const int64_t plane = static_cast<int64_t>(xshape[2]) * xshape[3];
    Tensor gx(xshape);
    for (int bi = 0; bi < b; ++bi)
        for (int ci = 0; ci < c; ++ci) {
            const float g = grad_out.data[static_cast<int64_t>(bi) * c + ci] / plane;
            float* dst = gx.ptr() + (static_cast<int64_t>(bi) * c + ci) * plane;
            for (int64_t p = 0; p < plane; ++p) dst[p] = g;
        }
    return gx;
}

BatchNorm2d::BatchNorm2d(int channels, float momentum, float eps)
    : c_(channels),
      momentum_(momentum),
      eps_(eps),
      gamma_({channels}),
      beta_({channels}),
      ggamma_({channels}),
      gbeta_({channels}),
      running_mean_({channels}),
      running_var_({channels}) {
    for (auto& v : gamma_.data) v = 1.0f;
    for (auto& v : running_var_.data) v = 1.0f;
}

Tensor BatchNorm2d::forward(const Tensor& x, LayerCtx* ctx, bool train) {
    check_image(x, c_, "BatchNorm2d");
    const int b = x.dim(0), h = x.dim(2), w = x.dim(3);
    const int64_t plane = static_cast<int64_t>(h) * w;
    const int64_t n = static_cast<int64_t>(b) * plane;
    Tensor y(x.shape);

    if (train) {
        Tensor xhat(x.shape);
        Tensor invstd({c_});
        for (int ci = 0; ci < c_; ++ci) {
            double mean = 0.0;
            for (int bi = 0; bi < b; ++bi) {
                const float* src = x.ptr() + (static_cast<int64_t>(bi) * c_ + ci) * plane;
                for (int64_t p = 0; p < plane; ++p) mean += src[p];
            }
            mean /= n;
            double var = 0.0;
            for (int bi = 0; bi < b; ++bi) {
                const float* src = x.ptr() + (static_cast<int64_t>(bi) * c_ + ci) * plane;
                for (int64_t p = 0; p < plane; ++p) {
                    const double d = src[p] - mean;
                    var += d * d;
                }
            }
            var /= n;
            const float istd = 1.0f / std::sqrt(static_cast<float>(var) + eps_);
            invstd.data[ci] = istd;
            const float g = gamma_.data[ci], be = beta_.data[ci], m = static_cast<float>(mean);
            for (int bi = 0; bi < b; ++bi) {
                const int64_t base = (static_cast<int64_t>(bi) * c_ + ci) * plane;
                for (int64_t p = 0; p < plane; ++p) {
                    const float xh = (x.data[base + p] - m) * istd;
                    xhat.data[base + p] = xh;
                    y.data[base + p] = g * xh + be;
                }
            }
            running_mean_.data[ci] =
                (1.0f - momentum_) * running_mean_.data[ci] + momentum_ * m;
            const float unbiased = n > 1 ? static_cast<float>(var * n / (n - 1)) : static_cast<float>(var);
            running_var_.data[ci] = (1.0f - momentum_) * running_var_.data[ci] + momentum_ * unbiased;
        }
        if (ctx) {
            ctx->saved.clear();
            ctx->saved.push_back(std::move(xhat));
            ctx->saved.push_back(std::move(invstd));
            ctx->flag = 1;
        }
    } else {
        for (int ci = 0; ci < c_; ++ci) {
            const float istd = 1.0f / std::sqrt(running_var_.data[ci] + eps_);
            const float scale = gamma_.data[ci] * istd;
            const float shift = beta_.data[ci] - scale * running_mean_.data[ci];
            for (int bi = 0; bi < b; ++bi) {
                const int64_t base = (static_cast<int64_t>(bi) * c_ + ci) * plane;
                for (int64_t p = 0; p < plane; ++p) y.data[base + p] = scale * x.data[base + p] + shift;
            }
        }
        if (ctx) {
            ctx->saved.clear();
            ctx->saved.push_back(x);
            ctx->flag = 0;
        }
    }
    return y;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out, const LayerCtx& ctx, bool need_param_grads) {
    const int b = grad_out.dim(0), h = grad_out.dim(2), w = grad_out.dim(3);
    const int64_t plane = static_cast<int64_t>(h) * w;
    const int64_t n = static_cast<int64_t>(b) * plane;
    Tensor gx(grad_out.shape);

    if (ctx.flag == 1) {  // training-mode statistics
        const Tensor& xhat = ctx.saved.at(0);
        const Tensor& invstd = ctx.saved.at(1);
        for (int ci = 0; ci < c_; ++ci) {
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (int bi = 0; bi < b; ++bi) {
                const int64_t base = (static_cast<int64_t>(bi) * c_ + ci) * plane;
                for (int64_t p = 0; p < plane; ++p) {
                    sum_dy += grad_out.data[base + p];
                    sum_dy_xhat += grad_out.data[base + p] * xhat.data[base + p];
                }
            }
            if (need_param_grads) {
                ggamma_.data[ci] += static_cast<float>(sum_dy_xhat);
                gbeta_.data[ci] += static_cast<float>(sum_dy);
            }
            const float k = gamma_.data[ci] * invstd.data[ci] / static_cast<float>(n);
            const float sdy = static_cast<float>(sum_dy), sdyx = static_cast<float>(sum_dy_xhat);
            for (int bi = 0; bi < b; ++bi) {
                const int64_t base = (static_cast<int64_t>(bi) * c_ + ci) * plane;
                for (int64_t p = 0; p < plane; ++p)
                    gx.data[base + p] = k * (static_cast<float>(n) * grad_out.data[base + p] - sdy -
                                             xhat.data[base + p] * sdyx);
            }
        }
    } else {  // running statistics (inference-mode forward)
        const Tensor& x = ctx.saved.at(0);
        for (int ci = 0; ci < c_; ++ci) {
            const float istd = 1.0f / std::sqrt(running_var_.data[ci] + eps_);
            const float scale = gamma_.data[ci] * istd;
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (int bi = 0; bi < b; ++bi) {
                const int64_t base = (static_cast<int64_t>(bi) * c_ + ci) * plane;
                for (int64_t p = 0; p < plane; ++p) {
                    gx.data[base + p] = scale * grad_out.data[base + p];
                    if (need_param_grads) {
                        sum_dy += grad_out.data[base + p];
                        sum_dy_xhat += grad_out.data[base + p] *
                                       (x.data[base + p] - running_mean_.data[ci]) * istd;
                    }
                }
            }
            if (need_param_grads) {
                ggamma_.data[ci] += static_cast<float>(sum_dy_xhat);
                gbeta_.data[ci] += static_cast<float>(sum_dy);
            }
        }
    }
    return gx;
}

Tensor Upsample2x::forward(const Tensor& x, LayerCtx* ctx, bool) {
    if (x.ndim() != 4) throw std::invalid_argument("Upsample2x: expected {B,C,H,W}");
    const int b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    Tensor y({b, c, 2 * h, 2 * w});
    for (int bi = 0; bi < b; ++bi)
        for (int ci = 0; ci < c; ++ci) {
            const float* src = x.ptr() + (static_cast<int64_t>(bi) * c + ci) * h * w;
            float* dst = y.ptr() + (static_cast<int64_t>(bi) * c + ci) * 4 * h * w;
            for (int iy = 0; iy < h; ++iy)
                for (int ix = 0; ix < w; ++ix) {
                    const float v = src[static_cast<int64_t>(iy) * w + ix];
                    const int64_t o = static_cast<int64_t>(2 * iy) * 2 * w + 2 * ix;
                    dst[o] = v;
                    dst[o + 1] = v;
                    dst[o + 2 * w] = v;
                    dst[o + 2 * w + 1] = v;
                }
        }
    if (ctx) ctx->saved.clear();
    return y;
}

Tensor Upsample2x::backward(const Tensor& grad_out, const LayerCtx&, bool) {
    const int b = grad_out.dim(0), c = grad_out.dim(1);
    const int h = grad_out.dim(2) / 2, w = grad_out.dim(3) / 2;
    Tensor gx({b, c, h, w});
    for (int bi = 0; bi < b; ++bi)
        for (int ci = 0; ci < c; ++ci) {
            float* dst = gx.ptr() + (static_cast<int64_t>(bi) * c + ci) * h * w;
            const float* src = grad_out.ptr() + (static_cast<int64_t>(bi) * c + ci) * 4 * h * w;
            for (int iy = 0; iy < h; ++iy)
                for (int ix = 0; ix < w; ++ix) {
                    const int64_t o = static_cast<int64_t>(2 * iy) * 2 * w + 2 * ix;
                    dst[static_cast<int64_t>(iy) * w + ix] =
                        src[o] + src[o + 1] + src[o + 2 * w] + src[o + 2 * w + 1];
                }
        }
    return gx;
}

Tensor ChannelShuffle::forward(const Tensor& x, LayerCtx* ctx, bool) {
    if (x.ndim() != 4 || x.dim(1) % groups_ != 0)
        throw std::invalid_argument("ChannelShuffle: channels not divisible by groups");
    const int b = x.dim(0), c = x.dim(1);
    const int64_t plane = static_cast<int64_t>(x.dim(2)) * x.dim(3);
    const int per = c / groups_;
    Tensor y(x.shape);
    for (int bi = 0; bi < b; ++bi)
        for (int ci = 0; ci < c; ++ci) {
            const int g = ci / per, i = ci % per;
            const int oc = i * groups_ + g;
            std::memcpy(y.ptr() + (static_cast<int64_t>(bi) * c + oc) * plane,
                        x.ptr() + (static_cast<int64_t>(bi) * c + ci) * plane, sizeof(float) * plane);
        }
    if (ctx) ctx->saved.clear();
    return y;
}

Tensor ChannelShuffle::backward(const Tensor& grad_out, const LayerCtx&, bool) {
    const int b = grad_out.dim(0), c = grad_out.dim(1);
    const int64_t plane = static_cast<int64_t>(grad_out.dim(2)) * grad_out.dim(3);
    const int per = c / groups_;
    Tensor gx(grad_out.shape);
    for (int bi = 0; bi < b; ++bi)
        for (int ci = 0; ci < c; ++ci) {
            const int g = ci / per, i = ci % per;
            const int oc = i * groups_ + g;
            std::memcpy(gx.ptr() + (static_cast<int64_t>(bi) * c + ci) * plane,
                        grad_out.ptr() + (static_cast<int64_t>(bi) * c + oc) * plane,
                        sizeof(float) * plane);
        }
    return gx;
}

}  // namespace coboost
