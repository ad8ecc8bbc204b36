#include "coboost/model/zoo.hpp"

#include <memory>

#include "coboost/nn/conv.hpp"

namespace coboost {

namespace {

void check_spec(const ModelSpec& spec) {
    if (spec.num_classes < 1) throw std::invalid_argument("ModelSpec: num_classes must be positive");
    if (spec.input_shape[0] < 1 || spec.input_shape[1] < 1 || spec.input_shape[2] < 1)
        throw std::invalid_argument("ModelSpec: bad input_shape");
}

int flat_dim(const std::array<int, 3>& s) { return s[0] * s[1] * s[2]; }

Network build_mlp_tiny(const ModelSpec& spec, Rng& rng) {
    Network net;
    net.add(std::make_unique<Flatten>());
    net.add(std::make_unique<Dense>(flat_dim(spec.input_shape), 64, rng));
    net.add(std::make_unique<ReLU>());
    net.add(std::make_unique<Dense>(64, spec.num_classes, rng));
    return net;
}

Network build_cnn2(const ModelSpec& spec, Rng& rng) {
    const int c = spec.input_shape[0], h = spec.input_shape[1], w = spec.input_shape[2];
    if (h % 4 != 0 || w % 4 != 0)
        throw std::invalid_argument("cnn2 needs H,W divisible by 4, got " + std::to_string(h) + "x" +
                                    std::to_string(w));
    Network net;
    net.add(std::make_unique<Conv2d>(c, 8, 3, 1, 1, 1, rng));
    net.add(std::make_unique<ReLU>());
    net.add(std::make_unique<MaxPool2d>(2));
    net.add(std::make_unique<Conv2d>(8, 16, 3, 1, 1, 1, rng));
    net.add(std::make_unique<ReLU>());
    net.add(std::make_unique<MaxPool2d>(2));
    net.add(std::make_unique<Flatten>());
    net.add(std::make_unique<Dense>(16 * (h / 4) * (w / 4), 64, rng));
    net.add(std::make_unique<ReLU>());
    net.add(std::make_unique<Dense>(64, spec.num_classes, rng));
    return net;
}

Network build_cnn5(const ModelSpec& spec, Rng& rng) {
    const int c = spec.input_shape[0], h = spec.input_shape[1], w = spec.input_shape[2];
    if (h % 4 != 0 || w % 4 != 0)
        throw std::invalid_argument("cnn5 needs H,W divisible by 4");
    Network net;
    net.add(std::make_unique<Conv2d>(c, 32, 3, 1, 1, 1, rng));
    net.add(std::make_unique<ReLU>());
    net.add(std::make_unique<MaxPool2d>(2));
    net.add(std::make_unique<Conv2d>(32, 64, 3, 1, 1, 1, rng));
    net.add(std::make_unique<ReLU>());
    net.add(std::make_unique<MaxPool2d>(2));
    net.add(std::make_unique<Conv2d>(64, 64, 3, 1, 1, 1, rng));
    net.add(std::make_unique<ReLU>());
    net.add(std::make_unique<Flatten>());
    net.add(std::make_unique<Dense>(64 * (h / 4) * (w / 4), 128, rng));
    net.add(std::make_unique<ReLU>());
    net.add(std::make_unique<Dense>(128, spec.num_classes, rng));
    return net;
}

Network build_lenet5(const ModelSpec& spec, Rng& rng) {
    const int c = spec.input_shape[0], h = spec.input_shape[1], w = spec.input_shape[2];
    // 28x28 -> conv5 pad2 -> 28 -> pool -> 14 -> conv5 -> 10 -> pool -> 5
    const int h1 = h / 2, w1 = w / 2;
    const int h2 = (h1 - 5 + 1) / 2, w2 = (w1 - 5 + 1) / 2;
    if (h2 < 1 || w2 < 1)
        throw std::invalid_argument("lenet5 needs at least 20x20 inputs, got " + std::to_string(h) +
                                    "x" + std::to_string(w));
    Network net;
    net.add(std::make_unique<Conv2d>(c, 6, 5, 1, 2, 1, rng));
    net.add(std::make_unique<ReLU>());
    net.add(std::make_unique<MaxPool2d>(2));
    net.add(std::make_unique<Conv2d>(6, 16, 5, 1, 0, 1, rng));
    net.add(std::make_unique<ReLU>());
    net.add(std::make_unique<MaxPool2d>(2));
    net.add(std::make_unique<Flatten>());
    net.add(std::make_unique<Dense>(16 * h2 * w2, 120, rng));
    net.add(std::make_unique<ReLU>());
    net.add(std::make_unique<Dense>(120, 84, rng));
    net.add(std::make_unique<ReLU>());
    net.add(std::make_unique<Dense>(84, spec.num_classes, rng));
    return net;
}

std::unique_ptr<Residual> residual_block(int in_c, int out_c, int stride, Rng& rng) {
    Network body;
    body.add(std::make_unique<Conv2d>(in_c, out_c, 3, stride, 1, 1, rng));
    body.add(std::make_unique<BatchNorm2d>(out_c));
    body.add(std::make_unique<ReLU>());
    body.add(std::make_unique<Conv2d>(out_c, out_c, 3, 1, 1, 1, rng));
    body.add(std::make_unique<BatchNorm2d>(out_c));
    Network shortcut;
    if (stride != 1 || in_c != out_c) {
        shortcut.add(std::make_unique<Conv2d>(in_c, out_c, 1, stride, 0, 1, rng));
        shortcut.add(std::make_unique<BatchNorm2d>(out_c));
    }
    return std::make_unique<Residual>(std::move(body), std::move(shortcut));
}

Network build_resnet_small(const ModelSpec& spec, Rng& rng) {
    const int c = spec.input_shape[0];
    Network net;
    net.add(std::make_unique<Conv2d>(c, 16, 3, 1, 1, 1, rng));
    net.add(std::make_unique<BatchNorm2d>(16));
    net.add(std::make_unique<ReLU>());
    net.add(residual_block(16, 16, 1, rng));
    net.add(residual_block(16, 32, 2, rng));
    net.add(std::make_unique<GlobalAvgPool>());
    net.add(std::make_unique<Dense>(32, spec.num_classes, rng));
    return net;
}

void add_dw_separable(Network& net, int in_c, int out_c, int stride, Rng& rng) {
    net.add(std::make_unique<Conv2d>(in_c, in_c, 3, stride, 1, in_c, rng));
    net.add(std::make_unique<BatchNorm2d>(in_c));
    net.add(std::make_unique<ReLU>());
    net.add(std::make_unique<Conv2d>(in_c, out_c, 1, 1, 0, 1, rng));
    net.add(std::make_unique<BatchNorm2d>(out_c));
    net.add(std::make_unique<ReLU>());
}

Network build_mobilenet_small(const ModelSpec& spec, Rng& rng) {
    const int c = spec.input_shape[0];
    Network net;
    net.add(std::make_unique<Conv2d>(c, 16, 3, 1, 1, 1, rng));
    net.add(std::make_unique<BatchNorm2d>(16));
    net.add(std::make_unique<ReLU>());
    add_dw_separable(net, 16, 32, 2, rng);
    add_dw_separable(net, 32, 64, 1, rng);
    net.add(std::make_unique<GlobalAvgPool>());
    net.add(std::make_unique<Dense>(64, spec.num_classes, rng));
    return net;
}

Network build_shufflenet_small(const ModelSpec& spec, Rng& rng) {
    const int c = spec.input_shape[0];
    Network net;
    net.add(std::make_unique<Conv2d>(c, 16, 3, 1, 1, 1, rng));
    net.add(std::make_unique<BatchNorm2d>(16));
    net.add(std::make_unique<ReLU>());
    net.add(std::make_unique<Conv2d>(16, 32, 1, 1, 0, 2, rng));
    net.add(std::make_unique<BatchNorm2d>(32));
    net.add(std::make_unique<ReLU>());
    net.add(std::make_unique<ChannelShuffle>(2));
    net.add(std::make_unique<Conv2d>(32, 32, 3, 2, 1, 32, rng));
    net.add(std::make_unique<BatchNorm2d>(32));
    net.add(std::make_unique<Conv2d>(32, 32, 1, 1, 0, 2, rng));
    net.add(std::make_unique<BatchNorm2d>(32));
    net.add(std::make_unique<ReLU>());
    net.add(std::make_unique<GlobalAvgPool>());
    net.add(std::make_unique<Dense>(32, spec.num_classes, rng));
    return net;
}

}  // namespace

const std::vector<std::string>& known_architectures() {
    static const std::vector<std::string> archs = {
        "cnn5", "lenet5", "mlp_tiny", "cnn2", "resnet_small", "mobilenet_small", "shufflenet_small"};
    return archs;
}

ClientModel build_model(const ModelSpec& spec, uint64_t seed) {
    check_spec(spec);
    Rng rng(seed);
    ClientModel model;
    model.spec = spec;
    if (spec.arch == "mlp_tiny")
        model.net = build_mlp_tiny(spec, rng);
    else if (spec.arch == "cnn2")
        model.net = build_cnn2(spec, rng);
    else if (spec.arch == "cnn5")
        model.net = build_cnn5(spec, rng);
    else if (spec.arch == "lenet5")
        model.net = build_lenet5(spec, rng);
    else if (spec.arch == "resnet_small")
        model.net = build_resnet_small(spec, rng);
    else if (spec.arch == "mobilenet_small")
        model.net = build_mobilenet_small(spec, rng);
    else if (spec.arch == "shufflenet_small")
        model.net = build_shufflenet_small(spec, rng);
    else
        throw std::invalid_argument("build_model: unknown arch '" + spec.arch + "'");
    return model;
}

Tensor forward_logits(ClientModel& model, const Tensor& batch) {
    if (batch.ndim() != 4 || batch.dim(1) != model.spec.input_shape[0] ||
        batch.dim(2) != model.spec.input_shape[1] || batch.dim(3) != model.spec.input_shape[2])
        throw std::invalid_argument("forward_logits: batch " + batch.shape_str() +
                                    " does not match model input shape");
    return model.net.forward(batch, nullptr, false);
}

Tensor GeneratorModel::forward(const Tensor& z, const std::vector<int>& labels, LayerCtx* ctx,
                               bool train) {
    if (z.ndim() != 2 || z.dim(1) != noise_dim)
        throw std::invalid_argument("GeneratorModel: noise must be {B," + std::to_string(noise_dim) +
                                    "}");
    if (static_cast<int>(labels.size()) != z.dim(0))
        throw std::invalid_argument("GeneratorModel: label count mismatch");
    Tensor emb = label_emb.forward(labels);
    const int b = z.dim(0);
    Tensor in({b, 2 * noise_dim});
    for (int i = 0; i < b; ++i) {
        std::copy_n(z.ptr() + static_cast<int64_t>(i) * noise_dim, noise_dim,
                    in.ptr() + static_cast<int64_t>(i) * 2 * noise_dim);
        std::copy_n(emb.ptr() + static_cast<int64_t>(i) * noise_dim, noise_dim,
                    in.ptr() + static_cast<int64_t>(i) * 2 * noise_dim + noise_dim);
    }
    return net.forward(in, ctx, train);
}

void GeneratorModel::backward(const Tensor& grad_out, const std::vector<int>& labels,
                              const LayerCtx& ctx) {
    Tensor gin = net.backward(grad_out, ctx, true);
    const int b = gin.dim(0);
    Tensor gemb({b, noise_dim});
    for (int i = 0; i < b; ++i)
        std::copy_n(gin.ptr() + static_cast<int64_t>(i) * 2 * noise_dim + noise_dim, noise_dim,
                    gemb.ptr() + static_cast<int64_t>(i) * noise_dim);
    label_emb.backward(labels, gemb);
}

std::vector<Tensor*> GeneratorModel::params() {
    auto out = net.params();
    out.push_back(&label_emb.table);
    return out;
}

std::vector<Tensor*> GeneratorModel::grads() {
    auto out = net.grads();
    out.push_back(&label_emb.grad);
    return out;
}

void GeneratorModel::zero_grad() {
    net.zero_grad();
    label_emb.zero_grad();
}

uint64_t GeneratorModel::state_checksum() {
    uint64_t h = net.state_checksum();
    return checksum(label_emb.table, h);
}

GeneratorModel build_generator(int noise_dim, int num_classes, const std::array<int, 3>& output_shape,
                               uint64_t seed, const std::vector<float>& channel_lo,
                               const std::vector<float>& channel_hi, float lr) {
    if (noise_dim < 1 || num_classes < 1)
        throw std::invalid_argument("build_generator: dims must be positive");
    const int c = output_shape[0], h = output_shape[1], w = output_shape[2];
    if (c < 1 || h < 4 || w < 4 || h % 4 != 0 || w % 4 != 0)
        throw std::invalid_argument("build_generator: output H,W must be positive multiples of 4");

    std::vector<float> lo = channel_lo.empty() ? std::vector<float>(c, -1.0f) : channel_lo;
    std::vector<float> hi = channel_hi.empty() ? std::vector<float>(c, 1.0f) : channel_hi;
    if (static_cast<int>(lo.size()) != c || static_cast<int>(hi.size()) != c)
        throw std::invalid_argument("build_generator: channel range size mismatch");

    Rng rng(seed);
    GeneratorModel gen;
    gen.noise_dim = noise_dim;
    gen.num_classes = num_classes;
    gen.output_shape = output_shape;
    gen.label_emb = Embedding(num_classes, noise_dim, rng);
    gen.opt = Adam(lr);

    const int ngf = h <= 8 ? 8 : 64;  // desk-scale generators stay small
    const int h0 = h / 4, w0 = w / 4;
    Network net;
    net.add(std::make_unique<Dense>(2 * noise_dim, 2 * ngf * h0 * w0, rng));
    net.add(std::make_unique<Reshape>(std::vector<int>{2 * ngf, h0, w0}));
    net.add(std::make_unique<BatchNorm2d>(2 * ngf));
    net.add(std::make_unique<Upsample2x>());
    net.add(std::make_unique<Conv2d>(2 * ngf, ngf, 3, 1, 1, 1, rng));
    net.add(std::make_unique<BatchNorm2d>(ngf));
    net.add(std::make_unique<LeakyReLU>(0.2f));
    net.add(std::make_unique<Upsample2x>());
    net.add(std::make_unique<Conv2d>(ngf, ngf, 3, 1, 1, 1, rng));
    net.add(std::make_unique<BatchNorm2d>(ngf));
    net.add(std::make_unique<LeakyReLU>(0.2f));
    net.add(std::make_unique<Conv2d>(ngf, c, 3, 1, 1, 1, rng));
    net.add(std::make_unique<RangeSquash>(std::move(lo), std::move(hi)));
    gen.net = std::move(net);
    return gen;
}

}  // namespace coboost
