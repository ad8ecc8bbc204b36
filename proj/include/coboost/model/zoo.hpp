#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "coboost/nn/network.hpp"
#include "coboost/nn/optim.hpp"

namespace coboost {

struct ModelSpec {
    std::string arch;  // cnn5, lenet5, mlp_tiny, cnn2, resnet_small, mobilenet_small, shufflenet_small
    int num_classes = 0;
    std::array<int, 3> input_shape{0, 0, 0};  // {c,h,w}
};

struct ClientModel {
    int client_id = -1;
    ModelSpec spec;
    Network net;
    bool frozen = false;
    std::map<std::string, double> metadata;

    uint64_t state_checksum() { return net.state_checksum(); }
};

// Label-conditioned sample generator: the class id is embedded and
// concatenated with the noise vector before the first layer; a final squash
// bounds outputs to the normalized sample range [channel_lo, channel_hi].
struct GeneratorModel {
    int noise_dim = 0;
    int num_classes = 0;
    std::array<int, 3> output_shape{0, 0, 0};
    Embedding label_emb;
    Network net;
    Adam opt;

    GeneratorModel() : opt(1e-3f) {}

    // z: {B, noise_dim}; returns {B,c,h,w}. For training pass a ctx pair.
    Tensor forward(const Tensor& z, const std::vector<int>& labels, LayerCtx* ctx = nullptr,
                   bool train = false);
    // grad wrt generator output; accumulates parameter grads (incl. embedding).
    void backward(const Tensor& grad_out, const std::vector<int>& labels, const LayerCtx& ctx);

    std::vector<Tensor*> params();
    std::vector<Tensor*> grads();
    void zero_grad();
    uint64_t state_checksum();
};

const std::vector<std::string>& known_architectures();

ClientModel build_model(const ModelSpec& spec, uint64_t seed);

GeneratorModel build_generator(int noise_dim, int num_classes, const std::array<int, 3>& output_shape,
                               uint64_t seed, const std::vector<float>& channel_lo = {},
                               const std::vector<float>& channel_hi = {}, float lr = 1e-3f);

// Raw pre-softmax logits of a frozen or live model; inference mode, no state
// is touched, safe to call concurrently on a frozen model.
Tensor forward_logits(ClientModel& model, const Tensor& batch);

}  // namespace coboost
