#include "coboost/fl/local_trainer.hpp"

#include <numeric>

#include "coboost/nn/losses.hpp"
#include "coboost/nn/optim.hpp"
#include "coboost/rng.hpp"

namespace coboost {

namespace {

// Forward a large set in chunks to bound peak memory.
Tensor batched_logits(Network& net, const Tensor& samples, int chunk = 512) {
    const int n = samples.dim(0);
    const int c = samples.dim(1), h = samples.dim(2), w = samples.dim(3);
    const int64_t row = static_cast<int64_t>(c) * h * w;
    Tensor out;
    for (int off = 0; off < n; off += chunk) {
        const int m = std::min(chunk, n - off);
        Tensor part({m, c, h, w});
        std::copy_n(samples.ptr() + off * row, m * row, part.ptr());
        Tensor logits = net.forward(part, nullptr, false);
        if (off == 0) out = Tensor({n, logits.dim(1)});
        std::copy_n(logits.ptr(), logits.numel(), out.ptr() + static_cast<int64_t>(off) * logits.dim(1));
    }
    return out;
}

}  // namespace

ClientModel& train_client(ClientModel& model, const ClientShard& shard, const DatasetHandle& handle,
                          const LocalTrainConfig& cfg, const TrainCurveFn& curve) {
    if (model.frozen)
        throw std::logic_error("train_client: client " + std::to_string(model.client_id) +
                               " is frozen");
    if (shard.indices.empty())
        throw std::invalid_argument("train_client: empty shard for client " +
                                    std::to_string(shard.client_id));
    if (cfg.epochs < 1 || cfg.batch_size < 1 || cfg.lr <= 0.0f)
        throw std::invalid_argument("train_client: bad config");

    // the shard's samples are the only training data this client ever touches
    Tensor x = handle.gather_train(shard.indices);
    std::vector<int> y(shard.indices.size());
    for (size_t i = 0; i < shard.indices.size(); ++i) y[i] = handle.train_labels[shard.indices[i]];

    const int n = x.dim(0);
    const int64_t row = static_cast<int64_t>(x.dim(1)) * x.dim(2) * x.dim(3);
    SGD opt(cfg.lr, cfg.momentum);
    Rng rng(cfg.seed);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        int64_t seen = 0, correct = 0;
        for (int off = 0; off < n; off += cfg.batch_size) {
            const int m = std::min(cfg.batch_size, n - off);
            Tensor bx({m, x.dim(1), x.dim(2), x.dim(3)});
            std::vector<int> by(m);
            for (int i = 0; i < m; ++i) {
                std::copy_n(x.ptr() + static_cast<int64_t>(order[off + i]) * row, row,
                            bx.ptr() + static_cast<int64_t>(i) * row);
                by[i] = y[order[off + i]];
            }
            LayerCtx ctx;
            Tensor logits = model.net.forward(bx, &ctx, true);
            loss_sum += ce_mean(logits, by) * m;
            correct += static_cast<int64_t>(accuracy_from_logits(logits, by) * m + 0.5);
            seen += m;
            model.net.zero_grad();
            model.net.backward(ce_grad(logits, by), ctx, true);
            opt.step(model.net.params(), model.net.grads());
        }
        if (curve) curve(epoch, loss_sum / seen, static_cast<double>(correct) / seen);
    }

    Tensor final_logits = batched_logits(model.net, x);
    model.metadata["final_train_acc"] = accuracy_from_logits(final_logits, y);
    model.metadata["shard_size"] = static_cast<double>(n);
    model.frozen = true;
    return model;
}

double evaluate(ClientModel& model, const Tensor& samples, const std::vector<int>& labels) {
    if (labels.empty()) throw std::invalid_argument("evaluate: empty test set");
    Tensor logits = batched_logits(model.net, samples);
    return accuracy_from_logits(logits, labels);
}

double evaluate(const WeightedEnsemble& ens, const Tensor& samples, const std::vector<int>& labels) {
    if (labels.empty()) throw std::invalid_argument("evaluate: empty test set");
    if (ens.clients.empty()) throw std::invalid_argument("evaluate: empty ensemble");
    Tensor combined;
    for (size_t k = 0; k < ens.clients.size(); ++k) {
        Tensor logits = batched_logits(ens.clients[k]->net, samples);
        if (k == 0) combined = Tensor(logits.shape);
        const float w = ens.weights[k];
        for (size_t i = 0; i < combined.data.size(); ++i) combined.data[i] += w * logits.data[i];
    }
    return accuracy_from_logits(combined, labels);
}

}  // namespace coboost
