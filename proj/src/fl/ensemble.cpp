#include "coboost/fl/ensemble.hpp"

#include <cmath>

#include "coboost/nn/losses.hpp"

namespace coboost {

WeightedEnsemble make_ensemble(std::vector<ClientModel>& clients, std::vector<float> weights) {
    if (clients.empty()) throw std::invalid_argument("make_ensemble: no clients");
    if (weights.size() != clients.size())
        throw std::invalid_argument("make_ensemble: weight count mismatch");
    WeightedEnsemble ens;
    for (auto& c : clients) ens.clients.push_back(&c);
    const int k = ens.clients.front()->spec.num_classes;
    for (auto* c : ens.clients)
        if (c->spec.num_classes != k)
            throw std::invalid_argument("make_ensemble: clients disagree on logit dimension");
    ens.weights = std::move(weights);
    return ens;
}

std::vector<float> uniform_weights(int n) {
    if (n < 1) throw std::invalid_argument("uniform_weights: n must be >= 1");
    return std::vector<float>(n, 1.0f / static_cast<float>(n));
}

std::vector<float> data_amount_weights(const std::vector<ClientShard>& shards) {
    if (shards.empty()) throw std::invalid_argument("data_amount_weights: no shards");
    double total = 0.0;
    for (const auto& s : shards) total += static_cast<double>(s.size());
    if (total <= 0.0) throw std::invalid_argument("data_amount_weights: all shards empty");
    std::vector<float> w(shards.size());
    for (size_t i = 0; i < shards.size(); ++i)
        w[i] = static_cast<float>(static_cast<double>(shards[i].size()) / total);
    return w;
}

std::vector<float> normalize_weights(const std::vector<float>& raw) {
    if (raw.empty()) throw std::invalid_argument("normalize_weights: empty vector");
    double sum = 0.0;
    std::vector<float> w(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        if (!std::isfinite(raw[i]))
            throw std::invalid_argument("normalize_weights: non-finite entry");
        w[i] = std::min(1.0f, std::max(0.0f, raw[i]));
        sum += w[i];
    }
    if (sum <= 0.0) return uniform_weights(static_cast<int>(raw.size()));
    for (auto& v : w) v = static_cast<float>(v / sum);
    return w;
}

Tensor ensemble_logits(const WeightedEnsemble& ens, const Tensor& batch) {
    return ensemble_forward(ens, batch, nullptr);
}

Tensor ensemble_forward(const WeightedEnsemble& ens, const Tensor& batch, EnsembleTrace* trace) {
    if (ens.clients.empty()) throw std::invalid_argument("ensemble_forward: empty ensemble");
    if (trace) {
        trace->client_ctx.assign(ens.clients.size(), LayerCtx{});
        trace->client_logits.clear();
    }
    Tensor out;
    for (size_t k = 0; k < ens.clients.size(); ++k) {
        Tensor logits =
            ens.clients[k]->net.forward(batch, trace ? &trace->client_ctx[k] : nullptr, false);
        if (k == 0) {
            out = Tensor(logits.shape);
        } else if (!out.same_shape(logits)) {
            throw std::invalid_argument("ensemble_forward: client logit shapes disagree");
        }
        const float w = ens.weights[k];
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += w * logits.data[i];
        if (trace) trace->client_logits.push_back(std::move(logits));
    }
    return out;
}

Tensor ensemble_backward_input(const WeightedEnsemble& ens, const Tensor& grad_logits,
                               const EnsembleTrace& trace) {
    Tensor gx;
    for (size_t k = 0; k < ens.clients.size(); ++k) {
        Tensor g = grad_logits;
        scale_inplace(g, ens.weights[k]);
        Tensor gk = ens.clients[k]->net.backward(g, trace.client_ctx[k], /*need_param_grads=*/false);
        if (k == 0)
            gx = std::move(gk);
        else
            add_inplace(gx, gk);
    }
    return gx;
}

std::vector<double> sample_difficulty(const Tensor& logits, const std::vector<int>& labels) {
    if (static_cast<int>(labels.size()) != logits.dim(0))
        throw std::invalid_argument("sample_difficulty: label count mismatch");
    Tensor p = softmax_rows(logits);
    const int k = logits.dim(1);
    std::vector<double> d(labels.size());
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= k)
            throw std::out_of_range("sample_difficulty: label out of range");
        d[i] = 1.0 - static_cast<double>(p.data[i * k + labels[i]]);
    }
    return d;
}

std::vector<double> sample_difficulty(const WeightedEnsemble& ens, const Tensor& batch,
                                      const std::vector<int>& labels) {
    return sample_difficulty(ensemble_logits(ens, batch), labels);
}

std::vector<double> weight_gradient(const std::vector<Tensor>& client_logits,
                                    const std::vector<float>& weights,
                                    const std::vector<int>& labels) {
    const int n = static_cast<int>(client_logits.size());
    if (n == 0 || weights.size() != client_logits.size())
        throw std::invalid_argument("weight_gradient: bad inputs");
    const int b = client_logits[0].dim(0), k = client_logits[0].dim(1);
    if (static_cast<int>(labels.size()) != b)
        throw std::invalid_argument("weight_gradient: label count mismatch");

    // combined logits and softmax in double
    std::vector<double> grad(n, 0.0);
    std::vector<double> row(k);
    for (int i = 0; i < b; ++i) {
        for (int j = 0; j < k; ++j) {
            double a = 0.0;
            for (int c = 0; c < n; ++c)
                a += static_cast<double>(weights[c]) * client_logits[c].data[static_cast<int64_t>(i) * k + j];
            row[j] = a;
        }
        double mx = row[0];
        for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < k; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        for (int j = 0; j < k; ++j) row[j] /= sum;  // softmax
        row[labels[i]] -= 1.0;                      // softmax - onehot
        for (int c = 0; c < n; ++c) {
            double dot = 0.0;
            for (int j = 0; j < k; ++j)
                dot += row[j] * client_logits[c].data[static_cast<int64_t>(i) * k + j];
            grad[c] += dot;
        }
    }
    for (auto& g : grad) g /= b;
    return grad;
}

WeightedEnsemble update_weights(const WeightedEnsemble& ens, const Tensor& batch,
                                const std::vector<int>& labels, const WeightUpdateConfig& cfg) {
    if (batch.dim(0) == 0) throw std::invalid_argument("update_weights: empty batch");
    const int n = ens.size();
    std::vector<Tensor> client_logits;
    client_logits.reserve(n);
    for (auto* c : ens.clients) client_logits.push_back(c->net.forward(batch, nullptr, false));

    auto grad = weight_gradient(client_logits, ens.weights, labels);
    const double mu = cfg.effective_step(n);
    std::vector<float> raw(ens.weights);
    for (int c = 0; c < n; ++c) {
        const double s = grad[c] > 0.0 ? 1.0 : (grad[c] < 0.0 ? -1.0 : 0.0);
        raw[c] = static_cast<float>(raw[c] - mu * s);
    }
    WeightedEnsemble out = ens;
    out.weights = normalize_weights(raw);
    return out;
}

}  // namespace coboost
