#pragma once

#include <vector>

#include "coboost/data/partition.hpp"
#include "coboost/model/zoo.hpp"

namespace coboost {

// Weighted logit ensemble over frozen client models. Weights live on the
// simplex: every entry in [0,1], summing to 1. Updates return a new ensemble;
// the client models are shared and never mutated.
struct WeightedEnsemble {
    std::vector<ClientModel*> clients;
    std::vector<float> weights;

    int size() const { return static_cast<int>(clients.size()); }
    int num_classes() const { return clients.empty() ? 0 : clients.front()->spec.num_classes; }
};

struct WeightUpdateConfig {
    double step_size = 0.0;  // <= 0 means the 0.1/n default
    int batch_size = 128;
    bool full_store = false;  // consume the whole store instead of one mini-batch

    double effective_step(int n) const { return step_size > 0.0 ? step_size : 0.1 / n; }
};

WeightedEnsemble make_ensemble(std::vector<ClientModel>& clients, std::vector<float> weights);

std::vector<float> uniform_weights(int n);
std::vector<float> data_amount_weights(const std::vector<ClientShard>& shards);

// Clamp each entry into [0,1] then rescale to sum 1; all-zero clamps fall
// back to uniform. Throws on non-finite input.
std::vector<float> normalize_weights(const std::vector<float>& raw);

Tensor ensemble_logits(const WeightedEnsemble& ens, const Tensor& batch);

// Forward pass that also keeps per-client traces so input gradients can be
// pushed back through every member.
struct EnsembleTrace {
    std::vector<LayerCtx> client_ctx;
    std::vector<Tensor> client_logits;
};
Tensor ensemble_forward(const WeightedEnsemble& ens, const Tensor& batch, EnsembleTrace* trace);

// dL/d(batch) given dL/d(ensemble logits); touches no client parameters.
Tensor ensemble_backward_input(const WeightedEnsemble& ens, const Tensor& grad_logits,
                               const EnsembleTrace& trace);

// Per-sample difficulty 1 - softmax(logits)[label], in [0,1].
std::vector<double> sample_difficulty(const Tensor& logits, const std::vector<int>& labels);
std::vector<double> sample_difficulty(const WeightedEnsemble& ens, const Tensor& batch,
                                      const std::vector<int>& labels);

// Gradient of mean CE(sum_k w_k logits_k, labels) with respect to w,
// computed in double precision from the fixed per-client logits.
std::vector<double> weight_gradient(const std::vector<Tensor>& client_logits,
                                    const std::vector<float>& weights,
                                    const std::vector<int>& labels);

// One signed-gradient step of size mu followed by normalization. sign(0)=0.
WeightedEnsemble update_weights(const WeightedEnsemble& ens, const Tensor& batch,
                                const std::vector<int>& labels, const WeightUpdateConfig& cfg);

}  // namespace coboost
