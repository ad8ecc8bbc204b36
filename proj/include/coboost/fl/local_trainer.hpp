#pragma once

#include <functional>

#include "coboost/data/partition.hpp"
#include "coboost/fl/ensemble.hpp"
#include "coboost/model/zoo.hpp"

namespace coboost {

struct LocalTrainConfig {
    int epochs = 300;
    int batch_size = 128;
    float lr = 0.01f;
    float momentum = 0.9f;
    uint64_t seed = 0;
};

// Curve callback: (epoch, mean loss, train accuracy).
using TrainCurveFn = std::function<void(int, double, double)>;

// Mini-batch SGD with cross-entropy on the client's own shard, then freeze.
// The model must not already be frozen; the shard must be nonempty. Records
// final_train_acc in metadata. Only the shard's indices are ever read.
ClientModel& train_client(ClientModel& model, const ClientShard& shard, const DatasetHandle& handle,
                          const LocalTrainConfig& cfg, const TrainCurveFn& curve = nullptr);

// Top-1 accuracy over the given test set.
double evaluate(ClientModel& model, const Tensor& samples, const std::vector<int>& labels);
double evaluate(const WeightedEnsemble& ens, const Tensor& samples, const std::vector<int>& labels);

}  // namespace coboost
