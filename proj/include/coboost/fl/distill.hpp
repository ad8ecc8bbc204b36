#pragma once

#include "coboost/fl/ensemble.hpp"
#include "coboost/nn/optim.hpp"
#include "coboost/rng.hpp"

namespace coboost {

struct DistillConfig {
    float server_lr = 0.01f;
    float momentum = 0.9f;
    float kd_temperature = 4.0f;
    int batch_size = 128;
    int epochs = 500;
    uint64_t seed = 0;
};

// Temperature-softened KL(teacher || student), batch mean, scaled by tau^2.
double kd_loss(const Tensor& teacher_logits, const Tensor& student_logits, float tau);

// d(kd_loss)/d(student_logits).
Tensor kd_loss_grad(const Tensor& teacher_logits, const Tensor& student_logits, float tau);

// One shuffled full pass over the (already diversified) samples: teacher
// logits come from the ensemble with its current weights and are detached;
// the server takes SGD-with-momentum steps on kd_loss. Returns the mean
// kd_loss over the epoch. The optimizer carries momentum across epochs.
double distill_epoch(ClientModel& server, const WeightedEnsemble& ens, const Tensor& samples,
                     const DistillConfig& cfg, SGD& opt, Rng& rng);

}  // namespace coboost
