#pragma once

#include <string>

#include "coboost/fl/ensemble.hpp"
#include "coboost/rng.hpp"

namespace coboost {

struct SynthesisConfig {
    float generator_lr = 1e-3f;
    int generator_iters = 30;  // inner optimization steps per epoch
    float beta = 1.0f;         // weight of the ensemble/server divergence term
    float epsilon = 8.0f / 255.0f;
    int batch_size = 128;
    float gen_kl_temperature = 1.0f;
    int noise_dim = 100;
    uint64_t seed = 0;
};

struct SyntheticBatch {
    Tensor samples;           // {b,c,h,w}
    std::vector<int> labels;  // generation labels, uniform over classes
    Tensor noises;            // {b,noise_dim}
};

// Growing synthetic dataset. Append-only within a run; a nonzero capacity
// evicts oldest entries first.
class SyntheticStore {
public:
    explicit SyntheticStore(size_t capacity = 0) : capacity_(capacity) {}

    void append(const SyntheticBatch& batch);
    int64_t size() const { return static_cast<int64_t>(labels_.size()); }
    bool empty() const { return labels_.empty(); }

    const Tensor& samples() const { return samples_; }
    const std::vector<int>& labels() const { return labels_; }
    uint64_t fingerprint() const;

private:
    size_t capacity_;
    Tensor samples_;
    std::vector<int> labels_;
};

// Mean difficulty-weighted cross-entropy of ensemble logits against the
// generation labels; the difficulty factor carries no gradient.
double hard_sample_loss(const SyntheticBatch& batch, const WeightedEnsemble& ens);

// Negative mean KL(ensemble || server) at the given softmax temperature;
// minimizing it drives ensemble and server predictions apart.
double adversarial_divergence_loss(const SyntheticBatch& batch, const WeightedEnsemble& ens,
                                   ClientModel& server, float temperature);

enum class GeneratorObjective {
    hard_adversarial,  // difficulty-weighted CE plus beta * divergence term
    plain_ce,          // plain CE of ensemble logits against labels
};

struct GeneratorStepResult {
    SyntheticBatch batch;
    std::vector<double> losses;  // one entry per inner iteration
};

// Samples one (noise, label) batch, holds it fixed, runs generator_iters Adam
// steps on the generator, and returns the last generated batch. With
// generator_iters == 0 the generator is untouched and the batch is the raw
// initial generation. Throws on non-finite loss.
GeneratorStepResult generator_step(GeneratorModel& gen, const WeightedEnsemble& ens,
                                   ClientModel& server, const SynthesisConfig& cfg, Rng& rng,
                                   GeneratorObjective objective);

// One-step input-space perturbation: x + eps * g / ||g||_2 with g the input
// gradient of u . ensemble_logits(x), u fresh per sample from Unif[-1,1]^K.
// Zero-gradient samples are returned unchanged.
Tensor diversify(const Tensor& samples, const WeightedEnsemble& ens, float epsilon, Rng& rng);

// Class-by-column grid of the most recent store samples, written as a
// lossless PGM/PPM image. mean/std de-normalize pixels for display.
std::string dump_sample_grid(const SyntheticStore& store, int epoch, const std::string& dir,
                             int rows, int num_classes, const std::vector<float>& norm_mean,
                             const std::vector<float>& norm_std);

}  // namespace coboost
