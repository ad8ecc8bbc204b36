#pragma once

#include <optional>
#include <string>
#include <vector>

#include "coboost/fl/distill.hpp"
#include "coboost/fl/local_trainer.hpp"
#include "coboost/fl/synthesis.hpp"
#include "coboost/io/report.hpp"

namespace coboost {

enum class Method { co_boosting, fedavg, fedens, plain_distill };

Method method_from_string(const std::string& s);
std::string to_string(Method m);

struct Toggles {
    bool GHS = true;  // hard-sample generator loss (off: plain CE generation)
    bool DHS = true;  // on-the-fly diversification of the store
    bool EE = true;   // ensemble weight enhancement
};

struct ExperimentConfig {
    std::string dataset = "synthetic_blobs";
    std::string data_root = "data";
    PartitionSpec partition;
    std::vector<ModelSpec> client_specs;  // one entry broadcasts to all clients
    ModelSpec server_spec;
    LocalTrainConfig local;
    SynthesisConfig synth;
    DistillConfig distill;
    WeightUpdateConfig weight_update;
    Toggles toggles;
    Method method = Method::co_boosting;
    std::vector<uint64_t> seeds{0};
    std::string output_dir = "runs/out";
    int grid_every = 0;          // dump a sample grid every N epochs (0 = off)
    size_t store_capacity = 0;   // 0 = unbounded
};

ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);
void apply_override(std::string& json_text, const std::string& key_eq_value);

struct EpochRecord {
    int epoch = 0;
    double gen_loss = 0.0;
    double kd_loss = 0.0;
    double server_test_acc = 0.0;
    double ensemble_test_acc = 0.0;
    std::vector<double> weights;
};

struct RunResult {
    std::string run_id;
    Method method = Method::co_boosting;
    uint64_t seed = 0;
    std::vector<EpochRecord> records;
    double final_server_acc = 0.0;
    double final_ensemble_acc = 0.0;
    std::vector<std::vector<double>> weight_trajectory;
    double wall_clock_sec = 0.0;

    RunSeries to_series() const;
};

// Frozen locally-trained clients plus the data they came from; shareable
// across methods within one seed for paired comparisons.
struct ClientPool {
    DatasetHandle handle;
    std::vector<ClientShard> shards;
    std::vector<ClientModel> clients;
    uint64_t seed = 0;
};

// Deterministic function of (cfg, seed): partition, build, locally train and
// freeze every client. Clients with distinct ids train in parallel threads.
ClientPool prepare_clients(const ExperimentConfig& cfg, uint64_t seed);

RunResult run_co_boosting(const ExperimentConfig& cfg, uint64_t seed);
RunResult run_co_boosting(const ExperimentConfig& cfg, ClientPool& pool);
RunResult run_fedavg(const ExperimentConfig& cfg, uint64_t seed);
RunResult run_fedavg(const ExperimentConfig& cfg, ClientPool& pool);
RunResult run_fedens(const ExperimentConfig& cfg, uint64_t seed);
RunResult run_fedens(const ExperimentConfig& cfg, ClientPool& pool);

RunResult run_method(const ExperimentConfig& cfg, uint64_t seed);
RunResult run_method(const ExperimentConfig& cfg, ClientPool& pool);

// Runs every (config, seed) pair, sharing pre-trained clients across configs
// that agree on data/partition/local settings. Partial failures are recorded
// and surface as missing table cells.
struct SweepOutcome {
    std::vector<RunResult> results;
    std::vector<std::string> failures;  // "run_id: error"
    std::string table;
};
SweepOutcome sweep(const std::vector<ExperimentConfig>& configs);

}  // namespace coboost
