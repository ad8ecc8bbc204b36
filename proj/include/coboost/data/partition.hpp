#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coboost/data/dataset.hpp"

namespace coboost {

enum class PartitionScheme { dirichlet, class_count, lognormal_amount };

PartitionScheme partition_scheme_from_string(const std::string& s);
std::string to_string(PartitionScheme s);

struct PartitionSpec {
    PartitionScheme scheme = PartitionScheme::dirichlet;
    double alpha = 0.1;           // dirichlet
    int classes_per_client = 2;   // class_count
    double sigma = 1.0;           // lognormal_amount
    int num_clients = 2;
    uint64_t seed = 0;
};

struct ClientShard {
    int client_id = 0;
    std::vector<int> indices;          // train-example indices, sorted
    std::vector<int64_t> class_histogram;

    int64_t size() const { return static_cast<int64_t>(indices.size()); }
};

std::vector<ClientShard> partition_dirichlet(const DatasetHandle& handle, const PartitionSpec& spec);
std::vector<ClientShard> partition_class_count(const DatasetHandle& handle, const PartitionSpec& spec);
std::vector<ClientShard> partition_lognormal(const DatasetHandle& handle, const PartitionSpec& spec);

// Dispatch on spec.scheme.
std::vector<ClientShard> partition(const DatasetHandle& handle, const PartitionSpec& spec);

// Exact integer split of `total` proportional to `proportions` (largest
// remainder). Result sums to total.
std::vector<int64_t> largest_remainder_alloc(const std::vector<double>& proportions, int64_t total);

// JSON round-trip of a partition result for exact replay.
std::string partition_to_json(const PartitionSpec& spec, const std::vector<ClientShard>& shards);
std::vector<ClientShard> partition_from_json(const std::string& text, PartitionSpec* spec_out = nullptr);

}  // namespace coboost
