#include "coboost/data/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coboost/rng.hpp"
#include "json.hpp"

namespace coboost {

using nlohmann::json;

PartitionScheme partition_scheme_from_string(const std::string& s) {
    if (s == "dirichlet") return PartitionScheme::dirichlet;
    if (s == "class_count") return PartitionScheme::class_count;
    if (s == "lognormal_amount") return PartitionScheme::lognormal_amount;
    throw std::invalid_argument("unknown partition scheme '" + s + "'");
}

std::string to_string(PartitionScheme s) {
    switch (s) {
        case PartitionScheme::dirichlet: return "dirichlet";
        case PartitionScheme::class_count: return "class_count";
        case PartitionScheme::lognormal_amount: return "lognormal_amount";
    }
    return "?";
}

std::vector<int64_t> largest_remainder_alloc(const std::vector<double>& proportions, int64_t total) {
    const size_t n = proportions.size();
    double sum = std::accumulate(proportions.begin(), proportions.end(), 0.0);
    if (sum <= 0.0) throw std::invalid_argument("largest_remainder_alloc: non-positive proportions");
    std::vector<int64_t> counts(n);
    std::vector<std::pair<double, size_t>> rema(n);
    int64_t assigned = 0;
    for (size_t i = 0; i < n; ++i) {
        const double exact = proportions[i] / sum * static_cast<double>(total);
        counts[i] = static_cast<int64_t>(std::floor(exact));
        assigned += counts[i];
        rema[i] = {exact - std::floor(exact), i};
    }
    // hand out the leftover units by descending fractional remainder,
    // index order breaking ties for determinism
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (int64_t r = total - assigned, i = 0; r > 0; --r, ++i) counts[rema[i % n].second] += 1;
    return counts;
}

namespace {

constexpr int kEmptyShardRetries = 100;

void validate_common(const DatasetHandle& handle, const PartitionSpec& spec) {
    if (spec.num_clients < 1) throw std::invalid_argument("partition: num_clients must be >= 1");
    if (handle.train_size() == 0) throw std::invalid_argument("partition: empty train set");
}

std::vector<std::vector<int>> indices_by_class(const DatasetHandle& handle) {
    std::vector<std::vector<int>> by_class(handle.num_classes);
    for (int i = 0; i < handle.train_size(); ++i) by_class[handle.train_labels[i]].push_back(i);
    return by_class;
}

std::vector<ClientShard> finish_shards(const DatasetHandle& handle,
                                       std::vector<std::vector<int>> assigned) {
    std::vector<ClientShard> shards(assigned.size());
    for (size_t k = 0; k < assigned.size(); ++k) {
        std::sort(assigned[k].begin(), assigned[k].end());
        shards[k].client_id = static_cast<int>(k);
        shards[k].class_histogram.assign(handle.num_classes, 0);
        for (int idx : assigned[k]) shards[k].class_histogram[handle.train_labels[idx]] += 1;
        shards[k].indices = std::move(assigned[k]);
    }
    return shards;
}

bool any_empty(const std::vector<std::vector<int>>& assigned) {
    for (const auto& a : assigned)
        if (a.empty()) return true;
    return false;
}

}  // namespace

std::vector<ClientShard> partition_dirichlet(const DatasetHandle& handle, const PartitionSpec& spec) {
    validate_common(handle, spec);
    if (spec.alpha <= 0.0) throw std::invalid_argument("partition_dirichlet: alpha must be > 0");
    const int n = spec.num_clients;
    auto by_class = indices_by_class(handle);
    Rng rng(spec.seed);

    for (int attempt = 0; attempt < kEmptyShardRetries; ++attempt) {
        std::vector<std::vector<int>> assigned(n);
        for (int cls = 0; cls < handle.num_classes; ++cls) {
            const auto& pool = by_class[cls];
            if (pool.empty()) continue;
            auto p = rng.dirichlet(spec.alpha, n);
            auto counts = largest_remainder_alloc(p, static_cast<int64_t>(pool.size()));
            int64_t off = 0;
            for (int k = 0; k < n; ++k) {
                assigned[k].insert(assigned[k].end(), pool.begin() + off, pool.begin() + off + counts[k]);
                off += counts[k];
            }
        }
        if (!any_empty(assigned) || n == 1) return finish_shards(handle, std::move(assigned));
    }
    throw std::runtime_error(
        "partition_dirichlet: retry budget exhausted, alpha=" + std::to_string(spec.alpha) +
        " is too small for " + std::to_string(n) + " clients on this dataset");
}

std::vector<ClientShard> partition_class_count(const DatasetHandle& handle, const PartitionSpec& spec) {
    validate_common(handle, spec);
    const int n = spec.num_clients, c = spec.classes_per_client, num_cls = handle.num_classes;
    if (c < 1 || c > num_cls)
        throw std::invalid_argument("partition_class_count: classes_per_client=" + std::to_string(c) +
                                    " infeasible for " + std::to_string(num_cls) + " classes");
    if (static_cast<int64_t>(n) * c < num_cls)
        throw std::invalid_argument("partition_class_count: n*C < num_classes, some class would be lost");

    Rng rng(spec.seed);
    std::vector<int> class_order(num_cls);
    std::iota(class_order.begin(), class_order.end(), 0);
    rng.shuffle(class_order);

    // round-robin over the shuffled class list: client k takes positions
    // k*C .. k*C+C-1 (mod num_classes)
    std::vector<std::vector<int>> holders(num_cls);  // class -> clients holding it
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < c; ++j) {
            const int cls = class_order[(static_cast<int64_t>(k) * c + j) % num_cls];
            holders[cls].push_back(k);
        }

    auto by_class = indices_by_class(handle);
    std::vector<std::vector<int>> assigned(n);
    for (int cls = 0; cls < num_cls; ++cls) {
        const auto& pool = by_class[cls];
        const auto& who = holders[cls];
        if (pool.empty() || who.empty()) continue;
        std::vector<double> equal(who.size(), 1.0);
        auto counts = largest_remainder_alloc(equal, static_cast<int64_t>(pool.size()));
        int64_t off = 0;
        for (size_t j = 0; j < who.size(); ++j) {
            assigned[who[j]].insert(assigned[who[j]].end(), pool.begin() + off,
                                    pool.begin() + off + counts[j]);
            off += counts[j];
        }
    }
    return finish_shards(handle, std::move(assigned));
}

std::vector<ClientShard> partition_lognormal(const DatasetHandle& handle, const PartitionSpec& spec) {
    validate_common(handle, spec);
    if (spec.sigma <= 0.0) throw std::invalid_argument("partition_lognormal: sigma must be > 0");
    const int n = spec.num_clients;
    const int64_t total = handle.train_size();
    Rng rng(spec.seed);

    for (int attempt = 0; attempt < kEmptyShardRetries; ++attempt) {
        // client sizes exactly proportional to LogNormal(0, sigma^2) draws
        std::vector<double> amounts(n);
        for (auto& a : amounts) a = std::exp(spec.sigma * rng.normal());
        auto sizes = largest_remainder_alloc(amounts, total);
        if (std::any_of(sizes.begin(), sizes.end(), [](int64_t s) { return s == 0; }) && n > 1)
            continue;

        // per-client label mix per Dir(0.1), met greedily from class pools
        auto by_class = indices_by_class(handle);
        std::vector<int64_t> pool_off(handle.num_classes, 0);
        std::vector<std::vector<int>> assigned(n);
        std::vector<int64_t> deficit(n, 0);
        for (int k = 0; k < n; ++k) {
            auto mix = rng.dirichlet(0.1, handle.num_classes);
            auto want = largest_remainder_alloc(mix, sizes[k]);
            for (int cls = 0; cls < handle.num_classes; ++cls) {
                const int64_t avail = static_cast<int64_t>(by_class[cls].size()) - pool_off[cls];
                const int64_t take = std::min(want[cls], avail);
                auto& pool = by_class[cls];
                assigned[k].insert(assigned[k].end(), pool.begin() + pool_off[cls],
                                   pool.begin() + pool_off[cls] + take);
                pool_off[cls] += take;
                deficit[k] += want[cls] - take;
            }
        }
        // drain remaining stock into clients that fell short of their size
        int cls = 0;
        for (int k = 0; k < n; ++k) {
            while (deficit[k] > 0) {
                while (cls < handle.num_classes &&
                       pool_off[cls] >= static_cast<int64_t>(by_class[cls].size()))
                    ++cls;
                if (cls >= handle.num_classes)
                    throw std::logic_error("partition_lognormal: ran out of samples");
                assigned[k].push_back(by_class[cls][pool_off[cls]++]);
                --deficit[k];
            }
        }
        if (!any_empty(assigned) || n == 1) return finish_shards(handle, std::move(assigned));
    }
    throw std::runtime_error("partition_lognormal: retry budget exhausted for sigma=" +
                             std::to_string(spec.sigma));
}

std::vector<ClientShard> partition(const DatasetHandle& handle, const PartitionSpec& spec) {
    switch (spec.scheme) {
        case PartitionScheme::dirichlet: return partition_dirichlet(handle, spec);
        case PartitionScheme::class_count: return partition_class_count(handle, spec);
        case PartitionScheme::lognormal_amount: return partition_lognormal(handle, spec);
    }
    throw std::invalid_argument("partition: bad scheme");
}

std::string partition_to_json(const PartitionSpec& spec, const std::vector<ClientShard>& shards) {
    json j;
    j["scheme"] = to_string(spec.scheme);
    json params;
    switch (spec.scheme) {
        case PartitionScheme::dirichlet: params["alpha"] = spec.alpha; break;
        case PartitionScheme::class_count: params["classes_per_client"] = spec.classes_per_client; break;
        case PartitionScheme::lognormal_amount: params["sigma"] = spec.sigma; break;
    }
    params["num_clients"] = spec.num_clients;
    j["params"] = params;
    j["seed"] = spec.seed;
    j["shards"] = json::array();
    for (const auto& s : shards) j["shards"].push_back({{"client_id", s.client_id}, {"indices", s.indices}});
    return j.dump();
}

std::vector<ClientShard> partition_from_json(const std::string& text, PartitionSpec* spec_out) {
    json j = json::parse(text);
    if (spec_out) {
        spec_out->scheme = partition_scheme_from_string(j.at("scheme").get<std::string>());
        const auto& params = j.at("params");
        if (params.contains("alpha")) spec_out->alpha = params["alpha"].get<double>();
        if (params.contains("classes_per_client"))
            spec_out->classes_per_client = params["classes_per_client"].get<int>();
        if (params.contains("sigma")) spec_out->sigma = params["sigma"].get<double>();
        spec_out->num_clients = params.at("num_clients").get<int>();
        spec_out->seed = j.at("seed").get<uint64_t>();
    }
    std::vector<ClientShard> shards;
    for (const auto& s : j.at("shards")) {
        ClientShard sh;
        sh.client_id = s.at("client_id").get<int>();
        sh.indices = s.at("indices").get<std::vector<int>>();
        shards.push_back(std::move(sh));
    }
    return shards;
}

}  // namespace coboost
