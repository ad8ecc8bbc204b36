#include "doctest.h"

#include <numeric>
#include <set>

#include "coboost/data/partition.hpp"
#include "coboost/rng.hpp"

using namespace coboost;

namespace {

const DatasetHandle& blobs() {
    static DatasetHandle handle = load_dataset("synthetic_blobs", "");
    return handle;
}

void check_disjoint_cover(const DatasetHandle& handle, const std::vector<ClientShard>& shards) {
    std::set<int> seen;
    int64_t total = 0;
    for (const auto& s : shards) {
        for (int idx : s.indices) {
            CHECK(idx >= 0);
            CHECK(idx < handle.train_size());
            CHECK(seen.insert(idx).second);  // disjointness
        }
        total += s.size();
        // histogram consistency
        std::vector<int64_t> recount(handle.num_classes, 0);
        for (int idx : s.indices) recount[handle.train_labels[idx]] += 1;
        CHECK(recount == s.class_histogram);
        int64_t hist_sum = std::accumulate(s.class_histogram.begin(), s.class_histogram.end(),
                                           static_cast<int64_t>(0));
        CHECK(hist_sum == s.size());
    }
    CHECK(total == handle.train_size());  // coverage
}

bool same_shards(const std::vector<ClientShard>& a, const std::vector<ClientShard>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i].indices != b[i].indices) return false;
    return true;
}

}  // namespace

TEST_CASE("synthetic_blobs handle shape") {
    const auto& h = blobs();
    CHECK(h.num_classes == 10);
    CHECK(h.sample_shape == std::array<int, 3>{1, 8, 8});
    CHECK(h.train_size() == 2000);
    CHECK(h.test_size() == 500);
    for (int y : h.train_labels) CHECK((y >= 0 && y < 10));
}

TEST_CASE("load_dataset rejects unknown names") {
    CHECK_THROWS_AS(load_dataset("nope", "."), std::invalid_argument);
    CHECK_THROWS_AS(load_dataset("MNIST", "/definitely/missing/root"), std::runtime_error);
}

TEST_CASE("largest remainder conserves counts") {
    auto c = largest_remainder_alloc({0.3, 0.3, 0.4}, 10);
    CHECK(std::accumulate(c.begin(), c.end(), static_cast<int64_t>(0)) == 10);
    auto c2 = largest_remainder_alloc({1.0, 1.0, 1.0}, 11);
    CHECK(std::accumulate(c2.begin(), c2.end(), static_cast<int64_t>(0)) == 11);
    int64_t mx = *std::max_element(c2.begin(), c2.end());
    int64_t mn = *std::min_element(c2.begin(), c2.end());
    CHECK(mx - mn <= 1);
}

TEST_CASE("dirichlet: single client takes everything") {
    PartitionSpec spec;
    spec.scheme = PartitionScheme::dirichlet;
    spec.alpha = 0.5;
    spec.num_clients = 1;
    spec.seed = 3;
    auto shards = partition_dirichlet(blobs(), spec);
    REQUIRE(shards.size() == 1);
    CHECK(shards[0].size() == blobs().train_size());
}

TEST_CASE("dirichlet: huge alpha approaches an even split") {
    PartitionSpec spec;
    spec.scheme = PartitionScheme::dirichlet;
    spec.alpha = 1e6;
    spec.num_clients = 2;
    spec.seed = 5;
    auto shards = partition_dirichlet(blobs(), spec);
    REQUIRE(shards.size() == 2);
    for (int cls = 0; cls < blobs().num_classes; ++cls) {
        const double a = static_cast<double>(shards[0].class_histogram[cls]);
        const double b = static_cast<double>(shards[1].class_histogram[cls]);
        CHECK(std::abs(a - b) / (a + b) < 0.02);  // per-class deviation < 2%
    }
}

TEST_CASE("dirichlet: disjoint cover at alpha=0.1") {
    PartitionSpec spec;
    spec.scheme = PartitionScheme::dirichlet;
    spec.alpha = 0.1;
    spec.num_clients = 10;
    spec.seed = 11;
    auto shards = partition_dirichlet(blobs(), spec);
    check_disjoint_cover(blobs(), shards);
}

TEST_CASE("dirichlet: retry exhaustion signals alpha too small") {
    // 60 clients on 2000 samples with a vanishing alpha: some client ends up
    // empty on every draw
    PartitionSpec spec;
    spec.scheme = PartitionScheme::dirichlet;
    spec.alpha = 1e-4;
    spec.num_clients = 60;
    spec.seed = 1;
    CHECK_THROWS_AS(partition_dirichlet(blobs(), spec), std::runtime_error);
}

TEST_CASE("class_count: degenerate C equals num_classes") {
    PartitionSpec spec;
    spec.scheme = PartitionScheme::class_count;
    spec.classes_per_client = 10;
    spec.num_clients = 4;
    spec.seed = 2;
    auto shards = partition_class_count(blobs(), spec);
    check_disjoint_cover(blobs(), shards);
    for (const auto& s : shards)
        for (int cls = 0; cls < 10; ++cls) CHECK(s.class_histogram[cls] > 0);
}

TEST_CASE("class_count: C=2 gives exactly two classes per client") {
    PartitionSpec spec;
    spec.scheme = PartitionScheme::class_count;
    spec.classes_per_client = 2;
    spec.num_clients = 10;
    spec.seed = 9;
    auto shards = partition_class_count(blobs(), spec);
    check_disjoint_cover(blobs(), shards);
    for (const auto& s : shards) {
        int nonzero = 0;
        for (auto c : s.class_histogram) nonzero += c > 0;
        CHECK(nonzero == 2);
    }
}

TEST_CASE("class_count: C=3, n=10 puts every class on exactly three clients") {
    PartitionSpec spec;
    spec.scheme = PartitionScheme::class_count;
    spec.classes_per_client = 3;
    spec.num_clients = 10;
    spec.seed = 14;
    auto shards = partition_class_count(blobs(), spec);
    // counting oracle over the round-robin assignment
    std::vector<int> holders(10, 0);
    for (const auto& s : shards)
        for (int cls = 0; cls < 10; ++cls)
            if (s.class_histogram[cls] > 0) holders[cls] += 1;
    for (int cls = 0; cls < 10; ++cls) CHECK(holders[cls] == 3);
}

TEST_CASE("class_count: infeasible C rejected") {
    PartitionSpec spec;
    spec.scheme = PartitionScheme::class_count;
    spec.classes_per_client = 11;
    spec.num_clients = 10;
    CHECK_THROWS_AS(partition_class_count(blobs(), spec), std::invalid_argument);
    spec.classes_per_client = 2;
    spec.num_clients = 4;  // 4*2 < 10 classes
    CHECK_THROWS_AS(partition_class_count(blobs(), spec), std::invalid_argument);
}

TEST_CASE("lognormal: sigma to zero gives equal sizes") {
    PartitionSpec spec;
    spec.scheme = PartitionScheme::lognormal_amount;
    spec.sigma = 1e-6;
    spec.num_clients = 4;
    spec.seed = 4;
    auto shards = partition_lognormal(blobs(), spec);
    check_disjoint_cover(blobs(), shards);
    int64_t mx = 0, mn = blobs().train_size();
    for (const auto& s : shards) {
        mx = std::max(mx, s.size());
        mn = std::min(mn, s.size());
    }
    CHECK(mx - mn <= 1);
}

TEST_CASE("lognormal: sigma=1.2 spreads sizes (Monte-Carlo over seeds)") {
    PartitionSpec spec;
    spec.scheme = PartitionScheme::lognormal_amount;
    spec.sigma = 1.2;
    spec.num_clients = 10;
    int spread = 0;
    const int trials = 40;
    for (int s = 0; s < trials; ++s) {
        spec.seed = 1000 + s;
        auto shards = partition_lognormal(blobs(), spec);
        int64_t mx = 0, mn = blobs().train_size();
        for (const auto& sh : shards) {
            mx = std::max(mx, sh.size());
            mn = std::min(mn, sh.size());
        }
        if (mn > 0 && static_cast<double>(mx) / mn > 3.0) ++spread;
    }
    CHECK(spread >= static_cast<int>(0.9 * trials));
}

TEST_CASE("lognormal: conservation for any sigma") {
    for (double sigma : {0.3, 0.8, 2.0}) {
        PartitionSpec spec;
        spec.scheme = PartitionScheme::lognormal_amount;
        spec.sigma = sigma;
        spec.num_clients = 7;
        spec.seed = 21;
        auto shards = partition_lognormal(blobs(), spec);
        check_disjoint_cover(blobs(), shards);
    }
}

TEST_CASE("partition property sweep: disjointness, coverage, determinism over 50 random specs") {
    Rng rng(0xC0DE);
    for (int trial = 0; trial < 50; ++trial) {
        PartitionSpec spec;
        const int pick = rng.uniform_int(3);
        spec.scheme = pick == 0   ? PartitionScheme::dirichlet
                      : pick == 1 ? PartitionScheme::class_count
                                  : PartitionScheme::lognormal_amount;
        spec.num_clients = 2 + rng.uniform_int(9);
        spec.alpha = std::exp(rng.uniform(std::log(0.05), std::log(10.0)));
        spec.sigma = rng.uniform(0.1, 2.0);
        const int min_c = (blobs().num_classes + spec.num_clients - 1) / spec.num_clients;
        spec.classes_per_client = min_c + rng.uniform_int(blobs().num_classes - min_c + 1);
        spec.seed = rng.next_u64();

        auto a = partition(blobs(), spec);
        check_disjoint_cover(blobs(), a);
        auto b = partition(blobs(), spec);
        CHECK(same_shards(a, b));  // determinism
    }
}

TEST_CASE("partition json replay round-trip") {
    PartitionSpec spec;
    spec.scheme = PartitionScheme::dirichlet;
    spec.alpha = 0.3;
    spec.num_clients = 5;
    spec.seed = 77;
    auto shards = partition(blobs(), spec);
    const std::string text = partition_to_json(spec, shards);
    PartitionSpec spec2;
    auto replay = partition_from_json(text, &spec2);
    CHECK(spec2.num_clients == 5);
    CHECK(spec2.alpha == doctest::Approx(0.3));
    REQUIRE(replay.size() == shards.size());
    for (size_t i = 0; i < shards.size(); ++i) CHECK(replay[i].indices == shards[i].indices);
}
