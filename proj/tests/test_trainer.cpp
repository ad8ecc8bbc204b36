#include "doctest.h"

#include <cmath>

#include "coboost/fl/local_trainer.hpp"

using namespace coboost;

namespace {

const DatasetHandle& blobs() {
    static DatasetHandle handle = load_dataset("synthetic_blobs", "");
    return handle;
}

}  // namespace

TEST_CASE("training on a single-class shard yields accuracy 1.0 on that shard") {
    const auto& h = blobs();
    ClientShard shard;
    shard.client_id = 0;
    for (int i = 0; i < h.train_size() && shard.indices.size() < 80; ++i)
        if (h.train_labels[i] == 4) shard.indices.push_back(i);
    shard.class_histogram.assign(h.num_classes, 0);
    shard.class_histogram[4] = shard.size();

    ClientModel m = build_model({"mlp_tiny", 10, h.sample_shape}, 1);
    LocalTrainConfig cfg;
    cfg.epochs = 10;
    cfg.seed = 2;
    train_client(m, shard, h, cfg);
    CHECK(m.frozen);
    CHECK(m.metadata["final_train_acc"] == doctest::Approx(1.0));
}

TEST_CASE("blobs with 4 clients at Dir(0.3): every client fits its shard well") {
    const auto& h = blobs();
    PartitionSpec pspec;
    pspec.scheme = PartitionScheme::dirichlet;
    pspec.alpha = 0.3;
    pspec.num_clients = 4;
    pspec.seed = 17;
    auto shards = partition(h, pspec);

    LocalTrainConfig cfg;
    cfg.epochs = 30;
    for (int k = 0; k < 4; ++k) {
        ClientModel m = build_model({"mlp_tiny", 10, h.sample_shape}, 50 + k);
        m.client_id = k;
        cfg.seed = 70 + k;
        train_client(m, shards[k], h, cfg);
        CHECK_MESSAGE(m.metadata["final_train_acc"] > 0.9, "client ", k, " acc ",
                      m.metadata["final_train_acc"]);
    }
}

TEST_CASE("train_client determinism: identical inputs, identical checksum") {
    const auto& h = blobs();
    PartitionSpec pspec;
    pspec.scheme = PartitionScheme::dirichlet;
    pspec.alpha = 1.0;
    pspec.num_clients = 3;
    pspec.seed = 5;
    auto shards = partition(h, pspec);
    LocalTrainConfig cfg;
    cfg.epochs = 5;
    cfg.seed = 9;

    auto run_once = [&]() {
        ClientModel m = build_model({"cnn2", 10, h.sample_shape}, 11);
        train_client(m, shards[0], h, cfg);
        return m.state_checksum();
    };
    CHECK(run_once() == run_once());
}

TEST_CASE("frozen model rejects further training; empty shard rejected") {
    const auto& h = blobs();
    ClientShard shard;
    shard.indices = {0, 1, 2, 3};
    shard.class_histogram.assign(h.num_classes, 0);
    for (int i : shard.indices) shard.class_histogram[h.train_labels[i]] += 1;

    ClientModel m = build_model({"mlp_tiny", 10, h.sample_shape}, 1);
    LocalTrainConfig cfg;
    cfg.epochs = 1;
    train_client(m, shard, h, cfg);
    CHECK(m.frozen);
    CHECK_THROWS_AS(train_client(m, shard, h, cfg), std::logic_error);

    ClientModel fresh = build_model({"mlp_tiny", 10, h.sample_shape}, 2);
    ClientShard empty;
    CHECK_THROWS_AS(train_client(fresh, empty, h, cfg), std::invalid_argument);
}

TEST_CASE("training reads only its own shard (poisoned out-of-shard data)") {
    // every sample outside the shard is NaN; touching any of them would drive
    // the parameters non-finite
    DatasetHandle h = blobs();
    ClientShard shard;
    shard.indices = {3, 10, 25, 40, 77, 102, 555, 1200};
    shard.class_histogram.assign(h.num_classes, 0);
    for (int i : shard.indices) shard.class_histogram[h.train_labels[i]] += 1;

    const int64_t row = h.train_samples.numel() / h.train_size();
    std::vector<bool> keep(h.train_size(), false);
    for (int i : shard.indices) keep[i] = true;
    for (int i = 0; i < h.train_size(); ++i)
        if (!keep[i])
            for (int64_t j = 0; j < row; ++j)
                h.train_samples.data[i * row + j] = std::nanf("");

    ClientModel m = build_model({"mlp_tiny", 10, h.sample_shape}, 6);
    LocalTrainConfig cfg;
    cfg.epochs = 8;
    cfg.seed = 3;
    train_client(m, shard, h, cfg);
    for (Tensor* p : m.net.params())
        for (float v : p->data) CHECK(std::isfinite(v));
    CHECK(m.metadata["final_train_acc"] >= 0.0);
}

TEST_CASE("training curve callback fires once per epoch") {
    const auto& h = blobs();
    ClientShard shard;
    shard.indices = {0, 1, 2, 3, 4, 5, 6, 7};
    shard.class_histogram.assign(h.num_classes, 0);
    for (int i : shard.indices) shard.class_histogram[h.train_labels[i]] += 1;
    ClientModel m = build_model({"mlp_tiny", 10, h.sample_shape}, 8);
    LocalTrainConfig cfg;
    cfg.epochs = 7;
    int calls = 0;
    double last_loss = 1e9;
    train_client(m, shard, h, cfg, [&](int epoch, double loss, double acc) {
        CHECK(epoch == calls);
        CHECK(acc >= 0.0);
        CHECK(acc <= 1.0);
        last_loss = loss;
        ++calls;
    });
    CHECK(calls == 7);
    CHECK(last_loss < 1e9);
}

TEST_CASE("evaluate: perfect and constant predictors") {
    const auto& h = blobs();
    // constant predictor on a balanced 10-class set sits near 0.1
    ClientModel constant = build_model({"mlp_tiny", 10, h.sample_shape}, 3);
    for (Tensor* p : constant.net.params()) std::fill(p->data.begin(), p->data.end(), 0.0f);
    auto biases = constant.net.layer(3).params();  // final dense bias
    biases[1]->data[2] = 5.0f;                     // always predicts class 2
    const double acc = evaluate(constant, h.test_samples, h.test_labels);
    CHECK(acc == doctest::Approx(0.1).epsilon(0.05));

    CHECK_THROWS_AS(evaluate(constant, h.test_samples, {}), std::invalid_argument);
}
