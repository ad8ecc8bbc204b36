#include "doctest.h"

#include <filesystem>

#include "coboost/data/dataset.hpp"
#include "coboost/model/checkpoint.hpp"
#include "coboost/model/zoo.hpp"

using namespace coboost;

namespace {

Tensor random_batch(int b, const std::array<int, 3>& shape, uint64_t seed) {
    Rng rng(seed);
    Tensor t({b, shape[0], shape[1], shape[2]});
    for (auto& v : t.data) v = static_cast<float>(rng.normal());
    return t;
}

}  // namespace

TEST_CASE("every known architecture builds and emits the right logit shape") {
    for (const auto& arch : known_architectures()) {
        ModelSpec spec{arch, 10, {1, 8, 8}};
        if (arch == "lenet5") spec.input_shape = {1, 28, 28};  // needs larger canvases
        ClientModel m = build_model(spec, 123);
        Tensor x = random_batch(4, spec.input_shape, 9);
        Tensor logits = forward_logits(m, x);
        CHECK(logits.shape == std::vector<int>{4, 10});
    }
}

TEST_CASE("build_model is deterministic in the seed") {
    ModelSpec spec{"cnn2", 10, {1, 8, 8}};
    ClientModel a = build_model(spec, 42);
    ClientModel b = build_model(spec, 42);
    ClientModel c = build_model(spec, 43);
    CHECK(a.state_checksum() == b.state_checksum());
    CHECK(a.state_checksum() != c.state_checksum());
}

TEST_CASE("build_model rejects unknown arch and bad spec") {
    CHECK_THROWS_AS(build_model({"vgg_huge", 10, {1, 8, 8}}, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_model({"mlp_tiny", 0, {1, 8, 8}}, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_model({"lenet5", 10, {1, 8, 8}}, 1), std::invalid_argument);
}

TEST_CASE("forward_logits is deterministic and shape-checked") {
    ModelSpec spec{"mlp_tiny", 10, {1, 8, 8}};
    ClientModel m = build_model(spec, 7);
    Tensor x = random_batch(6, spec.input_shape, 5);
    Tensor l1 = forward_logits(m, x);
    Tensor l2 = forward_logits(m, x);
    CHECK(l1.data == l2.data);
    Tensor bad = random_batch(2, {1, 4, 4}, 5);
    CHECK_THROWS_AS(forward_logits(m, bad), std::invalid_argument);
}

TEST_CASE("lenet5 forward on 28x28 grayscale") {
    ModelSpec spec{"lenet5", 10, {1, 28, 28}};
    ClientModel m = build_model(spec, 3);
    Tensor x = random_batch(4, spec.input_shape, 1);
    CHECK(forward_logits(m, x).shape == std::vector<int>{4, 10});
}

TEST_CASE("generator: conditioning, shape, determinism") {
    auto handle = load_dataset("synthetic_blobs", "");
    GeneratorModel gen = build_generator(32, 10, handle.sample_shape, 99, handle.channel_lo(),
                                          handle.channel_hi());
    Rng rng(4);
    Tensor z({5, 32});
    for (auto& v : z.data) v = static_cast<float>(rng.normal());
    std::vector<int> ys{0, 3, 3, 9, 1};
    Tensor x1 = gen.forward(z, ys);
    CHECK(x1.shape == std::vector<int>{5, 1, 8, 8});
    Tensor x2 = gen.forward(z, ys);
    CHECK(x1.data == x2.data);  // same (z, label, parameters) twice

    // outputs bounded to the normalized sample range
    const float lo = handle.channel_lo()[0], hi = handle.channel_hi()[0];
    for (float v : x1.data) {
        CHECK(v >= lo - 1e-5f);
        CHECK(v <= hi + 1e-5f);
    }

    // label conditioning: same noise, different label, different sample
    std::vector<int> ys2{1, 3, 3, 9, 1};
    Tensor x3 = gen.forward(z, ys2);
    double diff = 0.0;
    for (int j = 0; j < 64; ++j) diff += std::abs(x3.data[j] - x1.data[j]);
    CHECK(diff > 1e-4);
}

TEST_CASE("generator builds for 28x28 and 32x32 canvases") {
    CHECK_NOTHROW(build_generator(100, 10, {1, 28, 28}, 1));
    CHECK_NOTHROW(build_generator(100, 100, {3, 32, 32}, 1));
    CHECK_THROWS_AS(build_generator(100, 10, {1, 9, 9}, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_generator(0, 10, {1, 8, 8}, 1), std::invalid_argument);
}

TEST_CASE("checkpoint round-trip preserves state, loader verifies spec") {
    namespace fs = std::filesystem;
    const std::string dir = (fs::temp_directory_path() / "coboost_ckpt_test").string();
    fs::create_directories(dir);
    const std::string path = dir + "/model.ckpt";

    ModelSpec spec{"cnn2", 10, {1, 8, 8}};
    ClientModel m = build_model(spec, 5);
    m.client_id = 3;
    m.metadata["final_train_acc"] = 0.93;
    m.frozen = true;
    const uint64_t sum = m.state_checksum();
    save_checkpoint(m, 5, path);

    ClientModel restored = load_checkpoint(path);
    CHECK(restored.state_checksum() == sum);
    CHECK(restored.client_id == 3);
    CHECK(restored.frozen);
    CHECK(restored.metadata["final_train_acc"] == doctest::Approx(0.93));

    // incompatible spec must be rejected before any restore
    ClientModel other = build_model({"mlp_tiny", 10, {1, 8, 8}}, 5);
    CHECK_THROWS_AS(restore_checkpoint(other, path), std::runtime_error);

    ClientModel same_arch = build_model(spec, 999);
    CHECK(same_arch.state_checksum() != sum);
    restore_checkpoint(same_arch, path);
    CHECK(same_arch.state_checksum() == sum);
    fs::remove_all(dir);
}
