#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "coboost/fl/ensemble.hpp"
#include "coboost/nn/losses.hpp"

using namespace coboost;

namespace {

// A client whose logits are a fixed linear map of the flattened input; the
// weight matrix is written directly, giving closed-form oracles.
ClientModel linear_client(const std::vector<float>& w_rowmajor, int in_dim, int out_dim) {
    ModelSpec spec{"mlp_tiny", out_dim, {1, 1, in_dim}};
    Rng rng(0);
    ClientModel m;
    m.spec = spec;
    Network net;
    net.add(std::make_unique<Flatten>());
    auto dense = std::make_unique<Dense>(in_dim, out_dim, rng);
    *dense->params()[0] = Tensor({out_dim, in_dim}, w_rowmajor);
    *dense->params()[1] = Tensor({out_dim});
    net.add(std::move(dense));
    m.net = std::move(net);
    m.frozen = true;
    return m;
}

// Clients that ignore the input and emit fixed logits via bias terms.
ClientModel constant_client(const std::vector<float>& logits, int in_dim) {
    const int out_dim = static_cast<int>(logits.size());
    ClientModel m = linear_client(std::vector<float>(out_dim * in_dim, 0.0f), in_dim, out_dim);
    *m.net.layer(1).params()[1] = Tensor({out_dim}, logits);
    return m;
}

}  // namespace

TEST_CASE("uniform and data-amount weights") {
    CHECK(uniform_weights(4) == std::vector<float>{0.25f, 0.25f, 0.25f, 0.25f});
    std::vector<ClientShard> shards(2);
    shards[0].indices.resize(10);
    shards[1].indices.resize(30);
    CHECK(data_amount_weights(shards) == std::vector<float>{0.25f, 0.75f});
    std::vector<ClientShard> equal(4);
    for (auto& s : equal) s.indices.resize(5);
    CHECK(data_amount_weights(equal) == uniform_weights(4));
}

TEST_CASE("normalize_weights: clamp, rescale, idempotence, fallback") {
    auto w = normalize_weights({0.6f, -0.2f, 0.8f});
    CHECK(w[0] == doctest::Approx(0.428571).epsilon(1e-4));
    CHECK(w[1] == doctest::Approx(0.0));
    CHECK(w[2] == doctest::Approx(0.571429).epsilon(1e-4));

    std::vector<float> simplex{0.2f, 0.3f, 0.5f};
    auto w2 = normalize_weights(simplex);
    for (size_t i = 0; i < simplex.size(); ++i)
        CHECK(w2[i] == doctest::Approx(simplex[i]).epsilon(1e-6));

    CHECK(normalize_weights({-1.0f, -0.5f, -0.1f}) == uniform_weights(3));
    CHECK_THROWS_AS(normalize_weights({0.5f, std::nanf("")}), std::invalid_argument);
}

TEST_CASE("ensemble_logits: hand-computed combinations") {
    std::vector<ClientModel> clients;
    clients.push_back(constant_client({2.0f, 0.0f}, 4));
    clients.push_back(constant_client({0.0f, 2.0f}, 4));
    clients.push_back(constant_client({1.0f, 1.0f}, 4));
    Tensor x({1, 1, 1, 4});

    SUBCASE("three clients, hand-computed dot product") {
        auto ens = make_ensemble(clients, {0.2f, 0.3f, 0.5f});
        Tensor out = ensemble_logits(ens, x);
        CHECK(out.data[0] == doctest::Approx(0.9).epsilon(1e-6));
        CHECK(out.data[1] == doctest::Approx(1.1).epsilon(1e-6));
    }
    SUBCASE("two clients, equal weights") {
        std::vector<ClientModel> two;
        two.push_back(constant_client({1.0f, 0.0f}, 4));
        two.push_back(constant_client({0.0f, 1.0f}, 4));
        auto ens = make_ensemble(two, {0.5f, 0.5f});
        Tensor out = ensemble_logits(ens, x);
        CHECK(out.data[0] == doctest::Approx(0.5));
        CHECK(out.data[1] == doctest::Approx(0.5));
    }
    SUBCASE("identical clients with uniform weights equal one client") {
        std::vector<ClientModel> same;
        same.push_back(constant_client({0.7f, -0.3f}, 4));
        same.push_back(constant_client({0.7f, -0.3f}, 4));
        same.push_back(constant_client({0.7f, -0.3f}, 4));
        auto ens = make_ensemble(same, uniform_weights(3));
        Tensor out = ensemble_logits(ens, x);
        Tensor solo = forward_logits(same[0], x);
        CHECK(out.data[0] == doctest::Approx(solo.data[0]).epsilon(1e-6));
        CHECK(out.data[1] == doctest::Approx(solo.data[1]).epsilon(1e-6));
    }
}

TEST_CASE("sample_difficulty: closed-form checks") {
    SUBCASE("certain prediction gives zero difficulty") {
        Tensor logits({1, 3}, {50.0f, 0.0f, 0.0f});
        auto d = sample_difficulty(logits, {0});
        CHECK(d[0] == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("logits [2,0,0] at the true label") {
        Tensor logits({1, 3}, {2.0f, 0.0f, 0.0f});
        auto d = sample_difficulty(logits, {0});
        const double expect = 1.0 - std::exp(2.0) / (std::exp(2.0) + 2.0);
        CHECK(d[0] == doctest::Approx(expect).epsilon(1e-6));
        CHECK(d[0] == doctest::Approx(0.2131).epsilon(1e-3));
    }
    SUBCASE("uniform logits give 1 - 1/K for every label") {
        const int k = 7;
        Tensor logits({1, k});
        for (int y = 0; y < k; ++y) {
            auto d = sample_difficulty(logits, {y});
            CHECK(d[0] == doctest::Approx(1.0 - 1.0 / k).epsilon(1e-6));
        }
    }
    SUBCASE("difficulty lives in [0,1]") {
        Rng rng(12);
        Tensor logits({64, 5});
        std::vector<int> ys(64);
        for (auto& v : logits.data) v = static_cast<float>(5.0 * rng.normal());
        for (auto& y : ys) y = rng.uniform_int(5);
        for (double d : sample_difficulty(logits, ys)) {
            CHECK(d >= 0.0);
            CHECK(d <= 1.0);
        }
    }
}

TEST_CASE("weight_gradient matches central finite differences") {
    Rng rng(31);
    for (int trial = 0; trial < 8; ++trial) {
        const int n = 2 + rng.uniform_int(4), b = 6, k = 3 + rng.uniform_int(4);
        std::vector<Tensor> logits;
        for (int c = 0; c < n; ++c) {
            Tensor t({b, k});
            for (auto& v : t.data) v = static_cast<float>(2.0 * rng.normal());
            logits.push_back(std::move(t));
        }
        std::vector<int> ys(b);
        for (auto& y : ys) y = rng.uniform_int(k);
        std::vector<float> w(n);
        {
            double s = 0.0;
            for (auto& v : w) {
                v = static_cast<float>(rng.uniform(0.05, 1.0));
                s += v;
            }
            for (auto& v : w) v = static_cast<float>(v / s);
        }
        auto grad = weight_gradient(logits, w, ys);

        // oracle entirely in double: mean CE of the w-combined logits
        auto loss_at = [&](const std::vector<double>& wv) {
            double loss = 0.0;
            for (int i = 0; i < b; ++i) {
                std::vector<double> row(k, 0.0);
                for (int c = 0; c < n; ++c)
                    for (int j = 0; j < k; ++j)
                        row[j] += wv[c] * static_cast<double>(logits[c].data[i * k + j]);
                const double mx = *std::max_element(row.begin(), row.end());
                double sum = 0.0;
                for (int j = 0; j < k; ++j) sum += std::exp(row[j] - mx);
                loss -= row[ys[i]] - mx - std::log(sum);
            }
            return loss / b;
        };
        const double h = 1e-6;
        std::vector<double> wd(w.begin(), w.end());
        for (int c = 0; c < n; ++c) {
            auto wp = wd, wm = wd;
            wp[c] += h;
            wm[c] -= h;
            const double fd = (loss_at(wp) - loss_at(wm)) / (2 * h);
            const double rel =
                std::abs(fd - grad[c]) / std::max(1e-8, std::max(std::abs(fd), std::abs(grad[c])));
            CHECK_MESSAGE(rel < 1e-4, "client ", c, " fd=", fd, " analytic=", grad[c]);
        }
    }
}

TEST_CASE("update_weights: directional behaviour") {
    // client A is right on every sample, client B anti-correct
    std::vector<ClientModel> clients;
    clients.push_back(constant_client({3.0f, 0.0f}, 2));  // favors class 0
    clients.push_back(constant_client({0.0f, 3.0f}, 2));  // favors class 1
    Tensor batch({8, 1, 1, 2});
    std::vector<int> ys(8, 0);  // truth is always class 0

    WeightUpdateConfig cfg;
    cfg.step_size = 0.05;
    auto ens = make_ensemble(clients, uniform_weights(2));
    auto updated = update_weights(ens, batch, ys, cfg);
    CHECK(updated.weights[0] > ens.weights[0]);
    CHECK(updated.weights[1] < ens.weights[1]);

    SUBCASE("repeated updates drive the good client's weight up to the clamp") {
        auto cur = ens;
        for (int it = 0; it < 50; ++it) cur = update_weights(cur, batch, ys, cfg);
        CHECK(cur.weights[0] > 0.95f);
        CHECK(cur.weights[1] < 0.05f);
        // brute-force over the 1-simplex confirms the optimum sits at w0=1
        double best = 1e9;
        float best_w0 = -1.0f;
        for (float w0 = 0.0f; w0 <= 1.0f; w0 += 0.01f) {
            std::vector<ClientModel> two;
            two.push_back(constant_client({3.0f, 0.0f}, 2));
            two.push_back(constant_client({0.0f, 3.0f}, 2));
            auto e = make_ensemble(two, {w0, 1.0f - w0});
            const double l = ce_mean(ensemble_logits(e, batch), ys);
            if (l < best) {
                best = l;
                best_w0 = w0;
            }
        }
        CHECK(best_w0 == doctest::Approx(1.0f));
    }
}

TEST_CASE("update_weights: zero gradient leaves weights unchanged") {
    // all-zero logits make the loss flat in w: gradient is exactly zero on
    // every coordinate and sign(0)=0 keeps the weights put
    std::vector<ClientModel> clients;
    clients.push_back(constant_client({0.0f, 0.0f}, 2));
    clients.push_back(constant_client({0.0f, 0.0f}, 2));
    Tensor batch({4, 1, 1, 2});
    std::vector<int> ys{0, 1, 0, 1};
    WeightUpdateConfig cfg;
    auto ens = make_ensemble(clients, {0.3f, 0.7f});
    auto updated = update_weights(ens, batch, ys, cfg);
    CHECK(updated.weights[0] == doctest::Approx(0.3f).epsilon(1e-6));
    CHECK(updated.weights[1] == doctest::Approx(0.7f).epsilon(1e-6));
    CHECK_THROWS_AS(update_weights(ens, Tensor({0, 1, 1, 2}), {}, cfg), std::invalid_argument);
}

TEST_CASE("simplex invariant holds over 1000 random updates") {
    Rng rng(51);
    std::vector<ClientModel> clients;
    const int n = 5;
    for (int c = 0; c < n; ++c) {
        std::vector<float> wmat(3 * 6);
        for (auto& v : wmat) v = static_cast<float>(rng.normal());
        clients.push_back(linear_client(wmat, 6, 3));
    }
    auto ens = make_ensemble(clients, uniform_weights(n));
    WeightUpdateConfig cfg;
    cfg.step_size = 0.1 / n;
    for (int it = 0; it < 1000; ++it) {
        Tensor batch({4, 1, 1, 6});
        for (auto& v : batch.data) v = static_cast<float>(rng.normal());
        std::vector<int> ys(4);
        for (auto& y : ys) y = rng.uniform_int(3);
        ens = update_weights(ens, batch, ys, cfg);
        double sum = 0.0;
        for (float w : ens.weights) {
            CHECK(w >= 0.0f);
            CHECK(w <= 1.0f);
            sum += w;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
    }
}

TEST_CASE("one small update does not increase the batch cross-entropy") {
    Rng rng(61);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 3 + rng.uniform_int(3);
        std::vector<ClientModel> clients;
        for (int c = 0; c < n; ++c) {
            std::vector<float> wmat(4 * 5);
            for (auto& v : wmat) v = static_cast<float>(rng.normal());
            clients.push_back(linear_client(wmat, 5, 4));
        }
        auto ens = make_ensemble(clients, uniform_weights(n));
        Tensor batch({8, 1, 1, 5});
        for (auto& v : batch.data) v = static_cast<float>(rng.normal());
        std::vector<int> ys(8);
        for (auto& y : ys) y = rng.uniform_int(4);

        WeightUpdateConfig cfg;
        cfg.step_size = 1e-3;
        const double before = ce_mean(ensemble_logits(ens, batch), ys);
        auto after_ens = update_weights(ens, batch, ys, cfg);
        const double after = ce_mean(ensemble_logits(after_ens, batch), ys);
        CHECK(after <= before + 1e-6);
    }
}

TEST_CASE("heterogeneous architectures interoperate through the logit interface") {
    auto handle = load_dataset("synthetic_blobs", "");
    std::vector<ClientModel> clients;
    clients.push_back(build_model({"mlp_tiny", 10, {1, 8, 8}}, 1));
    clients.push_back(build_model({"cnn2", 10, {1, 8, 8}}, 2));
    clients[0].frozen = clients[1].frozen = true;
    auto ens = make_ensemble(clients, uniform_weights(2));
    Tensor batch = handle.gather_train({0, 1, 2});
    Tensor out = ensemble_logits(ens, batch);
    CHECK(out.shape == std::vector<int>{3, 10});
    // convex combination: weighted sum of per-client logits matches
    Tensor a = forward_logits(clients[0], batch);
    Tensor b = forward_logits(clients[1], batch);
    for (size_t i = 0; i < out.data.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(0.5f * a.data[i] + 0.5f * b.data[i]).epsilon(1e-5));
}
