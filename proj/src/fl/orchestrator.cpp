#include "coboost/fl/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include "coboost/model/checkpoint.hpp"
#include "coboost/io/metrics.hpp"
#include "coboost/nn/losses.hpp"
#include "json.hpp"

namespace coboost {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// sub-stream tags for per-run seed derivation; each pipeline stage owns an
// independent stream so toggling one stage never shifts another's randomness
constexpr uint64_t kSeedPartition = 0x01;
constexpr uint64_t kSeedClientInit = 0x1000;
constexpr uint64_t kSeedClientTrain = 0x2000;
constexpr uint64_t kSeedServerInit = 0x03;
constexpr uint64_t kSeedGenInit = 0x04;
constexpr uint64_t kSeedSynth = 0x05;
constexpr uint64_t kSeedDiversify = 0x06;
constexpr uint64_t kSeedWeightBatch = 0x07;
constexpr uint64_t kSeedDistill = 0x08;

ModelSpec fill_spec(ModelSpec spec, const DatasetHandle& handle) {
    if (spec.num_classes == 0) spec.num_classes = handle.num_classes;
    if (spec.input_shape == std::array<int, 3>{0, 0, 0}) spec.input_shape = handle.sample_shape;
    if (spec.num_classes != handle.num_classes)
        throw std::invalid_argument("model spec num_classes=" + std::to_string(spec.num_classes) +
                                    " disagrees with dataset (" +
                                    std::to_string(handle.num_classes) + ")");
    if (spec.input_shape != handle.sample_shape)
        throw std::invalid_argument("model spec input_shape disagrees with dataset");
    return spec;
}

std::vector<ModelSpec> broadcast_specs(const std::vector<ModelSpec>& specs, int n,
                                       const DatasetHandle& handle) {
    if (specs.empty()) throw std::invalid_argument("client_specs must not be empty");
    std::vector<ModelSpec> out;
    if (static_cast<int>(specs.size()) == 1) {
        out.assign(static_cast<size_t>(n), fill_spec(specs[0], handle));
    } else if (static_cast<int>(specs.size()) == n) {
        for (const auto& s : specs) out.push_back(fill_spec(s, handle));
    } else {
        throw std::invalid_argument("client_specs must have 1 or num_clients entries");
    }
    return out;
}

double ensemble_acc_from_cached(const std::vector<Tensor>& client_logits,
                                const std::vector<float>& w, const std::vector<int>& labels) {
    Tensor combined(client_logits[0].shape);
    for (size_t k = 0; k < client_logits.size(); ++k)
        for (size_t i = 0; i < combined.data.size(); ++i)
            combined.data[i] += w[k] * client_logits[k].data[i];
    return accuracy_from_logits(combined, labels);
}

std::string run_dir(const ExperimentConfig& cfg, const std::string& run_id) {
    return (fs::path(cfg.output_dir) / run_id).string();
}

void write_run_config(const ExperimentConfig& cfg, Method method, uint64_t seed,
                      const std::string& dir) {
    ExperimentConfig snapshot = cfg;
    snapshot.method = method;
    snapshot.seeds = {seed};
    fs::create_directories(dir);
    std::ofstream out(dir + "/config.json", std::ios::trunc);
    out << config_to_json_text(snapshot) << '\n';
}

void write_summary(const RunResult& result, const std::string& dir) {
    json j;
    j["run_id"] = result.run_id;
    j["method"] = to_string(result.method);
    j["seed"] = result.seed;
    j["final_server_acc"] = result.final_server_acc;
    j["final_ensemble_acc"] = result.final_ensemble_acc;
    j["epochs"] = result.records.size();
    j["wall_clock_sec"] = result.wall_clock_sec;
    std::ofstream out(dir + "/summary.json", std::ios::trunc);
    out << j.dump(2) << '\n';
}

std::vector<double> to_double_vec(const std::vector<float>& v) {
    return std::vector<double>(v.begin(), v.end());
}

}  // namespace

Method method_from_string(const std::string& s) {
    if (s == "co_boosting") return Method::co_boosting;
    if (s == "fedavg") return Method::fedavg;
    if (s == "fedens") return Method::fedens;
    if (s == "plain_distill") return Method::plain_distill;
    throw std::invalid_argument("unknown method '" + s + "'");
}

std::string to_string(Method m) {
    switch (m) {
        case Method::co_boosting: return "co_boosting";
        case Method::fedavg: return "fedavg";
        case Method::fedens: return "fedens";
        case Method::plain_distill: return "plain_distill";
    }
    return "?";
}

RunSeries RunResult::to_series() const {
    RunSeries s;
    s.run_id = run_id;
    s.method = to_string(method);
    s.seed = seed;
    s.final_server_acc = final_server_acc;
    s.final_ensemble_acc = final_ensemble_acc;
    for (const auto& r : records) {
        s.server_curve.push_back({r.epoch, r.server_test_acc});
        s.ensemble_curve.push_back({r.epoch, r.ensemble_test_acc});
    }
    return s;
}

ClientPool prepare_clients(const ExperimentConfig& cfg, uint64_t seed) {
    ClientPool pool;
    pool.seed = seed;
    pool.handle = load_dataset(cfg.dataset, cfg.data_root);

    Rng base(seed);
    PartitionSpec pspec = cfg.partition;
    pspec.seed = cfg.partition.seed ^ base.fork(kSeedPartition).next_u64();
    pool.shards = partition(pool.handle, pspec);

    const int n = cfg.partition.num_clients;
    auto specs = broadcast_specs(cfg.client_specs, n, pool.handle);
    pool.clients.resize(n);

    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::string error_text;
    std::mutex error_mu;
    auto worker = [&]() {
        for (;;) {
            const int k = next.fetch_add(1);
            if (k >= n || failed.load()) return;
            try {
                ClientModel model = build_model(specs[k], base.fork(kSeedClientInit + k).next_u64());
                model.client_id = k;
                LocalTrainConfig local = cfg.local;
                local.seed = base.fork(kSeedClientTrain + k).next_u64();
                train_client(model, pool.shards[k], pool.handle, local);
                pool.clients[k] = std::move(model);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mu);
                failed.store(true);
                error_text = "client " + std::to_string(k) + ": " + e.what();
            }
        }
    };
    const unsigned n_threads =
        std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()), static_cast<unsigned>(n));
    std::vector<std::thread> threads;
    for (unsigned t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (failed.load()) throw std::runtime_error("prepare_clients: " + error_text);
    return pool;
}

RunResult run_co_boosting(const ExperimentConfig& cfg, ClientPool& pool) {
    const auto t_start = std::chrono::steady_clock::now();
    const uint64_t seed = pool.seed;
    const Method method = cfg.method == Method::plain_distill ? Method::plain_distill
                                                              : Method::co_boosting;
    Toggles toggles = cfg.toggles;
    if (method == Method::plain_distill) toggles = Toggles{false, false, false};

    RunResult result;
    result.method = method;
    result.seed = seed;
    result.run_id = to_string(method) + "_s" + std::to_string(seed);
    const std::string dir = run_dir(cfg, result.run_id);
    write_run_config(cfg, method, seed, dir);
    MetricsSink sink(dir + "/metrics.jsonl", result.run_id);

    const DatasetHandle& handle = pool.handle;
    const int n = static_cast<int>(pool.clients.size());
    Rng base(seed);

    ModelSpec server_spec = fill_spec(cfg.server_spec, handle);
    ClientModel server = build_model(server_spec, base.fork(kSeedServerInit).next_u64());
    server.client_id = -1;

    GeneratorModel gen =
        build_generator(cfg.synth.noise_dim, handle.num_classes, handle.sample_shape,
                        base.fork(kSeedGenInit).next_u64(), handle.channel_lo(), handle.channel_hi(),
                        cfg.synth.generator_lr);

    WeightedEnsemble ens = make_ensemble(pool.clients, uniform_weights(n));
    SyntheticStore store(cfg.store_capacity);
    SGD server_opt(cfg.distill.server_lr, cfg.distill.momentum);

    // frozen clients and a fixed test set: cache their test logits once
    std::vector<Tensor> test_logits;
    test_logits.reserve(n);
    for (auto& c : pool.clients) {
        Tensor part = c.net.forward(handle.test_samples, nullptr, false);
        test_logits.push_back(std::move(part));
    }

    const GeneratorObjective objective =
        toggles.GHS ? GeneratorObjective::hard_adversarial : GeneratorObjective::plain_ce;

    for (int epoch = 0; epoch < cfg.distill.epochs; ++epoch) {
        try {
            Rng synth_rng = base.fork(kSeedSynth).fork(static_cast<uint64_t>(epoch));
            GeneratorStepResult gen_res =
                generator_step(gen, ens, server, cfg.synth, synth_rng, objective);
            store.append(gen_res.batch);

            Tensor diversified;
            const Tensor* train_view = &store.samples();
            if (toggles.DHS) {
                Rng div_rng = base.fork(kSeedDiversify).fork(static_cast<uint64_t>(epoch));
                diversified = diversify(store.samples(), ens, cfg.synth.epsilon, div_rng);
                train_view = &diversified;
            }

            if (toggles.EE && n > 1) {
                Rng wrng = base.fork(kSeedWeightBatch).fork(static_cast<uint64_t>(epoch));
                const int total = static_cast<int>(store.size());
                if (cfg.weight_update.full_store) {
                    ens = update_weights(ens, *train_view, store.labels(), cfg.weight_update);
                } else {
                    const int m = std::min(cfg.weight_update.batch_size, total);
                    std::vector<int> idx(total);
                    std::iota(idx.begin(), idx.end(), 0);
                    wrng.shuffle(idx);
                    idx.resize(m);
                    const int64_t row = train_view->numel() / total;
                    Tensor batch({m, train_view->dim(1), train_view->dim(2), train_view->dim(3)});
                    std::vector<int> labels(m);
                    for (int i = 0; i < m; ++i) {
                        std::copy_n(train_view->ptr() + static_cast<int64_t>(idx[i]) * row, row,
                                    batch.ptr() + static_cast<int64_t>(i) * row);
                        labels[i] = store.labels()[idx[i]];
                    }
                    ens = update_weights(ens, batch, labels, cfg.weight_update);
                }
            }

            Rng distill_rng = base.fork(kSeedDistill).fork(static_cast<uint64_t>(epoch));
            const double kd =
                distill_epoch(server, ens, *train_view, cfg.distill, server_opt, distill_rng);

            EpochRecord rec;
            rec.epoch = epoch;
            rec.gen_loss = gen_res.losses.empty() ? 0.0 : gen_res.losses.back();
            rec.kd_loss = kd;
            rec.server_test_acc = evaluate(server, handle.test_samples, handle.test_labels);
            rec.ensemble_test_acc =
                ensemble_acc_from_cached(test_logits, ens.weights, handle.test_labels);
            rec.weights = to_double_vec(ens.weights);
            result.records.push_back(rec);
            result.weight_trajectory.push_back(rec.weights);

            sink.append(epoch, "gen_loss", rec.gen_loss);
            sink.append(epoch, "kd_loss", rec.kd_loss);
            sink.append(epoch, "server_test_acc", rec.server_test_acc);
            sink.append(epoch, "ensemble_test_acc", rec.ensemble_test_acc);
            sink.append(epoch, "w", MetricValue(rec.weights));
            sink.append(epoch, "store_fingerprint",
                        static_cast<double>(store.fingerprint() & 0xFFFFFFFFull));

            if (cfg.grid_every > 0 && (epoch + 1) % cfg.grid_every == 0)
                dump_sample_grid(store, epoch, dir + "/grids", 3, handle.num_classes,
                                 handle.norm_mean, handle.norm_std);
        } catch (const std::exception& e) {
            throw std::runtime_error(result.run_id + " failed at epoch " + std::to_string(epoch) +
                                     ": " + e.what());
        }
    }

    result.final_server_acc = result.records.empty() ? 0.0 : result.records.back().server_test_acc;
    result.final_ensemble_acc =
        result.records.empty() ? 0.0 : result.records.back().ensemble_test_acc;
    save_checkpoint(server, seed, dir + "/server_final.ckpt");
    result.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    write_summary(result, dir);
    return result;
}

RunResult run_fedavg(const ExperimentConfig& cfg, ClientPool& pool) {
    const auto t_start = std::chrono::steady_clock::now();
    const DatasetHandle& handle = pool.handle;
    for (const auto& c : pool.clients)
        if (c.spec.arch != pool.clients.front().spec.arch)
            throw std::invalid_argument("run_fedavg: heterogeneous client architectures");

    RunResult result;
    result.method = Method::fedavg;
    result.seed = pool.seed;
    result.run_id = "fedavg_s" + std::to_string(pool.seed);
    const std::string dir = run_dir(cfg, result.run_id);
    write_run_config(cfg, Method::fedavg, pool.seed, dir);
    MetricsSink sink(dir + "/metrics.jsonl", result.run_id);

    // one-shot parameter averaging, buffers (BN statistics) included
    ClientModel server = build_model(pool.clients.front().spec, pool.seed);
    auto dst_p = server.net.params();
    auto dst_b = server.net.buffers();
    for (Tensor* t : dst_p) std::fill(t->data.begin(), t->data.end(), 0.0f);
    for (Tensor* t : dst_b) std::fill(t->data.begin(), t->data.end(), 0.0f);
    const float inv_n = 1.0f / static_cast<float>(pool.clients.size());
    for (auto& c : pool.clients) {
        auto src_p = c.net.params();
        auto src_b = c.net.buffers();
        for (size_t i = 0; i < dst_p.size(); ++i)
            for (size_t j = 0; j < dst_p[i]->data.size(); ++j)
                dst_p[i]->data[j] += inv_n * src_p[i]->data[j];
        for (size_t i = 0; i < dst_b.size(); ++i)
            for (size_t j = 0; j < dst_b[i]->data.size(); ++j)
                dst_b[i]->data[j] += inv_n * src_b[i]->data[j];
    }

    EpochRecord rec;
    rec.epoch = 0;
    rec.server_test_acc = evaluate(server, handle.test_samples, handle.test_labels);
    result.records.push_back(rec);
    result.final_server_acc = rec.server_test_acc;
    sink.append(0, "server_test_acc", rec.server_test_acc);
    save_checkpoint(server, pool.seed, dir + "/server_final.ckpt");
    result.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    write_summary(result, dir);
    return result;
}

RunResult run_fedens(const ExperimentConfig& cfg, ClientPool& pool) {
    const auto t_start = std::chrono::steady_clock::now();
    const DatasetHandle& handle = pool.handle;

    RunResult result;
    result.method = Method::fedens;
    result.seed = pool.seed;
    result.run_id = "fedens_s" + std::to_string(pool.seed);
    const std::string dir = run_dir(cfg, result.run_id);
    write_run_config(cfg, Method::fedens, pool.seed, dir);
    MetricsSink sink(dir + "/metrics.jsonl", result.run_id);

    WeightedEnsemble ens =
        make_ensemble(pool.clients, uniform_weights(static_cast<int>(pool.clients.size())));
    const double acc = evaluate(ens, handle.test_samples, handle.test_labels);

    EpochRecord rec;
    rec.epoch = 0;
    rec.server_test_acc = acc;  // the ensemble is the served model here
    rec.ensemble_test_acc = acc;
    rec.weights = to_double_vec(ens.weights);
    result.records.push_back(rec);
    result.final_server_acc = acc;
    result.final_ensemble_acc = acc;
    sink.append(0, "ensemble_test_acc", acc);
    result.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    write_summary(result, dir);
    return result;
}

RunResult run_co_boosting(const ExperimentConfig& cfg, uint64_t seed) {
    ClientPool pool = prepare_clients(cfg, seed);
    return run_co_boosting(cfg, pool);
}

RunResult run_fedavg(const ExperimentConfig& cfg, uint64_t seed) {
    ClientPool pool = prepare_clients(cfg, seed);
    return run_fedavg(cfg, pool);
}

RunResult run_fedens(const ExperimentConfig& cfg, uint64_t seed) {
    ClientPool pool = prepare_clients(cfg, seed);
    return run_fedens(cfg, pool);
}

RunResult run_method(const ExperimentConfig& cfg, ClientPool& pool) {
    switch (cfg.method) {
        case Method::co_boosting:
        case Method::plain_distill: return run_co_boosting(cfg, pool);
        case Method::fedavg: return run_fedavg(cfg, pool);
        case Method::fedens: return run_fedens(cfg, pool);
    }
    throw std::invalid_argument("run_method: bad method");
}

RunResult run_method(const ExperimentConfig& cfg, uint64_t seed) {
    ClientPool pool = prepare_clients(cfg, seed);
    return run_method(cfg, pool);
}

SweepOutcome sweep(const std::vector<ExperimentConfig>& configs) {
    if (configs.empty()) throw std::invalid_argument("sweep: no configs");

    auto pool_key = [](const ExperimentConfig& c) {
        json j;
        j["dataset"] = c.dataset;
        j["data_root"] = c.data_root;
        j["partition"] = json::parse(config_to_json_text(c)).at("partition");
        j["client_specs"] = json::parse(config_to_json_text(c)).at("client_specs");
        j["local"] = json::parse(config_to_json_text(c)).at("local");
        return j.dump();
    };
    const std::string shared_key = pool_key(configs.front());
    for (const auto& c : configs)
        if (pool_key(c) != shared_key)
            throw std::invalid_argument(
                "sweep: configs must share dataset/partition/local settings for fair comparison");

    SweepOutcome outcome;
    std::vector<std::string> method_order;
    for (const auto& c : configs) {
        const std::string m = to_string(c.method);
        if (std::find(method_order.begin(), method_order.end(), m) == method_order.end())
            method_order.push_back(m);
    }

    for (uint64_t seed : configs.front().seeds) {
        ClientPool pool = prepare_clients(configs.front(), seed);
        for (const auto& cfg : configs) {
            const std::string run_id = to_string(cfg.method) + "_s" + std::to_string(seed);
            try {
                outcome.results.push_back(run_method(cfg, pool));
            } catch (const std::exception& e) {
                outcome.failures.push_back(run_id + ": " + e.what());
            }
        }
    }

    std::vector<RunSeries> series;
    for (const auto& r : outcome.results) series.push_back(r.to_series());
    outcome.table = write_report(series, method_order, configs.front().output_dir);
    if (!outcome.failures.empty()) {
        std::ofstream out(configs.front().output_dir + "/failures.txt", std::ios::trunc);
        for (const auto& f : outcome.failures) out << f << '\n';
    }
    return outcome;
}

// ----- config JSON -----------------------------------------------------------

namespace {

json spec_to_json_cfg(const ModelSpec& s) {
    json j;
    j["arch"] = s.arch;
    if (s.num_classes > 0) j["num_classes"] = s.num_classes;
    if (s.input_shape != std::array<int, 3>{0, 0, 0})
        j["input_shape"] = {s.input_shape[0], s.input_shape[1], s.input_shape[2]};
    return j;
}

ModelSpec spec_from_json_cfg(const json& j) {
    ModelSpec s;
    s.arch = j.at("arch").get<std::string>();
    s.num_classes = j.value("num_classes", 0);
    if (j.contains("input_shape")) {
        auto v = j["input_shape"].get<std::vector<int>>();
        s.input_shape = {v.at(0), v.at(1), v.at(2)};
    }
    return s;
}

}  // namespace

std::string config_to_json_text(const ExperimentConfig& cfg) {
    json j;
    j["dataset"] = cfg.dataset;
    j["data_root"] = cfg.data_root;
    j["partition"] = {{"scheme", to_string(cfg.partition.scheme)},
                      {"alpha", cfg.partition.alpha},
                      {"classes_per_client", cfg.partition.classes_per_client},
                      {"sigma", cfg.partition.sigma},
                      {"num_clients", cfg.partition.num_clients},
                      {"seed", cfg.partition.seed}};
    j["client_specs"] = json::array();
    for (const auto& s : cfg.client_specs) j["client_specs"].push_back(spec_to_json_cfg(s));
    j["server_spec"] = spec_to_json_cfg(cfg.server_spec);
    j["local"] = {{"epochs", cfg.local.epochs},
                  {"batch_size", cfg.local.batch_size},
                  {"lr", cfg.local.lr},
                  {"momentum", cfg.local.momentum}};
    j["synth"] = {{"generator_lr", cfg.synth.generator_lr},
                  {"generator_iters", cfg.synth.generator_iters},
                  {"beta", cfg.synth.beta},
                  {"epsilon", cfg.synth.epsilon},
                  {"batch_size", cfg.synth.batch_size},
                  {"gen_kl_temperature", cfg.synth.gen_kl_temperature},
                  {"noise_dim", cfg.synth.noise_dim}};
    j["distill"] = {{"server_lr", cfg.distill.server_lr},
                    {"momentum", cfg.distill.momentum},
                    {"kd_temperature", cfg.distill.kd_temperature},
                    {"batch_size", cfg.distill.batch_size},
                    {"epochs", cfg.distill.epochs}};
    j["weight_update"] = {{"step_size", cfg.weight_update.step_size},
                          {"batch_size", cfg.weight_update.batch_size},
                          {"full_store", cfg.weight_update.full_store}};
    j["toggles"] = {{"GHS", cfg.toggles.GHS}, {"DHS", cfg.toggles.DHS}, {"EE", cfg.toggles.EE}};
    j["method"] = to_string(cfg.method);
    j["seeds"] = cfg.seeds;
    j["output_dir"] = cfg.output_dir;
    j["grid_every"] = cfg.grid_every;
    j["store_capacity"] = cfg.store_capacity;
    return j.dump(2);
}

ExperimentConfig config_from_json_text(const std::string& text) {
    json j = json::parse(text);
    ExperimentConfig cfg;
    cfg.dataset = j.value("dataset", cfg.dataset);
    cfg.data_root = j.value("data_root", cfg.data_root);
    if (j.contains("partition")) {
        const auto& p = j["partition"];
        if (p.contains("scheme"))
            cfg.partition.scheme = partition_scheme_from_string(p["scheme"].get<std::string>());
        cfg.partition.alpha = p.value("alpha", cfg.partition.alpha);
        cfg.partition.classes_per_client =
            p.value("classes_per_client", cfg.partition.classes_per_client);
        cfg.partition.sigma = p.value("sigma", cfg.partition.sigma);
        cfg.partition.num_clients = p.value("num_clients", cfg.partition.num_clients);
        cfg.partition.seed = p.value("seed", cfg.partition.seed);
    }
    if (j.contains("client_specs"))
        for (const auto& s : j["client_specs"]) cfg.client_specs.push_back(spec_from_json_cfg(s));
    if (j.contains("server_spec")) cfg.server_spec = spec_from_json_cfg(j["server_spec"]);
    if (j.contains("local")) {
        const auto& p = j["local"];
        cfg.local.epochs = p.value("epochs", cfg.local.epochs);
        cfg.local.batch_size = p.value("batch_size", cfg.local.batch_size);
        cfg.local.lr = p.value("lr", cfg.local.lr);
        cfg.local.momentum = p.value("momentum", cfg.local.momentum);
    }
    if (j.contains("synth")) {
        const auto& p = j["synth"];
        cfg.synth.generator_lr = p.value("generator_lr", cfg.synth.generator_lr);
        cfg.synth.generator_iters = p.value("generator_iters", cfg.synth.generator_iters);
        cfg.synth.beta = p.value("beta", cfg.synth.beta);
        cfg.synth.epsilon = p.value("epsilon", cfg.synth.epsilon);
        cfg.synth.batch_size = p.value("batch_size", cfg.synth.batch_size);
        cfg.synth.gen_kl_temperature = p.value("gen_kl_temperature", cfg.synth.gen_kl_temperature);
        cfg.synth.noise_dim = p.value("noise_dim", cfg.synth.noise_dim);
    }
    if (j.contains("distill")) {
        const auto& p = j["distill"];
        cfg.distill.server_lr = p.value("server_lr", cfg.distill.server_lr);
        cfg.distill.momentum = p.value("momentum", cfg.distill.momentum);
        cfg.distill.kd_temperature = p.value("kd_temperature", cfg.distill.kd_temperature);
        cfg.distill.batch_size = p.value("batch_size", cfg.distill.batch_size);
        cfg.distill.epochs = p.value("epochs", cfg.distill.epochs);
    }
    if (j.contains("weight_update")) {
        const auto& p = j["weight_update"];
        cfg.weight_update.step_size = p.value("step_size", cfg.weight_update.step_size);
        cfg.weight_update.batch_size = p.value("batch_size", cfg.weight_update.batch_size);
        cfg.weight_update.full_store = p.value("full_store", cfg.weight_update.full_store);
    }
    if (j.contains("toggles")) {
        const auto& p = j["toggles"];
        cfg.toggles.GHS = p.value("GHS", cfg.toggles.GHS);
        cfg.toggles.DHS = p.value("DHS", cfg.toggles.DHS);
        cfg.toggles.EE = p.value("EE", cfg.toggles.EE);
    }
    if (j.contains("method")) cfg.method = method_from_string(j["method"].get<std::string>());
    if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<uint64_t>>();
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.grid_every = j.value("grid_every", cfg.grid_every);
    cfg.store_capacity = j.value("store_capacity", cfg.store_capacity);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return config_from_json_text(text);
}

void apply_override(std::string& json_text, const std::string& key_eq_value) {
    const size_t eq = key_eq_value.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("override must look like key.path=value, got '" + key_eq_value +
                                    "'");
    std::string key = key_eq_value.substr(0, eq);
    const std::string value = key_eq_value.substr(eq + 1);
    for (auto& c : key)
        if (c == '.') c = '/';
    json j = json::parse(json_text);
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error&) {
        parsed = value;  // bare strings stay strings
    }
    j[json::json_pointer("/" + key)] = parsed;
    json_text = j.dump(2);
}

}  // namespace coboost
