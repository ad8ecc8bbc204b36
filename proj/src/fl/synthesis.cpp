#include "coboost/fl/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "coboost/checksum.hpp"
#include "coboost/nn/losses.hpp"

namespace coboost {

namespace {

void validate(const SynthesisConfig& cfg) {
    if (cfg.generator_lr <= 0.0f) throw std::invalid_argument("SynthesisConfig: generator_lr <= 0");
    if (cfg.generator_iters < 0) throw std::invalid_argument("SynthesisConfig: generator_iters < 0");
    if (cfg.beta < 0.0f) throw std::invalid_argument("SynthesisConfig: beta < 0");
    if (cfg.epsilon < 0.0f || cfg.epsilon > 32.0f / 255.0f)
        throw std::invalid_argument("SynthesisConfig: epsilon outside [0, 32/255]");
    if (cfg.batch_size < 1) throw std::invalid_argument("SynthesisConfig: batch_size < 1");
    if (cfg.gen_kl_temperature <= 0.0f)
        throw std::invalid_argument("SynthesisConfig: gen_kl_temperature <= 0");
    if (cfg.noise_dim < 1) throw std::invalid_argument("SynthesisConfig: noise_dim < 1");
}

double mean_difficulty_weighted_ce(const Tensor& ens_logits, const std::vector<int>& labels,
                                   Tensor* grad_logits) {
    const int b = ens_logits.dim(0), k = ens_logits.dim(1);
    Tensor p = softmax_rows(ens_logits);
    Tensor lp = log_softmax_rows(ens_logits);
    double loss = 0.0;
    if (grad_logits) *grad_logits = Tensor(ens_logits.shape);
    for (int i = 0; i < b; ++i) {
        const int y = labels[i];
        const double d = 1.0 - static_cast<double>(p.data[static_cast<int64_t>(i) * k + y]);
        const double ce = -static_cast<double>(lp.data[static_cast<int64_t>(i) * k + y]);
        loss += d * ce;
        if (grad_logits) {
            // d is treated as a constant importance weight
            const float scale = static_cast<float>(d / b);
            for (int j = 0; j < k; ++j) {
                float g = p.data[static_cast<int64_t>(i) * k + j];
                if (j == y) g -= 1.0f;
                grad_logits->data[static_cast<int64_t>(i) * k + j] = scale * g;
            }
        }
    }
    return loss / b;
}

// -mean KL(softmax(a/t) || softmax(s/t)) plus gradients wrt both logit sets.
double negative_divergence(const Tensor& ens_logits, const Tensor& server_logits, float temperature,
                           Tensor* grad_ens, Tensor* grad_server) {
    const int b = ens_logits.dim(0), k = ens_logits.dim(1);
    Tensor lp = log_softmax_rows(ens_logits, temperature);
    Tensor lq = log_softmax_rows(server_logits, temperature);
    if (grad_ens) *grad_ens = Tensor(ens_logits.shape);
    if (grad_server) *grad_server = Tensor(server_logits.shape);
    double total = 0.0;
    const double inv_bt = 1.0 / (static_cast<double>(b) * temperature);
    for (int i = 0; i < b; ++i) {
        const int64_t off = static_cast<int64_t>(i) * k;
        double kl = 0.0;
        for (int j = 0; j < k; ++j)
            kl += std::exp(static_cast<double>(lp.data[off + j])) * (lp.data[off + j] - lq.data[off + j]);
        total += kl;
        if (grad_ens)
            for (int j = 0; j < k; ++j) {
                const double pj = std::exp(static_cast<double>(lp.data[off + j]));
                grad_ens->data[off + j] = static_cast<float>(
                    -inv_bt * pj * ((lp.data[off + j] - lq.data[off + j]) - kl));
            }
        if (grad_server)
            for (int j = 0; j < k; ++j) {
                const double pj = std::exp(static_cast<double>(lp.data[off + j]));
                const double qj = std::exp(static_cast<double>(lq.data[off + j]));
                grad_server->data[off + j] = static_cast<float>(-inv_bt * (qj - pj));
            }
    }
    return -total / b;
}

}  // namespace

void SyntheticStore::append(const SyntheticBatch& batch) {
    if (batch.samples.dim(0) != static_cast<int>(batch.labels.size()))
        throw std::invalid_argument("SyntheticStore::append: sample/label count mismatch");
    if (labels_.empty()) {
        samples_ = batch.samples;
        labels_ = batch.labels;
    } else {
        if (samples_.ndim() != batch.samples.ndim() ||
            std::vector<int>(samples_.shape.begin() + 1, samples_.shape.end()) !=
                std::vector<int>(batch.samples.shape.begin() + 1, batch.samples.shape.end()))
            throw std::invalid_argument("SyntheticStore::append: sample shape mismatch");
        samples_.data.insert(samples_.data.end(), batch.samples.data.begin(),
                             batch.samples.data.end());
        samples_.shape[0] += batch.samples.dim(0);
        labels_.insert(labels_.end(), batch.labels.begin(), batch.labels.end());
    }
    if (capacity_ > 0 && labels_.size() > capacity_) {
        const int64_t drop = static_cast<int64_t>(labels_.size() - capacity_);
        const int64_t row = samples_.numel() / samples_.dim(0);
        samples_.data.erase(samples_.data.begin(), samples_.data.begin() + drop * row);
        samples_.shape[0] -= static_cast<int>(drop);
        labels_.erase(labels_.begin(), labels_.begin() + drop);
    }
}

uint64_t SyntheticStore::fingerprint() const {
    uint64_t h = checksum(samples_);
    return fnv1a(labels_.data(), labels_.size() * sizeof(int), h);
}

double hard_sample_loss(const SyntheticBatch& batch, const WeightedEnsemble& ens) {
    Tensor a = ensemble_logits(ens, batch.samples);
    return mean_difficulty_weighted_ce(a, batch.labels, nullptr);
}

double adversarial_divergence_loss(const SyntheticBatch& batch, const WeightedEnsemble& ens,
                                   ClientModel& server, float temperature) {
    Tensor a = ensemble_logits(ens, batch.samples);
    Tensor s = forward_logits(server, batch.samples);
    return negative_divergence(a, s, temperature, nullptr, nullptr);
}

GeneratorStepResult generator_step(GeneratorModel& gen, const WeightedEnsemble& ens,
                                   ClientModel& server, const SynthesisConfig& cfg, Rng& rng,
                                   GeneratorObjective objective) {
    validate(cfg);
    const int b = cfg.batch_size;
    const int k = gen.num_classes;

    GeneratorStepResult res;
    res.batch.labels.resize(b);
    for (auto& y : res.batch.labels) y = rng.uniform_int(k);
    res.batch.noises = Tensor({b, gen.noise_dim});
    for (auto& v : res.batch.noises.data) v = static_cast<float>(rng.normal());

    if (cfg.generator_iters == 0) {
        res.batch.samples = gen.forward(res.batch.noises, res.batch.labels, nullptr, false);
        return res;
    }

    for (int t = 0; t < cfg.generator_iters; ++t) {
        LayerCtx gen_ctx;
        Tensor x = gen.forward(res.batch.noises, res.batch.labels, &gen_ctx, true);

        EnsembleTrace etrace;
        Tensor a = ensemble_forward(ens, x, &etrace);

        double loss = 0.0;
        Tensor grad_a;
        Tensor grad_s;
        LayerCtx server_ctx;
        bool use_server = false;
        if (objective == GeneratorObjective::plain_ce) {
            loss = ce_mean(a, res.batch.labels);
            grad_a = ce_grad(a, res.batch.labels);
        } else {
            loss = mean_difficulty_weighted_ce(a, res.batch.labels, &grad_a);
            if (cfg.beta > 0.0f) {
                use_server = true;
                Tensor s = server.net.forward(x, &server_ctx, false);
                Tensor grad_a_div;
                const double div =
                    negative_divergence(a, s, cfg.gen_kl_temperature, &grad_a_div, &grad_s);
                loss += cfg.beta * div;
                for (size_t i = 0; i < grad_a.data.size(); ++i)
                    grad_a.data[i] += cfg.beta * grad_a_div.data[i];
                scale_inplace(grad_s, cfg.beta);
            }
        }
        if (!std::isfinite(loss))
            throw std::runtime_error("generator_step: non-finite loss at inner iteration " +
                                     std::to_string(t) + " (generator diverged)");
        res.losses.push_back(loss);

        Tensor dx = ensemble_backward_input(ens, grad_a, etrace);
        if (use_server) {
            Tensor dxs = server.net.backward(grad_s, server_ctx, /*need_param_grads=*/false);
            add_inplace(dx, dxs);
        }
        gen.zero_grad();
        gen.backward(dx, res.batch.labels, gen_ctx);
        gen.opt.step(gen.params(), gen.grads());

        if (t == cfg.generator_iters - 1) res.batch.samples = std::move(x);
    }
    return res;
}

Tensor diversify(const Tensor& samples, const WeightedEnsemble& ens, float epsilon, Rng& rng) {
    if (epsilon < 0.0f || epsilon > 32.0f / 255.0f)
        throw std::invalid_argument("diversify: epsilon outside [0, 32/255]");
    const int n = samples.dim(0);
    if (n == 0) return samples;
    const int k = ens.num_classes();
    if (epsilon == 0.0f) return samples;

    // fresh direction per sample, drawn in sample order so results do not
    // depend on the chunking below
    Tensor u({n, k});
    for (auto& v : u.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));

    const int64_t row = samples.numel() / n;
    Tensor out = samples;
    const int chunk = 256;
    for (int off = 0; off < n; off += chunk) {
        const int m = std::min(chunk, n - off);
        Tensor part({m, samples.dim(1), samples.dim(2), samples.dim(3)});
        std::copy_n(samples.ptr() + off * row, m * row, part.ptr());
        Tensor u_part({m, k});
        std::copy_n(u.ptr() + static_cast<int64_t>(off) * k, static_cast<int64_t>(m) * k,
                    u_part.ptr());

        EnsembleTrace tr;
        ensemble_forward(ens, part, &tr);
        Tensor grad = ensemble_backward_input(ens, u_part, tr);

        for (int i = 0; i < m; ++i) {
            const float* x = samples.ptr() + (off + i) * row;
            const float* g = grad.ptr() + static_cast<int64_t>(i) * row;
            float* xt = out.ptr() + (off + i) * row;
            double norm2 = 0.0;
            for (int64_t j = 0; j < row; ++j) norm2 += static_cast<double>(g[j]) * g[j];
            if (norm2 <= 0.0) continue;  // flat direction, leave the sample alone
            double scale = epsilon / std::sqrt(norm2);
            std::vector<double> p(row);
            for (int64_t j = 0; j < row; ++j) p[j] = scale * g[j];
            // two or three fixups absorb float storage rounding so the stored
            // perturbation has L2 norm epsilon exactly up to ~1e-9
            for (int pass = 0; pass < 4; ++pass) {
                double nd2 = 0.0;
                for (int64_t j = 0; j < row; ++j) {
                    xt[j] = static_cast<float>(x[j] + p[j]);
                    const double d = static_cast<double>(xt[j]) - x[j];
                    nd2 += d * d;
                }
                const double nd = std::sqrt(nd2);
                if (std::abs(nd - epsilon) <= 1e-9 || nd == 0.0) break;
                const double fix = epsilon / nd;
                for (auto& v : p) v *= fix;
            }
        }
    }
    return out;
}

std::string dump_sample_grid(const SyntheticStore& store, int epoch, const std::string& dir,
                             int rows, int num_classes, const std::vector<float>& norm_mean,
                             const std::vector<float>& norm_std) {
    if (store.empty()) throw std::invalid_argument("dump_sample_grid: empty store");
    if (rows < 1) throw std::invalid_argument("dump_sample_grid: rows must be >= 1");
    const Tensor& samples = store.samples();
    const int c = samples.dim(1), h = samples.dim(2), w = samples.dim(3);
    if (static_cast<int>(norm_mean.size()) != c || static_cast<int>(norm_std.size()) != c)
        throw std::invalid_argument("dump_sample_grid: normalization stats mismatch");

    // most recent samples first, one column per class
    std::vector<std::vector<int>> picks(num_classes);
    for (int64_t i = store.size() - 1; i >= 0; --i) {
        const int cls = store.labels()[i];
        if (cls >= 0 && cls < num_classes && static_cast<int>(picks[cls].size()) < rows)
            picks[cls].push_back(static_cast<int>(i));
    }

    const int grid_h = rows * h, grid_w = num_classes * w;
    std::vector<unsigned char> img(static_cast<size_t>(grid_h) * grid_w * c, 0);
    const int64_t plane = static_cast<int64_t>(h) * w;
    for (int cls = 0; cls < num_classes; ++cls)
        for (size_t r = 0; r < picks[cls].size(); ++r) {
            const float* src = samples.ptr() + static_cast<int64_t>(picks[cls][r]) * c * plane;
            for (int ch = 0; ch < c; ++ch)
                for (int y = 0; y < h; ++y)
                    for (int x = 0; x < w; ++x) {
                        const float raw = std::clamp(
                            src[ch * plane + y * w + x] * norm_std[ch] + norm_mean[ch], 0.0f, 1.0f);
                        const int gy = static_cast<int>(r) * h + y, gx = cls * w + x;
                        img[(static_cast<size_t>(gy) * grid_w + gx) * c + ch] =
                            static_cast<unsigned char>(std::lround(raw * 255.0f));
                    }
        }

    std::filesystem::create_directories(dir);
    const std::string path = dir + "/grid_epoch" + std::to_string(epoch) + (c == 1 ? ".pgm" : ".ppm");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("dump_sample_grid: cannot write " + path);
    out << (c == 1 ? "P5" : "P6") << "\n" << grid_w << " " << grid_h << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
    if (!out) throw std::runtime_error("dump_sample_grid: write failed for " + path);
    return path;
}

}  // namespace coboost
