#include "coboost/nn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coboost {

namespace {

void check_logits(const Tensor& t, const char* who) {
    if (t.ndim() != 2) throw std::invalid_argument(std::string(who) + ": expected {B,K} logits");
}

void check_labels(const Tensor& logits, const std::vector<int>& labels, const char* who) {
    if (static_cast<int>(labels.size()) != logits.dim(0))
        throw std::invalid_argument(std::string(who) + ": label count mismatch");
    for (int y : labels)
        if (y < 0 || y >= logits.dim(1))
            throw std::out_of_range(std::string(who) + ": label out of range");
}

}  // namespace

Tensor softmax_rows(const Tensor& logits, float temperature) {
    check_logits(logits, "softmax_rows");
    const int b = logits.dim(0), k = logits.dim(1);
    Tensor p(logits.shape);
    for (int i = 0; i < b; ++i) {
        const float* row = logits.ptr() + static_cast<int64_t>(i) * k;
        float* out = p.ptr() + static_cast<int64_t>(i) * k;
        double mx = -1e30;
        for (int j = 0; j < k; ++j) mx = std::max(mx, static_cast<double>(row[j] / temperature));
        double sum = 0.0;
        for (int j = 0; j < k; ++j) {
            const double e = std::exp(row[j] / temperature - mx);
            out[j] = static_cast<float>(e);
            sum += e;
        }
        for (int j = 0; j < k; ++j) out[j] = static_cast<float>(out[j] / sum);
    }
    return p;
}

Tensor log_softmax_rows(const Tensor& logits, float temperature) {
    check_logits(logits, "log_softmax_rows");
    const int b = logits.dim(0), k = logits.dim(1);
    Tensor lp(logits.shape);
    for (int i = 0; i < b; ++i) {
        const float* row = logits.ptr() + static_cast<int64_t>(i) * k;
        float* out = lp.ptr() + static_cast<int64_t>(i) * k;
        double mx = -1e30;
        for (int j = 0; j < k; ++j) mx = std::max(mx, static_cast<double>(row[j] / temperature));
        double sum = 0.0;
        for (int j = 0; j < k; ++j) sum += std::exp(row[j] / temperature - mx);
        const double lse = mx + std::log(sum);
        for (int j = 0; j < k; ++j) out[j] = static_cast<float>(row[j] / temperature - lse);
    }
    return lp;
}

double ce_mean(const Tensor& logits, const std::vector<int>& labels) {
    check_labels(logits, labels, "ce_mean");
    if (labels.empty()) throw std::invalid_argument("ce_mean: empty batch");
    Tensor lp = log_softmax_rows(logits);
    const int k = logits.dim(1);
    double loss = 0.0;
    for (size_t i = 0; i < labels.size(); ++i) loss -= lp.data[i * k + labels[i]];
    return loss / static_cast<double>(labels.size());
}

Tensor ce_grad(const Tensor& logits, const std::vector<int>& labels) {
    check_labels(logits, labels, "ce_grad");
    Tensor g = softmax_rows(logits);
    const int k = logits.dim(1);
    const float inv_b = 1.0f / static_cast<float>(labels.size());
    for (size_t i = 0; i < labels.size(); ++i) g.data[i * k + labels[i]] -= 1.0f;
    for (auto& v : g.data) v *= inv_b;
    return g;
}

double kl_mean(const Tensor& p_logits, const Tensor& q_logits, float temperature) {
    check_same_shape(p_logits, q_logits, "kl_mean");
    check_logits(p_logits, "kl_mean");
    Tensor lp = log_softmax_rows(p_logits, temperature);
    Tensor lq = log_softmax_rows(q_logits, temperature);
    const int b = p_logits.dim(0), k = p_logits.dim(1);
    double total = 0.0;
    for (int i = 0; i < b; ++i)
        for (int j = 0; j < k; ++j) {
            const int64_t o = static_cast<int64_t>(i) * k + j;
            total += std::exp(static_cast<double>(lp.data[o])) * (lp.data[o] - lq.data[o]);
        }
    return total / b;
}

std::vector<int> argmax_rows(const Tensor& logits) {
    check_logits(logits, "argmax_rows");
    const int b = logits.dim(0), k = logits.dim(1);
    std::vector<int> out(b);
    for (int i = 0; i < b; ++i) {
        const float* row = logits.ptr() + static_cast<int64_t>(i) * k;
        out[i] = static_cast<int>(std::max_element(row, row + k) - row);
    }
    return out;
}

double accuracy_from_logits(const Tensor& logits, const std::vector<int>& labels) {
    check_labels(logits, labels, "accuracy_from_logits");
    if (labels.empty()) throw std::invalid_argument("accuracy_from_logits: empty batch");
    auto pred = argmax_rows(logits);
    int64_t correct = 0;
    for (size_t i = 0; i < labels.size(); ++i) correct += pred[i] == labels[i];
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

}  // namespace coboost
