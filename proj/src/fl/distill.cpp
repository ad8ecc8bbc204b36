#include "coboost/fl/distill.hpp"

#include <cmath>
#include <numeric>

#include "coboost/nn/losses.hpp"

namespace coboost {

double kd_loss(const Tensor& teacher_logits, const Tensor& student_logits, float tau) {
    if (tau <= 0.0f) throw std::invalid_argument("kd_loss: tau must be > 0");
    check_same_shape(teacher_logits, student_logits, "kd_loss");
    return static_cast<double>(tau) * tau * kl_mean(teacher_logits, student_logits, tau);
}

Tensor kd_loss_grad(const Tensor& teacher_logits, const Tensor& student_logits, float tau) {
    check_same_shape(teacher_logits, student_logits, "kd_loss_grad");
    const int b = student_logits.dim(0);
    Tensor p = softmax_rows(teacher_logits, tau);
    Tensor q = softmax_rows(student_logits, tau);
    Tensor g(student_logits.shape);
    const float scale = tau / static_cast<float>(b);
    for (size_t i = 0; i < g.data.size(); ++i) g.data[i] = scale * (q.data[i] - p.data[i]);
    return g;
}

double distill_epoch(ClientModel& server, const WeightedEnsemble& ens, const Tensor& samples,
                     const DistillConfig& cfg, SGD& opt, Rng& rng) {
    const int n = samples.dim(0);
    if (n == 0) throw std::invalid_argument("distill_epoch: empty store");
    if (cfg.batch_size < 1 || cfg.kd_temperature <= 0.0f)
        throw std::invalid_argument("distill_epoch: bad config");

    const int64_t row = samples.numel() / n;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    double loss_sum = 0.0;
    int64_t seen = 0;
    for (int off = 0; off < n; off += cfg.batch_size) {
        const int m = std::min(cfg.batch_size, n - off);
        Tensor bx({m, samples.dim(1), samples.dim(2), samples.dim(3)});
        for (int i = 0; i < m; ++i)
            std::copy_n(samples.ptr() + static_cast<int64_t>(order[off + i]) * row, row,
                        bx.ptr() + static_cast<int64_t>(i) * row);

        Tensor teacher = ensemble_logits(ens, bx);  // frozen clients, detached
        LayerCtx ctx;
        Tensor student = server.net.forward(bx, &ctx, true);
        loss_sum += kd_loss(teacher, student, cfg.kd_temperature) * m;
        seen += m;

        server.net.zero_grad();
        server.net.backward(kd_loss_grad(teacher, student, cfg.kd_temperature), ctx, true);
        opt.step(server.net.params(), server.net.grads());
    }
    return loss_sum / static_cast<double>(seen);
}

}  // namespace coboost
