#pragma once

#include <vector>

#include "coboost/tensor.hpp"

namespace coboost {

// Row-wise softmax of a {B,K} logit matrix.
Tensor softmax_rows(const Tensor& logits, float temperature = 1.0f);
Tensor log_softmax_rows(const Tensor& logits, float temperature = 1.0f);

// Mean cross-entropy of logits against integer labels.
double ce_mean(const Tensor& logits, const std::vector<int>& labels);

// d(ce_mean)/d(logits) = (softmax - onehot)/B.
Tensor ce_grad(const Tensor& logits, const std::vector<int>& labels);

// Mean over rows of KL(softmax(p/t) || softmax(q/t)).
double kl_mean(const Tensor& p_logits, const Tensor& q_logits, float temperature = 1.0f);

std::vector<int> argmax_rows(const Tensor& logits);
double accuracy_from_logits(const Tensor& logits, const std::vector<int>& labels);

}  // namespace coboost
