#pragma once

#include <vector>

#include "purebox/core/types.hpp"

namespace purebox::nn {

// Column-wise softmax with the usual max-shift for stability.
MatX softmax(const MatX& logits);

struct LossGrad {
  double loss;   // mean cross-entropy over the batch
  MatX dlogits;  // gradient of that mean w.r.t. the logits
};

LossGrad softmax_cross_entropy(const MatX& logits, const std::vector<int>& labels);

// Argmax class index per column.
std::vector<int> argmax_labels(const MatX& logits);

}  // namespace purebox::nn
