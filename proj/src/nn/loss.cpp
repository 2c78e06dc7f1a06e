#include "purebox/nn/loss.hpp"

#include <cmath>

#include "purebox/core/error.hpp"

namespace purebox::nn {

MatX softmax(const MatX& logits) {
  MatX p(logits.rows(), logits.cols());
  for (Eigen::Index s = 0; s < logits.cols(); ++s) {
    const Scalar m = logits.col(s).maxCoeff();
    p.col(s) = (logits.col(s).array() - m).exp();
    p.col(s) /= p.col(s).sum();
  }
  return p;
}

LossGrad softmax_cross_entropy(const MatX& logits, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.cols()) {
    raise(ErrorKind::ShapeMismatch, "label count must match batch size");
  }
  const Eigen::Index batch = logits.cols();
  MatX p = softmax(logits);
  double loss = 0;
  for (Eigen::Index s = 0; s < batch; ++s) {
    const Scalar prob = std::max(p(labels[s], s), Scalar(1e-12));
    loss -= std::log(static_cast<double>(prob));
  }
  loss /= static_cast<double>(batch);
  for (Eigen::Index s = 0; s < batch; ++s) p(labels[s], s) -= Scalar(1);
  p /= Scalar(batch);
  return {loss, std::move(p)};
}

std::vector<int> argmax_labels(const MatX& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.cols()));
  for (Eigen::Index s = 0; s < logits.cols(); ++s) {
    Eigen::Index idx = 0;
    logits.col(s).maxCoeff(&idx);
    out[static_cast<std::size_t>(s)] = static_cast<int>(idx);
  }
  return out;
}

}  // namespace purebox::nn
