#include "purebox/nn/optim.hpp"

#include <cmath>

namespace purebox::nn {

void SgdMomentum::step(const std::vector<ParamSlot>& slots, double lr) {
  if (velocity_.size() != slots.size()) {
    velocity_.clear();
    velocity_.reserve(slots.size());
    for (const auto& slot : slots) velocity_.push_back(MatX::Zero(slot.value->rows(), slot.value->cols()));
  }
  const Scalar m = static_cast<Scalar>(momentum_);
  const Scalar rate = static_cast<Scalar>(lr);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    velocity_[i] = m * velocity_[i] + *slots[i].grad;
    *slots[i].value -= rate * velocity_[i];
  }
}

void Adam::step(const std::vector<ParamSlot>& slots) {
  if (m_.size() != slots.size()) {
    m_.clear();
    v_.clear();
    for (const auto& slot : slots) {
      m_.push_back(MatX::Zero(slot.value->rows(), slot.value->cols()));
      v_.push_back(MatX::Zero(slot.value->rows(), slot.value->cols()));
    }
    t_ = 0;
  }
  ++t_;
  const Scalar b1 = static_cast<Scalar>(beta1_);
  const Scalar b2 = static_cast<Scalar>(beta2_);
  const Scalar corr1 = static_cast<Scalar>(1.0 - std::pow(beta1_, t_));
  const Scalar corr2 = static_cast<Scalar>(1.0 - std::pow(beta2_, t_));
  const Scalar rate = static_cast<Scalar>(lr_);
  const Scalar eps = static_cast<Scalar>(eps_);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const MatX& g = *slots[i].grad;
    m_[i] = b1 * m_[i] + (1 - b1) * g;
    v_[i] = b2 * v_[i] + (1 - b2) * g.cwiseProduct(g);
    const MatX mhat = m_[i] / corr1;
    const MatX vhat = v_[i] / corr2;
    slots[i].value->array() -= rate * mhat.array() / (vhat.array().sqrt() + eps);
  }
}

}  // namespace purebox::nn
