#pragma once

#include <vector>

#include "purebox/core/types.hpp"
#include "purebox/nn/layers.hpp"

namespace purebox::nn {

class SgdMomentum {
 public:
  explicit SgdMomentum(double momentum = 0.9) : momentum_(momentum) {}
  void step(const std::vector<ParamSlot>& slots, double lr);

 private:
  double momentum_;
  std::vector<MatX> velocity_;
};

class Adam {
 public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(const std::vector<ParamSlot>& slots);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<MatX> m_, v_;
};

}  // namespace purebox::nn
