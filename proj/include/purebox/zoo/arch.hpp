#pragma once

#include <memory>
#include <string>

#include "purebox/core/types.hpp"
#include "purebox/nn/layers.hpp"

namespace purebox::zoo {

// Seven structurally distinct small CNN families; diversity is in
// depth/width/kernel/skip topology. All are resolution-agnostic (global
// average pool before the classifier head).
enum class ArchFamily {
  small_cnn,
  mobile_like,
  dense_like,
  res_like_A,
  res_like_B,
  vgg_like_A,
  vgg_like_B,
};

const char* to_string(ArchFamily family);
ArchFamily arch_family_from_string(const std::string& name);

struct ArchSpec {
  ArchFamily family = ArchFamily::small_cnn;
  int num_classes = 2;
  double width_scale = 1.0;
};

// Uninitialized network for the spec; call init(rng) before use.
std::unique_ptr<nn::Sequential> build_classifier_net(const ArchSpec& spec, ImageShape input);

}  // namespace purebox::zoo
