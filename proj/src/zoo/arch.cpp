#include "purebox/zoo/arch.hpp"

#include <cmath>

#include "purebox/core/error.hpp"

namespace purebox::zoo {

using nn::Conv2d;
using nn::Dense;
using nn::GlobalAvgPool;
using nn::ReLU;
using nn::Sequential;

const char* to_string(ArchFamily family) {
  switch (family) {
    case ArchFamily::small_cnn: return "small_cnn";
    case ArchFamily::mobile_like: return "mobile_like";
    case ArchFamily::dense_like: return "dense_like";
    case ArchFamily::res_like_A: return "res_like_A";
    case ArchFamily::res_like_B: return "res_like_B";
    case ArchFamily::vgg_like_A: return "vgg_like_A";
    case ArchFamily::vgg_like_B: return "vgg_like_B";
  }
  return "small_cnn";
}

ArchFamily arch_family_from_string(const std::string& name) {
  for (ArchFamily f : {ArchFamily::small_cnn, ArchFamily::mobile_like, ArchFamily::dense_like,
                       ArchFamily::res_like_A, ArchFamily::res_like_B, ArchFamily::vgg_like_A,
                       ArchFamily::vgg_like_B}) {
    if (name == to_string(f)) return f;
  }
  raise(ErrorKind::InvalidSpec, "unknown arch family: " + name);
}

namespace {

int scaled(int base, double w) { return std::max(2, static_cast<int>(std::lround(base * w))); }

// conv(C->C) - relu - conv(C->C) with identity skip; caller adds the
// post-activation.
std::unique_ptr<nn::Layer> res_block(ImageShape shape) {
  auto branch = std::make_unique<Sequential>();
  branch->emplace<Conv2d>(shape, shape.channels, 3, 1, 1);
  branch->emplace<ReLU>();
  branch->emplace<Conv2d>(shape, shape.channels, 3, 1, 1);
  return std::make_unique<nn::ResidualAdd>(std::move(branch));
}

void finish_head(Sequential& net, ImageShape feat, int num_classes) {
  net.emplace<GlobalAvgPool>(feat);
  net.emplace<Dense>(feat.channels, num_classes);
}

}  // namespace

std::unique_ptr<Sequential> build_classifier_net(const ArchSpec& spec, ImageShape input) {
  if (spec.num_classes < 2) raise(ErrorKind::InvalidSpec, "num_classes must be >= 2");
  if (spec.width_scale <= 0) raise(ErrorKind::InvalidSpec, "width_scale must be positive");
  const double w = spec.width_scale;
  auto net = std::make_unique<Sequential>();
  ImageShape s = input;

  switch (spec.family) {
    case ArchFamily::small_cnn: {
      s = net->emplace<Conv2d>(s, scaled(16, w), 3, 2, 1)->output_shape();
      net->emplace<ReLU>();
      s = net->emplace<Conv2d>(s, scaled(32, w), 3, 2, 1)->output_shape();
      net->emplace<ReLU>();
      break;
    }
    case ArchFamily::mobile_like: {
      s = net->emplace<Conv2d>(s, scaled(8, w), 3, 2, 1)->output_shape();
      net->emplace<ReLU>();
      s = net->emplace<Conv2d>(s, scaled(24, w), 1, 1, 0)->output_shape();
      net->emplace<ReLU>();
      s = net->emplace<Conv2d>(s, scaled(24, w), 3, 2, 1)->output_shape();
      net->emplace<ReLU>();
      s = net->emplace<Conv2d>(s, scaled(48, w), 1, 1, 0)->output_shape();
      net->emplace<ReLU>();
      break;
    }
    case ArchFamily::dense_like: {
      s = net->emplace<Conv2d>(s, scaled(12, w), 3, 2, 1)->output_shape();
      net->emplace<ReLU>();
      auto branch = std::make_unique<Sequential>();
      branch->emplace<Conv2d>(s, scaled(12, w), 3, 1, 1);
      branch->emplace<ReLU>();
      s = net->emplace<nn::ConcatSkip>(s, std::move(branch))->output_shape();
      s = net->emplace<Conv2d>(s, scaled(32, w), 3, 2, 1)->output_shape();
      net->emplace<ReLU>();
      break;
    }
    case ArchFamily::res_like_A: {
      s = net->emplace<Conv2d>(s, scaled(16, w), 3, 2, 1)->output_shape();
      net->emplace<ReLU>();
      net->append(res_block(s));
      net->emplace<ReLU>();
      s = net->emplace<Conv2d>(s, scaled(32, w), 3, 2, 1)->output_shape();
      net->emplace<ReLU>();
      net->append(res_block(s));
      net->emplace<ReLU>();
      break;
    }
    case ArchFamily::res_like_B: {
      s = net->emplace<Conv2d>(s, scaled(20, w), 3, 2, 1)->output_shape();
      net->emplace<ReLU>();
      net->append(res_block(s));
      net->emplace<ReLU>();
      net->append(res_block(s));
      net->emplace<ReLU>();
      s = net->emplace<Conv2d>(s, scaled(40, w), 3, 2, 1)->output_shape();
      net->emplace<ReLU>();
      net->append(res_block(s));
      net->emplace<ReLU>();
      break;
    }
    case ArchFamily::vgg_like_A: {
      s = net->emplace<Conv2d>(s, scaled(16, w), 3, 1, 1)->output_shape();
      net->emplace<ReLU>();
      s = net->emplace<Conv2d>(s, scaled(16, w), 3, 2, 1)->output_shape();
      net->emplace<ReLU>();
      s = net->emplace<Conv2d>(s, scaled(32, w), 3, 1, 1)->output_shape();
      net->emplace<ReLU>();
      s = net->emplace<Conv2d>(s, scaled(32, w), 3, 2, 1)->output_shape();
      net->emplace<ReLU>();
      break;
    }
    case ArchFamily::vgg_like_B: {
      s = net->emplace<Conv2d>(s, scaled(16, w), 3, 1, 1)->output_shape();
      net->emplace<ReLU>();
      s = net->emplace<Conv2d>(s, scaled(24, w), 3, 2, 1)->output_shape();
      net->emplace<ReLU>();
      s = net->emplace<Conv2d>(s, scaled(24, w), 3, 1, 1)->output_shape();
      net->emplace<ReLU>();
      s = net->emplace<Conv2d>(s, scaled(40, w), 3, 2, 1)->output_shape();
      net->emplace<ReLU>();
      s = net->emplace<Conv2d>(s, scaled(40, w), 3, 1, 1)->output_shape();
      net->emplace<ReLU>();
      break;
    }
  }
  finish_head(*net, s, spec.num_classes);
  return net;
}

}  // namespace purebox::zoo
