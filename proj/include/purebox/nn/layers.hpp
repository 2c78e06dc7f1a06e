#pragma once

#include <memory>
#include <string>
#include <vector>

#include "purebox/core/types.hpp"

namespace purebox::nn {

struct ParamSlot {
  MatX* value;
  MatX* grad;
};

// Batch-oriented layer: forward caches whatever backward needs, backward
// assigns parameter gradients and returns the gradient w.r.t. the input.
// One forward must precede each backward.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual MatX forward(const MatX& x, bool train) = 0;
  virtual MatX backward(const MatX& grad_out) = 0;
  virtual void collect_params(std::vector<ParamSlot>& out) {}
  virtual void init(Rng& rng) {}
  virtual ImageShape output_shape() const { return out_shape_; }

 protected:
  ImageShape out_shape_{};
};

class Dense : public Layer {
 public:
  Dense(int in_dim, int out_dim);
  MatX forward(const MatX& x, bool train) override;
  MatX backward(const MatX& grad_out) override;
  void collect_params(std::vector<ParamSlot>& out) override;
  void init(Rng& rng) override;

 private:
  int in_dim_, out_dim_;
  MatX weight_, bias_, dweight_, dbias_;
  MatX cached_x_;
};

class ReLU : public Layer {
 public:
  MatX forward(const MatX& x, bool train) override;
  MatX backward(const MatX& grad_out) override;

 private:
  MatX mask_;
};

class Tanh : public Layer {
 public:
  MatX forward(const MatX& x, bool train) override;
  MatX backward(const MatX& grad_out) override;

 private:
  MatX cached_y_;
};

class Conv2d : public Layer {
 public:
  Conv2d(ImageShape in, int out_channels, int kernel, int stride, int pad);
  MatX forward(const MatX& x, bool train) override;
  MatX backward(const MatX& grad_out) override;
  void collect_params(std::vector<ParamSlot>& out) override;
  void init(Rng& rng) override;

  ImageShape input_shape() const { return in_shape_; }

 private:
  ImageShape in_shape_;
  int out_channels_, kernel_, stride_, pad_;
  MatX weight_;  // out_channels x (in_channels * k * k)
  MatX bias_;    // out_channels x 1
  MatX dweight_, dbias_;
  MatX cached_x_;
};

// Transposed convolution; output spatial size is
// (in - 1) * stride - 2 * pad + kernel + output_pad.
class ConvTranspose2d : public Layer {
 public:
  ConvTranspose2d(ImageShape in, int out_channels, int kernel, int stride, int pad,
                  int output_pad);
  MatX forward(const MatX& x, bool train) override;
  MatX backward(const MatX& grad_out) override;
  void collect_params(std::vector<ParamSlot>& out) override;
  void init(Rng& rng) override;

 private:
  ImageShape in_shape_;
  int out_channels_, kernel_, stride_, pad_, output_pad_;
  MatX weight_;  // in_channels x (out_channels * k * k)
  MatX bias_;    // out_channels x 1
  MatX dweight_, dbias_;
  MatX cached_x_;
};

// Per-sample, per-channel normalization over the spatial plane with a
// learned affine term.
class InstanceNorm : public Layer {
 public:
  explicit InstanceNorm(ImageShape shape, Scalar eps = Scalar(1e-5));
  MatX forward(const MatX& x, bool train) override;
  MatX backward(const MatX& grad_out) override;
  void collect_params(std::vector<ParamSlot>& out) override;
  void init(Rng& rng) override;

 private:
  ImageShape shape_;
  Scalar eps_;
  MatX gamma_, beta_, dgamma_, dbeta_;  // channels x 1
  MatX xhat_;                           // cached normalized input
  MatX inv_std_;                        // channels x batch
};

class GlobalAvgPool : public Layer {
 public:
  explicit GlobalAvgPool(ImageShape shape);
  MatX forward(const MatX& x, bool train) override;
  MatX backward(const MatX& grad_out) override;

 private:
  ImageShape shape_;
  Eigen::Index batch_ = 0;
};

class Sequential : public Layer {
 public:
  Sequential() = default;

  template <class L, class... Args>
  L* emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L* raw = layer.get();
    append(std::move(layer));
    return raw;
  }

  void append(std::unique_ptr<Layer> layer) {
    layers_.push_back(std::move(layer));
    // Shapeless layers (activations) keep the previous shape.
    const ImageShape s = layers_.back()->output_shape();
    if (s.height > 0) out_shape_ = s;
  }

  MatX forward(const MatX& x, bool train) override;
  MatX backward(const MatX& grad_out) override;
  void collect_params(std::vector<ParamSlot>& out) override;
  void init(Rng& rng) override;

  std::size_t size() const { return layers_.size(); }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

// y = x + inner(x); shapes must match. Used by residual blocks.
class ResidualAdd : public Layer {
 public:
  explicit ResidualAdd(std::unique_ptr<Layer> inner) : inner_(std::move(inner)) {
    out_shape_ = inner_->output_shape();
  }
  MatX forward(const MatX& x, bool train) override;
  MatX backward(const MatX& grad_out) override;
  void collect_params(std::vector<ParamSlot>& out) override { inner_->collect_params(out); }
  void init(Rng& rng) override { inner_->init(rng); }

 private:
  std::unique_ptr<Layer> inner_;
};

// y = concat_channels(x, inner(x)); spatial dims of inner output must match
// the input. Used by the dense-like classifier family.
class ConcatSkip : public Layer {
 public:
  ConcatSkip(ImageShape in, std::unique_ptr<Layer> inner);
  MatX forward(const MatX& x, bool train) override;
  MatX backward(const MatX& grad_out) override;
  void collect_params(std::vector<ParamSlot>& out) override { inner_->collect_params(out); }
  void init(Rng& rng) override { inner_->init(rng); }

 private:
  ImageShape in_shape_;
  std::unique_ptr<Layer> inner_;
};

void zero_grads(const std::vector<ParamSlot>& slots);
std::size_t parameter_count(const std::vector<ParamSlot>& slots);
std::size_t parameter_count(Layer& layer);

// Weight snapshot/restore, used for best-epoch checkpoints and serialization.
std::vector<MatX> get_weights(Layer& layer);
void set_weights(Layer& layer, const std::vector<MatX>& weights);

// Conv output spatial size for one dimension.
inline int conv_out_dim(int in, int kernel, int stride, int pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

}  // namespace purebox::nn
