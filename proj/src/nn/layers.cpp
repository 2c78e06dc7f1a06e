#include "purebox/nn/layers.hpp"

#include <cmath>

#include "purebox/core/error.hpp"

namespace purebox::nn {

namespace {

using RowMajorMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMajorMap = Eigen::Map<RowMajorMat>;
using ConstRowMajorMap = Eigen::Map<const RowMajorMat>;

// Patch matrix for one sample: rows = C*k*k, cols = oH*oW. Row index is
// (c*k + ky)*k + kx; out-of-bounds taps read as zero.
void im2col(const Scalar* x, const ImageShape& in, int kernel, int stride, int pad, MatX& cols) {
  const int out_h = conv_out_dim(in.height, kernel, stride, pad);
  const int out_w = conv_out_dim(in.width, kernel, stride, pad);
  cols.setZero(in.channels * kernel * kernel, out_h * out_w);
  for (int c = 0; c < in.channels; ++c) {
    const Scalar* plane = x + static_cast<std::ptrdiff_t>(c) * in.plane();
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        const int row = (c * kernel + ky) * kernel + kx;
        for (int oy = 0; oy < out_h; ++oy) {
          const int y = oy * stride - pad + ky;
          if (y < 0 || y >= in.height) continue;
          for (int ox = 0; ox < out_w; ++ox) {
            const int xx = ox * stride - pad + kx;
            if (xx < 0 || xx >= in.width) continue;
            cols(row, oy * out_w + ox) = plane[y * in.width + xx];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds patch columns back into the image.
void col2im(const MatX& cols, const ImageShape& in, int kernel, int stride, int pad, Scalar* x) {
  const int out_h = conv_out_dim(in.height, kernel, stride, pad);
  const int out_w = conv_out_dim(in.width, kernel, stride, pad);
  for (int c = 0; c < in.channels; ++c) {
    Scalar* plane = x + static_cast<std::ptrdiff_t>(c) * in.plane();
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        const int row = (c * kernel + ky) * kernel + kx;
        for (int oy = 0; oy < out_h; ++oy) {
          const int y = oy * stride - pad + ky;
          if (y < 0 || y >= in.height) continue;
          for (int ox = 0; ox < out_w; ++ox) {
            const int xx = ox * stride - pad + kx;
            if (xx < 0 || xx >= in.width) continue;
            plane[y * in.width + xx] += cols(row, oy * out_w + ox);
          }
        }
      }
    }
  }
}

void he_normal(MatX& w, int fan_in, Rng& rng) {
  const Scalar stddev = std::sqrt(Scalar(2) / Scalar(fan_in));
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal(0, stddev);
}

}  // namespace

// ---------------------------------------------------------------- Dense

Dense::Dense(int in_dim, int out_dim) : in_dim_(in_dim), out_dim_(out_dim) {
  weight_.setZero(out_dim, in_dim);
  bias_.setZero(out_dim, 1);
  dweight_.setZero(out_dim, in_dim);
  dbias_.setZero(out_dim, 1);
  out_shape_ = ImageShape{out_dim, 1, 1};
}

MatX Dense::forward(const MatX& x, bool) {
  cached_x_ = x;
  MatX y = weight_ * x;
  y.colwise() += bias_.col(0);
  return y;
}

MatX Dense::backward(const MatX& grad_out) {
  dweight_ = grad_out * cached_x_.transpose();
  dbias_ = grad_out.rowwise().sum();
  return weight_.transpose() * grad_out;
}

void Dense::collect_params(std::vector<ParamSlot>& out) {
  out.push_back({&weight_, &dweight_});
  out.push_back({&bias_, &dbias_});
}

void Dense::init(Rng& rng) { he_normal(weight_, in_dim_, rng); bias_.setZero(); }

// ---------------------------------------------------------------- ReLU / Tanh

MatX ReLU::forward(const MatX& x, bool) {
  mask_ = (x.array() > Scalar(0)).cast<Scalar>();
  return x.cwiseMax(Scalar(0));
}

MatX ReLU::backward(const MatX& grad_out) { return grad_out.cwiseProduct(mask_); }

MatX Tanh::forward(const MatX& x, bool) {
  cached_y_ = x.array().tanh();
  return cached_y_;
}

MatX Tanh::backward(const MatX& grad_out) {
  return grad_out.array() * (Scalar(1) - cached_y_.array().square());
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(ImageShape in, int out_channels, int kernel, int stride, int pad)
    : in_shape_(in), out_channels_(out_channels), kernel_(kernel), stride_(stride), pad_(pad) {
  const int out_h = conv_out_dim(in.height, kernel, stride, pad);
  const int out_w = conv_out_dim(in.width, kernel, stride, pad);
  if (out_h < 1 || out_w < 1) raise(ErrorKind::InvalidSpec, "conv output collapses to zero size");
  weight_.setZero(out_channels, in.channels * kernel * kernel);
  bias_.setZero(out_channels, 1);
  dweight_ = weight_;
  dbias_ = bias_;
  out_shape_ = ImageShape{out_channels, out_h, out_w};
}

MatX Conv2d::forward(const MatX& x, bool) {
  cached_x_ = x;
  const Eigen::Index batch = x.cols();
  const int out_plane = out_shape_.plane();
  MatX y(out_shape_.pixels(), batch);
  MatX cols;
  for (Eigen::Index s = 0; s < batch; ++s) {
    im2col(x.col(s).data(), in_shape_, kernel_, stride_, pad_, cols);
    RowMajorMap out_map(y.col(s).data(), out_channels_, out_plane);
    out_map.noalias() = weight_ * cols;
    out_map.colwise() += bias_.col(0);
  }
  return y;
}

MatX Conv2d::backward(const MatX& grad_out) {
  const Eigen::Index batch = cached_x_.cols();
  const int out_plane = out_shape_.plane();
  dweight_.setZero();
  dbias_.setZero();
  MatX dx = MatX::Zero(cached_x_.rows(), batch);
  MatX cols, dcols;
  for (Eigen::Index s = 0; s < batch; ++s) {
    ConstRowMajorMap dout_map(grad_out.col(s).data(), out_channels_, out_plane);
    im2col(cached_x_.col(s).data(), in_shape_, kernel_, stride_, pad_, cols);
    dweight_.noalias() += dout_map * cols.transpose();
    dbias_ += dout_map.rowwise().sum();
    dcols.noalias() = weight_.transpose() * dout_map;
    col2im(dcols, in_shape_, kernel_, stride_, pad_, dx.col(s).data());
  }
  return dx;
}

void Conv2d::collect_params(std::vector<ParamSlot>& out) {
  out.push_back({&weight_, &dweight_});
  out.push_back({&bias_, &dbias_});
}

void Conv2d::init(Rng& rng) {
  he_normal(weight_, in_shape_.channels * kernel_ * kernel_, rng);
  bias_.setZero();
}

// ---------------------------------------------------------------- ConvTranspose2d

ConvTranspose2d::ConvTranspose2d(ImageShape in, int out_channels, int kernel, int stride, int pad,
                                 int output_pad)
    : in_shape_(in),
      out_channels_(out_channels),
      kernel_(kernel),
      stride_(stride),
      pad_(pad),
      output_pad_(output_pad) {
  if (output_pad < 0 || output_pad >= stride) {
    raise(ErrorKind::InvalidSpec, "output_pad must lie in [0, stride)");
  }
  const int out_h = (in.height - 1) * stride - 2 * pad + kernel + output_pad;
  const int out_w = (in.width - 1) * stride - 2 * pad + kernel + output_pad;
  if (out_h < 1 || out_w < 1) raise(ErrorKind::InvalidSpec, "deconv output collapses to zero size");
  weight_.setZero(in.channels, out_channels * kernel * kernel);
  bias_.setZero(out_channels, 1);
  dweight_ = weight_;
  dbias_ = bias_;
  out_shape_ = ImageShape{out_channels, out_h, out_w};
}

MatX ConvTranspose2d::forward(const MatX& x, bool) {
  cached_x_ = x;
  const Eigen::Index batch = x.cols();
  const int in_plane = in_shape_.plane();
  // The forward pass is the adjoint of a conv that maps the (larger) output
  // geometry down to the input geometry.
  const ImageShape big{out_channels_, out_shape_.height, out_shape_.width};
  MatX y = MatX::Zero(out_shape_.pixels(), batch);
  MatX patches;
  for (Eigen::Index s = 0; s < batch; ++s) {
    ConstRowMajorMap x_map(x.col(s).data(), in_shape_.channels, in_plane);
    patches.noalias() = weight_.transpose() * x_map;  // (outC*k*k) x in_plane
    col2im(patches, big, kernel_, stride_, pad_, y.col(s).data());
    RowMajorMap y_map(y.col(s).data(), out_channels_, out_shape_.plane());
    y_map.colwise() += bias_.col(0);
  }
  return y;
}

MatX ConvTranspose2d::backward(const MatX& grad_out) {
  const Eigen::Index batch = cached_x_.cols();
  const int in_plane = in_shape_.plane();
  const ImageShape big{out_channels_, out_shape_.height, out_shape_.width};
  dweight_.setZero();
  dbias_.setZero();
  MatX dx(cached_x_.rows(), batch);
  MatX dpatches;
  for (Eigen::Index s = 0; s < batch; ++s) {
    im2col(grad_out.col(s).data(), big, kernel_, stride_, pad_, dpatches);
    ConstRowMajorMap x_map(cached_x_.col(s).data(), in_shape_.channels, in_plane);
    dweight_.noalias() += x_map * dpatches.transpose();
    ConstRowMajorMap dout_map(grad_out.col(s).data(), out_channels_, out_shape_.plane());
    dbias_ += dout_map.rowwise().sum();
    RowMajorMap dx_map(dx.col(s).data(), in_shape_.channels, in_plane);
    dx_map.noalias() = weight_ * dpatches;
  }
  return dx;
}

void ConvTranspose2d::collect_params(std::vector<ParamSlot>& out) {
  out.push_back({&weight_, &dweight_});
  out.push_back({&bias_, &dbias_});
}

void ConvTranspose2d::init(Rng& rng) {
  he_normal(weight_, in_shape_.channels * kernel_ * kernel_, rng);
  bias_.setZero();
}

// ---------------------------------------------------------------- InstanceNorm

InstanceNorm::InstanceNorm(ImageShape shape, Scalar eps) : shape_(shape), eps_(eps) {
  gamma_.setOnes(shape.channels, 1);
  beta_.setZero(shape.channels, 1);
  dgamma_ = beta_;
  dbeta_ = beta_;
  out_shape_ = shape;
}

MatX InstanceNorm::forward(const MatX& x, bool) {
  const Eigen::Index batch = x.cols();
  const int n = shape_.plane();
  xhat_.resize(x.rows(), batch);
  inv_std_.resize(shape_.channels, batch);
  MatX y(x.rows(), batch);
  for (Eigen::Index s = 0; s < batch; ++s) {
    for (int c = 0; c < shape_.channels; ++c) {
      const auto seg = x.col(s).segment(static_cast<Eigen::Index>(c) * n, n);
      const Scalar mean = seg.mean();
      const Scalar var = (seg.array() - mean).square().sum() / Scalar(n);
      const Scalar inv = Scalar(1) / std::sqrt(var + eps_);
      inv_std_(c, s) = inv;
      auto xh = xhat_.col(s).segment(static_cast<Eigen::Index>(c) * n, n);
      xh = (seg.array() - mean) * inv;
      y.col(s).segment(static_cast<Eigen::Index>(c) * n, n) =
          xh.array() * gamma_(c, 0) + beta_(c, 0);
    }
  }
  return y;
}

MatX InstanceNorm::backward(const MatX& grad_out) {
  const Eigen::Index batch = grad_out.cols();
  const int n = shape_.plane();
  dgamma_.setZero();
  dbeta_.setZero();
  MatX dx(grad_out.rows(), batch);
  for (Eigen::Index s = 0; s < batch; ++s) {
    for (int c = 0; c < shape_.channels; ++c) {
      const auto dy = grad_out.col(s).segment(static_cast<Eigen::Index>(c) * n, n);
      const auto xh = xhat_.col(s).segment(static_cast<Eigen::Index>(c) * n, n);
      dgamma_(c, 0) += dy.cwiseProduct(xh).sum();
      dbeta_(c, 0) += dy.sum();
      const Scalar g = gamma_(c, 0);
      const Scalar s1 = dy.sum() * g;
      const Scalar s2 = dy.cwiseProduct(xh).sum() * g;
      dx.col(s).segment(static_cast<Eigen::Index>(c) * n, n) =
          (inv_std_(c, s) / Scalar(n)) *
          (Scalar(n) * g * dy.array() - s1 - xh.array() * s2);
    }
  }
  return dx;
}

void InstanceNorm::collect_params(std::vector<ParamSlot>& out) {
  out.push_back({&gamma_, &dgamma_});
  out.push_back({&beta_, &dbeta_});
}

void InstanceNorm::init(Rng&) {
  gamma_.setOnes();
  beta_.setZero();
}

// ---------------------------------------------------------------- GlobalAvgPool

GlobalAvgPool::GlobalAvgPool(ImageShape shape) : shape_(shape) {
  out_shape_ = ImageShape{shape.channels, 1, 1};
}

MatX GlobalAvgPool::forward(const MatX& x, bool) {
  batch_ = x.cols();
  const int n = shape_.plane();
  MatX y(shape_.channels, batch_);
  for (Eigen::Index s = 0; s < batch_; ++s) {
    Eigen::Map<const MatX> planes(x.col(s).data(), n, shape_.channels);
    y.col(s) = planes.colwise().mean().transpose();
  }
  return y;
}

MatX GlobalAvgPool::backward(const MatX& grad_out) {
  const int n = shape_.plane();
  MatX dx(static_cast<Eigen::Index>(n) * shape_.channels, batch_);
  for (Eigen::Index s = 0; s < batch_; ++s) {
    for (int c = 0; c < shape_.channels; ++c) {
      dx.col(s).segment(static_cast<Eigen::Index>(c) * n, n).setConstant(grad_out(c, s) /
                                                                         Scalar(n));
    }
  }
  return dx;
}

// ---------------------------------------------------------------- Sequential

MatX Sequential::forward(const MatX& x, bool train) {
  MatX h = x;
  for (auto& layer : layers_) h = layer->forward(h, train);
  return h;
}

MatX Sequential::backward(const MatX& grad_out) {
  MatX g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

void Sequential::collect_params(std::vector<ParamSlot>& out) {
  for (auto& layer : layers_) layer->collect_params(out);
}

void Sequential::init(Rng& rng) {
  for (auto& layer : layers_) layer->init(rng);
}

// ---------------------------------------------------------------- skip blocks

MatX ResidualAdd::forward(const MatX& x, bool train) { return x + inner_->forward(x, train); }

MatX ResidualAdd::backward(const MatX& grad_out) {
  return grad_out + inner_->backward(grad_out);
}

ConcatSkip::ConcatSkip(ImageShape in, std::unique_ptr<Layer> inner)
    : in_shape_(in), inner_(std::move(inner)) {
  const ImageShape b = inner_->output_shape();
  if (b.height != in.height || b.width != in.width) {
    raise(ErrorKind::InvalidSpec, "concat branch must preserve spatial dims");
  }
  out_shape_ = ImageShape{in.channels + b.channels, in.height, in.width};
}

MatX ConcatSkip::forward(const MatX& x, bool train) {
  const MatX branch = inner_->forward(x, train);
  MatX y(x.rows() + branch.rows(), x.cols());
  y.topRows(x.rows()) = x;
  y.bottomRows(branch.rows()) = branch;
  return y;
}

MatX ConcatSkip::backward(const MatX& grad_out) {
  const Eigen::Index top = static_cast<Eigen::Index>(in_shape_.pixels());
  MatX dx = grad_out.topRows(top);
  dx += inner_->backward(grad_out.bottomRows(grad_out.rows() - top));
  return dx;
}

// ---------------------------------------------------------------- helpers

void zero_grads(const std::vector<ParamSlot>& slots) {
  for (const auto& slot : slots) slot.grad->setZero();
}

std::size_t parameter_count(const std::vector<ParamSlot>& slots) {
  std::size_t n = 0;
  for (const auto& slot : slots) n += static_cast<std::size_t>(slot.value->size());
  return n;
}

std::size_t parameter_count(Layer& layer) {
  std::vector<ParamSlot> slots;
  layer.collect_params(slots);
  return parameter_count(slots);
}

std::vector<MatX> get_weights(Layer& layer) {
  std::vector<ParamSlot> slots;
  layer.collect_params(slots);
  std::vector<MatX> out;
  out.reserve(slots.size());
  for (const auto& slot : slots) out.push_back(*slot.value);
  return out;
}

void set_weights(Layer& layer, const std::vector<MatX>& weights) {
  std::vector<ParamSlot> slots;
  layer.collect_params(slots);
  if (slots.size() != weights.size()) {
    raise(ErrorKind::ShapeMismatch, "weight snapshot does not match layer parameters");
  }
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].value->rows() != weights[i].rows() || slots[i].value->cols() != weights[i].cols()) {
      raise(ErrorKind::ShapeMismatch, "weight tensor " + std::to_string(i) + " shape mismatch");
    }
    *slots[i].value = weights[i];
  }
}

}  // namespace purebox::nn
