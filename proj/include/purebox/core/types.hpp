#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace purebox {

// All pixel/weight math runs on a single scalar type.
using Scalar = double;

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using MatX = Mat<Scalar>;
using VecX = Vec<Scalar>;

// Channel-major image layout: index = c*H*W + y*W + x. A batch is a matrix
// with one flattened image per column.
struct ImageShape {
  int channels = 3;
  int height = 0;
  int width = 0;

  int plane() const { return height * width; }
  int pixels() const { return channels * height * width; }
  bool operator==(const ImageShape&) const = default;
};

struct ImageSample {
  VecX pixels;               // values in [0,1], size == shape.pixels()
  int label = -1;            // class index relative to the active class list
  std::string manifest_ref;  // content hash, empty for synthetic tensors
};

template <class D>
Scalar linf_norm(const Eigen::MatrixBase<D>& m) {
  return m.derived().size() == 0 ? Scalar(0) : m.cwiseAbs().maxCoeff();
}

template <class A, class B>
Scalar linf_dist(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return linf_norm((a - b).eval());
}

template <class D>
auto clip01(const Eigen::MatrixBase<D>& m) {
  return m.cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
}

// Projects `x` into the l-inf ball of radius `eps` around `center`,
// then into the [0,1] box.
template <class A, class B>
MatX project_ball_box(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& center,
                      Scalar eps) {
  MatX lo = (center.array() - eps).cwiseMax(Scalar(0));
  MatX hi = (center.array() + eps).cwiseMin(Scalar(1));
  return x.cwiseMax(lo).cwiseMin(hi);
}

// Seeded RNG used by every stochastic component; one instance per job keeps
// runs reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  Scalar uniform(Scalar lo, Scalar hi) {
    std::uniform_real_distribution<Scalar> d(lo, hi);
    return d(engine_);
  }

  Scalar normal(Scalar mean, Scalar stddev) {
    std::normal_distribution<Scalar> d(mean, stddev);
    return d(engine_);
  }

  // Uniform integer in [0, n).
  int index(int n) {
    std::uniform_int_distribution<int> d(0, n - 1);
    return d(engine_);
  }

  std::uint64_t next() { return engine_(); }

  VecX normal_vec(Eigen::Index n, Scalar mean, Scalar stddev) {
    VecX v(n);
    std::normal_distribution<Scalar> d(mean, stddev);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = d(engine_);
    return v;
  }

  VecX uniform_vec(Eigen::Index n, Scalar lo, Scalar hi) {
    VecX v(n);
    std::uniform_real_distribution<Scalar> d(lo, hi);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = d(engine_);
    return v;
  }

  template <class C>
  void shuffle(C& c) {
    std::shuffle(c.begin(), c.end(), engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace purebox
