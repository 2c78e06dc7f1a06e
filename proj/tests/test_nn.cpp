#include <cmath>
#include <memory>
#include <vector>

#include "doctest.h"
#include "purebox/core/types.hpp"
#include "purebox/nn/layers.hpp"
#include "purebox/nn/loss.hpp"
#include "purebox/nn/optim.hpp"

using namespace purebox;
using namespace purebox::nn;

namespace {

// Scalar objective: L = sum(seed .* layer(x)), so dL/dout = seed.
double objective(Layer& layer, const MatX& x, const MatX& seed) {
  return layer.forward(x, true).cwiseProduct(seed).sum();
}

struct GradCheck {
  double max_rel_input = 0;
  double max_rel_param = 0;
};

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

// Central finite differences vs. analytic gradients on every input and
// parameter coordinate (layers under test are tiny).
GradCheck check_gradients(Layer& layer, MatX x, unsigned rng_seed) {
  Rng rng(rng_seed);
  layer.init(rng);
  MatX out = layer.forward(x, true);
  MatX seed(out.rows(), out.cols());
  for (Eigen::Index i = 0; i < seed.size(); ++i) seed.data()[i] = rng.uniform(-1, 1);

  std::vector<ParamSlot> slots;
  layer.collect_params(slots);
  zero_grads(slots);
  layer.forward(x, true);
  MatX dx = layer.backward(seed);

  std::vector<MatX> param_grads;
  for (auto& s : slots) param_grads.push_back(*s.grad);

  GradCheck result;
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const Scalar keep = x.data()[i];
    x.data()[i] = keep + h;
    const double up = objective(layer, x, seed);
    x.data()[i] = keep - h;
    const double dn = objective(layer, x, seed);
    x.data()[i] = keep;
    const double numeric = (up - dn) / (2 * h);
    result.max_rel_input = std::max(result.max_rel_input, rel_err(numeric, dx.data()[i]));
  }
  for (std::size_t p = 0; p < slots.size(); ++p) {
    MatX* value = slots[p].value;
    for (Eigen::Index i = 0; i < value->size(); ++i) {
      const Scalar keep = value->data()[i];
      value->data()[i] = keep + h;
      const double up = objective(layer, x, seed);
      value->data()[i] = keep - h;
      const double dn = objective(layer, x, seed);
      value->data()[i] = keep;
      const double numeric = (up - dn) / (2 * h);
      result.max_rel_param = std::max(result.max_rel_param, rel_err(numeric, param_grads[p].data()[i]));
    }
  }
  return result;
}

MatX random_batch(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
  Rng rng(seed);
  MatX x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
  return x;
}

}  // namespace

TEST_CASE("dense gradients match finite differences") {
  Dense layer(5, 4);
  auto r = check_gradients(layer, random_batch(5, 3, 1), 11);
  CHECK(r.max_rel_input < 1e-5);
  CHECK(r.max_rel_param < 1e-5);
}

TEST_CASE("conv2d gradients match finite differences") {
  ImageShape in{2, 5, 5};
  SUBCASE("stride 1") {
    Conv2d layer(in, 3, 3, 1, 1);
    auto r = check_gradients(layer, random_batch(in.pixels(), 2, 2), 12);
    CHECK(r.max_rel_input < 1e-5);
    CHECK(r.max_rel_param < 1e-5);
  }
  SUBCASE("stride 2") {
    Conv2d layer(in, 3, 3, 2, 1);
    auto r = check_gradients(layer, random_batch(in.pixels(), 2, 3), 13);
    CHECK(r.max_rel_input < 1e-5);
    CHECK(r.max_rel_param < 1e-5);
  }
}

TEST_CASE("conv transpose gradients match finite differences") {
  ImageShape in{3, 4, 4};
  ConvTranspose2d layer(in, 2, 3, 2, 1, 1);
  CHECK(layer.output_shape().height == 8);
  auto r = check_gradients(layer, random_batch(in.pixels(), 2, 4), 14);
  CHECK(r.max_rel_input < 1e-5);
  CHECK(r.max_rel_param < 1e-5);
}

TEST_CASE("instance norm gradients match finite differences") {
  ImageShape in{3, 4, 4};
  InstanceNorm layer(in);
  auto r = check_gradients(layer, random_batch(in.pixels(), 3, 5), 15);
  CHECK(r.max_rel_input < 1e-4);
  CHECK(r.max_rel_param < 1e-4);
}

TEST_CASE("global average pool gradients match finite differences") {
  ImageShape in{4, 3, 3};
  GlobalAvgPool layer(in);
  auto r = check_gradients(layer, random_batch(in.pixels(), 2, 6), 16);
  CHECK(r.max_rel_input < 1e-6);
}

TEST_CASE("residual add and concat skip gradients") {
  ImageShape in{2, 4, 4};
  SUBCASE("residual") {
    auto branch = std::make_unique<Sequential>();
    branch->emplace<Conv2d>(in, 2, 3, 1, 1);
    branch->emplace<ReLU>();
    branch->emplace<Conv2d>(in, 2, 3, 1, 1);
    ResidualAdd layer(std::move(branch));
    auto r = check_gradients(layer, random_batch(in.pixels(), 2, 7), 17);
    CHECK(r.max_rel_input < 1e-5);
    CHECK(r.max_rel_param < 1e-5);
  }
  SUBCASE("concat") {
    auto branch = std::make_unique<Sequential>();
    branch->emplace<Conv2d>(in, 3, 3, 1, 1);
    branch->emplace<ReLU>();
    ConcatSkip layer(in, std::move(branch));
    CHECK(layer.output_shape().channels == 5);
    auto r = check_gradients(layer, random_batch(in.pixels(), 2, 8), 18);
    CHECK(r.max_rel_input < 1e-5);
    CHECK(r.max_rel_param < 1e-5);
  }
}

TEST_CASE("softmax cross entropy gradient and value") {
  Rng rng(77);
  MatX logits(4, 6);
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = rng.uniform(-2, 2);
  std::vector<int> labels = {0, 1, 2, 3, 1, 2};

  auto lg = softmax_cross_entropy(logits, labels);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index i = rng.index(static_cast<int>(logits.size()));
    MatX lp = logits, lm = logits;
    lp.data()[i] += h;
    lm.data()[i] -= h;
    const double numeric =
        (softmax_cross_entropy(lp, labels).loss - softmax_cross_entropy(lm, labels).loss) / (2 * h);
    CHECK(rel_err(numeric, lg.dlogits.data()[i]) < 1e-4);
  }

  // uniform logits on k classes give loss log(k)
  MatX uniform = MatX::Zero(5, 3);
  auto u = softmax_cross_entropy(uniform, {0, 4, 2});
  CHECK(u.loss == doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("sequential end-to-end gradient through a small cnn") {
  ImageShape in{3, 8, 8};
  Sequential net;
  auto* c1 = net.emplace<Conv2d>(in, 4, 3, 2, 1);
  net.emplace<ReLU>();
  auto* c2 = net.emplace<Conv2d>(c1->output_shape(), 6, 3, 2, 1);
  net.emplace<ReLU>();
  net.emplace<GlobalAvgPool>(c2->output_shape());
  net.emplace<Dense>(6, 3);

  Rng rng(99);
  net.init(rng);
  MatX x = random_batch(in.pixels(), 4, 9).array() * 0.5 + 0.5;
  std::vector<int> labels = {0, 1, 2, 1};

  auto loss_fn = [&]() { return softmax_cross_entropy(net.forward(x, true), labels).loss; };
  auto lg = softmax_cross_entropy(net.forward(x, true), labels);
  MatX dx = net.backward(lg.dlogits);

  const double h = 1e-6;
  Rng pick(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index i = pick.index(static_cast<int>(x.size()));
    const Scalar keep = x.data()[i];
    x.data()[i] = keep + h;
    const double up = loss_fn();
    x.data()[i] = keep - h;
    const double dn = loss_fn();
    x.data()[i] = keep;
    const double numeric = (up - dn) / (2 * h);
    CHECK(rel_err(numeric, dx.data()[i]) < 1e-3);
  }
}

TEST_CASE("optimizers reduce a quadratic") {
  // minimize ||w - 3||^2 elementwise
  MatX w = MatX::Zero(4, 4);
  MatX g(4, 4);
  std::vector<ParamSlot> slots = {{&w, &g}};

  SUBCASE("sgd momentum") {
    SgdMomentum opt(0.9);
    for (int i = 0; i < 200; ++i) {
      g = 2 * (w.array() - 3.0).matrix();
      opt.step(slots, 0.01);
    }
    CHECK((w.array() - 3.0).abs().maxCoeff() < 1e-3);
  }
  SUBCASE("adam") {
    Adam opt(0.05);
    for (int i = 0; i < 400; ++i) {
      g = 2 * (w.array() - 3.0).matrix();
      opt.step(slots);
    }
    CHECK((w.array() - 3.0).abs().maxCoeff() < 1e-2);
  }
}
