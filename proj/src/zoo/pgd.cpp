#include "purebox/zoo/pgd.hpp"

#include "purebox/nn/loss.hpp"

namespace purebox::zoo {

namespace {

MatX loss_input_gradient(nn::Sequential& net, const MatX& x, const std::vector<int>& labels) {
  const MatX logits = net.forward(x, false);
  auto lg = nn::softmax_cross_entropy(logits, labels);
  return net.backward(lg.dlogits);
}

}  // namespace

MatX pgd_untargeted(nn::Sequential& net, const MatX& x, const std::vector<int>& labels, double eps,
                    double step_size, int steps, Rng& rng, const PgdStepObserver& observer) {
  MatX iterate = x;
  if (eps > 0) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      iterate.data()[i] += rng.uniform(static_cast<Scalar>(-eps), static_cast<Scalar>(eps));
    }
  }
  iterate = project_ball_box(iterate, x, static_cast<Scalar>(eps));
  if (observer) observer(iterate);
  for (int s = 0; s < steps; ++s) {
    const MatX grad = loss_input_gradient(net, iterate, labels);
    iterate += static_cast<Scalar>(step_size) * grad.array().sign().matrix();
    iterate = project_ball_box(iterate, x, static_cast<Scalar>(eps));
    if (observer) observer(iterate);
  }
  return iterate;
}

MatX pgd_targeted(nn::Sequential& net, const MatX& x, const std::vector<int>& targets, double eps,
                  double step_size, int steps, const PgdStepObserver& observer) {
  MatX iterate = x;
  for (int s = 0; s < steps; ++s) {
    const MatX grad = loss_input_gradient(net, iterate, targets);
    iterate -= static_cast<Scalar>(step_size) * grad.array().sign().matrix();
    iterate = project_ball_box(iterate, x, static_cast<Scalar>(eps));
    if (observer) observer(iterate);
  }
  return iterate;
}

}  // namespace purebox::zoo
