#pragma once

#include <functional>
#include <vector>

#include "purebox/core/types.hpp"
#include "purebox/nn/layers.hpp"

namespace purebox::zoo {

// Called after every PGD step with the current iterate; used by tests to
// assert ball/box containment per step.
using PgdStepObserver = std::function<void(const MatX& iterate)>;

// Maximizes cross-entropy against `labels`. Random start inside the ball,
// sign steps, projection into the eps-ball around x and into [0,1].
MatX pgd_untargeted(nn::Sequential& net, const MatX& x, const std::vector<int>& labels, double eps,
                    double step_size, int steps, Rng& rng,
                    const PgdStepObserver& observer = nullptr);

// Minimizes cross-entropy toward `targets`. Zero initialization so small-eps
// iterates stay close to x.
MatX pgd_targeted(nn::Sequential& net, const MatX& x, const std::vector<int>& targets, double eps,
                  double step_size, int steps, const PgdStepObserver& observer = nullptr);

}  // namespace purebox::zoo
