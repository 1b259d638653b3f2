#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "fcrl/errors.hpp"

namespace fcrl {

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  long step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam_state(std::size_t n_params, double beta1 = 0.9,
                          double beta2 = 0.999, double eps = 1e-8);

// Bias-corrected Adam update, in place. Throws NumericalError on a non-finite
// gradient, naming the parameter index and step.
void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, double lr);

// base_lr * 0.5 * (1 + cos(pi * step / total_steps)).
// step > total_steps clamps to the final value (0) and warns on stderr once.
double cosine_lr(long step, long total_steps, double base_lr);

// Central-difference gradient check. Returns the worst relative error between
// analytic and numerical gradients; the denominator is floored so that
// near-zero gradients compare absolutely.
double grad_check(const std::function<double(const std::vector<double>&)>& loss_fn,
                  const std::vector<double>& params,
                  const std::vector<double>& analytic_grad,
                  double perturbation = 1e-6);

}  // namespace fcrl
