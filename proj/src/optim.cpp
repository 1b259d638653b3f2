#include "fcrl/optim.hpp"

#include <cmath>
#include <cstdio>

namespace fcrl {

AdamState make_adam_state(std::size_t n_params, double beta1, double beta2,
                          double eps) {
  AdamState s;
  s.first_moment.assign(n_params, 0.0);
  s.second_moment.assign(n_params, 0.0);
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.eps = eps;
  return s;
}

void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, double lr) {
  if (params.size() != grads.size() ||
      params.size() != state.first_moment.size()) {
    throw InternalError("adam_step: size mismatch (params " +
                        std::to_string(params.size()) + ", grads " +
                        std::to_string(grads.size()) + ", state " +
                        std::to_string(state.first_moment.size()) + ")");
  }
  if (!(lr > 0.0)) throw ConfigError("adam_step: lr must be > 0");
  state.step_count += 1;
  const double b1 = state.beta1, b2 = state.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double g = grads[i];
    if (!std::isfinite(g)) {
      throw NumericalError("adam_step: non-finite gradient at parameter " +
                           std::to_string(i) + ", step " +
                           std::to_string(state.step_count));
    }
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    params[i] -= lr * (m / bc1) / (std::sqrt(v / bc2) + state.eps);
  }
}

double cosine_lr(long step, long total_steps, double base_lr) {
  if (total_steps < 1) throw ConfigError("cosine_lr: total_steps must be >= 1");
  if (step < 0) throw ConfigError("cosine_lr: negative step");
  if (step > total_steps) {
    static bool warned = false;
    if (!warned) {
      std::fprintf(stderr,
                   "cosine_lr: step %ld past total_steps %ld, clamping\n",
                   step, total_steps);
      warned = true;
    }
    step = total_steps;
  }
  double frac = static_cast<double>(step) / static_cast<double>(total_steps);
  return base_lr * 0.5 * (1.0 + std::cos(M_PI * frac));
}

double grad_check(const std::function<double(const std::vector<double>&)>& loss_fn,
                  const std::vector<double>& params,
                  const std::vector<double>& analytic_grad,
                  double perturbation) {
  if (params.size() != analytic_grad.size()) {
    throw InternalError("grad_check: gradient size mismatch");
  }
  std::vector<double> p = params;
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = p[i];
    p[i] = orig + perturbation;
    double f_plus = loss_fn(p);
    p[i] = orig - perturbation;
    double f_minus = loss_fn(p);
    p[i] = orig;
    double fd = (f_plus - f_minus) / (2.0 * perturbation);
    double a = analytic_grad[i];
    double denom = std::max({std::fabs(a), std::fabs(fd), 1e-3});
    worst = std::max(worst, std::fabs(a - fd) / denom);
  }
  return worst;
}

}  // namespace fcrl
