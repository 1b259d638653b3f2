#pragma once

#include "fcrl/contrastive.hpp"
#include "fcrl/encoder.hpp"

namespace fcrl {

// Conditional-neural-process baseline: encoder identical to the contrastive
// pointwise net, mean pooling, and a Gaussian decoder over (x_target, s).
struct CnpParams {
  Mlp encoder;  // (x_dim + y_dim) -> d_repr -> d_repr -> d_repr
  Mlp decoder;  // (x_dim + d_repr) -> h -> h -> 2*y_dim (mean, pre-variance)
  int d_repr = 50;
};

constexpr double kVarianceFloor = 1e-6;

CnpParams make_cnp(int x_dim, int y_dim, int d_repr, Rng& rng);

double softplus(double x);

struct CnpPrediction {
  Matrix mean;      // targets x y_dim
  Matrix variance;  // targets x y_dim, softplus(pre) + floor
};

CnpPrediction cnp_forward(const CnpParams& params, const ContextSet& context,
                          const Matrix& target_xs);

// 0.5 * (log(2*pi*var) + (y - mu)^2 / var), averaged over all entries.
double gaussian_nll(const Matrix& mu, const Matrix& var, const Matrix& y);

struct CnpTrainResult {
  CnpParams params;
  std::vector<CurvePoint> curve;
};

// Joint encoder+decoder training on predictive likelihood, with the same
// batching and schedule machinery as the contrastive trainer. Targets are the
// context points plus an independent disjoint draw.
CnpTrainResult train_cnp(const FunctionSampler& data, const TrainConfig& config);

// Table-1-style CNP regression metric: mean squared error of the CNP's own
// predictive mean over a dense 100-point grid in [-5, 5] against the
// noiseless function, given `shots` context points per test function.
double evaluate_cnp_fsr(const CnpParams& params, const InstanceSampler& test,
                        int shots, double sigma, std::uint64_t seed);

// Pooled encoder output as a frozen base representation (probe comparisons).
class CnpReprEncoder : public ReprEncoder {
 public:
  explicit CnpReprEncoder(const CnpParams& params) : params_(&params) {}
  int d_repr() const override { return params_->d_repr; }
  Representation encode_base(const ContextSet& context) const override;
  Matrix encode_base_batch(const GroupedPoints& pts) const override;

 private:
  const CnpParams* params_;
};

}  // namespace fcrl
