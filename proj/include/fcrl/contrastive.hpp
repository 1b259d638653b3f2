#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fcrl/encoder.hpp"

#include "json.hpp"

namespace fcrl {

// Hyperparameters for contrastive (and, reused, CNP) training. Defaults are
// the sinusoid recipe; mnist_defaults() switches to the image recipe.
struct TrainConfig {
  std::string family = "sinusoid";  // sinusoid | mnist | discrete
  int j_subsets = 2;
  double temperature = 0.07;
  int n_min = 2;
  int n_max = 20;
  int batch_size = 256;
  int epochs = 30;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double lr = 3e-4;
  std::string schedule = "cosine";
  std::uint64_t seed = 1;
  CriticKind critic = CriticKind::Nonlinear;
  bool critic_batch_norm = false;
  int d_repr = 50;
  double noise_sigma = 0.0;
  int n_train_functions = 20000;  // sinusoid function count / MNIST subsample (0 = all)
  int n_val_functions = 1000;
  int n_test_functions = 1000;

  static TrainConfig sinusoid_defaults();
  static TrainConfig mnist_defaults();

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  std::string content_hash() const;  // stable 16-hex-digit digest
};

// Uniformly random partition into j_subsets disjoint equal-size subsets.
// N not divisible by J drops N mod J points uniformly at random; N < J errors.
std::vector<ContextSet> split_observations(const ContextSet& context,
                                           int j_subsets, Rng& rng);

double cosine_sim(const std::vector<double>& a, const std::vector<double>& b);

// Contrastive loss over z: (K*J) x D projected representations, row k*J + j.
// For every anchor (k, j) and subset index i < j, candidates are subset i of
// all K functions; the mean of -log softmax at the matching function is
// returned together with the exact gradient w.r.t. z.
struct FcrlLossResult {
  double loss = 0.0;
  Matrix dz;
};
FcrlLossResult fcrl_loss(const Matrix& z, int k_functions, int j_subsets,
                         double tau);

struct CurvePoint {
  long step = 0;
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
};

struct EncoderTrainResult {
  EncoderParams encoder;
  std::vector<CurvePoint> curve;
};

// Minibatch Adam with cosine decay on fcrl_loss. Deterministic in
// (config, seed); per-function context sizes are resampled every epoch.
EncoderTrainResult train_encoder(const FunctionSampler& data,
                                 const TrainConfig& config);

void write_curve_csv(const std::string& path,
                     const std::vector<CurvePoint>& curve);

}  // namespace fcrl
