#pragma once

#include <string>
#include <vector>

#include "fcrl/matrix.hpp"
#include "fcrl/rng.hpp"

namespace fcrl {

// One fully-connected layer, optionally followed by batch normalization
// (normalization sits between the linear map and the ReLU).
struct DenseLayer {
  Matrix w;               // out x in
  std::vector<double> b;  // out

  bool batch_norm = false;
  std::vector<double> gamma, beta;          // trained BN parameters
  std::vector<double> run_mean, run_var;    // running stats, used at eval time

  int in_dim() const { return w.cols(); }
  int out_dim() const { return w.rows(); }
};

// Plain MLP: ReLU on hidden layers, identity output.
struct Mlp {
  std::vector<DenseLayer> layers;

  int in_dim() const { return layers.front().in_dim(); }
  int out_dim() const { return layers.back().out_dim(); }
  std::string arch_spec() const;  // e.g. "2 -> 50 -> 50 -> 50"

  std::size_t param_count() const;
  void flatten(std::vector<double>& out) const;           // appends
  std::size_t unflatten(const double* p, std::size_t n);  // returns consumed
};

// He-style init: weights uniform in +-sqrt(6/in_dim), biases zero.
// hidden_batch_norm adds BN to every hidden layer (gamma=1, beta=0).
Mlp make_mlp(const std::vector<int>& dims, Rng& rng,
             bool hidden_batch_norm = false);

// Zero-valued gradients (or parameters) with the same shape as m.
Mlp make_like_zero(const Mlp& m);

struct MlpCache {
  Matrix input;
  std::vector<Matrix> act;  // act[k] = input to layer k
  std::vector<Matrix> pre;  // linear output of layer k (before BN/ReLU)
  // BN intermediates, empty matrices/vectors for non-BN layers
  std::vector<Matrix> bn_xhat;
  std::vector<std::vector<double>> bn_inv_std;
  bool training = false;
};

// Forward pass. If cache is given it records everything backward needs.
// training=true uses batch statistics for BN layers and updates running stats;
// training=false uses the stored running stats.
Matrix mlp_forward(const Mlp& params, const Matrix& inputs,
                   MlpCache* cache = nullptr, bool training = false);
// Mutating variant so BN running stats can be updated during training.
Matrix mlp_forward_train(Mlp& params, const Matrix& inputs, MlpCache& cache);

// Backward pass: accumulates parameter gradients into grads (shape of params)
// and returns the gradient w.r.t. the inputs.
Matrix mlp_backward(const Mlp& params, const MlpCache& cache,
                    const Matrix& output_grad, Mlp& grads);

}  // namespace fcrl
