#include "fcrl/mlp.hpp"

#include <cmath>

namespace fcrl {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;

Matrix linear_forward(const DenseLayer& layer, const Matrix& a) {
  if (a.cols() != layer.in_dim()) {
    throw ConfigError("mlp_forward: input has " + std::to_string(a.cols()) +
                      " columns, layer expects " +
                      std::to_string(layer.in_dim()));
  }
  Matrix z = matmul_nt(a, layer.w);  // B x out
  for (int r = 0; r < z.rows(); ++r) {
    double* zr = z.row(r);
    for (int c = 0; c < z.cols(); ++c) zr[c] += layer.b[c];
  }
  return z;
}

// In-place BN on z. Returns (xhat, inv_std) through the out-parameters when
// batch statistics are used; eval mode normalizes with running stats.
void bn_forward(const DenseLayer& layer, Matrix& z, bool training,
                Matrix* xhat_out, std::vector<double>* inv_std_out,
                std::vector<double>* batch_mean_out,
                std::vector<double>* batch_var_out) {
  const int b = z.rows(), d = z.cols();
  std::vector<double> mean(d, 0.0), var(d, 0.0), inv_std(d, 0.0);
  if (training) {
    for (int r = 0; r < b; ++r)
      for (int c = 0; c < d; ++c) mean[c] += z(r, c);
    for (int c = 0; c < d; ++c) mean[c] /= b;
    for (int r = 0; r < b; ++r)
      for (int c = 0; c < d; ++c) {
        double t = z(r, c) - mean[c];
        var[c] += t * t;
      }
    for (int c = 0; c < d; ++c) var[c] /= b;
  } else {
    mean = layer.run_mean;
    var = layer.run_var;
  }
  for (int c = 0; c < d; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + kBnEps);

  Matrix xhat(b, d);
  for (int r = 0; r < b; ++r)
    for (int c = 0; c < d; ++c) {
      xhat(r, c) = (z(r, c) - mean[c]) * inv_std[c];
      z(r, c) = layer.gamma[c] * xhat(r, c) + layer.beta[c];
    }
  if (xhat_out) *xhat_out = std::move(xhat);
  if (inv_std_out) *inv_std_out = std::move(inv_std);
  if (batch_mean_out) *batch_mean_out = std::move(mean);
  if (batch_var_out) *batch_var_out = std::move(var);
}

Matrix forward_impl(const Mlp& params, Mlp* mutable_params, const Matrix& x,
                    MlpCache* cache, bool training) {
  const int n_layers = static_cast<int>(params.layers.size());
  if (n_layers == 0) throw InternalError("mlp_forward: empty network");
  if (cache) {
    cache->input = x;
    cache->act.assign(1, x);
    cache->pre.clear();
    cache->bn_xhat.assign(n_layers, Matrix());
    cache->bn_inv_std.assign(n_layers, {});
    cache->training = training;
  }
  Matrix a = x;
  for (int k = 0; k < n_layers; ++k) {
    const DenseLayer& layer = params.layers[k];
    Matrix z = linear_forward(layer, a);
    if (cache) cache->pre.push_back(z);
    if (layer.batch_norm) {
      Matrix xhat;
      std::vector<double> inv_std, bmean, bvar;
      bn_forward(layer, z, training, &xhat, &inv_std, &bmean, &bvar);
      if (cache) {
        cache->bn_xhat[k] = std::move(xhat);
        cache->bn_inv_std[k] = inv_std;
      }
      if (mutable_params && training) {
        DenseLayer& ml = mutable_params->layers[k];
        for (int c = 0; c < layer.out_dim(); ++c) {
          ml.run_mean[c] = (1.0 - kBnMomentum) * ml.run_mean[c] + kBnMomentum * bmean[c];
          ml.run_var[c] = (1.0 - kBnMomentum) * ml.run_var[c] + kBnMomentum * bvar[c];
        }
      }
    }
    if (k < n_layers - 1) {
      for (double& v : z.raw()) v = v > 0.0 ? v : 0.0;  // ReLU
    }
    a = std::move(z);
    if (cache) cache->act.push_back(a);
  }
  return a;
}

}  // namespace

std::string Mlp::arch_spec() const {
  std::string s = std::to_string(in_dim());
  for (const DenseLayer& l : layers) s += " -> " + std::to_string(l.out_dim());
  return s;
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers) {
    n += l.w.size() + l.b.size();
    if (l.batch_norm) n += l.gamma.size() + l.beta.size();
  }
  return n;
}

void Mlp::flatten(std::vector<double>& out) const {
  for (const DenseLayer& l : layers) {
    out.insert(out.end(), l.w.raw().begin(), l.w.raw().end());
    out.insert(out.end(), l.b.begin(), l.b.end());
    if (l.batch_norm) {
      out.insert(out.end(), l.gamma.begin(), l.gamma.end());
      out.insert(out.end(), l.beta.begin(), l.beta.end());
    }
  }
}

std::size_t Mlp::unflatten(const double* p, std::size_t n) {
  std::size_t need = param_count();
  if (n < need) throw InternalError("Mlp::unflatten: buffer too small");
  std::size_t off = 0;
  for (DenseLayer& l : layers) {
    std::copy(p + off, p + off + l.w.size(), l.w.data());
    off += l.w.size();
    std::copy(p + off, p + off + l.b.size(), l.b.data());
    off += l.b.size();
    if (l.batch_norm) {
      std::copy(p + off, p + off + l.gamma.size(), l.gamma.begin());
      off += l.gamma.size();
      std::copy(p + off, p + off + l.beta.size(), l.beta.begin());
      off += l.beta.size();
    }
  }
  return off;
}

Mlp make_mlp(const std::vector<int>& dims, Rng& rng, bool hidden_batch_norm) {
  if (dims.size() < 2) throw ConfigError("make_mlp: need at least one layer");
  Mlp m;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    DenseLayer l;
    l.w = Matrix(dims[k + 1], dims[k]);
    double bound = std::sqrt(6.0 / dims[k]);
    for (double& v : l.w.raw()) v = rng.uniform(-bound, bound);
    l.b.assign(dims[k + 1], 0.0);
    bool hidden = k + 2 < dims.size();
    if (hidden && hidden_batch_norm) {
      l.batch_norm = true;
      l.gamma.assign(dims[k + 1], 1.0);
      l.beta.assign(dims[k + 1], 0.0);
      l.run_mean.assign(dims[k + 1], 0.0);
      l.run_var.assign(dims[k + 1], 1.0);
    }
    m.layers.push_back(std::move(l));
  }
  return m;
}

Mlp make_like_zero(const Mlp& m) {
  Mlp z = m;
  for (DenseLayer& l : z.layers) {
    std::fill(l.w.raw().begin(), l.w.raw().end(), 0.0);
    std::fill(l.b.begin(), l.b.end(), 0.0);
    if (l.batch_norm) {
      std::fill(l.gamma.begin(), l.gamma.end(), 0.0);
      std::fill(l.beta.begin(), l.beta.end(), 0.0);
    }
  }
  return z;
}

Matrix mlp_forward(const Mlp& params, const Matrix& inputs, MlpCache* cache,
                   bool training) {
  return forward_impl(params, nullptr, inputs, cache, training);
}

Matrix mlp_forward_train(Mlp& params, const Matrix& inputs, MlpCache& cache) {
  return forward_impl(params, &params, inputs, &cache, true);
}

Matrix mlp_backward(const Mlp& params, const MlpCache& cache,
                    const Matrix& output_grad, Mlp& grads) {
  const int n_layers = static_cast<int>(params.layers.size());
  if (static_cast<int>(cache.act.size()) != n_layers + 1 ||
      static_cast<int>(cache.pre.size()) != n_layers) {
    throw InternalError("mlp_backward: cache does not match network depth");
  }
  if (output_grad.rows() != cache.act.back().rows() ||
      output_grad.cols() != params.out_dim()) {
    throw InternalError("mlp_backward: output_grad shape " +
                        shape_str(output_grad) + " does not match cache");
  }
  if (grads.layers.size() != params.layers.size()) {
    throw InternalError("mlp_backward: grads shape mismatch");
  }

  Matrix d = output_grad;
  for (int k = n_layers - 1; k >= 0; --k) {
    const DenseLayer& layer = params.layers[k];
    DenseLayer& g = grads.layers[k];
    if (k < n_layers - 1) {
      const Matrix& out = cache.act[k + 1];  // post-ReLU
      for (int r = 0; r < d.rows(); ++r)
        for (int c = 0; c < d.cols(); ++c)
          if (out(r, c) <= 0.0) d(r, c) = 0.0;
    }
    if (layer.batch_norm) {
      const Matrix& xhat = cache.bn_xhat[k];
      const std::vector<double>& inv_std = cache.bn_inv_std[k];
      const int b = d.rows(), w = d.cols();
      std::vector<double> sum_d(w, 0.0), sum_dx(w, 0.0);
      for (int r = 0; r < b; ++r)
        for (int c = 0; c < w; ++c) {
          g.gamma[c] += d(r, c) * xhat(r, c);
          g.beta[c] += d(r, c);
        }
      // d wrt xhat
      Matrix dxhat(b, w);
      for (int r = 0; r < b; ++r)
        for (int c = 0; c < w; ++c) {
          dxhat(r, c) = d(r, c) * layer.gamma[c];
          sum_d[c] += dxhat(r, c);
          sum_dx[c] += dxhat(r, c) * xhat(r, c);
        }
      if (cache.training) {
        for (int r = 0; r < b; ++r)
          for (int c = 0; c < w; ++c)
            d(r, c) = inv_std[c] / b *
                      (b * dxhat(r, c) - sum_d[c] - xhat(r, c) * sum_dx[c]);
      } else {
        for (int r = 0; r < b; ++r)
          for (int c = 0; c < w; ++c) d(r, c) = dxhat(r, c) * inv_std[c];
      }
    }
    const Matrix& a = cache.act[k];
    Matrix dw = matmul_tn(d, a);  // out x in
    for (std::size_t i = 0; i < dw.size(); ++i) g.w.raw()[i] += dw.raw()[i];
    for (int r = 0; r < d.rows(); ++r)
      for (int c = 0; c < d.cols(); ++c) g.b[c] += d(r, c);
    d = matmul(d, layer.w);  // B x in
  }
  return d;
}

}  // namespace fcrl
