#include "fcrl/cnp.hpp"

#include <cmath>
#include <numeric>

#include "fcrl/optim.hpp"

namespace fcrl {

CnpParams make_cnp(int x_dim, int y_dim, int d_repr, Rng& rng) {
  CnpParams p;
  p.d_repr = d_repr;
  p.encoder = make_mlp({x_dim + y_dim, d_repr, d_repr, d_repr}, rng);
  p.decoder = make_mlp({x_dim + d_repr, d_repr, d_repr, 2 * y_dim}, rng);
  return p;
}

double softplus(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

namespace {

Matrix context_points(const ContextSet& c) {
  Matrix pts(c.size(), c.x_dim + c.y_dim);
  for (int i = 0; i < c.size(); ++i) {
    double* r = pts.row(i);
    std::copy(c.x_at(i), c.x_at(i) + c.x_dim, r);
    std::copy(c.y_at(i), c.y_at(i) + c.y_dim, r + c.x_dim);
  }
  return pts;
}

void split_mean_var(const Matrix& raw, int y_dim, Matrix& mean, Matrix& var) {
  mean = Matrix(raw.rows(), y_dim);
  var = Matrix(raw.rows(), y_dim);
  for (int r = 0; r < raw.rows(); ++r)
    for (int c = 0; c < y_dim; ++c) {
      mean(r, c) = raw(r, c);
      var(r, c) = softplus(raw(r, y_dim + c)) + kVarianceFloor;
    }
}

}  // namespace

CnpPrediction cnp_forward(const CnpParams& params, const ContextSet& context,
                          const Matrix& target_xs) {
  context.validate();
  const int x_dim = context.x_dim, y_dim = context.y_dim;
  if (x_dim + y_dim != params.encoder.in_dim()) {
    throw ConfigError("cnp_forward: context dims do not match encoder");
  }
  if (target_xs.cols() != x_dim) {
    throw ConfigError("cnp_forward: target x dim mismatch");
  }
  Matrix h = mlp_forward(params.encoder, context_points(context));
  std::vector<int> offsets{0, h.rows()};
  Matrix s = group_mean(h, offsets);

  Matrix dec_in(target_xs.rows(), x_dim + params.d_repr);
  for (int t = 0; t < target_xs.rows(); ++t) {
    double* r = dec_in.row(t);
    std::copy(target_xs.row(t), target_xs.row(t) + x_dim, r);
    std::copy(s.row(0), s.row(0) + params.d_repr, r + x_dim);
  }
  Matrix raw = mlp_forward(params.decoder, dec_in);
  CnpPrediction out;
  split_mean_var(raw, y_dim, out.mean, out.variance);
  return out;
}

double gaussian_nll(const Matrix& mu, const Matrix& var, const Matrix& y) {
  if (mu.rows() != y.rows() || mu.cols() != y.cols() ||
      var.rows() != y.rows() || var.cols() != y.cols()) {
    throw InternalError("gaussian_nll: shape mismatch");
  }
  if (mu.rows() == 0) throw InternalError("gaussian_nll: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double v = var.raw()[i];
    if (!(v > 0.0)) throw InternalError("gaussian_nll: non-positive variance");
    double d = y.raw()[i] - mu.raw()[i];
    total += 0.5 * (std::log(2.0 * M_PI * v) + d * d / v);
  }
  return total / static_cast<double>(y.size());
}

namespace {

struct CnpFlat {
  std::vector<double> values;
  static CnpFlat from(const CnpParams& p) {
    CnpFlat f;
    p.encoder.flatten(f.values);
    p.decoder.flatten(f.values);
    return f;
  }
  void assign_to(CnpParams& p) const {
    std::size_t off = p.encoder.unflatten(values.data(), values.size());
    p.decoder.unflatten(values.data() + off, values.size() - off);
  }
};

}  // namespace

CnpTrainResult train_cnp(const FunctionSampler& data,
                         const TrainConfig& config) {
  config.validate();
  if (data.size() < 1) throw ConfigError("train_cnp: empty dataset");
  const int x_dim = data.x_dim(), y_dim = data.y_dim();

  Rng init_rng = Rng::derive(config.seed, 11);
  Rng data_rng = Rng::derive(config.seed, 12);

  CnpTrainResult result;
  result.params = make_cnp(x_dim, y_dim, config.d_repr, init_rng);
  CnpParams& cnp = result.params;

  const std::size_t n_fn = data.size();
  const long full = static_cast<long>(n_fn / config.batch_size);
  const long rem = static_cast<long>(n_fn % config.batch_size);
  const long batches_per_epoch = full + (rem >= 1 ? 1 : 0);
  const long total_steps = batches_per_epoch * config.epochs;

  CnpFlat flat = CnpFlat::from(cnp);
  AdamState adam = make_adam_state(flat.values.size(), config.adam_beta1,
                                   config.adam_beta2, config.adam_eps);

  std::vector<std::size_t> order(n_fn);
  std::iota(order.begin(), order.end(), std::size_t{0});

  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    data_rng.shuffle(order);
    for (long b = 0; b < batches_per_epoch; ++b) {
      const std::size_t lo = static_cast<std::size_t>(b) * config.batch_size;
      const std::size_t hi = std::min(n_fn, lo + config.batch_size);

      GroupedPoints ctx_pts;
      std::vector<ContextSet> target_sets;
      for (std::size_t fi = lo; fi < hi; ++fi) {
        int n_ctx = config.n_min + static_cast<int>(data_rng.uniform_int(
                        static_cast<std::uint64_t>(config.n_max - config.n_min + 1)));
        int n_tgt = static_cast<int>(data_rng.uniform_int(
            static_cast<std::uint64_t>(config.n_max - n_ctx + 1)));
        ContextSet ctx, tgt;
        data.sample_context_target(order[fi], n_ctx, n_tgt, config.noise_sigma,
                                   data_rng, ctx, tgt);
        // supervise on the disjoint target draw; if it came up empty, fall
        // back to the context points so the function still contributes
        ctx_pts.add_group(ctx);
        target_sets.push_back(tgt.size() > 0 ? std::move(tgt) : std::move(ctx));
      }
      ctx_pts.finalize();

      MlpCache enc_cache;
      Matrix h = mlp_forward(cnp.encoder, ctx_pts.points, &enc_cache);
      Matrix s = group_mean(h, ctx_pts.offsets);

      int m_total = 0;
      for (const ContextSet& t : target_sets) m_total += t.size();
      Matrix dec_in(m_total, x_dim + config.d_repr);
      Matrix y(m_total, y_dim);
      std::vector<int> row_fn(m_total);
      int row = 0;
      for (std::size_t kf = 0; kf < target_sets.size(); ++kf) {
        const ContextSet& t = target_sets[kf];
        for (int i = 0; i < t.size(); ++i, ++row) {
          double* r = dec_in.row(row);
          std::copy(t.x_at(i), t.x_at(i) + x_dim, r);
          std::copy(s.row(static_cast<int>(kf)),
                    s.row(static_cast<int>(kf)) + config.d_repr, r + x_dim);
          std::copy(t.y_at(i), t.y_at(i) + y_dim, y.row(row));
          row_fn[row] = static_cast<int>(kf);
        }
      }

      MlpCache dec_cache;
      Matrix raw = mlp_forward(cnp.decoder, dec_in, &dec_cache);
      Matrix mean, var;
      split_mean_var(raw, y_dim, mean, var);
      double loss = gaussian_nll(mean, var, y);
      if (!std::isfinite(loss)) {
        throw NumericalError("train_cnp: non-finite loss at epoch " +
                             std::to_string(epoch) + " batch " +
                             std::to_string(b));
      }

      // d loss / d raw
      const double inv_n = 1.0 / static_cast<double>(y.size());
      Matrix draw(raw.rows(), raw.cols());
      for (int r = 0; r < raw.rows(); ++r)
        for (int c = 0; c < y_dim; ++c) {
          double v = var(r, c);
          double diff = mean(r, c) - y(r, c);
          draw(r, c) = inv_n * diff / v;
          double dvar = inv_n * 0.5 * (1.0 / v - diff * diff / (v * v));
          double pv = raw(r, y_dim + c);
          double sig = pv > 30.0 ? 1.0 : 1.0 / (1.0 + std::exp(-pv));
          draw(r, y_dim + c) = dvar * sig;
        }

      Mlp dec_grads = make_like_zero(cnp.decoder);
      Matrix d_dec_in = mlp_backward(cnp.decoder, dec_cache, draw, dec_grads);

      Matrix ds(s.rows(), config.d_repr);
      for (int r2 = 0; r2 < m_total; ++r2) {
        const double* src = d_dec_in.row(r2) + x_dim;
        double* dst = ds.row(row_fn[r2]);
        for (int c = 0; c < config.d_repr; ++c) dst[c] += src[c];
      }
      Matrix dh = group_mean_backward(ctx_pts.offsets, ds);
      Mlp enc_grads = make_like_zero(cnp.encoder);
      mlp_backward(cnp.encoder, enc_cache, dh, enc_grads);

      std::vector<double> grads;
      grads.reserve(flat.values.size());
      enc_grads.flatten(grads);
      dec_grads.flatten(grads);

      double lr = config.schedule == "cosine"
                      ? cosine_lr(step, total_steps, config.lr)
                      : config.lr;
      adam_step(flat.values, grads, adam, lr);
      flat.assign_to(cnp);

      result.curve.push_back({step, epoch, lr, loss});
      ++step;
    }
  }
  return result;
}

double evaluate_cnp_fsr(const CnpParams& params, const InstanceSampler& test,
                        int shots, double sigma, std::uint64_t seed) {
  if (test.instance(0).kind != FunctionInstance::Kind::Sinusoid) {
    throw ConfigError("evaluate_cnp_fsr: requires a sinusoid dataset");
  }
  Rng rng = Rng::derive(seed, 51);  // same context stream as the FSR head eval
  constexpr int kGrid = 100;
  Matrix grid(kGrid, 1);
  for (int i = 0; i < kGrid; ++i) grid(i, 0) = -5.0 + 10.0 * i / (kGrid - 1);
  double total = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const FunctionInstance& f = test.instance(i);
    ContextSet ctx = sample_context(f, shots, sigma, rng);
    CnpPrediction pred = cnp_forward(params, ctx, grid);
    for (int gpt = 0; gpt < kGrid; ++gpt) {
      double diff = pred.mean(gpt, 0) - f.eval_sinusoid(grid(gpt, 0));
      total += diff * diff;
    }
  }
  return total / (static_cast<double>(test.size()) * kGrid);
}

Representation CnpReprEncoder::encode_base(const ContextSet& context) const {
  context.validate();
  Matrix h = mlp_forward(params_->encoder, context_points(context));
  std::vector<int> offsets{0, h.rows()};
  Matrix s = group_mean(h, offsets);
  Representation rep;
  rep.kind = Representation::Kind::Base;
  rep.values.assign(s.row(0), s.row(0) + params_->d_repr);
  return rep;
}

Matrix CnpReprEncoder::encode_base_batch(const GroupedPoints& pts) const {
  Matrix h = mlp_forward(params_->encoder, pts.points);
  return group_mean(h, pts.offsets);
}

}  // namespace fcrl
