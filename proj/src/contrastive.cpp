#include "fcrl/contrastive.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "fcrl/hash.hpp"
#include "fcrl/optim.hpp"

namespace fcrl {

TrainConfig TrainConfig::sinusoid_defaults() { return TrainConfig{}; }

TrainConfig TrainConfig::mnist_defaults() {
  TrainConfig c;
  c.family = "mnist";
  c.j_subsets = 10;
  c.temperature = 0.007;
  c.n_min = 2;
  c.n_max = 200;
  c.batch_size = 16;
  c.epochs = 100;
  c.lr = 6e-4;
  c.d_repr = 128;
  c.n_train_functions = 0;  // full training set
  return c;
}

void TrainConfig::validate() const {
  if (family != "sinusoid" && family != "mnist" && family != "discrete") {
    throw ConfigError("config: unknown family '" + family + "'");
  }
  if (j_subsets < 2) throw ConfigError("config: j_subsets must be >= 2");
  if (!(temperature > 0.0)) throw ConfigError("config: temperature must be > 0");
  if (n_min < 1 || n_max < n_min) throw ConfigError("config: bad n_context range");
  if (j_subsets > n_max) {
    throw ConfigError("config: j_subsets exceeds n_max (no splittable context)");
  }
  if (batch_size < 2) throw ConfigError("config: batch_size must be >= 2");
  if (epochs < 1) throw ConfigError("config: epochs must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("config: lr must be > 0");
  if (d_repr < 1) throw ConfigError("config: d_repr must be >= 1");
  if (noise_sigma < 0.0) throw ConfigError("config: noise_sigma must be >= 0");
  if (schedule != "cosine" && schedule != "constant") {
    throw ConfigError("config: schedule must be 'cosine' or 'constant'");
  }
}

nlohmann::json TrainConfig::to_json() const {
  return nlohmann::json{{"family", family},
                        {"j_subsets", j_subsets},
                        {"temperature", temperature},
                        {"n_min", n_min},
                        {"n_max", n_max},
                        {"batch_size", batch_size},
                        {"epochs", epochs},
                        {"adam_beta1", adam_beta1},
                        {"adam_beta2", adam_beta2},
                        {"adam_eps", adam_eps},
                        {"lr", lr},
                        {"schedule", schedule},
                        {"seed", seed},
                        {"critic", to_string(critic)},
                        {"critic_batch_norm", critic_batch_norm},
                        {"d_repr", d_repr},
                        {"noise_sigma", noise_sigma},
                        {"n_train_functions", n_train_functions},
                        {"n_val_functions", n_val_functions},
                        {"n_test_functions", n_test_functions}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.family = j.value("family", c.family);
  c.j_subsets = j.value("j_subsets", c.j_subsets);
  c.temperature = j.value("temperature", c.temperature);
  c.n_min = j.value("n_min", c.n_min);
  c.n_max = j.value("n_max", c.n_max);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.adam_eps = j.value("adam_eps", c.adam_eps);
  c.lr = j.value("lr", c.lr);
  c.schedule = j.value("schedule", c.schedule);
  c.seed = j.value("seed", c.seed);
  if (j.contains("critic")) c.critic = critic_from_string(j.at("critic"));
  c.critic_batch_norm = j.value("critic_batch_norm", c.critic_batch_norm);
  c.d_repr = j.value("d_repr", c.d_repr);
  c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
  c.n_train_functions = j.value("n_train_functions", c.n_train_functions);
  c.n_val_functions = j.value("n_val_functions", c.n_val_functions);
  c.n_test_functions = j.value("n_test_functions", c.n_test_functions);
  return c;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hash_hex(const std::string& s) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(s)));
  return std::string(buf);
}

std::string TrainConfig::content_hash() const {
  // nlohmann::json objects are key-sorted, so dump() is canonical
  return hash_hex(to_json().dump());
}

std::vector<ContextSet> split_observations(const ContextSet& context,
                                           int j_subsets, Rng& rng) {
  context.validate();
  const int n = context.size();
  if (j_subsets < 2) throw ConfigError("split_observations: need J >= 2");
  if (n < j_subsets) {
    throw ConfigError("split_observations: context of " + std::to_string(n) +
                      " points cannot be split into " +
                      std::to_string(j_subsets) + " subsets");
  }
  const int per = n / j_subsets;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);  // also picks which remainder points get dropped
  std::vector<ContextSet> out(j_subsets);
  for (int j = 0; j < j_subsets; ++j) {
    ContextSet& s = out[j];
    s.x_dim = context.x_dim;
    s.y_dim = context.y_dim;
    for (int i = 0; i < per; ++i) {
      int idx = order[j * per + i];
      s.append(context.x_at(idx), context.y_at(idx));
    }
  }
  return out;
}

double cosine_sim(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw InternalError("cosine_sim: dim mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw NumericalError("cosine_sim: zero-norm representation");
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

FcrlLossResult fcrl_loss(const Matrix& z, int k_functions, int j_subsets,
                         double tau) {
  if (!(tau > 0.0)) throw ConfigError("fcrl_loss: temperature must be > 0");
  const int k = k_functions, j = j_subsets;
  if (k < 2 || j < 2) throw ConfigError("fcrl_loss: need K >= 2 and J >= 2");
  if (z.rows() != k * j) {
    throw InternalError("fcrl_loss: expected " + std::to_string(k * j) +
                        " representation rows, got " + std::to_string(z.rows()));
  }
  if (!all_finite(z)) throw NumericalError("fcrl_loss: non-finite representation");
  const int d = z.cols();

  // normalize rows; dead representations are an error, the tiny epsilon only
  // guards rounding
  std::vector<double> norm(z.rows());
  Matrix u(z.rows(), d);
  for (int r = 0; r < z.rows(); ++r) {
    double s = 0.0;
    for (int c = 0; c < d; ++c) s += z(r, c) * z(r, c);
    s = std::sqrt(s);
    if (s <= 1e-6) {
      throw NumericalError("fcrl_loss: representation norm " +
                           std::to_string(s) + " at row " + std::to_string(r));
    }
    norm[r] = s;
    for (int c = 0; c < d; ++c) u(r, c) = z(r, c) / (s + 1e-12);
  }

  const double n_terms = static_cast<double>(k) * j * (j - 1) / 2.0;
  Matrix du(z.rows(), d);
  double loss = 0.0;

  Matrix anchors(k, d), cands(k, d), coef(k, k);
  for (int si = 0; si < j; ++si) {
    for (int sj = si + 1; sj < j; ++sj) {
      for (int m = 0; m < k; ++m) {
        std::copy(u.row(m * j + sj), u.row(m * j + sj) + d, anchors.row(m));
        std::copy(u.row(m * j + si), u.row(m * j + si) + d, cands.row(m));
      }
      Matrix sim = matmul_nt(anchors, cands);  // k x k, anchor row x candidate col
      for (int a = 0; a < k; ++a) {
        double mx = -1e300;
        for (int m = 0; m < k; ++m) mx = std::max(mx, sim(a, m) / tau);
        double se = 0.0;
        for (int m = 0; m < k; ++m) se += std::exp(sim(a, m) / tau - mx);
        const double lse = mx + std::log(se);
        loss += (lse - sim(a, a) / tau) / n_terms;
        for (int m = 0; m < k; ++m) {
          double p = std::exp(sim(a, m) / tau - lse);
          coef(a, m) = (p - (m == a ? 1.0 : 0.0)) / (tau * n_terms);
        }
      }
      Matrix d_anchor = matmul(coef, cands);      // k x d
      Matrix d_cand = matmul_tn(coef, anchors);   // k x d
      for (int m = 0; m < k; ++m) {
        double* dj = du.row(m * j + sj);
        double* di = du.row(m * j + si);
        for (int c = 0; c < d; ++c) {
          dj[c] += d_anchor(m, c);
          di[c] += d_cand(m, c);
        }
      }
    }
  }

  // through the normalization: dz = (du - (du . u) u) / ||z||
  FcrlLossResult res;
  res.loss = loss;
  res.dz = Matrix(z.rows(), d);
  for (int r = 0; r < z.rows(); ++r) {
    const double* ur = u.row(r);
    const double* dur = du.row(r);
    double dot = 0.0;
    for (int c = 0; c < d; ++c) dot += dur[c] * ur[c];
    double* out = res.dz.row(r);
    for (int c = 0; c < d; ++c) {
      out[c] = (dur[c] - dot * ur[c]) / (norm[r] + 1e-12);
    }
  }
  return res;
}

namespace {

struct FlatParams {
  std::vector<double> values;

  static FlatParams from(const EncoderParams& e) {
    FlatParams f;
    e.h.flatten(f.values);
    if (e.rho) e.rho->flatten(f.values);
    return f;
  }
  void assign_to(EncoderParams& e) const {
    std::size_t off = e.h.unflatten(values.data(), values.size());
    if (e.rho) e.rho->unflatten(values.data() + off, values.size() - off);
  }
};

}  // namespace

EncoderTrainResult train_encoder(const FunctionSampler& data,
                                 const TrainConfig& config) {
  config.validate();
  if (data.size() < 2) throw ConfigError("train_encoder: need >= 2 functions");
  const int j = config.j_subsets;
  const int n_lo = std::max(config.n_min, j);  // subsets must be non-empty
  const int n_hi = config.n_max;
  if (n_lo > n_hi) {
    throw ConfigError("train_encoder: n_max " + std::to_string(n_hi) +
                      " below the smallest splittable context size " +
                      std::to_string(n_lo));
  }

  Rng init_rng = Rng::derive(config.seed, 1);
  Rng data_rng = Rng::derive(config.seed, 2);

  EncoderTrainResult result;
  result.encoder = make_encoder(data.x_dim(), data.y_dim(), config.d_repr,
                                config.critic, init_rng,
                                config.critic_batch_norm);
  EncoderParams& enc = result.encoder;

  const std::size_t n_fn = data.size();
  // full batches plus a trailing partial batch when it still has >= 2 functions
  const long full = static_cast<long>(n_fn / config.batch_size);
  const long rem = static_cast<long>(n_fn % config.batch_size);
  const long batches_per_epoch = full + (rem >= 2 ? 1 : 0);
  const long total_steps = batches_per_epoch * config.epochs;
  if (total_steps < 1) throw ConfigError("train_encoder: no usable batches");

  FlatParams flat = FlatParams::from(enc);
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
      const int kb = static_cast<int>(hi - lo);

      GroupedPoints pts;
      for (std::size_t fi = lo; fi < hi; ++fi) {
        int n_ctx = n_lo + static_cast<int>(data_rng.uniform_int(
                               static_cast<std::uint64_t>(n_hi - n_lo + 1)));
        ContextSet ctx = data.sample_points(order[fi], n_ctx,
                                            config.noise_sigma, data_rng);
        for (ContextSet& sub : split_observations(ctx, j, data_rng)) {
          pts.add_group(sub);
        }
      }
      pts.finalize();

      MlpCache h_cache;
      Matrix s = encode_base_batch(enc, pts, &h_cache);
      MlpCache rho_cache;
      Matrix zed = enc.rho ? mlp_forward_train(*enc.rho, s, rho_cache) : s;

      FcrlLossResult lr_res = fcrl_loss(zed, kb, j, config.temperature);
      if (!std::isfinite(lr_res.loss)) {
        throw NumericalError("train_encoder: non-finite loss at epoch " +
                             std::to_string(epoch) + " batch " +
                             std::to_string(b));
      }

      Mlp h_grads = make_like_zero(enc.h);
      Matrix ds = lr_res.dz;
      Mlp rho_grads;
      if (enc.rho) {
        rho_grads = make_like_zero(*enc.rho);
        ds = mlp_backward(*enc.rho, rho_cache, lr_res.dz, rho_grads);
      }
      encode_base_backward(enc, pts, h_cache, ds, h_grads);

      std::vector<double> grads;
      grads.reserve(flat.values.size());
      h_grads.flatten(grads);
      if (enc.rho) rho_grads.flatten(grads);

      double lr = config.schedule == "cosine"
                      ? cosine_lr(step, total_steps, config.lr)
                      : config.lr;
      adam_step(flat.values, grads, adam, lr);
      flat.assign_to(enc);

      result.curve.push_back({step, epoch, lr, lr_res.loss});
      ++step;
    }
  }
  return result;
}

void write_curve_csv(const std::string& path,
                     const std::vector<CurvePoint>& curve) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write curve file: " + path);
  out << "step,epoch,lr,loss\n";
  char buf[128];
  for (const CurvePoint& p : curve) {
    std::snprintf(buf, sizeof buf, "%ld,%d,%.17g,%.17g\n", p.step, p.epoch,
                  p.lr, p.loss);
    out << buf;
  }
}

}  // namespace fcrl
