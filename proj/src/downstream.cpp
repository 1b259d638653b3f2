#include "fcrl/downstream.hpp"

#include <cmath>
#include <numeric>

#include "fcrl/cnp.hpp"
#include "fcrl/optim.hpp"

namespace fcrl {

std::string to_string(HeadTask t) {
  switch (t) {
    case HeadTask::Fsr: return "fsr";
    case HeadTask::Fspi: return "fspi";
    case HeadTask::Fsic: return "fsic";
    case HeadTask::Fscc: return "fscc";
  }
  throw InternalError("to_string: bad HeadTask");
}

HeadTask head_task_from_string(const std::string& s) {
  if (s == "fsr") return HeadTask::Fsr;
  if (s == "fspi") return HeadTask::Fspi;
  if (s == "fsic") return HeadTask::Fsic;
  if (s == "fscc") return HeadTask::Fscc;
  throw ConfigError("unknown task: '" + s + "'");
}

HeadTrainConfig fsr_head_defaults() { return HeadTrainConfig{}; }

HeadTrainConfig fsic_head_defaults() {
  HeadTrainConfig c;
  c.epochs = 100;
  c.batch_size = 16;
  c.n_max = 200;
  return c;
}

HeadTrainConfig fspi_probe_defaults() {
  HeadTrainConfig c;
  c.epochs = 1;
  c.batch_size = 16;
  c.lr = 1e-2;
  return c;
}

HeadTrainConfig fscc_probe_defaults() {
  HeadTrainConfig c;
  c.epochs = 1;
  c.batch_size = 8;
  c.lr = 1e-3;
  c.n_max = 200;
  return c;
}

namespace {

void require_base(const Representation& rep, const char* where) {
  if (rep.kind != Representation::Kind::Base) {
    throw InternalError(std::string(where) +
                        ": heads consume base representations only");
  }
}

void require_sinusoid(const InstanceSampler& s, const char* where) {
  if (s.instance(0).kind != FunctionInstance::Kind::Sinusoid) {
    throw ConfigError(std::string(where) + ": requires a sinusoid dataset");
  }
}

void require_image(const InstanceSampler& s, const char* where) {
  if (s.instance(0).kind != FunctionInstance::Kind::Image) {
    throw ConfigError(std::string(where) + ": requires an image dataset");
  }
}

struct Batches {
  std::size_t n;
  int batch;
  long per_epoch() const {
    return static_cast<long>((n + batch - 1) / batch);
  }
};

// Standardize the feature block (columns [col0, col0 + d_repr)) in place.
void standardize_rows(const DecoderHead& head, Matrix& m, int col0) {
  if (head.feat_mu.empty()) return;
  for (int r = 0; r < m.rows(); ++r) {
    double* row = m.row(r);
    for (int c = 0; c < head.d_repr; ++c) {
      row[col0 + c] = (row[col0 + c] - head.feat_mu[c]) * head.feat_isd[c];
    }
  }
}

// Fits per-dimension mean/std of the frozen features on context draws from
// the training functions; raw encoder outputs have arbitrary scale and the
// heads converge far more reliably on standardized inputs.
void fit_feature_stats(DecoderHead& head, const ReprEncoder& encoder,
                       const InstanceSampler& train,
                       const HeadTrainConfig& cfg, int fixed_n = 0) {
  const int d = head.d_repr;
  Rng rng = Rng::derive(cfg.seed, 20);
  const std::size_t n_fit = std::min<std::size_t>(train.size(), 2048);
  GroupedPoints pts;
  for (std::size_t i = 0; i < n_fit; ++i) {
    int n = fixed_n > 0
                ? fixed_n
                : cfg.n_min + static_cast<int>(rng.uniform_int(
                      static_cast<std::uint64_t>(cfg.n_max - cfg.n_min + 1)));
    pts.add_group(sample_context(train.instance(i), n, cfg.noise_sigma, rng));
  }
  pts.finalize();
  Matrix s = encoder.encode_base_batch(pts);
  head.feat_mu.assign(d, 0.0);
  head.feat_isd.assign(d, 1.0);
  std::vector<double> sum(d, 0.0), sum2(d, 0.0);
  for (int r = 0; r < s.rows(); ++r) {
    for (int c = 0; c < d; ++c) {
      sum[c] += s(r, c);
      sum2[c] += s(r, c) * s(r, c);
    }
  }
  for (int c = 0; c < d; ++c) {
    head.feat_mu[c] = sum[c] / s.rows();
    double var = sum2[c] / s.rows() - head.feat_mu[c] * head.feat_mu[c];
    head.feat_isd[c] = 1.0 / std::sqrt(std::max(var, 0.0) + 1e-8);
  }
}

// Shared FSR/FSIC trainer: Gaussian NLL on (context -> frozen repr, target x).
DecoderHead train_gaussian_head(const ReprEncoder& encoder,
                                const InstanceSampler& train,
                                const HeadTrainConfig& cfg, HeadTask task) {
  const int x_dim = train.x_dim();
  const int d_repr = encoder.d_repr();
  const int width = d_repr;
  Rng init_rng = Rng::derive(cfg.seed, 21);
  Rng data_rng = Rng::derive(cfg.seed, 22);

  DecoderHead head;
  head.task = task;
  head.d_repr = d_repr;
  head.x_dim = x_dim;
  head.net = make_mlp({x_dim + d_repr, width, width, 2}, init_rng);
  fit_feature_stats(head, encoder, train, cfg);

  std::vector<double> flat;
  head.net.flatten(flat);
  AdamState adam = make_adam_state(flat.size());

  const std::size_t n_fn = train.size();
  Batches batches{n_fn, cfg.batch_size};
  const long total_steps = batches.per_epoch() * cfg.epochs;

  std::vector<std::size_t> order(n_fn);
  std::iota(order.begin(), order.end(), std::size_t{0});

  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    data_rng.shuffle(order);
    for (long b = 0; b < batches.per_epoch(); ++b) {
      const std::size_t lo = static_cast<std::size_t>(b) * cfg.batch_size;
      const std::size_t hi = std::min(n_fn, lo + cfg.batch_size);

      GroupedPoints ctx_pts;
      std::vector<ContextSet> target_sets;
      for (std::size_t fi = lo; fi < hi; ++fi) {
        int n_ctx = cfg.n_min + static_cast<int>(data_rng.uniform_int(
                        static_cast<std::uint64_t>(cfg.n_max - cfg.n_min + 1)));
        int n_tgt = static_cast<int>(data_rng.uniform_int(
            static_cast<std::uint64_t>(cfg.n_max - n_ctx + 1)));
        ContextSet ctx, tgt;
        train.sample_context_target(order[fi], n_ctx, n_tgt, cfg.noise_sigma,
                                    data_rng, ctx, tgt);
        // supervise on the disjoint target draw; fall back to the context
        // points when the draw is empty so the function still contributes
        ctx_pts.add_group(ctx);
        target_sets.push_back(tgt.size() > 0 ? std::move(tgt) : std::move(ctx));
      }
      ctx_pts.finalize();
      Matrix s = encoder.encode_base_batch(ctx_pts);  // frozen: no grad path
      standardize_rows(head, s, 0);

      int m_total = 0;
      for (const ContextSet& t : target_sets) m_total += t.size();
      Matrix dec_in(m_total, x_dim + d_repr);
      Matrix y(m_total, 1);
      int row = 0;
      for (std::size_t kf = 0; kf < target_sets.size(); ++kf) {
        const ContextSet& t = target_sets[kf];
        for (int i = 0; i < t.size(); ++i, ++row) {
          double* r = dec_in.row(row);
          std::copy(t.x_at(i), t.x_at(i) + x_dim, r);
          std::copy(s.row(static_cast<int>(kf)),
                    s.row(static_cast<int>(kf)) + d_repr, r + x_dim);
          y(row, 0) = *t.y_at(i);
        }
      }

      MlpCache cache;
      Matrix raw = mlp_forward(head.net, dec_in, &cache);
      const double inv_n = 1.0 / raw.rows();
      Matrix draw(raw.rows(), 2);
      for (int r = 0; r < raw.rows(); ++r) {
        double v = softplus(raw(r, 1)) + kVarianceFloor;
        double diff = raw(r, 0) - y(r, 0);
        draw(r, 0) = inv_n * diff / v;
        double dvar = inv_n * 0.5 * (1.0 / v - diff * diff / (v * v));
        double pv = raw(r, 1);
        double sig = pv > 30.0 ? 1.0 : 1.0 / (1.0 + std::exp(-pv));
        draw(r, 1) = dvar * sig;
      }
      Mlp grads = make_like_zero(head.net);
      mlp_backward(head.net, cache, draw, grads);

      std::vector<double> g;
      g.reserve(flat.size());
      grads.flatten(g);
      adam_step(flat, g, adam, cosine_lr(step, total_steps, cfg.lr));
      head.net.unflatten(flat.data(), flat.size());
      ++step;
    }
  }
  return head;
}

Matrix encode_contexts(const ReprEncoder& encoder,
                       const InstanceSampler& data,
                       const std::vector<std::size_t>& idxs, int n_points,
                       double sigma, Rng& rng) {
  GroupedPoints pts;
  for (std::size_t i : idxs) {
    pts.add_group(sample_context(data.instance(i), n_points, sigma, rng));
  }
  pts.finalize();
  return encoder.encode_base_batch(pts);
}

}  // namespace

void head_predict_gaussian(const DecoderHead& head, const Representation& base,
                           const Matrix& target_xs, Matrix& mean, Matrix& var) {
  require_base(base, "head_predict_gaussian");
  if (head.task != HeadTask::Fsr && head.task != HeadTask::Fsic) {
    throw InternalError("head_predict_gaussian: head is not a Gaussian decoder");
  }
  if (static_cast<int>(base.values.size()) != head.d_repr) {
    throw ConfigError("head_predict_gaussian: representation dim mismatch");
  }
  Matrix in(target_xs.rows(), head.x_dim + head.d_repr);
  for (int t = 0; t < target_xs.rows(); ++t) {
    double* r = in.row(t);
    std::copy(target_xs.row(t), target_xs.row(t) + head.x_dim, r);
    std::copy(base.values.begin(), base.values.end(), r + head.x_dim);
  }
  standardize_rows(head, in, head.x_dim);
  Matrix raw = mlp_forward(head.net, in);
  mean = Matrix(raw.rows(), 1);
  var = Matrix(raw.rows(), 1);
  for (int r = 0; r < raw.rows(); ++r) {
    mean(r, 0) = raw(r, 0);
    var(r, 0) = softplus(raw(r, 1)) + kVarianceFloor;
  }
}

std::vector<double> head_predict_vector(const DecoderHead& head,
                                        const Representation& base) {
  require_base(base, "head_predict_vector");
  if (head.task != HeadTask::Fspi && head.task != HeadTask::Fscc) {
    throw InternalError("head_predict_vector: head is not linear");
  }
  Matrix in(1, head.d_repr);
  std::copy(base.values.begin(), base.values.end(), in.data());
  standardize_rows(head, in, 0);
  Matrix out = mlp_forward(head.net, in);
  return std::vector<double>(out.data(), out.data() + out.cols());
}

DecoderHead train_fsr_decoder(const ReprEncoder& encoder,
                              const InstanceSampler& train,
                              const HeadTrainConfig& cfg) {
  require_sinusoid(train, "train_fsr_decoder");
  return train_gaussian_head(encoder, train, cfg, HeadTask::Fsr);
}

DecoderHead train_fsic_decoder(const ReprEncoder& encoder,
                               const InstanceSampler& train,
                               const HeadTrainConfig& cfg) {
  require_image(train, "train_fsic_decoder");
  return train_gaussian_head(encoder, train, cfg, HeadTask::Fsic);
}

namespace {

// Gaussian elimination with partial pivoting; systems here are tiny
// ((d_repr+1)^2) and well conditioned after the ridge term.
std::vector<double> solve_linear(Matrix a, std::vector<double> b) {
  const int n = a.rows();
  for (int i = 0; i < n; ++i) {
    int piv = i;
    for (int r = i + 1; r < n; ++r) {
      if (std::abs(a(r, i)) > std::abs(a(piv, i))) piv = r;
    }
    for (int c = 0; c < n; ++c) std::swap(a(i, c), a(piv, c));
    std::swap(b[i], b[piv]);
    if (a(i, i) == 0.0) throw NumericalError("solve_linear: singular system");
    for (int r = i + 1; r < n; ++r) {
      double f = a(r, i) / a(i, i);
      for (int c = i; c < n; ++c) a(r, c) -= f * a(i, c);
      b[r] -= f * b[i];
    }
  }
  std::vector<double> x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int c = i + 1; c < n; ++c) s -= a(i, c) * x[c];
    x[i] = s / a(i, i);
  }
  return x;
}

}  // namespace

DecoderHead train_fspi_decoder(const ReprEncoder& encoder,
                               const InstanceSampler& train,
                               const HeadTrainConfig& cfg) {
  require_sinusoid(train, "train_fspi_decoder");
  const int d_repr = encoder.d_repr();
  Rng data_rng = Rng::derive(cfg.seed, 32);

  DecoderHead head;
  head.task = HeadTask::Fspi;
  head.d_repr = d_repr;
  Rng init_rng = Rng::derive(cfg.seed, 31);
  head.net = make_mlp({d_repr, 2}, init_rng);  // strictly linear
  fit_feature_stats(head, encoder, train, cfg);

  // One pass over the training functions, one ridge least-squares solve: a
  // linear regression fitted in a single epoch. Targets are (amplitude,
  // phase/pi); the phase is reported in units of pi so both parameters live
  // on a comparable sub-unit scale.
  const std::size_t n_fn = train.size();
  const int dim = d_repr + 1;  // bias feature
  Matrix xtx(dim, dim);
  Matrix xty(dim, 2);
  const std::size_t chunk = 512;
  for (std::size_t lo = 0; lo < n_fn; lo += chunk) {
    const std::size_t hi = std::min(n_fn, lo + chunk);
    GroupedPoints pts;
    for (std::size_t i = lo; i < hi; ++i) {
      int n_ctx = cfg.n_min + static_cast<int>(data_rng.uniform_int(
                      static_cast<std::uint64_t>(cfg.n_max - cfg.n_min + 1)));
      pts.add_group(sample_context(train.instance(i), n_ctx, cfg.noise_sigma,
                                   data_rng));
    }
    pts.finalize();
    Matrix s = encoder.encode_base_batch(pts);
    standardize_rows(head, s, 0);
    Matrix x(s.rows(), dim);
    Matrix y(s.rows(), 2);
    for (int r = 0; r < s.rows(); ++r) {
      std::copy(s.row(r), s.row(r) + d_repr, x.row(r));
      x(r, d_repr) = 1.0;
      const FunctionInstance& f = train.instance(lo + r);
      y(r, 0) = f.amplitude;
      y(r, 1) = f.phase / M_PI;
    }
    Matrix xtx_c = matmul_tn(x, x);
    Matrix xty_c = matmul_tn(x, y);
    for (std::size_t k = 0; k < xtx.size(); ++k) xtx.raw()[k] += xtx_c.raw()[k];
    for (std::size_t k = 0; k < xty.size(); ++k) xty.raw()[k] += xty_c.raw()[k];
  }
  for (int i = 0; i < dim; ++i) xtx(i, i) += 1e-8;

  for (int col = 0; col < 2; ++col) {
    std::vector<double> rhs(dim);
    for (int k = 0; k < dim; ++k) rhs[k] = xty(k, col);
    std::vector<double> w = solve_linear(xtx, rhs);
    for (int k = 0; k < d_repr; ++k) head.net.layers[0].w(col, k) = w[k];
    head.net.layers[0].b[col] = w[d_repr];
  }
  return head;
}

DecoderHead train_fscc_probe(const ReprEncoder& encoder,
                             const InstanceSampler& train, int context_count,
                             const HeadTrainConfig& cfg) {
  require_image(train, "train_fscc_probe");
  if (context_count < 2 || context_count > kImagePixels) {
    throw ConfigError("train_fscc_probe: context_count must be in [2, 784]");
  }
  const int d_repr = encoder.d_repr();
  Rng init_rng = Rng::derive(cfg.seed, 41);
  Rng data_rng = Rng::derive(cfg.seed, 42);

  DecoderHead head;
  head.task = HeadTask::Fscc;
  head.d_repr = d_repr;
  head.net = make_mlp({d_repr, 10}, init_rng);
  fit_feature_stats(head, encoder, train, cfg, context_count);

  std::vector<double> flat;
  head.net.flatten(flat);
  AdamState adam = make_adam_state(flat.size());

  const std::size_t n_fn = train.size();
  Batches batches{n_fn, cfg.batch_size};
  const long total_steps = batches.per_epoch() * 1;

  std::vector<std::size_t> order(n_fn);
  std::iota(order.begin(), order.end(), std::size_t{0});
  data_rng.shuffle(order);

  long step = 0;
  for (long b = 0; b < batches.per_epoch(); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * cfg.batch_size;
    const std::size_t hi = std::min(n_fn, lo + cfg.batch_size);
    std::vector<std::size_t> idxs(order.begin() + lo, order.begin() + hi);

    Matrix s = encode_contexts(encoder, train, idxs, context_count,
                               cfg.noise_sigma, data_rng);
    standardize_rows(head, s, 0);
    MlpCache cache;
    Matrix logits = mlp_forward(head.net, s, &cache);

    Matrix dlogits(logits.rows(), 10);
    const double inv_b = 1.0 / logits.rows();
    for (int r = 0; r < logits.rows(); ++r) {
      int label = train.instance(idxs[static_cast<std::size_t>(r)]).label;
      double mx = -1e300;
      for (int c = 0; c < 10; ++c) mx = std::max(mx, logits(r, c));
      double se = 0.0;
      for (int c = 0; c < 10; ++c) se += std::exp(logits(r, c) - mx);
      for (int c = 0; c < 10; ++c) {
        double p = std::exp(logits(r, c) - mx) / se;
        dlogits(r, c) = (p - (c == label ? 1.0 : 0.0)) * inv_b;
      }
    }
    Mlp grads = make_like_zero(head.net);
    mlp_backward(head.net, cache, dlogits, grads);
    std::vector<double> g;
    grads.flatten(g);
    adam_step(flat, g, adam, cosine_lr(step, total_steps, cfg.lr));
    head.net.unflatten(flat.data(), flat.size());
    ++step;
  }
  return head;
}

double evaluate_fsr(const DecoderHead& head, const ReprEncoder& encoder,
                    const InstanceSampler& test, int shots, double sigma,
                    std::uint64_t seed) {
  require_sinusoid(test, "evaluate_fsr");
  Rng rng = Rng::derive(seed, 51);
  constexpr int kGrid = 100;
  Matrix grid(kGrid, 1);
  for (int i = 0; i < kGrid; ++i) {
    grid(i, 0) = -5.0 + 10.0 * i / (kGrid - 1);
  }
  double total = 0.0;
  const std::size_t batch = 256;
  for (std::size_t lo = 0; lo < test.size(); lo += batch) {
    std::size_t hi = std::min(test.size(), lo + batch);
    std::vector<std::size_t> idxs(hi - lo);
    std::iota(idxs.begin(), idxs.end(), lo);
    Matrix s = encode_contexts(encoder, test, idxs, shots, sigma, rng);
    standardize_rows(head, s, 0);
    // decode all functions x grid points at once
    Matrix in(static_cast<int>(idxs.size()) * kGrid, 1 + head.d_repr);
    int row = 0;
    for (std::size_t i = 0; i < idxs.size(); ++i)
      for (int gpt = 0; gpt < kGrid; ++gpt, ++row) {
        double* r = in.row(row);
        r[0] = grid(gpt, 0);
        std::copy(s.row(static_cast<int>(i)),
                  s.row(static_cast<int>(i)) + head.d_repr, r + 1);
      }
    Matrix raw = mlp_forward(head.net, in);
    row = 0;
    for (std::size_t i = 0; i < idxs.size(); ++i) {
      const FunctionInstance& f = test.instance(idxs[i]);
      for (int gpt = 0; gpt < kGrid; ++gpt, ++row) {
        double diff = raw(row, 0) - f.eval_sinusoid(grid(gpt, 0));
        total += diff * diff;
      }
    }
  }
  return total / (static_cast<double>(test.size()) * kGrid);
}

double evaluate_fspi(const DecoderHead& head, const ReprEncoder& encoder,
                     const InstanceSampler& test, int shots, double sigma,
                     std::uint64_t seed) {
  require_sinusoid(test, "evaluate_fspi");
  Rng rng = Rng::derive(seed, 52);
  double total = 0.0;
  const std::size_t batch = 256;
  for (std::size_t lo = 0; lo < test.size(); lo += batch) {
    std::size_t hi = std::min(test.size(), lo + batch);
    std::vector<std::size_t> idxs(hi - lo);
    std::iota(idxs.begin(), idxs.end(), lo);
    Matrix s = encode_contexts(encoder, test, idxs, shots, sigma, rng);
    standardize_rows(head, s, 0);
    Matrix pred = mlp_forward(head.net, s);
    for (std::size_t i = 0; i < idxs.size(); ++i) {
      const FunctionInstance& f = test.instance(idxs[i]);
      double da = pred(static_cast<int>(i), 0) - f.amplitude;
      double db = pred(static_cast<int>(i), 1) - f.phase / M_PI;
      total += da * da + db * db;
    }
  }
  return total / (2.0 * static_cast<double>(test.size()));
}

double evaluate_fsic(const DecoderHead& head, const ReprEncoder& encoder,
                     const InstanceSampler& test, int context_count,
                     double sigma, std::uint64_t seed) {
  require_image(test, "evaluate_fsic");
  Rng rng = Rng::derive(seed, 53);
  double total = 0.0;
  long count = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const FunctionInstance& f = test.instance(i);
    std::vector<int> px =
        rng.sample_without_replacement(kImagePixels, context_count);
    std::vector<char> in_ctx(kImagePixels, 0);
    ContextSet ctx;
    ctx.x_dim = 2;
    for (int p : px) {
      in_ctx[p] = 1;
      double xy[2] = {(p / kImageSide) / double(kImageSide - 1),
                      (p % kImageSide) / double(kImageSide - 1)};
      double yv = f.image[p];
      if (sigma > 0.0) yv += rng.normal(0.0, sigma);
      ctx.append(xy, &yv);
    }
    Representation rep = encoder.encode_base(ctx);

    // target pixels: complement, or everything at full context
    std::vector<int> targets;
    for (int p = 0; p < kImagePixels; ++p) {
      if (context_count == kImagePixels || !in_ctx[p]) targets.push_back(p);
    }
    Matrix xs(static_cast<int>(targets.size()), 2);
    for (std::size_t t = 0; t < targets.size(); ++t) {
      xs(static_cast<int>(t), 0) = (targets[t] / kImageSide) / double(kImageSide - 1);
      xs(static_cast<int>(t), 1) = (targets[t] % kImageSide) / double(kImageSide - 1);
    }
    Matrix mean, var;
    head_predict_gaussian(head, rep, xs, mean, var);
    for (std::size_t t = 0; t < targets.size(); ++t) {
      double diff = mean(static_cast<int>(t), 0) - f.image[targets[t]];
      total += diff * diff;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

double evaluate_fscc(const DecoderHead& head, const ReprEncoder& encoder,
                     const InstanceSampler& test, int context_count,
                     double sigma, std::uint64_t seed) {
  require_image(test, "evaluate_fscc");
  Rng rng = Rng::derive(seed, 54);
  long correct = 0;
  const std::size_t batch = 256;
  for (std::size_t lo = 0; lo < test.size(); lo += batch) {
    std::size_t hi = std::min(test.size(), lo + batch);
    std::vector<std::size_t> idxs(hi - lo);
    std::iota(idxs.begin(), idxs.end(), lo);
    Matrix s = encode_contexts(encoder, test, idxs, context_count, sigma, rng);
    standardize_rows(head, s, 0);
    Matrix logits = mlp_forward(head.net, s);
    for (std::size_t i = 0; i < idxs.size(); ++i) {
      int arg = 0;
      for (int c = 1; c < 10; ++c) {
        if (logits(static_cast<int>(i), c) > logits(static_cast<int>(i), arg)) arg = c;
      }
      if (arg == test.instance(idxs[i]).label) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

std::vector<MetricsRecord> evaluate_fsr_records(
    const DecoderHead& head, const ReprEncoder& encoder,
    const InstanceSampler& test, int shots, double sigma,
    const std::vector<std::uint64_t>& seeds) {
  std::vector<MetricsRecord> out;
  for (std::uint64_t s : seeds) {
    MetricsRecord r;
    r.task = "fsr";
    r.shots = shots;
    r.noise_sigma = sigma;
    r.seed = s;
    r.metric = "mse";
    r.value = evaluate_fsr(head, encoder, test, shots, sigma, s);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<MetricsRecord> evaluate_fscc_records(
    const DecoderHead& head, const ReprEncoder& encoder,
    const InstanceSampler& test, int context_count, double sigma,
    const std::vector<std::uint64_t>& seeds) {
  std::vector<MetricsRecord> out;
  for (std::uint64_t s : seeds) {
    MetricsRecord r;
    r.task = "fscc";
    r.shots = context_count;
    r.noise_sigma = sigma;
    r.seed = s;
    r.metric = "accuracy";
    r.value = evaluate_fscc(head, encoder, test, context_count, sigma, s);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace fcrl
