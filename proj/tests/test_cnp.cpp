#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "fcrl/cnp.hpp"
#include "fcrl/optim.hpp"

using namespace fcrl;

namespace {

ContextSet make_context(int n, Rng& rng) {
  ContextSet c;
  for (int i = 0; i < n; ++i) {
    double x = rng.uniform(-5.0, 5.0), y = rng.uniform(-1.0, 1.0);
    c.append(&x, &y);
  }
  return c;
}

}  // namespace

TEST_CASE("cnp predictions are permutation invariant") {
  Rng rng(1);
  CnpParams cnp = make_cnp(1, 1, 16, rng);
  ContextSet c = make_context(9, rng);
  Matrix xs(5, 1);
  for (int i = 0; i < 5; ++i) xs(i, 0) = rng.uniform(-5.0, 5.0);
  CnpPrediction ref = cnp_forward(cnp, c, xs);
  std::vector<int> order(9);
  for (int i = 0; i < 9; ++i) order[i] = i;
  for (int trial = 0; trial < 20; ++trial) {
    rng.shuffle(order);
    ContextSet p;
    for (int i : order) p.append(c.x_at(i), c.y_at(i));
    CnpPrediction got = cnp_forward(cnp, p, xs);
    for (int i = 0; i < 5; ++i) {
      CHECK(std::abs(got.mean(i, 0) - ref.mean(i, 0)) < 1e-9);
      CHECK(std::abs(got.variance(i, 0) - ref.variance(i, 0)) < 1e-9);
    }
  }
}

TEST_CASE("zero decoder yields bias-only outputs") {
  Rng rng(2);
  CnpParams cnp = make_cnp(1, 1, 8, rng);
  for (auto& l : cnp.decoder.layers) {
    std::fill(l.w.raw().begin(), l.w.raw().end(), 0.0);
    std::fill(l.b.begin(), l.b.end(), 0.0);
  }
  cnp.decoder.layers.back().b[0] = 0.7;
  cnp.decoder.layers.back().b[1] = -0.3;
  ContextSet c = make_context(4, rng);
  Matrix xs(3, 1);
  CnpPrediction p = cnp_forward(cnp, c, xs);
  for (int i = 0; i < 3; ++i) {
    CHECK(p.mean(i, 0) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(p.variance(i, 0) ==
          doctest::Approx(softplus(-0.3) + kVarianceFloor).epsilon(1e-12));
  }
}

TEST_CASE("batched targets equal a per-target loop") {
  Rng rng(3);
  CnpParams cnp = make_cnp(1, 1, 12, rng);
  ContextSet c = make_context(6, rng);
  Matrix xs(7, 1);
  for (int i = 0; i < 7; ++i) xs(i, 0) = rng.uniform(-5.0, 5.0);
  CnpPrediction batch = cnp_forward(cnp, c, xs);
  for (int i = 0; i < 7; ++i) {
    Matrix one(1, 1);
    one(0, 0) = xs(i, 0);
    CnpPrediction p = cnp_forward(cnp, c, one);
    CHECK(batch.mean(i, 0) == doctest::Approx(p.mean(0, 0)).epsilon(1e-12));
    CHECK(batch.variance(i, 0) ==
          doctest::Approx(p.variance(0, 0)).epsilon(1e-12));
  }
}

TEST_CASE("gaussian nll closed forms") {
  Matrix mu(1, 1), var(1, 1), y(1, 1);
  mu(0, 0) = 0.4;
  y(0, 0) = 0.4;
  var(0, 0) = 1.0 / (2.0 * M_PI);
  CHECK(gaussian_nll(mu, var, y) == doctest::Approx(0.0).epsilon(1e-12));
  var(0, 0) = 1.0;
  CHECK(gaussian_nll(mu, var, y) ==
        doctest::Approx(0.5 * std::log(2.0 * M_PI)).epsilon(1e-12));
  CHECK(std::abs(gaussian_nll(mu, var, y) - 0.9189) < 1e-4);
}

TEST_CASE("gaussian nll matches a scalar recomputation") {
  Rng rng(4);
  Matrix mu(5, 1), var(5, 1), y(5, 1);
  for (int i = 0; i < 5; ++i) {
    mu(i, 0) = rng.uniform(-1.0, 1.0);
    var(i, 0) = 0.1 + rng.uniform();
    y(i, 0) = rng.uniform(-1.0, 1.0);
  }
  double ref = 0.0;
  for (int i = 0; i < 5; ++i) {
    double d = y(i, 0) - mu(i, 0);
    ref += 0.5 * (std::log(2.0 * M_PI * var(i, 0)) + d * d / var(i, 0));
  }
  ref /= 5.0;
  CHECK(gaussian_nll(mu, var, y) == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("cnp gradcheck through encoder, decoder and nll") {
  Rng rng(5);
  CnpParams cnp = make_cnp(1, 1, 6, rng);
  ContextSet c = make_context(4, rng);
  Matrix xs(3, 1), y(3, 1);
  for (int i = 0; i < 3; ++i) {
    xs(i, 0) = rng.uniform(-5.0, 5.0);
    y(i, 0) = rng.uniform(-1.0, 1.0);
  }
  std::vector<double> theta;
  cnp.encoder.flatten(theta);
  cnp.decoder.flatten(theta);
  auto loss_fn = [&](const std::vector<double>& p) {
    CnpParams m = cnp;
    std::size_t used = m.encoder.unflatten(p.data(), p.size());
    m.decoder.unflatten(p.data() + used, p.size() - used);
    CnpPrediction pred = cnp_forward(m, c, xs);
    return gaussian_nll(pred.mean, pred.variance, y);
  };

  // analytic gradient: replicate the training path backward by hand
  const int d_repr = cnp.d_repr;
  GroupedPoints gp;
  gp.add_group(c);
  gp.finalize();
  MlpCache enc_cache;
  Matrix h = mlp_forward(cnp.encoder, gp.points, &enc_cache);
  Matrix s = group_mean(h, gp.offsets);
  Matrix dec_in(3, 1 + d_repr);
  for (int i = 0; i < 3; ++i) {
    dec_in(i, 0) = xs(i, 0);
    for (int d = 0; d < d_repr; ++d) dec_in(i, 1 + d) = s(0, d);
  }
  MlpCache dec_cache;
  Matrix raw = mlp_forward(cnp.decoder, dec_in, &dec_cache);
  Matrix draw(3, 2);
  for (int i = 0; i < 3; ++i) {
    double var = softplus(raw(i, 1)) + kVarianceFloor;
    double diff = raw(i, 0) - y(i, 0);
    draw(i, 0) = diff / var / 3.0;
    double dvar = 0.5 * (1.0 / var - diff * diff / (var * var)) / 3.0;
    draw(i, 1) = dvar / (1.0 + std::exp(-raw(i, 1)));
  }
  Mlp dec_grads = make_like_zero(cnp.decoder);
  Matrix d_in = mlp_backward(cnp.decoder, dec_cache, draw, dec_grads);
  Matrix ds(1, d_repr);
  for (int i = 0; i < 3; ++i)
    for (int d = 0; d < d_repr; ++d) ds(0, d) += d_in(i, 1 + d);
  Matrix dh = group_mean_backward(gp.offsets, ds);
  Mlp enc_grads = make_like_zero(cnp.encoder);
  mlp_backward(cnp.encoder, enc_cache, dh, enc_grads);
  std::vector<double> g;
  enc_grads.flatten(g);
  dec_grads.flatten(g);

  CHECK(grad_check(loss_fn, theta, g) < 1e-4);
}

TEST_CASE("one-batch overfit drops the nll by more than 1") {
  SinusoidFamily fam;
  SinusoidDataset ds = make_sinusoid_dataset(fam, 32, 1, 1, 21);
  InstanceSampler train(ds.train, 20);
  TrainConfig cfg = TrainConfig::sinusoid_defaults();
  cfg.batch_size = 32;
  cfg.n_train_functions = 32;
  cfg.epochs = 200;  // one batch per epoch at K = 32
  cfg.lr = 1e-3;
  cfg.seed = 21;
  CnpTrainResult res = train_cnp(train, cfg);
  REQUIRE(!res.curve.empty());
  CHECK(res.curve.back().loss < res.curve.front().loss - 1.0);
}

TEST_CASE("short cnp training regresses a sinusoid") {
  SinusoidFamily fam;
  SinusoidDataset ds = make_sinusoid_dataset(fam, 2000, 100, 100, 23);
  InstanceSampler train(ds.train, 20), test(ds.test, 20);
  TrainConfig cfg = TrainConfig::sinusoid_defaults();
  cfg.n_train_functions = 2000;
  cfg.epochs = 10;
  cfg.seed = 23;
  CnpTrainResult res = train_cnp(train, cfg);
  double mse = evaluate_cnp_fsr(res.params, test, 20, 0.0, 23);
  CHECK(mse <= 0.30);  // Table-1 scale acceptance bound
}

TEST_CASE("cnp representations report base kind and match pooling") {
  Rng rng(6);
  CnpParams cnp = make_cnp(1, 1, 10, rng);
  CnpReprEncoder repr(cnp);
  CHECK(repr.d_repr() == 10);
  ContextSet c = make_context(5, rng);
  Representation r = repr.encode_base(c);
  CHECK(r.kind == Representation::Kind::Base);
  // mean-pooled encoder output, computed by hand
  Matrix in(5, 2);
  for (int i = 0; i < 5; ++i) {
    in(i, 0) = c.x_at(i)[0];
    in(i, 1) = c.y_at(i)[0];
  }
  Matrix h = mlp_forward(cnp.encoder, in);
  for (int d = 0; d < 10; ++d) {
    double m = 0;
    for (int i = 0; i < 5; ++i) m += h(i, d);
    m /= 5.0;
    CHECK(r.values[d] == doctest::Approx(m).epsilon(1e-12));
  }
}
