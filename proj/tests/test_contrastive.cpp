#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "fcrl/contrastive.hpp"
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

TEST_CASE("split produces disjoint equal covers") {
  Rng rng(1);
  ContextSet c = make_context(20, rng);
  auto subsets = split_observations(c, 2, rng);
  REQUIRE(subsets.size() == 2);
  CHECK(subsets[0].size() == 10);
  CHECK(subsets[1].size() == 10);
  std::multiset<double> all, split;
  for (int i = 0; i < c.size(); ++i) all.insert(c.x_at(i)[0]);
  for (const auto& s : subsets)
    for (int i = 0; i < s.size(); ++i) split.insert(s.x_at(i)[0]);
  CHECK(all == split);
}

TEST_CASE("split at J = N gives singletons") {
  Rng rng(2);
  ContextSet c = make_context(4, rng);
  auto subsets = split_observations(c, 4, rng);
  REQUIRE(subsets.size() == 4);
  for (const auto& s : subsets) CHECK(s.size() == 1);
}

TEST_CASE("split rejects N < J") {
  Rng rng(3);
  ContextSet c = make_context(3, rng);
  CHECK_THROWS_AS(split_observations(c, 4, rng), ConfigError);
}

TEST_CASE("remainder points are dropped uniformly") {
  // N=21, J=2: one point dropped per call; over many trials each point
  // should be dropped with frequency ~1/21
  Rng rng(4);
  ContextSet c = make_context(21, rng);
  std::map<double, int> dropped;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    auto subsets = split_observations(c, 2, rng);
    CHECK(subsets[0].size() == 10);
    CHECK(subsets[1].size() == 10);
    std::multiset<double> used;
    for (const auto& s : subsets)
      for (int i = 0; i < s.size(); ++i) used.insert(s.x_at(i)[0]);
    for (int i = 0; i < c.size(); ++i)
      if (!used.count(c.x_at(i)[0])) ++dropped[c.x_at(i)[0]];
  }
  REQUIRE(dropped.size() == 21);
  // expected 10000/21 = 476; 5-sigma band ~ +-108
  for (const auto& [x, count] : dropped) {
    CHECK(count > 368);
    CHECK(count < 584);
  }
}

TEST_CASE("cosine similarity basics") {
  std::vector<double> a{1.0, 2.0, -3.0};
  std::vector<double> na{-1.0, -2.0, 3.0};
  CHECK(cosine_sim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine_sim(a, na) == doctest::Approx(-1.0).epsilon(1e-12));
  std::vector<double> e1{1.0, 0.0}, e2{0.0, 1.0};
  CHECK(cosine_sim(e1, e2) == doctest::Approx(0.0).epsilon(1e-15));
  std::vector<double> zero{0.0, 0.0};
  CHECK_THROWS_AS(cosine_sim(e1, zero), NumericalError);
}

TEST_CASE("identical representations give loss log K") {
  const int k = 256, j = 2, d = 8;
  Matrix z(k * j, d);
  for (int r = 0; r < z.rows(); ++r)
    for (int c = 0; c < d; ++c) z(r, c) = 0.1 * (c + 1);
  FcrlLossResult res = fcrl_loss(z, k, j, 0.07);
  CHECK(res.loss == doctest::Approx(std::log(256.0)).epsilon(1e-10));
  CHECK(std::abs(res.loss - 5.545) < 1e-3);
}

TEST_CASE("K=2 J=2 closed form") {
  // positives aligned (sim=1), cross-function sims=-1, tau=1:
  // loss = log(1 + e^{-2})
  Matrix z(4, 2);
  // function 0 subsets along +e1, function 1 along -e1
  z(0, 0) = 1.0;
  z(1, 0) = 2.0;   // same direction, different scale
  z(2, 0) = -1.0;
  z(3, 0) = -3.0;
  FcrlLossResult res = fcrl_loss(z, 2, 2, 1.0);
  CHECK(res.loss == doctest::Approx(std::log(1.0 + std::exp(-2.0)))
                        .epsilon(1e-10));
  CHECK(std::abs(res.loss - 0.1269) < 1e-4);
}

TEST_CASE("loss is invariant to rescaling the representations") {
  Rng rng(5);
  const int k = 6, j = 3, d = 5;
  Matrix z(k * j, d);
  for (double& v : z.raw()) v = rng.uniform(-1.0, 1.0);
  double base = fcrl_loss(z, k, j, 0.07).loss;
  Matrix z2 = z;
  for (double& v : z2.raw()) v *= 37.5;
  CHECK(fcrl_loss(z2, k, j, 0.07).loss ==
        doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("loss rejects bad inputs") {
  Matrix z(4, 3);
  for (double& v : z.raw()) v = 1.0;
  CHECK_THROWS_AS(fcrl_loss(z, 2, 2, 0.0), ConfigError);
  Matrix zz(4, 3);  // one all-zero row
  for (int r = 1; r < 4; ++r)
    for (int c = 0; c < 3; ++c) zz(r, c) = 1.0;
  CHECK_THROWS_AS(fcrl_loss(zz, 2, 2, 0.07), NumericalError);
}

TEST_CASE("loss gradients match finite differences") {
  Rng rng(6);
  const int k = 4, j = 2, d = 5;
  Matrix z(k * j, d);
  for (double& v : z.raw()) v = rng.uniform(-1.0, 1.0);
  FcrlLossResult res = fcrl_loss(z, k, j, 0.07);
  auto loss_fn = [&](const std::vector<double>& p) {
    Matrix m = z;
    m.raw() = p;
    return fcrl_loss(m, k, j, 0.07).loss;
  };
  CHECK(grad_check(loss_fn, z.raw(), res.dz.raw()) < 1e-4);
}

TEST_CASE("full pipeline gradcheck through encoder and projection") {
  // K=4 functions, J=2 subsets, N=8 points each
  Rng rng(7);
  EncoderParams enc = make_encoder(1, 1, 6, CriticKind::Nonlinear, rng);
  const int k = 4, j = 2;
  std::vector<ContextSet> subsets;
  for (int f = 0; f < k; ++f) {
    ContextSet c = make_context(8, rng);
    auto sp = split_observations(c, j, rng);
    for (auto& s : sp) subsets.push_back(std::move(s));
  }

  auto loss_of = [&](const EncoderParams& p) {
    Matrix z(k * j, p.d_repr);
    for (std::size_t i = 0; i < subsets.size(); ++i) {
      Representation r = encode(p, subsets[i]);
      for (int c = 0; c < p.d_repr; ++c) z(static_cast<int>(i), c) = r.values[c];
    }
    return fcrl_loss(z, k, j, 0.07).loss;
  };

  std::vector<double> theta;
  enc.h.flatten(theta);
  enc.rho->flatten(theta);
  auto loss_fn = [&](const std::vector<double>& p) {
    EncoderParams e = enc;
    std::size_t used = e.h.unflatten(p.data(), p.size());
    e.rho->unflatten(p.data() + used, p.size() - used);
    return loss_of(e);
  };

  // analytic gradient via the training-path machinery: encode batched,
  // project, loss, backprop
  GroupedPoints gp;
  for (const auto& s : subsets) gp.add_group(s);
  gp.finalize();
  MlpCache hcache;
  Matrix base = encode_base_batch(enc, gp, &hcache);
  MlpCache pcache;
  Matrix z = mlp_forward(*enc.rho, base, &pcache);
  FcrlLossResult res = fcrl_loss(z, k, j, 0.07);
  Mlp rho_grads = make_like_zero(*enc.rho);
  Matrix dbase = mlp_backward(*enc.rho, pcache, res.dz, rho_grads);
  Mlp h_grads = make_like_zero(enc.h);
  encode_base_backward(enc, gp, hcache, dbase, h_grads);
  std::vector<double> g;
  h_grads.flatten(g);
  rho_grads.flatten(g);

  CHECK(grad_check(loss_fn, theta, g) < 1e-4);
}

TEST_CASE("one-batch overfit reaches a small loss") {
  // K=32 fixed sinusoids, one fixed batch of subsets, repeated Adam steps:
  // the encoder memorizes the batch and the loss collapses
  Rng rng(11);
  SinusoidFamily fam;
  SinusoidDataset ds = make_sinusoid_dataset(fam, 32, 1, 1, 11);
  const int k = 32, j = 2;
  GroupedPoints gp;
  for (int f = 0; f < k; ++f) {
    ContextSet c = sample_context(ds.train[f], 20, 0.0, rng);
    auto sp = split_observations(c, j, rng);
    for (auto& s : sp) gp.add_group(std::move(s));
  }
  gp.finalize();
  EncoderParams enc = make_encoder(1, 1, 50, CriticKind::Nonlinear, rng);
  std::vector<double> theta;
  enc.h.flatten(theta);
  enc.rho->flatten(theta);
  AdamState adam = make_adam_state(theta.size());
  double first = 0.0, loss = 0.0;
  for (int step = 0; step < 400; ++step) {
    MlpCache hc, pc;
    Matrix base = encode_base_batch(enc, gp, &hc);
    Matrix z = mlp_forward(*enc.rho, base, &pc);
    FcrlLossResult res = fcrl_loss(z, k, j, 0.07);
    loss = res.loss;
    if (step == 0) first = loss;
    Mlp rg = make_like_zero(*enc.rho);
    Matrix dbase = mlp_backward(*enc.rho, pc, res.dz, rg);
    Mlp hg = make_like_zero(enc.h);
    encode_base_backward(enc, gp, hc, dbase, hg);
    std::vector<double> g;
    hg.flatten(g);
    rg.flatten(g);
    adam_step(theta, g, adam, 1e-3);
    std::size_t used = enc.h.unflatten(theta.data(), theta.size());
    enc.rho->unflatten(theta.data() + used, theta.size() - used);
  }
  CHECK(first > 1.0);
  CHECK(loss < 0.1);
}

TEST_CASE("short training run makes progress and is deterministic") {
  SinusoidFamily fam;
  SinusoidDataset ds = make_sinusoid_dataset(fam, 512, 8, 8, 13);
  InstanceSampler train(ds.train, 20);
  TrainConfig cfg = TrainConfig::sinusoid_defaults();
  cfg.n_train_functions = 512;
  cfg.epochs = 3;
  cfg.seed = 13;
  EncoderTrainResult a = train_encoder(train, cfg);
  // initial loss ~ log K for a fresh encoder
  CHECK(std::abs(a.curve.front().loss - std::log(256.0)) < 1.0);
  CHECK(a.curve.back().loss < a.curve.front().loss);

  EncoderTrainResult b = train_encoder(train, cfg);
  std::vector<double> pa, pb;
  a.encoder.h.flatten(pa);
  a.encoder.rho->flatten(pa);
  b.encoder.h.flatten(pb);
  b.encoder.rho->flatten(pb);
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == pb[i]);
}

TEST_CASE("config validation and hashing") {
  TrainConfig cfg = TrainConfig::sinusoid_defaults();
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.content_hash().size() == 16);
  CHECK(cfg.content_hash() == TrainConfig::sinusoid_defaults().content_hash());

  TrainConfig other = cfg;
  other.temperature = 0.08;
  CHECK(other.content_hash() != cfg.content_hash());

  TrainConfig bad = cfg;
  bad.temperature = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.j_subsets = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.j_subsets = 30;  // > n_max
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  TrainConfig round = TrainConfig::from_json(cfg.to_json());
  CHECK(round.content_hash() == cfg.content_hash());
}
