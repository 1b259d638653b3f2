#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <vector>

#include "fcrl/data.hpp"
#include "fcrl/errors.hpp"

using namespace fcrl;

namespace {

const std::string kTmpDir = "/tmp/fcrl_test_data";

void write_bytes(const std::string& path, const std::vector<unsigned char>& b) {
  std::ofstream f(path, std::ios::binary);
  f.write(reinterpret_cast<const char*>(b.data()),
          static_cast<std::streamsize>(b.size()));
}

void push_be32(std::vector<unsigned char>& v, std::uint32_t x) {
  v.push_back(static_cast<unsigned char>(x >> 24));
  v.push_back(static_cast<unsigned char>(x >> 16));
  v.push_back(static_cast<unsigned char>(x >> 8));
  v.push_back(static_cast<unsigned char>(x));
}

// tiny synthetic IDX pair: `count` 28x28 images
void write_idx_pair(const std::string& img_path, const std::string& lbl_path,
                    int count, int bad_label = -1, int truncate_bytes = 0) {
  std::vector<unsigned char> img;
  push_be32(img, 0x00000803);
  push_be32(img, static_cast<std::uint32_t>(count));
  push_be32(img, 28);
  push_be32(img, 28);
  for (int i = 0; i < count * kImagePixels; ++i)
    img.push_back(static_cast<unsigned char>(i % 256));
  if (truncate_bytes > 0) img.resize(img.size() - truncate_bytes);
  write_bytes(img_path, img);

  std::vector<unsigned char> lbl;
  push_be32(lbl, 0x00000801);
  push_be32(lbl, static_cast<std::uint32_t>(count));
  for (int i = 0; i < count; ++i)
    lbl.push_back(static_cast<unsigned char>(i == 0 && bad_label >= 0
                                                 ? bad_label
                                                 : i % 10));
  write_bytes(lbl_path, lbl);
}

}  // namespace

TEST_CASE("sinusoid sampling follows the uniform law") {
  SinusoidFamily fam;
  Rng rng(42);
  double amp_min = 1e9, amp_max = -1e9, amp_sum = 0;
  double ph_min = 1e9, ph_max = -1e9;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    FunctionInstance f = sample_sinusoid(fam, rng);
    amp_min = std::min(amp_min, f.amplitude);
    amp_max = std::max(amp_max, f.amplitude);
    amp_sum += f.amplitude;
    ph_min = std::min(ph_min, f.phase);
    ph_max = std::max(ph_max, f.phase);
  }
  CHECK(amp_min >= 0.1);
  CHECK(amp_max <= 0.5);
  CHECK(std::abs(amp_sum / n - 0.3) < 0.01);
  CHECK(ph_min >= 0.0);
  CHECK(ph_max <= M_PI);
}

TEST_CASE("sinusoid evaluation at known parameters") {
  FunctionInstance f;
  f.amplitude = 0.3;
  f.phase = 0.0;
  CHECK(f.eval_sinusoid(0.0) == doctest::Approx(0.0).epsilon(1e-15));
  f.amplitude = 0.5;
  f.phase = M_PI / 2;
  CHECK(f.eval_sinusoid(0.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("noiseless contexts are exact") {
  FunctionInstance f;
  f.amplitude = 0.3;
  f.phase = 0.0;
  Rng rng(7);
  ContextSet ctx = sample_context(f, 50, 0.0, rng);
  REQUIRE(ctx.size() == 50);
  for (int i = 0; i < ctx.size(); ++i) {
    double x = ctx.x_at(i)[0];
    CHECK(x >= -5.0);
    CHECK(x <= 5.0);
    CHECK(ctx.y_at(i)[0] == 0.3 * std::sin(x));
  }
}

TEST_CASE("noise sigma matches a Monte-Carlo estimate") {
  FunctionInstance f;
  f.amplitude = 0.3;
  f.phase = 1.0;
  Rng rng(123);
  const int n = 100000;
  // accumulate deviations y - f(x) across draws
  double sum = 0, sum2 = 0;
  int count = 0;
  while (count < n) {
    ContextSet ctx = sample_context(f, 20, 0.1, rng);
    for (int i = 0; i < ctx.size() && count < n; ++i, ++count) {
      double d = ctx.y_at(i)[0] - f.eval_sinusoid(ctx.x_at(i)[0]);
      sum += d;
      sum2 += d * d;
    }
  }
  double mean = sum / n;
  double stddev = std::sqrt(sum2 / n - mean * mean);
  CHECK(std::abs(stddev - 0.1) < 0.005);
  CHECK(std::abs(mean) < 0.005);
}

TEST_CASE("image_as_function maps corners and intensities") {
  std::vector<double> img(kImagePixels, 0.0);
  ContextSet ctx = image_as_function(img.data());
  REQUIRE(ctx.size() == kImagePixels);
  CHECK(ctx.x_at(0)[0] == 0.0);
  CHECK(ctx.x_at(0)[1] == 0.0);
  CHECK(ctx.x_at(kImagePixels - 1)[0] == 1.0);
  CHECK(ctx.x_at(kImagePixels - 1)[1] == 1.0);
  for (int i = 0; i < ctx.size(); ++i) CHECK(ctx.y_at(i)[0] == 0.0);
}

TEST_CASE("image sampling at n=784 is exhaustive and n>784 errors") {
  std::vector<double> img(kImagePixels);
  for (int i = 0; i < kImagePixels; ++i) img[i] = (i % 256) / 255.0;
  FunctionInstance f;
  f.kind = FunctionInstance::Kind::Image;
  f.image = img.data();
  f.label = 3;
  Rng rng(5);
  ContextSet ctx = sample_context(f, kImagePixels, 0.0, rng);
  REQUIRE(ctx.size() == kImagePixels);
  std::set<std::pair<double, double>> seen;
  for (int i = 0; i < ctx.size(); ++i)
    seen.insert({ctx.x_at(i)[0], ctx.x_at(i)[1]});
  CHECK(static_cast<int>(seen.size()) == kImagePixels);
  CHECK_THROWS_AS(sample_context(f, kImagePixels + 1, 0.0, rng), ConfigError);
}

TEST_CASE("context/target draws respect bounds and image disjointness") {
  SinusoidFamily fam;
  Rng rng(9);
  FunctionInstance f = sample_sinusoid(fam, rng);

  ContextSet ctx, tgt;
  split_context_target(f, 5, 15, 0.0, rng, ctx, tgt);
  CHECK(ctx.size() == 5);
  CHECK(tgt.size() == 15);
  split_context_target(f, 20, 0, 0.0, rng, ctx, tgt);
  CHECK(ctx.size() == 20);
  CHECK(tgt.size() == 0);
  CHECK_THROWS_AS(split_context_target(f, 20, 1, 0.0, rng, ctx, tgt),
                  ConfigError);
  CHECK_THROWS_AS(split_context_target(f, 1, 0, 0.0, rng, ctx, tgt),
                  ConfigError);

  std::vector<double> img(kImagePixels, 0.5);
  FunctionInstance fi;
  fi.kind = FunctionInstance::Kind::Image;
  fi.image = img.data();
  fi.label = 0;
  split_context_target(fi, 50, 100, 0.0, rng, ctx, tgt);
  CHECK(ctx.size() == 50);
  CHECK(tgt.size() == 100);
  std::set<std::pair<double, double>> cpx;
  for (int i = 0; i < ctx.size(); ++i)
    cpx.insert({ctx.x_at(i)[0], ctx.x_at(i)[1]});
  for (int i = 0; i < tgt.size(); ++i)
    CHECK(cpx.count({tgt.x_at(i)[0], tgt.x_at(i)[1]}) == 0);
}

TEST_CASE("sampling is reproducible from the seed") {
  SinusoidFamily fam;
  auto draw = [&] {
    Rng rng(77);
    FunctionInstance f = sample_sinusoid(fam, rng);
    ContextSet c = sample_context(f, 10, 0.1, rng);
    return c;
  };
  ContextSet a = draw(), b = draw();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.xs.size(); ++i) CHECK(a.xs[i] == b.xs[i]);
  for (std::size_t i = 0; i < a.ys.size(); ++i) CHECK(a.ys[i] == b.ys[i]);
}

TEST_CASE("sinusoid dataset splits have the right shape") {
  SinusoidFamily fam;
  SinusoidDataset ds = make_sinusoid_dataset(fam, 100, 10, 10, 3);
  CHECK(ds.train.size() == 100);
  CHECK(ds.val.size() == 10);
  CHECK(ds.test.size() == 10);
  for (const auto& f : ds.train) {
    CHECK(f.amplitude >= 0.1);
    CHECK(f.amplitude <= 0.5);
    CHECK(f.phase >= 0.0);
    CHECK(f.phase <= M_PI);
  }
}

TEST_CASE("IDX loader round-trips a synthetic file") {
  std::string cmd = "mkdir -p " + kTmpDir;
  REQUIRE(std::system(cmd.c_str()) == 0);
  std::string img = kTmpDir + "/img.idx", lbl = kTmpDir + "/lbl.idx";
  write_idx_pair(img, lbl, 5);
  MnistDataset ds = load_mnist_idx(img, lbl);
  CHECK(ds.count == 5);
  CHECK(ds.labels[2] == 2);
  CHECK(ds.pixels.size() == static_cast<std::size_t>(5 * kImagePixels));
  for (double v : ds.pixels) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(ds.pixels[1] == doctest::Approx(1.0 / 255.0).epsilon(1e-12));
}

TEST_CASE("IDX loader rejects malformed inputs") {
  std::string cmd = "mkdir -p " + kTmpDir;
  REQUIRE(std::system(cmd.c_str()) == 0);
  std::string img = kTmpDir + "/img.idx", lbl = kTmpDir + "/lbl.idx";

  // wrong magic
  std::vector<unsigned char> bad;
  push_be32(bad, 0xdeadbeef);
  write_bytes(img, bad);
  write_idx_pair(kTmpDir + "/ok_img.idx", lbl, 3);
  CHECK_THROWS_AS(load_mnist_idx(img, lbl), LoadError);

  // truncated payload names the byte counts
  write_idx_pair(img, lbl, 3, -1, /*truncate_bytes=*/10);
  try {
    load_mnist_idx(img, lbl);
    FAIL("expected LoadError");
  } catch (const LoadError& e) {
    std::string msg = e.what();
    CHECK(msg.find("byte") != std::string::npos);
  }

  // label out of range
  write_idx_pair(img, lbl, 3, /*bad_label=*/12);
  CHECK_THROWS_AS(load_mnist_idx(img, lbl), LoadError);

  // count mismatch between images and labels
  write_idx_pair(img, kTmpDir + "/lbl4.idx", 3);
  write_idx_pair(kTmpDir + "/img4.idx", lbl, 4);
  CHECK_THROWS_AS(load_mnist_idx(img, lbl), LoadError);
}

TEST_CASE("context set validation rejects empty and non-finite sets") {
  ContextSet c;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  double x = 0.5, y = std::nan("");
  c.append(&x, &y);
  CHECK_THROWS_AS(c.validate(), NumericalError);
}
