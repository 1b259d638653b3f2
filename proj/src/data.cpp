#include "fcrl/data.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "fcrl/errors.hpp"

namespace fcrl {

void ContextSet::validate() const {
  if (ys.empty()) throw ConfigError("ContextSet: empty");
  if (xs.size() != static_cast<std::size_t>(size()) * x_dim) {
    throw InternalError("ContextSet: xs/ys length mismatch");
  }
  if (!all_finite(xs) || !all_finite(ys)) {
    throw NumericalError("ContextSet: non-finite coordinate");
  }
}

void SinusoidFamily::validate() const {
  if (!(amp_lo < amp_hi) || !(phase_lo < phase_hi) || !(x_lo < x_hi)) {
    throw ConfigError("SinusoidFamily: degenerate or unordered interval");
  }
  if (noise_sigma < 0.0) throw ConfigError("SinusoidFamily: noise_sigma < 0");
}

FunctionInstance sample_sinusoid(const SinusoidFamily& family, Rng& rng) {
  FunctionInstance f;
  f.kind = FunctionInstance::Kind::Sinusoid;
  f.amplitude = rng.uniform(family.amp_lo, family.amp_hi);
  f.phase = rng.uniform(family.phase_lo, family.phase_hi);
  f.x_lo = family.x_lo;
  f.x_hi = family.x_hi;
  return f;
}

namespace {

void pixel_coords(int pixel_idx, double* xy) {
  int row = pixel_idx / kImageSide;
  int col = pixel_idx % kImageSide;
  xy[0] = static_cast<double>(row) / (kImageSide - 1);
  xy[1] = static_cast<double>(col) / (kImageSide - 1);
}

ContextSet image_context_from(const FunctionInstance& instance,
                              const std::vector<int>& pixel_indices,
                              double sigma, Rng& rng) {
  ContextSet c;
  c.x_dim = 2;
  c.y_dim = 1;
  c.xs.reserve(pixel_indices.size() * 2);
  c.ys.reserve(pixel_indices.size());
  for (int px : pixel_indices) {
    double xy[2];
    pixel_coords(px, xy);
    double y = instance.image[px];
    if (sigma > 0.0) y += rng.normal(0.0, sigma);
    c.append(xy, &y);
  }
  return c;
}

}  // namespace

ContextSet sample_context(const FunctionInstance& instance, int n, double sigma,
                          Rng& rng) {
  if (n < 1) throw ConfigError("sample_context: n must be >= 1");
  if (instance.kind == FunctionInstance::Kind::Sinusoid) {
    ContextSet c;
    c.x_dim = 1;
    c.y_dim = 1;
    c.xs.reserve(n);
    c.ys.reserve(n);
    for (int i = 0; i < n; ++i) {
      double x = rng.uniform(instance.x_lo, instance.x_hi);
      double y = instance.eval_sinusoid(x);
      if (sigma > 0.0) y += rng.normal(0.0, sigma);
      c.append(&x, &y);
    }
    return c;
  }
  if (n > kImagePixels) {
    throw ConfigError("sample_context: requested " + std::to_string(n) +
                      " distinct pixels, image has " +
                      std::to_string(kImagePixels));
  }
  std::vector<int> px = rng.sample_without_replacement(kImagePixels, n);
  return image_context_from(instance, px, sigma, rng);
}

ContextSet image_as_function(const double* image) {
  ContextSet c;
  c.x_dim = 2;
  c.y_dim = 1;
  c.xs.reserve(kImagePixels * 2);
  c.ys.reserve(kImagePixels);
  for (int i = 0; i < kImagePixels; ++i) {
    double xy[2];
    pixel_coords(i, xy);
    double y = image[i];
    c.append(xy, &y);
  }
  return c;
}

void split_context_target(const FunctionInstance& instance, int n_context,
                          int n_target, double sigma, Rng& rng,
                          ContextSet& context, ContextSet& targets) {
  if (n_target < 0) throw ConfigError("split_context_target: n_target < 0");
  if (instance.kind == FunctionInstance::Kind::Sinusoid) {
    if (n_context < 2 || n_context > 20 || n_context + n_target > 20) {
      throw ConfigError(
          "split_context_target: sinusoid bounds are n_context in [2,20], "
          "n_target in [0, 20 - n_context]; got n_context=" +
          std::to_string(n_context) + " n_target=" + std::to_string(n_target));
    }
    context = sample_context(instance, n_context, sigma, rng);
    targets = ContextSet{};
    targets.x_dim = 1;
    targets.y_dim = 1;
    if (n_target > 0) targets = sample_context(instance, n_target, sigma, rng);
    return;
  }
  if (n_context < 2 || n_context > 200) {
    throw ConfigError(
        "split_context_target: image n_context must be in [2,200], got " +
        std::to_string(n_context));
  }
  if (n_context + n_target > kImagePixels) {
    throw ConfigError("split_context_target: n_context + n_target exceeds 784");
  }
  std::vector<int> px =
      rng.sample_without_replacement(kImagePixels, n_context + n_target);
  std::vector<int> ctx_px(px.begin(), px.begin() + n_context);
  std::vector<int> tgt_px(px.begin() + n_context, px.end());
  context = image_context_from(instance, ctx_px, sigma, rng);
  targets = image_context_from(instance, tgt_px, sigma, rng);
  targets.x_dim = 2;
}

namespace {

std::uint32_t read_be32(std::ifstream& in, const std::string& path,
                        const char* what) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4)) {
    throw LoadError(path + ": truncated while reading " + what);
  }
  return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
         (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

}  // namespace

MnistDataset load_mnist_idx(const std::string& images_path,
                            const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw LoadError("cannot open image file: " + images_path);
  std::uint32_t magic = read_be32(img, images_path, "magic");
  if (magic != 0x00000803u) {
    throw LoadError(images_path + ": bad image magic 0x" +
                    [&] { char b[16]; std::snprintf(b, sizeof b, "%08x", magic); return std::string(b); }() +
                    ", expected 0x00000803");
  }
  std::uint32_t n_images = read_be32(img, images_path, "count");
  std::uint32_t rows = read_be32(img, images_path, "rows");
  std::uint32_t cols = read_be32(img, images_path, "cols");
  if (rows != kImageSide || cols != kImageSide) {
    throw LoadError(images_path + ": expected 28x28 images, got " +
                    std::to_string(rows) + "x" + std::to_string(cols));
  }
  std::size_t n_bytes = std::size_t(n_images) * kImagePixels;
  std::vector<unsigned char> raw(n_bytes);
  if (!img.read(reinterpret_cast<char*>(raw.data()), n_bytes)) {
    throw LoadError(images_path + ": truncated payload, expected " +
                    std::to_string(n_bytes) + " bytes, got " +
                    std::to_string(img.gcount()));
  }

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw LoadError("cannot open label file: " + labels_path);
  std::uint32_t lmagic = read_be32(lab, labels_path, "magic");
  if (lmagic != 0x00000801u) {
    throw LoadError(labels_path + ": bad label magic, expected 0x00000801");
  }
  std::uint32_t n_labels = read_be32(lab, labels_path, "count");
  if (n_labels != n_images) {
    throw LoadError("image/label count mismatch: " + std::to_string(n_images) +
                    " images vs " + std::to_string(n_labels) + " labels");
  }
  std::vector<unsigned char> lraw(n_labels);
  if (!lab.read(reinterpret_cast<char*>(lraw.data()), n_labels)) {
    throw LoadError(labels_path + ": truncated payload, expected " +
                    std::to_string(n_labels) + " bytes, got " +
                    std::to_string(lab.gcount()));
  }

  MnistDataset d;
  d.count = static_cast<int>(n_images);
  d.pixels.resize(n_bytes);
  for (std::size_t i = 0; i < n_bytes; ++i) d.pixels[i] = raw[i] / 255.0;
  d.labels.resize(n_labels);
  for (std::size_t i = 0; i < n_labels; ++i) {
    if (lraw[i] > 9) {
      throw LoadError(labels_path + ": label " + std::to_string(int(lraw[i])) +
                      " out of range at index " + std::to_string(i));
    }
    d.labels[i] = lraw[i];
  }
  return d;
}

SinusoidDataset make_sinusoid_dataset(const SinusoidFamily& family,
                                      int n_train, int n_val, int n_test,
                                      std::uint64_t seed) {
  family.validate();
  SinusoidDataset d;
  d.family = family;
  Rng rng = Rng::derive(seed, /*a=*/0x5157, /*b=*/0);  // dataset stream
  long id = 0;
  auto fill = [&](std::vector<FunctionInstance>& out, int n) {
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
      FunctionInstance f = sample_sinusoid(family, rng);
      f.instance_id = id++;
      out.push_back(f);
    }
  };
  fill(d.train, n_train);
  fill(d.val, n_val);
  fill(d.test, n_test);
  return d;
}

std::vector<FunctionInstance> image_instances(const MnistDataset& data,
                                              const std::vector<int>& indices) {
  std::vector<FunctionInstance> out;
  out.reserve(indices.size());
  for (int i : indices) {
    if (i < 0 || i >= data.count) throw InternalError("image index out of range");
    FunctionInstance f;
    f.kind = FunctionInstance::Kind::Image;
    f.image = data.image(i);
    f.label = data.labels[i];
    f.instance_id = i;
    out.push_back(f);
  }
  return out;
}

std::vector<FunctionInstance> image_instances(const MnistDataset& data,
                                              int count) {
  int n = count < 0 ? data.count : std::min(count, data.count);
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  return image_instances(data, idx);
}

InstanceSampler::InstanceSampler(std::vector<FunctionInstance> instances,
                                 int max_points)
    : instances_(std::move(instances)), max_points_(max_points) {
  if (instances_.empty()) throw ConfigError("InstanceSampler: no functions");
  x_dim_ = instances_.front().kind == FunctionInstance::Kind::Image ? 2 : 1;
}

ContextSet InstanceSampler::sample_points(std::size_t idx, int n, double sigma,
                                          Rng& rng) const {
  return sample_context(instances_.at(idx), n, sigma, rng);
}

void InstanceSampler::sample_context_target(std::size_t idx, int n_context,
                                            int n_target, double sigma,
                                            Rng& rng, ContextSet& context,
                                            ContextSet& targets) const {
  split_context_target(instances_.at(idx), n_context, n_target, sigma, rng,
                       context, targets);
}

}  // namespace fcrl
