#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fcrl/matrix.hpp"
#include "fcrl/rng.hpp"

namespace fcrl {

// Finite set of (x, y) observations from one function. x rows are x_dim wide,
// y rows y_dim wide; both stored row-major. Consumers must treat the pairs as
// an unordered set.
struct ContextSet {
  int x_dim = 1;
  int y_dim = 1;
  std::vector<double> xs;
  std::vector<double> ys;

  int size() const { return static_cast<int>(ys.size()) / y_dim; }
  const double* x_at(int i) const { return xs.data() + static_cast<std::size_t>(i) * x_dim; }
  const double* y_at(int i) const { return ys.data() + static_cast<std::size_t>(i) * y_dim; }
  void append(const double* x, const double* y) {
    xs.insert(xs.end(), x, x + x_dim);
    ys.insert(ys.end(), y, y + y_dim);
  }
  void validate() const;  // non-empty, finite coordinates
};

struct SinusoidFamily {
  double amp_lo = 0.1, amp_hi = 0.5;
  double phase_lo = 0.0, phase_hi = M_PI;
  double x_lo = -5.0, x_hi = 5.0;
  double noise_sigma = 0.0;
  void validate() const;
};

constexpr int kImageSide = 28;
constexpr int kImagePixels = kImageSide * kImageSide;

// A sampled function: either a sinusoid a*sin(x+b) or one grayscale image
// viewed as a map from normalized pixel coordinates to intensity.
struct FunctionInstance {
  enum class Kind { Sinusoid, Image };
  Kind kind = Kind::Sinusoid;
  long instance_id = 0;

  // sinusoid
  double amplitude = 0.0, phase = 0.0;
  double x_lo = -5.0, x_hi = 5.0;

  // image: borrowed pointer to 784 intensities in [0,1], plus class label
  const double* image = nullptr;
  int label = -1;

  double eval_sinusoid(double x) const { return amplitude * std::sin(x + phase); }
};

FunctionInstance sample_sinusoid(const SinusoidFamily& family, Rng& rng);

// n observation pairs: x ~ U[x_lo, x_hi] for sinusoids, n distinct pixels for
// images; y = f(x) + N(0, sigma^2).
ContextSet sample_context(const FunctionInstance& instance, int n, double sigma,
                          Rng& rng);

// All 784 pixels as ((row/27, col/27), intensity) pairs, row-major.
ContextSet image_as_function(const double* image);

// Independent context/target draws from one function. Image targets are
// disjoint from the context pixels. Bounds follow the training protocol:
// sinusoid n_context in [2, 20] with n_context + n_target <= 20; image
// n_context in [2, 200].
void split_context_target(const FunctionInstance& instance, int n_context,
                          int n_target, double sigma, Rng& rng,
                          ContextSet& context, ContextSet& targets);

struct MnistDataset {
  int count = 0;
  std::vector<double> pixels;  // count x 784, row-major, intensities in [0,1]
  std::vector<int> labels;

  const double* image(int i) const { return pixels.data() + static_cast<std::size_t>(i) * kImagePixels; }
};

// IDX readers. Errors carry expected-vs-actual details.
MnistDataset load_mnist_idx(const std::string& images_path,
                            const std::string& labels_path);

// Parameter records for the sinusoid splits (20000/1000/1000 by default).
struct SinusoidDataset {
  SinusoidFamily family;
  std::vector<FunctionInstance> train, val, test;
};

SinusoidDataset make_sinusoid_dataset(const SinusoidFamily& family,
                                      int n_train, int n_val, int n_test,
                                      std::uint64_t seed);

std::vector<FunctionInstance> image_instances(const MnistDataset& data,
                                              const std::vector<int>& indices);
std::vector<FunctionInstance> image_instances(const MnistDataset& data,
                                              int count = -1);

// Uniform access used by the trainers: a collection of functions from which
// observation sets can be drawn.
class FunctionSampler {
 public:
  virtual ~FunctionSampler() = default;
  virtual std::size_t size() const = 0;
  virtual int x_dim() const = 0;
  virtual int y_dim() const = 0;
  virtual int max_points() const = 0;
  virtual ContextSet sample_points(std::size_t idx, int n, double sigma,
                                   Rng& rng) const = 0;
  // Disjoint context/target draw where the domain requires it.
  virtual void sample_context_target(std::size_t idx, int n_context,
                                     int n_target, double sigma, Rng& rng,
                                     ContextSet& context,
                                     ContextSet& targets) const = 0;
};

class InstanceSampler : public FunctionSampler {
 public:
  InstanceSampler(std::vector<FunctionInstance> instances, int max_points);
  std::size_t size() const override { return instances_.size(); }
  int x_dim() const override { return x_dim_; }
  int y_dim() const override { return 1; }
  int max_points() const override { return max_points_; }
  ContextSet sample_points(std::size_t idx, int n, double sigma,
                           Rng& rng) const override;
  void sample_context_target(std::size_t idx, int n_context, int n_target,
                             double sigma, Rng& rng, ContextSet& context,
                             ContextSet& targets) const override;
  const FunctionInstance& instance(std::size_t idx) const { return instances_[idx]; }

 private:
  std::vector<FunctionInstance> instances_;
  int x_dim_ = 1;
  int max_points_ = 20;
};

}  // namespace fcrl
