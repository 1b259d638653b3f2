#pragma once

#include "fcrl/contrastive.hpp"
#include "fcrl/encoder.hpp"
#include "fcrl/metrics.hpp"

namespace fcrl {

enum class HeadTask { Fsr, Fspi, Fsic, Fscc };
std::string to_string(HeadTask t);
HeadTask head_task_from_string(const std::string& s);

// Task head over frozen base representations. FSR/FSIC are Gaussian MLP
// decoders conditioned on the target x; FSPI and FSCC are strictly linear.
struct DecoderHead {
  HeadTask task = HeadTask::Fsr;
  Mlp net;
  int d_repr = 0;
  int x_dim = 0;  // 0 for FSPI/FSCC (no target conditioning)
  // per-dimension standardization of the frozen features, fitted on training
  // draws before the head is trained; empty means identity
  std::vector<double> feat_mu, feat_isd;
};

struct HeadTrainConfig {
  int epochs = 30;
  int batch_size = 256;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  double noise_sigma = 0.0;
  int n_min = 2;
  int n_max = 20;        // context bound while training
  int context_count = 200;  // FSCC fixed context size
};

HeadTrainConfig fsr_head_defaults();       // batch 256, 30 epochs, lr 1e-3
HeadTrainConfig fsic_head_defaults();      // batch 16, 100 epochs, lr 1e-3
HeadTrainConfig fspi_probe_defaults();     // one epoch, batch 16, lr 1e-2
HeadTrainConfig fscc_probe_defaults();     // one epoch, batch 8, lr 1e-3

// Gaussian prediction at target xs (FSR/FSIC). Rejects projected inputs.
void head_predict_gaussian(const DecoderHead& head, const Representation& base,
                           const Matrix& target_xs, Matrix& mean, Matrix& var);
// Raw linear outputs: (a, b) estimates for FSPI, class logits for FSCC.
std::vector<double> head_predict_vector(const DecoderHead& head,
                                        const Representation& base);

// Few-shot regression head: (x, repr) -> Gaussian, trained on NLL over the
// training functions with resampled context/target splits.
DecoderHead train_fsr_decoder(const ReprEncoder& encoder,
                              const InstanceSampler& train,
                              const HeadTrainConfig& cfg);
DecoderHead train_fsic_decoder(const ReprEncoder& encoder,
                               const InstanceSampler& train,
                               const HeadTrainConfig& cfg);

// Linear amplitude/phase regression fitted in one pass (exact least squares);
// phase targets are scaled to units of pi.
DecoderHead train_fspi_decoder(const ReprEncoder& encoder,
                               const InstanceSampler& train,
                               const HeadTrainConfig& cfg);

// 10-way linear softmax probe at a fixed context size, one epoch.
DecoderHead train_fscc_probe(const ReprEncoder& encoder,
                             const InstanceSampler& train, int context_count,
                             const HeadTrainConfig& cfg);

// Mean squared error of the predictive mean over a dense 100-point grid in
// [-5, 5], averaged over the test functions.
double evaluate_fsr(const DecoderHead& head, const ReprEncoder& encoder,
                    const InstanceSampler& test, int shots, double sigma,
                    std::uint64_t seed);

// MSE against (amplitude, phase/pi), averaged over both parameters.
double evaluate_fspi(const DecoderHead& head, const ReprEncoder& encoder,
                     const InstanceSampler& test, int shots, double sigma,
                     std::uint64_t seed);

// Pixel MSE of the predictive mean: non-context pixels when context < 784,
// whole image at full context.
double evaluate_fsic(const DecoderHead& head, const ReprEncoder& encoder,
                     const InstanceSampler& test, int context_count,
                     double sigma, std::uint64_t seed);

// Classification accuracy with context pixels resampled under the seed.
double evaluate_fscc(const DecoderHead& head, const ReprEncoder& encoder,
                     const InstanceSampler& test, int context_count,
                     double sigma, std::uint64_t seed);

// Convenience wrappers emitting one record per seed (model/run_id left to the
// caller).
std::vector<MetricsRecord> evaluate_fsr_records(
    const DecoderHead& head, const ReprEncoder& encoder,
    const InstanceSampler& test, int shots, double sigma,
    const std::vector<std::uint64_t>& seeds);
std::vector<MetricsRecord> evaluate_fscc_records(
    const DecoderHead& head, const ReprEncoder& encoder,
    const InstanceSampler& test, int context_count, double sigma,
    const std::vector<std::uint64_t>& seeds);

}  // namespace fcrl
