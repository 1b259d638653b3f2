#pragma once

#include "fcrl/contrastive.hpp"
#include "fcrl/downstream.hpp"
#include "fcrl/metrics.hpp"

namespace fcrl {

// Toy function family on a finite grid with known values, so the Bayes
// posterior over "which function produced this observation set" is exact.
struct DiscreteFamily {
  std::vector<double> grid;                 // shared x locations
  std::vector<std::vector<double>> values;  // values[f][g]
  double sigma = 0.0;

  int n_functions() const { return static_cast<int>(values.size()); }
  void validate() const;
  // Grid index of x (exact match required).
  int grid_index(double x) const;
};

// Constant functions y = c on a single-point grid {1}.
DiscreteFamily constant_family(const std::vector<double>& levels, double sigma);

// Log-likelihood of an observation set under function f: a sum of Gaussian
// log-densities, or a 0 / -inf match indicator when sigma == 0.
double discrete_log_likelihood(const DiscreteFamily& family, int f,
                               const ContextSet& obs);

// Exact posterior p(i | O^{1:K}, anchor) with a uniform prior, via the
// density-ratio factorization p(O^i, anchor) / (p(O^i) p(anchor)).
std::vector<double> bayes_posterior_oracle(
    const DiscreteFamily& family, const std::vector<ContextSet>& observations,
    const ContextSet& anchor);

// softmax(sims / tau), log-sum-exp stabilized.
std::vector<double> posterior_from_similarities(const std::vector<double>& sims,
                                                double tau);

// FunctionSampler view of a DiscreteFamily: observations draw grid points
// uniformly with replacement. Context/target draws are independent.
class DiscreteFamilySampler : public FunctionSampler {
 public:
  DiscreteFamilySampler(DiscreteFamily family, int max_points = 64);
  std::size_t size() const override { return family_.values.size(); }
  int x_dim() const override { return 1; }
  int y_dim() const override { return 1; }
  int max_points() const override { return max_points_; }
  ContextSet sample_points(std::size_t idx, int n, double sigma,
                           Rng& rng) const override;
  void sample_context_target(std::size_t idx, int n_context, int n_target,
                             double sigma, Rng& rng, ContextSet& context,
                             ContextSet& targets) const override;
  const DiscreteFamily& family() const { return family_; }

 private:
  DiscreteFamily family_;
  int max_points_;
};

// Training recipe for the toy families: one batch of all K functions per step.
TrainConfig discrete_defaults(const DiscreteFamily& family);

struct OracleAgreementResult {
  double mean_tv = 0.0;
  double max_tv = 0.0;
  int episodes = 0;
};

// Per episode: one observation set per family member plus an anchor drawn from
// a uniformly chosen member; compares softmax(cos-sim/tau) on projected
// representations against the exact posterior. TV = 0.5 * sum |p - q|.
OracleAgreementResult oracle_agreement(const EncoderParams& encoder,
                                       const DiscreteFamily& family,
                                       int n_points, int episodes, double tau,
                                       std::uint64_t seed);

struct SweepGrid {
  std::vector<int> j_values;
  std::vector<double> tau_values;
  std::vector<CriticKind> critics;
  std::vector<double> sigma_values;
  std::vector<std::uint64_t> seeds;
};

// Trains one encoder per (J, tau, critic, seed) cell on base's family and
// records the 5-shot FSR MSE (sinusoid) per cell. Resumable: finished cells
// are looked up in <out_dir>/sweep_manifest.json by config hash and skipped.
// Cells with J > n_max are skipped with a logged reason.
std::vector<MetricsRecord> ablation_sweep(const SweepGrid& grid,
                                          const TrainConfig& base,
                                          const InstanceSampler& train,
                                          const InstanceSampler& test,
                                          const std::string& out_dir);

// Trains FCRL and CNP per (sigma, seed), probes/evaluates under the same
// sigma, and emits accuracy (mnist: FSCC at context_count) or MSE (sinusoid:
// 5-shot FSR) records. Same manifest-based resumability as ablation_sweep.
std::vector<MetricsRecord> noise_sweep(const TrainConfig& base,
                                       const std::vector<double>& sigma_values,
                                       const std::vector<std::uint64_t>& seeds,
                                       const InstanceSampler& train,
                                       const InstanceSampler& test,
                                       const std::string& out_dir,
                                       int context_count = 200);

}  // namespace fcrl
