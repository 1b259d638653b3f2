#include "fcrl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>

#include "fcrl/checkpoint.hpp"
#include "fcrl/cnp.hpp"
#include "fcrl/hash.hpp"

namespace fcrl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double>& v) {
  double mx = kNegInf;
  for (double x : v) mx = std::max(mx, x);
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace

void DiscreteFamily::validate() const {
  if (grid.empty()) throw ConfigError("discrete family: empty grid");
  if (values.empty()) throw ConfigError("discrete family: no functions");
  for (const auto& v : values) {
    if (v.size() != grid.size()) {
      throw ConfigError("discrete family: function value count != grid size");
    }
  }
  if (sigma < 0.0) throw ConfigError("discrete family: sigma must be >= 0");
}

int DiscreteFamily::grid_index(double x) const {
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (grid[g] == x) return static_cast<int>(g);
  }
  throw InternalError("discrete family: x not on the grid");
}

DiscreteFamily constant_family(const std::vector<double>& levels, double sigma) {
  DiscreteFamily f;
  // grid away from 0 so the all-zero constant still gives the encoder a
  // nonzero input
  f.grid = {1.0};
  for (double c : levels) f.values.push_back({c});
  f.sigma = sigma;
  f.validate();
  return f;
}

double discrete_log_likelihood(const DiscreteFamily& family, int f,
                               const ContextSet& obs) {
  if (f < 0 || f >= family.n_functions()) {
    throw InternalError("discrete_log_likelihood: function index out of range");
  }
  double ll = 0.0;
  for (int i = 0; i < obs.size(); ++i) {
    double v = family.values[f][family.grid_index(*obs.x_at(i))];
    double y = *obs.y_at(i);
    if (family.sigma == 0.0) {
      if (std::abs(y - v) > 1e-12) return kNegInf;
    } else {
      double d = (y - v) / family.sigma;
      ll += -0.5 * d * d - 0.5 * std::log(2.0 * M_PI) - std::log(family.sigma);
    }
  }
  return ll;
}

std::vector<double> bayes_posterior_oracle(
    const DiscreteFamily& family, const std::vector<ContextSet>& observations,
    const ContextSet& anchor) {
  family.validate();
  const int n_fam = family.n_functions();
  const int k = static_cast<int>(observations.size());
  if (k < 1) throw ConfigError("bayes_posterior_oracle: no observation sets");

  auto log_marginal = [&](const ContextSet& o) {
    std::vector<double> lls(n_fam);
    for (int f = 0; f < n_fam; ++f) lls[f] = discrete_log_likelihood(family, f, o);
    return log_sum_exp(lls) - std::log(double(n_fam));
  };

  double la = log_marginal(anchor);
  if (la == kNegInf) {
    throw NumericalError("bayes_posterior_oracle: anchor has zero likelihood "
                         "under every function");
  }

  // log-ratio log[p(O^i, anchor) / (p(O^i) p(anchor))], joint marginalized
  // over the shared function
  std::vector<double> log_ratio(k);
  for (int i = 0; i < k; ++i) {
    std::vector<double> joint(n_fam), solo(n_fam);
    for (int f = 0; f < n_fam; ++f) {
      solo[f] = discrete_log_likelihood(family, f, observations[i]);
      joint[f] = solo[f] + discrete_log_likelihood(family, f, anchor);
    }
    double lm = log_sum_exp(solo) - std::log(double(n_fam));
    if (lm == kNegInf) {
      throw NumericalError("bayes_posterior_oracle: observation set " +
                           std::to_string(i) +
                           " has zero likelihood under every function");
    }
    log_ratio[i] = log_sum_exp(joint) - std::log(double(n_fam)) - lm - la;
  }

  double lz = log_sum_exp(log_ratio);
  if (lz == kNegInf) {
    throw NumericalError("bayes_posterior_oracle: all density ratios vanish "
                         "(anchor incompatible with every observation set)");
  }
  std::vector<double> post(k);
  for (int i = 0; i < k; ++i) {
    post[i] = log_ratio[i] == kNegInf ? 0.0 : std::exp(log_ratio[i] - lz);
  }
  return post;
}

std::vector<double> posterior_from_similarities(const std::vector<double>& sims,
                                                double tau) {
  if (!(tau > 0.0)) throw ConfigError("posterior_from_similarities: tau must be > 0");
  if (!all_finite(sims)) {
    throw NumericalError("posterior_from_similarities: non-finite similarity");
  }
  std::vector<double> logits(sims.size());
  for (std::size_t i = 0; i < sims.size(); ++i) logits[i] = sims[i] / tau;
  double lz = log_sum_exp(logits);
  std::vector<double> p(sims.size());
  for (std::size_t i = 0; i < sims.size(); ++i) p[i] = std::exp(logits[i] - lz);
  return p;
}

DiscreteFamilySampler::DiscreteFamilySampler(DiscreteFamily family,
                                             int max_points)
    : family_(std::move(family)), max_points_(max_points) {
  family_.validate();
}

ContextSet DiscreteFamilySampler::sample_points(std::size_t idx, int n,
                                                double sigma, Rng& rng) const {
  if (idx >= size()) throw InternalError("DiscreteFamilySampler: bad index");
  if (n < 1) throw ConfigError("DiscreteFamilySampler: n must be >= 1");
  ContextSet out;
  const auto& vals = family_.values[idx];
  for (int i = 0; i < n; ++i) {
    int g = static_cast<int>(rng.uniform_int(family_.grid.size()));
    double x = family_.grid[g];
    double y = vals[g];
    if (sigma > 0.0) y += rng.normal(0.0, sigma);
    out.append(&x, &y);
  }
  return out;
}

void DiscreteFamilySampler::sample_context_target(
    std::size_t idx, int n_context, int n_target, double sigma, Rng& rng,
    ContextSet& context, ContextSet& targets) const {
  context = sample_points(idx, n_context, sigma, rng);
  targets = n_target > 0 ? sample_points(idx, n_target, sigma, rng)
                         : ContextSet{};
}

TrainConfig discrete_defaults(const DiscreteFamily& family) {
  TrainConfig c;
  c.family = "discrete";
  c.batch_size = std::max(2, family.n_functions());
  c.j_subsets = 2;
  c.temperature = 0.07;
  c.n_min = 8;
  c.n_max = 16;
  c.epochs = 3000;  // one batch per epoch on a K-function family
  c.lr = 1e-3;
  c.d_repr = 16;
  c.noise_sigma = family.sigma;
  c.n_train_functions = family.n_functions();
  c.n_val_functions = 0;
  c.n_test_functions = 0;
  return c;
}

OracleAgreementResult oracle_agreement(const EncoderParams& encoder,
                                       const DiscreteFamily& family,
                                       int n_points, int episodes, double tau,
                                       std::uint64_t seed) {
  family.validate();
  if (episodes < 1) throw ConfigError("oracle_agreement: episodes must be >= 1");
  DiscreteFamilySampler sampler(family);
  Rng rng = Rng::derive(seed, 61);
  const int k = family.n_functions();

  OracleAgreementResult res;
  res.episodes = episodes;
  for (int ep = 0; ep < episodes; ++ep) {
    std::vector<ContextSet> obs(k);
    for (int i = 0; i < k; ++i) {
      obs[i] = sampler.sample_points(i, n_points, family.sigma, rng);
    }
    int truth = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(k)));
    ContextSet anchor = sampler.sample_points(truth, n_points, family.sigma, rng);

    std::vector<double> oracle = bayes_posterior_oracle(family, obs, anchor);

    Representation za = encode(encoder, anchor);
    std::vector<double> sims(k);
    for (int i = 0; i < k; ++i) {
      sims[i] = cosine_sim(za.values, encode(encoder, obs[i]).values);
    }
    std::vector<double> model = posterior_from_similarities(sims, tau);

    double tv = 0.0;
    for (int i = 0; i < k; ++i) tv += std::abs(model[i] - oracle[i]);
    tv *= 0.5;
    res.mean_tv += tv;
    res.max_tv = std::max(res.max_tv, tv);
  }
  res.mean_tv /= episodes;
  return res;
}

// --- sweeps -----------------------------------------------------------------

namespace {

nlohmann::json record_to_json(const MetricsRecord& r) {
  return nlohmann::json{{"run_id", r.run_id}, {"model", r.model},
                        {"task", r.task},     {"shots", r.shots},
                        {"noise_sigma", r.noise_sigma}, {"seed", r.seed},
                        {"metric", r.metric}, {"value", r.value}};
}

MetricsRecord record_from_json(const nlohmann::json& j) {
  MetricsRecord r;
  r.run_id = j.at("run_id").get<std::string>();
  r.model = j.at("model").get<std::string>();
  r.task = j.at("task").get<std::string>();
  r.shots = j.at("shots").get<int>();
  r.noise_sigma = j.at("noise_sigma").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.metric = j.at("metric").get<std::string>();
  r.value = j.at("value").get<double>();
  return r;
}

nlohmann::json load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) return nlohmann::json{{"cells", nlohmann::json::object()}};
  nlohmann::json m;
  in >> m;
  if (!m.contains("cells")) m["cells"] = nlohmann::json::object();
  return m;
}

void store_manifest(const std::string& path, const nlohmann::json& m) {
  std::ofstream out(path);
  out << m.dump(2) << "\n";
  if (!out) throw LoadError("cannot write sweep manifest: " + path);
}

// Looks up a finished cell; on miss runs compute(), persists its records and
// extra metadata, and appends the fresh rows to the sweep CSV.
std::vector<MetricsRecord> run_cell(
    const std::string& out_dir, const std::string& hash,
    const nlohmann::json& config_snapshot,
    const std::function<std::vector<MetricsRecord>(nlohmann::json& extra)>& compute) {
  std::filesystem::create_directories(out_dir);
  const std::string manifest_path = out_dir + "/sweep_manifest.json";
  nlohmann::json manifest = load_manifest(manifest_path);

  if (manifest["cells"].contains(hash)) {
    std::vector<MetricsRecord> cached;
    for (const auto& j : manifest["cells"][hash]["records"]) {
      cached.push_back(record_from_json(j));
    }
    std::cerr << "[sweep] cell " << hash << " cached, skipping\n";
    return cached;
  }

  nlohmann::json extra = nlohmann::json::object();
  std::vector<MetricsRecord> records = compute(extra);
  for (MetricsRecord& r : records) r.run_id = hash;

  nlohmann::json cell{{"config", config_snapshot},
                      {"records", nlohmann::json::array()}};
  for (const MetricsRecord& r : records) cell["records"].push_back(record_to_json(r));
  for (auto& [k, v] : extra.items()) cell[k] = v;
  manifest["cells"][hash] = cell;
  store_manifest(manifest_path, manifest);
  append_metrics_csv(out_dir + "/sweep_metrics.csv", records);
  return records;
}

}  // namespace

std::vector<MetricsRecord> ablation_sweep(const SweepGrid& grid,
                                          const TrainConfig& base,
                                          const InstanceSampler& train,
                                          const InstanceSampler& test,
                                          const std::string& out_dir) {
  if (base.family != "sinusoid") {
    throw ConfigError("ablation_sweep: implemented for the sinusoid family");
  }
  std::vector<MetricsRecord> all;
  for (int j : grid.j_values)
    for (double tau : grid.tau_values)
      for (CriticKind critic : grid.critics)
        for (std::uint64_t seed : grid.seeds) {
          TrainConfig cfg = base;
          cfg.j_subsets = j;
          cfg.temperature = tau;
          cfg.critic = critic;
          cfg.seed = seed;
          if (j > cfg.n_max) {
            std::cerr << "[sweep] skipping J=" << j
                      << ": exceeds n_max=" << cfg.n_max
                      << " (no splittable context)\n";
            continue;
          }
          cfg.validate();
          const std::string hash = cfg.content_hash();
          auto cell = run_cell(out_dir, hash, cfg.to_json(),
                               [&](nlohmann::json& extra) {
            EncoderTrainResult enc = train_encoder(train, cfg);
            const std::string ckpt = out_dir + "/cell_" + hash + ".ckpt";
            save_encoder_checkpoint(ckpt, enc.encoder,
                                    {{"config", cfg.to_json()}});
            extra["checkpoint"] = ckpt;

            FcrlReprEncoder repr(enc.encoder);
            HeadTrainConfig hc = fsr_head_defaults();
            hc.epochs = std::min(hc.epochs, cfg.epochs);
            hc.seed = seed;
            hc.noise_sigma = cfg.noise_sigma;
            hc.n_min = cfg.n_min;
            hc.n_max = cfg.n_max;
            extra["decoder_epochs"] = hc.epochs;
            DecoderHead head = train_fsr_decoder(repr, train, hc);

            MetricsRecord r;
            r.model = "fcrl";
            r.task = "fsr";
            r.shots = 5;
            r.noise_sigma = cfg.noise_sigma;
            r.seed = seed;
            r.metric = "mse";
            r.value = evaluate_fsr(head, repr, test, 5, cfg.noise_sigma, seed);
            return std::vector<MetricsRecord>{r};
          });
          all.insert(all.end(), cell.begin(), cell.end());
        }
  return all;
}

std::vector<MetricsRecord> noise_sweep(const TrainConfig& base,
                                       const std::vector<double>& sigma_values,
                                       const std::vector<std::uint64_t>& seeds,
                                       const InstanceSampler& train,
                                       const InstanceSampler& test,
                                       const std::string& out_dir,
                                       int context_count) {
  const bool mnist = base.family == "mnist";
  if (!mnist && base.family != "sinusoid") {
    throw ConfigError("noise_sweep: family must be sinusoid or mnist");
  }
  std::vector<MetricsRecord> all;
  for (double sigma : sigma_values)
    for (std::uint64_t seed : seeds) {
      TrainConfig cfg = base;
      cfg.noise_sigma = sigma;
      cfg.seed = seed;
      cfg.validate();
      const std::string hash = cfg.content_hash();
      auto cell = run_cell(out_dir, hash, cfg.to_json(),
                           [&](nlohmann::json& extra) {
        std::vector<MetricsRecord> out;
        auto eval_model = [&](const ReprEncoder& repr, const std::string& name) {
          MetricsRecord r;
          r.model = name;
          r.noise_sigma = sigma;
          r.seed = seed;
          if (mnist) {
            HeadTrainConfig hc = fscc_probe_defaults();
            hc.seed = seed;
            hc.noise_sigma = sigma;
            DecoderHead probe = train_fscc_probe(repr, train, context_count, hc);
            r.task = "fscc";
            r.shots = context_count;
            r.metric = "accuracy";
            r.value = evaluate_fscc(probe, repr, test, context_count, sigma, seed);
          } else {
            HeadTrainConfig hc = fsr_head_defaults();
            hc.epochs = std::min(hc.epochs, cfg.epochs);
            hc.seed = seed;
            hc.noise_sigma = sigma;
            hc.n_min = cfg.n_min;
            hc.n_max = cfg.n_max;
            DecoderHead head = train_fsr_decoder(repr, train, hc);
            r.task = "fsr";
            r.shots = 5;
            r.metric = "mse";
            r.value = evaluate_fsr(head, repr, test, 5, sigma, seed);
          }
          out.push_back(r);
        };

        EncoderTrainResult enc = train_encoder(train, cfg);
        const std::string ckpt = out_dir + "/cell_" + hash + ".ckpt";
        save_encoder_checkpoint(ckpt, enc.encoder, {{"config", cfg.to_json()}});
        extra["checkpoint"] = ckpt;
        FcrlReprEncoder fcrl_repr(enc.encoder);
        eval_model(fcrl_repr, "fcrl");

        CnpTrainResult cnp = train_cnp(train, cfg);
        const std::string cnp_ckpt = out_dir + "/cell_" + hash + "_cnp.ckpt";
        save_cnp_checkpoint(cnp_ckpt, cnp.params, {{"config", cfg.to_json()}});
        extra["cnp_checkpoint"] = cnp_ckpt;
        CnpReprEncoder cnp_repr(cnp.params);
        eval_model(cnp_repr, "cnp");
        return out;
      });
      all.insert(all.end(), cell.begin(), cell.end());
    }
  return all;
}

}  // namespace fcrl
