// fcrl-lab: train/evaluate pipeline driver. Every run lands in
// <out>/<run_id>/ with a manifest describing how to reproduce it.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "CLI11.hpp"

#include "fcrl/analysis.hpp"
#include "fcrl/checkpoint.hpp"
#include "fcrl/cnp.hpp"
#include "fcrl/config.hpp"
#include "fcrl/downstream.hpp"
#include "fcrl/hash.hpp"
#include "fcrl/optim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fcrl;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::string data_dir = "data/mnist";
  std::string out_root;
  std::uint64_t seed = 0;  // 0 = use config seed
  bool seed_set = false;
  bool force = false;
  int threads = 1;
};

std::string resolve_out_root(const GlobalOpts& g) {
  if (!g.out_root.empty()) return g.out_root;
  if (const char* env = std::getenv("FCRL_LAB_OUT")) return env;
  return "runs";
}

std::string now_iso8601() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// Accepts a plain config file or a previous run's manifest.json (the config
// snapshot inside is reused, which is what makes reruns bit-identical).
json load_config_or_manifest(const std::string& path) {
  json j = load_config_file(path);
  if (j.is_object() && j.contains("run_id") && j.contains("config")) {
    json cfg = j.at("config");
    if (j.contains("eval")) cfg["eval"] = j.at("eval");
    return cfg;
  }
  return j;
}

TrainConfig load_train_config(const GlobalOpts& g) {
  if (g.config_path.empty()) {
    throw ConfigError("--config is required (all randomness flows from its seed)");
  }
  json j = load_config_or_manifest(g.config_path);
  TrainConfig cfg = parse_train_config(j);
  if (g.seed_set) cfg.seed = g.seed;
  cfg.validate();
  return cfg;
}

fs::path make_run_dir(const GlobalOpts& g, const std::string& run_id) {
  fs::path dir = fs::path(resolve_out_root(g)) / run_id;
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!g.force) {
      throw ConfigError("output directory " + dir.string() +
                        " is not empty (pass --force to overwrite)");
    }
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
  return dir;
}

void write_manifest(const fs::path& dir, json manifest) {
  manifest["version"] = "fcrl-lab 0.1.0";
  manifest["created_at"] = now_iso8601();
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << "\n";
  if (!out) throw LoadError("cannot write " + (dir / "manifest.json").string());
}

// Dataset assembly. MNIST paths follow the standard IDX file names.
struct Datasets {
  std::unique_ptr<MnistDataset> mnist_train, mnist_test;
  SinusoidDataset sinusoid;
  std::unique_ptr<InstanceSampler> train, test;
};

Datasets build_datasets(const TrainConfig& cfg, const GlobalOpts& g) {
  Datasets d;
  if (cfg.family == "sinusoid") {
    SinusoidFamily fam;
    fam.noise_sigma = cfg.noise_sigma;
    d.sinusoid = make_sinusoid_dataset(fam, cfg.n_train_functions,
                                       cfg.n_val_functions,
                                       cfg.n_test_functions, cfg.seed);
    d.train = std::make_unique<InstanceSampler>(d.sinusoid.train, cfg.n_max);
    d.test = std::make_unique<InstanceSampler>(d.sinusoid.test, cfg.n_max);
  } else if (cfg.family == "mnist") {
    d.mnist_train = std::make_unique<MnistDataset>(
        load_mnist_idx(g.data_dir + "/train-images-idx3-ubyte",
                       g.data_dir + "/train-labels-idx1-ubyte"));
    d.mnist_test = std::make_unique<MnistDataset>(
        load_mnist_idx(g.data_dir + "/t10k-images-idx3-ubyte",
                       g.data_dir + "/t10k-labels-idx1-ubyte"));
    std::vector<int> idx;
    if (cfg.n_train_functions > 0 &&
        cfg.n_train_functions < d.mnist_train->count) {
      Rng rng = Rng::derive(cfg.seed, 0x5158);
      std::vector<int> sel = rng.sample_without_replacement(
          d.mnist_train->count, cfg.n_train_functions);
      idx = sel;
    }
    auto train_inst = idx.empty() ? image_instances(*d.mnist_train)
                                  : image_instances(*d.mnist_train, idx);
    int n_test = std::min(cfg.n_test_functions > 0 ? cfg.n_test_functions
                                                   : d.mnist_test->count,
                          d.mnist_test->count);
    auto test_inst = image_instances(*d.mnist_test, n_test);
    d.train = std::make_unique<InstanceSampler>(std::move(train_inst), kImagePixels);
    d.test = std::make_unique<InstanceSampler>(std::move(test_inst), kImagePixels);
  } else {
    throw ConfigError("family '" + cfg.family + "' has no dataset pipeline");
  }
  return d;
}

// A frozen representation source loaded from either checkpoint kind. The
// parameter structs must outlive the view, hence the owning struct.
struct LoadedModel {
  EncoderParams enc;
  CnpParams cnp;
  bool is_cnp = false;
  std::string model_name;
  json meta;
  std::unique_ptr<ReprEncoder> repr;
};

LoadedModel load_model(const std::string& path) {
  LoadedModel m;
  m.meta = read_checkpoint_meta(path);
  std::string kind = m.meta.value("model_kind", std::string());
  if (kind == "fcrl_encoder") {
    m.enc = load_encoder_checkpoint(path);
    m.model_name = "fcrl";
    m.repr = std::make_unique<FcrlReprEncoder>(m.enc);
  } else if (kind == "cnp") {
    m.cnp = load_cnp_checkpoint(path);
    m.is_cnp = true;
    m.model_name = "cnp";
    m.repr = std::make_unique<CnpReprEncoder>(m.cnp);
  } else {
    throw LoadError(path + ": not an encoder checkpoint (model_kind='" +
                    kind + "')");
  }
  return m;
}

HeadTrainConfig head_config_for(HeadTask task, const TrainConfig& cfg,
                                std::uint64_t seed, double sigma) {
  HeadTrainConfig hc;
  switch (task) {
    case HeadTask::Fsr: hc = fsr_head_defaults(); break;
    case HeadTask::Fsic: hc = fsic_head_defaults(); break;
    case HeadTask::Fspi: hc = fspi_probe_defaults(); break;
    case HeadTask::Fscc: hc = fscc_probe_defaults(); break;
  }
  hc.seed = seed;
  hc.noise_sigma = sigma;
  hc.n_min = cfg.n_min;
  hc.n_max = cfg.n_max;
  return hc;
}

DecoderHead train_head(HeadTask task, const ReprEncoder& repr,
                       const InstanceSampler& train, const HeadTrainConfig& hc,
                       int context_count) {
  switch (task) {
    case HeadTask::Fsr: return train_fsr_decoder(repr, train, hc);
    case HeadTask::Fsic: return train_fsic_decoder(repr, train, hc);
    case HeadTask::Fspi: return train_fspi_decoder(repr, train, hc);
    case HeadTask::Fscc: return train_fscc_probe(repr, train, context_count, hc);
  }
  throw InternalError("train_head: bad task");
}

int cmd_train_encoder(const GlobalOpts& g) {
  TrainConfig cfg = load_train_config(g);
  Datasets data = build_datasets(cfg, g);
  std::string run_id = cfg.content_hash();
  fs::path dir = make_run_dir(g, run_id);

  EncoderTrainResult res = train_encoder(*data.train, cfg);
  std::string ckpt = (dir / "checkpoint.bin").string();
  save_encoder_checkpoint(ckpt, res.encoder,
                          {{"config", cfg.to_json()}, {"run_id", run_id}});
  write_curve_csv((dir / "curve.csv").string(), res.curve);
  write_manifest(dir, {{"run_id", run_id},
                       {"command", "train-encoder"},
                       {"config", cfg.to_json()},
                       {"artifacts", {{"checkpoint", ckpt},
                                      {"curve", (dir / "curve.csv").string()}}}});
  std::cout << "run " << run_id << ": final loss "
            << res.curve.back().loss << "\n" << dir.string() << "\n";
  return 0;
}

int cmd_train_cnp(const GlobalOpts& g) {
  TrainConfig cfg = load_train_config(g);
  Datasets data = build_datasets(cfg, g);
  std::string run_id = hash_hex("cnp:" + cfg.to_json().dump());
  fs::path dir = make_run_dir(g, run_id);

  CnpTrainResult res = train_cnp(*data.train, cfg);
  std::string ckpt = (dir / "checkpoint.bin").string();
  save_cnp_checkpoint(ckpt, res.params,
                      {{"config", cfg.to_json()}, {"run_id", run_id}});
  write_curve_csv((dir / "curve.csv").string(), res.curve);
  write_manifest(dir, {{"run_id", run_id},
                       {"command", "train-cnp"},
                       {"config", cfg.to_json()},
                       {"artifacts", {{"checkpoint", ckpt},
                                      {"curve", (dir / "curve.csv").string()}}}});
  std::cout << "run " << run_id << ": final nll "
            << res.curve.back().loss << "\n" << dir.string() << "\n";
  return 0;
}

int cmd_train_decoder(const GlobalOpts& g, const std::string& encoder_path,
                      const std::string& task_name) {
  TrainConfig cfg = load_train_config(g);
  HeadTask task = head_task_from_string(task_name);
  LoadedModel model = load_model(encoder_path);
  Datasets data = build_datasets(cfg, g);

  json eval_section = load_config_or_manifest(g.config_path);
  EvalSpec spec = parse_eval_spec(eval_section);

  std::string run_id = hash_hex("decoder:" + task_name + ":" +
                                cfg.to_json().dump() + ":" +
                                model.meta.dump());
  fs::path dir = make_run_dir(g, run_id);

  HeadTrainConfig hc = head_config_for(task, cfg, cfg.seed, cfg.noise_sigma);
  DecoderHead head = train_head(task, *model.repr, *data.train, hc,
                                spec.context_count);
  std::string ckpt = (dir / "checkpoint.bin").string();
  save_mlp_checkpoint(ckpt, head.net,
                      {{"model_kind", "decoder_head"},
                       {"task", task_name},
                       {"d_repr", head.d_repr},
                       {"x_dim", head.x_dim},
                       {"feat_mu", head.feat_mu},
                       {"feat_isd", head.feat_isd},
                       {"encoder", encoder_path},
                       {"config", cfg.to_json()},
                       {"run_id", run_id}});
  write_manifest(dir, {{"run_id", run_id},
                       {"command", "train-decoder"},
                       {"task", task_name},
                       {"encoder", encoder_path},
                       {"config", cfg.to_json()},
                       {"artifacts", {{"checkpoint", ckpt}}}});
  std::cout << "run " << run_id << "\n" << dir.string() << "\n";
  return 0;
}

int cmd_evaluate(const GlobalOpts& g, const std::string& encoder_path,
                 const std::string& head_path) {
  TrainConfig cfg = load_train_config(g);
  json file_json = load_config_or_manifest(g.config_path);
  EvalSpec spec = parse_eval_spec(file_json);
  HeadTask task = head_task_from_string(spec.task);
  LoadedModel model = load_model(encoder_path);
  Datasets data = build_datasets(cfg, g);

  std::string run_id = hash_hex("evaluate:" + cfg.to_json().dump() + ":" +
                                spec.task + ":" + model.meta.dump() + ":" +
                                head_path);
  fs::path dir = make_run_dir(g, run_id);

  // A pre-trained head is reused across seeds; otherwise each evaluation seed
  // trains its own probe/decoder on the frozen representations.
  std::unique_ptr<DecoderHead> fixed_head;
  if (!head_path.empty()) {
    json meta;
    Mlp net = load_mlp_checkpoint(head_path, &meta);
    if (meta.value("task", std::string()) != spec.task) {
      throw LoadError("head checkpoint task '" +
                      meta.value("task", std::string()) +
                      "' != eval task '" + spec.task + "'");
    }
    fixed_head = std::make_unique<DecoderHead>();
    fixed_head->task = task;
    fixed_head->net = std::move(net);
    fixed_head->d_repr = meta.value("d_repr", model.repr->d_repr());
    fixed_head->x_dim = meta.value("x_dim", 0);
    fixed_head->feat_mu = meta.value("feat_mu", std::vector<double>{});
    fixed_head->feat_isd = meta.value("feat_isd", std::vector<double>{});
    if (fixed_head->d_repr != model.repr->d_repr()) {
      throw LoadError("head/encoder representation width mismatch");
    }
  }

  // CNP + FSR without an explicit head: score the CNP's own jointly-trained
  // decoder (the Table-1 comparison), not a retrained head.
  const bool cnp_own_decoder =
      model.is_cnp && task == HeadTask::Fsr && !fixed_head;

  std::vector<MetricsRecord> records;
  for (std::uint64_t seed : spec.seeds) {
    DecoderHead trained;
    const DecoderHead* head = fixed_head.get();
    if (!head && !cnp_own_decoder) {
      HeadTrainConfig hc = head_config_for(task, cfg, seed, spec.noise_sigma);
      trained = train_head(task, *model.repr, *data.train, hc,
                           spec.context_count);
      head = &trained;
    }
    auto add = [&](int shots, const std::string& metric, double value) {
      MetricsRecord r;
      r.run_id = run_id;
      r.model = model.model_name;
      r.task = spec.task;
      r.shots = shots;
      r.noise_sigma = spec.noise_sigma;
      r.seed = seed;
      r.metric = metric;
      r.value = value;
      records.push_back(std::move(r));
    };
    switch (task) {
      case HeadTask::Fsr:
        for (int s : spec.shots) {
          add(s, "mse",
              cnp_own_decoder
                  ? evaluate_cnp_fsr(model.cnp, *data.test, s,
                                     spec.noise_sigma, seed)
                  : evaluate_fsr(*head, *model.repr, *data.test, s,
                                 spec.noise_sigma, seed));
        }
        break;
      case HeadTask::Fspi:
        for (int s : spec.shots) {
          add(s, "mse", evaluate_fspi(*head, *model.repr, *data.test, s,
                                      spec.noise_sigma, seed));
        }
        break;
      case HeadTask::Fsic:
        add(spec.context_count, "mse",
            evaluate_fsic(*head, *model.repr, *data.test, spec.context_count,
                          spec.noise_sigma, seed));
        break;
      case HeadTask::Fscc:
        add(spec.context_count, "accuracy",
            evaluate_fscc(*head, *model.repr, *data.test, spec.context_count,
                          spec.noise_sigma, seed));
        break;
    }
  }
  std::string metrics_path = (dir / "metrics.csv").string();
  append_metrics_csv(metrics_path, records);
  write_manifest(dir, {{"run_id", run_id},
                       {"command", "evaluate"},
                       {"encoder", encoder_path},
                       {"head", head_path},
                       {"config", cfg.to_json()},
                       {"eval", {{"task", spec.task},
                                 {"shots", spec.shots},
                                 {"seeds", spec.seeds},
                                 {"noise_sigma", spec.noise_sigma},
                                 {"context_count", spec.context_count}}},
                       {"artifacts", {{"metrics", metrics_path}}}});
  std::cout << summarize_metrics(records).dump(2) << "\n" << dir.string() << "\n";
  return 0;
}

int cmd_sweep(const GlobalOpts& g) {
  TrainConfig cfg = load_train_config(g);
  SweepGrid grid = parse_sweep_grid(load_config_or_manifest(g.config_path));
  Datasets data = build_datasets(cfg, g);
  std::string out_dir = resolve_out_root(g) + "/sweep_" +
                        hash_hex("ablation:" + cfg.to_json().dump());
  auto records = ablation_sweep(grid, cfg, *data.train, *data.test, out_dir);
  std::cout << summarize_metrics(records).dump(2) << "\n" << out_dir << "\n";
  return 0;
}

int cmd_noise_sweep(const GlobalOpts& g) {
  TrainConfig cfg = load_train_config(g);
  json j = load_config_or_manifest(g.config_path);
  SweepGrid grid = parse_sweep_grid(j);
  EvalSpec spec = parse_eval_spec(j);
  Datasets data = build_datasets(cfg, g);
  std::string out_dir = resolve_out_root(g) + "/noise_" +
                        hash_hex("noise:" + cfg.to_json().dump());
  auto records = noise_sweep(cfg, grid.sigma_values, grid.seeds, *data.train,
                             *data.test, out_dir, spec.context_count);
  std::cout << summarize_metrics(records).dump(2) << "\n" << out_dir << "\n";
  return 0;
}

int cmd_oracle_check(const GlobalOpts& g, int k_functions, double sigma,
                     int episodes) {
  DiscreteFamily family;
  if (k_functions == 2) {
    family = constant_family({0.0, 1.0}, sigma);
  } else if (k_functions == 3) {
    family = constant_family({-1.0, 0.0, 1.0}, sigma);
  } else {
    throw ConfigError("oracle-check: --k must be 2 or 3");
  }
  TrainConfig cfg = discrete_defaults(family);
  if (g.seed_set) cfg.seed = g.seed;
  DiscreteFamilySampler sampler(family);
  EncoderTrainResult res = train_encoder(sampler, cfg);
  OracleAgreementResult agr = oracle_agreement(
      res.encoder, family, cfg.n_max, episodes, cfg.temperature, cfg.seed);
  bool pass = agr.mean_tv < 0.1;
  std::cout << "K=" << k_functions << " sigma=" << sigma << " episodes="
            << episodes << "\nmean TV distance: " << agr.mean_tv
            << "\nmax TV distance:  " << agr.max_tv << "\n"
            << (pass ? "PASS" : "FAIL") << " (threshold 0.1)\n";
  return pass ? 0 : 1;
}

int cmd_grad_check(const GlobalOpts& g) {
  std::uint64_t seed = g.seed_set ? g.seed : 1;
  Rng rng = Rng::derive(seed, 99);
  bool ok = true;
  auto report = [&](const std::string& name, double err) {
    bool pass = err < 1e-4;
    ok = ok && pass;
    std::cout << name << ": worst rel error " << err
              << (pass ? "  PASS" : "  FAIL") << "\n";
  };

  {  // contrastive loss w.r.t. the projected representations
    const int k = 3, j = 2, d = 5;
    Matrix z(k * j, d);
    for (double& v : z.raw()) v = rng.normal();
    FcrlLossResult res = fcrl_loss(z, k, j, 0.07);
    std::vector<double> flat = z.raw();
    std::vector<double> analytic = res.dz.raw();
    auto loss_fn = [&](const std::vector<double>& p) {
      Matrix zz(k * j, d);
      zz.raw() = p;
      return fcrl_loss(zz, k, j, 0.07).loss;
    };
    report("fcrl_loss", grad_check(loss_fn, flat, analytic));
  }

  {  // Gaussian NLL through a small decoder MLP
    Mlp net = make_mlp({3, 8, 2}, rng);
    Matrix in(4, 3), y(4, 1);
    for (double& v : in.raw()) v = rng.normal();
    for (double& v : y.raw()) v = rng.normal();
    auto nll_of = [&](const Mlp& m) {
      Matrix raw = mlp_forward(m, in);
      Matrix mu(raw.rows(), 1), var(raw.rows(), 1);
      for (int r = 0; r < raw.rows(); ++r) {
        mu(r, 0) = raw(r, 0);
        var(r, 0) = softplus(raw(r, 1)) + kVarianceFloor;
      }
      return gaussian_nll(mu, var, y);
    };
    MlpCache cache;
    Matrix raw = mlp_forward(net, in, &cache);
    Matrix dout(raw.rows(), 2);
    for (int r = 0; r < raw.rows(); ++r) {
      double v = softplus(raw(r, 1)) + kVarianceFloor;
      double diff = raw(r, 0) - y(r, 0);
      dout(r, 0) = diff / v / raw.rows();
      double dvar = 0.5 * (1.0 / v - diff * diff / (v * v)) / raw.rows();
      double sig = 1.0 / (1.0 + std::exp(-raw(r, 1)));
      dout(r, 1) = dvar * sig;
    }
    Mlp grads = make_like_zero(net);
    mlp_backward(net, cache, dout, grads);
    std::vector<double> flat, analytic;
    net.flatten(flat);
    grads.flatten(analytic);
    auto loss_fn = [&](const std::vector<double>& p) {
      Mlp m = net;
      m.unflatten(p.data(), p.size());
      return nll_of(m);
    };
    report("gaussian_nll(decoder)", grad_check(loss_fn, flat, analytic));
  }

  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fcrl-lab: contrastive function-representation experiments"};
  app.require_subcommand(1);

  GlobalOpts g;
  std::string encoder_path, head_path, task_name = "fsr";
  int oracle_k = 2, oracle_episodes = 500;
  double oracle_sigma = 0.0;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* copt = cmd->add_option("--config", g.config_path, "config file or manifest.json");
    if (needs_config) copt->required();
    cmd->add_option("--data-dir", g.data_dir, "MNIST IDX directory");
    cmd->add_option("--out", g.out_root, "output root (default runs/, env FCRL_LAB_OUT)");
    cmd->add_option("--seed", g.seed, "override the config seed")
        ->each([&](const std::string&) { g.seed_set = true; });
    cmd->add_flag("--force", g.force, "overwrite an existing run directory");
    cmd->add_option("--threads", g.threads, "worker threads (training is single-owner)");
  };

  auto* c_enc = app.add_subcommand("train-encoder", "contrastive encoder training");
  add_common(c_enc, true);
  auto* c_cnp = app.add_subcommand("train-cnp", "CNP baseline training");
  add_common(c_cnp, true);
  auto* c_dec = app.add_subcommand("train-decoder", "decoder head on a frozen encoder");
  add_common(c_dec, true);
  c_dec->add_option("--encoder", encoder_path, "encoder checkpoint")->required();
  c_dec->add_option("--task", task_name, "fsr|fspi|fsic|fscc");
  auto* c_eval = app.add_subcommand("evaluate", "evaluate on the test split");
  add_common(c_eval, true);
  c_eval->add_option("--encoder", encoder_path, "encoder checkpoint")->required();
  c_eval->add_option("--head", head_path, "decoder checkpoint (trained inline when absent)");
  auto* c_sweep = app.add_subcommand("sweep", "ablation grid over (J, tau, critic)");
  add_common(c_sweep, true);
  auto* c_noise = app.add_subcommand("noise-sweep", "robustness across noise levels");
  add_common(c_noise, true);
  auto* c_oracle = app.add_subcommand("oracle-check", "Bayes-posterior agreement on toy families");
  add_common(c_oracle, false);
  c_oracle->add_option("--k", oracle_k, "family size (2 or 3)");
  c_oracle->add_option("--sigma", oracle_sigma, "observation noise");
  c_oracle->add_option("--episodes", oracle_episodes, "held-out episodes");
  auto* c_grad = app.add_subcommand("grad-check", "finite-difference gradient checks");
  add_common(c_grad, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_enc->parsed()) return cmd_train_encoder(g);
    if (c_cnp->parsed()) return cmd_train_cnp(g);
    if (c_dec->parsed()) return cmd_train_decoder(g, encoder_path, task_name);
    if (c_eval->parsed()) return cmd_evaluate(g, encoder_path, head_path);
    if (c_sweep->parsed()) return cmd_sweep(g);
    if (c_noise->parsed()) return cmd_noise_sweep(g);
    if (c_oracle->parsed())
      return cmd_oracle_check(g, oracle_k, oracle_sigma, oracle_episodes);
    if (c_grad->parsed()) return cmd_grad_check(g);
  } catch (const ConfigError& e) {
    std::cerr << json{{"error", "config"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  } catch (const LoadError& e) {
    std::cerr << json{{"error", "artifact"}, {"message", e.what()}}.dump() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << json{{"error", "numerical"}, {"message", e.what()}}.dump() << "\n";
    return 4;
  }
  return 0;
}
