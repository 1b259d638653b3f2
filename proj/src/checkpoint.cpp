#include "fcrl/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace fcrl {

namespace {

constexpr char kMagic[8] = {'F', 'C', 'R', 'L', 'C', 'K', 'P', '1'};

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw LoadError(path + ": truncated checkpoint");
  }
  return v;
}

void write_doubles(std::ofstream& out, const std::vector<double>& v) {
  write_u32(out, static_cast<std::uint32_t>(v.size()));
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_doubles(std::ifstream& in, const std::string& path) {
  std::uint32_t n = read_u32(in, path);
  std::vector<double> v(n);
  if (!in.read(reinterpret_cast<char*>(v.data()),
               static_cast<std::streamsize>(n * sizeof(double)))) {
    throw LoadError(path + ": truncated parameter block");
  }
  return v;
}

void write_mlp(std::ofstream& out, const Mlp& net) {
  write_u32(out, static_cast<std::uint32_t>(net.layers.size()));
  for (const DenseLayer& l : net.layers) {
    write_u32(out, static_cast<std::uint32_t>(l.out_dim()));
    write_u32(out, static_cast<std::uint32_t>(l.in_dim()));
    write_u32(out, l.batch_norm ? 1u : 0u);
    write_doubles(out, l.w.raw());
    write_doubles(out, l.b);
    if (l.batch_norm) {
      write_doubles(out, l.gamma);
      write_doubles(out, l.beta);
      write_doubles(out, l.run_mean);
      write_doubles(out, l.run_var);
    }
  }
}

Mlp read_mlp(std::ifstream& in, const std::string& path) {
  Mlp net;
  std::uint32_t n_layers = read_u32(in, path);
  for (std::uint32_t k = 0; k < n_layers; ++k) {
    DenseLayer l;
    std::uint32_t out_d = read_u32(in, path);
    std::uint32_t in_d = read_u32(in, path);
    l.batch_norm = read_u32(in, path) != 0;
    l.w = Matrix(static_cast<int>(out_d), static_cast<int>(in_d));
    std::vector<double> w = read_doubles(in, path);
    if (w.size() != l.w.size()) {
      throw LoadError(path + ": weight block size mismatch");
    }
    std::copy(w.begin(), w.end(), l.w.data());
    l.b = read_doubles(in, path);
    if (l.b.size() != out_d) throw LoadError(path + ": bias block size mismatch");
    if (l.batch_norm) {
      l.gamma = read_doubles(in, path);
      l.beta = read_doubles(in, path);
      l.run_mean = read_doubles(in, path);
      l.run_var = read_doubles(in, path);
    }
    net.layers.push_back(std::move(l));
  }
  if (net.layers.empty()) throw LoadError(path + ": checkpoint has no layers");
  return net;
}

std::ofstream open_out(const std::string& path, const nlohmann::json& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof kMagic);
  std::string m = meta.dump();
  write_u32(out, static_cast<std::uint32_t>(m.size()));
  out.write(m.data(), static_cast<std::streamsize>(m.size()));
  return out;
}

std::ifstream open_in(const std::string& path, nlohmann::json* meta_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint: " + path);
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, 8) != 0) {
    throw LoadError(path + ": not a checkpoint file (bad magic)");
  }
  std::uint32_t mlen = read_u32(in, path);
  std::string m(mlen, '\0');
  if (!in.read(m.data(), mlen)) throw LoadError(path + ": truncated metadata");
  if (meta_out) *meta_out = nlohmann::json::parse(m);
  return in;
}

}  // namespace

void save_encoder_checkpoint(const std::string& path, const EncoderParams& enc,
                             const nlohmann::json& meta) {
  nlohmann::json m = meta;
  m["model_kind"] = "fcrl_encoder";
  m["arch_h"] = enc.h.arch_spec();
  m["critic"] = to_string(enc.critic);
  m["d_repr"] = enc.d_repr;
  if (enc.rho) m["arch_rho"] = enc.rho->arch_spec();
  std::ofstream out = open_out(path, m);
  write_mlp(out, enc.h);
  write_u32(out, enc.rho ? 1u : 0u);
  if (enc.rho) write_mlp(out, *enc.rho);
  if (!out) throw LoadError("write failed: " + path);
}

EncoderParams load_encoder_checkpoint(const std::string& path,
                                      nlohmann::json* meta_out) {
  nlohmann::json meta;
  std::ifstream in = open_in(path, &meta);
  if (meta.value("model_kind", "") != "fcrl_encoder") {
    throw LoadError(path + ": expected fcrl_encoder checkpoint, found '" +
                    meta.value("model_kind", "?") + "'");
  }
  EncoderParams enc;
  enc.h = read_mlp(in, path);
  enc.d_repr = meta.at("d_repr").get<int>();
  enc.critic = critic_from_string(meta.at("critic").get<std::string>());
  if (read_u32(in, path) != 0) enc.rho = read_mlp(in, path);
  if (meta_out) *meta_out = meta;
  return enc;
}

void save_cnp_checkpoint(const std::string& path, const CnpParams& cnp,
                         const nlohmann::json& meta) {
  nlohmann::json m = meta;
  m["model_kind"] = "cnp";
  m["arch_encoder"] = cnp.encoder.arch_spec();
  m["arch_decoder"] = cnp.decoder.arch_spec();
  m["d_repr"] = cnp.d_repr;
  std::ofstream out = open_out(path, m);
  write_mlp(out, cnp.encoder);
  write_mlp(out, cnp.decoder);
  if (!out) throw LoadError("write failed: " + path);
}

CnpParams load_cnp_checkpoint(const std::string& path,
                              nlohmann::json* meta_out) {
  nlohmann::json meta;
  std::ifstream in = open_in(path, &meta);
  if (meta.value("model_kind", "") != "cnp") {
    throw LoadError(path + ": expected cnp checkpoint, found '" +
                    meta.value("model_kind", "?") + "'");
  }
  CnpParams cnp;
  cnp.encoder = read_mlp(in, path);
  cnp.decoder = read_mlp(in, path);
  cnp.d_repr = meta.at("d_repr").get<int>();
  if (meta_out) *meta_out = meta;
  return cnp;
}

void save_mlp_checkpoint(const std::string& path, const Mlp& net,
                         const nlohmann::json& meta) {
  nlohmann::json m = meta;
  if (!m.contains("model_kind")) m["model_kind"] = "mlp";
  m["arch"] = net.arch_spec();
  std::ofstream out = open_out(path, m);
  write_mlp(out, net);
  if (!out) throw LoadError("write failed: " + path);
}

Mlp load_mlp_checkpoint(const std::string& path, nlohmann::json* meta_out) {
  nlohmann::json meta;
  std::ifstream in = open_in(path, &meta);
  Mlp net = read_mlp(in, path);
  if (meta_out) *meta_out = meta;
  return net;
}

nlohmann::json read_checkpoint_meta(const std::string& path) {
  nlohmann::json meta;
  open_in(path, &meta);
  return meta;
}

}  // namespace fcrl
