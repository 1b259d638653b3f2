#include "fcrl/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "fcrl/errors.hpp"

namespace fcrl {

void EvalSpec::validate() const {
  if (task != "fsr" && task != "fspi" && task != "fsic" && task != "fscc") {
    throw ConfigError("eval: unknown task '" + task + "'");
  }
  if (shots.empty()) throw ConfigError("eval: shots list is empty");
  for (int s : shots) {
    if (s < 1) throw ConfigError("eval: shots must be >= 1");
  }
  if (seeds.empty()) throw ConfigError("eval: seeds list is empty");
  if (noise_sigma < 0.0) throw ConfigError("eval: noise_sigma must be >= 0");
  if (context_count < 2) throw ConfigError("eval: context_count must be >= 2");
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Scalar literal -> json: int, then double, then bool, else string.
nlohmann::json parse_scalar(const std::string& tok) {
  if (tok == "true") return true;
  if (tok == "false") return false;
  try {
    std::size_t used = 0;
    long long v = std::stoll(tok, &used);
    if (used == tok.size()) return v;
  } catch (...) {}
  try {
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used == tok.size()) return v;
  } catch (...) {}
  return tok;
}

nlohmann::json parse_value(const std::string& raw) {
  if (raw.find(',') == std::string::npos) return parse_scalar(raw);
  nlohmann::json arr = nlohmann::json::array();
  std::stringstream ss(raw);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    arr.push_back(parse_scalar(tok));
  }
  return arr;
}

nlohmann::json parse_kv_format(std::istream& in, const std::string& path) {
  nlohmann::json out = nlohmann::json::object();
  std::string section;  // "" or "train" -> top level
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(path + ":" + std::to_string(lineno) +
                          ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section == "train") section = "";
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": empty key or value");
    }
    nlohmann::json& target = section.empty() ? out : out[section];
    if (target.contains(key)) {
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": duplicate key '" + key + "'");
    }
    target[key] = parse_value(value);
  }
  return out;
}

std::vector<std::uint64_t> to_u64_list(const nlohmann::json& v,
                                       const std::string& field) {
  std::vector<std::uint64_t> out;
  try {
    if (v.is_array()) {
      for (const auto& e : v) out.push_back(e.get<std::uint64_t>());
    } else {
      out.push_back(v.get<std::uint64_t>());
    }
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config: field '" + field + "' must hold integers");
  }
  return out;
}

std::vector<double> to_double_list(const nlohmann::json& v,
                                   const std::string& field) {
  std::vector<double> out;
  try {
    if (v.is_array()) {
      for (const auto& e : v) out.push_back(e.get<double>());
    } else {
      out.push_back(v.get<double>());
    }
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config: field '" + field + "' must hold numbers");
  }
  return out;
}

}  // namespace

nlohmann::json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open config file: " + path);
  // peek past whitespace to pick the encoding
  int c;
  while ((c = in.peek()) != EOF && std::isspace(c)) in.get();
  if (c == '{') {
    try {
      nlohmann::json j;
      in >> j;
      return j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path + ": invalid JSON: " + e.what());
    }
  }
  return parse_kv_format(in, path);
}

TrainConfig parse_train_config(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "family", "j_subsets", "temperature", "n_min", "n_max", "batch_size",
      "epochs", "adam_beta1", "adam_beta2", "adam_eps", "lr", "schedule",
      "seed", "critic", "critic_batch_norm", "d_repr", "noise_sigma",
      "n_train_functions", "n_val_functions", "n_test_functions"};
  nlohmann::json flat = nlohmann::json::object();
  for (const auto& [key, value] : j.items()) {
    if (value.is_object()) continue;  // eval / sweep sections
    if (!known.count(key)) {
      throw ConfigError("config: unknown key '" + key + "'");
    }
    flat[key] = value;
  }
  std::string family = flat.value("family", std::string("sinusoid"));
  TrainConfig base = family == "mnist" ? TrainConfig::mnist_defaults()
                                       : TrainConfig::sinusoid_defaults();
  base.family = family;
  nlohmann::json merged = base.to_json();
  for (const auto& [key, value] : flat.items()) merged[key] = value;
  TrainConfig cfg;
  try {
    cfg = TrainConfig::from_json(merged);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: bad field type: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

EvalSpec parse_eval_spec(const nlohmann::json& j) {
  EvalSpec spec;
  if (!j.contains("eval")) {
    spec.validate();
    return spec;
  }
  const nlohmann::json& e = j.at("eval");
  for (const auto& [key, value] : e.items()) {
    if (key == "task") {
      spec.task = value.get<std::string>();
    } else if (key == "shots") {
      spec.shots.clear();
      for (std::uint64_t s : to_u64_list(value, "eval.shots")) {
        spec.shots.push_back(static_cast<int>(s));
      }
    } else if (key == "seeds") {
      spec.seeds = to_u64_list(value, "eval.seeds");
    } else if (key == "noise_sigma") {
      spec.noise_sigma = value.get<double>();
    } else if (key == "context_count") {
      spec.context_count = value.get<int>();
    } else {
      throw ConfigError("config: unknown key 'eval." + key + "'");
    }
  }
  spec.validate();
  return spec;
}

SweepGrid parse_sweep_grid(const nlohmann::json& j) {
  SweepGrid grid;
  grid.j_values = {2};
  grid.tau_values = {0.07};
  grid.critics = {CriticKind::Nonlinear};
  grid.sigma_values = {0.0, 0.05, 0.1, 0.2};
  grid.seeds = {1};
  if (!j.contains("sweep")) return grid;
  const nlohmann::json& s = j.at("sweep");
  for (const auto& [key, value] : s.items()) {
    if (key == "j") {
      grid.j_values.clear();
      for (std::uint64_t v : to_u64_list(value, "sweep.j")) {
        grid.j_values.push_back(static_cast<int>(v));
      }
    } else if (key == "tau") {
      grid.tau_values = to_double_list(value, "sweep.tau");
    } else if (key == "critic") {
      grid.critics.clear();
      if (value.is_array()) {
        for (const auto& v : value) grid.critics.push_back(critic_from_string(v));
      } else {
        grid.critics.push_back(critic_from_string(value));
      }
    } else if (key == "sigma") {
      grid.sigma_values = to_double_list(value, "sweep.sigma");
    } else if (key == "seeds") {
      grid.seeds = to_u64_list(value, "sweep.seeds");
    } else {
      throw ConfigError("config: unknown key 'sweep." + key + "'");
    }
  }
  if (grid.j_values.empty() || grid.tau_values.empty() ||
      grid.critics.empty() || grid.sigma_values.empty() || grid.seeds.empty()) {
    throw ConfigError("config: empty sweep axis");
  }
  return grid;
}

}  // namespace fcrl
