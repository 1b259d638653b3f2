#pragma once

#include <string>
#include <vector>

#include "fcrl/analysis.hpp"
#include "fcrl/contrastive.hpp"

#include "json.hpp"

namespace fcrl {

// What to measure after training. Parsed from the [eval] section.
struct EvalSpec {
  std::string task = "fsr";  // fsr | fspi | fsic | fscc
  std::vector<int> shots = {5, 20};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  double noise_sigma = 0.0;
  int context_count = 200;  // fsic/fscc context size
  void validate() const;
};

// Reads a config file into a json object. Two encodings are accepted:
//  * JSON (first non-space byte '{'), or
//  * line-oriented `key = value` with optional [section] headers. Values are
//    scalars or comma-separated lists; [train] keys land at the top level,
//    other sections become nested objects. `#` starts a comment.
// Malformed lines raise ConfigError naming the line number.
nlohmann::json load_config_file(const std::string& path);

// Top-level keys -> TrainConfig. Family defaults (sinusoid/mnist tables) are
// applied first, then the explicit keys. Unknown keys are errors.
TrainConfig parse_train_config(const nlohmann::json& j);

// "eval" section (or defaults when absent).
EvalSpec parse_eval_spec(const nlohmann::json& j);

// "sweep" section: axes j, tau, critic, sigma, seeds.
SweepGrid parse_sweep_grid(const nlohmann::json& j);

}  // namespace fcrl
