#pragma once

#include <string>

#include "fcrl/cnp.hpp"
#include "fcrl/encoder.hpp"

#include "json.hpp"

namespace fcrl {

// Self-describing binary checkpoints: a magic tag, a JSON metadata blob
// (model kind, architecture specs, critic, config hash, seed) and raw
// little-endian doubles. Round-trips bit-exactly.

void save_encoder_checkpoint(const std::string& path, const EncoderParams& enc,
                             const nlohmann::json& meta);
EncoderParams load_encoder_checkpoint(const std::string& path,
                                      nlohmann::json* meta_out = nullptr);

void save_cnp_checkpoint(const std::string& path, const CnpParams& cnp,
                         const nlohmann::json& meta);
CnpParams load_cnp_checkpoint(const std::string& path,
                              nlohmann::json* meta_out = nullptr);

// Generic single-MLP checkpoint (decoder heads).
void save_mlp_checkpoint(const std::string& path, const Mlp& net,
                         const nlohmann::json& meta);
Mlp load_mlp_checkpoint(const std::string& path,
                        nlohmann::json* meta_out = nullptr);

// Reads just the metadata blob (any checkpoint kind).
nlohmann::json read_checkpoint_meta(const std::string& path);

}  // namespace fcrl
