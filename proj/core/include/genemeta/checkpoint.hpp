#pragma once

#include <filesystem>
#include <iosfwd>

#include "genemeta/models.hpp"

namespace genemeta {

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
};

// Line-oriented text container. Values are written as C99 hex floats so a
// save/load round trip is bit-exact:
//
//   genemeta-checkpoint 1
//   architecture mlp
//   input_dim 50
//   ...
//   tensors 5
//   tensor hidden0.weight 2 128 50
//   0x1.8p-3 -0x1.2p-4 ...
void save_checkpoint(std::ostream& out, const ModelConfig& config, const ModelParams& params);
void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config,
                     const ModelParams& params);
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace genemeta
