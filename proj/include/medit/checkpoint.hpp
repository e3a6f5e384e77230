#pragma once

#include <string>

#include "medit/model.hpp"

namespace medit {

// Checkpoint: magic bytes, a JSON header {version:"mdt-1", config, params:[{name,rows,cols}],
// config_hash?}, then the raw little-endian doubles of each parameter in
// header order (row-major). Round trips are bit-exact.
void save_bundle(const ModelBundle& bundle, const std::string& path,
                 const std::string& config_hash = "");

ModelBundle load_bundle(const std::string& path);

// Loads and additionally checks the stored config against `expected`.
ModelBundle load_bundle(const std::string& path, const ModelConfig& expected);

// The config_hash recorded in a checkpoint ("" if none).
std::string checkpoint_config_hash(const std::string& path);

}  // namespace medit
