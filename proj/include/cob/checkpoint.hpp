#pragma once

#include <string>

#include "cob/model.hpp"

namespace cob {

/// Flat binary checkpoint: a dims header (ModelConfig) followed by named
/// matrices with shape headers and raw 64-bit payloads. Round-trips are
/// bit-exact.
void save_checkpoint(const std::string& path, const Model& model);
Model load_checkpoint(const std::string& path);

}  // namespace cob
