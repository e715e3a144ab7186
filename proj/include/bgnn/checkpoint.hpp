#pragma once

#include <string>

#include "bgnn/model.hpp"

namespace bgnn::model {

/// Versioned binary container: magic, format version, utility mode, M, T,
/// then per-network layer dimensions and row-major fp64 weights/biases,
/// little-endian. Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const BgnnParams& params);
BgnnParams load_checkpoint(const std::string& path);

} // namespace bgnn::model
